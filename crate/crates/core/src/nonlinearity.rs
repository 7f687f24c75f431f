//! Pointwise nonlinear source terms for real fields.
//!
//! For real `u` the complex expressions reduce as `ℜu = u` and `|u|² = u²`, so
//! `2uℜu + |u|² = 3u²`. Every evaluator here is local; dealiasing, when wanted,
//! is applied by the time steppers after evaluation.

use crate::params::{DerivedConstants, PhysicalParams};
use crate::spectral::Field;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NonlinearKind {
    /// `λe^{−nHt}u³ + 3λr₀e^{−nHt/2}u²`, the source of the shifted Cauchy problem.
    HShifted,
    /// `λ(φ³ + 3r₀φ² + 2r₀²φ)`, the potential gradient about the broken vacuum.
    JShifted,
    /// `λφ³`, the cubic term of the unshifted field equation.
    CubicUnshifted,
    /// `±e^{−n(p−1)Ht/2}·(|u|^{p−1}u or |u|^p)`, see [`GaugeSign`].
    GaugeVariant(GaugeSign),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GaugeSign {
    /// `+λe^{−n(p−1)Ht/2}|u|^{p−1}u`.
    Invariant,
    /// `−e^{−n(p−1)Ht/2}|u|^p`.
    BlowUp,
}

fn check_finite(f: &Field) -> Result<()> {
    match f.samples().iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

fn r0_or_zero(derived: &DerivedConstants) -> f64 {
    derived.r0_opt().unwrap_or(0.0)
}

/// Pointwise `h(u,t)` for a real field.
pub fn eval_h(u: &Field, t: f64, params: &PhysicalParams, derived: &DerivedConstants) -> Result<Field> {
    check_finite(u)?;
    Ok(h_unchecked(u, t, params, derived))
}

pub(crate) fn h_unchecked(u: &Field, t: f64, params: &PhysicalParams, derived: &DerivedConstants) -> Field {
    let nh = params.n as f64 * params.hubble;
    let a = params.lambda * (-nh * t).exp();
    let b = 3.0 * params.lambda * r0_or_zero(derived) * (-0.5 * nh * t).exp();
    u.map(|v| v * v * (a * v + b))
}

/// Pointwise `J(φ) = λ(φ³ + 3r₀φ² + 2r₀²φ)`.
pub fn eval_j(phi: &Field, params: &PhysicalParams, derived: &DerivedConstants) -> Result<Field> {
    check_finite(phi)?;
    Ok(j_unchecked(phi, params, derived))
}

pub(crate) fn j_unchecked(phi: &Field, params: &PhysicalParams, derived: &DerivedConstants) -> Field {
    let l = params.lambda;
    let r0 = r0_or_zero(derived);
    phi.map(|v| l * v * (v * v + 3.0 * r0 * v + 2.0 * r0 * r0))
}

/// Pointwise `λφ³`.
pub fn eval_cubic(phi: &Field, params: &PhysicalParams) -> Result<Field> {
    check_finite(phi)?;
    let l = params.lambda;
    Ok(phi.map(|v| l * v * v * v))
}

/// Max-norm of `λ(φ+r₀)³ − (mc/ħ)²(φ+r₀) − J(φ)`, which vanishes identically.
pub fn shift_identity_residual(phi: &Field, params: &PhysicalParams, derived: &DerivedConstants) -> Result<f64> {
    let r0 = derived.r0()?;
    let j = eval_j(phi, params, derived)?;
    let (l, m2) = (params.lambda, params.mass_term());
    Ok(phi
        .samples()
        .iter()
        .zip(j.samples())
        .map(|(&v, &jv)| {
            let s = v + r0;
            (l * s * s * s - m2 * s - jv).abs()
        })
        .fold(0.0, f64::max))
}

/// Gauge-variant source with weight `e^{−n(p−1)Ht/2}`.
pub fn eval_gauge_variant(u: &Field, t: f64, params: &PhysicalParams, sign: GaugeSign) -> Result<Field> {
    check_finite(u)?;
    Ok(gauge_unchecked(u, t, params, sign))
}

pub(crate) fn gauge_unchecked(u: &Field, t: f64, params: &PhysicalParams, sign: GaugeSign) -> Field {
    let p = params.p;
    let w = (-0.5 * params.n as f64 * (p - 1.0) * params.hubble * t).exp();
    match sign {
        GaugeSign::Invariant => {
            let a = params.lambda * w;
            u.map(|v| a * v.abs().powf(p - 1.0) * v)
        }
        GaugeSign::BlowUp => u.map(|v| -w * v.abs().powf(p)),
    }
}

/// Dispatches on [`NonlinearKind`]; `t` is ignored by the time-independent kinds.
pub fn eval(
    kind: NonlinearKind,
    u: &Field,
    t: f64,
    params: &PhysicalParams,
    derived: &DerivedConstants,
) -> Result<Field> {
    match kind {
        NonlinearKind::HShifted => eval_h(u, t, params, derived),
        NonlinearKind::JShifted => eval_j(u, params, derived),
        NonlinearKind::CubicUnshifted => eval_cubic(u, params),
        NonlinearKind::GaugeVariant(sign) => eval_gauge_variant(u, t, params, sign),
    }
}
