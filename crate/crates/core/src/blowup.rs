//! Scalar reduction of the gauge-variant problem to `w(t) = ∫u dx`, finite-time
//! blow-up detection, comparison envelopes, and the lifespan lower bound for `H < 0`.
//!
//! With support radius `r(t) = r₀ + c(1 − e^{−Ht})/H`, Hölder gives `h ≥ b(t)w^p`
//! where `b(t) = e^{−n(p−1)Ht/2}(ωₙr(t)ⁿ)^{1−p}`, and `w` is compared with the
//! solution of `w'' = c²(−Qw + b(t)w^p)`.

use crate::ode::{Dop853, Tolerance};
use crate::params::{DerivedConstants, PhysicalParams};
use crate::quadrature::weights;
use crate::{Error, Result};

/// Volume of the unit ball in `ℝⁿ`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// `r(t) = r₀ + c(1 − e^{−Ht})/H`, and `r₀ + ct` when `H = 0`.
pub fn support_radius(t: f64, r_support0: f64, params: &PhysicalParams) -> f64 {
    let h = params.hubble;
    if h == 0.0 {
        r_support0 + params.c * t
    } else {
        r_support0 - params.c * (-h * t).exp_m1() / h
    }
}

/// Bound on `r(t)`: `r₀ + c/H` for all `t ≥ 0` when `H > 0`, `2ce^{−Ht}/|H|` for large `t` when `H < 0`.
pub fn support_cap(t: f64, r_support0: f64, params: &PhysicalParams) -> Option<f64> {
    let h = params.hubble;
    if h > 0.0 {
        Some(r_support0 + params.c / h)
    } else if h < 0.0 {
        Some(2.0 * params.c * (-h * t).exp() / -h)
    } else {
        None
    }
}

/// `b(t) = e^{−n(p−1)Ht/2}(ωₙ r(t)ⁿ)^{−(p−1)}`.
pub fn exact_b(t: f64, r_support0: f64, params: &PhysicalParams) -> f64 {
    let n = params.n as f64;
    let pm1 = params.p - 1.0;
    let vol = unit_ball_volume(params.n) * support_radius(t, r_support0, params).powf(n);
    (-0.5 * n * pm1 * params.hubble * t).exp() * vol.powf(-pm1)
}

/// The constant `B` in `b(t) ≥ Be^{−n(p−1)|H|t/2}`; undefined for `H = 0`.
pub fn floor_constant(r_support0: f64, params: &PhysicalParams) -> Result<f64> {
    let h = params.hubble;
    let n = params.n as f64;
    let pm1 = params.p - 1.0;
    let radius = if h > 0.0 {
        r_support0 + params.c / h
    } else if h < 0.0 {
        2.0 * params.c / -h
    } else {
        return Err(Error::Hypothesis("the b floor needs H != 0".into()));
    };
    Ok(unit_ball_volume(params.n).powf(-pm1) * radius.powf(-n * pm1))
}

/// `Be^{−n(p−1)|H|t/2}`.
pub fn floor_b(t: f64, big_b: f64, params: &PhysicalParams) -> f64 {
    big_b * (-0.5 * params.n as f64 * (params.p - 1.0) * params.hubble.abs() * t).exp()
}

/// `w(t) = cosh(cMt)w₀ + sinh(cMt)/(cM)·w₁ + c²∫₀ᵗ sinh(cM(t−s))/(cM)·h(s)ds`.
///
/// `forcing`, when given, holds samples of `h` on `j·dt` covering `[0,t]` with `t` a node;
/// the integral is evaluated by composite Simpson.
pub fn w_closed_form(t: f64, w0: f64, w1: f64, big_m: f64, c: f64, forcing: Option<(&[f64], f64)>) -> Result<f64> {
    if !(big_m >= 0.0) {
        return Err(Error::InvalidParameter(format!("need M >= 0, got {big_m}")));
    }
    let cm = c * big_m;
    let sinhc = |x: f64| if cm == 0.0 { x } else { (cm * x).sinh() / cm };
    let mut w = (cm * t).cosh() * w0 + sinhc(t) * w1;
    if let Some((h, dt)) = forcing {
        let j = (t / dt).round();
        if (j * dt - t).abs() > 1e-9 * (1.0 + t) || j as usize >= h.len() {
            return Err(Error::OutOfRange {
                t,
                last: (h.len().max(1) - 1) as f64 * dt,
            });
        }
        let j = j as usize;
        let wts = weights(j + 1, dt);
        let integral: f64 = (0..=j).map(|i| wts[i] * sinhc(t - i as f64 * dt) * h[i]).sum();
        w += c * c * integral;
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BModel {
    /// `b(t)` from the support radius.
    Exact,
    /// The exponential floor `Be^{−n(p−1)|H|t/2}`.
    Floor,
    /// No nonlinearity.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupOptions {
    pub tol: f64,
    /// `|w|` above which the run is treated as diverged.
    pub threshold: f64,
    pub t_max: f64,
    /// Radius of a ball containing the initial support.
    pub r_support0: f64,
    /// Reporting parameter for the final comparison exponent `1 + ε(p−1)/2`.
    pub epsilon: f64,
}

impl Default for BlowupOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            threshold: 1e12,
            t_max: 100.0,
            r_support0: 1.0,
            epsilon: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeCheck {
    pub bound: &'static str,
    pub passed: bool,
    /// Smallest relative slack `(lhs − rhs)/|rhs|` over the checked samples.
    pub margin: f64,
    /// Samples actually checked.
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WTrajectory {
    pub tgrid: Vec<f64>,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
    pub blowup_time: Option<f64>,
    pub envelope_checks: Vec<EnvelopeCheck>,
    /// Start of the window where the large-time conditions on `b` hold.
    pub t_star: f64,
    pub big_m: f64,
    pub big_b: Option<f64>,
    pub big_m1: Option<f64>,
    /// `1 + ε(p−1)/2`, the exponent of the final first-order comparison.
    pub comparison_exponent: f64,
}

impl WTrajectory {
    pub fn all_passed(&self) -> bool {
        self.envelope_checks.iter().all(|c| c.passed)
    }
}

/// Raw adaptive run with divergence detection. `delta` is the exponent in the
/// asymptotic law `w' ∝ w^{1+δ}`, used to extrapolate the remaining time `w/(δw')`.
fn run_to_blowup<const D: usize, F>(
    mut f: F,
    y0: [f64; D],
    delta: f64,
    opts: &BlowupOptions,
) -> Result<(Vec<f64>, Vec<[f64; D]>, Option<f64>)>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
{
    let mut solver = Dop853::new(0.0, y0, Tolerance::both(opts.tol));
    let mut ts = vec![0.0];
    let mut ys = vec![y0];
    while solver.t() < opts.t_max {
        solver.step(&mut f, opts.t_max)?;
        let (t, y) = (solver.t(), *solver.y());
        ts.push(t);
        ys.push(y);
        if y[0].abs() > opts.threshold {
            let slope = f(t, &y)[0];
            return Ok((ts, ys, Some(t + y[0] / (delta * slope))));
        }
    }
    Ok((ts, ys, None))
}

/// Blow-up time of `w' = κw^{1+δ}`, `w(0) = w₀`; the exact value is `1/(δκw₀^δ)`.
pub fn separable_blowup_time(kappa: f64, delta: f64, w0: f64, opts: &BlowupOptions) -> Result<Option<f64>> {
    if !(kappa > 0.0 && delta > 0.0 && w0 > 0.0) {
        return Err(Error::InvalidParameter("need κ, δ, w₀ > 0".into()));
    }
    let (_, _, t) = run_to_blowup(|_, y: &[f64; 1]| [kappa * y[0].powf(1.0 + delta)], [w0], delta, opts)?;
    Ok(t)
}

/// First grid time beyond which `r(t) ≤ cap(t)` and `b'(t) ≤ 0` hold at every later grid point.
pub fn large_time_threshold(r_support0: f64, params: &PhysicalParams, horizon: f64, samples: usize) -> f64 {
    let dt = horizon / samples as f64;
    let ok = |t: f64| {
        let r = support_radius(t, r_support0, params);
        let cap_ok = support_cap(t, r_support0, params).is_none_or(|cap| r <= cap * (1.0 + 1e-14));
        let slope = exact_b(t + 1e-4 * dt, r_support0, params) - exact_b(t - 1e-4 * dt, r_support0, params);
        cap_ok && (t == 0.0 || slope <= 0.0)
    };
    let mut t_star = 0.0;
    for j in 0..=samples {
        let t = j as f64 * dt;
        if !ok(t) {
            t_star = t + dt;
        }
    }
    t_star
}

fn check(bound: &'static str, pairs: impl Iterator<Item = (f64, f64)>, rel: f64) -> EnvelopeCheck {
    let mut margin = f64::INFINITY;
    let mut samples = 0;
    for (lhs, rhs) in pairs {
        margin = margin.min((lhs - rhs) / rhs.abs().max(f64::MIN_POSITIVE));
        samples += 1;
    }
    EnvelopeCheck {
        bound,
        passed: margin >= -rel,
        margin,
        samples,
    }
}

/// Integrates `w'' = c²(−Qw + b(t)w^p)` from `(w₀, w₁)` and checks the comparison envelopes.
pub fn integrate_w(
    w0: f64,
    w1: f64,
    params: &PhysicalParams,
    derived: &DerivedConstants,
    model: BModel,
    opts: &BlowupOptions,
) -> Result<WTrajectory> {
    let q = derived.q;
    if q > 0.0 {
        return Err(Error::Hypothesis(format!("blow-up reduction needs Q <= 0, got {q}")));
    }
    let c = params.c;
    let p = params.p;
    let big_m = (-q).sqrt();
    if !(w0 >= 0.0 && w1 > 0.0 && w1 >= c * big_m * w0 * (1.0 - 1e-15)) {
        return Err(Error::Hypothesis(format!(
            "need w0 >= 0, w1 > 0 and w1 >= cM·w0, got w0 = {w0}, w1 = {w1}, cM = {}",
            c * big_m
        )));
    }
    let critical = params.n as f64 * params.hubble.abs() / (2.0 * c);
    if (big_m - critical).abs() <= 1e-14 * big_m.max(1.0) && w0 <= 0.0 {
        return Err(Error::Hypothesis("M = n|H|/2c requires w0 > 0".into()));
    }
    let big_b = floor_constant(opts.r_support0, params).ok();
    if model == BModel::Floor && big_b.is_none() {
        return Err(Error::Hypothesis("the floor model needs H != 0".into()));
    }
    let r0 = opts.r_support0;
    let b = |t: f64| match model {
        BModel::Exact => exact_b(t, r0, params),
        BModel::Floor => floor_b(t, big_b.unwrap_or(0.0), params),
        BModel::Zero => 0.0,
    };
    let rhs = |t: f64, y: &[f64; 2]| [y[1], c * c * (-q * y[0] + b(t) * y[0].abs().powf(p))];
    let (tgrid, ys, blowup_time) = run_to_blowup(rhs, [w0, w1], 0.5 * (p - 1.0), opts)?;
    let w: Vec<f64> = ys.iter().map(|y| y[0]).collect();
    let dw: Vec<f64> = ys.iter().map(|y| y[1]).collect();
    let t_star = if params.hubble < 0.0 {
        large_time_threshold(r0, params, opts.t_max.min(tgrid.last().copied().unwrap_or(0.0)).max(1.0), 4000)
    } else {
        0.0
    };
    let cm = c * big_m;
    let mut checks = vec![check(
        "w_exponential",
        tgrid.iter().zip(&w).map(|(&t, &wv)| (wv, w0 * (cm * t).exp())),
        1e-9,
    )];
    let mut big_m1 = None;
    if let Some(bb) = big_b.filter(|_| model != BModel::Zero) {
        checks.push(check(
            "b_floor",
            tgrid
                .iter()
                .filter(|&&t| t >= t_star)
                .map(|&t| (exact_b(t, r0, params), floor_b(t, bb, params))),
            1e-12,
        ));
        let m1 = (big_m * big_m + bb * w0.powf(p - 1.0) / (p + 1.0)).sqrt();
        big_m1 = Some(m1);
        // t₁: from here on w' ≥ cM₁w at every sample
        let mut start = tgrid.len();
        for i in (0..tgrid.len()).rev() {
            if dw[i] >= c * m1 * w[i] && tgrid[i] >= t_star {
                start = i;
            } else {
                break;
            }
        }
        if start < tgrid.len() {
            let (t1, w1s) = (tgrid[start], w[start]);
            checks.push(check(
                "w_secondary_growth",
                (start..tgrid.len()).map(|i| (w[i], w1s * (c * m1 * (tgrid[i] - t1)).exp())),
                1e-9,
            ));
        }
    }
    Ok(WTrajectory {
        tgrid,
        w,
        dw,
        blowup_time,
        envelope_checks: checks,
        t_star,
        big_m,
        big_b,
        big_m1,
        comparison_exponent: 1.0 + 0.5 * opts.epsilon * (p - 1.0),
    })
}

/// Inputs of the lifespan bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifespanInputs {
    pub n: usize,
    pub c: f64,
    pub lambda: f64,
    pub hubble: f64,
    pub q: f64,
    pub r0: f64,
    pub mu0: f64,
    /// `Ḋ^{μ₀}`, the homogeneous size of the data.
    pub d_mu0: f64,
    pub big_c: f64,
    pub c0: f64,
}

impl LifespanInputs {
    pub fn from_params(
        params: &PhysicalParams,
        derived: &DerivedConstants,
        d_mu0: f64,
        mu0: f64,
        big_c: f64,
        c0: f64,
    ) -> Self {
        Self {
            n: params.n,
            c: params.c,
            lambda: params.lambda,
            hubble: params.hubble,
            q: derived.q,
            r0: derived.r0_opt().unwrap_or(0.0),
            mu0,
            d_mu0,
            big_c,
            c0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.hubble < 0.0) {
            return Err(Error::Hypothesis(format!("lifespan bound needs H < 0, got {}", self.hubble)));
        }
        if !(self.q > 0.0) {
            return Err(Error::Hypothesis(format!("lifespan bound needs Q > 0, got {}", self.q)));
        }
        let n = self.n as f64;
        let lo = (0.5 * (n - 3.0)).max(0.0);
        if !(self.mu0 >= lo && self.mu0 < 0.5 * n) {
            return Err(Error::Hypothesis(format!(
                "μ₀ = {} outside [{lo}, {})",
                self.mu0,
                0.5 * n
            )));
        }
        if !(self.d_mu0 >= 0.0 && self.big_c > 0.0 && self.c0 > 0.0 && self.r0 >= 0.0 && self.lambda >= 0.0) {
            return Err(Error::InvalidParameter("lifespan constants must be non-negative".into()));
        }
        Ok(())
    }

    /// Left-hand side of the lifespan condition at `T`.
    pub fn lhs(&self, t: f64) -> f64 {
        let n = self.n as f64;
        let a = 1.0 + self.mu0;
        let h = self.hubble;
        let pre = self.big_c * self.lambda * self.c / -h;
        let first = ((-4.0 * a * h * t).exp_m1() / (4.0 * a)).sqrt()
            * self.q.powf(0.5 * (n - 3.0 - 2.0 * self.mu0))
            * self.c0
            * self.d_mu0;
        let second = self.r0 * ((-2.0 * a * h * t).exp_m1() / (2.0 * a)).sqrt() * self.q.powf(0.25 * (n - 4.0 - 2.0 * self.mu0));
        pre * (first + second)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifespanCertificate {
    /// `None` when the left side vanishes identically and every `T` is admissible.
    pub t: Option<f64>,
    pub lhs_at_t: f64,
    pub inputs: LifespanInputs,
}

/// Largest `T` with `LHS(T) ≤ 1/2`, by bisection to relative width `rel_tol`.
pub fn lifespan_lower_bound(inputs: &LifespanInputs, rel_tol: f64) -> Result<LifespanCertificate> {
    inputs.validate()?;
    if inputs.lhs(1.0) == 0.0 {
        return Ok(LifespanCertificate {
            t: None,
            lhs_at_t: 0.0,
            inputs: *inputs,
        });
    }
    let mut hi = 1.0;
    while inputs.lhs(hi) <= 0.5 {
        hi *= 2.0;
        if hi > 1e300 {
            return Ok(LifespanCertificate {
                t: None,
                lhs_at_t: inputs.lhs(hi),
                inputs: *inputs,
            });
        }
    }
    let mut lo = 0.0;
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inputs.lhs(mid) <= 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(LifespanCertificate {
        t: Some(lo),
        lhs_at_t: inputs.lhs(lo),
        inputs: *inputs,
    })
}

/// Smallest centred difference quotient of the LHS over `samples` points of `(0, t_end]`.
pub fn min_lhs_slope(inputs: &LifespanInputs, t_end: f64, samples: usize) -> f64 {
    let dt = t_end / samples as f64;
    (1..=samples)
        .map(|j| {
            let t = j as f64 * dt;
            let e = 1e-3 * dt;
            (inputs.lhs(t + e) - inputs.lhs(t - e)) / (2.0 * e)
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive_constants, MassKind};

    fn preset() -> PhysicalParams {
        PhysicalParams {
            hubble: 0.5,
            p: 2.0,
            mass_kind: MassKind::Imaginary,
            ..PhysicalParams::default()
        }
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn radius_limits() {
        let p = preset();
        assert_eq!(support_radius(0.0, 1.3, &p), 1.3);
        let far = support_radius(80.0, 1.3, &p);
        assert!((far - (1.3 + p.c / p.hubble)).abs() < 1e-12);
        let mut prev = 0.0;
        for j in 0..100 {
            let r = support_radius(j as f64 * 0.3, 1.3, &p);
            assert!(r >= prev && r <= 1.3 + p.c / p.hubble + 1e-12);
            prev = r;
        }
        let tiny = PhysicalParams { hubble: 1e-9, ..p };
        assert!((support_radius(2.0, 1.0, &tiny) - 3.0).abs() < 1e-8);
        let flat = PhysicalParams { hubble: 0.0, ..p };
        assert_eq!(support_radius(2.0, 1.0, &flat), 3.0);
    }

    #[test]
    fn closed_form_limits() {
        assert!((w_closed_form(2.0, 1.5, 0.25, 0.0, 1.0, None).unwrap() - 2.0).abs() < 1e-15);
        let (m, c) = (0.8, 1.5);
        for &t in &[0.1, 1.0, 3.0] {
            let w = w_closed_form(t, 1.0, c * m, m, c, None).unwrap();
            assert!((w - (c * m * t).exp()).abs() < 1e-12 * w);
        }
    }

    #[test]
    fn closed_form_with_constant_forcing() {
        let (m, c, h0, dt) = (0.7, 1.2, 0.3, 0.01);
        let h = vec![h0; 301];
        for &t in &[1.0, 2.5, 3.0] {
            let w = w_closed_form(t, 0.0, 0.0, m, c, Some((&h, dt))).unwrap();
            let cm = c * m;
            let want = c * c * h0 * ((cm * t).cosh() - 1.0) / (cm * cm);
            assert!((w - want).abs() < 1e-10 * want, "t = {t}");
        }
    }

    #[test]
    fn linear_reduction_does_not_blow_up() {
        let p = preset();
        let d = derive_constants(&p).unwrap();
        let opts = BlowupOptions {
            t_max: 5.0,
            ..BlowupOptions::default()
        };
        let wt = integrate_w(0.5, 2.0, &p, &d, BModel::Zero, &opts).unwrap();
        assert!(wt.blowup_time.is_none());
        for (t, w) in wt.tgrid.iter().zip(&wt.w) {
            let want = w_closed_form(*t, 0.5, 2.0, wt.big_m, p.c, None).unwrap();
            assert!((w - want).abs() < 1e-10 * want.abs().max(1.0));
        }
    }

    #[test]
    fn separable_benchmark() {
        let (kappa, delta, w0) = (0.7, 0.5, 2.0f64);
        let exact = 1.0 / (delta * kappa * w0.powf(delta));
        let t = separable_blowup_time(kappa, delta, w0, &BlowupOptions::default()).unwrap().unwrap();
        assert!((t - exact).abs() < 1e-6 * exact, "{t} vs {exact}");
    }

    #[test]
    fn preset_blows_up_with_envelopes_holding() {
        let p = preset();
        let d = derive_constants(&p).unwrap();
        let m = d.big_m().unwrap();
        let wt = integrate_w(1.0, m, &p, &d, BModel::Exact, &BlowupOptions::default()).unwrap();
        let t = wt.blowup_time.expect("finite blow-up");
        assert!((t - 3.887_009_52).abs() < 1e-6 * t, "{t}");
        assert!(wt.all_passed(), "{:?}", wt.envelope_checks);
        assert!(wt.tgrid.iter().all(|&s| s < t));
        let loose = integrate_w(1.0, m, &p, &d, BModel::Exact, &BlowupOptions {
            tol: 1e-10,
            ..BlowupOptions::default()
        })
        .unwrap();
        assert!((loose.blowup_time.unwrap() - t).abs() < 1e-6 * t);
    }

    #[test]
    fn larger_b_blows_up_sooner() {
        let p = preset();
        let d = derive_constants(&p).unwrap();
        let m = d.big_m().unwrap();
        let opts = BlowupOptions::default();
        let floor = integrate_w(1.0, m, &p, &d, BModel::Floor, &opts).unwrap();
        let exact = integrate_w(1.0, m, &p, &d, BModel::Exact, &opts).unwrap();
        let smaller = integrate_w(1.0, m, &p, &d, BModel::Exact, &BlowupOptions {
            r_support0: 2.0,
            ..opts
        })
        .unwrap();
        let (tf, te, ts) = (
            floor.blowup_time.unwrap(),
            exact.blowup_time.unwrap(),
            smaller.blowup_time.unwrap(),
        );
        assert!(te <= tf && te <= ts, "{te} {tf} {ts}");
    }

    #[test]
    fn contracting_floor_holds_beyond_threshold() {
        let p = PhysicalParams {
            hubble: -0.4,
            ..preset()
        };
        let d = derive_constants(&p).unwrap();
        let t_star = large_time_threshold(1.0, &p, 30.0, 3000);
        let bb = floor_constant(1.0, &p).unwrap();
        for j in 0..200 {
            let t = t_star + j as f64 * 0.1;
            assert!(exact_b(t, 1.0, &p) >= floor_b(t, bb, &p) * (1.0 - 1e-12));
        }
        let m = d.big_m().unwrap();
        let wt = integrate_w(1.0, m, &p, &d, BModel::Exact, &BlowupOptions::default()).unwrap();
        assert!(wt.all_passed(), "{:?}", wt.envelope_checks);
    }

    #[test]
    fn hypotheses_are_enforced() {
        let p = preset();
        let d = derive_constants(&p).unwrap();
        let m = d.big_m().unwrap();
        let opts = BlowupOptions::default();
        assert!(matches!(integrate_w(1.0, 0.5 * m, &p, &d, BModel::Exact, &opts), Err(Error::Hypothesis(_))));
        assert!(matches!(integrate_w(-1.0, m, &p, &d, BModel::Exact, &opts), Err(Error::Hypothesis(_))));
        let real = PhysicalParams::default();
        let dr = derive_constants(&real).unwrap();
        assert!(matches!(integrate_w(1.0, 1.0, &real, &dr, BModel::Exact, &opts), Err(Error::Hypothesis(_))));
    }

    fn example_inputs() -> LifespanInputs {
        LifespanInputs {
            n: 3,
            c: 1.0,
            lambda: 1.0,
            hubble: -0.5,
            q: 1.0,
            r0: 1.0,
            mu0: 0.0,
            d_mu0: 0.1,
            big_c: 1.0,
            c0: 1.0,
        }
    }

    #[test]
    fn lifespan_example() {
        let inputs = example_inputs();
        assert_eq!(inputs.lhs(0.0), 0.0);
        let a = lifespan_lower_bound(&inputs, 1e-10).unwrap();
        let b = lifespan_lower_bound(&inputs, 1e-14).unwrap();
        let (ta, tb) = (a.t.unwrap(), b.t.unwrap());
        assert!((ta - 0.097_880_164_664_811_58).abs() < 1e-10 * ta);
        assert!((ta - tb).abs() <= 1e-10 * tb);
        assert!(a.lhs_at_t <= 0.5 + 1e-12);
        assert!(min_lhs_slope(&inputs, 2.0 * ta, 200) > 0.0);
    }

    #[test]
    fn lifespan_unbounded_without_data() {
        let inputs = LifespanInputs {
            d_mu0: 0.0,
            r0: 0.0,
            ..example_inputs()
        };
        assert!(lifespan_lower_bound(&inputs, 1e-10).unwrap().t.is_none());
    }

    #[test]
    fn lifespan_window() {
        for (n, mu0) in [(3, 1.5), (5, 0.5), (3, -0.1)] {
            let inputs = LifespanInputs { n, mu0, ..example_inputs() };
            assert!(lifespan_lower_bound(&inputs, 1e-10).is_err(), "n = {n}, μ₀ = {mu0}");
        }
        let inputs = LifespanInputs { hubble: 0.5, ..example_inputs() };
        assert!(lifespan_lower_bound(&inputs, 1e-10).is_err());
    }
}
