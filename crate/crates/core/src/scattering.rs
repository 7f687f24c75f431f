//! Asymptotic free data and the deviation of a solution from its scattering state.
//!
//! `u₊₀ = u₀ + c²∫₀^∞K₁(s)h(s)ds` and `u₊₁ = u₁ − c²∫₀^∞K₀(s)h(s)ds`, truncated at
//! `t_cut` with an exponential tail whose rate is fitted from `‖h(s)‖_{L²}`.

use num_complex::Complex64;

use crate::mode_ode::ModeBank;
use crate::nonlinearity::h_unchecked;
use crate::params::{derive_constants, DerivedConstants, PhysicalParams};
use crate::propagator::{apply_free, Equation, Forcing, Trajectory};
use crate::quadrature::{cumulative, weights};
use crate::spectral::{inhomogeneous_norm, inverse, transform, Field, SpectralField};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticState {
    pub u_plus0: Field,
    pub u_plus1: Field,
    pub t_cut: f64,
    pub dt: f64,
    /// `‖h(s_j)‖_{L²}` at the quadrature nodes.
    pub h_norms: Vec<f64>,
    /// `c⁻¹∫_{s_j}^∞‖h‖ds` at the quadrature nodes, including the extrapolated tail.
    pub tail: Vec<f64>,
    /// Estimate of `∫_{t_cut}^∞‖h‖ds`.
    pub neglected_tail: f64,
    /// Fitted exponential decay rate of `‖h‖`; infinite when the forcing vanishes at the end.
    pub decay_rate: f64,
}

impl AsymptoticState {
    /// Tabulated tail at a quadrature node.
    pub fn tail_at(&self, t: f64) -> Result<f64> {
        let j = (t / self.dt).round();
        if t < 0.0 || j as usize >= self.tail.len() || (j * self.dt - t).abs() > 1e-9 * (1.0 + t) {
            return Err(Error::OutOfRange { t, last: self.t_cut });
        }
        Ok(self.tail[j as usize])
    }
}

/// Least-squares slope of `log‖h‖` over the second half of the nodes, as a decay rate.
fn fit_decay(norms: &[f64], dt: f64) -> f64 {
    let start = norms.len() / 2;
    let pts: Vec<(f64, f64)> = (start..norms.len())
        .filter(|&j| norms[j] > 0.0)
        .map(|j| (j as f64 * dt, norms[j].ln()))
        .collect();
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let k = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    -sxy / sxx
}

/// Asymptotic data for a given forcing on `[0, t_cut]`, `t_cut` being the last forcing node.
pub fn asymptotic_state_from_forcing(
    u0: &Field,
    u1: &Field,
    forcing: &Forcing,
    params: &PhysicalParams,
    q: f64,
    tail_tol: f64,
) -> Result<AsymptoticState> {
    if u0.grid() != u1.grid() || u0.grid() != forcing.fields[0].grid() {
        return Err(Error::GridMismatch("data and forcing live on different grids".into()));
    }
    let dt = forcing.dt;
    let nodes = forcing.fields.len();
    let t_cut = forcing.last_time();
    let c = params.c;
    let h_norms: Vec<f64> = forcing.fields.iter().map(|f| f.l2_norm()).collect();
    let last = *h_norms.last().unwrap_or(&0.0);
    let decay_rate = if last == 0.0 { f64::INFINITY } else { fit_decay(&h_norms, dt) };
    let neglected_tail = if last == 0.0 {
        0.0
    } else if decay_rate > 0.0 {
        last / decay_rate
    } else {
        f64::INFINITY
    };
    if !(neglected_tail / c <= tail_tol) {
        return Err(Error::TailTooLarge {
            tail: neglected_tail / c,
            tol: tail_tol,
        });
    }
    let cum = cumulative(&h_norms, dt);
    let total = cum.last().copied().unwrap_or(0.0);
    let tail = cum.iter().map(|v| (total - v + neglected_tail) / c).collect();
    if h_norms.iter().all(|&v| v == 0.0) {
        return Ok(AsymptoticState {
            u_plus0: u0.clone(),
            u_plus1: u1.clone(),
            t_cut,
            dt,
            h_norms,
            tail,
            neglected_tail,
            decay_rate,
        });
    }
    let grid = *u0.grid();
    let tgrid: Vec<f64> = (0..nodes).map(|j| j as f64 * dt).collect();
    let bank = ModeBank::new(grid, &tgrid, params, q)?;
    let hat: Vec<SpectralField> = forcing.fields.iter().map(transform).collect();
    let w = weights(nodes, dt);
    let mut d0 = SpectralField::zeros(grid);
    let mut d1 = SpectralField::zeros(grid);
    let c2 = c * c;
    for k in 0..grid.len() {
        let m = bank.solution(k);
        let (mut a, mut b) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for j in 0..nodes {
            let h = hat[j].coeffs()[k] * w[j];
            a += h * m.rho1[j];
            b += h * m.rho0[j];
        }
        d0.coeffs_mut()[k] = c2 * a;
        d1.coeffs_mut()[k] = -c2 * b;
    }
    Ok(AsymptoticState {
        u_plus0: u0.add_scaled(1.0, &inverse(&d0))?,
        u_plus1: u1.add_scaled(1.0, &inverse(&d1))?,
        t_cut,
        dt,
        h_norms,
        tail,
        neglected_tail,
        decay_rate,
    })
}

/// Asymptotic data of a shifted-equation trajectory, using its snapshots up to `t_cut`.
pub fn compute_asymptotic_state(
    traj: &Trajectory,
    params: &PhysicalParams,
    derived: &DerivedConstants,
    t_cut: f64,
    tail_tol: f64,
) -> Result<AsymptoticState> {
    if traj.equation != Equation::ShiftedCubic {
        return Err(Error::RegimeMismatch(format!(
            "scattering data needs the shifted equation, not {}",
            traj.equation.name()
        )));
    }
    let j = (t_cut / traj.dt).round() as usize;
    if j == 0 || j >= traj.len() || (j as f64 * traj.dt - t_cut).abs() > 1e-9 * (1.0 + t_cut) {
        return Err(Error::OutOfRange {
            t: t_cut,
            last: traj.last().t,
        });
    }
    let fields = traj.snapshots[..=j]
        .iter()
        .map(|s| h_unchecked(&s.u, s.t, params, derived))
        .collect();
    let forcing = Forcing::new(traj.dt, fields)?;
    let first = &traj.snapshots[0];
    asymptotic_state_from_forcing(&first.u, &first.ut, &forcing, params, derived.q, tail_tol)
}

/// `(‖u(t) − u₊(t)‖_{H^{μ−1}}, ‖∂ₜu(t) − ∂ₜu₊(t)‖_{H^{μ−1}})` at a snapshot time.
pub fn scattering_deviation(traj: &Trajectory, ast: &AsymptoticState, t: f64, mu: f64) -> Result<(f64, f64)> {
    if !(mu >= 0.0) {
        return Err(Error::InvalidParameter(format!("order must be non-negative, got {mu}")));
    }
    let snap = traj
        .snapshots
        .iter()
        .find(|s| (s.t - t).abs() <= 1e-9 * (1.0 + t.abs()))
        .ok_or(Error::OutOfRange { t, last: traj.last().t })?;
    let q = derive_constants(&traj.params)?.q;
    let free = apply_free(t, &ast.u_plus0, &ast.u_plus1, &traj.params, q)?;
    let du = transform(&snap.u.add_scaled(-1.0, &free.u)?);
    let dut = transform(&snap.ut.add_scaled(-1.0, &free.ut)?);
    Ok((inhomogeneous_norm(&du, mu - 1.0), inhomogeneous_norm(&dut, mu - 1.0)))
}
