//! Energy densities and their balance laws for real solutions of the shifted equation.
//!
//! For `H ≥ 0` the conserved-plus-dissipated quantity is
//! `e⁰ = |∂ₜu|²/(2c²) + Q|u|²/2 + e^{−2Ht}|∇u|²/2` with loss rate `e^{n+1} = He^{−2Ht}|∇u|²`.
//! For `H < 0` the densities carry an `e^{2Ht}` weight. The tilde versions absorb the
//! cubic and quadratic parts of `h` so that the nonlinear flow satisfies an exact identity.

use crate::params::{DerivedConstants, HubbleRegime, PhysicalParams};
use crate::propagator::{Equation, StateSnapshot, Trajectory};
use crate::quadrature::cumulative;
use crate::spectral::{transform, Field};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    /// `∫e⁰dx`.
    pub e0_integral: f64,
    /// `∫ẽ⁰dx`.
    pub e0_tilde_integral: f64,
    /// `∫e^{n+1}dx` at this instant.
    pub dissipation_rate: f64,
    /// `∫ẽ^{n+1}dx` at this instant.
    pub dissipation_tilde_rate: f64,
    /// Time integral of `∫ẽ^{n+1}dx` from 0; only filled in by [`energy_series`].
    pub dissipation_accum: f64,
    /// `∫ẽ⁰(t) + ∫₀ᵗ∫ẽ^{n+1} − ∫ẽ⁰(0)`; only filled in by [`energy_series`].
    pub balance_residual: f64,
    /// `∫∂ⱼeʲdx`, zero on the periodic box up to rounding.
    pub flux_integral: f64,
}

fn sum_cells(f: impl Fn(usize) -> f64, len: usize, cell: f64) -> f64 {
    (0..len).map(f).sum::<f64>() * cell
}

/// Instantaneous integrals of the densities at one snapshot.
pub fn energy_report(
    snap: &StateSnapshot,
    params: &PhysicalParams,
    derived: &DerivedConstants,
    regime: HubbleRegime,
) -> Result<EnergyReport> {
    regime.check(params.hubble)?;
    let (t, h, c) = (snap.t, params.hubble, params.c);
    let n = params.n as f64;
    let q = derived.q;
    let lambda = params.lambda;
    let r0 = derived.r0_opt().unwrap_or(0.0);
    let grid = *snap.grid();
    let cell = grid.cell_volume();
    let (u, ut) = (snap.u.samples(), snap.ut.samples());
    let su = transform(&snap.u);
    let grad2 = su.weighted_energy(|k2| k2);
    let ut2 = sum_cells(|i| ut[i] * ut[i], u.len(), cell);
    let u2 = sum_cells(|i| u[i] * u[i], u.len(), cell);
    let u4 = sum_cells(|i| u[i].powi(4), u.len(), cell);
    let u3 = sum_cells(|i| u[i].powi(3), u.len(), cell);
    let flux = flux_integral(&snap.u, &snap.ut)?;
    let (e0, rate, quartic_w, cubic_w, quartic_rate, cubic_rate) = match regime {
        HubbleRegime::Nonnegative => {
            let e = (-2.0 * h * t).exp();
            (
                ut2 / (2.0 * c * c) + 0.5 * q * u2 + 0.5 * e * grad2,
                h * e * grad2,
                (-n * h * t).exp(),
                (-0.5 * n * h * t).exp(),
                n * h,
                0.5 * n * h,
            )
        }
        HubbleRegime::Negative => {
            let e = (2.0 * h * t).exp();
            (
                e * ut2 / (2.0 * c * c) + 0.5 * grad2 + 0.5 * q * e * u2,
                -h * e * (ut2 / (c * c) + q * u2),
                (-(n - 2.0) * h * t).exp(),
                (-(n - 4.0) * h * t / 2.0).exp(),
                (n - 2.0) * h,
                0.5 * (n - 4.0) * h,
            )
        }
    };
    let quartic = 0.25 * lambda * u4 * quartic_w;
    let cubic = lambda * r0 * u3 * cubic_w;
    Ok(EnergyReport {
        t,
        e0_integral: e0,
        e0_tilde_integral: e0 + quartic + cubic,
        dissipation_rate: rate,
        dissipation_tilde_rate: rate + quartic_rate * quartic + cubic_rate * cubic,
        dissipation_accum: 0.0,
        balance_residual: 0.0,
        flux_integral: flux,
    })
}

fn flux_integral(u: &Field, ut: &Field) -> Result<f64> {
    let grid = *u.grid();
    let mut total = 0.0;
    for axis in 0..grid.dim() {
        let du = crate::spectral::partial(u, axis)?;
        let prod = Field::from_raw(
            grid,
            ut.samples().iter().zip(du.samples()).map(|(a, b)| -a * b).collect(),
        );
        total += crate::spectral::partial(&prod, axis)?.integral();
    }
    Ok(total)
}

/// Reports at every snapshot with the accumulated dissipation and the balance residual.
/// Time integrals use the same composite Simpson rule as the Duhamel term.
pub fn energy_series(
    traj: &Trajectory,
    params: &PhysicalParams,
    derived: &DerivedConstants,
    regime: HubbleRegime,
) -> Result<Vec<EnergyReport>> {
    let mut reports = traj
        .snapshots
        .iter()
        .map(|s| energy_report(s, params, derived, regime))
        .collect::<Result<Vec<_>>>()?;
    let rates: Vec<f64> = reports.iter().map(|r| r.dissipation_tilde_rate).collect();
    let accum = cumulative(&rates, traj.dt);
    let start = reports[0].e0_tilde_integral;
    for (r, a) in reports.iter_mut().zip(accum) {
        r.dissipation_accum = a;
        r.balance_residual = r.e0_tilde_integral + a - start;
    }
    Ok(reports)
}

/// Largest `|∫ẽ⁰(t) + ∫₀ᵗ∫ẽ^{n+1} − ∫ẽ⁰(0)|` along a trajectory of the shifted equation.
/// The identity is exact for the continuous flow, so the value measures discretisation error.
pub fn energy_inequality_residual(
    traj: &Trajectory,
    params: &PhysicalParams,
    derived: &DerivedConstants,
    regime: HubbleRegime,
) -> Result<f64> {
    if derived.q < 0.0 {
        return Err(Error::Hypothesis(format!("energy identity needs Q >= 0, got {}", derived.q)));
    }
    if traj.equation != Equation::ShiftedCubic {
        return Err(Error::RegimeMismatch(format!(
            "energy identity applies to the shifted equation, not {}",
            traj.equation.name()
        )));
    }
    Ok(energy_series(traj, params, derived, regime)?
        .iter()
        .map(|r| r.balance_residual.abs())
        .fold(0.0, f64::max))
}

/// `max_t |∫ẽ⁰(t) − ∫ẽ⁰(0)| / ∫ẽ⁰(0)`, the relative drift of the conserved energy at `H = 0`.
pub fn relative_energy_drift(traj: &Trajectory, params: &PhysicalParams, derived: &DerivedConstants) -> Result<f64> {
    if params.hubble != 0.0 {
        return Err(Error::RegimeMismatch("energy is conserved only for H = 0".into()));
    }
    let series = energy_series(traj, params, derived, HubbleRegime::Nonnegative)?;
    let e0 = series[0].e0_tilde_integral;
    let scale = if e0 == 0.0 { 1.0 } else { e0.abs() };
    Ok(series
        .iter()
        .map(|r| (r.e0_tilde_integral - e0).abs() / scale)
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_constants;
    use crate::propagator::{direct_solve, DirectOptions};
    use crate::spectral::Grid;

    fn params(hubble: f64, lambda: f64) -> PhysicalParams {
        PhysicalParams {
            hubble,
            lambda,
            ..PhysicalParams::default()
        }
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let g = Grid::new(2, 8, 5.0).unwrap();
        let z = Field::zeros(g);
        let p = params(0.4, 1.0);
        let d = derive_constants(&p).unwrap();
        let r = energy_report(&StateSnapshot::new(1.0, z.clone(), z).unwrap(), &p, &d, HubbleRegime::Nonnegative)
            .unwrap();
        assert_eq!(r.e0_integral, 0.0);
        assert_eq!(r.e0_tilde_integral, 0.0);
        assert_eq!(r.dissipation_rate, 0.0);
    }

    #[test]
    fn constant_state_completes_the_square() {
        let g = Grid::new(1, 16, 6.0).unwrap();
        let p = params(0.0, 1.5);
        let d = derive_constants(&p).unwrap();
        let r0 = d.r0().unwrap();
        let alpha = 0.37;
        let snap = StateSnapshot::new(0.0, Field::constant(g, alpha), Field::zeros(g)).unwrap();
        let r = energy_report(&snap, &p, &d, HubbleRegime::Nonnegative).unwrap();
        let want = 6.0 * p.lambda * (r0 * alpha + 0.5 * alpha * alpha).powi(2);
        assert!((r.e0_tilde_integral - want).abs() < 1e-13 * want);
    }

    #[test]
    fn regime_is_checked() {
        let g = Grid::new(1, 8, 6.0).unwrap();
        let z = Field::zeros(g);
        let snap = StateSnapshot::new(0.0, z.clone(), z).unwrap();
        let p = params(-0.3, 1.0);
        let d = derive_constants(&p).unwrap();
        assert!(energy_report(&snap, &p, &d, HubbleRegime::Nonnegative).is_err());
        assert!(energy_report(&snap, &p, &d, HubbleRegime::Negative).is_ok());
    }

    #[test]
    fn gaussian_energy_converges_under_refinement() {
        let p = params(0.3, 1.0);
        let d = derive_constants(&p).unwrap();
        let at = |points: usize| {
            let g = Grid::new(1, points, 16.0).unwrap();
            let u = Field::from_fn(g, |x| (-x[0] * x[0]).exp());
            let ut = Field::from_fn(g, |x| x[0] * (-x[0] * x[0]).exp());
            let snap = StateSnapshot::new(0.5, u, ut).unwrap();
            energy_report(&snap, &p, &d, HubbleRegime::Nonnegative).unwrap().e0_integral
        };
        let (coarse, fine) = (at(64), at(256));
        assert!((coarse - fine).abs() < 1e-8 * fine);
    }

    #[test]
    fn flux_integrates_to_zero() {
        let g = Grid::new(2, 16, 8.0).unwrap();
        let u = Field::from_fn(g, |x| (-x[0] * x[0] - 2.0 * x[1] * x[1]).exp());
        let ut = Field::from_fn(g, |x| (x[0] - x[1]).sin() * (-x[1] * x[1]).exp());
        assert!(flux_integral(&u, &ut).unwrap().abs() < 1e-13);
    }

    #[test]
    fn linear_balance_closes_with_expansion() {
        let g = Grid::new(1, 64, 20.0).unwrap();
        let p = params(0.5, 0.0);
        let d = derive_constants(&p).unwrap();
        let u0 = Field::from_fn(g, |x| (-x[0] * x[0]).exp());
        let traj = direct_solve(&u0, &Field::zeros(g), 4.0, 0.002, Equation::ShiftedCubic, &p, &d, &DirectOptions {
            save_every: 1,
            dealias: false,
        })
        .unwrap();
        let series = energy_series(&traj, &p, &d, HubbleRegime::Nonnegative).unwrap();
        assert!(series.iter().all(|r| r.dissipation_accum >= 0.0 && r.e0_integral >= 0.0));
        let res = energy_inequality_residual(&traj, &p, &d, HubbleRegime::Nonnegative).unwrap();
        assert!(res < 1e-8 * series[0].e0_integral, "residual {res}");
    }

    #[test]
    fn nonlinear_balance_closes_when_contracting() {
        let g = Grid::new(1, 64, 20.0).unwrap();
        let p = params(-0.3, 1.0);
        let d = derive_constants(&p).unwrap();
        let u0 = Field::from_fn(g, |x| 0.3 * (-x[0] * x[0]).exp());
        let traj = direct_solve(&u0, &Field::zeros(g), 2.0, 0.002, Equation::ShiftedCubic, &p, &d, &DirectOptions {
            save_every: 1,
            dealias: false,
        })
        .unwrap();
        let series = energy_series(&traj, &p, &d, HubbleRegime::Negative).unwrap();
        assert!(series.iter().all(|r| r.dissipation_rate >= 0.0));
        let res = energy_inequality_residual(&traj, &p, &d, HubbleRegime::Negative).unwrap();
        assert!(res < 1e-8 * series[0].e0_tilde_integral, "residual {res}");
    }

    #[test]
    fn zero_trajectory_has_zero_residual() {
        let g = Grid::new(1, 16, 8.0).unwrap();
        let p = params(0.2, 1.0);
        let d = derive_constants(&p).unwrap();
        let z = Field::zeros(g);
        let traj = direct_solve(&z, &z, 1.0, 0.01, Equation::ShiftedCubic, &p, &d, &DirectOptions::default()).unwrap();
        assert_eq!(energy_inequality_residual(&traj, &p, &d, HubbleRegime::Nonnegative).unwrap(), 0.0);
    }

    #[test]
    fn energy_is_conserved_without_expansion() {
        let g = Grid::new(1, 64, 20.0).unwrap();
        let p = params(0.0, 1.0);
        let d = derive_constants(&p).unwrap();
        let u0 = Field::from_fn(g, |x| 0.5 * (-x[0] * x[0]).exp());
        let traj = direct_solve(&u0, &Field::zeros(g), 3.0, 0.002, Equation::ShiftedCubic, &p, &d, &DirectOptions {
            save_every: 50,
            dealias: false,
        })
        .unwrap();
        assert!(relative_energy_drift(&traj, &p, &d).unwrap() < 1e-9);
    }
}
