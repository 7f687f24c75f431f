//! Free evolution, Duhamel integrals, Picard iteration and a direct RK4 stepper.
//!
//! The free flow multiplies each Fourier coefficient by the fundamental pair of
//! its shell. The inhomogeneous part uses `K(t,s) = c²(−K₀(t)K₁(s) + K₁(t)K₀(s))`,
//! which separates per mode so running Simpson sums give every grid time at once.

use num_complex::Complex64;

use crate::mode_ode::ModeBank;
use crate::nonlinearity::{gauge_unchecked, h_unchecked, j_unchecked, GaugeSign};
use crate::params::{DerivedConstants, PhysicalParams};
use crate::quadrature::{cumulative_by, weights};
use crate::spectral::{inverse, transform, Field, Grid, SobolevKind, SpectralField, sobolev_norm};
use crate::{Error, Result};

/// Which field equation a trajectory solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Equation {
    /// `c⁻²u_tt − e^{−2Ht}Δu + Qu + h(u) = 0`.
    ShiftedCubic,
    /// `c⁻²u_tt − e^{−2Ht}Δu + Qu − e^{−n(p−1)Ht/2}|u|^p = 0`.
    GaugeVariantBlowup,
    /// `c⁻²φ_tt + (nH/c²)φ_t − e^{−2Ht}Δφ − (mc/ħ)²φ + λφ³ = 0`.
    Unshifted,
    /// `c⁻²φ_tt + (nH/c²)φ_t − e^{−2Ht}Δφ + J(φ) = 0`, the unshifted equation about `φ = r₀`.
    ShiftedPhi,
}

impl Equation {
    pub fn name(self) -> &'static str {
        match self {
            Equation::ShiftedCubic => "shifted_cubic",
            Equation::GaugeVariantBlowup => "gauge_variant_blowup",
            Equation::Unshifted => "unshifted",
            Equation::ShiftedPhi => "shifted_phi",
        }
    }

    /// Coefficient `q` of the linear term `c²q·u` and the friction rate.
    fn linear_part(self, params: &PhysicalParams, derived: &DerivedConstants) -> (f64, f64) {
        let friction = params.n as f64 * params.hubble;
        match self {
            Equation::ShiftedCubic | Equation::GaugeVariantBlowup => (derived.q, 0.0),
            Equation::Unshifted => (-params.mass_term(), friction),
            Equation::ShiftedPhi => (0.0, friction),
        }
    }

    /// Size of the zeroth-order coefficient used in the stability limit.
    fn stiffness(self, params: &PhysicalParams, derived: &DerivedConstants) -> f64 {
        let (q, _) = self.linear_part(params, derived);
        match self {
            Equation::ShiftedPhi => 2.0 * params.mass_term(),
            _ => q.abs(),
        }
    }

    fn source(self, u: &Field, t: f64, params: &PhysicalParams, derived: &DerivedConstants) -> Field {
        match self {
            Equation::ShiftedCubic => h_unchecked(u, t, params, derived),
            Equation::GaugeVariantBlowup => gauge_unchecked(u, t, params, GaugeSign::BlowUp),
            Equation::Unshifted => {
                let l = params.lambda;
                u.map(|v| l * v * v * v)
            }
            Equation::ShiftedPhi => j_unchecked(u, params, derived),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSnapshot {
    pub t: f64,
    pub u: Field,
    pub ut: Field,
}

impl StateSnapshot {
    pub fn new(t: f64, u: Field, ut: Field) -> Result<Self> {
        if u.grid() != ut.grid() {
            return Err(Error::GridMismatch("u and ut live on different grids".into()));
        }
        Ok(Self { t, u, ut })
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }
}

/// Snapshots on a uniform time grid starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<StateSnapshot>,
    /// Spacing between consecutive snapshots.
    pub dt: f64,
    pub params: PhysicalParams,
    pub equation: Equation,
    /// Last finite time when the run stopped on overflow.
    pub diverged_at: Option<f64>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn grid(&self) -> &Grid {
        self.snapshots[0].grid()
    }

    pub fn last(&self) -> &StateSnapshot {
        self.snapshots.last().expect("trajectory is never empty")
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// `max_j ‖u_j − v_j‖_{L²}` over common snapshots.
    pub fn max_l2_distance(&self, other: &Trajectory) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::GridMismatch(format!(
                "trajectories have {} and {} snapshots",
                self.len(),
                other.len()
            )));
        }
        let mut m: f64 = 0.0;
        for (a, b) in self.snapshots.iter().zip(&other.snapshots) {
            if (a.t - b.t).abs() > 1e-9 * (1.0 + a.t.abs()) {
                return Err(Error::GridMismatch(format!("snapshot times {} vs {}", a.t, b.t)));
            }
            m = m.max(a.u.l2_distance(&b.u)?);
        }
        Ok(m)
    }
}

fn uniform_grid(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need T > 0 and dt > 0, got T = {t_end}, dt = {dt}"
        )));
    }
    let steps = (t_end / dt).round() as usize;
    if steps == 0 || ((steps as f64) * dt - t_end).abs() > 1e-9 * t_end {
        return Err(Error::InvalidParameter(format!(
            "T = {t_end} is not an integer multiple of dt = {dt}"
        )));
    }
    Ok((0..=steps).map(|j| j as f64 * dt).collect())
}

fn mode_combine(
    bank: &ModeBank,
    j: usize,
    s0: &SpectralField,
    s1: &SpectralField,
) -> (SpectralField, SpectralField) {
    let grid = *s0.grid();
    let mut u = SpectralField::zeros(grid);
    let mut ut = SpectralField::zeros(grid);
    for k in 0..grid.len() {
        let m = bank.solution(k);
        let (a, b) = (s0.coeffs()[k], s1.coeffs()[k]);
        u.coeffs_mut()[k] = a * m.rho0[j] + b * m.rho1[j];
        ut.coeffs_mut()[k] = a * m.drho0[j] + b * m.drho1[j];
    }
    (u, ut)
}

/// `(K₀(t)u₀ + K₁(t)u₁, ∂ₜ(K₀(t)u₀ + K₁(t)u₁))` for the linear part with coefficient `Q`.
pub fn apply_free(t: f64, u0: &Field, u1: &Field, params: &PhysicalParams, q: f64) -> Result<StateSnapshot> {
    apply_free_from(0.0, t, u0, u1, params, q)
}

/// Free evolution from data given at time `s` to time `t ≥ s`, using pairs re-based at `s`.
pub fn apply_free_from(
    s: f64,
    t: f64,
    us: &Field,
    uts: &Field,
    params: &PhysicalParams,
    q: f64,
) -> Result<StateSnapshot> {
    if us.grid() != uts.grid() {
        return Err(Error::GridMismatch("data fields live on different grids".into()));
    }
    if t == s {
        return StateSnapshot::new(t, us.clone(), uts.clone());
    }
    if t < s {
        return Err(Error::InvalidParameter(format!("cannot evolve backwards from {s} to {t}")));
    }
    let grid = *us.grid();
    let bank = ModeBank::new(grid, &[s, t], params, q)?;
    let (u, ut) = mode_combine(&bank, 1, &transform(us), &transform(uts));
    StateSnapshot::new(t, inverse(&u), inverse(&ut))
}

/// Free flow sampled on `j·dt`, `j = 0..=T/dt`.
pub fn free_trajectory(
    u0: &Field,
    u1: &Field,
    t_end: f64,
    dt: f64,
    params: &PhysicalParams,
    q: f64,
) -> Result<Trajectory> {
    let tgrid = uniform_grid(t_end, dt)?;
    let bank = ModeBank::new(*u0.grid(), &tgrid, params, q)?;
    let (s0, s1) = (transform(u0), transform(u1));
    let snapshots = (0..tgrid.len())
        .map(|j| {
            if j == 0 {
                return StateSnapshot::new(0.0, u0.clone(), u1.clone());
            }
            let (u, ut) = mode_combine(&bank, j, &s0, &s1);
            StateSnapshot::new(tgrid[j], inverse(&u), inverse(&ut))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        snapshots,
        dt,
        params: *params,
        equation: Equation::ShiftedCubic,
        diverged_at: None,
    })
}

/// Source samples `h(s_j)` at `s_j = j·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    pub dt: f64,
    pub fields: Vec<Field>,
}

impl Forcing {
    pub fn new(dt: f64, fields: Vec<Field>) -> Result<Self> {
        if fields.is_empty() || !(dt > 0.0) {
            return Err(Error::InvalidParameter("forcing needs dt > 0 and at least one sample".into()));
        }
        let g = *fields[0].grid();
        if fields.iter().any(|f| *f.grid() != g) {
            return Err(Error::GridMismatch("forcing samples on different grids".into()));
        }
        Ok(Self { dt, fields })
    }

    pub fn last_time(&self) -> f64 {
        (self.fields.len() - 1) as f64 * self.dt
    }

    fn node_of(&self, t: f64) -> Result<usize> {
        let j = (t / self.dt).round();
        let last = self.last_time();
        if t < 0.0 || j as usize >= self.fields.len() || (j * self.dt - t).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(Error::OutOfRange { t, last });
        }
        Ok(j as usize)
    }
}

/// `−∫₀ᵗ K(t,s)h(s)ds` and its time derivative, by composite Simpson over the forcing nodes.
pub fn duhamel_state(t: f64, forcing: &Forcing, params: &PhysicalParams, q: f64) -> Result<StateSnapshot> {
    let j = forcing.node_of(t)?;
    let grid = *forcing.fields[0].grid();
    if j == 0 {
        return StateSnapshot::new(t, Field::zeros(grid), Field::zeros(grid));
    }
    let tgrid: Vec<f64> = (0..=j).map(|i| i as f64 * forcing.dt).collect();
    let bank = ModeBank::new(grid, &tgrid, params, q)?;
    let hat: Vec<SpectralField> = forcing.fields[..=j].iter().map(transform).collect();
    let w = weights(j + 1, forcing.dt);
    let c2 = params.c * params.c;
    let mut u = SpectralField::zeros(grid);
    let mut ut = SpectralField::zeros(grid);
    for k in 0..grid.len() {
        let m = bank.solution(k);
        let (mut a, mut b) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for i in 0..=j {
            let h = hat[i].coeffs()[k] * w[i];
            a += h * m.rho1[i];
            b += h * m.rho0[i];
        }
        u.coeffs_mut()[k] = -c2 * (-a * m.rho0[j] + b * m.rho1[j]);
        ut.coeffs_mut()[k] = -c2 * (-a * m.drho0[j] + b * m.drho1[j]);
    }
    StateSnapshot::new(t, inverse(&u), inverse(&ut))
}

/// `−∫₀ᵗ K(t,s)h(s)ds`.
pub fn duhamel_apply(t: f64, forcing: &Forcing, params: &PhysicalParams, q: f64) -> Result<Field> {
    Ok(duhamel_state(t, forcing, params, q)?.u)
}

/// Duhamel terms at every node of the bank's grid, in spectral form.
fn duhamel_series(bank: &ModeBank, hat: &[SpectralField], dt: f64, c: f64) -> Vec<(SpectralField, SpectralField)> {
    let grid = *bank.grid();
    let nt = hat.len();
    let mut out: Vec<(SpectralField, SpectralField)> =
        (0..nt).map(|_| (SpectralField::zeros(grid), SpectralField::zeros(grid))).collect();
    let c2 = c * c;
    for k in 0..grid.len() {
        let m = bank.solution(k);
        let a = cumulative_by(nt, dt, |i| hat[i].coeffs()[k] * m.rho1[i]);
        let b = cumulative_by(nt, dt, |i| hat[i].coeffs()[k] * m.rho0[i]);
        for j in 0..nt {
            out[j].0.coeffs_mut()[k] = -c2 * (-a[j] * m.rho0[j] + b[j] * m.rho1[j]);
            out[j].1.coeffs_mut()[k] = -c2 * (-a[j] * m.drho0[j] + b[j] * m.drho1[j]);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    /// Stop once successive iterates differ by at most this in `sup_t ‖·‖_{L²}`.
    pub tol: f64,
    pub max_iter: usize,
    /// Apply the 2/3 rule to each source evaluation.
    pub dealias: bool,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 60,
            dealias: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub trajectory: Trajectory,
    /// Successive quotients of the energy-metric distances.
    pub ratios: Vec<f64>,
    /// Energy-metric distance between iterate `k+1` and iterate `k`.
    pub distances: Vec<f64>,
    pub iterations: usize,
}

type Series = Vec<(SpectralField, SpectralField)>;

fn energy_metric(a: &Series, b: &Series, dt: f64, params: &PhysicalParams, q: f64) -> (f64, f64) {
    let (mut metric, mut l2): (f64, f64) = (0.0, 0.0);
    for (j, ((ua, uta), (ub, utb))) in a.iter().zip(b).enumerate() {
        let du = diff(ua, ub);
        let dut = diff(uta, utb);
        let t = j as f64 * dt;
        let n0 = sobolev_norm(&du, 0.0, SobolevKind::Homogeneous, 0.0).unwrap_or(f64::NAN);
        let n1 = sobolev_norm(&du, 1.0, SobolevKind::Homogeneous, 0.0).unwrap_or(f64::NAN);
        let nt = sobolev_norm(&dut, 0.0, SobolevKind::Homogeneous, 0.0).unwrap_or(f64::NAN);
        let m = nt / params.c + (-params.hubble * t).exp() * n1 + q.max(0.0).sqrt() * n0;
        metric = if m.is_nan() { f64::NAN } else { metric.max(m) };
        l2 = if n0.is_nan() { f64::NAN } else { l2.max(n0) };
    }
    (metric, l2)
}

fn diff(a: &SpectralField, b: &SpectralField) -> SpectralField {
    let mut out = a.clone();
    for (x, y) in out.coeffs_mut().iter_mut().zip(b.coeffs()) {
        *x -= y;
    }
    out
}

/// Fixed-point iteration `u ↦ free + Duhamel(h(u))` on `[0,T]`, started from the free flow.
pub fn picard_solve(
    u0: &Field,
    u1: &Field,
    t_end: f64,
    dt: f64,
    params: &PhysicalParams,
    derived: &DerivedConstants,
    opts: &PicardOptions,
) -> Result<PicardOutcome> {
    let q = derived.q;
    if !(q > 0.0) {
        return Err(Error::Hypothesis(format!("Picard iteration needs Q > 0, got {q}")));
    }
    if u0.grid() != u1.grid() {
        return Err(Error::GridMismatch("data fields live on different grids".into()));
    }
    let tgrid = uniform_grid(t_end, dt)?;
    let grid = *u0.grid();
    let bank = ModeBank::new(grid, &tgrid, params, q)?;
    let (s0, s1) = (transform(u0), transform(u1));
    let free: Series = (0..tgrid.len()).map(|j| mode_combine(&bank, j, &s0, &s1)).collect();
    let mut current = free.clone();
    let mut distances = Vec::new();
    let mut ratios = Vec::new();
    let fail = |iterations: usize, ratios: Vec<f64>| Error::NoContraction {
        iterations,
        last_ratio: ratios.last().copied().unwrap_or(f64::NAN),
        ratios,
    };
    for iter in 1..=opts.max_iter {
        let hat: Vec<SpectralField> = current
            .iter()
            .enumerate()
            .map(|(j, (u, _))| {
                let mut h = transform(&h_unchecked(&inverse(u), tgrid[j], params, derived));
                if opts.dealias {
                    h.dealias();
                }
                h
            })
            .collect();
        let duh = duhamel_series(&bank, &hat, dt, params.c);
        let next: Series = free
            .iter()
            .zip(duh)
            .map(|((fu, fut), (du, dut))| (sum(fu, &du), sum(fut, &dut)))
            .collect();
        let (metric, l2) = energy_metric(&next, &current, dt, params, q);
        if !metric.is_finite() {
            return Err(fail(iter, ratios));
        }
        if let Some(&prev) = distances.last() {
            ratios.push(if prev > 0.0 { metric / prev } else { 0.0 });
        }
        distances.push(metric);
        current = next;
        if l2 <= opts.tol {
            let snapshots = current
                .iter()
                .zip(&tgrid)
                .map(|((u, ut), &t)| StateSnapshot::new(t, inverse(u), inverse(ut)))
                .collect::<Result<Vec<_>>>()?;
            return Ok(PicardOutcome {
                trajectory: Trajectory {
                    snapshots,
                    dt,
                    params: *params,
                    equation: Equation::ShiftedCubic,
                    diverged_at: None,
                },
                ratios,
                distances,
                iterations: iter,
            });
        }
        if ratios.len() >= 3 && ratios[ratios.len() - 3..].iter().all(|&r| r > 1.0) {
            return Err(fail(iter, ratios));
        }
    }
    Err(fail(opts.max_iter, ratios))
}

fn sum(a: &SpectralField, b: &SpectralField) -> SpectralField {
    let mut out = a.clone();
    for (x, y) in out.coeffs_mut().iter_mut().zip(b.coeffs()) {
        *x += y;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectOptions {
    /// Keep every `save_every`-th step.
    pub save_every: usize,
    pub dealias: bool,
}

impl Default for DirectOptions {
    fn default() -> Self {
        Self {
            save_every: 1,
            dealias: false,
        }
    }
}

/// Largest admissible RK4 step: `0.5/ω` with `ω² = c²(e^{−2Ht*}|ξ|²_max + |q|)`.
pub fn stability_limit(
    grid: &Grid,
    t_end: f64,
    equation: Equation,
    params: &PhysicalParams,
    derived: &DerivedConstants,
) -> f64 {
    let t_star = if params.hubble >= 0.0 { 0.0 } else { t_end };
    let c2 = params.c * params.c;
    let omega2 = c2 * ((-2.0 * params.hubble * t_star).exp() * grid.max_ksq() + equation.stiffness(params, derived));
    if omega2 > 0.0 {
        0.5 / omega2.sqrt()
    } else {
        f64::INFINITY
    }
}

/// Method-of-lines RK4 with a spectral Laplacian. Stops early, recording `diverged_at`,
/// once the state overflows.
#[allow(clippy::too_many_arguments)]
pub fn direct_solve(
    u0: &Field,
    u1: &Field,
    t_end: f64,
    dt: f64,
    equation: Equation,
    params: &PhysicalParams,
    derived: &DerivedConstants,
    opts: &DirectOptions,
) -> Result<Trajectory> {
    if u0.grid() != u1.grid() {
        return Err(Error::GridMismatch("data fields live on different grids".into()));
    }
    let steps = uniform_grid(t_end, dt)?.len() - 1;
    if opts.save_every == 0 || steps % opts.save_every != 0 {
        return Err(Error::InvalidParameter(format!(
            "save_every = {} must divide the step count {steps}",
            opts.save_every
        )));
    }
    let grid = *u0.grid();
    let limit = stability_limit(&grid, t_end, equation, params, derived);
    if dt > limit {
        return Err(Error::Unstable { dt, limit });
    }
    let (q, friction) = equation.linear_part(params, derived);
    let c2 = params.c * params.c;
    let rhs = |t: f64, u: &Field, v: &Field| -> (Field, Field) {
        let e = (-2.0 * params.hubble * t).exp();
        let lap = transform(u).apply_symbol(|k2| -e * k2);
        let mut src = equation.source(u, t, params, derived);
        if opts.dealias {
            src = crate::spectral::dealias(&src);
        }
        let lap = inverse(&lap);
        let acc: Vec<f64> = (0..u.samples().len())
            .map(|i| {
                c2 * (lap.samples()[i] - q * u.samples()[i] - src.samples()[i]) - friction * v.samples()[i]
            })
            .collect();
        (v.clone(), Field::from_raw(grid, acc))
    };
    let axpy = |x: &Field, a: f64, y: &Field| -> Field {
        Field::from_raw(grid, x.samples().iter().zip(y.samples()).map(|(p, r)| p + a * r).collect())
    };
    let mut u = u0.clone();
    let mut v = u1.clone();
    let mut snapshots = vec![StateSnapshot::new(0.0, u.clone(), v.clone())?];
    let mut diverged_at = None;
    for step in 0..steps {
        let t = step as f64 * dt;
        let (k1u, k1v) = rhs(t, &u, &v);
        let (k2u, k2v) = rhs(t + 0.5 * dt, &axpy(&u, 0.5 * dt, &k1u), &axpy(&v, 0.5 * dt, &k1v));
        let (k3u, k3v) = rhs(t + 0.5 * dt, &axpy(&u, 0.5 * dt, &k2u), &axpy(&v, 0.5 * dt, &k2v));
        let (k4u, k4v) = rhs(t + dt, &axpy(&u, dt, &k3u), &axpy(&v, dt, &k3v));
        let combine = |x: &Field, a: &Field, b: &Field, c: &Field, d: &Field| -> Field {
            let s: Vec<f64> = (0..x.samples().len())
                .map(|i| {
                    x.samples()[i]
                        + dt / 6.0
                            * (a.samples()[i] + 2.0 * b.samples()[i] + 2.0 * c.samples()[i] + d.samples()[i])
                })
                .collect();
            Field::from_raw(grid, s)
        };
        let nu = combine(&u, &k1u, &k2u, &k3u, &k4u);
        let nv = combine(&v, &k1v, &k2v, &k3v, &k4v);
        let blown = |f: &Field| f.samples().iter().any(|x| !x.is_finite() || x.abs() > 1e150);
        if blown(&nu) || blown(&nv) {
            diverged_at = Some(t);
            break;
        }
        u = nu;
        v = nv;
        if (step + 1) % opts.save_every == 0 {
            snapshots.push(StateSnapshot::new((step + 1) as f64 * dt, u.clone(), v.clone())?);
        }
    }
    Ok(Trajectory {
        snapshots,
        dt: dt * opts.save_every as f64,
        params: *params,
        equation,
        diverged_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_constants;

    fn params(hubble: f64, lambda: f64) -> PhysicalParams {
        PhysicalParams {
            hubble,
            lambda,
            ..PhysicalParams::default()
        }
    }

    fn line(points: usize, length: f64) -> Grid {
        Grid::new(1, points, length).unwrap()
    }

    fn gaussian(grid: Grid, amp: f64) -> Field {
        Field::from_fn(grid, |x| amp * (-x[0] * x[0]).exp())
    }

    #[test]
    fn free_flow_at_zero_returns_data() {
        let g = line(16, 10.0);
        let (u0, u1) = (gaussian(g, 1.0), gaussian(g, -0.3));
        let s = apply_free(0.0, &u0, &u1, &params(0.7, 1.0), 1.2).unwrap();
        assert_eq!(s.u, u0);
        assert_eq!(s.ut, u1);
    }

    #[test]
    fn free_flow_single_mode_without_expansion() {
        let g = line(16, 2.0 * std::f64::consts::PI);
        let p = params(0.0, 1.0);
        let q = derive_constants(&p).unwrap().q;
        let u0 = Field::from_fn(g, |x| x[0].cos());
        let z = Field::zeros(g);
        let w = (1.0 + q).sqrt();
        for &t in &[0.3, 1.0, 2.5] {
            let s = apply_free(t, &u0, &z, &p, q).unwrap();
            let want = Field::from_fn(g, |x| (w * t).cos() * x[0].cos());
            let dwant = Field::from_fn(g, |x| -w * (w * t).sin() * x[0].cos());
            assert!(s.u.l2_distance(&want).unwrap() < 1e-12);
            assert!(s.ut.l2_distance(&dwant).unwrap() < 1e-12);
        }
    }

    #[test]
    fn free_flow_matches_rk4_when_expanding() {
        let g = line(32, 20.0);
        let p = params(1.0, 0.0);
        let d = derive_constants(&p).unwrap();
        let (u0, u1) = (gaussian(g, 1.0), Field::zeros(g));
        let exact = apply_free(1.0, &u0, &u1, &p, d.q).unwrap();
        let traj = direct_solve(&u0, &u1, 1.0, 0.005, Equation::ShiftedCubic, &p, &d, &DirectOptions::default())
            .unwrap();
        assert!(traj.last().u.l2_distance(&exact.u).unwrap() < 1e-8);
        assert!(traj.last().ut.l2_distance(&exact.ut).unwrap() < 1e-8);
    }

    #[test]
    fn rebased_free_flow_composes() {
        let g = line(32, 16.0);
        let p = params(0.6, 1.0);
        let q = derive_constants(&p).unwrap().q;
        let (u0, u1) = (gaussian(g, 1.0), gaussian(g, 0.5));
        let direct = apply_free(1.7, &u0, &u1, &p, q).unwrap();
        let mid = apply_free(0.8, &u0, &u1, &p, q).unwrap();
        let composed = apply_free_from(0.8, 1.7, &mid.u, &mid.ut, &p, q).unwrap();
        assert!(direct.u.l2_distance(&composed.u).unwrap() < 1e-9);
        assert!(direct.ut.l2_distance(&composed.ut).unwrap() < 1e-9);
    }

    #[test]
    fn duhamel_of_constant_source() {
        let g = line(8, 4.0);
        let p = params(0.0, 1.0);
        let q = derive_constants(&p).unwrap().q;
        let dt = 0.01;
        let forcing = Forcing::new(dt, (0..=200).map(|_| Field::constant(g, 1.0)).collect()).unwrap();
        let w2 = q;
        for &t in &[0.5, 1.0, 1.37, 2.0] {
            let s = duhamel_state(t, &forcing, &p, q).unwrap();
            let want = -(1.0 - (w2.sqrt() * t).cos()) / w2;
            let dwant = -(w2.sqrt() * t).sin() / w2.sqrt();
            assert!(s.u.samples().iter().all(|v| (v - want).abs() < 1e-9), "t = {t}");
            assert!(s.ut.samples().iter().all(|v| (v - dwant).abs() < 1e-9), "t = {t}");
        }
        assert!(duhamel_apply(0.0, &forcing, &p, q).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn duhamel_rejects_times_off_the_grid() {
        let g = line(8, 4.0);
        let p = params(0.0, 1.0);
        let forcing = Forcing::new(0.1, vec![Field::constant(g, 1.0); 11]).unwrap();
        assert!(matches!(duhamel_apply(1.5, &forcing, &p, 2.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(duhamel_apply(0.55, &forcing, &p, 2.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(duhamel_apply(-0.1, &forcing, &p, 2.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn duhamel_series_agrees_with_pointwise_evaluation() {
        let g = line(16, 8.0);
        let p = params(0.4, 1.0);
        let q = derive_constants(&p).unwrap().q;
        let dt = 0.05;
        let fields: Vec<Field> = (0..=21)
            .map(|j| {
                let t = j as f64 * dt;
                Field::from_fn(g, |x| (-t).exp() * (-x[0] * x[0]).exp())
            })
            .collect();
        let tgrid: Vec<f64> = (0..fields.len()).map(|j| j as f64 * dt).collect();
        let bank = ModeBank::new(g, &tgrid, &p, q).unwrap();
        let hat: Vec<SpectralField> = fields.iter().map(transform).collect();
        let series = duhamel_series(&bank, &hat, dt, p.c);
        let forcing = Forcing::new(dt, fields).unwrap();
        for j in [1, 2, 7, 20, 21] {
            let s = duhamel_state(tgrid[j], &forcing, &p, q).unwrap();
            assert!(s.u.l2_distance(&inverse(&series[j].0)).unwrap() < 1e-13);
            assert!(s.ut.l2_distance(&inverse(&series[j].1)).unwrap() < 1e-13);
        }
    }

    #[test]
    fn picard_is_the_free_flow_without_coupling() {
        let g = line(16, 10.0);
        let p = params(0.5, 0.0);
        let d = derive_constants(&p).unwrap();
        let (u0, u1) = (gaussian(g, 0.4), Field::zeros(g));
        let out = picard_solve(&u0, &u1, 1.0, 0.05, &p, &d, &PicardOptions::default()).unwrap();
        assert_eq!(out.iterations, 1);
        let free = free_trajectory(&u0, &u1, 1.0, 0.05, &p, d.q).unwrap();
        assert!(out.trajectory.max_l2_distance(&free).unwrap() < 1e-14);
    }

    #[test]
    fn picard_agrees_with_rk4_for_small_data() {
        let g = line(32, 16.0);
        let p = params(0.5, 1.0);
        let d = derive_constants(&p).unwrap();
        let (u0, u1) = (gaussian(g, 0.1), Field::zeros(g));
        let out = picard_solve(&u0, &u1, 1.0, 0.01, &p, &d, &PicardOptions::default()).unwrap();
        assert!(out.ratios.iter().all(|&r| r < 0.5), "{:?}", out.ratios);
        let rk = direct_solve(&u0, &u1, 1.0, 0.01, Equation::ShiftedCubic, &p, &d, &DirectOptions::default())
            .unwrap();
        assert!(out.trajectory.max_l2_distance(&rk).unwrap() < 1e-7);
    }

    #[test]
    fn picard_reports_large_data() {
        let g = line(16, 10.0);
        let p = params(0.5, 1.0);
        let d = derive_constants(&p).unwrap();
        let (u0, u1) = (gaussian(g, 50.0), Field::zeros(g));
        let err = picard_solve(&u0, &u1, 2.0, 0.05, &p, &d, &PicardOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NoContraction { .. }), "{err}");
    }

    #[test]
    fn picard_requires_positive_q() {
        let g = line(8, 4.0);
        let p = PhysicalParams {
            hubble: 4.0,
            ..PhysicalParams::default()
        };
        let d = derive_constants(&p).unwrap();
        assert!(d.q < 0.0);
        let z = Field::zeros(g);
        assert!(matches!(
            picard_solve(&z, &z, 1.0, 0.1, &p, &d, &PicardOptions::default()),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn vacua_are_stationary() {
        let g = line(16, 10.0);
        let p = params(0.5, 2.0);
        let d = derive_constants(&p).unwrap();
        let z = Field::zeros(g);
        let opts = DirectOptions::default();
        let shifted = direct_solve(&z, &z, 1.0, 0.01, Equation::ShiftedCubic, &p, &d, &opts).unwrap();
        assert_eq!(shifted.last().u.max_abs(), 0.0);
        let r0 = d.r0().unwrap();
        let phi = Field::constant(g, r0);
        let un = direct_solve(&phi, &z, 1.0, 0.01, Equation::Unshifted, &p, &d, &opts).unwrap();
        assert!(un.last().u.map(|v| v - r0).max_abs() < 1e-12);
        assert!(un.last().ut.max_abs() < 1e-12);
    }

    #[test]
    fn shifted_and_unshifted_forms_agree() {
        let g = line(32, 16.0);
        let p = params(0.5, 1.0);
        let d = derive_constants(&p).unwrap();
        let r0 = d.r0().unwrap();
        let psi0 = gaussian(g, 0.2);
        let z = Field::zeros(g);
        let opts = DirectOptions { save_every: 10, dealias: false };
        let psi = direct_solve(&psi0, &z, 1.0, 0.005, Equation::ShiftedPhi, &p, &d, &opts).unwrap();
        let phi0 = psi0.map(|v| v + r0);
        let phi = direct_solve(&phi0, &z, 1.0, 0.005, Equation::Unshifted, &p, &d, &opts).unwrap();
        let u1 = psi0.scale(0.25);
        let u = direct_solve(&psi0, &u1, 1.0, 0.005, Equation::ShiftedCubic, &p, &d, &opts).unwrap();
        for ((a, b), c) in psi.snapshots.iter().zip(&phi.snapshots).zip(&u.snapshots) {
            assert!(a.u.l2_distance(&b.u.map(|v| v - r0)).unwrap() < 1e-8);
            let w = (0.25 * a.t).exp();
            assert!(c.u.l2_distance(&a.u.scale(w)).unwrap() < 1e-8, "t = {}", a.t);
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let g = line(16, 2.0 * std::f64::consts::PI);
        let p = params(0.3, 0.0);
        let d = derive_constants(&p).unwrap();
        let u0 = Field::from_fn(g, |x| (2.0 * x[0]).cos());
        let z = Field::zeros(g);
        let exact = apply_free(2.0, &u0, &z, &p, d.q).unwrap();
        let err = |dt: f64| {
            let t = direct_solve(&u0, &z, 2.0, dt, Equation::ShiftedCubic, &p, &d, &DirectOptions::default()).unwrap();
            t.last().u.l2_distance(&exact.u).unwrap()
        };
        let ratio = err(0.04) / err(0.02);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn rejects_unstable_steps_and_bad_sampling() {
        let g = line(64, 10.0);
        let p = params(0.0, 1.0);
        let d = derive_constants(&p).unwrap();
        let z = Field::zeros(g);
        let r = direct_solve(&z, &z, 1.0, 0.5, Equation::ShiftedCubic, &p, &d, &DirectOptions::default());
        assert!(matches!(r, Err(Error::Unstable { .. })));
        let opts = DirectOptions { save_every: 3, dealias: false };
        assert!(direct_solve(&z, &z, 1.0, 0.01, Equation::ShiftedCubic, &p, &d, &opts).is_err());
    }

    #[test]
    fn overflow_is_recorded() {
        let g = line(8, 4.0);
        let p = PhysicalParams {
            hubble: 0.5,
            p: 2.0,
            ..PhysicalParams::default()
        };
        let d = derive_constants(&p).unwrap();
        let u0 = Field::constant(g, 5.0);
        let t = direct_solve(&u0, &u0, 10.0, 0.001, Equation::GaugeVariantBlowup, &p, &d, &DirectOptions::default())
            .unwrap();
        assert!(t.diverged_at.is_some());
        assert!(t.diverged_at.unwrap() < 2.0);
    }
}
