//! Periodic-box discretisation, discrete Fourier transforms and Sobolev norms.
//!
//! Fields live on a uniform lattice of `N` points per axis covering the box
//! `[-L/2, L/2)ⁿ`. The transform is the unitary DFT, `û_k = N^{-n/2} Σ_j u_j e^{-2πi j·k/N}`,
//! so that with the cell volume `w = (L/N)ⁿ` both `Σ|u_j|² w` and `Σ|û_k|² w`
//! approximate the continuum `‖u‖²_{L²}`. Every norm and kernel uses this convention.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::params::{derive_constants, HubbleRegime, PhysicalParams};
use crate::propagator::Trajectory;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    points: usize,
    length: f64,
}

impl Grid {
    /// A lattice with `points` samples per axis (a power of two, at least 4) over a box of side `length`.
    pub fn new(dim: usize, points: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "points per axis must be a power of two >= 4, got {points}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "box length must be positive, got {length}"
            )));
        }
        Ok(Self { dim, points, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Total number of lattice sites, `Nⁿ`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    /// Parseval weight `(L/N)ⁿ`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Fundamental wavenumber `2π/L`.
    pub fn dk(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    /// Per-axis lattice indices of a flat (row-major) index.
    pub fn unflatten(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for a in (0..self.dim).rev() {
            idx[a] = flat % self.points;
            flat /= self.points;
        }
        idx
    }

    /// Signed wavenumber index `k ∈ {−N/2, …, N/2−1}` of an axis index.
    pub fn signed_mode(&self, j: usize) -> i64 {
        let n = self.points as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Signed mode multi-index of a flat spectral index.
    pub fn modes(&self, flat: usize) -> [i64; 3] {
        let idx = self.unflatten(flat);
        let mut k = [0i64; 3];
        for a in 0..self.dim {
            k[a] = self.signed_mode(idx[a]);
        }
        k
    }

    /// `Σ k_a²` for a flat spectral index; `|ξ|² = (2π/L)²·shell`.
    pub fn shell(&self, flat: usize) -> u64 {
        self.modes(flat).iter().map(|k| (k * k) as u64).sum()
    }

    /// `|ξ|²` of a flat spectral index.
    pub fn ksq(&self, flat: usize) -> f64 {
        self.dk().powi(2) * self.shell(flat) as f64
    }

    pub fn max_ksq(&self) -> f64 {
        let k = (self.points / 2) as f64;
        self.dk().powi(2) * k * k * self.dim as f64
    }

    /// Physical coordinates of a lattice site.
    pub fn coords(&self, flat: usize) -> [f64; 3] {
        let idx = self.unflatten(flat);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = -0.5 * self.length + idx[a] as f64 * h;
        }
        x
    }

    /// Flat index of the spectral coefficient at `-k`.
    pub fn mirror(&self, flat: usize) -> usize {
        let idx = self.unflatten(flat);
        let mut out = 0;
        for a in 0..self.dim {
            out = out * self.points + (self.points - idx[a]) % self.points;
        }
        out
    }

    fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Real samples of a field on the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    samples: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, samples })
    }

    /// Builds a field without the finiteness check; used by the time steppers,
    /// which handle overflow themselves.
    pub(crate) fn from_raw(grid: Grid, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), grid.len());
        Self { grid, samples }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            samples: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            samples: vec![value; grid.len()],
        }
    }

    /// Samples `f` at every lattice site; `f` receives the coordinates (unused axes are zero).
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        let samples = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Self { grid, samples }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.grid, self.samples.iter().map(|&v| f(v)).collect())
    }

    /// `self + a·other`.
    pub fn add_scaled(&self, a: f64, other: &Field) -> Result<Field> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Field::from_raw(
            self.grid,
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(x, y)| x + a * y)
                .collect(),
        ))
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    /// Lattice approximation of `∫ u dx`.
    pub fn integral(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// L² distance between two fields on the same grid.
    pub fn l2_distance(&self, other: &Field) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        let s: f64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok((s * self.grid.cell_volume()).sqrt())
    }
}

/// Fourier coefficients of a real field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Largest deviation from `û(−ξ) = conj(û(ξ))`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[i] - self.coeffs[self.grid.mirror(i)].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Multiplies every coefficient by a real symbol of `|ξ|²`.
    pub fn apply_symbol(&self, symbol: impl Fn(f64) -> f64) -> SpectralField {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * symbol(self.grid.ksq(i)))
            .collect();
        SpectralField {
            grid: self.grid,
            coeffs,
        }
    }

    /// `Σ_ξ weight(|ξ|²)·|û(ξ)|²·(L/N)ⁿ`.
    pub fn weighted_energy(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| weight(self.grid.ksq(i)) * c.norm_sqr())
            .sum();
        s * self.grid.cell_volume()
    }

    /// 2/3-rule truncation: zeroes every mode with some `|k_a| > N/3`.
    pub fn dealias(&mut self) {
        let cutoff = self.grid.points as f64 / 3.0;
        for i in 0..self.coeffs.len() {
            let k = self.grid.modes(i);
            if k[..self.grid.dim].iter().any(|&k| k.abs() as f64 > cutoff) {
                self.coeffs[i] = Complex64::new(0.0, 0.0);
            }
        }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

fn fft_nd(grid: &Grid, data: &mut [Complex64], forward: bool) {
    let n = grid.points;
    let (fwd, inv) = plans(n);
    let fft = if forward { fwd } else { inv };
    let total = data.len();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..grid.dim {
        let stride = n.pow((grid.dim - 1 - axis) as u32);
        if stride == 1 {
            fft.process(data);
            continue;
        }
        let block = stride * n;
        for base in (0..total).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    data[start + j * stride] = *v;
                }
            }
        }
    }
    let scale = (total as f64).sqrt().recip();
    for v in data.iter_mut() {
        *v *= scale;
    }
}

/// Unitary forward transform.
pub fn transform(field: &Field) -> SpectralField {
    let mut coeffs: Vec<Complex64> = field
        .samples
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft_nd(&field.grid, &mut coeffs, true);
    SpectralField {
        grid: field.grid,
        coeffs,
    }
}

/// Unitary inverse transform; the (round-off level) imaginary part is discarded.
pub fn inverse(sf: &SpectralField) -> Field {
    let mut data = sf.coeffs.clone();
    fft_nd(&sf.grid, &mut data, false);
    Field::from_raw(sf.grid, data.into_iter().map(|c| c.re).collect())
}

/// Like [`inverse`], but checks the grid against an expected one.
pub fn inverse_on(grid: &Grid, sf: &SpectralField) -> Result<Field> {
    grid.ensure_same(&sf.grid)?;
    Ok(inverse(sf))
}

/// Spectral partial derivative along `axis`; the Nyquist mode is dropped.
pub fn partial(field: &Field, axis: usize) -> Result<Field> {
    let grid = field.grid;
    if axis >= grid.dim {
        return Err(Error::InvalidParameter(format!(
            "axis {axis} out of range for a {}-dimensional grid",
            grid.dim
        )));
    }
    let mut sf = transform(field);
    let half = (grid.points / 2) as i64;
    for (i, c) in sf.coeffs.iter_mut().enumerate() {
        let k = grid.modes(i)[axis];
        *c = if k == -half {
            Complex64::new(0.0, 0.0)
        } else {
            *c * Complex64::new(0.0, grid.dk() * k as f64)
        };
    }
    Ok(inverse(&sf))
}

pub fn laplacian(field: &Field) -> Field {
    inverse(&transform(field).apply_symbol(|k2| -k2))
}

/// Applies the 2/3 rule to a physical-space field.
pub fn dealias(field: &Field) -> Field {
    let mut sf = transform(field);
    sf.dealias();
    inverse(&sf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SobolevKind {
    /// Weight `|ξ|^{2μ}`.
    Homogeneous,
    /// Weight `(1 + |ξ|²)^μ`.
    Inhomogeneous,
}

/// `(Σ (weight_μ(ξ) + shift)|û|² w)^{1/2}`, where `shift` adds `shift·‖u‖²_{L²}`.
pub fn sobolev_norm(sf: &SpectralField, mu: f64, kind: SobolevKind, shift: f64) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Sobolev order must be non-negative, got {mu}"
        )));
    }
    if !(shift >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "shift must be non-negative, got {shift}"
        )));
    }
    Ok(sobolev_norm_unchecked(sf, mu, kind, shift))
}

/// Inhomogeneous `H^s` norm for any real order, including negative ones.
pub fn inhomogeneous_norm(sf: &SpectralField, order: f64) -> f64 {
    sobolev_norm_unchecked(sf, order, SobolevKind::Inhomogeneous, 0.0)
}

fn sobolev_norm_unchecked(sf: &SpectralField, mu: f64, kind: SobolevKind, shift: f64) -> f64 {
    let weight = |k2: f64| -> f64 {
        let base = match kind {
            SobolevKind::Homogeneous => {
                if mu == 0.0 {
                    1.0
                } else {
                    k2.powf(mu)
                }
            }
            SobolevKind::Inhomogeneous => (1.0 + k2).powf(mu),
        };
        base + shift
    };
    sf.weighted_energy(weight).sqrt()
}

fn homogeneous(sf: &SpectralField, mu: f64) -> f64 {
    sobolev_norm_unchecked(sf, mu, SobolevKind::Homogeneous, 0.0)
}

/// Trapezoidal rule on uniformly spaced samples.
fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

/// Individual terms of the space-time norm, in the order they are summed.
pub fn x_norm_terms(
    traj: &Trajectory,
    mu: f64,
    params: &PhysicalParams,
    regime: HubbleRegime,
) -> Result<Vec<f64>> {
    regime.check(params.hubble)?;
    if !(mu >= 0.0) {
        return Err(Error::InvalidParameter(format!("order must be non-negative, got {mu}")));
    }
    let q = derive_constants(params)?.q;
    if q < 0.0 {
        return Err(Error::InvalidParameter(format!("x-norm requires Q >= 0, got {q}")));
    }
    let (c, h) = (params.c, params.hubble);
    let mut sup = [0.0f64; 3];
    let mut l2a = Vec::with_capacity(traj.snapshots.len());
    let mut l2b = Vec::with_capacity(traj.snapshots.len());
    for snap in &traj.snapshots {
        let u = transform(&snap.u);
        let ut = transform(&snap.ut);
        let (nu, nut, ngrad) = (homogeneous(&u, mu), homogeneous(&ut, mu), homogeneous(&u, mu + 1.0));
        match regime {
            HubbleRegime::Nonnegative => {
                let g = (-h * snap.t).exp() * ngrad;
                sup[0] = sup[0].max(nut);
                sup[1] = sup[1].max(g);
                sup[2] = sup[2].max(nu);
                l2a.push(g * g);
            }
            HubbleRegime::Negative => {
                let w = (h * snap.t).exp();
                sup[0] = sup[0].max(w * nut);
                sup[1] = sup[1].max(ngrad);
                sup[2] = sup[2].max(w * nu);
                l2a.push((w * nut).powi(2));
                l2b.push((w * nu).powi(2));
            }
        }
    }
    let dt = traj.dt;
    let mut terms = vec![sup[0] / c, sup[1], q.sqrt() * sup[2]];
    match regime {
        HubbleRegime::Nonnegative => terms.push(h.sqrt() * trapezoid(&l2a, dt).sqrt()),
        HubbleRegime::Negative => {
            terms.push((-h).sqrt() / c * trapezoid(&l2a, dt).sqrt());
            terms.push((-h * q).sqrt() * trapezoid(&l2b, dt).sqrt());
        }
    }
    Ok(terms)
}

/// Discrete space-time norm of a trajectory: sup-in-time energy pieces plus the
/// Hubble-weighted dissipation integrals (four terms for `H ≥ 0`, five for `H < 0`).
pub fn x_norm(
    traj: &Trajectory,
    mu: f64,
    params: &PhysicalParams,
    regime: HubbleRegime,
) -> Result<f64> {
    Ok(x_norm_terms(traj, mu, params, regime)?.iter().sum())
}

/// Size of the initial data, `c⁻¹‖u₁‖_{Ḣ^μ} + ‖∇u₀‖_{Ḣ^μ} + √Q‖u₀‖_{Ḣ^μ}`.
pub fn d_norm(u0: &Field, u1: &Field, mu: f64, params: &PhysicalParams) -> Result<f64> {
    u0.grid.ensure_same(&u1.grid)?;
    if !(mu >= 0.0) {
        return Err(Error::InvalidParameter(format!("order must be non-negative, got {mu}")));
    }
    let q = derive_constants(params)?.q;
    if q < 0.0 {
        return Err(Error::InvalidParameter(format!("data norm requires Q >= 0, got {q}")));
    }
    let (s0, s1) = (transform(u0), transform(u1));
    Ok(homogeneous(&s1, mu) / params.c + homogeneous(&s0, mu + 1.0) + q.sqrt() * homogeneous(&s0, mu))
}
