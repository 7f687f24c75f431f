//! Per-wavenumber fundamental system `ρ'' + ã(t)ρ = 0`.
//!
//! `ρ₀` and `ρ₁` start from `(1, 0)` and `(0, 1)`. Lifted to Fourier multipliers
//! they are the free propagators, and their bilinear combinations `ρ₁₂`, `ρ₂₂`
//! are the Duhamel kernel symbols.
//!
//! For `H ≠ 0` the pair is integrated with [`Dop853`] in amplitude-scaled
//! variables `(ρ₀, Dρ₀/ω, ωρ₁, Dρ₁)` with `ω(t)² = c²e^{−2Ht}|ξ|² + c²|Q| + 1`,
//! which keeps every component of order one even when `ã` spans many decades.
//! For `H = 0` the closed forms are used.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::ode::{Dop853, Tolerance};
use crate::params::PhysicalParams;
use crate::spectral::Grid;
use crate::{Error, Result};

pub const MODE_TOL: f64 = 3e-15;

/// `ã(t, ξ) = c²e^{−2Ht}|ξ|² + c²Q`.
pub fn a_tilde(t: f64, ksq: f64, params: &PhysicalParams, q: f64) -> f64 {
    let c2 = params.c * params.c;
    c2 * (-2.0 * params.hubble * t).exp() * ksq + c2 * q
}

/// Values of the fundamental pair at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSample {
    pub ksq: f64,
    pub t: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub drho0: f64,
    pub drho1: f64,
}

impl ModeSample {
    pub fn wronskian(&self) -> f64 {
        self.rho0 * self.drho1 - self.rho1 * self.drho0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSolution {
    pub ksq: f64,
    pub tgrid: Vec<f64>,
    pub rho0: Vec<f64>,
    pub rho1: Vec<f64>,
    pub drho0: Vec<f64>,
    pub drho1: Vec<f64>,
}

impl ModeSolution {
    pub fn len(&self) -> usize {
        self.tgrid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tgrid.is_empty()
    }

    pub fn sample(&self, i: usize) -> ModeSample {
        ModeSample {
            ksq: self.ksq,
            t: self.tgrid[i],
            rho0: self.rho0[i],
            rho1: self.rho1[i],
            drho0: self.drho0[i],
            drho1: self.drho1[i],
        }
    }

    pub fn last(&self) -> ModeSample {
        self.sample(self.len() - 1)
    }

    pub fn wronskian_errors(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| (self.sample(i).wronskian() - 1.0).abs())
            .collect()
    }

    pub fn max_wronskian_error(&self) -> f64 {
        self.wronskian_errors().into_iter().fold(0.0, f64::max)
    }

    /// Writes `ksq,t,rho0,rho1,drho0,drho1,wronskian_error` rows (no header).
    pub fn write_rows(&self, out: &mut impl Write) -> std::io::Result<()> {
        for i in 0..self.len() {
            let s = self.sample(i);
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.ksq,
                s.t,
                s.rho0,
                s.rho1,
                s.drho0,
                s.drho1,
                (s.wronskian() - 1.0).abs()
            )?;
        }
        Ok(())
    }
}

pub const TABLE_HEADER: &str = "ksq,t,rho0,rho1,drho0,drho1,wronskian_error";

fn check_grid(tgrid: &[f64]) -> Result<()> {
    if tgrid.is_empty() {
        return Err(Error::InvalidParameter("empty time grid".into()));
    }
    for (i, w) in tgrid.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonMonotoneGrid { index: i + 1 });
        }
    }
    if tgrid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("time grid must be finite".into()));
    }
    Ok(())
}

/// Solves the fundamental system on `tgrid`, which must start at 0.
pub fn solve_mode(ksq: f64, tgrid: &[f64], params: &PhysicalParams, q: f64) -> Result<ModeSolution> {
    check_grid(tgrid)?;
    if tgrid[0] != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "time grid must start at 0, got {}",
            tgrid[0]
        )));
    }
    solve_mode_from(ksq, tgrid, params, q)
}

/// Fundamental system re-based at `tgrid[0]`: initial data `(1,0)`, `(0,1)` are
/// imposed there while `ã` keeps its absolute time dependence.
pub fn solve_mode_from(
    ksq: f64,
    tgrid: &[f64],
    params: &PhysicalParams,
    q: f64,
) -> Result<ModeSolution> {
    check_grid(tgrid)?;
    if !(ksq >= 0.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need ksq >= 0 and finite Q, got ksq = {ksq}, Q = {q}"
        )));
    }
    if params.hubble == 0.0 {
        Ok(closed_form(ksq, tgrid, params, q))
    } else {
        integrate(ksq, tgrid, params, q)
    }
}

fn closed_form(ksq: f64, tgrid: &[f64], params: &PhysicalParams, q: f64) -> ModeSolution {
    let a = a_tilde(0.0, ksq, params, q);
    let s0 = tgrid[0];
    let n = tgrid.len();
    let mut ms = ModeSolution {
        ksq,
        tgrid: tgrid.to_vec(),
        rho0: Vec::with_capacity(n),
        rho1: Vec::with_capacity(n),
        drho0: Vec::with_capacity(n),
        drho1: Vec::with_capacity(n),
    };
    for &t in tgrid {
        let tau = t - s0;
        let (r0, r1, d0, d1) = if a > 0.0 {
            let w = a.sqrt();
            let (s, c) = (w * tau).sin_cos();
            (c, s / w, -w * s, c)
        } else if a < 0.0 {
            let k = (-a).sqrt();
            let (s, c) = ((k * tau).sinh(), (k * tau).cosh());
            (c, s / k, k * s, c)
        } else {
            (1.0, tau, 0.0, 1.0)
        };
        ms.rho0.push(r0);
        ms.rho1.push(r1);
        ms.drho0.push(d0);
        ms.drho1.push(d1);
    }
    ms
}

fn integrate(ksq: f64, tgrid: &[f64], params: &PhysicalParams, q: f64) -> Result<ModeSolution> {
    let c2 = params.c * params.c;
    let h = params.hubble;
    let omega_sq = move |t: f64| c2 * (-2.0 * h * t).exp() * ksq + c2 * q.abs() + 1.0;
    let mut rhs = |t: f64, y: &[f64; 4]| -> [f64; 4] {
        let growth = c2 * (-2.0 * h * t).exp() * ksq;
        let a = growth + c2 * q;
        let w2 = growth + c2 * q.abs() + 1.0;
        let w = w2.sqrt();
        let dlog = -h * growth / w2;
        [
            w * y[1],
            -a * y[0] / w - dlog * y[1],
            w * y[3] + dlog * y[2],
            -a * y[2] / w,
        ]
    };
    let n = tgrid.len();
    let mut ms = ModeSolution {
        ksq,
        tgrid: tgrid.to_vec(),
        rho0: Vec::with_capacity(n),
        rho1: Vec::with_capacity(n),
        drho0: Vec::with_capacity(n),
        drho1: Vec::with_capacity(n),
    };
    let mut solver = Dop853::new(tgrid[0], [1.0, 0.0, 0.0, 1.0], Tolerance::both(MODE_TOL));
    for &t in tgrid {
        solver.advance_to(&mut rhs, t)?;
        let y = solver.y();
        let w = omega_sq(t).sqrt();
        ms.rho0.push(y[0]);
        ms.drho0.push(y[1] * w);
        ms.rho1.push(y[2] / w);
        ms.drho1.push(y[3]);
    }
    Ok(ms)
}

/// `(ρ₁₂(t,s), ρ₂₂(t,s))` from the pair evaluated at `t` and at `s`.
pub fn kernel_coeffs(at_t: &ModeSample, at_s: &ModeSample) -> Result<(f64, f64)> {
    if at_t.ksq != at_s.ksq {
        return Err(Error::ModeMismatch {
            left: at_t.ksq,
            right: at_s.ksq,
        });
    }
    let rho12 = -at_t.rho0 * at_s.rho1 + at_t.rho1 * at_s.rho0;
    let rho22 = -at_t.drho0 * at_s.rho1 + at_t.drho1 * at_s.rho0;
    Ok((rho12, rho22))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundViolation {
    pub bound: &'static str,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub max_wronskian_error: f64,
    pub bound_violations: Vec<BoundViolation>,
    pub all_passed: bool,
}

pub const BOUND_TOL: f64 = 1e-8;
pub const WRONSKIAN_TOL: f64 = 1e-10;

/// Checks the amplitude bounds that hold when `ã` is monotone, and the Wronskian.
///
/// `H ≥ 0` (decreasing `ã`): `|ρ₀| ≤ √(ã(0)/ã)`, `|Dρ₀| ≤ √ã(0)`, `|ρ₁| ≤ 1/√ã`, `|Dρ₁| ≤ 1`.
/// `H ≤ 0` (increasing `ã`): `|ρ₀| ≤ 1`, `|Dρ₀| ≤ √ã`, `|ρ₁| ≤ 1/√ã(0)`, `|Dρ₁| ≤ √(ã/ã(0))`.
/// At `H = 0` both sets are checked. `ã` must be non-negative on the grid; bounds
/// with `ã = 0` in a denominator are skipped.
pub fn verify_mode_bounds(ms: &ModeSolution, params: &PhysicalParams, q: f64) -> Result<BoundReport> {
    let a: Vec<f64> = ms
        .tgrid
        .iter()
        .map(|&t| a_tilde(t, ms.ksq, params, q))
        .collect();
    if let Some(i) = a.iter().position(|&v| v < 0.0) {
        return Err(Error::RegimeMismatch(format!(
            "amplitude bounds need a_tilde >= 0, got {} at t = {}",
            a[i], ms.tgrid[i]
        )));
    }
    let a0 = a_tilde(ms.tgrid[0], ms.ksq, params, q);
    let h = params.hubble;
    let mut violations = Vec::new();
    let mut check = |bound: &'static str, t: f64, lhs: f64, rhs: f64| {
        if rhs.is_finite() && lhs > rhs + BOUND_TOL * rhs.max(1.0) {
            violations.push(BoundViolation { bound, t, lhs, rhs });
        }
    };
    for i in 0..ms.len() {
        let s = ms.sample(i);
        let at = a[i];
        if h >= 0.0 {
            if at > 0.0 {
                check("rho0<=sqrt(a0/a)", s.t, s.rho0.abs(), (a0 / at).sqrt());
                check("rho1<=1/sqrt(a)", s.t, s.rho1.abs(), 1.0 / at.sqrt());
            }
            check("drho0<=sqrt(a0)", s.t, s.drho0.abs(), a0.sqrt());
            check("drho1<=1", s.t, s.drho1.abs(), 1.0);
        }
        if h <= 0.0 {
            check("rho0<=1", s.t, s.rho0.abs(), 1.0);
            check("drho0<=sqrt(a)", s.t, s.drho0.abs(), at.sqrt());
            if a0 > 0.0 {
                check("rho1<=1/sqrt(a0)", s.t, s.rho1.abs(), 1.0 / a0.sqrt());
                check("drho1<=sqrt(a/a0)", s.t, s.drho1.abs(), (at / a0).sqrt());
            }
        }
    }
    let max_wronskian_error = ms.max_wronskian_error();
    if max_wronskian_error > WRONSKIAN_TOL {
        let i = ms
            .wronskian_errors()
            .iter()
            .enumerate()
            .fold((0, 0.0), |m, (i, &e)| if e > m.1 { (i, e) } else { m })
            .0;
        violations.push(BoundViolation {
            bound: "wronskian",
            t: ms.tgrid[i],
            lhs: max_wronskian_error,
            rhs: WRONSKIAN_TOL,
        });
    }
    Ok(BoundReport {
        max_wronskian_error,
        all_passed: violations.is_empty(),
        bound_violations: violations,
    })
}

/// Fundamental pairs for every wavenumber shell of a grid, sharing one time grid.
#[derive(Debug, Clone)]
pub struct ModeBank {
    grid: Grid,
    shell_index: Vec<usize>,
    solutions: Vec<ModeSolution>,
}

impl ModeBank {
    /// One solve per distinct `|ξ|²`; shells are solved in parallel.
    pub fn new(grid: Grid, tgrid: &[f64], params: &PhysicalParams, q: f64) -> Result<Self> {
        check_grid(tgrid)?;
        let mut shells: BTreeMap<u64, usize> = BTreeMap::new();
        let raw: Vec<u64> = (0..grid.len()).map(|i| grid.shell(i)).collect();
        for &s in &raw {
            let next = shells.len();
            shells.entry(s).or_insert(next);
        }
        let mut order: Vec<(u64, usize)> = shells.iter().map(|(&s, &i)| (s, i)).collect();
        order.sort_by_key(|&(_, i)| i);
        let dk2 = grid.dk().powi(2);
        let solutions = order
            .par_iter()
            .map(|&(s, _)| solve_mode_from(dk2 * s as f64, tgrid, params, q))
            .collect::<Result<Vec<_>>>()?;
        let shell_index = raw.iter().map(|s| shells[s]).collect();
        Ok(Self {
            grid,
            shell_index,
            solutions,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shells(&self) -> &[ModeSolution] {
        &self.solutions
    }

    /// Shell number of a flat spectral index.
    pub fn shell_of(&self, flat: usize) -> usize {
        self.shell_index[flat]
    }

    pub fn solution(&self, flat: usize) -> &ModeSolution {
        &self.solutions[self.shell_index[flat]]
    }

    pub fn tgrid(&self) -> &[f64] {
        &self.solutions[0].tgrid
    }
}
