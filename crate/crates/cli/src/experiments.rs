use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use dskg_core::blowup::{integrate_w, lifespan_lower_bound, min_lhs_slope, w_closed_form, BModel, BlowupOptions, LifespanInputs};
use dskg_core::diagnostics::{energy_inequality_residual, energy_series, relative_energy_drift};
use dskg_core::mode_ode::{solve_mode, verify_mode_bounds, TABLE_HEADER, WRONSKIAN_TOL};
use dskg_core::params::{derive_constants, DerivedConstants, HubbleRegime};
use dskg_core::propagator::{direct_solve, picard_solve, DirectOptions, PicardOptions};
use dskg_core::scattering::{compute_asymptotic_state, scattering_deviation};
use dskg_core::snapshot;
use dskg_core::spectral::{d_norm, x_norm};
use dskg_core::{Equation, Field, StateSnapshot, Trajectory};

use crate::config::{Config, DataKind, Experiment, Method};
use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, value: f64) -> Self {
        Self {
            name: name.into(),
            passed,
            value,
        }
    }

    /// Passes when `value ≤ limit`.
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, value <= limit, value)
    }
}

/// CSV body with a header line; values are written with 17 significant digits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: String,
    pub body: String,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self {
            header: columns.join(","),
            body: String::new(),
        }
    }

    fn push(&mut self, row: &[f64]) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }

    pub fn rows(&self) -> usize {
        self.body.lines().count()
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunResult {
    pub checks: Vec<Check>,
    pub summary: BTreeMap<String, f64>,
    pub table: Option<Table>,
    pub snapshots: Vec<StateSnapshot>,
}

impl RunResult {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn note(&mut self, key: &str, value: f64) {
        self.summary.insert(key.to_string(), value);
    }
}

pub fn run(cfg: &Config) -> Result<RunResult, RunError> {
    match cfg.experiment {
        Experiment::Evolve => evolve(cfg),
        Experiment::EnergyAudit => energy_audit(cfg),
        Experiment::BlowupOde => blowup_ode(cfg),
        Experiment::BlowupPde => blowup_pde(cfg),
        Experiment::Lifespan => lifespan(cfg),
        Experiment::Scatter => scatter(cfg),
        Experiment::Modes => modes(cfg),
    }
}

/// `(u₀, u₁)` on the configured grid, with seeded noise added to `u₀`.
pub fn initial_data(cfg: &Config) -> Result<(Field, Field), RunError> {
    let grid = cfg.grid();
    let n = cfg.params.n;
    let (u0, u1) = match &cfg.data.kind {
        DataKind::Gaussian {
            amplitude,
            width,
            center,
        } => {
            let profile = Field::from_fn(grid, |x| {
                let r2: f64 = (0..n).map(|d| (x[d] - center[d]).powi(2)).sum();
                (-r2 / (width * width)).exp()
            });
            (profile.scale(*amplitude), profile.scale(cfg.data.velocity))
        }
        DataKind::Mode { k, amplitude } => {
            let l = cfg.length;
            let profile = Field::from_fn(grid, |x| {
                let phase: f64 = (0..n).map(|d| k[d] as f64 * x[d]).sum();
                (2.0 * PI * phase / l).cos()
            });
            (profile.scale(*amplitude), profile.scale(cfg.data.velocity))
        }
        DataKind::File(path) => {
            let snap = snapshot::load(path)?;
            if snap.grid() != &grid {
                return Err(RunError::Data(format!(
                    "snapshot {} has grid n = {}, N = {}, L = {}, config expects n = {}, N = {}, L = {}",
                    path.display(),
                    snap.grid().dim(),
                    snap.grid().points(),
                    snap.grid().length(),
                    n,
                    cfg.points,
                    cfg.length
                )));
            }
            (snap.u, snap.ut)
        }
    };
    if cfg.data.noise == 0.0 {
        return Ok((u0, u1));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut noisy = u0;
    for v in noisy.samples_mut() {
        *v += cfg.data.noise * rng.gen_range(-1.0..1.0);
    }
    Ok((noisy, u1))
}

fn derived(cfg: &Config) -> Result<DerivedConstants, RunError> {
    Ok(derive_constants(&cfg.params)?)
}

/// Saved snapshots nearest to each requested time; initial and final states by default.
fn pick_snapshots(cfg: &Config, traj: &Trajectory) -> Vec<StateSnapshot> {
    if !cfg.snapshots {
        return Vec::new();
    }
    if cfg.snapshot_times.is_empty() {
        let mut out = vec![traj.snapshots[0].clone()];
        if traj.len() > 1 {
            out.push(traj.last().clone());
        }
        return out;
    }
    cfg.snapshot_times
        .iter()
        .map(|&t| {
            let j = ((t / traj.dt).round() as usize).min(traj.len() - 1);
            traj.snapshots[j].clone()
        })
        .collect()
}

fn solve(cfg: &Config, u0: &Field, u1: &Field, d: &DerivedConstants, res: &mut RunResult) -> Result<Trajectory, RunError> {
    match cfg.method {
        Method::Direct => {
            let opts = DirectOptions {
                save_every: cfg.save_every,
                dealias: cfg.dealias,
            };
            Ok(direct_solve(u0, u1, cfg.t_end, cfg.dt, cfg.equation, &cfg.params, d, &opts)?)
        }
        Method::Picard => {
            let opts = PicardOptions {
                tol: cfg.tol,
                max_iter: cfg.max_iter,
                dealias: cfg.dealias,
            };
            let out = picard_solve(u0, u1, cfg.t_end, cfg.dt, &cfg.params, d, &opts)?;
            let worst = out.ratios.iter().copied().fold(0.0, f64::max);
            res.note("picard_iterations", out.iterations as f64);
            res.checks.push(Check::new("picard_contraction", worst < 1.0, worst));
            Ok(out.trajectory)
        }
    }
}

fn field_table(traj: &Trajectory) -> Table {
    let mut table = Table::new(&["t", "l2", "max_abs"]);
    for s in &traj.snapshots {
        table.push(&[s.t, s.u.l2_norm(), s.u.max_abs()]);
    }
    table
}

/// Balance residual scaled by the initial modified energy.
fn balance_check(traj: &Trajectory, cfg: &Config, d: &DerivedConstants, res: &mut RunResult) -> Result<(), RunError> {
    let regime = HubbleRegime::of(cfg.params.hubble);
    let residual = energy_inequality_residual(traj, &cfg.params, d, regime)?;
    let series = energy_series(traj, &cfg.params, d, regime)?;
    let scale = series[0].e0_tilde_integral.abs().max(1e-300);
    res.note("balance_residual", residual);
    res.checks.push(Check::at_most("energy_balance", residual / scale, 1e-6));
    Ok(())
}

fn evolve(cfg: &Config) -> Result<RunResult, RunError> {
    let d = derived(cfg)?;
    let (u0, u1) = initial_data(cfg)?;
    let mut res = RunResult::default();
    let traj = solve(cfg, &u0, &u1, &d, &mut res)?;
    res.note("snapshots", traj.len() as f64);
    res.note("final_time", traj.last().t);
    res.checks.push(Check::new("finite", traj.diverged_at.is_none(), traj.last().t));
    if traj.equation == Equation::ShiftedCubic && d.q >= 0.0 && traj.diverged_at.is_none() {
        let regime = HubbleRegime::of(cfg.params.hubble);
        res.note("x_norm", x_norm(&traj, cfg.mu, &cfg.params, regime)?);
        res.note("d_norm", d_norm(&u0, &u1, cfg.mu, &cfg.params)?);
        if cfg.params.hubble == 0.0 {
            let drift = relative_energy_drift(&traj, &cfg.params, &d)?;
            res.checks.push(Check::at_most("energy_drift", drift, 1e-6));
        } else {
            balance_check(&traj, cfg, &d, &mut res)?;
        }
    }
    res.table = Some(field_table(&traj));
    res.snapshots = pick_snapshots(cfg, &traj);
    Ok(res)
}

fn energy_audit(cfg: &Config) -> Result<RunResult, RunError> {
    if cfg.equation != Equation::ShiftedCubic {
        return Err(RunError::Data(format!(
            "energy audit applies to shifted_cubic, not {}",
            cfg.equation.name()
        )));
    }
    let d = derived(cfg)?;
    let (u0, u1) = initial_data(cfg)?;
    let mut res = RunResult::default();
    let traj = solve(cfg, &u0, &u1, &d, &mut res)?;
    if let Some(t) = traj.diverged_at {
        return Err(RunError::Data(format!("solution diverged at t = {t}")));
    }
    let regime = HubbleRegime::of(cfg.params.hubble);
    let series = energy_series(&traj, &cfg.params, &d, regime)?;
    let mut table = Table::new(&[
        "t",
        "e0",
        "e0_tilde",
        "dissipation_rate",
        "dissipation_tilde_rate",
        "dissipation_accum",
        "balance_residual",
        "flux_integral",
    ]);
    for r in &series {
        table.push(&[
            r.t,
            r.e0_integral,
            r.e0_tilde_integral,
            r.dissipation_rate,
            r.dissipation_tilde_rate,
            r.dissipation_accum,
            r.balance_residual,
            r.flux_integral,
        ]);
    }
    let scale = series[0].e0_tilde_integral.abs().max(1e-300);
    let flux = series.iter().map(|r| r.flux_integral.abs()).fold(0.0, f64::max);
    let min_rate = series.iter().map(|r| r.dissipation_rate).fold(f64::INFINITY, f64::min);
    balance_check(&traj, cfg, &d, &mut res)?;
    res.checks.push(Check::at_most("flux_vanishes", flux / scale, 1e-10));
    res.checks.push(Check::new("dissipation_nonnegative", min_rate >= -1e-14 * scale, min_rate));
    res.note("e0_tilde_initial", series[0].e0_tilde_integral);
    res.note("e0_tilde_final", series[series.len() - 1].e0_tilde_integral);
    res.note("dissipation_total", series[series.len() - 1].dissipation_accum);
    res.table = Some(table);
    res.snapshots = pick_snapshots(cfg, &traj);
    Ok(res)
}

fn blowup_options(cfg: &Config, tol: f64) -> BlowupOptions {
    BlowupOptions {
        tol,
        threshold: cfg.threshold,
        t_max: cfg.t_end,
        r_support0: cfg.r_support0,
        ..BlowupOptions::default()
    }
}

fn blowup_ode(cfg: &Config) -> Result<RunResult, RunError> {
    let d = derived(cfg)?;
    let big_m = d.big_m()?;
    let w1 = cfg.w1.unwrap_or(cfg.params.c * big_m * cfg.w0);
    let run = |tol| integrate_w(cfg.w0, w1, &cfg.params, &d, cfg.b_model, &blowup_options(cfg, tol));
    let traj = run(cfg.tol)?;
    let mut res = RunResult::default();
    for c in &traj.envelope_checks {
        res.checks.push(Check::new(c.bound, c.passed, c.margin));
    }
    if cfg.b_model != BModel::Zero {
        let t = traj.blowup_time;
        res.checks.push(Check::new("blowup_detected", t.is_some(), t.unwrap_or(f64::NAN)));
        if let Some(t) = t {
            let coarse = run(100.0 * cfg.tol)?.blowup_time.unwrap_or(f64::INFINITY);
            res.checks.push(Check::at_most("tolerance_agreement", (coarse - t).abs() / t, 1e-6));
        }
    }
    res.note("w1", w1);
    res.note("big_m", traj.big_m);
    res.note("t_star", traj.t_star);
    res.note("blowup_time", traj.blowup_time.unwrap_or(f64::NAN));
    res.note("big_b", traj.big_b.unwrap_or(f64::NAN));
    res.note("big_m1", traj.big_m1.unwrap_or(f64::NAN));
    res.note("comparison_exponent", traj.comparison_exponent);
    let mut table = Table::new(&["t", "w", "dw"]);
    for ((t, w), dw) in traj.tgrid.iter().zip(&traj.w).zip(&traj.dw) {
        table.push(&[*t, *w, *dw]);
    }
    res.table = Some(table);
    Ok(res)
}

fn blowup_pde(cfg: &Config) -> Result<RunResult, RunError> {
    let d = derived(cfg)?;
    let big_m = d.big_m()?;
    let c = cfg.params.c;
    let (u0, u1) = initial_data(cfg)?;
    let mut res = RunResult::default();
    let traj = solve(cfg, &u0, &u1, &d, &mut res)?;
    let (w0, w1) = (u0.integral(), u1.integral());
    res.note("w0", w0);
    res.note("w1", w1);
    res.note("big_m", big_m);
    res.checks.push(Check::new(
        "diverged",
        traj.diverged_at.is_some(),
        traj.diverged_at.unwrap_or(f64::NAN),
    ));
    let envelope = cfg.equation == Equation::GaugeVariantBlowup && w0 >= 0.0 && w1 >= c * big_m * w0;
    let mut table = Table::new(&["t", "w", "w_lower", "l2", "max_abs"]);
    let mut margin = f64::INFINITY;
    for s in &traj.snapshots {
        let w = s.u.integral();
        let lower = w_closed_form(s.t, w0, w1, big_m, c, None)?;
        if lower > 0.0 {
            margin = margin.min((w - lower) / lower);
        }
        table.push(&[s.t, w, lower, s.u.l2_norm(), s.u.max_abs()]);
    }
    if envelope {
        res.checks.push(Check::new("w_lower_envelope", margin >= -1e-8, margin));
    } else {
        res.note("w_lower_margin", margin);
    }
    res.table = Some(table);
    res.snapshots = pick_snapshots(cfg, &traj);
    Ok(res)
}

fn lifespan(cfg: &Config) -> Result<RunResult, RunError> {
    let d = derived(cfg)?;
    let d_mu0 = match cfg.d_mu0 {
        Some(v) => v,
        None => {
            let (u0, u1) = initial_data(cfg)?;
            d_norm(&u0, &u1, cfg.mu0, &cfg.params)?
        }
    };
    let mut inputs = LifespanInputs::from_params(&cfg.params, &d, d_mu0, cfg.mu0, cfg.big_c, cfg.c0);
    if let Some(q) = cfg.lifespan_q {
        inputs.q = q;
    }
    if let Some(r0) = cfg.lifespan_r0 {
        inputs.r0 = r0;
    }
    let cert = lifespan_lower_bound(&inputs, cfg.tol)?;
    let mut res = RunResult::default();
    res.note("d_mu0", d_mu0);
    res.note("q", inputs.q);
    res.note("r0", inputs.r0);
    res.note("lifespan", cert.t.unwrap_or(f64::INFINITY));
    res.note("lhs_at_lifespan", cert.lhs_at_t);
    res.checks.push(Check::at_most("lhs_at_bound", cert.lhs_at_t, 0.5 + 1e-12));
    let horizon = match cert.t {
        Some(t) => {
            let loose = lifespan_lower_bound(&inputs, 100.0 * cfg.tol)?;
            let shift = loose.t.map_or(f64::INFINITY, |l| (l - t).abs() / t);
            res.checks.push(Check::at_most("tolerance_stability", shift, 200.0 * cfg.tol));
            let slope = min_lhs_slope(&inputs, 4.0 * t, 400);
            res.checks.push(Check::new("lhs_increasing", slope > 0.0, slope));
            2.0 * t
        }
        None => cfg.t_end,
    };
    let mut table = Table::new(&["t", "lhs"]);
    let samples = 200;
    for j in 0..=samples {
        let t = horizon * j as f64 / samples as f64;
        table.push(&[t, inputs.lhs(t)]);
    }
    res.table = Some(table);
    Ok(res)
}

fn scatter(cfg: &Config) -> Result<RunResult, RunError> {
    if cfg.equation != Equation::ShiftedCubic {
        return Err(RunError::Data(format!(
            "scattering applies to shifted_cubic, not {}",
            cfg.equation.name()
        )));
    }
    let d = derived(cfg)?;
    let (u0, u1) = initial_data(cfg)?;
    let mut res = RunResult::default();
    let traj = solve(cfg, &u0, &u1, &d, &mut res)?;
    if let Some(t) = traj.diverged_at {
        return Err(RunError::Data(format!("solution diverged at t = {t}")));
    }
    let t_cut = cfg.t_cut.unwrap_or(traj.last().t);
    let ast = compute_asymptotic_state(&traj, &cfg.params, &d, t_cut, cfg.tail_tol)?;
    let predicted = 0.5 * cfg.params.n as f64 * cfg.params.hubble;
    res.note("t_cut", ast.t_cut);
    res.note("neglected_tail", ast.neglected_tail);
    res.note("decay_rate", ast.decay_rate);
    res.checks.push(Check::at_most("neglected_tail", ast.neglected_tail, cfg.tail_tol));
    res.checks.push(Check::new("decay_rate", ast.decay_rate >= 0.75 * predicted, ast.decay_rate));
    let mut table = Table::new(&["t", "h_norm", "tail", "dev_u", "dev_ut"]);
    let mut devs = Vec::new();
    for (j, s) in traj.snapshots.iter().enumerate().take(ast.h_norms.len()) {
        let (du, dut) = scattering_deviation(&traj, &ast, s.t, cfg.mu)?;
        devs.push(du);
        table.push(&[s.t, ast.h_norms[j], ast.tail[j], du, dut]);
    }
    let ratio = devs[devs.len() - 1] / devs[0].max(1e-300);
    res.checks.push(Check::at_most("deviation_decays", ratio, 0.1));
    res.table = Some(table);
    res.snapshots = pick_snapshots(cfg, &traj);
    Ok(res)
}

fn modes(cfg: &Config) -> Result<RunResult, RunError> {
    let d = derived(cfg)?;
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let tgrid: Vec<f64> = (0..=steps).map(|j| j as f64 * cfg.dt).collect();
    let mut res = RunResult::default();
    let mut table = Table {
        header: TABLE_HEADER.to_string(),
        body: String::new(),
    };
    for &k in &cfg.ksq {
        let sol = solve_mode(k, &tgrid, &cfg.params, d.q)?;
        let report = verify_mode_bounds(&sol, &cfg.params, d.q)?;
        res.checks.push(Check::at_most(
            format!("wronskian[ksq={k}]"),
            report.max_wronskian_error,
            WRONSKIAN_TOL,
        ));
        res.checks.push(Check::new(
            format!("amplitude_bounds[ksq={k}]"),
            report.bound_violations.is_empty(),
            report.bound_violations.len() as f64,
        ));
        let mut buf = Vec::new();
        sol.write_rows(&mut buf)?;
        table.body.push_str(&String::from_utf8(buf).expect("ascii rows"));
    }
    res.table = Some(table);
    Ok(res)
}
