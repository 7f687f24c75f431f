use proptest::prelude::*;

use dskg_core::blowup::{lifespan_lower_bound, w_closed_form, LifespanInputs};
use dskg_core::params::derive_constants;
use dskg_core::propagator::{apply_free, direct_solve, duhamel_state, DirectOptions, Forcing};
use dskg_core::snapshot::{read_snapshot, write_snapshot};
use dskg_core::spectral::{inhomogeneous_norm, transform};
use dskg_core::{Equation, Field, Grid, PhysicalParams, StateSnapshot};

fn bump(grid: Grid, amp: f64, shift: f64) -> Field {
    Field::from_fn(grid, |x| amp * (-(x[0] - shift).powi(2)).exp())
}

fn params(hubble: f64, lambda: f64) -> PhysicalParams {
    PhysicalParams {
        hubble,
        lambda,
        ..PhysicalParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn free_flow_is_linear(a in -2.0..2.0f64, b in -2.0..2.0f64, h in -0.4..0.6f64, t in 0.1..3.0f64) {
        let g = Grid::new(1, 32, 12.0).unwrap();
        let p = params(h, 1.0);
        let q = derive_constants(&p).unwrap().q;
        let (u, v) = (bump(g, 1.0, 0.0), bump(g, 0.5, 2.0));
        let zero = Field::zeros(g);
        let mixed = u.scale(a).add_scaled(b, &v).unwrap();
        let lhs = apply_free(t, &mixed, &zero, &p, q).unwrap();
        let fu = apply_free(t, &u, &zero, &p, q).unwrap();
        let fv = apply_free(t, &v, &zero, &p, q).unwrap();
        let rhs = fu.u.scale(a).add_scaled(b, &fv.u).unwrap();
        prop_assert!(lhs.u.l2_distance(&rhs).unwrap() <= 1e-12 * (1.0 + rhs.l2_norm()));
    }

    #[test]
    fn snapshot_round_trip(dim in 1usize..=3, points in prop::sample::select(vec![4usize, 8]), seed in 0u64..1000, t in -5.0..5.0f64) {
        let g = Grid::new(dim, points, 3.0).unwrap();
        let s = seed as f64;
        let u = Field::from_fn(g, |x| (x[0] + s).sin() * (1.0 + x[1] * x[2]));
        let ut = Field::from_fn(g, |x| (x[0] * s).cos() - x[2]);
        let snap = StateSnapshot::new(t, u, ut).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &snap).unwrap();
        prop_assert_eq!(read_snapshot(&mut buf.as_slice()).unwrap(), snap);
    }

    #[test]
    fn duhamel_is_linear_in_forcing(a in -3.0..3.0f64, h in 0.0..0.6f64) {
        let g = Grid::new(1, 16, 10.0).unwrap();
        let p = params(h, 1.0);
        let q = derive_constants(&p).unwrap().q;
        let dt = 0.05;
        let fields = |scale: f64| -> Vec<Field> {
            (0..21).map(|j| bump(g, scale * (1.0 + j as f64 * dt).recip(), 0.5)).collect()
        };
        let base = duhamel_state(1.0, &Forcing::new(dt, fields(1.0)).unwrap(), &p, q).unwrap();
        let scaled = duhamel_state(1.0, &Forcing::new(dt, fields(a)).unwrap(), &p, q).unwrap();
        let expect = base.u.scale(a);
        prop_assert!(scaled.u.l2_distance(&expect).unwrap() <= 1e-13 * (1.0 + expect.l2_norm()));
    }

    #[test]
    fn closed_form_is_linear_without_mass(w0 in 0.0..5.0f64, w1 in 0.0..5.0f64, t in 0.0..10.0f64) {
        let w = w_closed_form(t, w0, w1, 0.0, 1.0, None).unwrap();
        prop_assert!((w - (w0 + w1 * t)).abs() <= 1e-12 * (1.0 + w.abs()));
    }

    #[test]
    fn lifespan_shrinks_with_data_size(d in 0.01..1.0f64, factor in 1.1..4.0f64) {
        let base = LifespanInputs {
            n: 3,
            c: 1.0,
            lambda: 1.0,
            hubble: -0.5,
            q: 1.0,
            r0: 0.2,
            mu0: 0.0,
            d_mu0: d,
            big_c: 1.0,
            c0: 1.0,
        };
        let bigger = LifespanInputs { d_mu0: d * factor, ..base };
        let t_small = lifespan_lower_bound(&base, 1e-12).unwrap().t.unwrap();
        let t_big = lifespan_lower_bound(&bigger, 1e-12).unwrap().t.unwrap();
        prop_assert!(t_big < t_small);
    }

    #[test]
    fn inhomogeneous_norm_grows_with_order(lo in -1.0..1.0f64, gap in 0.1..1.0f64, amp in 0.1..2.0f64) {
        let g = Grid::new(2, 16, 8.0).unwrap();
        let sf = transform(&Field::from_fn(g, |x| amp * (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp()));
        prop_assert!(inhomogeneous_norm(&sf, lo) < inhomogeneous_norm(&sf, lo + gap));
    }
}

#[test]
fn linear_direct_solve_matches_free_flow() {
    let g = Grid::new(1, 32, 16.0).unwrap();
    for h in [-0.3, 0.0, 0.4] {
        let p = params(h, 0.0);
        let d = derive_constants(&p).unwrap();
        let u0 = bump(g, 0.3, 0.0);
        let u1 = bump(g, 0.1, 1.0);
        let traj = direct_solve(&u0, &u1, 2.0, 0.005, Equation::ShiftedCubic, &p, &d, &DirectOptions::default()).unwrap();
        let exact = apply_free(2.0, &u0, &u1, &p, d.q).unwrap();
        let end = traj.last();
        assert!(end.u.l2_distance(&exact.u).unwrap() < 1e-8, "H = {h}");
        assert!(end.ut.l2_distance(&exact.ut).unwrap() < 1e-8, "H = {h}");
    }
}

#[test]
fn flat_evolution_is_time_reversible() {
    let g = Grid::new(1, 64, 20.0).unwrap();
    let p = params(0.0, 1.0);
    let d = derive_constants(&p).unwrap();
    let opts = DirectOptions::default();
    let u0 = bump(g, 0.4, 0.0);
    let u1 = bump(g, 0.2, -1.0);
    let fwd = direct_solve(&u0, &u1, 1.5, 0.002, Equation::ShiftedCubic, &p, &d, &opts).unwrap();
    let end = fwd.last();
    let back = direct_solve(&end.u, &end.ut.scale(-1.0), 1.5, 0.002, Equation::ShiftedCubic, &p, &d, &opts).unwrap();
    let last = back.last();
    assert!(last.u.l2_distance(&u0).unwrap() < 1e-9);
    assert!(last.ut.scale(-1.0).l2_distance(&u1).unwrap() < 1e-9);
}
