//! Library results against the independent references in `common`.

mod common;

use fdrelay::linalg::{ComplexMatrix, HermitianMatrix};
use fdrelay::model::{db_to_linear, draw_channels, evaluate_performance, DesignPoint, SystemParams};
use fdrelay::relay::{build_relay_sdp, solve_relay_stage};
use fdrelay::sdp::{certify_solution, solve_sdp, SdpSettings, SdpStatus};
use fdrelay::subproblems::{optimize_power, optimize_rho, pb_bounds, PowerCase};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn two_by_one() -> SystemParams {
    SystemParams {
        m_t: 2,
        m_r: 1,
        gamma_e: db_to_linear(-5.0),
        ..SystemParams::default()
    }
}

#[test]
fn relay_stage_matches_exhaustive_reference() {
    let params = two_by_one();
    let mut checked = 0;
    for seed in 0..12u64 {
        let ch = draw_channels(&params, seed);
        let solver = solve_relay_stage(&ch, &params, 0.5, params.p_max, params.p_max, seed).unwrap();
        let oracle = relay_oracle_2x1(&ch, &params, 0.5, params.p_max, params.p_max);
        assert_eq!(solver.is_feasible(), oracle.is_some(), "seed {seed}");
        if let Some(o) = oracle {
            checked += 1;
            let r = solver.objective / o;
            assert!((0.95..=1.01).contains(&r), "seed {seed}: ratio {r}");
            assert!(solver.relaxation_bound <= solver.objective * (1.0 + 1e-4));
        }
    }
    assert!(checked >= 3);
}

#[test]
fn relaxation_solutions_certify() {
    let params = SystemParams::default();
    for seed in 0..10u64 {
        let ch = draw_channels(&params, seed);
        let p = build_relay_sdp(&ch, &params, 0.5, params.p_max, params.p_max).unwrap();
        let s = solve_sdp(&p, &SdpSettings::default()).unwrap();
        if s.status == SdpStatus::Optimal {
            assert!(certify_solution(&p, &s).unwrap().feasible, "seed {seed}");
        }
    }
}

#[test]
fn performance_matches_scalar_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..200u64 {
        let params = SystemParams {
            m_t: rng.random_range(2..=4),
            m_r: 1,
            sigma2_r: rng.random_range(0.1..2.0),
            ..SystemParams::default()
        };
        let ch = draw_channels(&params, seed);
        let w = ComplexMatrix::from_fn(params.m_t, 1, |_, _| cn(&mut rng, 1.0));
        let g = ComplexMatrix::from_fn(params.m_t, 2, |_, _| cn(&mut rng, 1.0));
        let d = DesignPoint {
            w,
            q: HermitianMatrix::new(&g * g.adjoint()).unwrap(),
            rho: rng.random_range(0.01..0.99),
            p_a: rng.random_range(0.1..10.0),
            p_b: rng.random_range(0.1..10.0),
        };
        let lib = evaluate_performance(&d, &ch, &params);
        let r = scalar_perf_of(&d, &ch, &params);
        for (a, b) in [
            (lib.gamma_a, r.gamma_a),
            (lib.gamma_b, r.gamma_b),
            (lib.gamma_e, r.gamma_e),
            (lib.relay_power, r.relay_power),
            (lib.harvested, r.harvested),
            (lib.total_power, r.total_power),
            (lib.zf_residual, r.zf_residual),
        ] {
            assert!(rel(a, b) < 1e-10, "seed {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn power_bounds_match_bisection() {
    let params = SystemParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..40u64 {
        let ch = draw_channels(&params, seed);
        let (w, q) = random_relay_design(&ch, &mut rng, 1.0, 0.5);
        let rho = rng.random_range(0.1..0.9);
        let p_a = rng.random_range(0.5..10.0);
        let b = pb_bounds(&ch, &params, &w, &q, rho, p_a);
        let c = Plain::from(&ch);
        let (wr, qr) = (rows(&w), rows(q.matrix()));
        assert!(rel(b.pb_min, bisect_pb_min(&wr, &qr, rho, p_a, &c, &params)) < 1e-8);
        assert!(rel(b.pb_max, bisect_pb_max(&wr, &qr, rho, p_a, &c, &params)) < 1e-8);
    }
}

#[test]
fn split_ratio_matches_grid() {
    let params = SystemParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut feasible = 0;
    for seed in 0..40u64 {
        let ch = draw_channels(&params, seed);
        let relay = solve_relay_stage(&ch, &params, 0.5, params.p_max, params.p_max, seed).unwrap();
        if !relay.is_feasible() {
            continue;
        }
        let p_a = params.p_max * rng.random_range(0.5..1.0);
        let p_b = params.p_max * rng.random_range(0.5..1.0);
        let r = optimize_rho(&ch, &params, &relay.w, &relay.q, p_a, p_b);
        let g = rho_grid(&rows(&relay.w), &rows(relay.q.matrix()), p_a, p_b, &Plain::from(&ch), &params);
        match (r.rho, g) {
            (Some(a), Some(b)) => {
                feasible += 1;
                assert!((a - b).abs() < 1e-4, "seed {seed}: {a} vs {b}");
            }
            (None, None) => {}
            other => panic!("seed {seed}: {other:?}"),
        }
    }
    assert!(feasible >= 3);
}

/// Grid over the set the power stage searches: one source at `P_max`, the
/// other on `(0, P_max]` with step `P_max/2000`.
fn boundary_grid(t: &dyn Fn(f64, f64) -> Option<f64>, p_max: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for k in 1..=2000 {
        let p = p_max * k as f64 / 2000.0;
        for v in [t(p_max, p), t(p, p_max)].into_iter().flatten() {
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    best
}

fn loose_eve() -> SystemParams {
    SystemParams {
        gamma_e: 10.0,
        ..SystemParams::default()
    }
}

/// Objective of the scalar model at `(P_A, P_B)` when every constraint holds.
fn power_objective<'a>(
    d: &'a DesignPoint,
    ch: &'a fdrelay::model::ChannelRealization,
    params: &'a SystemParams,
) -> impl Fn(f64, f64) -> Option<f64> + 'a {
    let c = Plain::from(ch);
    let (wr, qr) = (rows(&d.w), rows(d.q.matrix()));
    move |p_a, p_b| {
        let p = scalar_perf(&wr, &qr, d.rho, p_a, p_b, &c, params);
        (worst_margin(&p, params) >= 0.0).then_some(p.total_power)
    }
}

#[test]
fn power_search_matches_boundary_grid() {
    let params = loose_eve();
    let mut checked = 0;
    for seed in 0..30u64 {
        let ch = draw_channels(&params, seed);
        let relay = solve_relay_stage(&ch, &params, 0.5, 0.5 * params.p_max, params.p_max, seed).unwrap();
        if !relay.is_feasible() {
            continue;
        }
        let d = DesignPoint {
            w: relay.w.clone(),
            q: relay.q.clone(),
            rho: 0.5,
            p_a: 0.0,
            p_b: 0.0,
        };
        let f = power_objective(&d, &ch, &params);
        let grid = boundary_grid(&f, params.p_max);
        let res = optimize_power(&ch, &params, &d.w, &d.q, d.rho);
        match (res, grid) {
            (Some(r), Some(g)) => {
                checked += 1;
                assert!(r.objective <= g * (1.0 + 1e-9), "seed {seed}: {} > {g}", r.objective);
                assert!(r.objective >= g * (1.0 - 0.005), "seed {seed}");
                let at_max = match r.case_used {
                    PowerCase::AAtMax => r.p_a,
                    PowerCase::BAtMax => r.p_b,
                };
                assert_eq!(at_max, params.p_max);
            }
            (None, None) => {}
            other => panic!("seed {seed}: {other:?}"),
        }
    }
    assert!(checked >= 5);
}

/// The power stage keeps one source at `P_max`. For a total-power objective
/// the free optimum usually has both SINR constraints tight with both
/// powers below `P_max`, so on designs with slack a full 2-D grid finds
/// markedly lower totals. Kept to document the gap.
#[test]
#[ignore = "one-source-at-maximum search is not the free 2-D optimum; see README"]
fn power_search_matches_full_grid() {
    let params = loose_eve();
    let mut worst = 1.0f64;
    for seed in 0..10u64 {
        let ch = draw_channels(&params, seed);
        let relay = solve_relay_stage(&ch, &params, 0.5, 0.5 * params.p_max, params.p_max, seed).unwrap();
        if !relay.is_feasible() {
            continue;
        }
        let d = DesignPoint {
            w: relay.w,
            q: relay.q,
            rho: 0.5,
            p_a: 0.0,
            p_b: 0.0,
        };
        let f = power_objective(&d, &ch, &params);
        let mut grid = f64::INFINITY;
        for i in 1..=2000 {
            for j in 1..=2000 {
                let (a, b) = (params.p_max * i as f64 / 2000.0, params.p_max * j as f64 / 2000.0);
                if let Some(v) = f(a, b) {
                    grid = grid.min(v);
                }
            }
        }
        if let Some(r) = optimize_power(&ch, &params, &d.w, &d.q, d.rho) {
            worst = worst.max(r.objective / grid);
        }
    }
    assert!(worst <= 1.005, "one-at-max objective exceeds the 2-D grid by a factor {worst:.3}");
}
