//! The two one-dimensional stages: the power-splitting ratio and the source
//! powers, each with everything else held fixed.

use crate::linalg::{ComplexMatrix, HermitianMatrix};
use crate::model::{ChannelRealization, LinkTerms, SystemParams};

/// `ρ` is kept inside `[ε_ρ, 1 − ε_ρ]`.
pub const RHO_MARGIN: f64 = 1e-6;
/// Grid size of the source-power search.
pub const POWER_GRID: usize = 1000;
/// Relative slack used when deciding whether a bound interval is empty only
/// through rounding.
const CHECK_TOL: f64 = 1e-7;
/// Relative slack when testing constraints at power-search points.
const SEARCH_TOL: f64 = 1e-12;

/// Collapses an interval that is empty only through rounding.
fn close_gap(lo: f64, hi: f64) -> Option<(f64, f64)> {
    if lo <= hi {
        Some((lo, hi))
    } else if lo - hi <= CHECK_TOL * hi.abs() {
        Some((hi, hi))
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoBound {
    SinrA,
    SinrB,
    Eavesdropper,
    Energy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoResult {
    /// Smallest feasible split ratio, `None` when no `ρ` works.
    pub rho: Option<f64>,
    /// Constraint that sets `ρ`; `None` when `ρ` sits at the interval floor.
    pub active_bound: Option<RhoBound>,
    pub feasible_interval: (f64, f64),
}

/// Interval of `ρ` with `(1 − ρ)(S + ρT) ≥ u`, or `None` if empty.
fn energy_interval(s: f64, t: f64, u: f64) -> Option<(f64, f64)> {
    if u <= 0.0 {
        return Some((f64::NEG_INFINITY, f64::INFINITY));
    }
    if t == 0.0 {
        return (s > 0.0).then(|| (f64::NEG_INFINITY, 1.0 - u / s));
    }
    // Tρ² − (T − S)ρ + (u − S) ≤ 0
    let (a, b, c) = (t, -(t - s), u - s);
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (r1, r2) = if q == 0.0 {
        (0.0, 0.0)
    } else {
        (q / a, c / q)
    };
    Some((r1.min(r2), r1.max(r2)))
}

pub fn optimize_rho(
    ch: &ChannelRealization,
    params: &SystemParams,
    w: &ComplexMatrix,
    q: &HermitianMatrix,
    p_a: f64,
    p_b: f64,
) -> RhoResult {
    rho_from_terms(&LinkTerms::new(ch, w, q), params, p_a, p_b)
}

pub(crate) fn rho_from_terms(t: &LinkTerms, params: &SystemParams, p_a: f64, p_b: f64) -> RhoResult {
    let s2 = params.sigma2_r;
    let mut lo = RHO_MARGIN;
    let mut hi = 1.0 - RHO_MARGIN;
    let mut active = None;
    let mut feasible = true;

    let mut raise = |bound: f64, which: RhoBound, lo: &mut f64| {
        if bound > *lo {
            *lo = bound;
            active = Some(which);
        }
    };

    let a_a = p_b * t.sig_a / params.gamma_a - s2 * t.fwd_a;
    let a_b = p_a * t.sig_b / params.gamma_b - s2 * t.fwd_b;
    if a_a <= 0.0 || a_b <= 0.0 {
        feasible = false;
    } else {
        raise((p_a * t.si_a + t.an_a + 1.0) / a_a, RhoBound::SinrA, &mut lo);
        raise((p_b * t.si_b + t.an_b + 1.0) / a_b, RhoBound::SinrB, &mut lo);
    }

    let bracket = (p_a * t.eve_a + p_b * t.eve_b) / params.gamma_e - s2 * t.fwd_e;
    if bracket > 0.0 {
        hi = hi.min((t.an_e + 1.0) / bracket);
    }

    let s = t.gain_a * p_a + t.gain_b * p_b + t.q_trace + s2 * params.m_r as f64;
    let tt = p_a * t.amp_a + p_b * t.amp_b + s2 * t.w_energy;
    match energy_interval(s, tt, params.u_bar / params.beta) {
        Some((e_lo, e_hi)) => {
            raise(e_lo, RhoBound::Energy, &mut lo);
            hi = hi.min(e_hi);
        }
        None => feasible = false,
    }

    let rho = close_gap(lo, hi).filter(|_| feasible).map(|(lo, _)| lo);
    let feasible = rho.is_some();
    RhoResult {
        rho,
        active_bound: if feasible { active } else { None },
        feasible_interval: (lo, hi),
    }
}

/// Feasible range of the searched power when the other source transmits at
/// `p_fixed`, from the two source-SINR constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBounds {
    /// Smallest `P_B` meeting the SINR target at A; `+∞` if unreachable.
    pub pb_min: f64,
    /// Largest `P_B` keeping the SINR target at B.
    pub pb_max: f64,
}

pub fn pb_bounds(
    ch: &ChannelRealization,
    params: &SystemParams,
    w: &ComplexMatrix,
    q: &HermitianMatrix,
    rho: f64,
    p_a_fixed: f64,
) -> PowerBounds {
    bounds_from_terms(&LinkTerms::new(ch, w, q), params, rho, p_a_fixed)
}

fn bounds_from_terms(t: &LinkTerms, params: &SystemParams, rho: f64, p_a: f64) -> PowerBounds {
    let s2 = params.sigma2_r;
    let pb_min = if t.sig_a == 0.0 {
        f64::INFINITY
    } else {
        params.gamma_a * (rho * s2 * t.fwd_a + p_a * t.si_a + t.an_a + 1.0) / (rho * t.sig_a)
    };
    let bracket = rho * p_a * t.sig_b - params.gamma_b * (rho * s2 * t.fwd_b + t.an_b + 1.0);
    let pb_max = if bracket < 0.0 {
        0.0
    } else if t.si_b == 0.0 {
        f64::INFINITY
    } else {
        bracket / (params.gamma_b * t.si_b)
    };
    PowerBounds { pb_min, pb_max }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerCase {
    /// `P_A = P_max`, `P_B` searched.
    AAtMax,
    /// `P_B = P_max`, `P_A` searched.
    BAtMax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerResult {
    pub p_a: f64,
    pub p_b: f64,
    pub case_used: PowerCase,
    /// Bounds on the searched power in the chosen case.
    pub bounds: PowerBounds,
    /// `P_A + P_B + P_R`.
    pub objective: f64,
}

struct CaseSolution {
    searched: f64,
    bounds: PowerBounds,
    objective: f64,
}

/// Case (i) of the power stage: `P_A = P_max`, scan `P_B` upward from its
/// lower bound and return the first point meeting every constraint. The
/// bracket between the last infeasible and first feasible grid point is then
/// narrowed by bisection.
fn search_case(t: &LinkTerms, params: &SystemParams, rho: f64) -> Option<CaseSolution> {
    let p_a = params.p_max;
    let bounds = bounds_from_terms(t, params, rho, p_a);
    let (lo, hi) = close_gap(
        bounds.pb_min.max(1e-9 * params.p_max),
        bounds.pb_max.min(params.p_max),
    )?;
    let ok = |p_b: f64| t.constraints(params, rho, p_a, p_b).satisfied(SEARCH_TOL);
    let at = |k: usize| {
        if k + 1 == POWER_GRID {
            hi
        } else {
            lo + (hi - lo) * k as f64 / (POWER_GRID - 1) as f64
        }
    };
    let first = (0..POWER_GRID).find(|&k| ok(at(k)))?;
    let mut p_b = at(first);
    if first > 0 {
        let mut bad = at(first - 1);
        for _ in 0..100 {
            let mid = 0.5 * (bad + p_b);
            if mid <= bad || mid >= p_b {
                break;
            }
            if ok(mid) {
                p_b = mid;
            } else {
                bad = mid;
            }
        }
    }
    Some(CaseSolution {
        searched: p_b,
        bounds,
        objective: t.total_power(params, rho, p_a, p_b),
    })
}

/// Source-power stage: one source at `P_max`, the other searched; the case
/// with smaller total power wins, ties going to `P_A = P_max`.
pub fn optimize_power(
    ch: &ChannelRealization,
    params: &SystemParams,
    w: &ComplexMatrix,
    q: &HermitianMatrix,
    rho: f64,
) -> Option<PowerResult> {
    power_from_terms(&LinkTerms::new(ch, w, q), params, rho)
}

pub(crate) fn power_from_terms(t: &LinkTerms, params: &SystemParams, rho: f64) -> Option<PowerResult> {
    let case_a = search_case(t, params, rho).map(|c| PowerResult {
        p_a: params.p_max,
        p_b: c.searched,
        case_used: PowerCase::AAtMax,
        bounds: c.bounds,
        objective: c.objective,
    });
    let case_b = search_case(&t.swapped(), &params.swapped(), rho).map(|c| PowerResult {
        p_a: c.searched,
        p_b: params.p_max,
        case_used: PowerCase::BAtMax,
        bounds: c.bounds,
        objective: c.objective,
    });
    match (case_a, case_b) {
        (Some(a), Some(b)) => Some(if b.objective < a.objective { b } else { a }),
        (a, b) => a.or(b),
    }
}
