//! Alternating minimization of the total transmit power over the relay
//! design, the split ratio and the source powers.

use crate::error::Result;
use crate::model::{evaluate_performance, ChannelRealization, DesignPoint, LinkTerms, PerfReport, SystemParams};
use crate::relay::solve_relay_stage;
use crate::subproblems::{power_from_terms, rho_from_terms};

/// Starting split ratio.
pub const INITIAL_RHO: f64 = 0.5;
/// Relative constraint slack a stage output must meet to be accepted.
pub const FEASIBILITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_outer: usize,
    /// Stop once the relative change of the objective over one outer
    /// iteration falls below this.
    pub obj_tol: f64,
    /// Seeds the randomized recovery inside the relay stage.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_outer: 30,
            obj_tol: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Relay,
    Rho,
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageRecord {
    pub outer: usize,
    pub stage: Stage,
    /// Total power of the stage output, `+∞` if the stage found nothing.
    pub candidate_objective: f64,
    /// Whether the stage output met every constraint.
    pub feasible: bool,
    /// Whether the output was feasible and no worse than the incumbent.
    pub accepted: bool,
    /// Total power of the incumbent after the stage.
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct SolveTrace {
    pub iterations: Vec<StageRecord>,
    pub converged: bool,
    pub feasible: bool,
    pub final_design: Option<DesignPoint>,
    pub final_report: Option<PerfReport>,
    pub outer_iterations: usize,
}

impl SolveTrace {
    fn infeasible(iterations: Vec<StageRecord>) -> Self {
        Self {
            iterations,
            converged: false,
            feasible: false,
            final_design: None,
            final_report: None,
            outer_iterations: 1,
        }
    }

    /// Accepted objective after each stage.
    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.iterations
            .iter()
            .map(|r| r.objective)
            .filter(|v| v.is_finite())
    }
}

struct Incumbent<'a> {
    ch: &'a ChannelRealization,
    params: &'a SystemParams,
    design: DesignPoint,
    objective: f64,
}

impl Incumbent<'_> {
    /// Total power of `d` if it meets every constraint.
    fn score(&self, d: &DesignPoint) -> Option<f64> {
        let t = LinkTerms::new(self.ch, &d.w, &d.q);
        t.constraints(self.params, d.rho, d.p_a, d.p_b)
            .satisfied(FEASIBILITY_TOL)
            .then(|| t.total_power(self.params, d.rho, d.p_a, d.p_b))
    }

    fn offer(&mut self, outer: usize, stage: Stage, cand: Option<DesignPoint>) -> StageRecord {
        let scored = cand.and_then(|d| self.score(&d).map(|v| (d, v)));
        let candidate_objective = scored.as_ref().map_or(f64::INFINITY, |(_, v)| *v);
        let accepted = candidate_objective.is_finite()
            && candidate_objective <= self.objective + 1e-9 * (1.0 + self.objective.abs());
        if accepted {
            let (d, v) = scored.expect("finite objective implies a candidate");
            self.design = d;
            self.objective = v;
        }
        StageRecord {
            outer,
            stage,
            candidate_objective,
            feasible: candidate_objective.is_finite(),
            accepted,
            objective: self.objective,
        }
    }

    fn terms(&self) -> LinkTerms {
        LinkTerms::new(self.ch, &self.design.w, &self.design.q)
    }
}

/// Joint design. Starts from `ρ = 1/2`, `P_A = P_B = P_max` and cycles
/// relay → split ratio → source powers. A stage output replaces the
/// incumbent only when it is feasible and does not raise the total power.
/// A stage that finds no feasible point ends the loop with the incumbent and
/// `converged = false`.
pub fn optimize_joint(
    ch: &ChannelRealization,
    params: &SystemParams,
    opts: &SolveOptions,
) -> Result<SolveTrace> {
    params.validate()?;
    let mut records = Vec::new();

    let first = solve_relay_stage(ch, params, INITIAL_RHO, params.p_max, params.p_max, opts.seed)?;
    if !first.is_feasible() {
        records.push(StageRecord {
            outer: 0,
            stage: Stage::Relay,
            candidate_objective: f64::INFINITY,
            feasible: false,
            accepted: false,
            objective: f64::INFINITY,
        });
        return Ok(SolveTrace::infeasible(records));
    }
    let mut inc = Incumbent {
        ch,
        params,
        design: DesignPoint {
            w: first.w,
            q: first.q,
            rho: INITIAL_RHO,
            p_a: params.p_max,
            p_b: params.p_max,
        },
        objective: f64::INFINITY,
    };
    let d0 = inc.design.clone();
    let rec = inc.offer(0, Stage::Relay, Some(d0));
    records.push(rec);
    if !rec.accepted {
        return Ok(SolveTrace::infeasible(records));
    }

    let mut converged = false;
    let mut outer = 0;
    let mut start = inc.objective;
    'outer: loop {
        // Split ratio.
        let d = &inc.design;
        let r = rho_from_terms(&inc.terms(), params, d.p_a, d.p_b);
        let cand = r.rho.map(|rho| DesignPoint { rho, ..d.clone() });
        let rho_rec = inc.offer(outer, Stage::Rho, cand);
        records.push(rho_rec);

        // Source powers.
        let d = &inc.design;
        let cand = power_from_terms(&inc.terms(), params, d.rho).map(|p| DesignPoint {
            p_a: p.p_a,
            p_b: p.p_b,
            ..d.clone()
        });
        let power_rec = inc.offer(outer, Stage::Power, cand);
        records.push(power_rec);
        outer += 1;
        if !rho_rec.feasible || !power_rec.feasible {
            break 'outer;
        }

        let change = (start - inc.objective).abs() / start.abs().max(f64::MIN_POSITIVE);
        if change < opts.obj_tol {
            converged = true;
            break;
        }
        if outer >= opts.max_outer {
            break;
        }
        start = inc.objective;

        // Relay design for the updated scalars.
        let d = &inc.design;
        let seed = opts.seed ^ (outer as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let relay = solve_relay_stage(ch, params, d.rho, d.p_a, d.p_b, seed)?;
        let cand = relay.is_feasible().then(|| DesignPoint {
            w: relay.w,
            q: relay.q,
            ..d.clone()
        });
        let rec = inc.offer(outer, Stage::Relay, cand);
        records.push(rec);
        if !rec.feasible {
            break;
        }
    }

    let report = evaluate_performance(&inc.design, ch, params);
    Ok(SolveTrace {
        iterations: records,
        converged,
        feasible: true,
        final_design: Some(inc.design),
        final_report: Some(report),
        outer_iterations: outer,
    })
}

/// Baseline: sources at `P_max`, `ρ = 1/2`, a single relay stage.
pub fn optimize_relay_only(
    ch: &ChannelRealization,
    params: &SystemParams,
    seed: u64,
) -> Result<SolveTrace> {
    params.validate()?;
    let relay = solve_relay_stage(ch, params, INITIAL_RHO, params.p_max, params.p_max, seed)?;
    let mut inc = Incumbent {
        ch,
        params,
        design: DesignPoint {
            w: relay.w.clone(),
            q: relay.q.clone(),
            rho: INITIAL_RHO,
            p_a: params.p_max,
            p_b: params.p_max,
        },
        objective: f64::INFINITY,
    };
    let cand = relay.is_feasible().then(|| inc.design.clone());
    let rec = inc.offer(0, Stage::Relay, cand);
    if !rec.accepted {
        return Ok(SolveTrace::infeasible(vec![rec]));
    }
    let report = evaluate_performance(&inc.design, ch, params);
    Ok(SolveTrace {
        iterations: vec![rec],
        converged: true,
        feasible: true,
        final_design: Some(inc.design),
        final_report: Some(report),
        outer_iterations: 1,
    })
}
