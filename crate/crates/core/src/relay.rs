//! Relay stage: minimum relay power over the beamformer and the
//! artificial-noise covariance with the split ratio and source powers fixed.
//!
//! The beamformer is parameterized through the null space of the loopback
//! channel, `W = N_t·V`, which enforces `H_RR·W = 0` exactly. With
//! `x = vec(V)` every term of the SINR, power and harvesting constraints is a
//! quadratic form in `x`, so lifting `X = x·x†` makes all of them linear in
//! `(X, Q)`. Dropping `rank X = 1` gives a semidefinite relaxation; the beamformer
//! is read off the dominant eigenvector, with Gaussian randomization as
//! fallback when the relaxation is not tight.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::linalg::{
    dominant_rank1, null_space_basis, psd_factor, ComplexMatrix, ComplexVector, HermitianMatrix,
};
use crate::model::{ChannelRealization, ConstraintReport, LinkTerms, SystemParams};
use crate::sdp::{solve_sdp, Constraint, SdpProblem, SdpSettings, SdpStatus, Sense};

/// Dominant-eigenvalue share above which the lifted solution counts as rank one.
pub const RANK1_THRESHOLD: f64 = 0.999;
pub const RANDOMIZATION_DRAWS: usize = 200;
/// Relative slack allowed when re-verifying a recovered design.
pub const ACCEPT_TOL: f64 = 1e-9;
/// Relative tightening of the targets inside every relay-stage SDP.
pub const SDP_MARGIN: f64 = 1e-6;

/// Squared projections of the relay channels onto the null-space basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionConstants {
    /// `‖N_t† h_RA‖²`
    pub c_ra: f64,
    pub c_rb: f64,
    pub c_re: f64,
    /// `trace(N_t N_t†)`
    pub c_nt: f64,
}

pub fn projection_constants(ch: &ChannelRealization, n_t: &ComplexMatrix) -> ProjectionConstants {
    let proj = |h: &ComplexVector| (n_t.adjoint() * h).norm_squared();
    ProjectionConstants {
        c_ra: proj(&ch.h_ra),
        c_rb: proj(&ch.h_rb),
        c_re: proj(&ch.h_re),
        c_nt: n_t.norm_squared(),
    }
}

/// The map `x ↦ W = N_t·reshape(x)` restricted to `x = B·z` for a basis `B`.
#[derive(Debug, Clone)]
pub struct RelayLift {
    n_t: ComplexMatrix,
    m_r: usize,
    basis: ComplexMatrix,
    /// `W` evaluated at each basis column.
    images: Vec<ComplexMatrix>,
}

impl RelayLift {
    /// Full lift: `z = vec(V)`, dimension `d·m_r`.
    pub fn new(ch: &ChannelRealization) -> Result<Self> {
        let n_t = null_space_basis(&ch.h_rr)?;
        let n = n_t.ncols() * ch.m_r();
        Ok(Self::with_basis(n_t, ch.m_r(), ComplexMatrix::identity(n, n)))
    }

    fn with_basis(n_t: ComplexMatrix, m_r: usize, basis: ComplexMatrix) -> Self {
        let mut lift = Self {
            n_t,
            m_r,
            basis,
            images: Vec::new(),
        };
        lift.images = (0..lift.basis.ncols())
            .map(|k| lift.beamformer_from_vec(&lift.basis.column(k).into_owned()))
            .collect();
        lift
    }

    /// The same null space restricted to the single direction `x`.
    pub fn along(&self, x: &ComplexVector) -> Self {
        Self::with_basis(self.n_t.clone(), self.m_r, ComplexMatrix::from_column_slice(x.len(), 1, x.as_slice()))
    }

    pub fn null_basis(&self) -> &ComplexMatrix {
        &self.n_t
    }

    /// Length of `vec(V)`.
    pub fn vec_dim(&self) -> usize {
        self.n_t.ncols() * self.m_r
    }

    /// Dimension of the lifted block.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `W = N_t·V` with `V` the column-major reshape of `x`.
    pub fn beamformer_from_vec(&self, x: &ComplexVector) -> ComplexMatrix {
        let d = self.n_t.ncols();
        let v = ComplexMatrix::from_column_slice(d, self.m_r, x.as_slice());
        &self.n_t * v
    }

    /// `W` at lifted coordinates `z`.
    pub fn beamformer(&self, z: &ComplexVector) -> ComplexMatrix {
        self.beamformer_from_vec(&(&self.basis * z))
    }

    /// Coefficient `G` with `‖L(z)‖² = z† G z` for the linear map whose value
    /// at each basis vector is given by `image`.
    fn gram(&self, image: impl Fn(&ComplexMatrix) -> ComplexVector) -> HermitianMatrix {
        let cols: Vec<ComplexVector> = self.images.iter().map(image).collect();
        let m = ComplexMatrix::from_columns(&cols);
        HermitianMatrix::from_matrix_unchecked(m.adjoint() * m)
    }

    /// Lift of `|a† W b|²`.
    pub fn bilinear_gram(&self, a: &ComplexVector, b: &ComplexVector) -> HermitianMatrix {
        self.gram(|w| ComplexVector::from_element(1, (a.adjoint() * w * b)[(0, 0)]))
    }

    /// Lift of `‖a† W‖²`.
    pub fn row_gram(&self, a: &ComplexVector) -> HermitianMatrix {
        self.gram(|w| (a.adjoint() * w).transpose())
    }

    /// Lift of `‖W b‖²`.
    pub fn column_gram(&self, b: &ComplexVector) -> HermitianMatrix {
        self.gram(|w| w * b)
    }

    /// Lift of `trace(W W†)`.
    pub fn energy_gram(&self) -> HermitianMatrix {
        self.gram(|w| ComplexVector::from_column_slice(w.as_slice()))
    }
}

fn combine(terms: &[(f64, &HermitianMatrix)]) -> HermitianMatrix {
    let mut out = HermitianMatrix::zeros(terms[0].1.dim());
    for (alpha, m) in terms {
        out.add_scaled(*alpha, m);
    }
    out
}

fn build_on_lift(
    lift: &RelayLift,
    ch: &ChannelRealization,
    params: &SystemParams,
    rho: f64,
    p_a: f64,
    p_b: f64,
) -> SdpProblem {
    let s2 = params.sigma2_r;
    let relay_x = combine(&[
        (rho * p_a, &lift.column_gram(&ch.h_ar)),
        (rho * p_b, &lift.column_gram(&ch.h_br)),
        (rho * s2, &lift.energy_gram()),
    ]);
    let relay_q = HermitianMatrix::identity(ch.m_t());
    let outer = |h: &ComplexVector, scale: f64| HermitianMatrix::outer(h).scaled(scale);

    let sinr_a = Constraint::new(
        vec![
            combine(&[
                (rho * p_b, &lift.bilinear_gram(&ch.h_ra, &ch.h_br)),
                (-params.gamma_a * rho * s2, &lift.row_gram(&ch.h_ra)),
            ]),
            outer(&ch.h_ra, -params.gamma_a),
        ],
        Sense::Ge,
        params.gamma_a * (p_a * ch.h_aa.norm_sqr() + 1.0),
    );
    let sinr_b = Constraint::new(
        vec![
            combine(&[
                (rho * p_a, &lift.bilinear_gram(&ch.h_rb, &ch.h_ar)),
                (-params.gamma_b * rho * s2, &lift.row_gram(&ch.h_rb)),
            ]),
            outer(&ch.h_rb, -params.gamma_b),
        ],
        Sense::Ge,
        params.gamma_b * (p_b * ch.h_bb.norm_sqr() + 1.0),
    );
    let eavesdropper = Constraint::new(
        vec![
            combine(&[
                (rho * p_a, &lift.bilinear_gram(&ch.h_re, &ch.h_ar)),
                (rho * p_b, &lift.bilinear_gram(&ch.h_re, &ch.h_br)),
                (-params.gamma_e * rho * s2, &lift.row_gram(&ch.h_re)),
            ]),
            outer(&ch.h_re, -params.gamma_e),
        ],
        Sense::Le,
        params.gamma_e,
    );
    let harvest = params.beta * (1.0 - rho);
    let energy = Constraint::new(
        vec![relay_x.scaled(harvest), relay_q.scaled(harvest)],
        Sense::Ge,
        params.u_bar
            - harvest
                * (ch.h_ar.norm_squared() * p_a
                    + ch.h_br.norm_squared() * p_b
                    + s2 * ch.m_r() as f64),
    );
    SdpProblem {
        blocks: vec![lift.dim(), ch.m_t()],
        objective: vec![relay_x, relay_q],
        constraints: vec![sinr_a, sinr_b, eavesdropper, energy],
    }
}

/// Lifted relay-stage SDP: block 0 is `X = vec(V)·vec(V)†`, block 1 is `Q`.
/// Constraints, in order: SINR at A, SINR at B, eavesdropper cap, harvesting.
pub fn build_relay_sdp(
    ch: &ChannelRealization,
    params: &SystemParams,
    rho: f64,
    p_a: f64,
    p_b: f64,
) -> Result<SdpProblem> {
    let lift = RelayLift::new(ch)?;
    Ok(build_on_lift(&lift, ch, params, rho, p_a, p_b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelayStatus {
    /// The relaxation was rank one; `W` comes from its dominant eigenvector.
    Optimal,
    /// `W` was recovered from a higher-rank relaxation.
    RecoveredApprox,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct RelayStageResult {
    pub w: ComplexMatrix,
    pub q: HermitianMatrix,
    /// Relay power at the returned `(W, Q)`.
    pub objective: f64,
    /// Optimal value of the relaxation (targets tightened by `SDP_MARGIN`);
    /// a lower bound on `objective` up to that margin.
    pub relaxation_bound: f64,
    pub status: RelayStatus,
    pub rank1_ratio: f64,
    /// Margins of the unlifted constraints at the returned design.
    pub constraints: Option<ConstraintReport>,
    pub zf_residual: f64,
}

impl RelayStageResult {
    fn infeasible(ch: &ChannelRealization, rank1_ratio: f64, bound: f64) -> Self {
        Self {
            w: ComplexMatrix::zeros(ch.m_t(), ch.m_r()),
            q: HermitianMatrix::zeros(ch.m_t()),
            objective: f64::INFINITY,
            relaxation_bound: bound,
            status: RelayStatus::Infeasible,
            rank1_ratio,
            constraints: None,
            zf_residual: 0.0,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status != RelayStatus::Infeasible
    }
}

struct Candidate {
    w: ComplexMatrix,
    q: HermitianMatrix,
    power: f64,
    report: ConstraintReport,
}

struct Stage<'a> {
    ch: &'a ChannelRealization,
    params: &'a SystemParams,
    /// Targets tightened by `SDP_MARGIN`, used for every SDP solve.
    sdp_params: &'a SystemParams,
    rho: f64,
    p_a: f64,
    p_b: f64,
}

impl Stage<'_> {
    fn assess(&self, w: ComplexMatrix, q: HermitianMatrix) -> Option<Candidate> {
        let t = LinkTerms::new(self.ch, &w, &q);
        let report = t.constraints(self.params, self.rho, self.p_a, self.p_b);
        report.satisfied(ACCEPT_TOL).then(|| Candidate {
            power: t.relay_power(self.params, self.rho, self.p_a, self.p_b),
            w,
            q,
            report,
        })
    }

    /// Smallest scaling of `W = W0·√s` meeting every constraint with `Q`
    /// held fixed. All four constraints are monotone in `s`, so the feasible
    /// set is an interval.
    fn rescale(&self, w0: &ComplexMatrix, q: &HermitianMatrix) -> Option<Candidate> {
        let (p, rho, p_a, p_b) = (self.params, self.rho, self.p_a, self.p_b);
        let t = LinkTerms::new(self.ch, w0, q);
        let mut lo: f64 = 0.0;
        let mut hi = f64::INFINITY;

        let den_a = rho * (p_b * t.sig_a - p.gamma_a * p.sigma2_r * t.fwd_a);
        let den_b = rho * (p_a * t.sig_b - p.gamma_b * p.sigma2_r * t.fwd_b);
        if den_a <= 0.0 || den_b <= 0.0 {
            return None;
        }
        lo = lo.max(p.gamma_a * (p_a * t.si_a + t.an_a + 1.0) / den_a);
        lo = lo.max(p.gamma_b * (p_b * t.si_b + t.an_b + 1.0) / den_b);

        let eve = rho * (p_a * t.eve_a + p_b * t.eve_b - p.gamma_e * p.sigma2_r * t.fwd_e);
        if eve > 0.0 {
            hi = p.gamma_e * (t.an_e + 1.0) / eve;
        }
        let harvest = p.beta * (1.0 - rho);
        let fixed = harvest
            * (t.gain_a * p_a + t.gain_b * p_b + t.q_trace + p.sigma2_r * p.m_r as f64);
        let per_s = harvest * rho * (p_a * t.amp_a + p_b * t.amp_b + p.sigma2_r * t.w_energy);
        if p.u_bar > fixed {
            if per_s <= 0.0 {
                return None;
            }
            lo = lo.max((p.u_bar - fixed) / per_s);
        }
        let s = lo * (1.0 + 1e-9);
        if s > hi {
            return None;
        }
        self.assess(w0 * Complex64::new(s.sqrt(), 0.0), q.clone())
    }

    /// Exact re-solve along one direction: optimal scale and `Q` for
    /// `vec(V) ∝ x`.
    fn polish(&self, lift: &RelayLift, x: &ComplexVector) -> Option<Candidate> {
        if x.norm() == 0.0 {
            return None;
        }
        let unit = x.unscale(x.norm());
        let line = lift.along(&unit);
        let problem = build_on_lift(&line, self.ch, self.sdp_params, self.rho, self.p_a, self.p_b);
        let sol = solve_sdp(&problem, &SdpSettings::default()).ok()?;
        if sol.status != SdpStatus::Optimal {
            return None;
        }
        let s = sol.block_values[0].trace().max(0.0);
        let w = line.beamformer(&ComplexVector::from_element(1, Complex64::new(s.sqrt(), 0.0)));
        let q = sol.block_values[1].clone();
        self.assess(w.clone(), q.clone()).or_else(|| self.rescale(&w, &q))
    }
}

/// Targets pushed inward by `SDP_MARGIN` so that interior-point residuals
/// land on the feasible side of the true constraints.
fn tightened(params: &SystemParams) -> SystemParams {
    SystemParams {
        gamma_a: params.gamma_a * (1.0 + SDP_MARGIN),
        gamma_b: params.gamma_b * (1.0 + SDP_MARGIN),
        gamma_e: params.gamma_e * (1.0 - SDP_MARGIN),
        u_bar: params.u_bar * (1.0 + SDP_MARGIN),
        ..params.clone()
    }
}

fn better(best: Option<Candidate>, next: Option<Candidate>) -> Option<Candidate> {
    match (best, next) {
        (Some(b), Some(n)) => Some(if n.power < b.power { n } else { b }),
        (b, n) => b.or(n),
    }
}

/// Solve the relay stage for fixed `(ρ, P_A, P_B)`. `seed` drives the
/// Gaussian randomization.
pub fn solve_relay_stage(
    ch: &ChannelRealization,
    params: &SystemParams,
    rho: f64,
    p_a: f64,
    p_b: f64,
    seed: u64,
) -> Result<RelayStageResult> {
    let lift = RelayLift::new(ch)?;
    let sdp_params = tightened(params);
    let problem = build_on_lift(&lift, ch, &sdp_params, rho, p_a, p_b);
    let sol = solve_sdp(&problem, &SdpSettings::default())?;
    if sol.status != SdpStatus::Optimal {
        return Ok(RelayStageResult::infeasible(ch, 0.0, f64::INFINITY));
    }
    let bound = sol.objective_value;
    let x = &sol.block_values[0];
    let q = &sol.block_values[1];
    let r1 = dominant_rank1(x)?;
    let principal = &r1.vector * Complex64::new(r1.lambda.sqrt(), 0.0);

    let stage = Stage {
        ch,
        params,
        sdp_params: &sdp_params,
        rho,
        p_a,
        p_b,
    };
    let mut status = RelayStatus::Optimal;
    let mut best = None;
    if r1.ratio >= RANK1_THRESHOLD {
        let w0 = lift.beamformer(&principal);
        best = stage.rescale(&w0, q).or_else(|| stage.polish(&lift, &principal));
    }
    if best.is_none() {
        status = RelayStatus::RecoveredApprox;
        let factor = psd_factor(x)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut directions = vec![principal.clone()];
        for _ in 0..RANDOMIZATION_DRAWS {
            let z = ComplexVector::from_fn(factor.ncols(), |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            });
            directions.push(&factor * z);
        }
        let mut best_dir = None;
        for dir in &directions {
            let cand = stage.rescale(&lift.beamformer(dir), q);
            if let Some(c) = &cand {
                if best.as_ref().is_none_or(|b: &Candidate| c.power < b.power) {
                    best_dir = Some(dir.clone());
                }
            }
            best = better(best, cand);
        }
        let dir = best_dir.unwrap_or(principal);
        best = better(best, stage.polish(&lift, &dir));
    }

    let Some(best) = best else {
        return Ok(RelayStageResult::infeasible(ch, r1.ratio, bound));
    };
    let zf_residual = (&ch.h_rr * &best.w).norm();
    Ok(RelayStageResult {
        w: best.w,
        q: best.q,
        objective: best.power,
        relaxation_bound: bound,
        status,
        rank1_ratio: r1.ratio,
        constraints: Some(best.report),
        zf_residual,
    })
}
