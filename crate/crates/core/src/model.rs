//! Physical-layer model of the two-way full-duplex relay link.
//!
//! All powers are linear and normalized to the unit noise variance at the
//! sources and the eavesdropper. The relay sees receive noise `σ²_R`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, HermitianMatrix};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Relay transmit antennas.
    pub m_t: usize,
    /// Relay receive antennas; must be below `m_t`.
    pub m_r: usize,
    pub p_max: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
    /// Cap on the eavesdropper SINR.
    pub gamma_e: f64,
    /// Harvested-power target.
    pub u_bar: f64,
    pub sigma2_r: f64,
    /// Energy conversion efficiency.
    pub beta: f64,
    /// Fraction of source self-interference power left after cancellation.
    pub si_residual_factor: f64,
    /// Variance scale of the residual self-interference channels.
    pub rsi_variance: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            m_t: 3,
            m_r: 2,
            p_max: db_to_linear(10.0),
            gamma_a: db_to_linear(-5.0),
            gamma_b: db_to_linear(-5.0),
            gamma_e: db_to_linear(-15.0),
            u_bar: 1.0,
            sigma2_r: 1.0,
            beta: 1.0,
            si_residual_factor: 0.4,
            rsi_variance: 1.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParams(msg));
        if self.m_r < 1 || self.m_t <= self.m_r {
            return fail(format!(
                "need m_t > m_r >= 1, got m_t = {}, m_r = {}",
                self.m_t, self.m_r
            ));
        }
        for (name, v) in [
            ("p_max", self.p_max),
            ("gamma_a", self.gamma_a),
            ("gamma_b", self.gamma_b),
            ("gamma_e", self.gamma_e),
            ("beta", self.beta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive and finite, got {v}"));
            }
        }
        for (name, v) in [
            ("u_bar", self.u_bar),
            ("sigma2_r", self.sigma2_r),
            ("rsi_variance", self.rsi_variance),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(format!("{name} must be nonnegative and finite, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.si_residual_factor) {
            return fail(format!(
                "si_residual_factor must lie in [0, 1], got {}",
                self.si_residual_factor
            ));
        }
        Ok(())
    }

    /// Parameters with the roles of the two sources exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            gamma_a: self.gamma_b,
            gamma_b: self.gamma_a,
            ..self.clone()
        }
    }
}

/// One draw of every channel in the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Source A → relay, length `m_r`.
    pub h_ar: ComplexVector,
    /// Source B → relay, length `m_r`.
    pub h_br: ComplexVector,
    /// Relay → source A, length `m_t`.
    pub h_ra: ComplexVector,
    /// Relay → source B, length `m_t`.
    pub h_rb: ComplexVector,
    /// Relay → eavesdropper, length `m_t`.
    pub h_re: ComplexVector,
    /// Residual relay loopback, `m_r × m_t`.
    pub h_rr: ComplexMatrix,
    pub h_aa: Complex64,
    pub h_bb: Complex64,
}

impl ChannelRealization {
    pub fn swapped(&self) -> Self {
        Self {
            h_ar: self.h_br.clone(),
            h_br: self.h_ar.clone(),
            h_ra: self.h_rb.clone(),
            h_rb: self.h_ra.clone(),
            h_re: self.h_re.clone(),
            h_rr: self.h_rr.clone(),
            h_aa: self.h_bb,
            h_bb: self.h_aa,
        }
    }

    pub fn m_t(&self) -> usize {
        self.h_ra.len()
    }

    pub fn m_r(&self) -> usize {
        self.h_ar.len()
    }
}

fn complex_normal(rng: &mut ChaCha8Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Rayleigh flat-fading draw. Information links are `CN(0, 1)`, the relay
/// loopback has variance `rsi_variance`, the source loopbacks
/// `si_residual_factor · rsi_variance`.
///
/// Every entry is drawn at unit variance in a fixed order and scaled
/// afterwards, so a seed yields the same underlying fading whatever the
/// variance settings.
pub fn draw_channels(params: &SystemParams, seed: u64) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m_t, m_r) = (params.m_t, params.m_r);
    let mut vector = |n: usize| ComplexVector::from_fn(n, |_, _| complex_normal(&mut rng, 1.0));
    let h_ar = vector(m_r);
    let h_br = vector(m_r);
    let h_ra = vector(m_t);
    let h_rb = vector(m_t);
    let h_re = vector(m_t);
    let rr = params.rsi_variance.sqrt();
    let h_rr = ComplexMatrix::from_fn(m_r, m_t, |_, _| complex_normal(&mut rng, 1.0) * rr);
    let src = (params.si_residual_factor * params.rsi_variance).sqrt();
    let h_aa = complex_normal(&mut rng, 1.0) * src;
    let h_bb = complex_normal(&mut rng, 1.0) * src;
    ChannelRealization {
        h_ar,
        h_br,
        h_ra,
        h_rb,
        h_re,
        h_rr,
        h_aa,
        h_bb,
    }
}

/// A candidate solution of the power-minimization problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    /// Relay amplification matrix, `m_t × m_r`.
    pub w: ComplexMatrix,
    /// Artificial-noise covariance, `m_t × m_t`.
    pub q: HermitianMatrix,
    /// Power-splitting ratio routed to information decoding.
    pub rho: f64,
    pub p_a: f64,
    pub p_b: f64,
}

impl DesignPoint {
    pub fn swapped(&self) -> Self {
        Self {
            p_a: self.p_b,
            p_b: self.p_a,
            ..self.clone()
        }
    }
}

/// Every channel-dependent scalar that enters the SINRs, the relay power and
/// the harvested energy for a fixed `(W, Q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkTerms {
    /// `|h_RA† W h_BR|²`
    pub sig_a: f64,
    /// `|h_RB† W h_AR|²`
    pub sig_b: f64,
    /// `|h_RE† W h_AR|²`
    pub eve_a: f64,
    /// `|h_RE† W h_BR|²`
    pub eve_b: f64,
    /// `‖h_RA† W‖²`
    pub fwd_a: f64,
    pub fwd_b: f64,
    pub fwd_e: f64,
    /// `h_RA† Q h_RA`
    pub an_a: f64,
    pub an_b: f64,
    pub an_e: f64,
    /// `‖W h_AR‖²`
    pub amp_a: f64,
    /// `‖W h_BR‖²`
    pub amp_b: f64,
    /// `trace(W W†)`
    pub w_energy: f64,
    pub q_trace: f64,
    /// `|h_AA|²`
    pub si_a: f64,
    pub si_b: f64,
    /// `‖h_AR‖²`
    pub gain_a: f64,
    pub gain_b: f64,
}

impl LinkTerms {
    pub fn new(ch: &ChannelRealization, w: &ComplexMatrix, q: &HermitianMatrix) -> Self {
        let row_a = ch.h_ra.adjoint() * w;
        let row_b = ch.h_rb.adjoint() * w;
        let row_e = ch.h_re.adjoint() * w;
        let dot = |row: &nalgebra::RowDVector<Complex64>, v: &ComplexVector| (row * v)[(0, 0)].norm_sqr();
        Self {
            sig_a: dot(&row_a, &ch.h_br),
            sig_b: dot(&row_b, &ch.h_ar),
            eve_a: dot(&row_e, &ch.h_ar),
            eve_b: dot(&row_e, &ch.h_br),
            fwd_a: row_a.norm_squared(),
            fwd_b: row_b.norm_squared(),
            fwd_e: row_e.norm_squared(),
            an_a: q.quad(&ch.h_ra),
            an_b: q.quad(&ch.h_rb),
            an_e: q.quad(&ch.h_re),
            amp_a: (w * &ch.h_ar).norm_squared(),
            amp_b: (w * &ch.h_br).norm_squared(),
            w_energy: w.norm_squared(),
            q_trace: q.trace(),
            si_a: ch.h_aa.norm_sqr(),
            si_b: ch.h_bb.norm_sqr(),
            gain_a: ch.h_ar.norm_squared(),
            gain_b: ch.h_br.norm_squared(),
        }
    }

    /// Terms seen with the roles of the two sources exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            sig_a: self.sig_b,
            sig_b: self.sig_a,
            eve_a: self.eve_b,
            eve_b: self.eve_a,
            fwd_a: self.fwd_b,
            fwd_b: self.fwd_a,
            an_a: self.an_b,
            an_b: self.an_a,
            amp_a: self.amp_b,
            amp_b: self.amp_a,
            si_a: self.si_b,
            si_b: self.si_a,
            gain_a: self.gain_b,
            gain_b: self.gain_a,
            ..*self
        }
    }

    pub fn sinr_a(&self, params: &SystemParams, rho: f64, p_a: f64, p_b: f64) -> f64 {
        rho * p_b * self.sig_a
            / (rho * params.sigma2_r * self.fwd_a + p_a * self.si_a + self.an_a + 1.0)
    }

    pub fn sinr_b(&self, params: &SystemParams, rho: f64, p_a: f64, p_b: f64) -> f64 {
        rho * p_a * self.sig_b
            / (rho * params.sigma2_r * self.fwd_b + p_b * self.si_b + self.an_b + 1.0)
    }

    pub fn sinr_e(&self, params: &SystemParams, rho: f64, p_a: f64, p_b: f64) -> f64 {
        rho * (p_a * self.eve_a + p_b * self.eve_b)
            / (rho * params.sigma2_r * self.fwd_e + self.an_e + 1.0)
    }

    /// Relay output power `trace E[x_R x_R†]` under the zero-forcing
    /// constraint.
    pub fn relay_power(&self, params: &SystemParams, rho: f64, p_a: f64, p_b: f64) -> f64 {
        rho * (p_a * self.amp_a + p_b * self.amp_b + params.sigma2_r * self.w_energy)
            + self.q_trace
    }

    pub fn harvested(&self, params: &SystemParams, rho: f64, p_a: f64, p_b: f64) -> f64 {
        params.beta
            * (1.0 - rho)
            * (self.gain_a * p_a
                + self.gain_b * p_b
                + self.relay_power(params, rho, p_a, p_b)
                + params.sigma2_r * params.m_r as f64)
    }

    pub fn total_power(&self, params: &SystemParams, rho: f64, p_a: f64, p_b: f64) -> f64 {
        p_a + p_b + self.relay_power(params, rho, p_a, p_b)
    }

    pub fn constraints(
        &self,
        params: &SystemParams,
        rho: f64,
        p_a: f64,
        p_b: f64,
    ) -> ConstraintReport {
        ConstraintReport::new(
            params,
            self.sinr_a(params, rho, p_a, p_b),
            self.sinr_b(params, rho, p_a, p_b),
            self.sinr_e(params, rho, p_a, p_b),
            self.harvested(params, rho, p_a, p_b),
        )
    }
}

/// Relative constraint margins; nonnegative means satisfied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintReport {
    /// `(Γ_A − γ_A) / γ_A`
    pub sinr_a: f64,
    pub sinr_b: f64,
    /// `(γ_E − Γ_E) / γ_E`
    pub eavesdropper: f64,
    /// `(U − Ū) / Ū`, or `U − Ū` when `Ū = 0`.
    pub energy: f64,
}

impl ConstraintReport {
    fn new(params: &SystemParams, g_a: f64, g_b: f64, g_e: f64, u: f64) -> Self {
        let energy_scale = if params.u_bar > 0.0 { params.u_bar } else { 1.0 };
        Self {
            sinr_a: (g_a - params.gamma_a) / params.gamma_a,
            sinr_b: (g_b - params.gamma_b) / params.gamma_b,
            eavesdropper: (params.gamma_e - g_e) / params.gamma_e,
            energy: (u - params.u_bar) / energy_scale,
        }
    }

    pub fn worst(&self) -> f64 {
        self.sinr_a
            .min(self.sinr_b)
            .min(self.eavesdropper)
            .min(self.energy)
    }

    pub fn satisfied(&self, rel_tol: f64) -> bool {
        self.worst() >= -rel_tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfReport {
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub gamma_e: f64,
    pub rate_a: f64,
    pub rate_b: f64,
    pub rate_e: f64,
    /// `[R_A + R_B − R_E]⁺`
    pub secrecy_rate: f64,
    pub relay_power: f64,
    pub harvested: f64,
    pub total_power: f64,
    /// `‖H_RR W‖`
    pub zf_residual: f64,
}

impl PerfReport {
    pub fn constraints(&self, params: &SystemParams) -> ConstraintReport {
        ConstraintReport::new(
            params,
            self.gamma_a,
            self.gamma_b,
            self.gamma_e,
            self.harvested,
        )
    }
}

pub fn evaluate_performance(
    design: &DesignPoint,
    ch: &ChannelRealization,
    params: &SystemParams,
) -> PerfReport {
    let t = LinkTerms::new(ch, &design.w, &design.q);
    let (rho, p_a, p_b) = (design.rho, design.p_a, design.p_b);
    let gamma_a = t.sinr_a(params, rho, p_a, p_b);
    let gamma_b = t.sinr_b(params, rho, p_a, p_b);
    let gamma_e = t.sinr_e(params, rho, p_a, p_b);
    let rate_a = (1.0 + gamma_a).log2();
    let rate_b = (1.0 + gamma_b).log2();
    let rate_e = (1.0 + gamma_e).log2();
    PerfReport {
        gamma_a,
        gamma_b,
        gamma_e,
        rate_a,
        rate_b,
        rate_e,
        secrecy_rate: (rate_a + rate_b - rate_e).max(0.0),
        relay_power: t.relay_power(params, rho, p_a, p_b),
        harvested: t.harvested(params, rho, p_a, p_b),
        total_power: t.total_power(params, rho, p_a, p_b),
        zf_residual: (&ch.h_rr * &design.w).norm(),
    }
}
