//! Independent reference computations for the integration and acceptance
//! tests. Everything here works on plain `Vec<Complex64>` with explicit loops
//! and shares no code with the library beyond the input types.

#![allow(dead_code)]

use fdrelay::linalg::{null_space_basis, ComplexMatrix, HermitianMatrix};
use fdrelay::model::{ChannelRealization, DesignPoint, SystemParams};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Cv = Vec<Complex64>;

pub struct Plain {
    pub h_ar: Cv,
    pub h_br: Cv,
    pub h_ra: Cv,
    pub h_rb: Cv,
    pub h_re: Cv,
    /// Row-major `m_r × m_t`.
    pub h_rr: Vec<Cv>,
    pub h_aa: Complex64,
    pub h_bb: Complex64,
}

impl Plain {
    pub fn from(ch: &ChannelRealization) -> Self {
        let v = |x: &fdrelay::linalg::ComplexVector| x.iter().copied().collect::<Cv>();
        Plain {
            h_ar: v(&ch.h_ar),
            h_br: v(&ch.h_br),
            h_ra: v(&ch.h_ra),
            h_rb: v(&ch.h_rb),
            h_re: v(&ch.h_re),
            h_rr: (0..ch.h_rr.nrows())
                .map(|i| (0..ch.h_rr.ncols()).map(|j| ch.h_rr[(i, j)]).collect())
                .collect(),
            h_aa: ch.h_aa,
            h_bb: ch.h_bb,
        }
    }
}

pub fn rows(m: &ComplexMatrix) -> Vec<Cv> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `h† M` for row-major `M`.
fn left(h: &[Complex64], m: &[Cv]) -> Cv {
    let cols = m[0].len();
    (0..cols)
        .map(|j| (0..m.len()).map(|i| h[i].conj() * m[i][j]).sum())
        .collect()
}

/// `M x` for row-major `M`.
fn right(m: &[Cv], x: &[Complex64]) -> Cv {
    m.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn quad(m: &[Cv], h: &[Complex64]) -> f64 {
    dot(&left(h, m), h).re
}

#[derive(Debug, Clone, Copy)]
pub struct ScalarPerf {
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub gamma_e: f64,
    pub rate_a: f64,
    pub rate_b: f64,
    pub rate_e: f64,
    pub secrecy_rate: f64,
    pub relay_power: f64,
    pub harvested: f64,
    pub total_power: f64,
    pub zf_residual: f64,
}

/// Received SINRs, rates, relay power and harvested energy written out term
/// by term from the signal model.
pub fn scalar_perf(
    w: &[Cv],
    q: &[Cv],
    rho: f64,
    p_a: f64,
    p_b: f64,
    ch: &Plain,
    params: &SystemParams,
) -> ScalarPerf {
    let s2 = params.sigma2_r;
    let row_a = left(&ch.h_ra, w);
    let row_b = left(&ch.h_rb, w);
    let row_e = left(&ch.h_re, w);

    let useful_a = rho * p_b * dot(&row_a, &ch.h_br).norm_sqr();
    let noise_a = rho * s2 * norm2(&row_a) + p_a * ch.h_aa.norm_sqr() + quad(q, &ch.h_ra) + 1.0;
    let useful_b = rho * p_a * dot(&row_b, &ch.h_ar).norm_sqr();
    let noise_b = rho * s2 * norm2(&row_b) + p_b * ch.h_bb.norm_sqr() + quad(q, &ch.h_rb) + 1.0;
    let useful_e =
        rho * (p_a * dot(&row_e, &ch.h_ar).norm_sqr() + p_b * dot(&row_e, &ch.h_br).norm_sqr());
    let noise_e = rho * s2 * norm2(&row_e) + quad(q, &ch.h_re) + 1.0;

    let w_energy: f64 = w.iter().map(|r| norm2(r)).sum();
    let q_trace: f64 = (0..q.len()).map(|i| q[i][i].re).sum();
    let relay_power = rho
        * (p_a * norm2(&right(w, &ch.h_ar)) + p_b * norm2(&right(w, &ch.h_br)) + s2 * w_energy)
        + q_trace;
    let m_r = ch.h_ar.len() as f64;
    let harvested = params.beta
        * (1.0 - rho)
        * (p_a * norm2(&ch.h_ar) + p_b * norm2(&ch.h_br) + relay_power + s2 * m_r);

    // ‖H_RR W‖_F
    let m_t = ch.h_ra.len();
    let m_rcols = w[0].len();
    let mut zf = 0.0;
    for row in &ch.h_rr {
        for j in 0..m_rcols {
            let v: Complex64 = (0..m_t).map(|k| row[k] * w[k][j]).sum();
            zf += v.norm_sqr();
        }
    }

    let gamma_a = useful_a / noise_a;
    let gamma_b = useful_b / noise_b;
    let gamma_e = useful_e / noise_e;
    let rate_a = (1.0 + gamma_a).log2();
    let rate_b = (1.0 + gamma_b).log2();
    let rate_e = (1.0 + gamma_e).log2();
    ScalarPerf {
        gamma_a,
        gamma_b,
        gamma_e,
        rate_a,
        rate_b,
        rate_e,
        secrecy_rate: (rate_a + rate_b - rate_e).max(0.0),
        relay_power,
        harvested,
        total_power: p_a + p_b + relay_power,
        zf_residual: zf.sqrt(),
    }
}

pub fn scalar_perf_of(d: &DesignPoint, ch: &ChannelRealization, params: &SystemParams) -> ScalarPerf {
    scalar_perf(
        &rows(&d.w),
        &rows(d.q.matrix()),
        d.rho,
        d.p_a,
        d.p_b,
        &Plain::from(ch),
        params,
    )
}

/// Smallest relative margin of the four constraints, from the scalar model.
pub fn worst_margin(p: &ScalarPerf, params: &SystemParams) -> f64 {
    let energy_scale = if params.u_bar > 0.0 { params.u_bar } else { 1.0 };
    ((p.gamma_a - params.gamma_a) / params.gamma_a)
        .min((p.gamma_b - params.gamma_b) / params.gamma_b)
        .min((params.gamma_e - p.gamma_e) / params.gamma_e)
        .min((p.harvested - params.u_bar) / energy_scale)
}

pub fn cn(rng: &mut ChaCha8Rng, scale: f64) -> Complex64 {
    // Uniform on a disc is enough for test inputs.
    loop {
        let (a, b) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if a * a + b * b <= 1.0 {
            return Complex64::new(a * scale, b * scale);
        }
    }
}

/// Random `W` inside the zero-forcing null space and random PSD `Q`.
pub fn random_relay_design(
    ch: &ChannelRealization,
    rng: &mut ChaCha8Rng,
    w_scale: f64,
    q_scale: f64,
) -> (ComplexMatrix, HermitianMatrix) {
    let n = null_space_basis(&ch.h_rr).unwrap();
    let v = ComplexMatrix::from_fn(n.ncols(), ch.m_r(), |_, _| cn(rng, w_scale));
    let g = ComplexMatrix::from_fn(ch.m_t(), ch.m_t(), |_, _| cn(rng, q_scale));
    (&n * v, HermitianMatrix::new(&g * g.adjoint()).unwrap())
}

/// Smallest `P_B` with `Γ_A ≥ γ_A`, by bisection on the scalar model.
pub fn bisect_pb_min(w: &[Cv], q: &[Cv], rho: f64, p_a: f64, ch: &Plain, params: &SystemParams) -> f64 {
    let g = |p_b: f64| scalar_perf(w, q, rho, p_a, p_b, ch, params).gamma_a - params.gamma_a;
    let mut hi = 1.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Largest `P_B` with `Γ_B ≥ γ_B`, by bisection on the scalar model; zero when
/// even `P_B = 0` fails.
pub fn bisect_pb_max(w: &[Cv], q: &[Cv], rho: f64, p_a: f64, ch: &Plain, params: &SystemParams) -> f64 {
    let g = |p_b: f64| scalar_perf(w, q, rho, p_a, p_b, ch, params).gamma_b - params.gamma_b;
    if g(0.0) < 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while g(hi) >= 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub const RHO_GRID: usize = 100_000;

/// Smallest point of a uniform grid on `[1e-6, 1 − 1e-6]` where every
/// constraint holds.
pub fn rho_grid(w: &[Cv], q: &[Cv], p_a: f64, p_b: f64, ch: &Plain, params: &SystemParams) -> Option<f64> {
    let (lo, hi) = (1e-6, 1.0 - 1e-6);
    (0..RHO_GRID)
        .map(|k| lo + (hi - lo) * k as f64 / (RHO_GRID - 1) as f64)
        .find(|&rho| worst_margin(&scalar_perf(w, q, rho, p_a, p_b, ch, params), params) >= -1e-12)
}

/// Exhaustive relay-stage reference for two transmit and one receive antenna.
///
/// With a single null-space direction `n`, `W = n·v` and only `s = |v|²`
/// matters. Writing `Q = λ₁u₁u₁† + λ₂u₂u₂†` for an orthonormal pair, every
/// constraint and the relay power are linear in `(s, λ₁, λ₂) ≥ 0`, so for a
/// fixed pair the problem is a three-variable LP solved by vertex
/// enumeration. The pair is scanned on a grid over the unit sphere and the
/// best cell refined twice.
pub fn relay_oracle_2x1(
    ch: &ChannelRealization,
    params: &SystemParams,
    rho: f64,
    p_a: f64,
    p_b: f64,
) -> Option<f64> {
    let c = Plain::from(ch);
    assert_eq!(c.h_ra.len(), 2);
    assert_eq!(c.h_ar.len(), 1);
    let (h1, h2) = (c.h_rr[0][0], c.h_rr[0][1]);
    let nn = (h1.norm_sqr() + h2.norm_sqr()).sqrt();
    let n = [h2 / nn, -h1 / nn];
    let proj = |h: &[Complex64]| (h[0].conj() * n[0] + h[1].conj() * n[1]).norm_sqr();
    let (ka, kb, ke) = (proj(&c.h_ra), proj(&c.h_rb), proj(&c.h_re));
    let (ga, gb) = (c.h_ar[0].norm_sqr(), c.h_br[0].norm_sqr());
    let s2 = params.sigma2_r;
    let (gam_a, gam_b, gam_e) = (params.gamma_a, params.gamma_b, params.gamma_e);
    let carry = p_a * ga + p_b * gb + s2;
    let harvest = params.beta * (1.0 - rho);
    let obj = [rho * carry, 1.0, 1.0];

    let lp = |th: f64, ph: f64| -> Option<f64> {
        let e = Complex64::from_polar(1.0, ph);
        let u1 = [Complex64::new(th.cos(), 0.0), e * th.sin()];
        let u2 = [-e.conj() * th.sin(), Complex64::new(th.cos(), 0.0)];
        let an = |u: &[Complex64; 2], h: &[Complex64]| (u[0].conj() * h[0] + u[1].conj() * h[1]).norm_sqr();
        // Rows a·z ≤ b over z = (s, λ₁, λ₂).
        let rows: [([f64; 3], f64); 7] = [
            (
                [
                    -rho * p_b * ka * gb + gam_a * rho * s2 * ka,
                    gam_a * an(&u1, &c.h_ra),
                    gam_a * an(&u2, &c.h_ra),
                ],
                -gam_a * (p_a * c.h_aa.norm_sqr() + 1.0),
            ),
            (
                [
                    -rho * p_a * kb * ga + gam_b * rho * s2 * kb,
                    gam_b * an(&u1, &c.h_rb),
                    gam_b * an(&u2, &c.h_rb),
                ],
                -gam_b * (p_b * c.h_bb.norm_sqr() + 1.0),
            ),
            (
                [
                    rho * ke * (p_a * ga + p_b * gb) - gam_e * rho * s2 * ke,
                    -gam_e * an(&u1, &c.h_re),
                    -gam_e * an(&u2, &c.h_re),
                ],
                gam_e,
            ),
            (
                [-harvest * rho * carry, -harvest, -harvest],
                harvest * (p_a * ga + p_b * gb + s2) - params.u_bar,
            ),
            ([-1.0, 0.0, 0.0], 0.0),
            ([0.0, -1.0, 0.0], 0.0),
            ([0.0, 0.0, -1.0], 0.0),
        ];
        let mut best: Option<f64> = None;
        for i in 0..7 {
            for j in i + 1..7 {
                for k in j + 1..7 {
                    let Some(z) = solve3(&rows[i].0, &rows[j].0, &rows[k].0, [rows[i].1, rows[j].1, rows[k].1])
                    else {
                        continue;
                    };
                    let ok = rows.iter().all(|(a, b)| {
                        let lhs = a[0] * z[0] + a[1] * z[1] + a[2] * z[2];
                        let scale = a[0].abs() * z[0].abs() + a[1].abs() * z[1].abs() + a[2].abs() * z[2].abs() + b.abs();
                        lhs <= b + 1e-10 * scale.max(1e-300)
                    });
                    if ok {
                        let v = obj[0] * z[0] + obj[1] * z[1] + obj[2] * z[2];
                        best = Some(best.map_or(v, |b: f64| b.min(v)));
                    }
                }
            }
        }
        best
    };

    let mut best: Option<(f64, f64, f64)> = None;
    let scan = |best: &mut Option<(f64, f64, f64)>, th0: f64, th1: f64, ph0: f64, ph1: f64, step: f64| {
        let nt = ((th1 - th0) / step).ceil() as usize;
        let np = ((ph1 - ph0) / step).ceil() as usize;
        for a in 0..=nt {
            let th = (th0 + a as f64 * step).clamp(0.0, std::f64::consts::FRAC_PI_2);
            for b in 0..=np {
                let ph = ph0 + b as f64 * step;
                if let Some(v) = lp(th, ph) {
                    if best.is_none_or(|(bv, _, _)| v < bv) {
                        *best = Some((v, th, ph));
                    }
                }
            }
        }
    };
    scan(&mut best, 0.0, std::f64::consts::FRAC_PI_2, 0.0, 2.0 * std::f64::consts::PI, 0.02);
    for step in [0.002, 0.0002] {
        if let Some((_, th, ph)) = best {
            let r = 10.0 * step;
            scan(&mut best, th - r, th + r, ph - r, ph + r, step);
        }
    }
    best.map(|b| b.0)
}

fn solve3(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let m = [*a, *b, *c];
    let d = det(m);
    let scale: f64 = m.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    if d.abs() <= 1e-13 * scale.powi(3) {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, o) in out.iter_mut().enumerate() {
        let mut mm = m;
        for r in 0..3 {
            mm[r][col] = rhs[r];
        }
        *o = det(mm) / d;
    }
    Some(out)
}

/// Relative difference with a floor on the scale.
pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
