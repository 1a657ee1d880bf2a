//! Infeasible-start primal-dual interior-point method for real symmetric
//! block SDPs in standard form
//!
//! ```text
//!   min  Σ_k ⟨C_k, X_k⟩   s.t.  Σ_k ⟨A_ik, X_k⟩ = b_i,   X_k ⪰ 0
//! ```
//!
//! using the HKM search direction with a Mehrotra predictor-corrector.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

pub(crate) type Block = DMatrix<f64>;

#[derive(Debug, Clone)]
pub(crate) struct RealProblem {
    pub dims: Vec<usize>,
    pub c: Vec<Block>,
    /// `a[i][k]`: coefficient of constraint `i` on block `k`; `None` is zero.
    pub a: Vec<Vec<Option<Block>>>,
    pub b: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Converged,
    /// Iterates diverged; the problem is probably primal or dual infeasible.
    Diverged,
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmResult {
    pub status: IpmStatus,
    pub x: Vec<Block>,
    pub iterations: usize,
    pub pobj: f64,
}

fn inner(a: &Block, b: &Block) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn sym(m: Block) -> Block {
    let t = m.transpose();
    (m + t) * 0.5
}

fn inverse_spd(m: &Block) -> Option<Block> {
    Cholesky::new(m.clone()).map(|c| c.inverse())
}

/// Largest `α` keeping `M + α·D ⪰ 0`, given `M ≻ 0`.
fn max_step(m: &Block, d: &Block) -> Option<f64> {
    let chol: Cholesky<f64, Dyn> = Cholesky::new(m.clone())?;
    let l = chol.l();
    let half = l.solve_lower_triangular(d)?;
    let whole = l.solve_lower_triangular(&half.transpose())?;
    let eig = SymmetricEigen::new(sym(whole));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Some(if min < 0.0 { -1.0 / min } else { f64::INFINITY })
}

impl RealProblem {
    fn order(&self) -> usize {
        self.dims.iter().sum()
    }

    fn apply(&self, x: &[Block]) -> DVector<f64> {
        DVector::from_fn(self.a.len(), |i, _| {
            self.a[i]
                .iter()
                .zip(x)
                .filter_map(|(a, x)| a.as_ref().map(|a| inner(a, x)))
                .sum()
        })
    }

    fn apply_adjoint(&self, y: &DVector<f64>) -> Vec<Block> {
        let mut out: Vec<Block> = self.dims.iter().map(|&n| Block::zeros(n, n)).collect();
        for (i, row) in self.a.iter().enumerate() {
            for (k, a) in row.iter().enumerate() {
                if let Some(a) = a {
                    out[k] += a * y[i];
                }
            }
        }
        out
    }

    fn objective(&self, x: &[Block]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| inner(c, x)).sum()
    }
}

struct Direction {
    dx: Vec<Block>,
    dy: DVector<f64>,
    ds: Vec<Block>,
}

struct Iterate<'a> {
    p: &'a RealProblem,
    x: Vec<Block>,
    y: DVector<f64>,
    s: Vec<Block>,
}

impl Iterate<'_> {
    /// HKM direction for the complementarity target `rc` (already holding
    /// `σμS⁻¹ − X` and any corrector term).
    fn direction(
        &self,
        schur: &Cholesky<f64, Dyn>,
        s_inv: &[Block],
        rp: &DVector<f64>,
        rd: &[Block],
        rc: &[Block],
    ) -> Direction {
        let p = self.p;
        let x_rd_sinv: Vec<Block> = (0..p.dims.len())
            .map(|k| &self.x[k] * &rd[k] * &s_inv[k])
            .collect();
        let rhs = rp - p.apply(rc) + p.apply(&x_rd_sinv);
        let dy = schur.solve(&rhs);
        let aty = p.apply_adjoint(&dy);
        let ds: Vec<Block> = rd.iter().zip(&aty).map(|(r, a)| r - a).collect();
        let dx: Vec<Block> = (0..p.dims.len())
            .map(|k| &rc[k] - sym(&self.x[k] * &ds[k] * &s_inv[k]))
            .collect();
        Direction { dx, dy, ds }
    }

    fn step_lengths(&self, d: &Direction) -> Option<(f64, f64)> {
        let mut ap = f64::INFINITY;
        let mut ad = f64::INFINITY;
        for k in 0..self.x.len() {
            ap = ap.min(max_step(&self.x[k], &d.dx[k])?);
            ad = ad.min(max_step(&self.s[k], &d.ds[k])?);
        }
        Some((ap, ad))
    }
}

pub(crate) fn solve(p: &RealProblem, tol: f64, max_iter: usize) -> IpmResult {
    let nblocks = p.dims.len();
    let m = p.a.len();
    let n = p.order() as f64;
    let b_norm = p.b.norm();
    let c_norm = p.c.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();

    let mut x = Vec::with_capacity(nblocks);
    let mut s = Vec::with_capacity(nblocks);
    for (k, &dim) in p.dims.iter().enumerate() {
        let nk = dim as f64;
        let mut xi = 10f64.max(nk.sqrt());
        let mut eta = 10f64.max(nk.sqrt()).max(p.c[k].norm());
        for (i, row) in p.a.iter().enumerate() {
            if let Some(a) = &row[k] {
                xi = xi.max(nk * (1.0 + p.b[i].abs()) / (1.0 + a.norm()));
                eta = eta.max(a.norm());
            }
        }
        x.push(Block::identity(dim, dim) * xi);
        s.push(Block::identity(dim, dim) * eta);
    }
    let mut it = Iterate {
        p,
        x,
        y: DVector::zeros(m),
        s,
    };
    let scale0 = it.x.iter().map(|x| x.norm()).fold(0.0, f64::max);

    let mut status = IpmStatus::MaxIterations;
    let mut iterations = 0;
    let mut tiny_steps = 0;
    for iter in 0..max_iter {
        iterations = iter;
        let ax = p.apply(&it.x);
        let rp = &p.b - ax;
        let aty = p.apply_adjoint(&it.y);
        let rd: Vec<Block> = (0..nblocks).map(|k| &p.c[k] - &aty[k] - &it.s[k]).collect();
        let pobj = p.objective(&it.x);
        let dobj = p.b.dot(&it.y);
        let xs: f64 = it.x.iter().zip(&it.s).map(|(x, s)| inner(x, s)).sum();
        let mu = xs / n;

        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt() / (1.0 + c_norm);
        let denom = 1.0 + pobj.abs() + dobj.abs();
        let gap = ((pobj - dobj).abs()).max(xs) / denom;
        if pinf < tol && dinf < tol && gap < tol {
            status = IpmStatus::Converged;
            break;
        }
        let x_scale = it.x.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if x_scale > 1e12 * (1.0 + scale0) || it.y.norm() > 1e12 {
            status = IpmStatus::Diverged;
            break;
        }

        let Some(s_inv) = it.s.iter().map(inverse_spd).collect::<Option<Vec<_>>>() else {
            status = IpmStatus::Stalled;
            break;
        };

        // Schur complement M_ij = Σ_k ⟨A_ik, X_k A_jk S_k⁻¹⟩.
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            for k in 0..nblocks {
                let Some(ajk) = &p.a[j][k] else { continue };
                let t = &it.x[k] * ajk * &s_inv[k];
                for i in 0..m {
                    if let Some(aik) = &p.a[i][k] {
                        schur[(i, j)] += inner(aik, &t);
                    }
                }
            }
        }
        let schur = sym(schur);
        let mut reg = 0.0;
        let diag_max = schur.diagonal().iter().copied().fold(0.0, f64::max).max(1e-300);
        let chol = loop {
            let mut reg_m = schur.clone();
            for i in 0..m {
                reg_m[(i, i)] += reg;
            }
            if let Some(c) = Cholesky::new(reg_m) {
                break Some(c);
            }
            reg = if reg == 0.0 { diag_max * 1e-14 } else { reg * 100.0 };
            if reg > diag_max {
                break None;
            }
        };
        let Some(chol) = chol else {
            status = IpmStatus::Stalled;
            break;
        };

        // Predictor.
        let rc_aff: Vec<Block> = it.x.iter().map(|x| -x).collect();
        let aff = it.direction(&chol, &s_inv, &rp, &rd, &rc_aff);
        let Some((ap_aff, ad_aff)) = it.step_lengths(&aff) else {
            status = IpmStatus::Stalled;
            break;
        };
        let ap_aff = ap_aff.min(1.0);
        let ad_aff = ad_aff.min(1.0);
        let mu_aff: f64 = (0..nblocks)
            .map(|k| inner(&(&it.x[k] + &aff.dx[k] * ap_aff), &(&it.s[k] + &aff.ds[k] * ad_aff)))
            .sum::<f64>()
            / n;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let rc: Vec<Block> = (0..nblocks)
            .map(|k| {
                &s_inv[k] * (sigma * mu) - &it.x[k] - sym(&aff.dx[k] * &aff.ds[k] * &s_inv[k])
            })
            .collect();
        let dir = it.direction(&chol, &s_inv, &rp, &rd, &rc);
        let Some((ap, ad)) = it.step_lengths(&dir) else {
            status = IpmStatus::Stalled;
            break;
        };
        let tau = 0.9 + 0.09 * ap_aff.min(ad_aff);
        let ap = (tau * ap).min(1.0);
        let ad = (tau * ad).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            tiny_steps += 1;
            if tiny_steps >= 3 {
                status = IpmStatus::Stalled;
                break;
            }
        } else {
            tiny_steps = 0;
        }
        for k in 0..nblocks {
            it.x[k] += &dir.dx[k] * ap;
            it.s[k] += &dir.ds[k] * ad;
        }
        it.y += &dir.dy * ad;
        iterations = iter + 1;
    }

    let pobj = p.objective(&it.x);
    IpmResult {
        status,
        x: it.x,
        iterations,
        pobj,
    }
}
