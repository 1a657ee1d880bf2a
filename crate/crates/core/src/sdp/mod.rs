//! Small dense semidefinite programs over Hermitian PSD blocks.
//!
//! A problem is
//!
//! ```text
//!   min  Σ_k Re tr(C_k X_k)
//!   s.t. Σ_k Re tr(A_ik X_k)  {≤, =, ≥}  b_i,     X_k ⪰ 0 (Hermitian)
//! ```
//!
//! Blocks whose coefficients are all real are solved as real symmetric
//! blocks; complex blocks go through the real embedding
//! `A + iB ↦ [[A, −B], [B, A]]`. Inequalities get nonnegative 1×1 slack
//! blocks. When the main solve fails to converge a phase-1 problem decides
//! between `Infeasible` and `MaxIterations`.

mod ipm;

use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianMatrix};
use ipm::{Block, IpmStatus, RealProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Constraint {
    /// One coefficient per block.
    pub coeffs: Vec<HermitianMatrix>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub objective: Vec<HermitianMatrix>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub block_values: Vec<HermitianMatrix>,
    pub objective_value: f64,
    pub iterations: usize,
    pub max_constraint_violation: f64,
    pub min_block_eigenvalue: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 200,
        }
    }
}

/// Independent re-check of a candidate solution.
#[derive(Debug, Clone, Copy)]
pub struct Certificate {
    pub feasible: bool,
    /// Largest absolute constraint violation.
    pub max_violation: f64,
    pub min_eigenvalue: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<HermitianMatrix>, sense: Sense, rhs: f64) -> Self {
        Self { coeffs, sense, rhs }
    }

    pub fn lhs(&self, values: &[HermitianMatrix]) -> f64 {
        self.coeffs.iter().zip(values).map(|(a, x)| a.inner(x)).sum()
    }

    pub fn violation(&self, values: &[HermitianMatrix]) -> f64 {
        let lhs = self.lhs(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

impl SdpProblem {
    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() || self.blocks.contains(&0) {
            return Err(Error::EmptyMatrix);
        }
        let check = |coeffs: &[HermitianMatrix], what: &str| -> Result<()> {
            if coeffs.len() != self.blocks.len() {
                return Err(Error::shape(
                    format!("{} {what} blocks", self.blocks.len()),
                    coeffs.len(),
                ));
            }
            for (c, &d) in coeffs.iter().zip(&self.blocks) {
                if c.dim() != d {
                    return Err(Error::shape(format!("{d}x{d} {what} block"), c.dim()));
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for c in &self.constraints {
            check(&c.coeffs, "constraint")?;
            if !c.rhs.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, values: &[HermitianMatrix]) -> f64 {
        self.objective.iter().zip(values).map(|(c, x)| c.inner(x)).sum()
    }

    /// Same problem with every Hermitian block replaced by its real
    /// symmetric embedding (coefficients halved so values are preserved).
    pub fn real_embedding(&self) -> SdpProblem {
        let embed = |h: &HermitianMatrix| {
            let n = h.dim();
            let m = h.matrix();
            let e = ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| {
                let (bi, ri) = (i / n, i % n);
                let (bj, rj) = (j / n, j % n);
                let z = m[(ri, rj)];
                let v = match (bi, bj) {
                    (0, 0) | (1, 1) => z.re,
                    (0, 1) => -z.im,
                    _ => z.im,
                };
                Complex64::new(0.5 * v, 0.0)
            });
            HermitianMatrix::from_matrix_unchecked(e)
        };
        SdpProblem {
            blocks: self.blocks.iter().map(|d| 2 * d).collect(),
            objective: self.objective.iter().map(embed).collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| Constraint::new(c.coeffs.iter().map(embed).collect(), c.sense, c.rhs))
                .collect(),
        }
    }
}

/// How a Hermitian block maps into the real problem.
#[derive(Debug, Clone, Copy)]
enum BlockMap {
    Real(usize),
    Embedded(usize),
}

impl BlockMap {
    fn real_dim(self) -> usize {
        match self {
            BlockMap::Real(n) => n,
            BlockMap::Embedded(n) => 2 * n,
        }
    }

    fn to_real(self, h: &HermitianMatrix) -> Block {
        let m = h.matrix();
        match self {
            BlockMap::Real(n) => Block::from_fn(n, n, |i, j| m[(i, j)].re),
            BlockMap::Embedded(n) => Block::from_fn(2 * n, 2 * n, |i, j| {
                let (bi, ri) = (i / n, i % n);
                let (bj, rj) = (j / n, j % n);
                let z = m[(ri, rj)];
                0.5 * match (bi, bj) {
                    (0, 0) | (1, 1) => z.re,
                    (0, 1) => -z.im,
                    _ => z.im,
                }
            }),
        }
    }

    fn from_real(self, x: &Block) -> HermitianMatrix {
        let m = match self {
            BlockMap::Real(n) => ComplexMatrix::from_fn(n, n, |i, j| Complex64::new(x[(i, j)], 0.0)),
            BlockMap::Embedded(n) => ComplexMatrix::from_fn(n, n, |i, j| {
                let re = 0.5 * (x[(i, j)] + x[(n + i, n + j)]);
                let im = 0.5 * (x[(n + i, j)] - x[(i, n + j)]);
                Complex64::new(re, im)
            }),
        };
        HermitianMatrix::from_matrix_unchecked(m)
    }
}

struct Lowered {
    real: RealProblem,
    maps: Vec<BlockMap>,
    obj_scale: f64,
}

fn lower(problem: &SdpProblem) -> Lowered {
    let maps: Vec<BlockMap> = (0..problem.blocks.len())
        .map(|k| {
            let real = problem.objective[k].is_real()
                && problem.constraints.iter().all(|c| c.coeffs[k].is_real());
            if real {
                BlockMap::Real(problem.blocks[k])
            } else {
                BlockMap::Embedded(problem.blocks[k])
            }
        })
        .collect();
    let nmain = maps.len();
    let slack_rows: Vec<usize> = problem
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| c.sense != Sense::Eq)
        .map(|(i, _)| i)
        .collect();

    let mut dims: Vec<usize> = maps.iter().map(|m| m.real_dim()).collect();
    dims.extend(std::iter::repeat_n(1, slack_rows.len()));

    let mut c: Vec<Block> = maps
        .iter()
        .zip(&problem.objective)
        .map(|(m, h)| m.to_real(h))
        .collect();
    let obj_scale = c.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt().max(1e-12);
    for b in &mut c {
        *b /= obj_scale;
    }
    c.extend(std::iter::repeat_n(Block::zeros(1, 1), slack_rows.len()));

    let mut a = Vec::with_capacity(problem.constraints.len());
    let mut b = Vec::with_capacity(problem.constraints.len());
    for (i, con) in problem.constraints.iter().enumerate() {
        let mut row: Vec<Option<Block>> = maps
            .iter()
            .zip(&con.coeffs)
            .map(|(m, h)| (!h.is_zero()).then(|| m.to_real(h)))
            .collect();
        row.extend(std::iter::repeat_n(None, slack_rows.len()));
        if let Some(pos) = slack_rows.iter().position(|&r| r == i) {
            let sign = if con.sense == Sense::Ge { -1.0 } else { 1.0 };
            row[nmain + pos] = Some(Block::from_element(1, 1, sign));
        }
        let norm = row
            .iter()
            .flatten()
            .map(|m| m.norm_squared())
            .sum::<f64>()
            .sqrt();
        let scale = if norm > 0.0 { norm } else { 1.0 };
        for m in row.iter_mut().flatten() {
            *m /= scale;
        }
        a.push(row);
        b.push(con.rhs / scale);
    }
    Lowered {
        real: RealProblem {
            dims,
            c,
            a,
            b: DVector::from_vec(b),
        },
        maps,
        obj_scale,
    }
}

/// Minimum of `Σ |residual_i| + δ·Σ tr X_k` over the relaxed constraints;
/// near zero iff the original constraints are (approximately) satisfiable.
fn phase_one_infeasibility(real: &RealProblem, settings: &SdpSettings) -> Option<f64> {
    const TRACE_WEIGHT: f64 = 1e-10;
    let m = real.a.len();
    let nblocks = real.dims.len();
    let mut dims = real.dims.clone();
    dims.extend(std::iter::repeat_n(1, 2 * m));
    let mut c: Vec<Block> = real
        .dims
        .iter()
        .map(|&n| Block::identity(n, n) * TRACE_WEIGHT)
        .collect();
    c.extend(std::iter::repeat_n(Block::from_element(1, 1, 1.0), 2 * m));
    let a = real
        .a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut row = row.clone();
            row.extend(std::iter::repeat_n(None, 2 * m));
            row[nblocks + 2 * i] = Some(Block::from_element(1, 1, 1.0));
            row[nblocks + 2 * i + 1] = Some(Block::from_element(1, 1, -1.0));
            row
        })
        .collect();
    let phase1 = RealProblem {
        dims,
        c,
        a,
        b: real.b.clone(),
    };
    let r = ipm::solve(&phase1, settings.tol, settings.max_iter);
    (r.status == IpmStatus::Converged).then(|| {
        r.x[nblocks..].iter().map(|x| x[(0, 0)]).sum::<f64>()
    })
}

pub fn solve_sdp(problem: &SdpProblem, settings: &SdpSettings) -> Result<SdpSolution> {
    problem.validate()?;
    if !(settings.tol > 0.0) {
        return Err(Error::InvalidParams(format!("SDP tolerance {}", settings.tol)));
    }
    let lowered = lower(problem);
    let result = ipm::solve(&lowered.real, settings.tol, settings.max_iter);
    let block_values: Vec<HermitianMatrix> = lowered
        .maps
        .iter()
        .zip(&result.x)
        .map(|(m, x)| m.from_real(x))
        .collect();
    let objective_value = result.pobj * lowered.obj_scale;
    let mut status = match result.status {
        IpmStatus::Converged => SdpStatus::Optimal,
        _ => SdpStatus::MaxIterations,
    };
    if status != SdpStatus::Optimal {
        let threshold = 1e-6;
        match phase_one_infeasibility(&lowered.real, settings) {
            Some(v) if v > threshold => status = SdpStatus::Infeasible,
            Some(_) if result.status == IpmStatus::Diverged && objective_value < -1e8 => {
                status = SdpStatus::Unbounded
            }
            _ => {}
        }
    }
    let cert = certify_solution_values(problem, &block_values);
    Ok(SdpSolution {
        status,
        objective_value: problem.objective_value(&block_values),
        block_values,
        iterations: result.iterations,
        max_constraint_violation: cert.max_violation,
        min_block_eigenvalue: cert.min_eigenvalue,
    })
}

fn certify_solution_values(problem: &SdpProblem, values: &[HermitianMatrix]) -> Certificate {
    let max_violation = problem
        .constraints
        .iter()
        .map(|c| c.violation(values))
        .fold(0.0, f64::max);
    let min_eigenvalue = values
        .iter()
        .map(|x| x.min_eigenvalue())
        .fold(f64::INFINITY, f64::min);
    let rhs_scale = problem
        .constraints
        .iter()
        .map(|c| c.rhs.abs())
        .fold(0.0, f64::max);
    Certificate {
        feasible: max_violation <= 1e-6 * (1.0 + rhs_scale) && min_eigenvalue >= -1e-7,
        max_violation,
        min_eigenvalue,
    }
}

/// Recomputes every constraint residual and block eigenvalue from the
/// solution values alone.
pub fn certify_solution(problem: &SdpProblem, solution: &SdpSolution) -> Result<Certificate> {
    if solution.block_values.len() != problem.blocks.len()
        || solution
            .block_values
            .iter()
            .zip(&problem.blocks)
            .any(|(x, &d)| x.dim() != d)
    {
        return Err(Error::shape(
            format!("{:?} block values", problem.blocks),
            format!(
                "{:?}",
                solution.block_values.iter().map(|x| x.dim()).collect::<Vec<_>>()
            ),
        ));
    }
    Ok(certify_solution_values(problem, &solution.block_values))
}

fn write_matrix(f: &mut fmt::Formatter<'_>, m: &HermitianMatrix) -> fmt::Result {
    let m = m.matrix();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:e} {:e}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        writeln!(f, "{}", row.join("  "))?;
    }
    Ok(())
}

/// Plain-text dump: block dimensions, objective blocks row-major as
/// `re im` pairs, then each constraint's sense, right-hand side and blocks.
impl fmt::Display for SdpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.blocks.iter().map(|d| d.to_string()).collect();
        writeln!(f, "blocks {}", dims.join(" "))?;
        writeln!(f, "objective")?;
        for c in &self.objective {
            write_matrix(f, c)?;
        }
        writeln!(f, "constraints {}", self.constraints.len())?;
        for (i, con) in self.constraints.iter().enumerate() {
            writeln!(f, "constraint {i} {} {:e}", con.sense, con.rhs)?;
            for c in &con.coeffs {
                write_matrix(f, c)?;
            }
        }
        Ok(())
    }
}
