//! Infeasible primal-dual path-following method with the HKM search
//! direction and Mehrotra predictor-corrector steps.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::problem::{re_trace_product, BlockId, ConicProblem, LinExpr, ScalarId};
use crate::HermMatrix;

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Target for relative gap and scaled primal/dual residuals.
    pub tol: f64,
    pub max_iter: usize,
    /// Ratio beyond which a diverging dual (primal) objective is accepted
    /// as an infeasibility (unboundedness) certificate.
    pub infeasibility_ratio: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 150, infeasibility_ratio: 1e8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// No point satisfies the constraints.
    Infeasible,
    /// The objective is unbounded below on the feasible set.
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Scaled primal residual `||b - A(X)|| / (1 + ||b||)`.
    pub primal_residual: f64,
    /// Scaled dual residual `||C - Z - A*(y)|| / (1 + ||C||)`.
    pub dual_residual: f64,
    /// `<X, Z> / (1 + |pobj| + |dobj|)`.
    pub relative_gap: f64,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("solver failure ({reason}): primal residual {:.3e}, dual residual {:.3e}, gap {:.3e} after {} iterations",
        stats.primal_residual, stats.dual_residual, stats.relative_gap, stats.iterations)]
    SolverFailure { reason: String, stats: SolveStats },
}

/// Primal-dual solution. For `Infeasible`/`Unbounded` statuses the
/// variable values are the last iterate and carry no meaning.
#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    pub blocks: Vec<HermMatrix>,
    pub scalars: Vec<f64>,
    pub duals: Vec<f64>,
    pub stats: SolveStats,
}

impl Solution {
    pub fn block(&self, id: BlockId) -> &HermMatrix {
        &self.blocks[id.0]
    }

    pub fn scalar(&self, id: ScalarId) -> f64 {
        self.scalars[id.0]
    }

    pub fn objective(&self) -> f64 {
        self.stats.primal_objective
    }

    pub fn value(&self, expr: &LinExpr) -> f64 {
        expr.evaluate(&self.blocks, &self.scalars)
    }
}

/// Dense internal data in scaled form.
struct Data {
    sizes: Vec<usize>,
    lp: usize,
    m: usize,
    /// `a[i][b]`, `None` when constraint `i` does not touch block `b`.
    a: Vec<Vec<Option<HermMatrix>>>,
    a_lp: Vec<Vec<(usize, f64)>>,
    b: DVector<f64>,
    c: Vec<HermMatrix>,
    c_lp: DVector<f64>,
    row_scale: Vec<f64>,
    b_scale: f64,
    c_scale: f64,
}

#[derive(Clone)]
struct Point {
    x: Vec<HermMatrix>,
    x_lp: DVector<f64>,
    y: DVector<f64>,
    z: Vec<HermMatrix>,
    z_lp: DVector<f64>,
}

fn zeros(n: usize) -> HermMatrix {
    DMatrix::from_element(n, n, Complex64::new(0.0, 0.0))
}

fn scaled_identity(n: usize, s: f64) -> HermMatrix {
    DMatrix::from_diagonal_element(n, n, Complex64::new(s, 0.0))
}

fn herm_part(g: &HermMatrix) -> HermMatrix {
    (g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

fn fro_sq(m: &HermMatrix) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum()
}

fn real_inner(a: &HermMatrix, b: &HermMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

impl Data {
    fn from_problem(p: &ConicProblem) -> Result<Self, SolveError> {
        let sizes = p.block_sizes().to_vec();
        let lp = p.num_scalars();
        let m = p.num_constraints();
        let mut a = Vec::with_capacity(m);
        let mut a_lp = Vec::with_capacity(m);
        let mut b = DVector::zeros(m);
        let mut row_scale = Vec::with_capacity(m);
        for (i, con) in p.constraints().iter().enumerate() {
            let mut row: Vec<Option<HermMatrix>> = vec![None; sizes.len()];
            let mut norm_sq = 0.0;
            for (id, coeff) in con.expr.block_terms() {
                norm_sq += fro_sq(coeff);
                row[id.index()] = Some(coeff.clone());
            }
            let mut lp_row: Vec<(usize, f64)> =
                con.expr.scalar_terms().filter(|(_, c)| *c != 0.0).map(|(id, c)| (id.index(), c)).collect();
            lp_row.sort_by_key(|(j, _)| *j);
            norm_sq += lp_row.iter().map(|(_, c)| c * c).sum::<f64>();
            let norm = norm_sq.sqrt();
            if norm == 0.0 || !norm.is_finite() {
                return Err(SolveError::InvalidProblem(format!(
                    "constraint {i} ({}) has a zero or non-finite coefficient row",
                    con.label
                )));
            }
            for blk in row.iter_mut().flatten() {
                *blk /= Complex64::new(norm, 0.0);
            }
            for (_, c) in lp_row.iter_mut() {
                *c /= norm;
            }
            a.push(row);
            a_lp.push(lp_row);
            b[i] = con.rhs / norm;
            row_scale.push(norm);
        }
        let mut c: Vec<HermMatrix> = sizes.iter().map(|&n| zeros(n)).collect();
        let mut c_lp: DVector<f64> = DVector::zeros(lp);
        for (id, coeff) in p.objective().block_terms() {
            c[id.index()] += coeff;
        }
        for (id, coeff) in p.objective().scalar_terms() {
            c_lp[id.index()] += coeff;
        }
        let b_scale = b.norm().max(1.0);
        b /= b_scale;
        let c_norm = (c.iter().map(fro_sq).sum::<f64>() + c_lp.norm_squared()).sqrt();
        let c_scale = c_norm.max(1.0);
        for blk in c.iter_mut() {
            *blk /= Complex64::new(c_scale, 0.0);
        }
        c_lp /= c_scale;
        if !b.iter().all(|v| v.is_finite()) || !c_lp.iter().all(|v| v.is_finite()) {
            return Err(SolveError::InvalidProblem("non-finite problem data".into()));
        }
        Ok(Self { sizes, lp, m, a, a_lp, b, c, c_lp, row_scale, b_scale, c_scale })
    }

    fn barrier_degree(&self) -> f64 {
        (self.sizes.iter().sum::<usize>() + self.lp) as f64
    }

    /// `A(G)_i = sum_b Re tr(A_ib G_b) + a_i . g_lp`; `G` need not be Hermitian.
    fn apply(&self, g: &[HermMatrix], g_lp: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.m, |i, _| {
            let mut acc = 0.0;
            for (blk, gb) in self.a[i].iter().zip(g) {
                if let Some(ab) = blk {
                    acc += re_trace_product(ab, gb);
                }
            }
            for &(j, c) in &self.a_lp[i] {
                acc += c * g_lp[j];
            }
            acc
        })
    }

    fn apply_adjoint(&self, y: &DVector<f64>) -> (Vec<HermMatrix>, DVector<f64>) {
        let mut out: Vec<HermMatrix> = self.sizes.iter().map(|&n| zeros(n)).collect();
        let mut out_lp = DVector::zeros(self.lp);
        for i in 0..self.m {
            let yi = y[i];
            if yi == 0.0 {
                continue;
            }
            for (blk, ob) in self.a[i].iter().zip(out.iter_mut()) {
                if let Some(ab) = blk {
                    *ob += ab * Complex64::new(yi, 0.0);
                }
            }
            for &(j, c) in &self.a_lp[i] {
                out_lp[j] += yi * c;
            }
        }
        (out, out_lp)
    }

    fn c_norm(&self) -> f64 {
        (self.c.iter().map(fro_sq).sum::<f64>() + self.c_lp.norm_squared()).sqrt()
    }
}

fn inverse_psd(m: &HermMatrix) -> Option<HermMatrix> {
    Cholesky::new(m.clone()).map(|c| herm_part(&c.inverse()))
}

/// Largest `alpha` with `x + alpha dx` PSD, or infinity.
fn max_step_psd(x: &HermMatrix, dx: &HermMatrix) -> f64 {
    let Some(chol) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let l = chol.l();
    let Some(t1) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(t2) = l.solve_lower_triangular(&t1.adjoint()) else {
        return 0.0;
    };
    let sym = herm_part(&t2);
    let lmin = sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

fn max_step_lp(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter().zip(dx.iter()).filter(|(_, d)| **d < 0.0).map(|(v, d)| -v / d).fold(f64::INFINITY, f64::min)
}

struct Direction {
    dx: Vec<HermMatrix>,
    dy: DVector<f64>,
    dx_lp: DVector<f64>,
    dz: Vec<HermMatrix>,
    dz_lp: DVector<f64>,
}

struct Residuals {
    rp: DVector<f64>,
    rd: Vec<HermMatrix>,
    rd_lp: DVector<f64>,
}

/// Solves `problem` to the requested accuracy.
pub fn solve(problem: &ConicProblem, opts: &SolverOptions) -> Result<Solution, SolveError> {
    let data = Data::from_problem(problem)?;
    let nb = data.barrier_degree();
    if nb == 0.0 {
        return Err(SolveError::InvalidProblem("problem has no variables".into()));
    }
    let sqrt_n = nb.sqrt();
    let b_max = data.b.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let xi = (10.0_f64).max(sqrt_n).max(sqrt_n * (1.0 + b_max) / 2.0);
    let zeta = (10.0_f64).max(sqrt_n).max(data.c_norm());

    let mut pt = Point {
        x: data.sizes.iter().map(|&n| scaled_identity(n, xi)).collect(),
        x_lp: DVector::from_element(data.lp, xi),
        y: DVector::zeros(data.m),
        z: data.sizes.iter().map(|&n| scaled_identity(n, zeta)).collect(),
        z_lp: DVector::from_element(data.lp, zeta),
    };

    let b_norm = data.b.norm();
    let c_norm = data.c_norm();
    let mut stats = SolveStats {
        iterations: 0,
        primal_objective: 0.0,
        dual_objective: 0.0,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        relative_gap: f64::INFINITY,
    };
    let mut stalled = 0usize;

    for iter in 0..=opts.max_iter {
        let res = residuals(&data, &pt);
        let pobj = pt.x.iter().zip(&data.c).map(|(x, c)| real_inner(x, c)).sum::<f64>() + pt.x_lp.dot(&data.c_lp);
        let dobj = data.b.dot(&pt.y);
        let xz = pt.x.iter().zip(&pt.z).map(|(x, z)| real_inner(x, z)).sum::<f64>() + pt.x_lp.dot(&pt.z_lp);
        let rd_norm = (res.rd.iter().map(fro_sq).sum::<f64>() + res.rd_lp.norm_squared()).sqrt();
        stats = SolveStats {
            iterations: iter,
            primal_objective: pobj,
            dual_objective: dobj,
            primal_residual: res.rp.norm() / (1.0 + b_norm),
            dual_residual: rd_norm / (1.0 + c_norm),
            relative_gap: xz / (1.0 + pobj.abs() + dobj.abs()),
        };
        let obj_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        if stats.primal_residual <= opts.tol
            && stats.dual_residual <= opts.tol
            && stats.relative_gap.max(obj_gap) <= opts.tol
        {
            return Ok(finish(&data, pt, SolveStatus::Optimal, stats));
        }
        if !(pobj.is_finite() && dobj.is_finite() && xz.is_finite()) {
            return Err(SolveError::SolverFailure { reason: "non-finite iterate".into(), stats });
        }

        // Infeasibility certificates on the (scaled) iterate, normalized by
        // the objective so that diverging iterates do not overflow.
        if dobj > 0.0 {
            let inv = 1.0 / dobj;
            let (aty, aty_lp) = data.apply_adjoint(&(&pt.y * inv));
            let cert = (aty.iter().zip(&pt.z).map(|(a, z)| fro_sq(&(a + z * Complex64::new(inv, 0.0)))).sum::<f64>()
                + (aty_lp + &pt.z_lp * inv).norm_squared())
            .sqrt();
            if cert * opts.infeasibility_ratio < 1.0 {
                return Ok(finish(&data, pt, SolveStatus::Infeasible, stats));
            }
        }
        if pobj < 0.0 {
            let inv = -1.0 / pobj;
            let x: Vec<HermMatrix> = pt.x.iter().map(|x| x * Complex64::new(inv, 0.0)).collect();
            let ax = data.apply(&x, &(&pt.x_lp * inv));
            if ax.norm() * opts.infeasibility_ratio < 1.0 {
                return Ok(finish(&data, pt, SolveStatus::Unbounded, stats));
            }
        }
        if iter == opts.max_iter {
            break;
        }

        let mu = xz / nb;
        let zinv: Vec<HermMatrix> = match pt.z.iter().map(inverse_psd).collect::<Option<Vec<_>>>() {
            Some(v) => v,
            None => return Err(SolveError::SolverFailure { reason: "dual iterate left the cone".into(), stats }),
        };
        let schur = schur_matrix(&data, &pt, &zinv);
        let Some(factor) = factorize(schur) else {
            return Err(SolveError::SolverFailure { reason: "singular Schur complement".into(), stats });
        };

        // Predictor.
        let rc_pred: Vec<HermMatrix> = pt.x.iter().zip(&pt.z).map(|(x, z)| -(x * z)).collect();
        let rc_pred_lp = -pt.x_lp.component_mul(&pt.z_lp);
        let pred = direction(&data, &pt, &zinv, &res, &factor, &rc_pred, &rc_pred_lp);
        let (ap, ad) = step_lengths(&pt, &pred);
        let ap1 = ap.min(1.0);
        let ad1 = ad.min(1.0);
        let xz_next: f64 =
            pt.x.iter()
                .zip(&pred.dx)
                .zip(pt.z.iter().zip(&pred.dz))
                .map(|((x, dx), (z, dz))| {
                    real_inner(&(x + dx * Complex64::new(ap1, 0.0)), &(z + dz * Complex64::new(ad1, 0.0)))
                })
                .sum::<f64>()
                + (&pt.x_lp + &pred.dx_lp * ap1).dot(&(&pt.z_lp + &pred.dz_lp * ad1));
        let expon = (3.0 * ap1.min(ad1).powi(2)).max(1.0);
        let sigma = (xz_next / xz).max(0.0).powf(expon).min(1.0);

        // Corrector.
        let target = sigma * mu;
        let rc: Vec<HermMatrix> =
            pt.x.iter()
                .zip(&pt.z)
                .zip(pred.dx.iter().zip(&pred.dz))
                .map(|((x, z), (dx, dz))| {
                    let n = x.nrows();
                    scaled_identity(n, target) - x * z - dx * dz
                })
                .collect();
        let rc_lp = DVector::from_fn(data.lp, |j, _| target - pt.x_lp[j] * pt.z_lp[j] - pred.dx_lp[j] * pred.dz_lp[j]);
        let corr = direction(&data, &pt, &zinv, &res, &factor, &rc, &rc_lp);
        let (ap, ad) = step_lengths(&pt, &corr);
        let gamma = 0.9 + 0.09 * ap1.min(ad1);
        let alpha_p = (gamma * ap).min(1.0);
        let alpha_d = (gamma * ad).min(1.0);
        if alpha_p < 1e-10 && alpha_d < 1e-10 {
            stalled += 1;
            if stalled > 3 {
                return Err(SolveError::SolverFailure { reason: "step length collapsed".into(), stats });
            }
        } else {
            stalled = 0;
        }

        let cp = Complex64::new(alpha_p, 0.0);
        let cd = Complex64::new(alpha_d, 0.0);
        for (x, dx) in pt.x.iter_mut().zip(&corr.dx) {
            *x += dx * cp;
            *x = herm_part(x);
        }
        pt.x_lp += &corr.dx_lp * alpha_p;
        for (z, dz) in pt.z.iter_mut().zip(&corr.dz) {
            *z += dz * cd;
            *z = herm_part(z);
        }
        pt.z_lp += &corr.dz_lp * alpha_d;
        pt.y += &corr.dy * alpha_d;
    }
    Err(SolveError::SolverFailure { reason: "iteration limit reached".into(), stats })
}

fn residuals(data: &Data, pt: &Point) -> Residuals {
    let rp = &data.b - data.apply(&pt.x, &pt.x_lp);
    let (aty, aty_lp) = data.apply_adjoint(&pt.y);
    let rd = data.c.iter().zip(&pt.z).zip(&aty).map(|((c, z), a)| herm_part(&(c - z - a))).collect();
    let rd_lp = &data.c_lp - &pt.z_lp - aty_lp;
    Residuals { rp, rd, rd_lp }
}

/// `M_ij = sum_b Re tr(A_ib X_b A_jb Z_b^-1) + sum_l a_il a_jl x_l / z_l`.
fn schur_matrix(data: &Data, pt: &Point, zinv: &[HermMatrix]) -> DMatrix<f64> {
    let m = data.m;
    let mut out = DMatrix::<f64>::zeros(m, m);
    for (b, (x, zi)) in pt.x.iter().zip(zinv).enumerate() {
        let touching: Vec<usize> = (0..m).filter(|&i| data.a[i][b].is_some()).collect();
        for (pos, &j) in touching.iter().enumerate() {
            let aj = data.a[j][b].as_ref().unwrap();
            let g = x * aj * zi;
            for &i in &touching[pos..] {
                let ai = data.a[i][b].as_ref().unwrap();
                let v = re_trace_product(ai, &g);
                out[(i, j)] += v;
                if i != j {
                    out[(j, i)] += v;
                }
            }
        }
    }
    let ratio = DVector::from_fn(data.lp, |l, _| pt.x_lp[l] / pt.z_lp[l]);
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); data.lp];
    for (i, row) in data.a_lp.iter().enumerate() {
        for &(l, c) in row {
            cols[l].push((i, c));
        }
    }
    for (l, col) in cols.iter().enumerate() {
        for &(i, ci) in col {
            for &(j, cj) in col {
                out[(i, j)] += ci * cj * ratio[l];
            }
        }
    }
    out
}

fn factorize(mut m: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let scale = m.diagonal().iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut reg = 0.0;
    for _ in 0..6 {
        if let Some(c) = Cholesky::new(m.clone()) {
            return Some(c);
        }
        let next = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
        for i in 0..m.nrows() {
            m[(i, i)] += next - reg;
        }
        reg = next;
    }
    None
}

/// Solves the Newton system for complementarity right-hand side `rc`,
/// i.e. `dX Z + X dZ = rc`, `A(dX) = rp`, `A*(dy) + dZ = rd`.
fn direction(
    data: &Data,
    pt: &Point,
    zinv: &[HermMatrix],
    res: &Residuals,
    factor: &Cholesky<f64, nalgebra::Dyn>,
    rc: &[HermMatrix],
    rc_lp: &DVector<f64>,
) -> Direction {
    let t: Vec<HermMatrix> =
        rc.iter().zip(pt.x.iter().zip(&res.rd)).zip(zinv).map(|((r, (x, rd)), zi)| (r - x * rd) * zi).collect();
    let t_lp = DVector::from_fn(data.lp, |l, _| (rc_lp[l] - pt.x_lp[l] * res.rd_lp[l]) / pt.z_lp[l]);
    let rhs = &res.rp - data.apply(&t, &t_lp);
    let dy = factor.solve(&rhs);
    let (aty, aty_lp) = data.apply_adjoint(&dy);
    let dz: Vec<HermMatrix> = res.rd.iter().zip(&aty).map(|(rd, a)| rd - a).collect();
    let dz_lp = &res.rd_lp - aty_lp;
    let dx = rc
        .iter()
        .zip(pt.x.iter().zip(&dz))
        .zip(zinv)
        .map(|((r, (x, dz)), zi)| herm_part(&((r - x * dz) * zi)))
        .collect();
    let dx_lp = DVector::from_fn(data.lp, |l, _| (rc_lp[l] - pt.x_lp[l] * dz_lp[l]) / pt.z_lp[l]);
    Direction { dx, dy, dx_lp, dz, dz_lp }
}

fn step_lengths(pt: &Point, d: &Direction) -> (f64, f64) {
    let ap = pt.x.iter().zip(&d.dx).map(|(x, dx)| max_step_psd(x, dx)).fold(max_step_lp(&pt.x_lp, &d.dx_lp), f64::min);
    let ad = pt.z.iter().zip(&d.dz).map(|(z, dz)| max_step_psd(z, dz)).fold(max_step_lp(&pt.z_lp, &d.dz_lp), f64::min);
    (ap, ad)
}

fn finish(data: &Data, pt: Point, status: SolveStatus, mut stats: SolveStats) -> Solution {
    let bs = Complex64::new(data.b_scale, 0.0);
    let blocks = pt.x.into_iter().map(|x| x * bs).collect();
    let scalars = pt.x_lp.iter().map(|v| v * data.b_scale).collect();
    let duals = pt.y.iter().zip(&data.row_scale).map(|(y, r)| y * data.c_scale / r).collect();
    stats.primal_objective *= data.b_scale * data.c_scale;
    stats.dual_objective *= data.b_scale * data.c_scale;
    Solution { status, blocks, scalars, duals, stats }
}
