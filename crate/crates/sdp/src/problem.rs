use std::fmt::Write as _;

use num_complex::Complex64;

use crate::HermMatrix;

/// Handle to a Hermitian PSD block variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId(pub(crate) usize);

/// Handle to a nonnegative scalar variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScalarId(pub(crate) usize);

impl BlockId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl ScalarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Whether a variable is part of the modelled decision or an internal
/// artifact of the conic lowering (slacks, lifted auxiliaries).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRole {
    Decision,
    Auxiliary,
}

impl VarRole {
    fn tag(self) -> &'static str {
        match self {
            VarRole::Decision => "decision",
            VarRole::Auxiliary => "aux",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Ge,
    Le,
}

/// Affine-free linear expression `sum_b Re tr(C_b X_b) + sum_j c_j x_j`.
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    pub(crate) blocks: Vec<(BlockId, HermMatrix)>,
    pub(crate) scalars: Vec<(ScalarId, f64)>,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `Re tr(coeff X_block)`. The coefficient is Hermitian-symmetrized.
    pub fn add_block(&mut self, block: BlockId, coeff: &HermMatrix) -> &mut Self {
        let herm = (coeff + coeff.adjoint()) * Complex64::new(0.5, 0.0);
        if let Some((_, acc)) = self.blocks.iter_mut().find(|(id, _)| *id == block) {
            *acc += herm;
        } else {
            self.blocks.push((block, herm));
        }
        self
    }

    pub fn add_scalar(&mut self, scalar: ScalarId, coeff: f64) -> &mut Self {
        if let Some((_, acc)) = self.scalars.iter_mut().find(|(id, _)| *id == scalar) {
            *acc += coeff;
        } else {
            self.scalars.push((scalar, coeff));
        }
        self
    }

    pub fn with_block(mut self, block: BlockId, coeff: &HermMatrix) -> Self {
        self.add_block(block, coeff);
        self
    }

    pub fn with_scalar(mut self, scalar: ScalarId, coeff: f64) -> Self {
        self.add_scalar(scalar, coeff);
        self
    }

    pub fn block_terms(&self) -> impl Iterator<Item = (BlockId, &HermMatrix)> {
        self.blocks.iter().map(|(id, m)| (*id, m))
    }

    pub fn scalar_terms(&self) -> impl Iterator<Item = (ScalarId, f64)> + '_ {
        self.scalars.iter().copied()
    }

    /// Evaluates the expression at explicit variable values.
    pub fn evaluate(&self, blocks: &[HermMatrix], scalars: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (id, coeff) in &self.blocks {
            acc += re_trace_product(coeff, &blocks[id.0]);
        }
        for (id, c) in &self.scalars {
            acc += c * scalars[id.0];
        }
        acc
    }
}

/// Equality constraint `expr = rhs` (inequalities are lowered with a slack).
#[derive(Debug, Clone)]
pub struct Constraint {
    pub label: String,
    pub expr: LinExpr,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
struct VarInfo {
    role: VarRole,
    label: String,
}

/// Conic program in primal standard form over Hermitian PSD blocks and a
/// nonnegative orthant. The objective is minimized.
#[derive(Debug, Clone, Default)]
pub struct ConicProblem {
    block_sizes: Vec<usize>,
    block_info: Vec<VarInfo>,
    scalar_info: Vec<VarInfo>,
    objective: LinExpr,
    constraints: Vec<Constraint>,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_psd_block(&mut self, size: usize, role: VarRole, label: impl Into<String>) -> BlockId {
        assert!(size > 0, "PSD block must have positive size");
        self.block_sizes.push(size);
        self.block_info.push(VarInfo { role, label: label.into() });
        BlockId(self.block_sizes.len() - 1)
    }

    pub fn add_nonneg(&mut self, role: VarRole, label: impl Into<String>) -> ScalarId {
        self.scalar_info.push(VarInfo { role, label: label.into() });
        ScalarId(self.scalar_info.len() - 1)
    }

    /// Adds `expr (sense) rhs`, lowering inequalities with a fresh slack.
    /// Returns the constraint row index.
    pub fn add_constraint(&mut self, label: impl Into<String>, mut expr: LinExpr, sense: Sense, rhs: f64) -> usize {
        let label = label.into();
        for (id, coeff) in &expr.blocks {
            let n = self.block_sizes[id.0];
            assert_eq!(coeff.shape(), (n, n), "coefficient shape mismatch on block {}", id.0);
        }
        match sense {
            Sense::Eq => {}
            Sense::Ge => {
                let s = self.add_nonneg(VarRole::Auxiliary, format!("slack:{label}"));
                expr.add_scalar(s, -1.0);
            }
            Sense::Le => {
                let s = self.add_nonneg(VarRole::Auxiliary, format!("slack:{label}"));
                expr.add_scalar(s, 1.0);
            }
        }
        self.constraints.push(Constraint { label, expr, rhs });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, expr: LinExpr) {
        self.objective = expr;
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn num_scalars(&self) -> usize {
        self.scalar_info.len()
    }

    /// Number of constraints whose label starts with `prefix`.
    pub fn count_constraints(&self, prefix: &str) -> usize {
        self.constraints.iter().filter(|c| c.label.starts_with(prefix)).count()
    }

    /// Real degrees of freedom of the decision variables: `n^2` per
    /// Hermitian decision block plus one per decision scalar.
    pub fn decision_dof(&self) -> usize {
        let blocks: usize = self
            .block_sizes
            .iter()
            .zip(&self.block_info)
            .filter(|(_, info)| info.role == VarRole::Decision)
            .map(|(n, _)| n * n)
            .sum();
        let scalars = self.scalar_info.iter().filter(|i| i.role == VarRole::Decision).count();
        blocks + scalars
    }

    /// Plain-text dump in sparse triplet form, for debugging with external
    /// solvers. Only the upper triangle of each Hermitian coefficient is
    /// written.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "conic-problem v1").unwrap();
        writeln!(out, "sense minimize").unwrap();
        writeln!(out, "blocks {}", self.block_sizes.len()).unwrap();
        for (i, (n, info)) in self.block_sizes.iter().zip(&self.block_info).enumerate() {
            writeln!(out, "block {i} herm {n} {} {}", info.role.tag(), info.label).unwrap();
        }
        writeln!(out, "scalars {}", self.scalar_info.len()).unwrap();
        for (i, info) in self.scalar_info.iter().enumerate() {
            writeln!(out, "scalar {i} nonneg {} {}", info.role.tag(), info.label).unwrap();
        }
        writeln!(out, "objective").unwrap();
        write_expr(&mut out, &self.objective);
        writeln!(out, "constraints {}", self.constraints.len()).unwrap();
        for (i, c) in self.constraints.iter().enumerate() {
            writeln!(out, "constraint {i} eq {:e} {}", c.rhs, c.label).unwrap();
            write_expr(&mut out, &c.expr);
        }
        out
    }
}

fn write_expr(out: &mut String, expr: &LinExpr) {
    let mut blocks: Vec<_> = expr.blocks.iter().collect();
    blocks.sort_by_key(|(id, _)| *id);
    for (id, coeff) in blocks {
        let n = coeff.nrows();
        for i in 0..n {
            for j in i..n {
                let v = coeff[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    writeln!(out, "  b {} {i} {j} {:e} {:e}", id.0, v.re, v.im).unwrap();
                }
            }
        }
    }
    let mut scalars: Vec<_> = expr.scalars.iter().collect();
    scalars.sort_by_key(|(id, _)| *id);
    for (id, c) in scalars {
        if *c != 0.0 {
            writeln!(out, "  s {} {:e}", id.0, c).unwrap();
        }
    }
}

/// `Re tr(A G)` for square matrices of equal size.
pub(crate) fn re_trace_product(a: &HermMatrix, g: &HermMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for p in 0..n {
        for q in 0..n {
            let x = a[(p, q)];
            let y = g[(q, p)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}
