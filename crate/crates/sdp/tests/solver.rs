use isac_sdp::{solve, ConicProblem, HermMatrix, LinExpr, Sense, SolveStatus, SolverOptions, VarRole};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn identity(n: usize) -> HermMatrix {
    DMatrix::identity(n, n)
}

fn herm_from(n: usize, vals: &[f64]) -> HermMatrix {
    let mut m = DMatrix::from_element(n, n, c(0.0, 0.0));
    let mut k = 0;
    for i in 0..n {
        m[(i, i)] = c(vals[k], 0.0);
        k += 1;
        for j in i + 1..n {
            m[(i, j)] = c(vals[k], vals[k + 1]);
            m[(j, i)] = m[(i, j)].conj();
            k += 2;
        }
    }
    m
}

fn min_trace_problem(cm: &HermMatrix) -> (ConicProblem, isac_sdp::BlockId) {
    let n = cm.nrows();
    let mut p = ConicProblem::new();
    let x = p.add_psd_block(n, VarRole::Decision, "X");
    p.add_constraint("trace", LinExpr::new().with_block(x, &identity(n)), Sense::Eq, 1.0);
    p.set_objective(LinExpr::new().with_block(x, cm));
    (p, x)
}

#[test]
fn small_lp() {
    let mut p = ConicProblem::new();
    let x1 = p.add_nonneg(VarRole::Decision, "x1");
    let x2 = p.add_nonneg(VarRole::Decision, "x2");
    p.add_constraint("sum", LinExpr::new().with_scalar(x1, 1.0).with_scalar(x2, 1.0), Sense::Eq, 1.0);
    p.add_constraint("x2 floor", LinExpr::new().with_scalar(x2, 1.0), Sense::Ge, 0.25);
    p.set_objective(LinExpr::new().with_scalar(x1, 1.0).with_scalar(x2, 2.0));
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective() - 1.25).abs() < 1e-6);
    assert!((sol.scalar(x1) - 0.75).abs() < 1e-6);
    assert!((sol.scalar(x2) - 0.25).abs() < 1e-6);
}

#[test]
fn min_eigenvalue_of_complex_hermitian() {
    let cm = herm_from(3, &[2.0, 0.5, -1.0, 0.3, 0.2, 1.0, -0.4, 0.7, 3.0]);
    let lmin = cm.symmetric_eigenvalues().min();
    let (p, x) = min_trace_problem(&cm);
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective() - lmin).abs() < 1e-6, "{} vs {}", sol.objective(), lmin);
    let eig = sol.block(x).symmetric_eigenvalues();
    assert!(eig.min() > -1e-8);
    assert!((eig.max() - 1.0).abs() < 1e-5);
}

#[test]
fn quadratic_form_floor() {
    // min tr X  s.t.  h^H X h >= 1  has optimum 1 / |h|^4 * |h|^2 = 1/|h|^2.
    let h = nalgebra::DVector::from_vec(vec![c(1.0, 0.5), c(-0.3, 2.0), c(0.0, -1.0), c(0.7, 0.0)]);
    let hh = &h * h.adjoint();
    let mut p = ConicProblem::new();
    let x = p.add_psd_block(4, VarRole::Decision, "X");
    p.add_constraint("sinr", LinExpr::new().with_block(x, &hh), Sense::Ge, 1.0);
    p.set_objective(LinExpr::new().with_block(x, &identity(4)));
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective() - 1.0 / h.norm_squared()).abs() < 1e-7);
}

#[test]
fn badly_scaled_rows() {
    let cm = herm_from(2, &[1.0, 0.2, 0.1, 3.0]);
    let mut p = ConicProblem::new();
    let x = p.add_psd_block(2, VarRole::Decision, "X");
    p.add_constraint("trace", LinExpr::new().with_block(x, &(identity(2) * c(1e-9, 0.0))), Sense::Eq, 1e-9);
    p.set_objective(LinExpr::new().with_block(x, &(cm.clone() * c(1e6, 0.0))));
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    let lmin = cm.symmetric_eigenvalues().min();
    assert!((sol.objective() / 1e6 - lmin).abs() < 1e-6);
}

#[test]
fn detects_infeasibility() {
    let mut p = ConicProblem::new();
    let x = p.add_psd_block(3, VarRole::Decision, "X");
    p.add_constraint("trace", LinExpr::new().with_block(x, &identity(3)), Sense::Le, -1.0);
    p.set_objective(LinExpr::new().with_block(x, &identity(3)));
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);

    let mut p = ConicProblem::new();
    let a = p.add_nonneg(VarRole::Decision, "a");
    let b = p.add_nonneg(VarRole::Decision, "b");
    p.add_constraint("sum", LinExpr::new().with_scalar(a, 1.0).with_scalar(b, 1.0), Sense::Eq, 1.0);
    p.add_constraint("a big", LinExpr::new().with_scalar(a, 1.0), Sense::Ge, 2.0);
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}

#[test]
fn detects_unboundedness() {
    let mut p = ConicProblem::new();
    let a = p.add_nonneg(VarRole::Decision, "a");
    let b = p.add_nonneg(VarRole::Decision, "b");
    p.add_constraint("diff", LinExpr::new().with_scalar(a, 1.0).with_scalar(b, -1.0), Sense::Eq, 1.0);
    p.set_objective(LinExpr::new().with_scalar(a, -1.0));
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Unbounded);
}

#[test]
fn repeated_solves_are_bitwise_identical() {
    let cm = herm_from(3, &[1.0, 0.1, 0.2, -0.3, 0.0, 2.0, 0.5, 0.5, -1.0]);
    let (p, x) = min_trace_problem(&cm);
    let s1 = solve(&p, &SolverOptions::default()).unwrap();
    let s2 = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(s1.block(x), s2.block(x));
    assert_eq!(s1.stats, s2.stats);
}

#[test]
fn duals_satisfy_stationarity() {
    let cm = herm_from(2, &[1.0, 0.4, -0.2, 2.0]);
    let (p, _) = min_trace_problem(&cm);
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    // Z = C - y I must be PSD and singular at the optimum.
    let z = &cm - identity(2) * c(sol.duals[0], 0.0);
    let eig = z.symmetric_eigenvalues();
    assert!(eig.min().abs() < 1e-6);
    assert!((sol.duals[0] - sol.objective()).abs() < 1e-6);
}

#[test]
fn text_dump_lists_structure() {
    let (mut p, x) = min_trace_problem(&identity(2));
    p.add_constraint("floor", LinExpr::new().with_block(x, &identity(2)), Sense::Ge, 0.5);
    let text = p.to_text();
    assert!(text.starts_with("conic-problem v1\n"));
    assert!(text.contains("block 0 herm 2 decision X"));
    assert!(text.contains("scalar 0 nonneg aux slack:floor"));
    assert!(text.contains("constraints 2"));
    assert!(text.contains("  s 0 -1e0"));
    assert_eq!(p.count_constraints("fl"), 1);
    assert_eq!(p.decision_dof(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn trace_constrained_minimum_is_smallest_eigenvalue(vals in proptest::collection::vec(-3.0f64..3.0, 16)) {
        let cm = herm_from(4, &vals);
        let lmin = cm.symmetric_eigenvalues().min();
        let (p, _) = min_trace_problem(&cm);
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        prop_assert_eq!(sol.status, SolveStatus::Optimal);
        prop_assert!((sol.objective() - lmin).abs() < 1e-6 * (1.0 + lmin.abs()));
    }
}
