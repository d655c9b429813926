use beamfocus_conic::{solve, ConicProgram, Method, SolveStatus, SolverOptions};
use nalgebra::{Complex, DMatrix, SymmetricEigen};
use proptest::prelude::*;

type C64 = Complex<f64>;

fn hermitian(n: usize) -> impl Strategy<Value = DMatrix<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
        let a = DMatrix::from_fn(n, n, |i, j| C64::new(v[i * n + j].0, v[i * n + j].1));
        (&a + a.adjoint()) * C64::new(0.5, 0.0)
    })
}

fn methods() -> impl Strategy<Value = Method> {
    prop_oneof![Just(Method::Splitting), Just(Method::InteriorPoint)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // min ⟨C, X⟩ over unit-trace PSD X is the smallest eigenvalue of C
    #[test]
    fn optimal_status_means_small_residuals(c in hermitian(3), method in methods()) {
        let mut p = ConicProgram::new();
        let x = p.hermitian("X", 3);
        p.add_psd_var("x_psd", x);
        p.add_eq("unit_trace", p.trace(x) - 1.0);
        p.minimize(p.inner(x, &c));
        let opts = SolverOptions::default().with_method(method).with_tol(1e-7);
        let sol = solve(&p, &opts);
        prop_assert_eq!(sol.status, SolveStatus::Optimal);
        prop_assert!(sol.primal_residual.max(sol.dual_residual) <= opts.tol);
        let lmin = SymmetricEigen::new(c).eigenvalues.min();
        prop_assert!((sol.objective - lmin).abs() <= 1e-4, "{} vs {}", sol.objective, lmin);
        let xv = p.hermitian_value(x, &sol.x);
        prop_assert!(SymmetricEigen::new(xv).eigenvalues.min() >= -1e-6);
    }
}
