use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use swipt_conic::sdpa::write_sdpa;
use swipt_conic::{
    embed_real, solve, unembed_real, CMatrix, Complex64, ConicProblem, HermitianTerm,
    LinearFunctional, Relation, ScalarKind, SolveStatus, SolverOptions,
};

/// Stopping tolerance one decade below the accuracy the tests demand.
fn tight() -> SolverOptions {
    SolverOptions::with_tol(1e-8)
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    });
    (&a + a.adjoint()).map(|z| z * 0.5)
}

/// Largest eigenvalue from the real symmetric embedding, whose spectrum is
/// the complex spectrum with every value doubled in multiplicity.
fn lambda_max(a: &CMatrix) -> f64 {
    embed_real(a)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

fn trace_one_problem(a: &CMatrix, sign: f64) -> ConicProblem {
    let n = a.nrows();
    let mut p = ConicProblem::new();
    let x = p.add_block(n);
    let obj = HermitianTerm::from_dense(&a.map(|z| z * sign)).unwrap();
    p.maximize(LinearFunctional::new().block(x, obj));
    p.constrain(
        LinearFunctional::new().block(x, HermitianTerm::identity(n)),
        Relation::Eq,
        1.0,
    );
    p
}

#[test]
fn eigenvalue_oracle_sdps() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 0..50 {
        let n = 2 + k % 9;
        let a = random_hermitian(&mut rng, n);
        let expect = lambda_max(&a);
        let sol = solve(&trace_one_problem(&a, 1.0), &tight()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "instance {k}");
        let scale = expect.abs().max(1.0);
        assert!(
            sol.duality_gap <= 1e-7 * scale,
            "instance {k}: gap {}",
            sol.duality_gap
        );
        assert!(
            (sol.objective - expect).abs() <= 1e-7 * scale,
            "instance {k}: {} vs {expect}",
            sol.objective
        );
        assert!((sol.blocks[0].trace().re - 1.0).abs() <= 1e-7);
    }
}

#[test]
fn smallest_eigenvalue_by_negation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let a = random_hermitian(&mut rng, 5);
        let expect = -lambda_max(&a.map(|z| -z));
        let sol = solve(&trace_one_problem(&a, -1.0), &SolverOptions::default()).unwrap();
        assert!((-sol.objective - expect).abs() <= 1e-7 * expect.abs().max(1.0));
    }
}

#[test]
fn bound_lps() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..50 {
        let n = 1 + k % 7;
        let mut p = ConicProblem::new();
        let mut obj = LinearFunctional::new();
        let mut expect = 0.0;
        for _ in 0..n {
            let x = p.add_scalar(ScalarKind::Free);
            let lo: f64 = rng.random_range(-5.0..0.0);
            let hi: f64 = lo + rng.random_range(0.1..5.0);
            let c: f64 = rng.sample(StandardNormal);
            obj = obj.scalar(x, c);
            expect += c * if c > 0.0 { hi } else { lo };
            p.constrain(LinearFunctional::new().scalar(x, 1.0), Relation::Ge, lo);
            p.constrain(LinearFunctional::new().scalar(x, 1.0), Relation::Le, hi);
        }
        p.maximize(obj);
        let sol = solve(&p, &tight()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "instance {k}");
        let scale = expect.abs().max(1.0);
        assert!(
            sol.duality_gap <= 1e-7 * scale,
            "instance {k}: gap {}",
            sol.duality_gap
        );
        assert!(
            (sol.objective - expect).abs() <= 1e-7 * scale,
            "instance {k}: {} vs {expect}",
            sol.objective
        );
    }
}

#[test]
fn nonnegative_scalars_with_budget() {
    // maximize 3x + 2y s.t. x + y <= 4, x <= 3, x, y >= 0  ->  11 at (3, 1).
    let mut p = ConicProblem::new();
    let x = p.add_scalar(ScalarKind::NonNeg);
    let y = p.add_scalar(ScalarKind::NonNeg);
    p.maximize(LinearFunctional::new().scalar(x, 3.0).scalar(y, 2.0));
    p.constrain(
        LinearFunctional::new().scalar(x, 1.0).scalar(y, 1.0),
        Relation::Le,
        4.0,
    );
    p.constrain(LinearFunctional::new().scalar(x, 1.0), Relation::Le, 3.0);
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert!((sol.objective - 11.0).abs() < 1e-7);
    assert!((sol.scalars[0] - 3.0).abs() < 1e-6 && (sol.scalars[1] - 1.0).abs() < 1e-6);
}

#[test]
fn mixed_block_and_scalar() {
    // maximize t s.t. <g g^H, X> >= t, tr X <= 2  ->  t = 2 |g|^2.
    let g = nalgebra::DVector::from_vec(vec![Complex64::new(1.0, 1.0), Complex64::new(0.0, -2.0)]);
    let mut p = ConicProblem::new();
    let x = p.add_block(2);
    let t = p.add_scalar(ScalarKind::NonNeg);
    p.maximize(LinearFunctional::new().scalar(t, 1.0));
    p.constrain(
        LinearFunctional::new()
            .block(x, HermitianTerm::rank_one(g.clone()))
            .scalar(t, -1.0),
        Relation::Ge,
        0.0,
    );
    p.constrain(
        LinearFunctional::new().block(x, HermitianTerm::identity(2)),
        Relation::Le,
        2.0,
    );
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert!((sol.objective - 2.0 * g.norm_squared()).abs() < 1e-6);
}

#[test]
fn infeasible_and_unbounded_are_reported() {
    let mut p = ConicProblem::new();
    let x = p.add_block(2);
    p.maximize(LinearFunctional::new().block(x, HermitianTerm::identity(2)));
    p.constrain(
        LinearFunctional::new().block(x, HermitianTerm::identity(2)),
        Relation::Eq,
        -1.0,
    );
    assert_eq!(
        solve(&p, &SolverOptions::default()).unwrap().status,
        SolveStatus::Infeasible
    );

    let mut q = ConicProblem::new();
    let y = q.add_scalar(ScalarKind::NonNeg);
    q.maximize(LinearFunctional::new().scalar(y, 1.0));
    q.constrain(LinearFunctional::new().scalar(y, 1.0), Relation::Ge, 1.0);
    assert_eq!(
        solve(&q, &SolverOptions::default()).unwrap().status,
        SolveStatus::Unbounded
    );
}

#[test]
fn malformed_problems_are_errors() {
    let mut p = ConicProblem::new();
    let x = p.add_block(2);
    p.maximize(LinearFunctional::new().block(x, HermitianTerm::identity(3)));
    assert!(solve(&p, &SolverOptions::default()).is_err());
    let bad = CMatrix::from_fn(2, 2, |r, c| Complex64::new((r + 2 * c) as f64, 0.0));
    assert!(HermitianTerm::from_dense(&bad).is_err());
}

#[test]
fn sdpa_dump_layout() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = random_hermitian(&mut rng, 3);
    let mut p = trace_one_problem(&a, 1.0);
    let t = p.add_scalar(ScalarKind::NonNeg);
    p.constrain(LinearFunctional::new().scalar(t, 1.0), Relation::Le, 2.0);
    let mut out = Vec::new();
    write_sdpa(&p, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let body: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('"') && !l.starts_with('*'))
        .collect();
    let m: usize = body[0].trim().parse().unwrap();
    let n_blocks: usize = body[1].trim().parse().unwrap();
    assert_eq!(m, 2);
    assert_eq!(n_blocks, 2);
    assert!(body[2].split_whitespace().any(|s| s == "6"));
    assert_eq!(body[3].split_whitespace().count(), m);
    for line in &body[4..] {
        let f: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(f.len(), 5);
        let (r, c): (usize, usize) = (f[2].parse().unwrap(), f[3].parse().unwrap());
        assert!(1 <= r && r <= c);
        assert!(f[4].parse::<f64>().unwrap().is_finite());
    }
}

proptest! {
    #[test]
    fn embedding_round_trip(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_hermitian(&mut rng, n);
        let b = random_hermitian(&mut rng, n);
        prop_assert!((unembed_real(&embed_real(&a)) - &a).norm() <= 1e-14 * a.norm().max(1.0));
        let ea: DMatrix<f64> = embed_real(&a);
        let lhs = (&ea * embed_real(&b)).trace();
        let rhs = 2.0 * (&a * &b).trace().re;
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn trace_one_optimum_is_eigenvector(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_hermitian(&mut rng, n);
        let sol = solve(&trace_one_problem(&a, 1.0), &SolverOptions::default()).unwrap();
        let x = &sol.blocks[0];
        let ax = (&a * x).trace().re;
        prop_assert!((ax - sol.objective).abs() <= 1e-9 * (1.0 + ax.abs()));
        prop_assert!(x.symmetric_eigenvalues().iter().all(|&v| v >= -1e-8));
    }
}
