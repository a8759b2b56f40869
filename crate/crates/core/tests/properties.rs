//! Property suites: randomized algebraic identities for the expression
//! layer, randomized rank laws for the linear algebra layer, and the
//! pointwise classification laws on sampled scenario points.

mod common;

use common::{
    arb_expr, float_points, polynomial_profile, printable_profile, rat_matrix, rat_points,
    seeded_rng, smooth_profile,
};
use num::Zero;
use proptest::prelude::*;
use rand_chacha::rand_core::RngCore;
use transversal::defect::Stratum;
use transversal::expr::{self, Bindings, Expr, Var};
use transversal::genericity::{self, SamplingMode};
use transversal::geometry::{rat, rat_int, ParamFamily};
use transversal::linalg::{dim_span_union, lift_matrix};
use transversal::scenario;
use transversal::{Backend, ExactBackend, FloatBackend, Matrix, Rat};

fn eval_rat(e: &Expr, x: &[Rat], a: &[Rat]) -> Rat {
    expr::evaluate(e, &Bindings::xa(x, a)).expect("polynomial evaluation is total")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printer_and_parser_round_trip(e in arb_expr(printable_profile())) {
        let printed = e.to_string();
        let back = expr::parse(&printed).expect("printed form parses");
        prop_assert_eq!(back, e.canonicalized());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn derivation_is_linear(
        e1 in arb_expr(polynomial_profile(5)),
        e2 in arb_expr(polynomial_profile(5)),
    ) {
        let sum = Expr::Add(Box::new(e1.clone()), Box::new(e2.clone()));
        for var in [Var::x(1), Var::a(1)] {
            let d_sum = expr::derive(&sum, var);
            let d1 = expr::derive(&e1, var);
            let d2 = expr::derive(&e2, var);
            for point in rat_points(11, 100, 2) {
                let (x, a) = (&point[..1], &point[1..]);
                prop_assert_eq!(
                    eval_rat(&d_sum, x, a),
                    eval_rat(&d1, x, a) + eval_rat(&d2, x, a)
                );
            }
        }
    }

    #[test]
    fn product_rule_holds_exactly(
        e1 in arb_expr(polynomial_profile(4)),
        e2 in arb_expr(polynomial_profile(4)),
    ) {
        let product = Expr::Mul(Box::new(e1.clone()), Box::new(e2.clone()));
        for var in [Var::x(1), Var::a(1)] {
            let d_product = expr::derive(&product, var);
            let d1 = expr::derive(&e1, var);
            let d2 = expr::derive(&e2, var);
            for point in rat_points(17, 40, 2) {
                let (x, a) = (&point[..1], &point[1..]);
                let expected = eval_rat(&d1, x, a) * eval_rat(&e2, x, a)
                    + eval_rat(&e1, x, a) * eval_rat(&d2, x, a);
                prop_assert_eq!(eval_rat(&d_product, x, a), expected);
            }
        }
    }

    #[test]
    fn symbolic_derivative_matches_central_differences(
        e in arb_expr(smooth_profile(4)),
    ) {
        let h = 1e-5;
        let d = expr::derive(&e, Var::x(1));
        for point in float_points(23, 10, 2) {
            let (x0, a0) = (point[0], point[1]);
            let at = |x: f64| -> f64 {
                expr::evaluate(&e, &Bindings::xa(&[x], &[a0])).expect("smooth evaluation")
            };
            let symbolic: f64 =
                expr::evaluate(&d, &Bindings::xa(&[x0], &[a0])).expect("smooth evaluation");
            let central = (at(x0 + h) - at(x0 - h)) / (2.0 * h);
            let tolerance = 1e-6 * (1.0 + f64::abs(symbolic));
            prop_assert!(
                f64::abs(symbolic - central) <= tolerance,
                "symbolic {symbolic} vs central {central} for {e} at ({x0}, {a0})"
            );
        }
    }
}

#[test]
fn finite_differences_confirm_the_squared_family_derivative() {
    let e = expr::parse("a1^2 * x1^2").unwrap();
    let d = expr::derive(&e, Var::x(1));
    let exact: Rat = expr::evaluate(&d, &Bindings::xa(&[rat_int(1)], &[rat_int(2)])).unwrap();
    assert_eq!(exact, rat_int(8));

    let h = 1e-5;
    let at = |x: f64| -> f64 { expr::evaluate(&e, &Bindings::xa(&[x], &[2.0])).unwrap() };
    let central = (at(1.0 + h) - at(1.0 - h)) / (2.0 * h);
    assert!(f64::abs(central - 8.0) <= 1e-6 * 9.0);
}

#[test]
fn rank_is_invariant_under_transpose_on_both_backends() {
    let exact = ExactBackend;
    let float = FloatBackend::default();
    let mut rng = seeded_rng(31);
    for _ in 0..200 {
        let m = rat_matrix(&mut rng, 6, 6);
        assert_eq!(exact.rank(&m), exact.rank(&m.transpose()));
        let f: Matrix<f64> = lift_matrix(&m);
        assert_eq!(float.rank(&f), float.rank(&f.transpose()));
    }
}

#[test]
fn rank_nullity_accounts_for_every_column() {
    let exact = ExactBackend;
    let mut rng = seeded_rng(37);
    for _ in 0..200 {
        let m = rat_matrix(&mut rng, 6, 6);
        let kernel = exact.kernel_basis(&m);
        assert_eq!(exact.rank(&m) + kernel.cols(), m.cols());
    }
}

#[test]
fn backends_agree_on_small_integer_matrices() {
    let exact = ExactBackend;
    let float = FloatBackend::default();
    let mut rng = seeded_rng(41);
    for _ in 0..300 {
        let rows = (rng.next_u64() % 6) as usize + 1;
        let cols = (rng.next_u64() % 6) as usize + 1;
        let entries: Vec<Vec<i64>> = (0..rows)
            .map(|_| (0..cols).map(|_| (rng.next_u64() % 11) as i64 - 5).collect())
            .collect();
        let exact_m = Matrix::from_rows(
            entries
                .iter()
                .map(|r| r.iter().map(|&v| rat_int(v)).collect())
                .collect(),
        );
        let float_m = Matrix::from_rows(
            entries
                .iter()
                .map(|r| r.iter().map(|&v| v as f64).collect())
                .collect(),
        );
        assert_eq!(exact.rank(&exact_m), float.rank(&float_m));
    }
}

fn rand_rat(rng: &mut rand_chacha::ChaCha8Rng) -> Rat {
    rat((rng.next_u64() % 19) as i64 - 9, (rng.next_u64() % 4) as i64 + 1)
}

/// Random rational matrix with a fixed row count and 1 to 4 columns.
fn rand_with_rows(rng: &mut rand_chacha::ChaCha8Rng, rows: usize) -> Matrix<Rat> {
    let cols = (rng.next_u64() % 4) as usize + 1;
    Matrix::from_rows(
        (0..rows)
            .map(|_| (0..cols).map(|_| rand_rat(rng)).collect())
            .collect(),
    )
}

#[test]
fn span_union_dimension_is_bracketed() {
    let exact = ExactBackend;
    let mut rng = seeded_rng(43);
    for _ in 0..200 {
        let ell = (rng.next_u64() % 5) as usize + 1;
        let b1 = rand_with_rows(&mut rng, ell);
        let b2 = rand_with_rows(&mut rng, ell);
        let union = dim_span_union(&exact, &b1, &b2).unwrap();
        let r1 = exact.rank(&b1);
        let r2 = exact.rank(&b2);
        assert!(union <= ell.min(b1.cols() + b2.cols()));
        assert!(union >= r1.max(r2));
        assert!(union <= r1 + r2);
    }
}

/// Classification laws checked at Monte Carlo points of every built-in:
/// the defect inequality, the on-Z bound, stratum exhaustiveness, and the
/// defect-drop hypothesis flag.
#[test]
fn classification_laws_hold_at_sampled_points() {
    for name in scenario::BUILTIN_NAMES {
        let mut s = scenario::builtin(name).unwrap();
        s.plan.mode = SamplingMode::MonteCarlo;
        s.plan.seed = 99;
        s.plan.x_count = 12;
        s.plan.a_count = 12;
        let result = genericity::scan(&ExactBackend, &s.family, &s.z, &s.plan).unwrap();
        assert!(!result.table.is_empty());
        let mut delta_sup = 0;
        for row in &result.table {
            assert!(
                row.delta_slice >= row.delta_family,
                "{name}: defect inequality violated at {}",
                row.point
            );
            assert_eq!(row.on_z, row.stratum != Stratum::NotOnZ);
            if row.on_z {
                assert!(row.delta_slice <= s.family.ell() - s.z.q());
            }
            let expected = if !row.on_z {
                Stratum::NotOnZ
            } else if row.delta_slice == 0 {
                Stratum::Transverse
            } else if row.delta_slice == row.delta_family {
                Stratum::W
            } else {
                Stratum::Wtilde(row.delta_family)
            };
            assert_eq!(row.stratum, expected, "{name} at {}", row.point);
            assert_eq!(
                row.mather_hypothesis,
                row.delta_slice == 0 || row.delta_family < row.delta_slice
            );
            delta_sup = delta_sup.max(row.delta_family);
        }
        assert_eq!(result.report.delta_sup_estimate, delta_sup);
    }
}

/// Scaling the family by a nonzero constant rescales Jacobian rows and
/// leaves every rank decision, hence every stratum, unchanged.
#[test]
fn strata_are_invariant_under_family_scaling() {
    let b = ExactBackend;
    let scales = [rat_int(2), rat(-1, 3), rat(7, 5), rat_int(-4)];
    for name in ["example1", "example2", "parabola"] {
        let s = scenario::builtin(name).unwrap();
        for c in &scales {
            assert!(!c.is_zero());
            let scaled_components: Vec<Expr> = s
                .family
                .components()
                .iter()
                .map(|e| Expr::Mul(Box::new(Expr::Constant(c.clone())), Box::new(e.clone())))
                .collect();
            let scaled = ParamFamily::new(
                s.family.n(),
                s.family.m(),
                s.family.ell(),
                scaled_components,
                s.family.domain.clone(),
                s.family.declared_r,
            )
            .unwrap();
            for point in rat_points(55, 60, 2) {
                let p = transversal::geometry::PointXA::new(
                    point[..1].to_vec(),
                    point[1..].to_vec(),
                );
                let original = transversal::defect::classify(&b, &s.family, &s.z, &p).unwrap();
                let rescaled = transversal::defect::classify(&b, &scaled, &s.z, &p).unwrap();
                assert_eq!(original.stratum, rescaled.stratum, "{name} at {p} scaled by {c}");
                assert_eq!(original.delta_family, rescaled.delta_family);
                assert_eq!(original.delta_slice, rescaled.delta_slice);
            }
        }
    }
}
