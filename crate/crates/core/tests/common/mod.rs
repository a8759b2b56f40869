//! Shared generators for the property and oracle suites: proptest
//! strategies over expression trees and matrices, plus seeded rational
//! and float sample points.

// Each test target pulls in this module and uses its own subset.
#![allow(dead_code)]

use proptest::prelude::*;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use transversal::expr::{Expr, Var};
use transversal::geometry::rat;
use transversal::linalg::Elementary;
use transversal::{Matrix, Rat};

/// Shape of generated expressions. `funcs` lists the elementary functions
/// allowed to appear; `div` admits quotients (callers must then tolerate
/// division-by-zero evaluation errors).
#[derive(Clone)]
pub struct ExprProfile {
    pub vars: Vec<Var>,
    pub funcs: Vec<Elementary>,
    pub div: bool,
    pub depth: u32,
}

pub fn arb_expr(profile: ExprProfile) -> BoxedStrategy<Expr> {
    let vars = profile.vars.clone();
    let leaf = prop_oneof![
        (-9i64..=9, 1i64..=4).prop_map(|(n, d)| Expr::Constant(rat(n, d))),
        proptest::sample::select(vars).prop_map(Expr::Var),
    ];
    leaf.prop_recursive(profile.depth, 64, 2, move |inner| {
        let mut options: Vec<BoxedStrategy<Expr>> = vec![
            (inner.clone(), inner.clone())
                .prop_map(|(l, r)| Expr::Add(Box::new(l), Box::new(r)))
                .boxed(),
            (inner.clone(), inner.clone())
                .prop_map(|(l, r)| Expr::Sub(Box::new(l), Box::new(r)))
                .boxed(),
            (inner.clone(), inner.clone())
                .prop_map(|(l, r)| Expr::Mul(Box::new(l), Box::new(r)))
                .boxed(),
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))).boxed(),
            (inner.clone(), 0u32..=3)
                .prop_map(|(e, k)| Expr::IntPow(Box::new(e), k))
                .boxed(),
        ];
        if profile.div {
            options.push(
                (inner.clone(), inner.clone())
                    .prop_map(|(l, r)| Expr::Div(Box::new(l), Box::new(r)))
                    .boxed(),
            );
        }
        if !profile.funcs.is_empty() {
            let funcs = profile.funcs.clone();
            options.push(
                (proptest::sample::select(funcs), inner)
                    .prop_map(|(f, e)| Expr::Func(f, Box::new(e)))
                    .boxed(),
            );
        }
        proptest::strategy::Union::new(options).boxed()
    })
    .boxed()
}

/// Profile for parser round-trips: everything the grammar can print.
pub fn printable_profile() -> ExprProfile {
    ExprProfile {
        vars: vec![Var::x(1), Var::x(2), Var::a(1), Var::y(3)],
        funcs: vec![
            Elementary::Sin,
            Elementary::Cos,
            Elementary::Exp,
            Elementary::Log,
        ],
        div: true,
        depth: 8,
    }
}

/// Profile for exact algebraic identities: total on all of Q^vars.
pub fn polynomial_profile(depth: u32) -> ExprProfile {
    ExprProfile {
        vars: vec![Var::x(1), Var::a(1)],
        funcs: vec![],
        div: false,
        depth,
    }
}

/// Profile for float differentiation tests: smooth everywhere, no log.
pub fn smooth_profile(depth: u32) -> ExprProfile {
    ExprProfile {
        vars: vec![Var::x(1), Var::a(1)],
        funcs: vec![Elementary::Sin, Elementary::Cos, Elementary::Exp],
        div: false,
        depth,
    }
}

fn below(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    rng.next_u64() % n
}

/// `count` points with `vars` rational coordinates, numerators in
/// [-12, 12] and denominators in [1, 8].
pub fn rat_points(seed: u64, count: usize, vars: usize) -> Vec<Vec<Rat>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..vars)
                .map(|_| {
                    let numer = below(&mut rng, 25) as i64 - 12;
                    let denom = below(&mut rng, 8) as i64 + 1;
                    rat(numer, denom)
                })
                .collect()
        })
        .collect()
}

/// `count` points with `vars` float coordinates in [-1/2, 1/2].
pub fn float_points(seed: u64, count: usize, vars: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..vars)
                .map(|_| ((rng.next_u64() >> 11) as f64) * (1.0 / (1u64 << 53) as f64) - 0.5)
                .collect()
        })
        .collect()
}

/// Random rational matrix with the given shape bounds, entries with
/// numerators in [-9, 9] and denominators in [1, 4].
pub fn rat_matrix(rng: &mut ChaCha8Rng, max_rows: usize, max_cols: usize) -> Matrix<Rat> {
    let rows = below(rng, max_rows as u64) as usize + 1;
    let cols = below(rng, max_cols as u64) as usize + 1;
    let data = (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    let numer = below(rng, 19) as i64 - 9;
                    let denom = below(rng, 4) as i64 + 1;
                    rat(numer, denom)
                })
                .collect()
        })
        .collect();
    Matrix::from_rows(data)
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
