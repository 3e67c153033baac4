mod common;

use std::sync::Arc;

use common::RawPoly;
use proptest::prelude::*;
use symchain::expr::{rat, reduce_modulo_linear, Expression, LinearSpan, Rational, VarTable};

fn table() -> Arc<VarTable> {
    Arc::new(VarTable::new(["x", "y", "p_z"]).unwrap())
}

fn rational() -> impl Strategy<Value = Rational> {
    (-9i64..=9, 1i64..=5).prop_map(|(n, d)| rat(n, d))
}

fn poly(max_terms: usize, max_exp: u32) -> impl Strategy<Value = RawPoly> {
    prop::collection::vec((rational(), prop::collection::vec(0..=max_exp, 3)), 0..=max_terms)
        .prop_map(|terms| RawPoly { terms })
}

fn grid(deg: u32) -> Vec<Vec<Rational>> {
    let side: Vec<Rational> = (0..=deg as i64).map(|k| rat(k, 1)).collect();
    let mut out = Vec::new();
    for a in &side {
        for b in &side {
            for c in &side {
                out.push(vec![a.clone(), b.clone(), c.clone()]);
            }
        }
    }
    out
}

proptest! {
    #[test]
    fn print_parse_round_trip(p in poly(6, 3)) {
        let t = table();
        let e = p.build(&t);
        let back = Expression::parse(&e.to_string(), &t).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn derivative_is_linear(p in poly(5, 3), q in poly(5, 3), a in rational(), b in rational(), i in 0usize..3) {
        let t = table();
        let (e1, e2) = (p.build(&t), q.build(&t));
        let lhs = (&e1.scale(&a) + &e2.scale(&b)).derivative(i);
        let rhs = &e1.derivative(i).scale(&a) + &e2.derivative(i).scale(&b);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn leibniz_rule(p in poly(4, 3), q in poly(4, 3), i in 0usize..3) {
        let t = table();
        let (f, g) = (p.build(&t), q.build(&t));
        let lhs = (&f * &g).derivative(i);
        let rhs = &(&f.derivative(i) * &g) + &(&f * &g.derivative(i));
        prop_assert_eq!(lhs, rhs);
    }

    /// Two polynomials of per-variable degree at most `d` that agree on the
    /// grid {0..d}^3 are identical, so grid agreement certifies the derivative.
    #[test]
    fn derivative_matches_power_rule(p in poly(6, 4), i in 0usize..3) {
        let t = table();
        let d = p.build(&t).derivative(i);
        let oracle = p.derivative(i);
        for pt in grid(p.max_degree()) {
            prop_assert_eq!(d.evaluate_at(&pt), oracle.eval(&pt));
        }
    }

    #[test]
    fn evaluation_matches_term_list(p in poly(6, 3), pt in prop::collection::vec(rational(), 3)) {
        let t = table();
        prop_assert_eq!(p.build(&t).evaluate_at(&pt), p.eval(&pt));
    }

    #[test]
    fn span_reduction(rows in prop::collection::vec(prop::collection::vec(rational(), 4), 1..4),
                      mix in prop::collection::vec(rational(), 3),
                      extra in prop::collection::vec(rational(), 4)) {
        let t = table();
        let basis: Vec<Expression> = rows.iter().map(|r| Expression::from_linear(&t, r)).collect();
        let member = basis
            .iter()
            .zip(&mix)
            .fold(Expression::zero(&t), |acc, (b, k)| acc + b.scale(k));
        prop_assert!(reduce_modulo_linear(&member, &basis).unwrap().is_zero());

        let e = Expression::from_linear(&t, &extra);
        let once = reduce_modulo_linear(&e, &basis).unwrap();
        let twice = reduce_modulo_linear(&once, &basis).unwrap();
        prop_assert_eq!(&once, &twice);
        // the remainder differs from e by a span member
        let span = LinearSpan::from_exprs(&t, &basis).unwrap();
        prop_assert!(span.contains(&(&e - &once)).unwrap());
    }
}

#[test]
fn parse_errors_carry_offsets() {
    let t = table();
    let err = Expression::parse("x + * y", &t).unwrap_err().to_string();
    assert!(err.contains('4'), "{err}");
    assert!(Expression::parse("x + w", &t).is_err());
    assert!(Expression::parse("x / y", &t).is_err());
    assert!(Expression::parse("x^-1", &t).is_err());
}
