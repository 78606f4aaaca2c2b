mod common;

use finsler_lab::expr::{parse, Expr};
use finsler_lab::fd::{fd_partials, oracle_tolerance};
use finsler_lab::jet::{eval_jet, Jet4};
use proptest::prelude::*;

fn falling(k: i32, a: i32) -> f64 {
    (0..a).map(|t| (k - t) as f64).product()
}

fn poly_source(coeffs: &[f64]) -> (String, Vec<(i32, i32, f64)>) {
    let mut terms = Vec::new();
    let mut mono = Vec::new();
    let mut it = coeffs.iter();
    for i in 0..=5 {
        for j in 0..=(5 - i) {
            let c = *it.next().unwrap();
            terms.push(format!("({c:?})*r^{i}*s^{j}"));
            mono.push((i, j, c));
        }
    }
    (terms.join(" + "), mono)
}

fn exact_poly_partial(mono: &[(i32, i32, f64)], r: f64, s: f64, a: i32, b: i32) -> f64 {
    mono.iter()
        .filter(|(i, j, _)| *i >= a && *j >= b)
        .map(|(i, j, c)| c * falling(*i, a) * falling(*j, b) * r.powi(i - a) * s.powi(j - b))
        .sum()
}

fn orders() -> impl Iterator<Item = (usize, usize)> {
    (0..=4).flat_map(|k| (0..=k).map(move |b| (k - b, b)))
}

fn scale(j: &Jet4) -> f64 {
    j.partials().iter().fold(1f64, |m, v| m.max(v.abs()))
}

const SMOOTH: [&str; 6] = [
    "exp(r*s) + sin(r - s)",
    "sqrt(2 + r^2 - s) * cos(s)",
    "ln(3 + r*s^2) / (1 + r^2)",
    "(1 + r^2 + s^2)^1.5",
    "r^(-2) * exp(2*s/sqrt(r^2 - s^2)) * sqrt(r^2 - s^2)",
    "abs(2 + s) ^ 3 - 2^(r*s)",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polynomial_partials_are_exact(
        coeffs in prop::collection::vec(-2.0f64..2.0, 21),
        r in -1.5f64..1.5,
        s in -1.5f64..1.5,
    ) {
        let (src, mono) = poly_source(&coeffs);
        let jet = eval_jet(&parse(&src).unwrap(), r, s).unwrap();
        let sc = scale(&jet);
        for (a, b) in orders() {
            let want = exact_poly_partial(&mono, r, s, a as i32, b as i32);
            prop_assert!((jet.partial(a, b) - want).abs() < 1e-12 * sc, "({a},{b}) {} vs {want}", jet.partial(a, b));
        }
    }

    #[test]
    fn chain_rule_for_exp(
        coeffs in prop::collection::vec(-0.5f64..0.5, 21),
        r in -1.0f64..1.0,
        s in -1.0f64..1.0,
    ) {
        let (src, _) = poly_source(&coeffs);
        let g = eval_jet(&parse(&src).unwrap(), r, s).unwrap();
        let f = eval_jet(&parse(&format!("exp({src})")).unwrap(), r, s).unwrap();
        let e = g.value().exp();
        let (gr, gs) = (g.partial(1, 0), g.partial(0, 1));
        let tol = 1e-12 * scale(&f);
        prop_assert!((f.partial(1, 0) - e * gr).abs() < tol);
        prop_assert!((f.partial(0, 1) - e * gs).abs() < tol);
        prop_assert!((f.partial(2, 0) - e * (g.partial(2, 0) + gr * gr)).abs() < tol);
        prop_assert!((f.partial(1, 1) - e * (g.partial(1, 1) + gr * gs)).abs() < tol);
        let want_rrs = e * (g.partial(2, 1) + g.partial(2, 0) * gs + 2.0 * g.partial(1, 1) * gr + gr * gr * gs);
        prop_assert!((f.partial(2, 1) - want_rrs).abs() < 1e-11 * scale(&f));
    }

    #[test]
    fn inverse_function_identities(r in 0.2f64..2.0, s in -1.0f64..1.0) {
        let g = "(1 + r^2 + 0.3*s^2 + 0.1*r*s)";
        let base = eval_jet(&parse(g).unwrap(), r, s).unwrap();
        for src in [
            format!("ln(exp({g}))"),
            format!("sqrt({g})^2"),
            format!("exp(ln({g}))"),
            format!("1/(1/{g})"),
            format!("{g}^0.5 * {g}^0.5"),
        ] {
            let j = eval_jet(&parse(&src).unwrap(), r, s).unwrap();
            for (a, b) in orders() {
                prop_assert!((j.partial(a, b) - base.partial(a, b)).abs() < 1e-11 * scale(&base), "{src} ({a},{b})");
            }
        }
        let pyth = eval_jet(&parse(&format!("sin({g})^2 + cos({g})^2")).unwrap(), r, s).unwrap();
        prop_assert!((pyth.value() - 1.0).abs() < 1e-14);
        for (a, b) in orders().skip(1) {
            prop_assert!(pyth.partial(a, b).abs() < 1e-11 * scale(&base).powi(4));
        }
    }

    #[test]
    fn jets_agree_with_finite_differences(idx in 0usize..SMOOTH.len(), r in 0.6f64..1.6, f in -0.7f64..0.7) {
        let e: Expr = SMOOTH[idx].parse().unwrap();
        let s = f * r;
        let jet = eval_jet(&e, r, s).unwrap();
        for (a, b) in orders() {
            let exact = jet.partial(a, b);
            let approx = fd_partials(&e, r, s, a, b).unwrap();
            prop_assert!((exact - approx).abs() <= oracle_tolerance(a + b, exact),
                "{} ({a},{b}) at ({r},{s}): {exact} vs {approx}", SMOOTH[idx]);
        }
    }

    #[test]
    fn display_round_trips(idx in 0usize..SMOOTH.len(), r in 0.6f64..1.6, s in -0.3f64..0.3) {
        let e = parse(SMOOTH[idx]).unwrap();
        let again = parse(&e.to_string()).unwrap();
        prop_assert_eq!(&e, &again);
        prop_assert_eq!(e.eval(r, s), again.eval(r, s));
    }
}

#[test]
fn differentiation_commutes_with_evaluation() {
    let e = parse(SMOOTH[0]).unwrap();
    let jet = eval_jet(&e, 0.7, 0.2).unwrap();
    let d = jet.dr().ds();
    assert_eq!(d.degree(), 2);
    for (a, b) in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
        assert!((d.partial(a, b) - jet.partial(a + 1, b + 1)).abs() < 1e-13);
    }
}

#[test]
fn domain_errors_name_the_node() {
    let e = parse("1 + sqrt(s - 2)").unwrap();
    let err = eval_jet(&e, 1.0, 0.5).unwrap_err();
    assert!(err.to_string().contains("sqrt"), "{err}");
    let kink = eval_jet(&parse("abs(s)").unwrap(), 1.0, 0.0).unwrap_err();
    assert!(kink.to_string().contains("abs"), "{kink}");
}
