use num_complex::Complex64;
use proptest::prelude::*;

use extcw::checks::{random_form, random_polynomial};
use extcw::extendability::{certificate_residual, cusp_map, pullback_series, subalgebra_membership, Membership, TruncatedSeries};
use extcw::fields::{parse_expr, CRational, Expr};
use extcw::forms::Tangent;
use extcw::geometry::link_of_point;
use extcw::mesh::{stokes_check, Chain, Simplex};
use extcw::residues::bm_index;
use extcw::seeded_rng;

fn point() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y)| Complex64::new(x, y))
}

fn small_rational() -> impl Strategy<Value = CRational> {
    (-5i64..=5, 1i64..=4).prop_map(|(p, q)| CRational::from_ratio(p, q))
}

fn series(n: usize) -> impl Strategy<Value = TruncatedSeries> {
    proptest::collection::vec((0..=n, small_rational()), 0..6).prop_map(move |t| TruncatedSeries::from_terms(t, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn expressions_print_and_parse_back(seed in any::<u64>(), z in point()) {
        let mut rng = seeded_rng(seed);
        let e = random_polynomial(&mut rng, 1, 3);
        let back = parse_expr(&e.to_string()).unwrap();
        let (a, b) = (e.eval(&[z], &[]).unwrap(), back.eval(&[z], &[]).unwrap());
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()), "{} vs {}", e, back);
    }

    #[test]
    fn exterior_derivative_squares_to_zero(seed in any::<u64>(), degree in 0usize..=2, z1 in point(), z2 in point()) {
        let mut rng = seeded_rng(seed);
        let f = random_form(&mut rng, 0, 2, degree, 2);
        let dd = f.d().d();
        let vs: Vec<Tangent> = (0..dd.degree())
            .map(|k| Tangent::real(&[Complex64::new(1.0, k as f64), Complex64::new(0.5 * k as f64, -1.0)]))
            .collect();
        let value = if dd.is_zero() { 0.0 } else { dd.evaluate(&[z1, z2], &[], &vs).unwrap().norm() };
        prop_assert!(value < 1e-10);
    }

    #[test]
    fn wedge_is_graded_commutative(seed in any::<u64>(), p in 0usize..=2, q in 0usize..=2, z1 in point(), z2 in point()) {
        let mut rng = seeded_rng(seed);
        let a = random_form(&mut rng, 0, 2, p, 1);
        let b = random_form(&mut rng, 0, 2, q, 1);
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        let sign = if (p * q) % 2 == 0 { 1.0 } else { -1.0 };
        let vs: Vec<Tangent> = (0..p + q)
            .map(|k| Tangent::real(&[Complex64::new(k as f64 - 1.0, 0.3), Complex64::new(0.2, 1.0 - k as f64)]))
            .collect();
        let x = ab.evaluate(&[z1, z2], &[], &vs).unwrap();
        let y = ba.evaluate(&[z1, z2], &[], &vs).unwrap();
        prop_assert!((x - y * sign).norm() < 1e-9 * (1.0 + x.norm()));
    }

    #[test]
    fn stokes_on_random_triangles(seed in any::<u64>(), a in point(), b in point(), c in point()) {
        let area = ((b - a).conj() * (c - a)).im;
        prop_assume!(area.abs() > 0.05);
        let mut rng = seeded_rng(seed);
        let w = random_form(&mut rng, 0, 1, 1, 3);
        let chain = Chain::from_simplices([Simplex::planar(0, &[a, b, c])]);
        let r = stokes_check(&w, &chain, 1e-8).unwrap();
        prop_assert!(r.pass, "difference {}", r.difference);
    }

    #[test]
    fn series_product_obeys_leibniz(f in series(12), g in series(12)) {
        let lhs = f.mul(&g).derivative();
        let rhs = f.derivative().mul(&g).add(&f.mul(&g.derivative()));
        prop_assert_eq!(lhs.truncate(11), rhs.truncate(11));
    }

    #[test]
    fn series_product_is_associative(f in series(10), g in series(10), h in series(10)) {
        prop_assert_eq!(f.mul(&g).mul(&h), f.mul(&g.mul(&h)));
    }

    #[test]
    fn pulled_back_polynomials_are_members(coeffs in proptest::collection::vec((0u32..3, 0u32..3, small_rational()), 1..5), n in 8usize..20) {
        let f = cusp_map();
        let mut h = TruncatedSeries::zero(n);
        for (a, b, c) in &coeffs {
            if *a + *b == 0 {
                continue;
            }
            h = h.add(&pullback_series(&[*a, *b], &f, n).unwrap().scale(c));
        }
        match subalgebra_membership(&h, &f, n).unwrap() {
            Membership::Feasible { certificate } => {
                prop_assert!(certificate_residual(&h, &f, &certificate, n).unwrap().is_zero());
            }
            Membership::Infeasible { degree } => prop_assert!(false, "infeasible at {degree}"),
        }
    }

    #[test]
    fn winding_numbers_add_over_factors(a in 0i64..=3, b in 0i64..=3, p in (-0.4..0.4f64, -0.4..0.4f64)) {
        prop_assume!(a + b > 0);
        let p = Complex64::new(p.0, p.1);
        let f = Expr::product([
            Expr::var(0).powi(a),
            (&Expr::var(0) - &Expr::float(p)).powi(b),
        ]);
        let circle = link_of_point(Complex64::new(0.0, 0.0), 1.0, 16).unwrap();
        let r = bm_index(&[f], &circle, 1e-10).unwrap();
        prop_assert_eq!(r.index, a + b);
        prop_assert!(r.residual < 1e-6);
    }
}
