use num_complex::Complex64;
use proptest::prelude::*;

use tssa_core::charpoly::{charpoly_leverrier, charpoly_minors, det, CharPoly, SquareMatrix};
use tssa_core::gamma::GammaPoly;
use tssa_core::oracle::{eigvals, poly_from_roots, poly_roots, simulate_with_recovered};
use tssa_core::routh::{build_routh, deg5_quantities, q4_full, routh_verdict, Stability};
use tssa_core::sweep::Ranges;
use tssa_core::tworisk::{
    closed_form_k, ede_quadratic, leading_charpoly, solve_ede, stability_conditions, Params,
    State,
};

fn rel_close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= (rel * a.abs().max(b.abs())).max(abs)
}

fn matrix(n: usize) -> impl Strategy<Value = SquareMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |e| SquareMatrix::new(n, e).unwrap())
}

fn any_matrix() -> impl Strategy<Value = SquareMatrix<f64>> {
    (2usize..=6).prop_flat_map(matrix)
}

fn gamma_poly() -> impl Strategy<Value = GammaPoly> {
    prop::collection::vec((-3.0f64..3.0, 0u32..4), 0..4).prop_map(GammaPoly::from_terms)
}

fn gamma_matrix(n: usize) -> impl Strategy<Value = SquareMatrix<GammaPoly>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, 0u32..3), n * n).prop_map(move |e| {
        let entries = e
            .into_iter()
            .map(|(k0, k1, p)| GammaPoly::from_terms([(k0, 0), (k1, p)]))
            .collect();
        SquareMatrix::new(n, entries).unwrap()
    })
}

fn poly_close(a: &GammaPoly, b: &GammaPoly, rel: f64) -> bool {
    let scale = a
        .terms()
        .chain(b.terms())
        .map(|(_, k)| k.abs())
        .fold(1.0, f64::max);
    (0..=12).all(|p| (a.coeff(p) - b.coeff(p)).abs() <= rel * scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn minors_match_leverrier(m in any_matrix()) {
        let a = charpoly_minors(&m);
        let b = charpoly_leverrier(&m);
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            prop_assert!(rel_close(*x, *y, 1e-9, 1e-12), "{x} vs {y}");
        }
    }

    #[test]
    fn trace_and_determinant_coefficients(m in any_matrix()) {
        let cp = charpoly_minors(&m);
        let n = m.dim();
        prop_assert!(rel_close(*cp.c(1), -m.trace(), 1e-12, 1e-14));
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!(rel_close(*cp.c(n), sign * det(&m), 1e-9, 1e-12));
    }

    #[test]
    fn gamma_charpoly_commutes_with_substitution(m in (2usize..=4).prop_flat_map(gamma_matrix), g in prop::sample::select(vec![1e2, 1e3, 1e4])) {
        let cp = charpoly_minors(&m);
        let n = m.dim();
        prop_assert!(poly_close(cp.c(1), &(-m.trace()), 1e-12));
        let sign = if n % 2 == 0 { GammaPoly::constant(1.0) } else { GammaPoly::constant(-1.0) };
        prop_assert!(poly_close(cp.c(n), &(&sign * &det(&m)), 1e-9));
        let numeric = charpoly_minors(&m.map(|e| e.eval(g)));
        for i in 1..=n {
            let a = cp.c(i).eval(g);
            let b = *numeric.c(i);
            // Cancellation between large terms limits the attainable accuracy.
            let scale: f64 = cp.c(i).terms().map(|(p, k)| k.abs() * g.powi(p as i32)).sum::<f64>().max(1.0);
            prop_assert!((a - b).abs() <= 1e-9 * scale.max(b.abs()), "c{i}: {a} vs {b}");
        }
    }

    #[test]
    fn gamma_ring_laws(a in gamma_poly(), b in gamma_poly(), c in gamma_poly()) {
        prop_assert!(poly_close(&(&(&a + &b) + &c), &(&a + &(&b + &c)), 1e-12));
        prop_assert!(poly_close(&(&a * &b), &(&b * &a), 1e-12));
        prop_assert!(poly_close(&(&(&a * &b) * &c), &(&a * &(&b * &c)), 1e-12));
        prop_assert!(poly_close(&(&a * &(&b + &c)), &(&(&a * &b) + &(&a * &c)), 1e-12));
    }

    #[test]
    fn gamma_evaluation_is_multiplicative(a in gamma_poly(), b in gamma_poly(), g in prop::sample::select(vec![1e2, 1e3, 1e4])) {
        let lhs = (&a * &b).eval(g);
        let rhs = a.eval(g) * b.eval(g);
        let scale = a.terms().map(|(p, k)| k.abs() * g.powi(p as i32)).sum::<f64>()
            * b.terms().map(|(p, k)| k.abs() * g.powi(p as i32)).sum::<f64>();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * scale.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn leading_ignores_lower_order(a in gamma_poly(), k in 0.5f64..3.0, lower in gamma_poly()) {
        let top = &a + &GammaPoly::monomial(k, 6);
        let low: GammaPoly = GammaPoly::from_terms(lower.terms().map(|(p, c)| (c, p.min(5))));
        prop_assert_eq!(top.leading(), (&top + &low).leading());
    }

    #[test]
    fn deg4_array_matches_closed_forms(c in prop::collection::vec(0.1f64..5.0, 4)) {
        let p = CharPoly::new(c.clone()).unwrap();
        let (c1, c2, c3, c4) = (c[0], c[1], c[2], c[3]);
        let q1 = c1 * c2 - c3;
        let q2 = c3 * q1 - c1 * c1 * c4;
        prop_assume!(q1.abs() > 1e-3 * (c1 * c2).abs());
        let a = build_routh(&p).unwrap();
        prop_assert!(rel_close(*a.entry(3, 1), q1 / c1, 1e-12, 0.0));
        prop_assert!(rel_close(*a.entry(3, 2), c4, 1e-12, 0.0));
        prop_assert!(rel_close(*a.entry(4, 1), q2 / q1, 1e-12, 1e-12 * (c3 * q1).abs() / q1.abs()));
        prop_assert!(rel_close(*a.entry(5, 1), c4, 1e-12, 0.0));
    }

    #[test]
    fn q4_formulas_agree(c in prop::collection::vec(-5.0f64..5.0, 5)) {
        let p = CharPoly::new(c).unwrap();
        let full = q4_full(&p).unwrap();
        let q = deg5_quantities(&p).unwrap();
        let cs: Vec<f64> = p.coeffs().iter().map(|v| v.abs().max(1.0)).collect();
        let scale = cs[0] * cs[0] * cs[1] * cs[2] * cs[3] * 10.0 + cs[0] * cs[4] * cs[4];
        prop_assert!((full - q.q4).abs() <= 1e-9 * full.abs().max(scale * 1e-3));
    }

    #[test]
    fn verdict_is_scale_invariant(c in prop::collection::vec(-3.0f64..3.0, 2..7), t in 0.05f64..20.0) {
        let p = CharPoly::new(c.clone()).unwrap();
        let scaled: Vec<f64> = c.iter().enumerate().map(|(i, v)| v * t.powi(i as i32 + 1)).collect();
        let q = CharPoly::new(scaled).unwrap();
        prop_assert_eq!(routh_verdict(&p).stability, routh_verdict(&q).stability);
    }

    #[test]
    fn eigenvalues_of_transpose(m in any_matrix()) {
        let a = eigvals(&m);
        let b = eigvals(&m.transpose());
        prop_assume!(a.min_separation() > 1e-3);
        for r in &a.roots {
            let nearest = b.roots.iter().map(|s| (r - s).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest <= 1e-8 * r.norm().max(1.0), "{r}");
        }
    }

    #[test]
    fn roots_round_trip(re in prop::collection::vec(-5.0f64..5.0, 1..=6)) {
        let roots: Vec<Complex64> = re.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        let mut sorted = re.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assume!(sorted.windows(2).all(|w| w[1] - w[0] > 0.1));
        let c = poly_from_roots(&roots);
        let rs = poly_roots(&CharPoly::new(c.clone()).unwrap());
        prop_assert!(rs.accepted());
        let rebuilt = poly_from_roots(&rs.roots);
        for (x, y) in c.iter().zip(&rebuilt) {
            prop_assert!(rel_close(*x, *y, 1e-6, 1e-9), "{x} vs {y}");
        }
    }

    #[test]
    fn verdict_matches_root_signs(
        roots in prop::collection::vec((1e-3f64..4.0, prop::bool::ANY, 0.0f64..3.0, prop::bool::ANY), 1..=3),
    ) {
        let mut zs = Vec::new();
        for (re, neg, im, pair) in roots {
            let x = if neg { -re } else { re };
            if pair && im > 1e-3 {
                zs.push(Complex64::new(x, im));
                zs.push(Complex64::new(x, -im));
            } else {
                zs.push(Complex64::new(x, 0.0));
            }
        }
        prop_assume!(zs.len() >= 2);
        let p = CharPoly::new(poly_from_roots(&zs)).unwrap();
        let stable = zs.iter().all(|z| z.re < 0.0);
        let want = if stable { Stability::Stable } else { Stability::Unstable };
        prop_assert_eq!(routh_verdict(&p).stability, want);
    }
}

fn endemic_params() -> impl Strategy<Value = Params> {
    (0u64..1_000_000).prop_map(|i| Ranges::default().sample(99, i))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn equilibrium_identities(p in endemic_params()) {
        let g = ede_quadratic(&p);
        let gmax = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for e in solve_ede(&p) {
            let gz = (g[0] * e.z + g[1]) * e.z + g[2];
            prop_assert!(gz.abs() <= 1e-9 * gmax);
            prop_assert!((p.b * e.q - 1.0).abs() <= 1e-9);
            prop_assert!(e.u <= e.q + 1e-12 && e.q <= e.s + 1e-12);
            prop_assert!(e.p >= -1e-9 && e.s <= 1.0);
            let h = p.h();
            prop_assert!((h * e.u - (1.0 - p.kappa() + (1.0 - p.m) * p.sigma * e.z)).abs() <= 1e-9 * (1.0 + h));
            prop_assert!((h * e.p - (p.b * e.s - 1.0)).abs() <= 1e-9 * (1.0 + p.b));

            let sc = stability_conditions(&p, &e);
            prop_assert_eq!(sc.k[3], sc.k[2] + sc.k[4]);
            prop_assert!(rel_close(p.rho * e.y * sc.c, sc.q2(), 1e-9, 1e-12));
            let closed = closed_form_k(&p, &e);
            let minors = leading_charpoly(&p, &e);
            prop_assert_eq!(minors.p, [1, 1, 2, 2, 2]);
            for (a, b) in closed.iter().zip(minors.k) {
                prop_assert!(rel_close(*a, b, 1e-9, 1e-12), "{a} vs {b}");
            }
        }
    }
}

#[test]
fn population_identity_is_conserved() {
    let p = Params {
        epsilon: 1e-2,
        b: 3.0,
        m: 0.2,
        rho: 1.5,
        psi: 0.5,
        omega: 0.3,
        sigma: 0.4,
        f: 0.7,
    };
    let init = State { x: 0.0, y: 1e-2, s: 0.9, u: 0.4, n: 1.0 };
    let tol = 1e-8;
    let tr = simulate_with_recovered(&p, 1e-2, &init, 20.0, tol).unwrap();
    let r = tr.recovered.as_ref().unwrap();
    for (s, rv) in tr.states.iter().zip(r) {
        let total = s.s + rv + 1e-2 * (s.x + s.y);
        assert!((total - s.n).abs() <= tol * 10.0, "{total} vs {}", s.n);
    }
}
