use cdops::operators::comp_diff_matrix;
use cdops::posinormality::{
    analyze_operator, classify, lambda_bound_estimate, posinormal_certificates, AnalysisOptions, CertificateResult,
    Verdict, DEFAULT_EPS_SWEEP,
};
use cdops::series::{expand_rational, LinearFractionalMap, SymbolSpec, TruncatedSeries};
use num_complex::Complex64;
use proptest::prelude::*;

const ORDER: usize = 64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn in_disk(radius: f64) -> impl Strategy<Value = Complex64> {
    (0.0..radius, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn series(len: usize, order: usize) -> impl Strategy<Value = TruncatedSeries> {
    prop::collection::vec(in_disk(1.0), len).prop_map(move |v| TruncatedSeries::from_coeffs(&v, order).unwrap())
}

fn max_diff(a: &TruncatedSeries, b: &TruncatedSeries) -> f64 {
    (0..=a.order().max(b.order()))
        .map(|k| (a.coeff(k) - b.coeff(k)).norm())
        .fold(0.0, f64::max)
}

/// Self-map of the disk: `(az + b)/(cz + 1)` with `|a| + |b| ≤ 0.9·(1 − |c|)`.
fn self_map() -> impl Strategy<Value = LinearFractionalMap> {
    (in_disk(0.4), 0.05..1.0f64, 0.0..std::f64::consts::TAU, 0.0..1.0f64, 0.0..std::f64::consts::TAU)
        .prop_map(|(cc, share, ta, split, tb)| {
            let budget = 0.9 * (1.0 - cc.norm());
            let a = Complex64::from_polar(budget * share * split.max(0.1), ta);
            let b = Complex64::from_polar(budget * share * (1.0 - split.max(0.1)), tb);
            LinearFractionalMap::new(a, b, cc, c(1.0, 0.0)).unwrap()
        })
}

fn numerics_only() -> AnalysisOptions {
    AnalysisOptions {
        doubling: false,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_multiplication_is_associative(a in series(12, 24), b in series(12, 24), d in series(12, 24)) {
        let left = a.multiply(&b).multiply(&d);
        let right = a.multiply(&b.multiply(&d));
        prop_assert!(max_diff(&left, &right) < 1e-12);
    }

    #[test]
    fn series_multiplication_matches_pointwise_product(a in series(8, 20), b in series(8, 20), z in in_disk(0.5)) {
        // Degrees stay below the truncation, so the product is exact.
        let lhs = a.multiply(&b).evaluate(z);
        let rhs = a.evaluate(z) * b.evaluate(z);
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn rational_expansion_times_denominator_recovers_numerator(
        numer in series(4, 40),
        root in (1.3..4.0f64, 0.0..std::f64::consts::TAU),
    ) {
        let r = Complex64::from_polar(root.0, root.1);
        let denom = TruncatedSeries::from_coeffs(&[-r, c(1.0, 0.0)], 40).unwrap();
        let q = expand_rational(&numer, &denom, 40).unwrap();
        let back = q.multiply(&denom);
        for k in 0..=32 {
            prop_assert!((back.coeff(k) - numer.coeff(k)).norm() < 1e-12);
        }
    }

    #[test]
    fn antiderivative_inverts_differentiation(a in series(20, 30)) {
        let back = a.antiderivative().differentiate(1);
        // The top coefficient is lost to the fixed order.
        for k in 0..30 {
            prop_assert!((back.coeff(k) - a.coeff(k)).norm() < 1e-13);
        }
    }

    #[test]
    fn companion_map_is_an_involution_and_a_self_map(phi in self_map()) {
        let sigma = phi.sigma();
        prop_assert!(sigma.sigma().projectively_equal(&phi, 1e-14));
        for j in 0..256 {
            let z = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / 256.0);
            prop_assert!(sigma.eval(z).norm() < 1.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn verdict_and_lambda_ignore_scaling_of_psi(
        coeffs in prop::collection::vec(in_disk(1.0), 3),
        phi in self_map(),
        factor in (0.1..10.0f64, 0.0..std::f64::consts::TAU),
        n in 1usize..3,
    ) {
        let k = Complex64::from_polar(factor.0, factor.1);
        let psi = SymbolSpec::polynomial(coeffs.clone()).unwrap();
        let scaled = SymbolSpec::polynomial(coeffs.iter().map(|x| x * k).collect()).unwrap();
        let phi = SymbolSpec::linear_fractional(phi);
        let opts = numerics_only();
        let a = analyze_operator(&comp_diff_matrix(&psi, &phi, n, ORDER).unwrap(), vec![], &opts, None).unwrap();
        let b = analyze_operator(&comp_diff_matrix(&scaled, &phi, n, ORDER).unwrap(), vec![], &opts, None).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
        match (a.lambda_estimate, b.lambda_estimate) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-6 * x.max(1.0), "{} vs {}", x, y),
            (None, None) => {}
            other => prop_assert!(false, "lambda availability differs: {:?}", other),
        }
    }

    #[test]
    fn lambda_matches_weighted_shift_ratio(
        lambda in (0.2..3.0f64, 0.0..std::f64::consts::TAU),
        a in 0.3..0.95f64,
        n in 1usize..4,
    ) {
        // ψ = λz^{n+1}, φ = az maps e_j to a multiple of e_{j+1} with weight
        // w_j = λ a^{j-n} j!/(j-n)!, so |w_{j-1}/w_j| = (j-n)/(j a).
        let psi = SymbolSpec::monomial(Complex64::from_polar(lambda.0, lambda.1), n + 1);
        let phi = SymbolSpec::real_polynomial(&[0.0, a]);
        let t = comp_diff_matrix(&psi, &phi, n, ORDER).unwrap();
        let oracle = ((n + 1)..ORDER)
            .map(|j| (j - n) as f64 / (j as f64 * a))
            .fold(0.0, f64::max);
        let est = lambda_bound_estimate(&t, &DEFAULT_EPS_SWEEP).unwrap();
        prop_assert!(!est.diverging());
        prop_assert!((est.lambda - oracle).abs() <= 1e-6 * oracle, "{} vs {}", est.lambda, oracle);
    }

    #[test]
    fn nonvanishing_psi_certificate_is_backed_by_range_failure(
        head in (0.2..1.0f64, 0.0..std::f64::consts::TAU),
        tail in prop::collection::vec(in_disk(1.0), 2),
        phi in self_map(),
        n in 1usize..3,
    ) {
        let mut coeffs = vec![Complex64::from_polar(head.0, head.1)];
        coeffs.extend(tail);
        let psi = SymbolSpec::polynomial(coeffs).unwrap();
        let phi = SymbolSpec::linear_fractional(phi);
        let certs = posinormal_certificates(&psi, &phi, n).unwrap();
        prop_assert!(certs.iter().any(|r| r.name == "psi_derivatives_vanish" && r.fired()));
        let t = comp_diff_matrix(&psi, &phi, n, ORDER).unwrap();
        let report = analyze_operator(&t, vec![], &numerics_only(), None).unwrap();
        let residual = report.max_range_residual.unwrap();
        prop_assert!(residual > 0.1, "residual {}", residual);
        prop_assert_eq!(report.verdict, Verdict::NumericallyNotPosinormal);
    }

    #[test]
    fn zero_free_phi_certificate_is_backed_by_diverging_lambda(
        lambda in (0.2..3.0f64, 0.0..std::f64::consts::TAU),
        phi in self_map(),
        n in 1usize..4,
    ) {
        // With ψ = λzⁿ the first n rows vanish, so finite sections satisfy
        // range inclusion in exact arithmetic and the residual need not be
        // large. The obstruction shows up as an unbounded λ instead.
        let (a, b, _, _) = phi.params();
        prop_assume!(b.norm() > 1.05 * a.norm());
        let psi = SymbolSpec::monomial(Complex64::from_polar(lambda.0, lambda.1), n);
        let phi = SymbolSpec::linear_fractional(phi);
        let certs = posinormal_certificates(&psi, &phi, n).unwrap();
        let fired: Vec<&CertificateResult> = certs.iter().filter(|r| r.fired()).collect();
        prop_assert_eq!(fired.len(), 1);
        prop_assert_eq!(fired[0].name.as_str(), "phi_zero_in_disk");
        let t = comp_diff_matrix(&psi, &phi, n, ORDER).unwrap();
        let report = analyze_operator(&t, vec![], &numerics_only(), None).unwrap();
        prop_assert!(report.lambda_estimate.is_none());
        prop_assert_ne!(report.verdict, Verdict::NumericallyPosinormalConsistent);
    }

    #[test]
    fn diagonal_unitary_conjugation_preserves_the_analysis(
        coeffs in prop::collection::vec(in_disk(1.0), 3),
        phi in self_map(),
        n in 1usize..3,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let psi = SymbolSpec::polynomial(coeffs).unwrap();
        let t = comp_diff_matrix(&psi, &SymbolSpec::linear_fractional(phi), n, ORDER).unwrap();
        let phases: Vec<Complex64> = (0..=ORDER)
            .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
            .collect();
        let u = t.conjugate_by_diagonal(&phases).unwrap();
        for (a, b) in [(t.clone(), u.clone()), (t.adjoint(), u.adjoint())] {
            let ra = analyze_operator(&a, vec![], &numerics_only(), None).unwrap();
            let rb = analyze_operator(&b, vec![], &numerics_only(), None).unwrap();
            prop_assert_eq!(ra.verdict, rb.verdict);
            let (x, y) = (ra.max_range_residual.unwrap(), rb.max_range_residual.unwrap());
            prop_assert!((x - y).abs() <= 1e-9, "residual {} vs {}", x, y);
            match (ra.lambda_estimate, rb.lambda_estimate) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-9 * x.max(1.0), "lambda {} vs {}", x, y),
                (None, None) => {}
                other => prop_assert!(false, "lambda availability differs: {:?}", other),
            }
        }
    }

    #[test]
    fn consistent_verdict_requires_kernel_inclusion(
        coeffs in prop::collection::vec(in_disk(1.0), 3),
        phi in self_map(),
        n in 1usize..3,
        adjoint in any::<bool>(),
    ) {
        let psi = SymbolSpec::polynomial(coeffs).unwrap();
        let t = comp_diff_matrix(&psi, &SymbolSpec::linear_fractional(phi), n, ORDER).unwrap();
        let t = if adjoint { t.adjoint() } else { t };
        let report = analyze_operator(&t, vec![], &numerics_only(), None).unwrap();
        if report.verdict == Verdict::NumericallyPosinormalConsistent {
            prop_assert_eq!(report.kernel_inclusion_passed, Some(true));
        }
    }
}

proptest! {
    #[test]
    fn classification_is_monotone_in_the_residual(
        r1 in 0.0..1e-3f64,
        r2 in 0.0..1e-3f64,
        kernel in any::<bool>(),
        diverging in any::<bool>(),
    ) {
        let rank = |v: Verdict| match v {
            Verdict::NumericallyPosinormalConsistent => 0,
            Verdict::Inconclusive => 1,
            _ => 2,
        };
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(rank(classify(kernel, lo, diverging, 1e-6)) <= rank(classify(kernel, hi, diverging, 1e-6)));
        if !kernel {
            prop_assert_eq!(classify(kernel, lo, diverging, 1e-6), Verdict::NumericallyNotPosinormal);
        }
    }
}
