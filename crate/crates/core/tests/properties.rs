use proptest::prelude::*;
use vstate::solver::{assemble_f, normalize_signs};
use vstate::spectra::{
    b_star, characteristic, dc_matrix, dc_spectrum, discriminant, kernel_vector, mode_threshold, omega_from_lambda,
    sc_eigen, transversality_ok, EigenBranch,
};
use vstate::{Problem, SpectralGrid};

/// `(b1, b2)` with a gap of at least 1e-3 between the radii.
fn radii() -> impl Strategy<Value = (f64, f64)> {
    (0.05f64..0.98, 0.0f64..1.0).prop_map(|(b1, t)| (b1, (0.001 + t * 0.998) * b1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn disc_eigenvalues_follow_the_closed_form(m in 1usize..40, b in 0.01f64..0.99) {
        let (lambda, omega) = sc_eigen(m, b).unwrap();
        prop_assert!((omega - omega_from_lambda(lambda)).abs() < 1e-15);
        prop_assert!(omega > 0.0 && omega < 0.5);
        let (_, next) = sc_eigen(m + 1, b).unwrap();
        prop_assert!(next > omega);
    }

    #[test]
    fn annular_eigenvalues_are_ordered_roots(n in 1usize..30, (b1, b2) in radii()) {
        let s = dc_spectrum(n, b1, b2).unwrap();
        match (s.lambda_plus, s.lambda_minus) {
            (Some(lp), Some(lm)) => {
                prop_assert!(lm <= lp);
                prop_assert!(s.omega_plus.unwrap() >= s.omega_minus.unwrap());
                // P_n is a monic quadratic in λ scaled by b1 b2, so compare to
                // the size of its terms
                let scale = 1.0 + lp.abs().powi(2);
                for l in [lp, lm] {
                    prop_assert!(characteristic(n, l, b1, b2).abs() <= 1e-10 * scale, "λ = {}", l);
                }
            }
            (None, None) => prop_assert!(s.discriminant < 0.0),
            _ => prop_assert!(false, "one-sided spectrum"),
        }
    }

    #[test]
    fn kernel_vectors_are_annihilated(m in 2usize..20, (b1, t) in (0.1f64..0.98, 0.02f64..0.98)) {
        let star = b_star(m, b1, 1e-14).unwrap();
        let b2 = t * star;
        for branch in [EigenBranch::Plus, EigenBranch::Minus] {
            let k = kernel_vector(m, branch, b1, b2).unwrap();
            let a = dc_matrix(m, k.lambda, b1, b2).unwrap();
            let [v1, v2] = k.components;
            prop_assert!((v1.hypot(v2) - 1.0).abs() < 1e-14);
            let size = a.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
            for row in a {
                prop_assert!((row[0] * v1 + row[1] * v2).abs() <= 1e-10 * size.max(1e-300));
            }
        }
    }

    #[test]
    fn transversality_matches_the_sign_of_the_discriminant(m in 2usize..25, (b1, b2) in radii()) {
        let delta = discriminant(m, b1, b2);
        prop_assume!(delta.abs() > 1e-12);
        prop_assert_eq!(transversality_ok(m, b1, b2).unwrap(), delta > 0.0);
        let g = mode_threshold(m, b1, b2);
        prop_assume!((m as f64 - g).abs() > 1e-9);
        prop_assert_eq!(delta > 0.0, m as f64 > g);
    }

    #[test]
    fn fold_radius_bounds_the_real_spectrum(m in 2usize..25, b1 in 0.05f64..0.98) {
        let star = b_star(m, b1, 1e-13).unwrap();
        prop_assert!(star > 0.0 && star < b1);
        prop_assert!(discriminant(m, b1, star) >= -1e-12);
        let past = star + 1e-6 * b1;
        if past < b1 {
            prop_assert!(discriminant(m, b1, past) < 0.0);
        }
        prop_assert!(b_star(m + 1, b1, 1e-13).unwrap() >= star);
    }

    #[test]
    fn residual_is_affine_in_omega(
        b in 0.3f64..0.9,
        coeffs in proptest::collection::vec(-0.02f64..0.02, 3),
        w1 in 0.0f64..0.5,
        w2 in 0.0f64..0.5,
    ) {
        let grid = SpectralGrid::new(32).unwrap();
        let p = Problem::simply_connected(b, 4, w1).unwrap();
        let f1 = assemble_f(&p, &coeffs, &grid).unwrap();
        let f2 = assemble_f(&p.with_omega(w2), &coeffs, &grid).unwrap();
        let fm = assemble_f(&p.with_omega(0.5 * (w1 + w2)), &coeffs, &grid).unwrap();
        for i in 0..f1.len() {
            prop_assert!((0.5 * (f1[i] + f2[i]) - fm[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn half_period_rotation_preserves_the_residual(
        b in 0.3f64..0.9,
        coeffs in proptest::collection::vec(-0.02f64..0.02, 3),
        omega in 0.0f64..0.5,
    ) {
        let grid = SpectralGrid::new(32).unwrap();
        let p = Problem::simply_connected(b, 4, omega).unwrap();
        let mut x = coeffs.clone();
        let flipped = normalize_signs(&p, &mut x);
        let f0 = assemble_f(&p, &coeffs, &grid).unwrap();
        let f1 = assemble_f(&p, &x, &grid).unwrap();
        prop_assert!(x[0] >= 0.0);
        for (k, (a, c)) in f0.iter().zip(&f1).enumerate() {
            let s = if flipped && k % 2 == 0 { -1.0 } else { 1.0 };
            prop_assert!((s * a - c).abs() < 1e-13, "mode {}", k + 1);
        }
    }
}
