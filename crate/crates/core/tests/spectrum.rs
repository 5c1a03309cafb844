use num_complex::Complex;
use orthowall_core::analysis::equilibrium_spectrum;
use orthowall_core::{Equilibrium, Params};

/// Roots of `l^4 + c0` by simultaneous Weierstrass iteration.
fn weierstrass_roots(c0: f64) -> Vec<Complex<f64>> {
    let p = |z: Complex<f64>| z.powi(4) + c0;
    let seed = Complex::new(0.4, 0.9);
    let mut roots: Vec<Complex<f64>> = (0..4).map(|k| seed.powi(k) * (1.0 + c0.abs())).collect();
    for _ in 0..500 {
        let prev = roots.clone();
        for i in 0..4 {
            let denom = (0..4)
                .filter(|&j| j != i)
                .fold(Complex::new(1.0, 0.0), |acc, j| acc * (roots[i] - roots[j]));
            let step = p(roots[i]) / denom;
            roots[i] -= step;
        }
        let moved = roots.iter().zip(&prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if moved < 1e-15 * (1.0 + c0.abs()) {
            break;
        }
    }
    roots
}

#[test]
fn roots_match_an_independent_polynomial_solver() {
    for (eps, g) in [(1.0, 2.0), (0.3, 1.2), (1e-3, 4.0), (5.0, 1.05)] {
        let params = Params::new(eps, g, 10.0, 100).unwrap();
        for which in Equilibrium::ALL {
            let s = equilibrium_spectrum(&params, which);
            let c = match which {
                Equilibrium::MPlus => g - 1.0,
                Equilibrium::MMinus => 2.0,
            };
            let oracle = weierstrass_roots(c / eps);
            for z in s.a_roots {
                let z = Complex::new(z.re, z.im);
                let best = oracle
                    .iter()
                    .map(|w| (w - z).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(best <= 1e-10 * z.norm().max(1.0), "{which:?} {z}: {best:e}");
            }
            // product of the four roots equals the constant term
            let prod = s
                .a_roots
                .iter()
                .fold(Complex::new(1.0, 0.0), |acc, z| acc * Complex::new(z.re, z.im));
            assert!((prod - Complex::new(c / eps, 0.0)).norm() <= 1e-10 * (c / eps).max(1.0));
            assert!(s.hyperbolic);
            assert!(s.slowest_rate() > 0.0);
        }
    }
}

#[test]
fn unit_parameters_at_the_right_equilibrium() {
    let params = Params::new(1.0, 2.0, 30.0, 3000).unwrap();
    let s = equilibrium_spectrum(&params, Equilibrium::MPlus);
    let oracle = weierstrass_roots(1.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (re, im) in [(h, h), (h, -h), (-h, h), (-h, -h)] {
        let expected = Complex::new(re, im);
        assert!(oracle.iter().any(|w| (w - expected).norm() < 1e-10));
        assert!(s
            .a_roots
            .iter()
            .any(|z| (Complex::new(z.re, z.im) - expected).norm() < 1e-10));
    }
}
