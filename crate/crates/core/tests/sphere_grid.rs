//! Grid calculus against ambient finite differences and closed forms.

use lpdual::sphere_grid::{coeff_index, ScalarField, SphericalGrid};
use proptest::prelude::*;

/// A degree-4 polynomial in ambient coordinates.
fn poly(y: &[f64; 3]) -> f64 {
    let [a, b, c] = *y;
    a * a * b + 3.0 * c.powi(4) - a * c + 0.5 * b - a * b * c * c + 0.2
}

/// Degree-0 extension `y ↦ poly(y/|y|)`; its ambient derivatives at |y| = 1
/// along tangent vectors are the intrinsic ones.
fn radial_ext(y: &[f64; 3]) -> f64 {
    let n = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
    poly(&[y[0] / n, y[1] / n, y[2] / n])
}

fn shifted(x: &[f64; 3], u: &[f64; 3], s: f64, v: &[f64; 3], t: f64) -> [f64; 3] {
    [
        x[0] + s * u[0] + t * v[0],
        x[1] + s * u[1] + t * v[1],
        x[2] + s * u[2] + t * v[2],
    ]
}

fn fd_first(x: &[f64; 3], u: &[f64; 3]) -> f64 {
    let e = 1e-5;
    let z = [0.0; 3];
    (radial_ext(&shifted(x, u, e, &z, 0.0)) - radial_ext(&shifted(x, u, -e, &z, 0.0))) / (2.0 * e)
}

fn fd_second(x: &[f64; 3], u: &[f64; 3], v: &[f64; 3]) -> f64 {
    let e = 1e-4;
    let f = |s: f64, t: f64| radial_ext(&shifted(x, u, s, v, t));
    (f(e, e) - f(e, -e) - f(-e, e) + f(-e, -e)) / (4.0 * e * e)
}

#[test]
fn gradient_and_hessian_match_ambient_differences() {
    let grid = SphericalGrid::new(12).unwrap();
    let f = ScalarField::from_fn(&grid, poly);
    let grad = grid.grad(&f);
    let hess = grid.hess(&f);
    let lap = grid.laplace_beltrami(&f);
    let mut worst: f64 = 0.0;
    for i in 0..grid.n_nodes() {
        let x = grid.nodes()[i];
        let fr = grid.frame(i);
        let (et, ep) = (fr.e_theta, fr.e_phi);
        let g = grad.components[i];
        worst = worst.max((g[0] - fd_first(&x, &et)).abs());
        worst = worst.max((g[1] - fd_first(&x, &ep)).abs());
        let h = hess.components[i];
        let htt = fd_second(&x, &et, &et);
        let hpp = fd_second(&x, &ep, &ep);
        worst = worst.max((h.tt - htt).abs() / 10.0);
        worst = worst.max((h.tp - fd_second(&x, &et, &ep)).abs() / 10.0);
        worst = worst.max((h.pp - hpp).abs() / 10.0);
        worst = worst.max((lap.values()[i] - (htt + hpp)).abs() / 10.0);
    }
    assert!(worst < 1e-6, "worst deviation {worst}");
}

#[test]
fn orthonormality_under_quadrature() {
    let grid = SphericalGrid::new(10).unwrap();
    let n = grid.n_coeffs();
    let ys: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut c = vec![0.0; n];
            c[i] = 1.0;
            grid.synthesize(&c)
        })
        .collect();
    for i in 0..n {
        for j in 0..=i {
            let prod: Vec<f64> = ys[i].iter().zip(&ys[j]).map(|(a, b)| a * b).collect();
            let v = grid.integrate(&prod);
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-10, "({i},{j}) {v}");
        }
    }
}

#[test]
fn harmonics_are_laplacian_eigenfunctions() {
    let grid = SphericalGrid::new(24).unwrap();
    for l in [0usize, 1, 2, 7, 16, 24] {
        for m in [-(l as i64), 0, l as i64] {
            let y = grid.harmonic(l, m);
            let lap = grid.laplace_beltrami(&y);
            let k = (l * (l + 1)) as f64;
            let err = lap
                .values()
                .iter()
                .zip(y.values())
                .fold(0.0_f64, |w, (a, b)| w.max((a + k * b).abs()));
            assert!(err <= 1e-9, "l={l} m={m} err={err}");
        }
    }
}

#[test]
fn low_harmonics_have_textbook_form() {
    let grid = SphericalGrid::new(8).unwrap();
    let pi = std::f64::consts::PI;
    let c1 = (3.0 / (4.0 * pi)).sqrt();
    let c20 = (5.0 / (16.0 * pi)).sqrt();
    let y10 = grid.harmonic(1, 0);
    let y20 = grid.harmonic(2, 0);
    for (i, x) in grid.nodes().iter().enumerate() {
        assert!((y10.values()[i] - c1 * x[2]).abs() < 1e-13);
        assert!((y20.values()[i] - c20 * (3.0 * x[2] * x[2] - 1.0)).abs() < 1e-13);
    }
}

#[test]
fn integration_is_exact_for_monomials() {
    // ∫ x_3^{2k} dμ = 4π / (2k + 1)
    let grid = SphericalGrid::new(8).unwrap();
    for k in 0..=4 {
        let f: Vec<f64> = grid.nodes().iter().map(|x| x[2].powi(2 * k)).collect();
        let want = 4.0 * std::f64::consts::PI / (2 * k + 1) as f64;
        assert!((grid.integrate(&f) - want).abs() < 1e-12);
    }
}

#[test]
fn constants_have_no_gradient_and_trace_is_laplacian() {
    let grid = SphericalGrid::new(9).unwrap();
    let c = ScalarField::constant(&grid, 2.5);
    assert!(grid.grad(&c).sup_norm() < 1e-13);
    let f = ScalarField::from_fn(&grid, poly);
    let hess = grid.hess(&f);
    let lap = grid.laplace_beltrami(&f);
    for (h, l) in hess.components.iter().zip(lap.values()) {
        assert!((h.trace() - l).abs() < 1e-11);
    }
}

fn random_coeffs(grid: &SphericalGrid, seed: u64) -> Vec<f64> {
    let mut c = vec![0.0; grid.n_coeffs()];
    let mut s = seed
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    for v in c.iter_mut() {
        s = s
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        *v = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analysis_inverts_synthesis(seed in any::<u64>(), lmax in 4usize..14) {
        let grid = SphericalGrid::new(lmax).unwrap();
        let c = random_coeffs(&grid, seed);
        let back = grid.analyze(&grid.synthesize(&c));
        for (a, b) in c.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_theorem(seed in any::<u64>()) {
        // ∫ ∇̄f dμ = 2 ∫ f x dμ
        let grid = SphericalGrid::new(10).unwrap();
        let mut c = random_coeffs(&grid, seed);
        for l in 9..=10usize {
            for m in -(l as i64)..=(l as i64) {
                c[coeff_index(l, m)] = 0.0;
            }
        }
        let f = ScalarField::from_coeffs(&grid, c);
        let lhs = grid.integrate_vec(&grid.grad(&f).to_ambient(&grid));
        let fx: Vec<[f64; 3]> = grid
            .nodes()
            .iter()
            .zip(f.values())
            .map(|(x, v)| [v * x[0], v * x[1], v * x[2]])
            .collect();
        let rhs = grid.integrate_vec(&fx);
        for k in 0..3 {
            prop_assert!((lhs[k] - 2.0 * rhs[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn point_evaluation_agrees_with_closed_form(z in -0.999f64..0.999, phi in 0.0f64..std::f64::consts::TAU) {
        let grid = SphericalGrid::new(8).unwrap();
        let f = ScalarField::from_fn(&grid, poly);
        let s = (1.0 - z * z).sqrt();
        let x = [s * phi.cos(), s * phi.sin(), z];
        let jet = grid.eval_point(f.coeffs_or_analyze(&grid).as_ref(), &x);
        prop_assert!((jet.value - poly(&x)).abs() < 1e-11);
        let gt = fd_first(&x, &jet.frame.e_theta);
        prop_assert!((jet.grad[0] - gt).abs() < 1e-6);
    }
}
