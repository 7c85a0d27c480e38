//! Body geometry against closed forms for balls and ellipsoids.

use std::f64::consts::PI;
use std::sync::Arc;

use lpdual::body::{
    bipolar_deviation, compute_geometry, make_ball, make_random_body, pde_residual, polar_body,
    polar_identity_check, BodyDocument, Provenance, SupportFunction,
};
use lpdual::sphere_grid::{coeff_index, SphericalGrid};
use lpdual::Error;
use proptest::prelude::*;

const AXES: [f64; 3] = [1.0, 1.15, 0.9];

fn ellipsoid_h(axes: &[f64; 3], x: &[f64; 3]) -> f64 {
    (0..3).map(|k| (axes[k] * x[k]).powi(2)).sum::<f64>().sqrt()
}

fn ellipsoid(grid: Arc<SphericalGrid>, axes: [f64; 3]) -> SupportFunction {
    let values: Vec<f64> = grid.nodes().iter().map(|x| ellipsoid_h(&axes, x)).collect();
    SupportFunction::from_values(grid, &values, Provenance::Imported)
}

#[test]
fn translated_ball_geometry() {
    let grid = Arc::new(SphericalGrid::new(16).unwrap());
    let c = [0.2, -0.1, 0.3];
    let radius = 1.4;
    let geom = compute_geometry(&make_ball(grid.clone(), c, radius).unwrap()).unwrap();
    for (i, x) in grid.nodes().iter().enumerate() {
        let want_x = [
            c[0] + radius * x[0],
            c[1] + radius * x[1],
            c[2] + radius * x[2],
        ];
        for (got, want) in geom.x_map[i].iter().zip(&want_x) {
            assert!((got - want).abs() < 1e-12);
        }
        let r = (want_x.iter().map(|v| v * v).sum::<f64>()).sqrt();
        assert!((geom.r.values()[i] - r).abs() < 1e-12);
        assert!((geom.sigma_n.values()[i] - radius * radius).abs() < 1e-11);
    }
    // enclosed volume (1/3)∫ h σ dμ does not depend on the translation
    let vol = geom.total_dv() / 3.0;
    assert!((vol - 4.0 / 3.0 * PI * radius.powi(3)).abs() < 1e-11);
}

#[test]
fn centred_ball_residual_is_power_of_radius() {
    let grid = Arc::new(SphericalGrid::new(8).unwrap());
    for radius in [0.5, 2.0] {
        let geom = compute_geometry(&make_ball(grid.clone(), [0.0; 3], radius).unwrap()).unwrap();
        for (p, q) in [(-1.0, 2.5), (0.0, 7.0), (-2.0, -2.0)] {
            let want = radius.powf(p - q) - 1.0;
            let g = pde_residual(&geom, p, q, 1.0);
            assert!(g
                .values()
                .iter()
                .all(|v| (v - want).abs() < 1e-12 * (1.0 + want.abs())));
        }
    }
}

#[test]
fn ellipsoid_curvature_and_boundary_map() {
    let grid = Arc::new(SphericalGrid::new(32).unwrap());
    let geom = compute_geometry(&ellipsoid(grid.clone(), AXES)).unwrap();
    let prod = (AXES[0] * AXES[1] * AXES[2]).powi(2);
    let mut worst: f64 = 0.0;
    for (i, x) in grid.nodes().iter().enumerate() {
        let h = ellipsoid_h(&AXES, x);
        worst = worst.max((geom.gauss_curv.values()[i] - h.powi(4) / prod).abs());
        for k in 0..3 {
            worst = worst.max((geom.x_map[i][k] - AXES[k] * AXES[k] * x[k] / h).abs());
        }
    }
    assert!(worst < 1e-8, "{worst}");
    let vol = geom.total_dv() / 3.0;
    assert!((vol - 4.0 / 3.0 * PI * AXES.iter().product::<f64>()).abs() < 1e-9);
}

#[test]
fn ellipsoid_polar_has_reciprocal_axes() {
    let grid = Arc::new(SphericalGrid::new(32).unwrap());
    let polar = polar_body(&ellipsoid(grid.clone(), AXES)).unwrap();
    let inv = [1.0 / AXES[0], 1.0 / AXES[1], 1.0 / AXES[2]];
    for (x, v) in grid.nodes().iter().zip(polar.hstar.h().values()) {
        assert!((v - ellipsoid_h(&inv, x)).abs() < 1e-10);
    }
}

#[test]
fn polar_identity_on_balls_and_refinement() {
    let g32 = Arc::new(SphericalGrid::new(32).unwrap());
    for r in [1.0, 0.7, 1.8] {
        let ball = make_ball(g32.clone(), [0.0; 3], r).unwrap();
        assert!(polar_identity_check(&ball).unwrap() <= 1e-10);
    }
    let g16 = Arc::new(SphericalGrid::new(16).unwrap());
    let coarse = polar_identity_check(&make_random_body(g16, 3, 0.05, 3).unwrap()).unwrap();
    let fine = polar_identity_check(&make_random_body(g32, 3, 0.05, 3).unwrap()).unwrap();
    assert!(fine < coarse, "{fine} vs {coarse}");
    assert!(fine <= 1e-5);
}

#[test]
fn bipolar_returns_the_body() {
    let grid = Arc::new(SphericalGrid::new(24).unwrap());
    let sf = make_random_body(grid, 9, 0.05, 3).unwrap();
    assert!(bipolar_deviation(&sf).unwrap() < 1e-5);
}

#[test]
fn random_bodies_are_reproducible_and_bounded() {
    let grid = Arc::new(SphericalGrid::new(12).unwrap());
    let a = make_random_body(grid.clone(), 42, 0.05, 3).unwrap();
    let b = make_random_body(grid.clone(), 42, 0.05, 3).unwrap();
    assert_eq!(a.coeffs(), b.coeffs());
    assert_ne!(
        a.coeffs(),
        make_random_body(grid.clone(), 43, 0.05, 3)
            .unwrap()
            .coeffs()
    );
    for (i, c) in a.coeffs().iter().enumerate().skip(4) {
        assert!(c.abs() <= 0.05, "coefficient {i}");
    }
    assert!(matches!(
        make_random_body(grid.clone(), 1, 0.05, 13),
        Err(Error::DegreeExceedsGrid { .. })
    ));
    assert!(matches!(
        make_random_body(grid, 1, 50.0, 3),
        Err(Error::RandomBodyRejected { .. })
    ));
}

#[test]
fn invalid_support_functions_are_rejected() {
    let grid = Arc::new(SphericalGrid::new(12).unwrap());
    let mut c = vec![0.0; grid.n_coeffs()];
    c[0] = (4.0 * PI).sqrt();
    c[coeff_index(4, 0)] = 0.4;
    let bumpy = SupportFunction::from_coeffs(grid.clone(), c, Provenance::Imported).unwrap();
    assert!(matches!(
        compute_geometry(&bumpy),
        Err(Error::NotConvex { .. })
    ));
    let negative = bumpy.scaled(-1.0);
    assert!(matches!(
        compute_geometry(&negative),
        Err(Error::NotPositive { .. })
    ));
    assert!(matches!(
        make_ball(grid, [2.0, 0.0, 0.0], 1.0),
        Err(Error::OriginNotInterior { .. })
    ));
}

fn float() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e3f64..1e3,
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        Just(f64::MIN_POSITIVE),
        Just(5e-324),
        Just(-0.0),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn body_json_round_trip_is_bit_exact(values in prop::collection::vec(float(), 25), seed in any::<u64>()) {
        let coefficients = values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let l = (i as f64).sqrt() as usize;
                (l, i as i64 - (l * l + l) as i64, v)
            })
            .collect();
        let doc = BodyDocument {
            lmax: 4,
            coefficients,
            provenance: Provenance::Random { seed, amplitude: 0.05, lmax_body: 3 },
        };
        let back = BodyDocument::from_json(&doc.to_json().unwrap()).unwrap();
        for (a, b) in doc.coefficients.iter().zip(&back.coefficients) {
            prop_assert_eq!(a.2.to_bits(), b.2.to_bits());
        }
        prop_assert_eq!(back, doc);
    }
}
