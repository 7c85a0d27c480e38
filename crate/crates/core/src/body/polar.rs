//! Polar body `K* = {y : ⟨x, y⟩ <= 1 ∀x ∈ K}`.
//!
//! The support function of `K*` is the reciprocal of the radial function of
//! `K`: `h*(u) = 1/ρ_K(u)` with `ρ_K(u) = min_{⟨x,u⟩>0} h(x)/⟨x,u⟩`. The minimizer
//! `x` is the normal at the boundary point in direction `u`, i.e. `X(x) ∥ u`.

use rayon::prelude::*;

use super::{compute_geometry, Provenance, SupportFunction};
use crate::error::{Error, Result};
use crate::sphere_grid::fields::{dot2, dot3, norm3, Vec3};
use crate::sphere_grid::SphericalGrid;

const MAX_NEWTON_ITERS: usize = 60;
const NEWTON_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct PolarBody {
    pub hstar: SupportFunction,
    /// For every grid node `u`, the normal `x` of `K` with `X(x)/|X(x)| = u`.
    pub preimages: Vec<Vec3>,
    /// For every grid node `x`, the direction `x* = X(x)/|X(x)|`.
    pub x_star: Vec<Vec3>,
}

/// Computes the polar body on the same grid.
pub fn polar_body(sf: &SupportFunction) -> Result<PolarBody> {
    let grid = sf.grid().clone();
    let geom = compute_geometry(sf)?;
    let nodes = grid.nodes();
    let h = sf.h().values();

    let solved: Vec<Result<(Vec3, f64)>> = (0..grid.n_nodes())
        .into_par_iter()
        .map(|node| {
            let u = nodes[node];
            // coarse minimizer over the grid
            let mut best = (f64::INFINITY, 0);
            for (j, x) in nodes.iter().enumerate() {
                let c = dot3(x, &u);
                if c > 0.0 {
                    let v = h[j] / c;
                    if v < best.0 {
                        best = (v, j);
                    }
                }
            }
            refine_preimage(&grid, sf.coeffs(), &u, nodes[best.1], node)
        })
        .collect();

    let mut preimages = Vec::with_capacity(solved.len());
    let mut values = Vec::with_capacity(solved.len());
    for r in solved {
        let (x, rho) = r?;
        preimages.push(x);
        values.push(1.0 / rho);
    }
    let hstar = SupportFunction::from_values(grid, &values, Provenance::Polar);
    let x_star = geom
        .x_map
        .iter()
        .map(|x| {
            let n = norm3(x);
            [x[0] / n, x[1] / n, x[2] / n]
        })
        .collect();
    Ok(PolarBody {
        hstar,
        preimages,
        x_star,
    })
}

/// Newton iteration for the stationarity condition of `h(x)/⟨x,u⟩`:
/// `R(x) = ⟨x,u⟩ ∇̄h − h u_T = 0`, with Jacobian
/// `⟨x,u⟩ A[h] + ∇̄h ⊗ u_T − u_T ⊗ ∇̄h`. Returns the preimage and `ρ_K(u)`.
fn refine_preimage(
    grid: &SphericalGrid,
    coeffs: &[f64],
    u: &Vec3,
    start: Vec3,
    node: usize,
) -> Result<(Vec3, f64)> {
    let mut x = start;
    let mut res = f64::INFINITY;
    for _ in 0..MAX_NEWTON_ITERS {
        let jet = grid.eval_point(coeffs, &x);
        let c = dot3(&x, u);
        let ut = jet.frame.project(u);
        let g = jet.grad;
        let r = [c * g[0] - jet.value * ut[0], c * g[1] - jet.value * ut[1]];
        res = dot2(&r, &r).sqrt();
        let a = jet.hess.add_identity(jet.value);
        let j = [
            [
                c * a.tt + g[0] * ut[0] - ut[0] * g[0],
                c * a.tp + g[0] * ut[1] - ut[0] * g[1],
            ],
            [
                c * a.tp + g[1] * ut[0] - ut[1] * g[0],
                c * a.pp + g[1] * ut[1] - ut[1] * g[1],
            ],
        ];
        if res < NEWTON_TOL * jet.value.abs().max(1.0) {
            return Ok((x, jet.value / c));
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let step = [
            -(j[1][1] * r[0] - j[0][1] * r[1]) / det,
            -(-j[1][0] * r[0] + j[0][0] * r[1]) / det,
        ];
        if dot2(&step, &step).sqrt() < 1e-15 {
            return Ok((x, jet.value / c));
        }
        let d = jet.frame.to_ambient(&step);
        let y = [x[0] + d[0], x[1] + d[1], x[2] + d[2]];
        let n = norm3(&y);
        x = [y[0] / n, y[1] / n, y[2] / n];
        if !x.iter().all(|v| v.is_finite()) {
            break;
        }
    }
    Err(Error::PolarNotConverged {
        node,
        iterations: MAX_NEWTON_ITERS,
        residual: res,
    })
}

/// `max |h⁴(x) h*(x*)⁴ / (K(x) K*(x*)) − 1|` over grid nodes, with `h*` and
/// `K*` evaluated at the off-grid points `x*` from the spectral expansion of `h*`.
pub fn polar_identity_check(sf: &SupportFunction) -> Result<f64> {
    let geom = compute_geometry(sf)?;
    let polar = polar_body(sf)?;
    compute_geometry(&polar.hstar)?;
    let grid = sf.grid();
    let coeffs = polar.hstar.coeffs();
    let dev = (0..grid.n_nodes())
        .into_par_iter()
        .map(|i| {
            let jet = grid.eval_point(coeffs, &polar.x_star[i]);
            let sigma_star = jet.hess.add_identity(jet.value).det();
            let h = geom.h.values()[i];
            let v = (h * jet.value).powi(4) * geom.sigma_n.values()[i] * sigma_star;
            (v - 1.0).abs()
        })
        .reduce(|| 0.0, f64::max);
    Ok(dev)
}

/// `‖h_{(K*)*} − h_K‖∞`.
pub fn bipolar_deviation(sf: &SupportFunction) -> Result<f64> {
    let once = polar_body(sf)?;
    let twice = polar_body(&once.hstar)?;
    Ok(twice
        .hstar
        .h()
        .values()
        .iter()
        .zip(sf.h().values())
        .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::make_ball;
    use std::sync::Arc;

    #[test]
    fn centred_ball_polar_is_reciprocal() {
        let g = Arc::new(SphericalGrid::new(10).unwrap());
        for r in [1.0, 2.0, 0.5] {
            let p = polar_body(&make_ball(g.clone(), [0.0; 3], r).unwrap()).unwrap();
            assert!(p
                .hstar
                .h()
                .values()
                .iter()
                .all(|v| (v - 1.0 / r).abs() < 1e-12));
        }
    }

    #[test]
    fn shifted_ball_matches_closed_form() {
        let g = Arc::new(SphericalGrid::new(24).unwrap());
        let c = [0.1, -0.2, 0.3];
        let p = polar_body(&make_ball(g.clone(), c, 1.0).unwrap()).unwrap();
        for (u, v) in g.nodes().iter().zip(p.hstar.h().values()) {
            // ρ solves |ρu − c| = 1
            let uc = dot3(u, &c);
            let rho = uc + (uc * uc - dot3(&c, &c) + 1.0).sqrt();
            assert!((v - 1.0 / rho).abs() < 1e-10);
        }
    }
}
