//! Centro-affine calculus on the sphere for a body with support function `h`.
//!
//! Taking the position vector `X` as transversal normal induces the metric
//! `g = A[h]/h`, a pair of conjugate connections `∇, ∇*` and the volume
//! `dV = h σ₂ dμ`. The Laplacians of the pair are evaluated through
//!
//! ```text
//! Hess* f + g f = A[h f] / h
//! Δ f  = tr_g Hess* f = tr(A[h]⁻¹ A[h f]) − n f
//! Δ* f = Δ f − g(∇ log(h^{n+2}/K), ∇ f)
//! ```
//!
//! The first line contracted with `g⁻¹ = h A[h]⁻¹` gives the second. Only the
//! trace of the difference tensor `Q = ∇* − ∇` enters, as `−∇ log(h^{n+2}/K)`.
//!
//! Every field that gets differentiated spectrally here is a polynomial in
//! `h`, its derivatives and the input: `h f`, `σ₂`, `r²`, `⟨X, w⟩`. Quotients
//! and logarithms are formed pointwise afterwards, so band-limited inputs are
//! differentiated without truncation error.

use std::sync::Arc;

use crate::body::BodyGeometry;
use crate::error::{Error, Result};
use crate::sphere_grid::fields::{dot2, dot3, Vec3};
use crate::sphere_grid::{ScalarField, SphericalGrid, Sym2, SymTensorField, TangentField};

/// Dimension of the sphere.
pub const N: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct CentroAffineStructure {
    grid: Arc<SphericalGrid>,
    /// `g = A[h]/h`
    pub g: SymTensorField,
    /// `g⁻¹ = h A[h]⁻¹`
    pub g_inv: SymTensorField,
    /// `h σ₂`
    pub dv_density: ScalarField,
    /// `∇̄ log(h^{n+2}/K) = (n+2) ∇̄h/h + ∇̄σ₂/σ₂`
    pub log_grad: TangentField,
    /// `1/h`; the conormal is `ξ* = x/h`.
    pub conormal_scale: ScalarField,
    /// `A[h]⁻¹`
    a_inv: Vec<Sym2>,
}

impl CentroAffineStructure {
    pub fn new(body: &BodyGeometry) -> Self {
        let grid = body.grid.clone();
        let h = body.h.values();
        let grad_sigma = grid.grad(&body.sigma_n);
        let n = grid.n_nodes();
        let mut g = Vec::with_capacity(n);
        let mut g_inv = Vec::with_capacity(n);
        let mut a_inv = Vec::with_capacity(n);
        let mut log_grad = Vec::with_capacity(n);
        for i in 0..n {
            let a = body.a.components[i];
            let ai = a.inverse();
            g.push(a.scale(1.0 / h[i]));
            g_inv.push(ai.scale(h[i]));
            a_inv.push(ai);
            let gh = body.gradh.components[i];
            let gs = grad_sigma.components[i];
            let s = body.sigma_n.values()[i];
            log_grad.push([
                (N + 2.0) * gh[0] / h[i] + gs[0] / s,
                (N + 2.0) * gh[1] / h[i] + gs[1] / s,
            ]);
        }
        Self {
            grid,
            g: SymTensorField { components: g },
            g_inv: SymTensorField { components: g_inv },
            dv_density: body.dv_density.clone(),
            log_grad: TangentField {
                components: log_grad,
            },
            conormal_scale: body.h.map(|v| 1.0 / v),
            a_inv,
        }
    }

    pub fn grid(&self) -> &Arc<SphericalGrid> {
        &self.grid
    }

    /// `g(∇a, ∇b)` from round gradients: `h ⟨A⁻¹ ∇̄a, ∇̄b⟩`.
    pub fn metric_pair(&self, node: usize, grad_a: &[f64; 2], grad_b: &[f64; 2]) -> f64 {
        dot2(&self.g_inv.components[node].mul_vec(grad_a), grad_b)
    }

    /// Largest entry of `g · g⁻¹ − I`.
    pub fn inverse_defect(&self) -> f64 {
        self.g
            .components
            .iter()
            .zip(&self.g_inv.components)
            .fold(0.0, |m, (a, b)| {
                let p00 = a.tt * b.tt + a.tp * b.tp - 1.0;
                let p01 = a.tt * b.tp + a.tp * b.pp;
                let p11 = a.tp * b.tp + a.pp * b.pp - 1.0;
                m.max(p00.abs()).max(p01.abs()).max(p11.abs())
            })
    }
}

/// Centro-affine Laplacian `Δf = tr(A[h]⁻¹ A[h f]) − n f`.
///
/// `h f` is re-analyzed at the grid band limit, so `f` should be band-limited
/// well below it (degree of `h` plus degree of `f` at most `lmax`).
pub fn ca_laplacian(
    ca: &CentroAffineStructure,
    body: &BodyGeometry,
    f: &ScalarField,
) -> ScalarField {
    let grid = &ca.grid;
    let hf: Vec<f64> = body
        .h
        .values()
        .iter()
        .zip(f.values())
        .map(|(h, f)| h * f)
        .collect();
    let d = grid.derivatives(&grid.analyze(&hf));
    ScalarField::from_values(
        (0..grid.n_nodes())
            .map(|i| {
                let a_hf = d.hess.components[i].add_identity(d.values[i]);
                ca.a_inv[i].trace_product(&a_hf) - N * f.values()[i]
            })
            .collect(),
    )
}

/// Laplacian of the conjugate connection: `Δ*f = Δf − g(∇ log(h^{n+2}/K), ∇f)`.
pub fn ca_laplacian_star(
    ca: &CentroAffineStructure,
    body: &BodyGeometry,
    f: &ScalarField,
) -> ScalarField {
    let lap = ca_laplacian(ca, body, f);
    let grad = ca.grid.grad(f);
    ScalarField::from_values(
        (0..ca.grid.n_nodes())
            .map(|i| {
                lap.values()[i] - ca.metric_pair(i, &ca.log_grad.components[i], &grad.components[i])
            })
            .collect(),
    )
}

/// `|∇f|²_g = h (A[h]⁻¹)(∇̄f, ∇̄f)` pointwise.
pub fn g_norm_sq(ca: &CentroAffineStructure, f: &ScalarField) -> ScalarField {
    let grad = ca.grid.grad(f);
    g_norm_sq_of_grad(ca, &grad)
}

fn g_norm_sq_of_grad(ca: &CentroAffineStructure, grad: &TangentField) -> ScalarField {
    ScalarField::from_values(
        grad.components
            .iter()
            .enumerate()
            .map(|(i, v)| ca.g_inv.components[i].quad(v))
            .collect(),
    )
}

/// `⟨X, E_k⟩` for the coordinate axis `k`.
pub fn position_component(body: &BodyGeometry, k: usize) -> ScalarField {
    ScalarField::from_values(body.x_map.iter().map(|x| x[k]).collect())
}

/// Pointwise and integrated defects of `ΔX + nX = h ∇̄ log(h^{n+2}/K)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResidual {
    /// `max_{x,k} |Δ⟨X,E_k⟩ + n⟨X,E_k⟩ − ⟨∇̄ log(h^{n+2}/K), h E_k⟩|`
    pub pointwise: f64,
    /// `max_k |n ∫⟨X,E_k⟩ dV − ∫ h ⟨∇̄ log(h^{n+2}/K), E_k⟩ dV|`
    pub integral: f64,
}

impl IdentityResidual {
    pub fn worst(&self) -> f64 {
        self.pointwise.max(self.integral)
    }
}

pub fn main_identity_residual(ca: &CentroAffineStructure, body: &BodyGeometry) -> IdentityResidual {
    let grid = &ca.grid;
    let log_grad = ca.log_grad.to_ambient(grid);
    let h = body.h.values();
    let mut pointwise: f64 = 0.0;
    let mut integral: f64 = 0.0;
    for k in 0..3 {
        let xk = position_component(body, k);
        let lap = ca_laplacian(ca, body, &xk);
        let rhs: Vec<f64> = (0..grid.n_nodes()).map(|i| h[i] * log_grad[i][k]).collect();
        for i in 0..grid.n_nodes() {
            pointwise = pointwise.max((lap.values()[i] + N * xk.values()[i] - rhs[i]).abs());
        }
        let lhs_int = N * body.integrate_dv(xk.values());
        let rhs_int = body.integrate_dv(&rhs);
        integral = integral.max((lhs_int - rhs_int).abs());
    }
    IdentityResidual {
        pointwise,
        integral,
    }
}

/// `max_{x,k} |Δ*⟨X,E_k⟩ + n⟨X,E_k⟩|`.
pub fn gauss_equation_residual(ca: &CentroAffineStructure, body: &BodyGeometry) -> f64 {
    (0..3)
        .map(|k| {
            let xk = position_component(body, k);
            let lap = ca_laplacian_star(ca, body, &xk);
            lap.values()
                .iter()
                .zip(xk.values())
                .fold(0.0_f64, |m, (l, x)| m.max((l + N * x).abs()))
        })
        .fold(0.0, f64::max)
}

/// Relative defect of
/// `∫ |X|² f Δf + f g(∇f, ∇|X|²) dV = −∫ |X|² |∇f|²_g dV`.
pub fn ibp_residual(ca: &CentroAffineStructure, body: &BodyGeometry, f: &ScalarField) -> f64 {
    let grid = &ca.grid;
    let lap = ca_laplacian(ca, body, f);
    let grad_f = grid.grad(f);
    let r2 = body.r.map(|r| r * r);
    let grad_r2 = grid.grad(&r2);
    let n = grid.n_nodes();
    let mut lhs = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let fv = f.values()[i];
        let x2 = r2.values()[i];
        lhs[i] = x2 * fv * lap.values()[i]
            + fv * ca.metric_pair(i, &grad_f.components[i], &grad_r2.components[i]);
        rhs[i] = x2 * ca.g_inv.components[i].quad(&grad_f.components[i]);
    }
    let l = body.integrate_dv(&lhs);
    let r = body.integrate_dv(&rhs);
    (l + r).abs() / (r.abs() + 1e-30)
}

/// Signed defect of an inequality `value >= 0`, with a magnitude to compare it against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deficit {
    pub value: f64,
    pub scale: f64,
}

impl Deficit {
    pub fn relative(&self) -> f64 {
        self.value / (self.scale + 1e-300)
    }
}

/// Local Brunn–Minkowski deficit
/// `∫ |∇f|²_g dV + n (∫ f dV)² / ∫ dV − n ∫ f² dV` (non-negative; zero exactly on
/// `f = ⟨x/h, w⟩`).
pub fn local_bm_deficit(
    ca: &CentroAffineStructure,
    body: &BodyGeometry,
    f: &ScalarField,
) -> Deficit {
    let grad2 = g_norm_sq(ca, f);
    let fv = f.values();
    let f2: Vec<f64> = fv.iter().map(|v| v * v).collect();
    let dirichlet = body.integrate_dv(grad2.values());
    let mean = body.integrate_dv(fv);
    let total = body.total_dv();
    let l2 = body.integrate_dv(&f2);
    Deficit {
        value: dirichlet + N * mean * mean / total - N * l2,
        scale: dirichlet + N * l2,
    }
}

/// Second local Brunn–Minkowski deficit `∫ (Δf)² dV − n ∫ |∇f|²_g dV`.
pub fn local_bm2_deficit(
    ca: &CentroAffineStructure,
    body: &BodyGeometry,
    f: &ScalarField,
) -> Deficit {
    let lap = ca_laplacian(ca, body, f);
    let lap2: Vec<f64> = lap.values().iter().map(|v| v * v).collect();
    let grad2 = g_norm_sq(ca, f);
    let a = body.integrate_dv(&lap2);
    let b = body.integrate_dv(grad2.values());
    Deficit {
        value: a - N * b,
        scale: a + N * b,
    }
}

/// Both sides of an integral inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalitySides {
    pub lhs: f64,
    pub rhs: f64,
    /// Sum of the magnitudes of the integrated terms.
    pub scale: f64,
}

impl InequalitySides {
    /// `(rhs − lhs) / scale`; the inequality holds when this is `>= -tol`.
    pub fn relative_slack(&self) -> f64 {
        (self.rhs - self.lhs) / (self.scale + 1e-300)
    }
}

/// `n |∫ f X dV|² / ∫ dV`.
fn moment_rhs(body: &BodyGeometry, f: &[f64]) -> f64 {
    let m = body.integrate_x_dv(f);
    N * dot3(&m, &m) / body.total_dv()
}

/// Moment inequality for a positive field `f`:
/// `∫ f² (⟨∇̄ log(h^{n+2}/K), hX⟩ − |X|² |∇ log f|²_g) dV <= n |∫ f X dV|² / ∫ dV`.
pub fn lemma32_check(
    ca: &CentroAffineStructure,
    body: &BodyGeometry,
    f: &ScalarField,
) -> Result<InequalitySides> {
    if let Some((node, &value)) = f.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositiveField { node, value });
    }
    let grad_f = ca.grid.grad(f);
    let log_grad: Vec<[f64; 2]> = grad_f
        .components
        .iter()
        .zip(f.values())
        .map(|(g, f)| [g[0] / f, g[1] / f])
        .collect();
    let grad_log_f = TangentField {
        components: log_grad,
    };
    let norm2 = g_norm_sq_of_grad(ca, &grad_log_f);
    Ok(lemma_sides(ca, body, f.values(), norm2.values()))
}

/// The same inequality for `f = r^α`, with the gradient term written through `∇̄ log r`:
/// `∫ f² ⟨∇̄ log(h^{n+2}/K) − α² ∇̄ log r, hX⟩ dV <= n |∫ f X dV|² / ∫ dV`.
pub fn lemma33_check(
    ca: &CentroAffineStructure,
    body: &BodyGeometry,
    alpha: f64,
) -> InequalitySides {
    let grid = &ca.grid;
    let r2 = body.r.map(|r| r * r);
    let grad_r2 = grid.grad(&r2);
    let h = body.h.values();
    let n = grid.n_nodes();
    let f: Vec<f64> = body.r.values().iter().map(|r| r.powf(alpha)).collect();
    let mut lhs = vec![0.0; n];
    let mut mag = vec![0.0; n];
    for i in 0..n {
        // ⟨v, hX⟩ for tangent v only sees the tangential part ∇̄h of X
        let gh = body.gradh.components[i];
        let glr = [
            grad_r2.components[i][0] / (2.0 * r2.values()[i]),
            grad_r2.components[i][1] / (2.0 * r2.values()[i]),
        ];
        let t1 = h[i] * dot2(&ca.log_grad.components[i], &gh);
        let t2 = alpha * alpha * h[i] * dot2(&glr, &gh);
        let f2 = f[i] * f[i];
        lhs[i] = f2 * (t1 - t2);
        mag[i] = f2 * (t1.abs() + t2.abs());
    }
    let lhs = body.integrate_dv(&lhs);
    let rhs = moment_rhs(body, &f);
    InequalitySides {
        lhs,
        rhs,
        scale: body.integrate_dv(&mag) + rhs,
    }
}

fn lemma_sides(
    ca: &CentroAffineStructure,
    body: &BodyGeometry,
    f: &[f64],
    grad_log_f_norm2: &[f64],
) -> InequalitySides {
    let h = body.h.values();
    let n = f.len();
    let mut lhs = vec![0.0; n];
    let mut mag = vec![0.0; n];
    for i in 0..n {
        let t1 = h[i] * dot2(&ca.log_grad.components[i], &body.gradh.components[i]);
        let x2 = body.r.values()[i].powi(2);
        let t2 = x2 * grad_log_f_norm2[i];
        let f2 = f[i] * f[i];
        lhs[i] = f2 * (t1 - t2);
        mag[i] = f2 * (t1.abs() + t2.abs());
    }
    let lhs = body.integrate_dv(&lhs);
    let rhs = moment_rhs(body, f);
    InequalitySides {
        lhs,
        rhs,
        scale: body.integrate_dv(&mag) + rhs,
    }
}

/// Moments entering the spherical divergence identity
/// `∫ X h^p dμ = ((n+1+p)/n) ∫ h^p ∇̄h dμ`, which holds for every body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerMoments {
    /// `∫ X h^p dμ`
    pub x_moment: Vec3,
    /// `((n+1+p)/n) ∫ h^p ∇̄h dμ`
    pub grad_moment: Vec3,
}

impl EulerMoments {
    pub fn residual(&self) -> f64 {
        (0..3).fold(0.0, |m, k| {
            m.max((self.x_moment[k] - self.grad_moment[k]).abs())
        })
    }
}

pub fn euler_moments(body: &BodyGeometry, p: f64) -> EulerMoments {
    let grid = &body.grid;
    let gradh = body.gradh.to_ambient(grid);
    let hp: Vec<f64> = body.h.values().iter().map(|h| h.powf(p)).collect();
    let xs: Vec<Vec3> = body
        .x_map
        .iter()
        .zip(&hp)
        .map(|(x, w)| [x[0] * w, x[1] * w, x[2] * w])
        .collect();
    let gs: Vec<Vec3> = gradh
        .iter()
        .zip(&hp)
        .map(|(g, w)| [g[0] * w, g[1] * w, g[2] * w])
        .collect();
    let c = (N + 1.0 + p) / N;
    let g = grid.integrate_vec(&gs);
    EulerMoments {
        x_moment: grid.integrate_vec(&xs),
        grad_moment: [c * g[0], c * g[1], c * g[2]],
    }
}

/// `max_k |∫ X h^p dμ − ((n+1+p)/n) ∫ h^p ∇̄h dμ|`.
pub fn euler_identity_residual(body: &BodyGeometry, p: f64) -> f64 {
    euler_moments(body, p).residual()
}

/// The cone-volume form used for solutions of the `(p, q)` problem:
/// returns `(∫ r^α X dV, ∫ r^α ∇̄h dV)` with `α = q − n − 1`. On a solution
/// `r^α h σ₂ = h^p`, so these equal `∫ X h^p dμ` and `∫ h^p ∇̄h dμ`.
pub fn solution_moments(body: &BodyGeometry, q: f64) -> (Vec3, Vec3) {
    let alpha = q - N - 1.0;
    let grid = &body.grid;
    let gradh = body.gradh.to_ambient(grid);
    let ra: Vec<f64> = body.r.values().iter().map(|r| r.powf(alpha)).collect();
    let gm = {
        let mut acc = [0.0; 3];
        for i in 0..grid.n_nodes() {
            let s = ra[i] * body.dv_density.values()[i] * grid.weights()[i];
            for k in 0..3 {
                acc[k] += s * gradh[i][k];
            }
        }
        acc
    };
    (body.integrate_x_dv(&ra), gm)
}
