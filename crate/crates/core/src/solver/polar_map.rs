use crate::body::{polar_body, SupportFunction};
use crate::error::Result;

/// A body together with the exponent pair of the problem it solves.
#[derive(Debug, Clone)]
pub struct PolarProblem {
    pub body: SupportFunction,
    pub p: f64,
    pub q: f64,
}

/// If `h` solves the `(p, q)` problem then the support function of the polar
/// body solves the `(−q, −p)` problem.
pub fn polar_problem_map(sf: &SupportFunction, p: f64, q: f64) -> Result<PolarProblem> {
    let polar = polar_body(sf)?;
    Ok(PolarProblem {
        body: polar.hstar,
        p: -q,
        q: -p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::make_ball;
    use crate::solver::residual_norm;
    use crate::sphere_grid::SphericalGrid;
    use std::sync::Arc;

    #[test]
    fn unit_sphere_is_self_polar() {
        let g = Arc::new(SphericalGrid::new(8).unwrap());
        let s = make_ball(g, [0.0; 3], 1.0).unwrap();
        let m = polar_problem_map(&s, -1.0, 2.5).unwrap();
        assert_eq!((m.p, m.q), (-2.5, 1.0));
        assert!(m.body.sphere_distance() < 1e-13);
        assert!(residual_norm(&m.body, m.p, m.q).unwrap() < 1e-12);
        let back = polar_problem_map(&m.body, m.p, m.q).unwrap();
        assert_eq!((back.p, back.q), (-1.0, 2.5));
    }
}
