use super::{MaterialParams, Scalar, StabParams};
use crate::geom::Point;
use crate::mesh::shape::{self, time_basis, TIME_BASIS_DERIV};
use crate::mesh::{spacetime_quadrature, spatial_rule, st_jacobian, QuadratureRule, Shape};

/// Basis data of one space-time quadrature point. Space-time node `a` is
/// `level * n_sp + i`.
#[derive(Debug, Clone, Copy)]
pub struct QpGeometry {
    pub n: [f64; 8],
    pub grad: [[f64; 2]; 8],
    pub dt: [f64; 8],
    /// Quadrature weight times the space-time Jacobian determinant.
    pub wdet: f64,
    pub x: Point,
    pub t: f64,
}

/// Everything the element kernel needs from the slab geometry.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub shape: Shape,
    pub n_sp: usize,
    pub qps: Vec<QpGeometry>,
    /// Lower-level spatial points: shape values and weight times area Jacobian.
    pub jump: Vec<([f64; 4], f64)>,
    /// Diameter of the element at mid-slab.
    pub h: f64,
    pub dt: f64,
}

impl ElementGeometry {
    pub fn new(shape: Shape, lower: &[Point], upper: &[Point], t0: f64, t1: f64) -> Self {
        Self::with_rules(shape, lower, upper, t0, t1, &spacetime_quadrature(shape), &spatial_rule(shape))
    }

    pub fn with_rules(
        shape: Shape,
        lower: &[Point],
        upper: &[Point],
        t0: f64,
        t1: f64,
        rule: &QuadratureRule,
        lower_rule: &[([f64; 2], f64)],
    ) -> Self {
        let n_sp = shape.node_count();
        let dt = t1 - t0;
        let mut qps = Vec::with_capacity(rule.points.len());
        for q in &rule.points {
            let s = shape::eval(shape, q.xi);
            let tb = time_basis(q.theta);
            let j = st_jacobian(shape, lower, upper, dt, q.xi, q.theta);
            let det_s = j.spatial_det();
            let m = j.spatial;
            // Inverse transpose of the spatial block.
            let inv_t = [[m[1][1] / det_s, -m[1][0] / det_s], [-m[0][1] / det_s, m[0][0] / det_s]];
            let mut g = QpGeometry {
                n: [0.0; 8],
                grad: [[0.0; 2]; 8],
                dt: [0.0; 8],
                wdet: q.weight * j.det,
                x: [0.0; 2],
                t: tb[0] * t0 + tb[1] * t1,
            };
            for l in 0..2 {
                for i in 0..n_sp {
                    let a = l * n_sp + i;
                    let dxi = [s.dn[i][0] * tb[l], s.dn[i][1] * tb[l]];
                    let gx = inv_t[0][0] * dxi[0] + inv_t[0][1] * dxi[1];
                    let gy = inv_t[1][0] * dxi[0] + inv_t[1][1] * dxi[1];
                    g.n[a] = s.n[i] * tb[l];
                    g.grad[a] = [gx, gy];
                    let dtheta = s.n[i] * TIME_BASIS_DERIV[l];
                    g.dt[a] = (dtheta - j.x_theta[0] * gx - j.x_theta[1] * gy) * 2.0 / dt;
                }
            }
            for i in 0..n_sp {
                for c in 0..2 {
                    g.x[c] += s.n[i] * (tb[0] * lower[i][c] + tb[1] * upper[i][c]);
                }
            }
            qps.push(g);
        }
        let jump = lower_rule
            .iter()
            .map(|&(xi, w)| {
                let s = shape::eval(shape, xi);
                let det = st_jacobian(shape, lower, upper, dt, xi, -1.0).spatial_det();
                (s.n, w * det)
            })
            .collect();
        let mid: Vec<Point> = lower
            .iter()
            .zip(upper)
            .map(|(a, b)| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])])
            .collect();
        let mut h: f64 = 0.0;
        for i in 0..mid.len() {
            for k in i + 1..mid.len() {
                h = h.max(((mid[i][0] - mid[k][0]).powi(2) + (mid[i][1] - mid[k][1]).powi(2)).sqrt());
            }
        }
        ElementGeometry { shape, n_sp, qps, jump, h, dt }
    }

    pub fn spacetime_nodes(&self) -> usize {
        2 * self.n_sp
    }
}

/// Selects the parts of the weak form evaluated by [`element_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermMask {
    /// Time derivative, advection, stress, body force and continuity.
    pub galerkin: bool,
    pub jump: bool,
    /// Momentum stabilization, including its pressure part.
    pub supg: bool,
    pub graddiv: bool,
}

impl TermMask {
    pub const ALL: TermMask = TermMask { galerkin: true, jump: true, supg: true, graddiv: true };
    pub const NO_JUMP: TermMask = TermMask { galerkin: true, jump: false, supg: true, graddiv: true };
    pub const NONE: TermMask = TermMask { galerkin: false, jump: false, supg: false, graddiv: false };
}

/// Stabilization parameters from the squared element-mean speed:
/// `tau_mom = [(2/dt)^2 + (2|u|/h)^2 + (4 nu/h^2)^2]^(-1/2)` and
/// `tau_cont = max(h |u| / 2, 1e-3 h^2 / dt)`.
pub fn compute_tau<S: Scalar>(speed_sq: S, h: f64, dt: f64, nu: f64) -> (S, S) {
    let a = (2.0 / dt).powi(2) + (4.0 * nu / (h * h)).powi(2);
    let tau_mom = S::cst(1.0) / (speed_sq * (4.0 / (h * h)) + a).sqrt();
    let floor = 1e-3 * h * h / dt;
    let tau_cont = if 0.5 * h * speed_sq.value().sqrt() > floor {
        speed_sq.sqrt() * (0.5 * h)
    } else {
        S::cst(floor)
    };
    (tau_mom, tau_cont)
}

impl StabParams {
    /// Parameters of one element for nodal velocities `u` (all space-time nodes).
    pub fn for_element(geom: &ElementGeometry, u: &[[f64; 2]], nu: f64) -> StabParams {
        let k = u.len() as f64;
        let m = u.iter().fold([0.0; 2], |s, v| [s[0] + v[0] / k, s[1] + v[1] / k]);
        let (tau_mom, tau_cont) = compute_tau(m[0] * m[0] + m[1] * m[1], geom.h, geom.dt, nu);
        StabParams { tau_mom, tau_cont }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongResidual<S> {
    /// `rho (u_t + u . grad u - f) + grad p`
    pub momentum: [S; 2],
    pub divergence: S,
}

/// Pointwise strong residual. `grad_u[c][j]` is the derivative of component `c`
/// along `j`. Viscous second derivatives vanish for linear elements and are
/// not represented.
#[inline]
pub fn strong_residual<S: Scalar>(
    u: [S; 2],
    grad_u: [[S; 2]; 2],
    u_t: [S; 2],
    grad_p: [S; 2],
    f: [f64; 2],
    rho: f64,
) -> StrongResidual<S> {
    let adv = [
        u[0] * grad_u[0][0] + u[1] * grad_u[0][1],
        u[0] * grad_u[1][0] + u[1] * grad_u[1][1],
    ];
    StrongResidual {
        momentum: [
            (u_t[0] + adv[0] - f[0]) * rho + grad_p[0],
            (u_t[1] + adv[1] - f[1]) * rho + grad_p[1],
        ],
        divergence: grad_u[0][0] + grad_u[1][1],
    }
}

/// Local residual of one element. `state` holds `(u, v, p)` of every space-time
/// node; `u_minus` the previous slab's velocity at the element's spatial nodes.
pub fn element_residual<S: Scalar>(
    g: &ElementGeometry,
    state: &[S],
    u_minus: &[[f64; 2]],
    params: &MaterialParams,
    terms: TermMask,
) -> Vec<S> {
    let nst = g.spacetime_nodes();
    let zero = S::cst(0.0);
    let mut r = vec![zero; 3 * nst];
    let rho = params.rho;
    let mu = params.mu;
    if terms.galerkin || terms.supg || terms.graddiv {
        let mut um = [zero; 2];
        for a in 0..nst {
            um[0] += state[3 * a];
            um[1] += state[3 * a + 1];
        }
        let inv = 1.0 / nst as f64;
        let (um0, um1) = (um[0] * inv, um[1] * inv);
        let (tm, tc) = compute_tau(um0 * um0 + um1 * um1, g.h, g.dt, params.nu());

        for q in &g.qps {
            let mut u = [zero; 2];
            let mut gu = [[zero; 2]; 2];
            let mut ut = [zero; 2];
            let mut p = zero;
            let mut gp = [zero; 2];
            for a in 0..nst {
                let (n, [gx, gy], dt) = (q.n[a], q.grad[a], q.dt[a]);
                for c in 0..2 {
                    let v = state[3 * a + c];
                    u[c] += v * n;
                    gu[c][0] += v * gx;
                    gu[c][1] += v * gy;
                    ut[c] += v * dt;
                }
                let pa = state[3 * a + 2];
                p += pa * n;
                gp[0] += pa * gx;
                gp[1] += pa * gy;
            }
            let f = params.body_force.eval(q.x, q.t);
            let sr = strong_residual(u, gu, ut, gp, f, rho);
            let div = sr.divergence;
            let m = [sr.momentum[0] - gp[0], sr.momentum[1] - gp[1]];
            let s00 = gu[0][0] * (2.0 * mu) - p;
            let s11 = gu[1][1] * (2.0 * mu) - p;
            let s01 = (gu[0][1] + gu[1][0]) * mu;
            let w = q.wdet;
            for a in 0..nst {
                let (n, [gx, gy]) = (q.n[a], q.grad[a]);
                if terms.galerkin {
                    r[3 * a] += (m[0] * n + s00 * gx + s01 * gy) * w;
                    r[3 * a + 1] += (m[1] * n + s01 * gx + s11 * gy) * w;
                    r[3 * a + 2] += div * (n * w);
                }
                if terms.supg {
                    let t = (u[0] * gx + u[1] * gy) * tm * w;
                    r[3 * a] += t * sr.momentum[0];
                    r[3 * a + 1] += t * sr.momentum[1];
                    r[3 * a + 2] += (sr.momentum[0] * gx + sr.momentum[1] * gy) * tm * (w / rho);
                }
                if terms.graddiv {
                    let t = tc * div * (rho * w);
                    r[3 * a] += t * gx;
                    r[3 * a + 1] += t * gy;
                }
            }
        }
    }
    if terms.jump {
        add_jump(g, state, u_minus, rho, &mut r);
    }
    r
}

/// The jump term alone: `int w+ . rho (u+ - u-)` over the lower level.
pub fn jump_term_contribution<S: Scalar>(
    g: &ElementGeometry,
    state: &[S],
    u_minus: &[[f64; 2]],
    rho: f64,
) -> Vec<S> {
    let mut r = vec![S::cst(0.0); 3 * g.spacetime_nodes()];
    add_jump(g, state, u_minus, rho, &mut r);
    r
}

fn add_jump<S: Scalar>(g: &ElementGeometry, state: &[S], u_minus: &[[f64; 2]], rho: f64, r: &mut [S]) {
    for (n, w) in &g.jump {
        let mut d = [S::cst(0.0); 2];
        for i in 0..g.n_sp {
            for c in 0..2 {
                d[c] += (state[3 * i + c] - u_minus[i][c]) * n[i];
            }
        }
        for i in 0..g.n_sp {
            for c in 0..2 {
                r[3 * i + c] += d[c] * (rho * n[i] * w);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::Dual;

    fn unit_quad() -> Vec<Point> {
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    }

    #[test]
    fn tau_matches_the_closed_form() {
        let (tm, tc) = compute_tau(0.02f64 * 0.02, 0.02, 0.2, 0.025);
        assert!((tm - (100.0f64 + 4.0 + 62500.0).powf(-0.5)).abs() < 1e-18);
        assert!((tm - 3.997e-3).abs() < 1e-6);
        assert!((tc - 0.02 * 0.02 / 2.0).abs() < 1e-18);
        let (_, tc0) = compute_tau(0.0f64, 0.02, 0.2, 0.025);
        assert_eq!(tc0, 1e-3 * 0.02 * 0.02 / 0.2);
        // Advective limit.
        let (tm, _) = compute_tau(4.0f64, 0.1, 1e12, 0.0);
        assert!((tm - 0.1 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn tau_of_a_dual_speed_has_finite_derivatives_at_rest() {
        let s = Dual::<1>::var(0.0, 0);
        let (tm, tc) = compute_tau(s * s, 0.02, 0.2, 0.025);
        assert!(tm.d[0].is_finite() && tc.d[0].is_finite());
    }

    #[test]
    fn strong_residual_examples() {
        let z = [[0.0; 2]; 2];
        let r = strong_residual([0.0, 0.0], z, [0.0, 0.0], [0.0, 0.0], [1.0, 0.0], 2.0);
        assert_eq!(r.momentum, [-2.0, 0.0]);
        // Couette: u = (ubar y / H, 0), p constant.
        let r = strong_residual([0.01, 0.0], [[0.0, 0.02], [0.0, 0.0]], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], 100.0);
        assert_eq!(r.momentum, [0.0, 0.0]);
        assert_eq!(r.divergence, 0.0);
        let r = strong_residual([0.0, 0.0], z, [0.5, -1.0], [0.0, 0.0], [0.0, 0.0], 3.0);
        assert_eq!(r.momentum, [1.5, -3.0]);
    }

    #[test]
    fn geometry_of_an_undeformed_extrusion() {
        let q = unit_quad();
        let g = ElementGeometry::new(Shape::Quad4, &q, &q, 0.0, 1.0);
        assert_eq!(g.qps.len(), 8);
        let vol: f64 = g.qps.iter().map(|p| p.wdet).sum();
        assert!((vol - 1.0).abs() < 1e-14);
        assert!((g.h - 2f64.sqrt()).abs() < 1e-14);
        for p in &g.qps {
            // Partition of unity and its derivatives.
            let s: f64 = p.n.iter().sum();
            let gx: f64 = p.grad.iter().map(|d| d[0]).sum();
            let t: f64 = p.dt.iter().sum();
            assert!((s - 1.0).abs() < 1e-14 && gx.abs() < 1e-14 && t.abs() < 1e-14);
        }
    }

    #[test]
    fn time_derivative_follows_the_moving_mesh() {
        // A field fixed in space, f = x, sampled at nodes that translate by 0.5:
        // the material values change but the spatial field does not.
        let lo = unit_quad();
        let up: Vec<Point> = lo.iter().map(|p| [p[0] + 0.5, p[1]]).collect();
        let g = ElementGeometry::new(Shape::Quad4, &lo, &up, 0.0, 2.0);
        let vals: Vec<f64> = lo.iter().chain(&up).map(|p| p[0]).collect();
        for p in &g.qps {
            let ft: f64 = (0..8).map(|a| p.dt[a] * vals[a]).sum();
            let fx: f64 = (0..8).map(|a| p.grad[a][0] * vals[a]).sum();
            assert!(ft.abs() < 1e-14);
            assert!((fx - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn jump_of_a_constant_difference_on_a_quad() {
        let q = unit_quad();
        let g = ElementGeometry::new(Shape::Quad4, &q, &q, 0.0, 0.1);
        let mut state = vec![0.0; 24];
        for i in 0..4 {
            state[3 * i] = 0.01;
        }
        let r = jump_term_contribution(&g, &state, &[[0.0; 2]; 4], 100.0);
        // Each bilinear shape function integrates to area / 4.
        for i in 0..4 {
            assert!((r[3 * i] - 100.0 * 0.01 * 0.25).abs() < 1e-14);
            assert_eq!(r[3 * i + 1], 0.0);
        }
        assert!(r[12..].iter().all(|&v| v == 0.0));
        let same = jump_term_contribution(&g, &state, &[[0.01, 0.0]; 4], 100.0);
        assert!(same.iter().all(|v| v.abs() < 1e-15));
    }
}
