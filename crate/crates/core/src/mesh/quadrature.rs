use super::Shape;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    /// Spatial reference coordinates.
    pub xi: [f64; 2],
    /// Temporal reference coordinate in `[-1, 1]`.
    pub theta: f64,
    pub weight: f64,
}

/// Tensor-product space-time rule on a reference prism or hexahedron.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<QuadPoint>,
}

impl QuadratureRule {
    pub fn weight_sum(&self) -> f64 {
        self.points.iter().map(|q| q.weight).sum()
    }

    /// Tensor product of a spatial rule with a temporal rule.
    pub fn tensor(spatial: &[([f64; 2], f64)], temporal: &[(f64, f64)]) -> Self {
        let mut points = Vec::with_capacity(spatial.len() * temporal.len());
        for &(theta, wt) in temporal {
            for &(xi, ws) in spatial {
                points.push(QuadPoint {
                    xi,
                    theta,
                    weight: ws * wt,
                });
            }
        }
        QuadratureRule { points }
    }
}

const GAUSS2: f64 = 0.577_350_269_189_625_8;

/// Two-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss2() -> [(f64, f64); 2] {
    [(-GAUSS2, 1.0), (GAUSS2, 1.0)]
}

/// Spatial rule used by the solver: 3-point (degree 2) triangle, 2x2 Gauss quadrilateral.
pub fn spatial_rule(shape: Shape) -> Vec<([f64; 2], f64)> {
    match shape {
        Shape::Tri3 => {
            let w = 1.0 / 6.0;
            vec![
                ([1.0 / 6.0, 1.0 / 6.0], w),
                ([2.0 / 3.0, 1.0 / 6.0], w),
                ([1.0 / 6.0, 2.0 / 3.0], w),
            ]
        }
        Shape::Quad4 => {
            let mut v = Vec::with_capacity(4);
            for (b, wb) in gauss2() {
                for (a, wa) in gauss2() {
                    v.push(([a, b], wa * wb));
                }
            }
            v
        }
    }
}

/// Space-time rule for one element shape: spatial rule times 2-point Gauss in time.
pub fn spacetime_quadrature(shape: Shape) -> QuadratureRule {
    QuadratureRule::tensor(&spatial_rule(shape), &gauss2())
}

/// Volume of the reference space-time element (`theta` spans length 2).
pub fn reference_volume(shape: Shape) -> f64 {
    2.0 * shape.reference_area()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_counts_and_weight_sums() {
        let q = spacetime_quadrature(Shape::Quad4);
        assert_eq!(q.points.len(), 8);
        assert!((q.weight_sum() - 8.0).abs() < 1e-14);
        let t = spacetime_quadrature(Shape::Tri3);
        assert_eq!(t.points.len(), 6);
        assert!((t.weight_sum() - reference_volume(Shape::Tri3)).abs() < 1e-14);
    }

    #[test]
    fn exact_for_multilinear_monomials() {
        // Integral over [-1,1]^3 of xi^a eta^b theta^c, a,b,c in {0,1}.
        let q = spacetime_quadrature(Shape::Quad4);
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    let s: f64 = q
                        .points
                        .iter()
                        .map(|p| p.weight * p.xi[0].powi(a) * p.xi[1].powi(b) * p.theta.powi(c))
                        .sum();
                    let exact = if a + b + c == 0 { 8.0 } else { 0.0 };
                    assert!((s - exact).abs() < 1e-14, "{a}{b}{c}: {s}");
                }
            }
        }
        // Triangle: int xi dA = 1/6, int xi*eta dA = 1/24 (degree 2 is within the rule).
        let t = spacetime_quadrature(Shape::Tri3);
        let sx: f64 = t.points.iter().map(|p| p.weight * p.xi[0]).sum();
        let sxy: f64 = t.points.iter().map(|p| p.weight * p.xi[0] * p.xi[1]).sum();
        assert!((sx - 2.0 / 6.0).abs() < 1e-14);
        assert!((sxy - 2.0 / 24.0).abs() < 1e-14);
    }
}
