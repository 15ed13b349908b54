//! Linear reference shape functions for the two supported element shapes.

use super::Shape;

/// Values and reference derivatives of the spatial shape functions at one point.
#[derive(Debug, Clone, Copy)]
pub struct ShapeEval {
    pub n: [f64; 4],
    pub dn: [[f64; 2]; 4],
    pub len: usize,
}

pub fn eval(shape: Shape, xi: [f64; 2]) -> ShapeEval {
    let [x, y] = xi;
    match shape {
        Shape::Tri3 => ShapeEval {
            n: [1.0 - x - y, x, y, 0.0],
            dn: [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0], [0.0, 0.0]],
            len: 3,
        },
        Shape::Quad4 => {
            let (xm, xp, ym, yp) = (1.0 - x, 1.0 + x, 1.0 - y, 1.0 + y);
            ShapeEval {
                n: [
                    0.25 * xm * ym,
                    0.25 * xp * ym,
                    0.25 * xp * yp,
                    0.25 * xm * yp,
                ],
                dn: [
                    [-0.25 * ym, -0.25 * xm],
                    [0.25 * ym, -0.25 * xp],
                    [0.25 * yp, 0.25 * xp],
                    [-0.25 * yp, 0.25 * xm],
                ],
                len: 4,
            }
        }
    }
}

/// Linear shape functions in time on `theta in [-1, 1]`, lower level first.
#[inline]
pub fn time_basis(theta: f64) -> [f64; 2] {
    [0.5 * (1.0 - theta), 0.5 * (1.0 + theta)]
}

/// Derivatives of [`time_basis`] with respect to theta.
pub const TIME_BASIS_DERIV: [f64; 2] = [-0.5, 0.5];

/// Reference-element centroid, used for element-level geometric probes.
pub fn centroid(shape: Shape) -> [f64; 2] {
    match shape {
        Shape::Tri3 => [1.0 / 3.0, 1.0 / 3.0],
        Shape::Quad4 => [0.0, 0.0],
    }
}
