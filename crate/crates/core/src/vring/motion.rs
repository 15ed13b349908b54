/// Prescribed speed of the moving ring along its direction.
#[derive(Debug, Clone, PartialEq)]
pub enum MotionProgram {
    Constant(f64),
    /// Piecewise-linear speed through `(time, speed)` knots, held constant
    /// outside the knot range. Models accelerating and decelerating strokes.
    PiecewiseLinear(Vec<(f64, f64)>),
}

impl MotionProgram {
    pub fn speed(&self, t: f64) -> f64 {
        match self {
            MotionProgram::Constant(v) => *v,
            MotionProgram::PiecewiseLinear(knots) => {
                let (first, last) = match (knots.first(), knots.last()) {
                    (Some(f), Some(l)) => (f, l),
                    _ => return 0.0,
                };
                if t <= first.0 {
                    return first.1;
                }
                if t >= last.0 {
                    return last.1;
                }
                let i = knots.partition_point(|k| k.0 <= t);
                let (t0, v0) = knots[i - 1];
                let (t1, v1) = knots[i];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Distance travelled over `[t0, t1]` by the midpoint rule.
    pub fn displacement(&self, t0: f64, t1: f64) -> f64 {
        self.speed(0.5 * (t0 + t1)) * (t1 - t0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_linear_interpolates_and_clamps() {
        let m = MotionProgram::PiecewiseLinear(vec![(0.0, 0.0), (1.0, 2.0), (2.0, 0.0)]);
        assert_eq!(m.speed(-1.0), 0.0);
        assert!((m.speed(0.5) - 1.0).abs() < 1e-15);
        assert!((m.speed(1.5) - 1.0).abs() < 1e-15);
        assert_eq!(m.speed(3.0), 0.0);
        // Midpoint rule is exact inside one linear piece.
        assert!((m.displacement(0.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_displacement() {
        assert!((MotionProgram::Constant(0.1).displacement(0.0, 2e-3) - 2e-4).abs() < 1e-18);
    }
}
