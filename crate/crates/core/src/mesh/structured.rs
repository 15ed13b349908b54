use super::{BoundaryFace, Element, Mesh2D, Shape};

/// Side of a grid cell, in the counter-clockwise edge order of a quad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

/// Tensor-product grid on the node lines `xs` x `ys`.
///
/// Cells with `keep(i, j) == false` are left out; nodes touching no kept cell
/// are dropped. With `triangles` every cell is cut along its `(i,j)-(i+1,j+1)`
/// diagonal. Every cell edge without a kept neighbour becomes a boundary face
/// when `marker(i, j, side)` names one.
pub fn structured_grid(
    xs: &[f64],
    ys: &[f64],
    block_id: i32,
    triangles: bool,
    keep: impl Fn(usize, usize) -> bool,
    marker: impl Fn(usize, usize, Side) -> Option<String>,
) -> Mesh2D {
    let (nx, ny) = (xs.len().saturating_sub(1), ys.len().saturating_sub(1));
    let kept = |i: isize, j: isize| {
        i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny && keep(i as usize, j as usize)
    };
    let mut index = vec![usize::MAX; xs.len() * ys.len()];
    let mut mesh = Mesh2D::default();
    let mut node = |mesh: &mut Mesh2D, i: usize, j: usize| {
        let k = j * xs.len() + i;
        if index[k] == usize::MAX {
            index[k] = mesh.node_coords.len();
            mesh.node_coords.push([xs[i], ys[j]]);
        }
        index[k]
    };
    for j in 0..ny {
        for i in 0..nx {
            if !keep(i, j) {
                continue;
            }
            let a = node(&mut mesh, i, j);
            let b = node(&mut mesh, i + 1, j);
            let c = node(&mut mesh, i + 1, j + 1);
            let d = node(&mut mesh, i, j + 1);
            let (ii, jj) = (i as isize, j as isize);
            let open = [
                (Side::Bottom, !kept(ii, jj - 1)),
                (Side::Right, !kept(ii + 1, jj)),
                (Side::Top, !kept(ii, jj + 1)),
                (Side::Left, !kept(ii - 1, jj)),
            ];
            let e0 = mesh.elements.len();
            // (element offset, local edge) carrying each side
            let carriers = if triangles {
                mesh.elements.push(Element::new(Shape::Tri3, vec![a, b, c], block_id));
                mesh.elements.push(Element::new(Shape::Tri3, vec![a, c, d], block_id));
                [(0, 0), (0, 1), (1, 1), (1, 2)]
            } else {
                mesh.elements.push(Element::new(Shape::Quad4, vec![a, b, c, d], block_id));
                [(0, 0), (0, 1), (0, 2), (0, 3)]
            };
            for ((side, is_open), (off, edge)) in open.into_iter().zip(carriers) {
                if is_open {
                    if let Some(m) = marker(i, j, side) {
                        mesh.boundary_faces.push(BoundaryFace::new(e0 + off, edge, m));
                    }
                }
            }
        }
    }
    mesh
}

/// `n + 1` equally spaced node lines over `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| if k == n { b } else { a + (b - a) * k as f64 / n as f64 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hole_faces_and_compaction() {
        let xs = linspace(0.0, 3.0, 3);
        let ys = linspace(0.0, 3.0, 3);
        let m = structured_grid(&xs, &ys, 0, false, |i, j| !(i == 1 && j == 1), |i, j, s| {
            let outer = match s {
                Side::Bottom => j == 0,
                Side::Top => j == 2,
                Side::Left => i == 0,
                Side::Right => i == 2,
            };
            Some(if outer { "outer" } else { "hole" }.to_string())
        });
        assert_eq!(m.element_count(), 8);
        assert_eq!(m.node_count(), 16);
        let count = |n: &str| m.boundary_faces.iter().filter(|f| f.marker == n).count();
        assert_eq!(count("outer"), 12);
        assert_eq!(count("hole"), 4);
        m.validate().unwrap();
    }

    #[test]
    fn triangles_cover_the_cell() {
        let xs = linspace(0.0, 2.0, 2);
        let ys = linspace(0.0, 1.0, 1);
        let m = structured_grid(&xs, &ys, 0, true, |_, _| true, |_, _, _| Some("b".into()));
        assert_eq!(m.element_count(), 4);
        let area: f64 = (0..4).map(|e| m.element_area(e, &m.node_coords)).sum();
        assert!((area - 2.0).abs() < 1e-14);
        assert_eq!(m.boundary_faces.len(), 6);
        m.validate().unwrap();
    }
}
