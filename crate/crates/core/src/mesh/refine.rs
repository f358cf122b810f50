use super::PolygonalMesh;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Splits every element into the fan of triangles joining its center to its
/// edges. An element with `m` edges yields `m` triangles.
pub fn uniform_refine<T: Real>(mesh: &PolygonalMesh<T>) -> Result<PolygonalMesh<T>> {
    let mut coords: Vec<_> = mesh.vertices.iter().map(|v| v.x).collect();
    let mut cells = Vec::new();
    for el in &mesh.elements {
        let c = coords.len();
        coords.push(el.center);
        let n = el.vertices.len();
        for i in 0..n {
            let a = el.vertices[i];
            let b = el.vertices[(i + 1) % n];
            let (pa, pb, pc) = (coords[a], coords[b], el.center);
            let area = (pb.x - pa.x) * (pc.y - pa.y) - (pc.x - pa.x) * (pb.y - pa.y);
            if area <= T::zero() {
                return Err(Error::Geometry(format!(
                    "fan triangle {i} of element {} has non-positive area",
                    el.id
                )));
            }
            cells.push(vec![a, b, c]);
        }
    }
    PolygonalMesh::new(coords, cells)
}

#[cfg(test)]
mod tests {
    use nalgebra::Vector2;

    use super::*;
    use crate::mesh::triangular_mesh;

    #[test]
    fn single_triangle_splits_in_three() {
        let m = PolygonalMesh::<f64>::new(
            vec![Vector2::new(0.0, 0.0), Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)],
            vec![vec![0, 1, 2]],
        )
        .unwrap();
        let r = uniform_refine(&m).unwrap();
        assert_eq!(r.n_elements(), 3);
        assert!((r.total_area() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn eight_triangles_become_twenty_four() {
        let m = triangular_mesh::<f64>(2).unwrap();
        let r = uniform_refine(&m).unwrap();
        assert_eq!(r.n_elements(), 24);
        assert!((r.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regular_hexagon_fan() {
        let coords: Vec<_> = (0..6)
            .map(|i| {
                let a = std::f64::consts::PI / 3.0 * i as f64;
                Vector2::new(a.cos(), a.sin())
            })
            .collect();
        let m = PolygonalMesh::<f64>::new(coords, vec![(0..6).collect()]).unwrap();
        let r = uniform_refine(&m).unwrap();
        assert_eq!(r.n_elements(), 6);
        assert!((r.total_area() - m.total_area()).abs() < 1e-12);
        assert!((m.total_area() - 1.5 * 3f64.sqrt()).abs() < 1e-13);
    }
}
