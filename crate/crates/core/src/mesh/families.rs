//! Built-in generators for the three mesh families of the unit square used
//! in the convergence studies.

use std::collections::BTreeMap;

use nalgebra::Vector2;

use super::PolygonalMesh;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFamily {
    /// Structured right-triangle meshes, `h = sqrt(2) / n`.
    Triangular,
    /// Brick-pattern meshes of convex hexagons (quadrilaterals along the sides).
    Hexagonal,
    /// Square meshes with the lower-left quarter refined once, leaving hanging nodes.
    LocallyRefined,
}

impl MeshFamily {
    pub fn parse(name: &str) -> Result<MeshFamily> {
        match name {
            "tri" => Ok(MeshFamily::Triangular),
            "hexa" => Ok(MeshFamily::Hexagonal),
            "locref" => Ok(MeshFamily::LocallyRefined),
            other => Err(Error::Config(format!("unknown mesh family '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MeshFamily::Triangular => "tri",
            MeshFamily::Hexagonal => "hexa",
            MeshFamily::LocallyRefined => "locref",
        }
    }

    /// `level`-th member of the family; the mesh size halves with each level.
    pub fn mesh<T: Real>(&self, level: usize) -> Result<PolygonalMesh<T>> {
        let n = 4 << level;
        match self {
            MeshFamily::Triangular => triangular_mesh(n),
            MeshFamily::Hexagonal => hexagonal_mesh(n),
            MeshFamily::LocallyRefined => locally_refined_mesh(n),
        }
    }

    pub fn sequence<T: Real>(&self, count: usize) -> Result<Vec<PolygonalMesh<T>>> {
        (0..count).map(|l| self.mesh(l)).collect()
    }
}

/// `n x n` squares of the unit square, each cut along its `(0,0)-(1,1)` diagonal.
pub fn triangular_mesh<T: Real>(n: usize) -> Result<PolygonalMesh<T>> {
    if n == 0 {
        return Err(Error::Config("triangular mesh needs n >= 1".into()));
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let nf: T = lit(n as f64);
    let mut coords = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            coords.push(Vector2::new(lit::<T>(i as f64) / nf, lit::<T>(j as f64) / nf));
        }
    }
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            cells.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolygonalMesh::new(coords, cells)
}

/// `n` rows of staggered bricks; interior brick corners are shifted vertically
/// so that every full brick is a convex hexagon.
pub fn hexagonal_mesh<T: Real>(n: usize) -> Result<PolygonalMesh<T>> {
    if n == 0 {
        return Err(Error::Config("hexagonal mesh needs n >= 1".into()));
    }
    let cols = 2 * n;
    let id = |i: usize, j: usize| j * (cols + 1) + i;
    let shift = 0.2;
    let mut coords = Vec::with_capacity((cols + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=cols {
            let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            let y = if j == 0 || j == n {
                j as f64
            } else {
                j as f64 + shift * s
            };
            coords.push(Vector2::new(lit(i as f64 / cols as f64), lit(y / n as f64)));
        }
    }
    let brick = |i0: usize, j: usize| {
        vec![
            id(i0, j),
            id(i0 + 1, j),
            id(i0 + 2, j),
            id(i0 + 2, j + 1),
            id(i0 + 1, j + 1),
            id(i0, j + 1),
        ]
    };
    let half = |i0: usize, j: usize| vec![id(i0, j), id(i0 + 1, j), id(i0 + 1, j + 1), id(i0, j + 1)];
    let mut cells = Vec::new();
    for j in 0..n {
        if j % 2 == 0 {
            for c in 0..n {
                cells.push(brick(2 * c, j));
            }
        } else {
            cells.push(half(0, j));
            for c in 0..n - 1 {
                cells.push(brick(2 * c + 1, j));
            }
            cells.push(half(cols - 1, j));
        }
    }
    PolygonalMesh::new(coords, cells)
}

/// `n x n` squares (`n` even) whose lower-left quarter is split into 2x2
/// sub-squares; coarse neighbours of the refined zone become pentagons or
/// hexagons with hanging nodes.
pub fn locally_refined_mesh<T: Real>(n: usize) -> Result<PolygonalMesh<T>> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::Config("locally refined mesh needs an even n >= 2".into()));
    }
    let refined = |ci: isize, cj: isize| ci >= 0 && cj >= 0 && (ci as usize) < n / 2 && (cj as usize) < n / 2;
    let fine = 2 * n;
    let mut used: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut raw_cells: Vec<Vec<(usize, usize)>> = Vec::new();
    for cj in 0..n {
        for ci in 0..n {
            let (i0, j0) = (2 * ci, 2 * cj);
            if refined(ci as isize, cj as isize) {
                for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    let (a, b) = (i0 + di, j0 + dj);
                    raw_cells.push(vec![(a, b), (a + 1, b), (a + 1, b + 1), (a, b + 1)]);
                }
                continue;
            }
            let (ci, cj) = (ci as isize, cj as isize);
            let mut cell = vec![(i0, j0)];
            if refined(ci, cj - 1) {
                cell.push((i0 + 1, j0));
            }
            cell.push((i0 + 2, j0));
            if refined(ci + 1, cj) {
                cell.push((i0 + 2, j0 + 1));
            }
            cell.push((i0 + 2, j0 + 2));
            if refined(ci, cj + 1) {
                cell.push((i0 + 1, j0 + 2));
            }
            cell.push((i0, j0 + 2));
            if refined(ci - 1, cj) {
                cell.push((i0, j0 + 1));
            }
            raw_cells.push(cell);
        }
    }
    for cell in &raw_cells {
        for &p in cell {
            let next = used.len();
            used.entry(p).or_insert(next);
        }
    }
    // Renumber row by row so the vertex ordering does not depend on cell order.
    let mut keys: Vec<(usize, usize)> = used.keys().copied().collect();
    keys.sort_by_key(|&(i, j)| (j, i));
    let index: BTreeMap<(usize, usize), usize> = keys.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let coords = keys
        .iter()
        .map(|&(i, j)| Vector2::new(lit(i as f64 / fine as f64), lit(j as f64 / fine as f64)))
        .collect();
    let cells = raw_cells
        .into_iter()
        .map(|c| c.into_iter().map(|p| index[&p]).collect())
        .collect();
    PolygonalMesh::new(coords, cells)
}
