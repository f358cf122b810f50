use std::fs;
use std::path::Path;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::PolygonalMesh;
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    /// `{ "vertices": [[x, y], ...], "cells": [[v0, v1, ...], ...] }`
    Json,
    /// FVCA-style text format (read-only).
    Typ2,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> MeshFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("typ2") => MeshFormat::Typ2,
            _ => MeshFormat::Json,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonMesh {
    vertices: Vec<[f64; 2]>,
    cells: Vec<Vec<usize>>,
}

pub fn load_mesh<T: Real>(path: &Path, format: MeshFormat) -> Result<PolygonalMesh<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mesh = match format {
        MeshFormat::Json => parse_json_mesh(&text),
        MeshFormat::Typ2 => parse_typ2_mesh(&text),
    };
    mesh.map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other.context(path.display()),
    })
}

fn parse_error(message: impl Into<String>) -> Error {
    Error::Parse {
        path: Default::default(),
        message: message.into(),
    }
}

pub fn parse_json_mesh<T: Real>(text: &str) -> Result<PolygonalMesh<T>> {
    let raw: JsonMesh = serde_json::from_str(text).map_err(|e| parse_error(e.to_string()))?;
    let coords = raw
        .vertices
        .iter()
        .map(|p| Vector2::new(lit(p[0]), lit(p[1])))
        .collect();
    PolygonalMesh::new(coords, raw.cells)
}

pub fn write_json_mesh<T: Real>(mesh: &PolygonalMesh<T>, path: &Path) -> Result<()> {
    let raw = JsonMesh {
        vertices: mesh.vertices.iter().map(|v| [to_f64(v.x.x), to_f64(v.x.y)]).collect(),
        cells: mesh.elements.iter().map(|e| e.vertices.clone()).collect(),
    };
    let text = serde_json::to_string(&raw).expect("mesh serialisation");
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads the FVCA/HArDCore `typ2` layout:
///
/// ```text
/// Vertices
///   N
/// x y
/// ...
/// cells
///   M
/// m v1 ... vm        (1-based, counterclockwise)
/// ```
///
/// Section keywords are case-insensitive; any trailing sections are ignored.
pub fn parse_typ2_mesh<T: Real>(text: &str) -> Result<PolygonalMesh<T>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());

    let expect_header = |name: &str, lines: &mut dyn Iterator<Item = &str>| -> Result<usize> {
        let header = lines
            .next()
            .ok_or_else(|| parse_error(format!("missing section '{name}'")))?;
        if !header.to_ascii_lowercase().starts_with(name) {
            return Err(parse_error(format!("expected section '{name}', found '{header}'")));
        }
        lines
            .next()
            .and_then(|l| l.split_whitespace().next())
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| parse_error(format!("missing count for section '{name}'")))
    };

    let nv = expect_header("vertices", &mut lines)?;
    let mut coords = Vec::with_capacity(nv);
    for i in 0..nv {
        let line = lines
            .next()
            .ok_or_else(|| parse_error(format!("vertex {i}: unexpected end of file")))?;
        let xs: Vec<f64> = line
            .split_whitespace()
            .take(2)
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_error(format!("vertex {i}: {e}")))?;
        if xs.len() != 2 {
            return Err(parse_error(format!("vertex {i}: expected two coordinates")));
        }
        coords.push(Vector2::new(lit(xs[0]), lit(xs[1])));
    }

    let nc = expect_header("cells", &mut lines)?;
    let mut cells = Vec::with_capacity(nc);
    for c in 0..nc {
        let line = lines
            .next()
            .ok_or_else(|| parse_error(format!("cell {c}: unexpected end of file")))?;
        let ids: Vec<usize> = line
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_error(format!("cell {c}: {e}")))?;
        let (&m, rest) = ids
            .split_first()
            .ok_or_else(|| parse_error(format!("cell {c}: empty line")))?;
        if rest.len() != m || rest.contains(&0) {
            return Err(parse_error(format!("cell {c}: malformed vertex list")));
        }
        cells.push(rest.iter().map(|&v| v - 1).collect());
    }
    PolygonalMesh::new(coords, cells)
}
