use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Point2, PolyMesh};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshFile {
    vertices: Vec<[f64; 2]>,
    cells: Vec<Vec<usize>>,
}

impl PolyMesh {
    pub fn to_json(&self) -> String {
        let file = MeshFile {
            vertices: self.vertices().iter().map(|p| [p.x, p.y]).collect(),
            cells: self.cells().to_vec(),
        };
        serde_json::to_string(&file).expect("mesh serialization is infallible")
    }

    /// Parses `{"vertices": [[x, y], ...], "cells": [[i0, i1, ...], ...]}` and
    /// rebuilds the edge topology.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeshFile = serde_json::from_str(text).map_err(|source| Error::Json {
            path: "<mesh>".into(),
            source,
        })?;
        PolyMesh::new(
            file.vertices.into_iter().map(|[x, y]| Point2::new(x, y)).collect(),
            file.cells,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: MeshFile = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        PolyMesh::new(
            file.vertices.into_iter().map(|[x, y]| Point2::new(x, y)).collect(),
            file.cells,
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::files::write_atomic(path.as_ref(), self.to_json().as_bytes())
    }
}
