//! Shared single-cell test fixtures.

use crate::mesh::{
    compute_geometry, parse_mesh, sub_tessellate, GeometryCache, IngestMode, PolyMesh,
    SubTessellation,
};

pub(crate) const TETRA_JSON: &str = r#"{
    "vertices": [[0,0,0],[1,0,0],[0,1,0],[0,0,1]],
    "faces": [[0,2,1],[0,1,3],[0,3,2],[1,2,3]],
    "cells": [[1,2,3,4]]
}"#;

pub(crate) const CUBE_JSON: &str = r#"{
    "vertices": [
        [0,0,0],[1,0,0],[1,1,0],[0,1,0],
        [0,0,1],[1,0,1],[1,1,1],[0,1,1]
    ],
    "faces": [
        [0,1,2,3],[4,5,6,7],
        [0,1,5,4],[3,2,6,7],
        [0,3,7,4],[1,2,6,5]
    ],
    "cells": [[-1,2,3,-4,-5,6]]
}"#;

pub(crate) fn fixture(json: &str) -> (PolyMesh, GeometryCache, SubTessellation) {
    let mesh = parse_mesh(json, IngestMode::Strict).unwrap();
    let geom = compute_geometry(&mesh).unwrap();
    let tess = sub_tessellate(&mesh, &geom).unwrap();
    (mesh, geom, tess)
}

pub(crate) fn unit_cube() -> (PolyMesh, GeometryCache, SubTessellation) {
    fixture(CUBE_JSON)
}

pub(crate) fn reference_tetra() -> (PolyMesh, GeometryCache, SubTessellation) {
    fixture(TETRA_JSON)
}
