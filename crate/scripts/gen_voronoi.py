#!/usr/bin/env python3
"""Generate Lloyd-relaxed Voronoi meshes of the unit cube as JSON fixtures.

Seeds are mirrored across all six cube faces before building the Voronoi
diagram, so every interior cell is bounded and boundary faces lie exactly on
the cube planes. Faces store 0-based vertex loops, counter-clockwise with
respect to the stored normal; cells list signed 1-based face indices with a
positive sign when the stored normal points out of the cell.

Usage: gen_voronoi.py OUT.json N_CELLS SEED [LLOYD_ITERS]
"""

import json
import sys

import numpy as np
from scipy.spatial import ConvexHull, Voronoi


def mirrored_voronoi(points):
    blocks = [points]
    for axis in range(3):
        for side in (0.0, 1.0):
            m = points.copy()
            m[:, axis] = 2.0 * side - m[:, axis]
            blocks.append(m)
    return Voronoi(np.vstack(blocks))


def lloyd(points, iters):
    for _ in range(iters):
        vor = mirrored_voronoi(points)
        moved = np.empty_like(points)
        for i in range(len(points)):
            region = vor.regions[vor.point_region[i]]
            assert -1 not in region, "interior cell unbounded despite mirroring"
            cellpts = vor.vertices[region]
            hull = ConvexHull(cellpts)
            # Volume centroid of the convex cell via its hull triangulation.
            tets = cellpts[hull.simplices]
            apex = cellpts.mean(axis=0)
            vols = np.abs(
                np.einsum(
                    "ij,ij->i",
                    np.cross(tets[:, 1] - tets[:, 0], tets[:, 2] - tets[:, 0]),
                    apex - tets[:, 0],
                )
            )
            centroids = (tets.sum(axis=1) + apex) / 4.0
            moved[i] = (centroids * vols[:, None]).sum(axis=0) / vols.sum()
        points = np.clip(moved, 1e-9, 1.0 - 1e-9)
    return points


def loop_ccw(points, normal):
    """Order polygon vertex positions counter-clockwise about `normal`."""
    center = points.mean(axis=0)
    normal = normal / np.linalg.norm(normal)
    seed = points[0] - center
    u = seed - normal * (seed @ normal)
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)
    rel = points - center
    return np.argsort(np.arctan2(rel @ v, rel @ u))


def extract(vor, n):
    vert_map = {}
    vertices = []
    faces = []
    cells = [[] for _ in range(n)]

    def map_vertex(g):
        if g not in vert_map:
            vert_map[g] = len(vertices)
            vertices.append(vor.vertices[g])
        return vert_map[g]

    for (p, q), ridge in zip(vor.ridge_points, vor.ridge_vertices):
        p, q = int(p), int(q)
        if min(p, q) >= n:
            continue
        assert -1 not in ridge, "unbounded ridge on an interior cell"
        owner, other = (p, q) if p < q else (q, p)
        normal = vor.points[other] - vor.points[owner]
        order = loop_ccw(vor.vertices[ridge], normal)
        loop = [map_vertex(ridge[k]) for k in order]
        fid = len(faces) + 1
        faces.append(loop)
        cells[owner].append(fid)
        if other < n:
            cells[other].append(-fid)

    return np.array(vertices), faces, cells


def check(vertices, faces, cells):
    total = 0.0
    for signed in cells:
        vol = 0.0
        for s in signed:
            loop = vertices[faces[abs(s) - 1]]
            # Signed flux of x/3 through the stored loop, flipped when the
            # stored normal points into the cell.
            c = loop.mean(axis=0)
            for a, b in zip(loop, np.roll(loop, -1, axis=0)):
                vol += np.sign(s) * np.cross(a - c, b - c) @ c / 6.0
        assert vol > 0.0, "negative cell volume: orientation bug"
        total += vol
    assert abs(total - 1.0) < 1e-9, f"cells tile {total}, expected 1"


def main():
    out, n, seed = sys.argv[1], int(sys.argv[2]), int(sys.argv[3])
    iters = int(sys.argv[4]) if len(sys.argv) > 4 else 30
    rng = np.random.default_rng(seed)
    points = rng.random((n, 3))
    points = lloyd(points, iters)
    vor = mirrored_voronoi(points)
    vertices, faces, cells = extract(vor, n)
    check(vertices, faces, cells)
    with open(out, "w") as fh:
        json.dump(
            {
                "vertices": [list(map(float, v)) for v in vertices],
                "faces": faces,
                "cells": cells,
            },
            fh,
        )
    areas = []
    for loop in faces:
        pts = vertices[loop]
        c = pts.mean(axis=0)
        s = np.zeros(3)
        for a, b in zip(pts, np.roll(pts, -1, axis=0)):
            s += np.cross(a - c, b - c) / 2.0
        areas.append(np.linalg.norm(s))
    print(
        f"{out}: {n} cells, {len(faces)} faces, {len(vertices)} vertices, "
        f"min face area {min(areas):.3e}"
    )


if __name__ == "__main__":
    main()
