//! Watertight solid from a height field, mesh validation and binary STL.
//!
//! The solid is the height-field sheet on top, a flat two-triangle bottom
//! below the lowest point, and four vertical walls. The bottom only has the
//! four footprint corners, so each wall is a polygon made of one boundary
//! profile of the sheet plus a single bottom edge. Walls are triangulated
//! with a monotone-polygon sweep, which never produces overlapping triangles
//! even when the profile dips below the line of sight of a bottom corner.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::surface::SurfaceGrid;

/// Header text of emitted STL files, zero-padded to 80 bytes.
pub const STL_HEADER: &str = "ce-surf heightfield v1";

/// Share of the footprint's longer side the height range is scaled to by default.
pub const DEFAULT_RELIEF_FRACTION: f64 = 0.2;
/// Default base thickness as a share of the footprint's longer side.
pub const DEFAULT_BASE_FRACTION: f64 = 0.05;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    /// Counterclockwise when seen from outside.
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn triangle_points(&self, t: &[u32; 3]) -> [[f64; 3]; 3] {
        t.map(|i| self.vertices[i as usize])
    }

    /// Divergence-theorem volume; positive for outward winding.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .filter(|t| t.iter().all(|&i| (i as usize) < self.vertices.len()))
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                dot(a, cross(b, c)) / 6.0
            })
            .sum()
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// `z_scale` that maps the height range onto [`DEFAULT_RELIEF_FRACTION`] of
/// the footprint's longer side; `1.0` for a flat surface.
pub fn default_z_scale(surf: &SurfaceGrid) -> f64 {
    let (lo, hi) = surf.z_range();
    let side = (surf.width().max(surf.height()) - 1).max(1) as f64;
    if hi > lo {
        DEFAULT_RELIEF_FRACTION * side / (hi - lo)
    } else {
        1.0
    }
}

pub fn default_base_offset(surf: &SurfaceGrid) -> f64 {
    let side = (surf.width().max(surf.height()) - 1).max(1) as f64;
    DEFAULT_BASE_FRACTION * side
}

/// 2D orientation of `(a, b, c)` in wall coordinates; `> 0` is counterclockwise.
fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Triangulates one wall. `profile` lists the top vertices in the order
/// they appear left to right when looking at the wall from outside;
/// `bottom_left` / `bottom_right` sit below its first / last entries.
fn triangulate_wall(
    mesh: &TriangleMesh,
    profile: &[u32],
    bottom_left: u32,
    bottom_right: u32,
    out: &mut Vec<[u32; 3]>,
) {
    let z = |v: u32| mesh.vertices[v as usize][2];
    // Wall-plane coordinates: position along the wall, height.
    let bl = (0.0, z(bottom_left));
    let pt = |k: usize| (k as f64, z(profile[k]));
    let top = profile
        .iter()
        .map(|&v| z(v))
        .fold(f64::NEG_INFINITY, f64::max);
    let span = (profile.len() as f64 - 1.0).max(top - bl.1);
    // Turns flatter than this are treated as straight.
    let min_turn = 1e-12 * span * span;

    // Stack of (vertex, 2D point); the bottom-left corner anchors it.
    let mut stack: Vec<(u32, (f64, f64))> = vec![(bottom_left, bl), (profile[0], pt(0))];
    for (k, &v) in profile.iter().enumerate().skip(1) {
        let cur = (v, pt(k));
        while stack.len() >= 2 {
            let (a, pa) = stack[stack.len() - 2];
            let (c, pc) = stack[stack.len() - 1];
            if orient(pa, cur.1, pc) > min_turn {
                out.push([a, cur.0, c]);
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(cur);
    }
    for pair in stack.windows(2) {
        out.push([pair[0].0, bottom_right, pair[1].0]);
    }
}

/// Closes the height field into a printable solid.
///
/// Top vertices are `(col, row, z * z_scale)`; the bottom is the plane
/// `min(z) * z_scale - base_offset`. The result has `W*H + 4` vertices and
/// `2(W-1)(H-1) + 2 + 2W + 2H` triangles.
pub fn surface_to_mesh(surf: &SurfaceGrid, base_offset: f64, z_scale: f64) -> Result<TriangleMesh> {
    let (w, h) = surf.dimensions();
    if w < 2 || h < 2 {
        return Err(Error::invalid(format!(
            "a printable solid needs at least a 2x2 surface, got {w}x{h}"
        )));
    }
    if !(base_offset.is_finite() && base_offset > 0.0) {
        return Err(Error::invalid(format!(
            "base offset must be > 0, got {base_offset}"
        )));
    }
    if !(z_scale.is_finite() && z_scale > 0.0) {
        return Err(Error::invalid(format!(
            "z scale must be > 0, got {z_scale}"
        )));
    }

    let mut mesh = TriangleMesh::default();
    mesh.vertices.reserve(w * h + 4);
    for i in 0..h {
        for j in 0..w {
            mesh.vertices
                .push([surf.x(i, j), surf.y(i, j), surf.z(i, j) * z_scale]);
        }
    }
    let base = surf.z_range().0 * z_scale - base_offset;
    let (xmax, ymax) = ((w - 1) as f64, (h - 1) as f64);
    let n = (w * h) as u32;
    let (b00, b01, b10, b11) = (n, n + 1, n + 2, n + 3);
    mesh.vertices.extend([
        [0.0, 0.0, base],
        [xmax, 0.0, base],
        [0.0, ymax, base],
        [xmax, ymax, base],
    ]);

    let idx = |i: usize, j: usize| (i * w + j) as u32;
    let mut tris = Vec::with_capacity(2 * (w - 1) * (h - 1) + 2 + 2 * (w + h));
    for i in 0..h - 1 {
        for j in 0..w - 1 {
            tris.push([idx(i, j), idx(i, j + 1), idx(i + 1, j)]);
            tris.push([idx(i, j + 1), idx(i + 1, j + 1), idx(i + 1, j)]);
        }
    }
    tris.push([b00, b10, b01]);
    tris.push([b01, b10, b11]);

    let front: Vec<u32> = (0..w).map(|j| idx(0, j)).collect();
    let back: Vec<u32> = (0..w).rev().map(|j| idx(h - 1, j)).collect();
    let right: Vec<u32> = (0..h).map(|i| idx(i, w - 1)).collect();
    let left: Vec<u32> = (0..h).rev().map(|i| idx(i, 0)).collect();
    triangulate_wall(&mesh, &front, b00, b01, &mut tris);
    triangulate_wall(&mesh, &right, b01, b11, &mut tris);
    triangulate_wall(&mesh, &back, b11, b10, &mut tris);
    triangulate_wall(&mesh, &left, b10, b00, &mut tris);

    mesh.triangles = tris;
    Ok(mesh)
}

/// Outcome of [`validate_mesh`].
#[derive(Clone, Debug, PartialEq)]
pub struct MeshReport {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub face_count: usize,
    pub invalid_indices: usize,
    pub degenerate_triangles: usize,
    pub boundary_edges: usize,
    pub non_manifold_edges: usize,
    /// Edges whose two faces traverse them in the same direction.
    pub inconsistent_edges: usize,
    pub euler_characteristic: i64,
    pub signed_volume: f64,
}

impl MeshReport {
    pub fn is_edge_manifold(&self) -> bool {
        self.boundary_edges == 0 && self.non_manifold_edges == 0
    }

    pub fn is_consistently_oriented(&self) -> bool {
        self.inconsistent_edges == 0
    }

    pub fn passes(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn failures(&self) -> Vec<String> {
        let mut f = Vec::new();
        if self.invalid_indices > 0 {
            f.push(format!(
                "{} out-of-range vertex indices",
                self.invalid_indices
            ));
        }
        if self.degenerate_triangles > 0 {
            f.push(format!("{} zero-area triangles", self.degenerate_triangles));
        }
        if self.boundary_edges > 0 {
            f.push(format!("{} boundary edges", self.boundary_edges));
        }
        if self.non_manifold_edges > 0 {
            f.push(format!("{} non-manifold edges", self.non_manifold_edges));
        }
        if self.inconsistent_edges > 0 {
            f.push(format!(
                "{} edges with inconsistent orientation",
                self.inconsistent_edges
            ));
        }
        if self.euler_characteristic != 2 {
            f.push(format!(
                "Euler characteristic {} (expected 2)",
                self.euler_characteristic
            ));
        }
        if self.signed_volume.is_nan() || self.signed_volume <= 0.0 {
            f.push(format!(
                "signed volume {} is not positive",
                self.signed_volume
            ));
        }
        f
    }
}

/// Checks indices, triangle areas, edge-manifoldness, orientation,
/// `V - E + F = 2` and positive enclosed volume.
pub fn validate_mesh(mesh: &TriangleMesh) -> MeshReport {
    let nv = mesh.vertices.len();
    let (mut lo, mut hi) = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
    for v in &mesh.vertices {
        for k in 0..3 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    let diag2 = if nv > 0 {
        dot(sub(hi, lo), sub(hi, lo))
    } else {
        0.0
    };
    let min_area = 1e-14 * diag2;

    let mut invalid_indices = 0;
    let mut degenerate_triangles = 0;
    // Undirected edge -> (uses as stored (lo, hi), uses reversed).
    let mut edges: HashMap<(u32, u32), (u32, u32)> = HashMap::new();
    for t in &mesh.triangles {
        let bad = t.iter().filter(|&&i| i as usize >= nv).count();
        if bad > 0 {
            invalid_indices += bad;
            continue;
        }
        let [a, b, c] = mesh.triangle_points(t);
        let area = 0.5 * norm(cross(sub(b, a), sub(c, a)));
        if area <= min_area || t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            degenerate_triangles += 1;
        }
        for (p, q) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            let e = edges.entry((p.min(q), p.max(q))).or_default();
            if p < q {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
    }

    let mut boundary_edges = 0;
    let mut non_manifold_edges = 0;
    let mut inconsistent_edges = 0;
    for &(fwd, rev) in edges.values() {
        match fwd + rev {
            1 => boundary_edges += 1,
            2 if fwd != 1 => inconsistent_edges += 1,
            2 => {}
            _ => non_manifold_edges += 1,
        }
    }

    MeshReport {
        vertex_count: nv,
        edge_count: edges.len(),
        face_count: mesh.triangles.len(),
        invalid_indices,
        degenerate_triangles,
        boundary_edges,
        non_manifold_edges,
        inconsistent_edges,
        euler_characteristic: nv as i64 - edges.len() as i64 + mesh.triangles.len() as i64,
        signed_volume: mesh.signed_volume(),
    }
}

/// Unit normal from the winding, or zero for a degenerate triangle.
pub fn facet_normal(tri: [[f64; 3]; 3]) -> [f64; 3] {
    let n = cross(sub(tri[1], tri[0]), sub(tri[2], tri[0]));
    let len = norm(n);
    if len > 0.0 {
        [n[0] / len, n[1] / len, n[2] / len]
    } else {
        [0.0; 3]
    }
}

/// Binary STL: 80-byte header, `u32` count, then per facet the normal and
/// three vertices as little-endian `f32` and a zero `u16` attribute.
pub fn write_stl<W: Write>(mesh: &TriangleMesh, mut w: W) -> io::Result<()> {
    let mut header = [0u8; 80];
    header[..STL_HEADER.len()].copy_from_slice(STL_HEADER.as_bytes());
    w.write_all(&header)?;
    w.write_all(&(mesh.triangles.len() as u32).to_le_bytes())?;
    for t in &mesh.triangles {
        let pts = mesh.triangle_points(t);
        let n = facet_normal(pts);
        for v in std::iter::once(n).chain(pts) {
            for c in v {
                w.write_all(&(c as f32).to_le_bytes())?;
            }
        }
        w.write_all(&0u16.to_le_bytes())?;
    }
    w.flush()
}

pub fn export_stl(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_stl(mesh, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
