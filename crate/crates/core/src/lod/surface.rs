//! Marching cubes on a 3D [`Field`].

use std::collections::HashMap;

use rand::Rng;

use crate::lod::mc_table::TRI_TABLE;
use crate::lod::{cell_centre, Field, OrientedPoints};

/// Indexed triangle mesh in world coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
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

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

impl Mesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Twice-area normal of triangle `t`, following its winding.
    fn face_normal(&self, t: usize) -> [f64; 3] {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        cross(sub(b, a), sub(c, a))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| 0.5 * norm(self.face_normal(t)))
            .sum()
    }

    /// Unit vertex normals from area-weighted face normals.
    pub fn vertex_normals(&self) -> Vec<[f64; 3]> {
        let mut acc = vec![[0.0; 3]; self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let n = self.face_normal(t);
            for &v in tri {
                for d in 0..3 {
                    acc[v][d] += n[d];
                }
            }
        }
        acc.into_iter()
            .map(|n| {
                let len = norm(n);
                if len > 0.0 {
                    n.map(|v| v / len)
                } else {
                    n
                }
            })
            .collect()
    }

    /// Vertices paired with their area-weighted normals. Vertices that only
    /// touch degenerate triangles are skipped.
    pub fn oriented_vertices(&self) -> OrientedPoints {
        let mut points = Vec::with_capacity(3 * self.vertices.len());
        let mut normals = Vec::with_capacity(3 * self.vertices.len());
        for (v, n) in self.vertices.iter().zip(self.vertex_normals()) {
            if n != [0.0; 3] {
                points.extend(v);
                normals.extend(n);
            }
        }
        OrientedPoints::from_parts_unchecked(3, points, normals)
    }

    /// `count` points drawn uniformly by area, each with its face normal.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> OrientedPoints {
        let mut cumulative = Vec::with_capacity(self.triangles.len());
        let mut total = 0.0;
        for t in 0..self.triangles.len() {
            total += norm(self.face_normal(t));
            cumulative.push(total);
        }
        let mut points = Vec::with_capacity(3 * count);
        let mut normals = Vec::with_capacity(3 * count);
        if total > 0.0 {
            for _ in 0..count {
                let pick = rng.random::<f64>() * total;
                let t = cumulative
                    .partition_point(|&c| c <= pick)
                    .min(cumulative.len() - 1);
                let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
                let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
                if u + v > 1.0 {
                    (u, v) = (1.0 - u, 1.0 - v);
                }
                for d in 0..3 {
                    points.push(a[d] + u * (b[d] - a[d]) + v * (c[d] - a[d]));
                }
                let n = self.face_normal(t);
                let len = norm(n);
                normals.extend(n.map(|x| x / len));
            }
        }
        OrientedPoints::from_parts_unchecked(3, points, normals)
    }
}

const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

const EDGES: [(usize, usize); 12] = [
    (0, 1),
    (1, 2),
    (3, 2),
    (0, 3),
    (4, 5),
    (5, 6),
    (7, 6),
    (4, 7),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

/// Extracts the `iso` surface of the first channel of a 3D field.
///
/// Vertices are linearly interpolated along grid edges and shared between
/// neighbouring cells, so a surface that crosses the grid transversally comes
/// out closed. Triangles wind counter-clockwise seen from the side where the
/// field exceeds `iso`. Grids smaller than 2x2x2 yield an empty mesh.
pub fn marching_cubes(field: &Field, iso: f64) -> Mesh {
    assert_eq!(field.dim(), 3, "marching_cubes needs a 3D field");
    let n = field.resolution();
    let mut mesh = Mesh::default();
    if n < 2 {
        return mesh;
    }
    let mut edge_vertex: HashMap<(usize, usize), usize> = HashMap::new();

    for z in 0..n - 1 {
        for y in 0..n - 1 {
            for x in 0..n - 1 {
                let idx = CORNERS.map(|o| [x + o[0], y + o[1], z + o[2]]);
                let f = idx.map(|p| field.at(&p));
                let mask = f
                    .iter()
                    .enumerate()
                    .fold(0, |m, (i, &v)| if v < iso { m | 1 << i } else { m });
                let row = &TRI_TABLE[mask];
                let mut vertex_of = |e: usize| -> usize {
                    let (a, b) = EDGES[e];
                    let (pa, pb) = (idx[a], idx[b]);
                    let axis = (0..3)
                        .find(|&d| pa[d] != pb[d])
                        .expect("edge spans one axis");
                    let key = ((pa[2] * n + pa[1]) * n + pa[0], axis);
                    *edge_vertex.entry(key).or_insert_with(|| {
                        let t = (iso - f[a]) / (f[b] - f[a]);
                        let wa = pa.map(|i| cell_centre(i, n));
                        let wb = pb.map(|i| cell_centre(i, n));
                        mesh.vertices
                            .push([0, 1, 2].map(|d| wa[d] + t * (wb[d] - wa[d])));
                        mesh.vertices.len() - 1
                    })
                };
                for tri in row.chunks_exact(3).take_while(|t| t[0] >= 0) {
                    let v = [tri[0], tri[2], tri[1]].map(|e| vertex_of(e as usize));
                    mesh.triangles.push(v);
                }
            }
        }
    }
    mesh
}
