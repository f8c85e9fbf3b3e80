//! Marching squares on a 2D [`Field`].

use crate::lod::{cell_centre, Field, OrientedPoints};

/// A chain of contour vertices in world coordinates. Closed polylines do not
/// repeat their first vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    /// Per-segment unit normals pointing towards increasing field values.
    /// `normals[i]` belongs to the segment starting at `points[i]`.
    pub normals: Vec<[f64; 2]>,
    pub closed: bool,
}

impl Polyline {
    pub fn segment_count(&self) -> usize {
        if self.closed {
            self.points.len()
        } else {
            self.points.len().saturating_sub(1)
        }
    }

    pub fn segment(&self, i: usize) -> ([f64; 2], [f64; 2]) {
        (self.points[i], self.points[(i + 1) % self.points.len()])
    }

    pub fn length(&self) -> f64 {
        (0..self.segment_count())
            .map(|i| {
                let (a, b) = self.segment(i);
                (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .sum()
    }
}

pub fn total_length(lines: &[Polyline]) -> f64 {
    lines.iter().map(Polyline::length).sum()
}

// Cell corners: 0 = (c, r), 1 = (c+1, r), 2 = (c+1, r+1), 3 = (c, r+1).
// Cell edges: 0 = corners 0-1, 1 = corners 1-2, 2 = corners 3-2, 3 = corners 0-3.
const EDGE_CORNERS: [(usize, usize); 4] = [(0, 1), (1, 2), (3, 2), (0, 3)];

/// Edge pairs for each inside-corner mask; saddles (5 and 10) are handled
/// separately.
const SEGMENTS: [&[(usize, usize)]; 16] = [
    &[],
    &[(3, 0)],
    &[(0, 1)],
    &[(3, 1)],
    &[(1, 2)],
    &[],
    &[(0, 2)],
    &[(3, 2)],
    &[(2, 3)],
    &[(0, 2)],
    &[],
    &[(1, 2)],
    &[(1, 3)],
    &[(0, 1)],
    &[(0, 3)],
    &[],
];

struct Segment {
    edges: [usize; 2],
    points: [[f64; 2]; 2],
    normal: [f64; 2],
}

/// Extracts the `iso` contour of the first channel of a 2D field.
///
/// Vertices are linear interpolations along grid edges between sample
/// points. A corner counts as inside when its value is below `iso`. Saddle
/// cells connect their two inside corners when the mean of the four corner
/// values is also inside. Grids smaller than 2x2 have no cells and yield no
/// contour.
pub fn marching_squares(field: &Field, iso: f64) -> Vec<Polyline> {
    assert_eq!(field.dim(), 2, "marching_squares needs a 2D field");
    let n = field.resolution();
    if n < 2 {
        return Vec::new();
    }
    let value = |c: usize, r: usize| field.at(&[c, r]);
    let pos = |c: usize, r: usize| [cell_centre(c, n), cell_centre(r, n)];

    let mut segments = Vec::new();
    for r in 0..n - 1 {
        for c in 0..n - 1 {
            let corners = [(c, r), (c + 1, r), (c + 1, r + 1), (c, r + 1)];
            let f = corners.map(|(cc, rr)| value(cc, rr));
            let mask = f
                .iter()
                .enumerate()
                .fold(0, |m, (i, &v)| if v < iso { m | 1 << i } else { m });
            let centre_inside = (f[0] + f[1] + f[2] + f[3]) / 4.0 < iso;
            let pairs: &[(usize, usize)] = match (mask, centre_inside) {
                (5, true) | (10, false) => &[(0, 1), (2, 3)],
                (5, false) | (10, true) => &[(3, 0), (1, 2)],
                _ => SEGMENTS[mask],
            };
            for &(ea, eb) in pairs {
                let vertex = |e: usize| {
                    let (a, b) = EDGE_CORNERS[e];
                    let t = (iso - f[a]) / (f[b] - f[a]);
                    let (pa, pb) = (
                        pos(corners[a].0, corners[a].1),
                        pos(corners[b].0, corners[b].1),
                    );
                    [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
                };
                let edge_id = |e: usize| {
                    let (a, b) = EDGE_CORNERS[e];
                    let (cc, rr) = corners[a];
                    let horizontal = corners[b].1 == rr;
                    2 * (rr * n + cc) + usize::from(!horizontal)
                };
                let points = [vertex(ea), vertex(eb)];
                let mid = [
                    ((points[0][0] + points[1][0]) / 2.0 - pos(c, r)[0]) * n as f64 / 2.0,
                    ((points[0][1] + points[1][1]) / 2.0 - pos(c, r)[1]) * n as f64 / 2.0,
                ];
                let normal = oriented_normal(points, bilinear_gradient(f, mid));
                segments.push(Segment {
                    edges: [edge_id(ea), edge_id(eb)],
                    points,
                    normal,
                });
            }
        }
    }
    chain(segments, 2 * n * n)
}

/// Gradient of the bilinear interpolant over a unit cell at local `(u, v)`.
fn bilinear_gradient(f: [f64; 4], [u, v]: [f64; 2]) -> [f64; 2] {
    [
        (f[1] - f[0]) * (1.0 - v) + (f[2] - f[3]) * v,
        (f[3] - f[0]) * (1.0 - u) + (f[2] - f[1]) * u,
    ]
}

/// Unit normal of segment `p` with the sign of `grad`.
fn oriented_normal(p: [[f64; 2]; 2], grad: [f64; 2]) -> [f64; 2] {
    let (dx, dy) = (p[1][0] - p[0][0], p[1][1] - p[0][1]);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return [0.0, 0.0];
    }
    let n = [dy / len, -dx / len];
    if n[0] * grad[0] + n[1] * grad[1] < 0.0 {
        [-n[0], -n[1]]
    } else {
        n
    }
}

/// Joins segments that share a grid edge into polylines, in order of first
/// appearance.
fn chain(segments: Vec<Segment>, edge_count: usize) -> Vec<Polyline> {
    const NONE: usize = usize::MAX;
    let mut by_edge = vec![[NONE; 2]; edge_count];
    for (i, s) in segments.iter().enumerate() {
        for &e in &s.edges {
            let slot = &mut by_edge[e];
            if slot[0] == NONE {
                slot[0] = i;
            } else {
                slot[1] = i;
            }
        }
    }
    let mut used = vec![false; segments.len()];
    let next_on = |edge: usize, from: usize, used: &[bool]| {
        by_edge[edge]
            .into_iter()
            .find(|&s| s != NONE && s != from && !used[s])
    };

    let mut lines = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let s = &segments[start];
        // Walk forwards from the second endpoint, then backwards from the first.
        let mut fwd_points = vec![s.points[0], s.points[1]];
        let mut fwd_normals = vec![s.normal];
        let (mut edge, mut from) = (s.edges[1], start);
        let mut closed = false;
        while let Some(next) = next_on(edge, from, &used) {
            used[next] = true;
            let seg = &segments[next];
            let k = usize::from(seg.edges[0] == edge);
            fwd_normals.push(seg.normal);
            edge = seg.edges[k];
            from = next;
            if edge == s.edges[0] {
                closed = true;
                break;
            }
            fwd_points.push(seg.points[k]);
        }
        let mut back_points = Vec::new();
        let mut back_normals = Vec::new();
        if !closed {
            let (mut edge, mut from) = (s.edges[0], start);
            while let Some(next) = next_on(edge, from, &used) {
                used[next] = true;
                let seg = &segments[next];
                let k = usize::from(seg.edges[0] == edge);
                back_points.push(seg.points[k]);
                back_normals.push(seg.normal);
                edge = seg.edges[k];
                from = next;
            }
        }
        back_points.reverse();
        back_normals.reverse();
        back_points.extend(fwd_points);
        back_normals.extend(fwd_normals);
        lines.push(Polyline {
            points: back_points,
            normals: back_normals,
            closed,
        });
    }
    lines
}

/// `count` points spread uniformly by arc length over all polylines, each
/// carrying the normal of the segment it lies on.
pub fn sample_polylines(lines: &[Polyline], count: usize) -> OrientedPoints {
    let total = total_length(lines);
    let mut points = Vec::with_capacity(2 * count);
    let mut normals = Vec::with_capacity(2 * count);
    if total > 0.0 && count > 0 {
        let step = total / count as f64;
        let mut target = step / 2.0;
        let mut walked = 0.0;
        for line in lines {
            for i in 0..line.segment_count() {
                let (a, b) = line.segment(i);
                let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                while target < walked + len && points.len() < 2 * count {
                    let t = (target - walked) / len;
                    points.extend([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                    normals.extend(line.normals[i]);
                    target += step;
                }
                walked += len;
            }
        }
    }
    OrientedPoints::from_parts_unchecked(2, points, normals)
}
