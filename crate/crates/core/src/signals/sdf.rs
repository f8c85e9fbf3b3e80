//! Analytic signed distance fields (negative inside) and uniform surface
//! sampling with exact outward normals.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum SdfShape {
    Circle2d {
        center: [f64; 2],
        radius: f64,
    },
    Box2d {
        center: [f64; 2],
        half: [f64; 2],
    },
    /// Simple polygon; either orientation.
    Polygon2d {
        vertices: Vec<[f64; 2]>,
    },
    Sphere3d {
        center: [f64; 3],
        radius: f64,
    },
    /// Torus around the z axis through `center`.
    Torus3d {
        center: [f64; 3],
        major: f64,
        minor: f64,
    },
    Box3d {
        center: [f64; 3],
        half: [f64; 3],
    },
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
    let (wx, wy) = (p[0] - a[0], p[1] - a[1]);
    let len2 = ex * ex + ey * ey;
    let t = if len2 > 0.0 {
        ((wx * ex + wy * ey) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm(&[wx - t * ex, wy - t * ey])
}

fn winding_number(p: [f64; 2], vertices: &[[f64; 2]]) -> i32 {
    let mut wn = 0;
    for (i, &a) in vertices.iter().enumerate() {
        let b = vertices[(i + 1) % vertices.len()];
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]);
        if a[1] <= p[1] {
            if b[1] > p[1] && cross > 0.0 {
                wn += 1;
            }
        } else if b[1] <= p[1] && cross < 0.0 {
            wn -= 1;
        }
    }
    wn
}

fn signed_area(vertices: &[[f64; 2]]) -> f64 {
    0.5 * vertices
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let b = vertices[(i + 1) % vertices.len()];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

fn box_sdf(p: &[f64], center: &[f64], half: &[f64]) -> f64 {
    let q: Vec<f64> = p
        .iter()
        .zip(center)
        .zip(half)
        .map(|((&p, &c), &h)| (p - c).abs() - h)
        .collect();
    let outside: Vec<f64> = q.iter().map(|v| v.max(0.0)).collect();
    let inside = q.iter().copied().fold(f64::NEG_INFINITY, f64::max).min(0.0);
    norm(&outside) + inside
}

impl SdfShape {
    pub fn dim(&self) -> usize {
        match self {
            SdfShape::Circle2d { .. } | SdfShape::Box2d { .. } | SdfShape::Polygon2d { .. } => 2,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SdfShape::Circle2d { .. } => "circle2d",
            SdfShape::Box2d { .. } => "box2d",
            SdfShape::Polygon2d { .. } => "polygon2d",
            SdfShape::Sphere3d { .. } => "sphere3d",
            SdfShape::Torus3d { .. } => "torus3d",
            SdfShape::Box3d { .. } => "box3d",
        }
    }

    /// Builds a shape from its kind name and a flat parameter list:
    ///
    /// - `circle2d`: `r` or `cx cy r`
    /// - `box2d`: `hx hy` or `cx cy hx hy`
    /// - `polygon2d`: `x0 y0 x1 y1 ...` (at least three vertices)
    /// - `sphere3d`: `r` or `cx cy cz r`
    /// - `torus3d`: `R r` or `cx cy cz R r`
    /// - `box3d`: `hx hy hz` or `cx cy cz hx hy hz`
    pub fn from_params(kind: &str, p: &[f64]) -> Result<Self> {
        let bad = || {
            Error::InvalidConfig(format!(
                "wrong parameter count {} for shape '{kind}'",
                p.len()
            ))
        };
        let shape = match (kind, p.len()) {
            ("circle2d", 1) => SdfShape::Circle2d {
                center: [0.0; 2],
                radius: p[0],
            },
            ("circle2d", 3) => SdfShape::Circle2d {
                center: [p[0], p[1]],
                radius: p[2],
            },
            ("box2d", 2) => SdfShape::Box2d {
                center: [0.0; 2],
                half: [p[0], p[1]],
            },
            ("box2d", 4) => SdfShape::Box2d {
                center: [p[0], p[1]],
                half: [p[2], p[3]],
            },
            ("polygon2d", n) if n >= 6 && n % 2 == 0 => SdfShape::Polygon2d {
                vertices: p.chunks_exact(2).map(|v| [v[0], v[1]]).collect(),
            },
            ("sphere3d", 1) => SdfShape::Sphere3d {
                center: [0.0; 3],
                radius: p[0],
            },
            ("sphere3d", 4) => SdfShape::Sphere3d {
                center: [p[0], p[1], p[2]],
                radius: p[3],
            },
            ("torus3d", 2) => SdfShape::Torus3d {
                center: [0.0; 3],
                major: p[0],
                minor: p[1],
            },
            ("torus3d", 5) => SdfShape::Torus3d {
                center: [p[0], p[1], p[2]],
                major: p[3],
                minor: p[4],
            },
            ("box3d", 3) => SdfShape::Box3d {
                center: [0.0; 3],
                half: [p[0], p[1], p[2]],
            },
            ("box3d", 6) => SdfShape::Box3d {
                center: [p[0], p[1], p[2]],
                half: [p[3], p[4], p[5]],
            },
            ("circle2d" | "box2d" | "polygon2d" | "sphere3d" | "torus3d" | "box3d", _) => {
                return Err(bad())
            }
            _ => return Err(Error::InvalidConfig(format!("unknown shape kind '{kind}'"))),
        };
        shape.validate()?;
        Ok(shape)
    }

    /// Checks positivity of sizes and that the geometry lies inside `[-1, 1]^dim`.
    pub fn validate(&self) -> Result<()> {
        let fits = |c: &[f64], ext: &[f64]| {
            c.iter()
                .zip(ext)
                .all(|(&c, &e)| e > 0.0 && c - e >= -1.0 && c + e <= 1.0)
        };
        let ok = match self {
            SdfShape::Circle2d { center, radius } => fits(center, &[*radius; 2]),
            SdfShape::Box2d { center, half } => fits(center, half),
            SdfShape::Polygon2d { vertices } => {
                vertices.len() >= 3
                    && signed_area(vertices).abs() > 1e-12
                    && vertices.iter().flatten().all(|v| (-1.0..=1.0).contains(v))
            }
            SdfShape::Sphere3d { center, radius } => fits(center, &[*radius; 3]),
            SdfShape::Torus3d {
                center,
                major,
                minor,
            } => {
                *minor > 0.0
                    && major > minor
                    && fits(center, &[major + minor, major + minor, *minor])
            }
            SdfShape::Box3d { center, half } => fits(center, half),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "{} must be non-degenerate and fit inside [-1, 1]^{}",
                self.kind(),
                self.dim()
            )))
        }
    }

    /// Exact signed distance at `p` (length `dim()`), negative inside.
    pub fn sdf(&self, p: &[f64]) -> f64 {
        match self {
            SdfShape::Circle2d { center, radius } => {
                norm(&[p[0] - center[0], p[1] - center[1]]) - radius
            }
            SdfShape::Box2d { center, half } => box_sdf(p, center, half),
            SdfShape::Polygon2d { vertices } => {
                let q = [p[0], p[1]];
                let d = vertices
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| segment_distance(q, a, vertices[(i + 1) % vertices.len()]))
                    .fold(f64::INFINITY, f64::min);
                if winding_number(q, vertices) != 0 {
                    -d
                } else {
                    d
                }
            }
            SdfShape::Sphere3d { center, radius } => {
                norm(&[p[0] - center[0], p[1] - center[1], p[2] - center[2]]) - radius
            }
            SdfShape::Torus3d {
                center,
                major,
                minor,
            } => {
                let (x, y, z) = (p[0] - center[0], p[1] - center[1], p[2] - center[2]);
                norm(&[norm(&[x, y]) - major, z]) - minor
            }
            SdfShape::Box3d { center, half } => box_sdf(p, center, half),
        }
    }

    /// Normalised central-difference gradient of the SDF at `p`.
    pub fn gradient(&self, p: &[f64]) -> Vec<f64> {
        const H: f64 = 1e-6;
        let mut q = p.to_vec();
        let mut g: Vec<f64> = (0..p.len())
            .map(|i| {
                q[i] = p[i] + H;
                let plus = self.sdf(&q);
                q[i] = p[i] - H;
                let minus = self.sdf(&q);
                q[i] = p[i];
                (plus - minus) / (2.0 * H)
            })
            .collect();
        let n = norm(&g);
        if n > 0.0 {
            g.iter_mut().for_each(|v| *v /= n);
        }
        g
    }

    /// A point drawn uniformly (by length/area) from the zero level set, with
    /// its outward unit normal.
    pub fn sample_surface<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        match self {
            SdfShape::Circle2d { center, radius } => {
                let a = rng.random_range(0.0..TAU);
                let (s, c) = a.sin_cos();
                (
                    vec![center[0] + radius * c, center[1] + radius * s],
                    vec![c, s],
                )
            }
            SdfShape::Box2d { center, half } => {
                let (hx, hy) = (half[0], half[1]);
                let total = 4.0 * (hx + hy);
                let u = rng.random_range(0.0..total);
                let t: f64 = rng.random_range(-1.0..=1.0);
                let (p, n) = if u < 2.0 * hx {
                    ([t * hx, hy], [0.0, 1.0])
                } else if u < 4.0 * hx {
                    ([t * hx, -hy], [0.0, -1.0])
                } else if u < 4.0 * hx + 2.0 * hy {
                    ([hx, t * hy], [1.0, 0.0])
                } else {
                    ([-hx, t * hy], [-1.0, 0.0])
                };
                (vec![center[0] + p[0], center[1] + p[1]], n.to_vec())
            }
            SdfShape::Polygon2d { vertices } => {
                let lengths: Vec<f64> = vertices
                    .iter()
                    .enumerate()
                    .map(|(i, a)| {
                        let b = vertices[(i + 1) % vertices.len()];
                        norm(&[b[0] - a[0], b[1] - a[1]])
                    })
                    .collect();
                let mut u = rng.random_range(0.0..lengths.iter().sum::<f64>());
                let mut edge = lengths.len() - 1;
                for (i, &l) in lengths.iter().enumerate() {
                    if u < l {
                        edge = i;
                        break;
                    }
                    u -= l;
                }
                let a = vertices[edge];
                let b = vertices[(edge + 1) % vertices.len()];
                let t = rng.random_range(0.0..=1.0);
                let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
                let len = lengths[edge];
                // outward normal of a counter-clockwise edge is (ey, -ex)
                let orient = if signed_area(vertices) > 0.0 {
                    1.0
                } else {
                    -1.0
                };
                (
                    vec![a[0] + t * ex, a[1] + t * ey],
                    vec![orient * ey / len, -orient * ex / len],
                )
            }
            SdfShape::Sphere3d { center, radius } => {
                let n = loop {
                    let v: [f64; 3] = [
                        rng.sample(StandardNormal),
                        rng.sample(StandardNormal),
                        rng.sample(StandardNormal),
                    ];
                    let len = norm(&v);
                    if len > 1e-12 {
                        break [v[0] / len, v[1] / len, v[2] / len];
                    }
                };
                (
                    (0..3).map(|i| center[i] + radius * n[i]).collect(),
                    n.to_vec(),
                )
            }
            SdfShape::Torus3d {
                center,
                major,
                minor,
            } => {
                // area element is proportional to (R + r cos v)
                let v = loop {
                    let v = rng.random_range(0.0..TAU);
                    let accept = (major + minor * v.cos()) / (major + minor);
                    if rng.random_range(0.0..1.0) < accept {
                        break v;
                    }
                };
                let u = rng.random_range(0.0..TAU);
                let (su, cu) = u.sin_cos();
                let (sv, cv) = v.sin_cos();
                let ring = major + minor * cv;
                (
                    vec![
                        center[0] + ring * cu,
                        center[1] + ring * su,
                        center[2] + minor * sv,
                    ],
                    vec![cv * cu, cv * su, sv],
                )
            }
            SdfShape::Box3d { center, half } => {
                let areas = [half[1] * half[2], half[0] * half[2], half[0] * half[1]];
                let total: f64 = areas.iter().sum::<f64>() * 2.0;
                let mut u = rng.random_range(0.0..total);
                let mut axis = 2;
                let mut sign = 1.0;
                'pick: for (a, &area) in areas.iter().enumerate() {
                    for s in [1.0, -1.0] {
                        if u < area {
                            axis = a;
                            sign = s;
                            break 'pick;
                        }
                        u -= area;
                    }
                }
                let mut p = [0.0; 3];
                let mut n = [0.0; 3];
                for i in 0..3 {
                    p[i] = if i == axis {
                        sign * half[i]
                    } else {
                        rng.random_range(-half[i]..=half[i])
                    };
                }
                n[axis] = sign;
                ((0..3).map(|i| center[i] + p[i]).collect(), n.to_vec())
            }
        }
    }

    /// Length (2D) or area (3D) of the zero level set.
    pub fn surface_measure(&self) -> f64 {
        match self {
            SdfShape::Circle2d { radius, .. } => TAU * radius,
            SdfShape::Box2d { half, .. } => 4.0 * (half[0] + half[1]),
            SdfShape::Polygon2d { vertices } => vertices
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let b = vertices[(i + 1) % vertices.len()];
                    norm(&[b[0] - a[0], b[1] - a[1]])
                })
                .sum(),
            SdfShape::Sphere3d { radius, .. } => 4.0 * PI * radius * radius,
            SdfShape::Torus3d { major, minor, .. } => 4.0 * PI * PI * major * minor,
            SdfShape::Box3d { half, .. } => {
                8.0 * (half[0] * half[1] + half[1] * half[2] + half[0] * half[2])
            }
        }
    }
}

impl fmt::Display for SdfShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind())
    }
}

impl FromStr for SdfShape {
    type Err = Error;

    /// `"<kind> p0 p1 ..."`, whitespace or comma separated.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty());
        let kind = parts
            .next()
            .ok_or_else(|| Error::InvalidConfig("empty shape description".into()))?;
        let params = parts
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad shape parameter '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        SdfShape::from_params(kind, &params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{rng_for, Stream};

    fn shapes() -> Vec<SdfShape> {
        vec![
            "circle2d 0.1 -0.2 0.5".parse().unwrap(),
            "box2d 0.6 0.3".parse().unwrap(),
            "polygon2d -0.5 -0.5 0.5 -0.5 0 0.6".parse().unwrap(),
            "sphere3d 0.5".parse().unwrap(),
            "torus3d 0.5 0.2".parse().unwrap(),
            "box3d 0.5 0.4 0.3".parse().unwrap(),
        ]
    }

    #[test]
    fn closed_form_examples() {
        let circle = SdfShape::from_params("circle2d", &[0.5]).unwrap();
        assert_eq!(circle.sdf(&[0.0, 0.0]), -0.5);
        let sphere = SdfShape::from_params("sphere3d", &[0.4]).unwrap();
        assert!((sphere.sdf(&[0.3, 0.4, 0.0]) - 0.1).abs() < 1e-15);
        let b = SdfShape::from_params("box2d", &[0.6, 0.3]).unwrap();
        assert_eq!(b.sdf(&[0.0, 0.0]), -0.3);
        assert!((b.sdf(&[0.9, 0.7]) - 0.5).abs() < 1e-15);
        let tri = SdfShape::from_params("polygon2d", &[-0.5, -0.5, 0.5, -0.5, 0.0, 0.6]).unwrap();
        assert!(tri.sdf(&[0.0, 0.0]) < 0.0);
        assert!((tri.sdf(&[0.0, -0.7]) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn polygon_orientation_does_not_matter() {
        let ccw = SdfShape::from_params("polygon2d", &[-0.5, -0.5, 0.5, -0.5, 0.0, 0.6]).unwrap();
        let cw = SdfShape::from_params("polygon2d", &[0.0, 0.6, 0.5, -0.5, -0.5, -0.5]).unwrap();
        for p in [[0.0, 0.0], [0.7, 0.1], [-0.2, -0.45]] {
            assert!((ccw.sdf(&p) - cw.sdf(&p)).abs() < 1e-15);
        }
        let mut rng = rng_for(0, Stream::Sampler);
        for shape in [&ccw, &cw] {
            for _ in 0..50 {
                let (p, n) = shape.sample_surface(&mut rng);
                let out: Vec<f64> = p.iter().zip(&n).map(|(a, b)| a + 1e-3 * b).collect();
                assert!(shape.sdf(&out) > 0.0);
            }
        }
    }

    #[test]
    fn surface_samples_are_on_surface_with_outward_normals() {
        let mut rng = rng_for(9, Stream::Sampler);
        for shape in shapes() {
            for _ in 0..200 {
                let (p, n) = shape.sample_surface(&mut rng);
                assert!(shape.sdf(&p).abs() < 1e-12, "{shape:?} {p:?}");
                assert!((norm(&n) - 1.0).abs() < 1e-12);
                let out: Vec<f64> = p.iter().zip(&n).map(|(a, b)| a + 1e-4 * b).collect();
                assert!(shape.sdf(&out) > 0.0, "{shape:?}");
            }
        }
    }

    #[test]
    fn rejects_shapes_outside_the_box() {
        assert!(SdfShape::from_params("circle2d", &[0.5, 0.0, 0.6]).is_err());
        assert!(SdfShape::from_params("sphere3d", &[-0.1]).is_err());
        assert!(SdfShape::from_params("torus3d", &[0.2, 0.3]).is_err());
        assert!(SdfShape::from_params("box3d", &[0.5, 0.5]).is_err());
        assert!(SdfShape::from_params("hexagon", &[0.5]).is_err());
        assert!("".parse::<SdfShape>().is_err());
    }

    /// Inside a box the SDF has a ridge where the two nearest faces tie.
    fn near_box_medial_axis(shape: &SdfShape, p: &[f64]) -> bool {
        let (center, half): (&[f64], &[f64]) = match shape {
            SdfShape::Box2d { center, half } => (center, half),
            SdfShape::Box3d { center, half } => (center, half),
            _ => return false,
        };
        let mut q: Vec<f64> = p
            .iter()
            .zip(center)
            .zip(half)
            .map(|((p, c), h)| (p - c).abs() - h)
            .collect();
        if q.iter().any(|&v| v > 0.0) {
            return false;
        }
        q.sort_by(|a, b| b.partial_cmp(a).unwrap());
        q[0] - q[1] < 1e-4
    }

    #[test]
    fn eikonal_property_off_surface() {
        let mut rng = rng_for(4, Stream::Sampler);
        let kinds = [
            SdfShape::from_params("circle2d", &[0.1, 0.0, 0.5]).unwrap(),
            SdfShape::from_params("sphere3d", &[0.5]).unwrap(),
            SdfShape::from_params("box2d", &[0.6, 0.3]).unwrap(),
            SdfShape::from_params("box3d", &[0.5, 0.4, 0.3]).unwrap(),
        ];
        for shape in kinds {
            let mut checked = 0;
            while checked < 1000 {
                let p: Vec<f64> = (0..shape.dim())
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();
                if shape.sdf(&p).abs() < 1e-3 || near_box_medial_axis(&shape, &p) {
                    continue;
                }
                // raw central differences, not normalised
                let h = 1e-6;
                let mut q = p.clone();
                let g2: f64 = (0..p.len())
                    .map(|i| {
                        q[i] = p[i] + h;
                        let a = shape.sdf(&q);
                        q[i] = p[i] - h;
                        let b = shape.sdf(&q);
                        q[i] = p[i];
                        ((a - b) / (2.0 * h)).powi(2)
                    })
                    .sum();
                let g = g2.sqrt();
                assert!((0.99..=1.01).contains(&g), "{shape:?} {p:?} |grad| = {g}");
                checked += 1;
            }
        }
    }
}
