//! Hyperboloid model of the hyperbolic plane.
//!
//! Points live on the upper sheet of `x1² + x2² − x3² = −1`, geodesics are
//! represented by unit spacelike poles `n` (the geodesic is `{p : ⟨p,n⟩ = 0}`)
//! and isometries are 3×3 matrices preserving the form `J = diag(1, 1, −1)`.
//! Reflections are ordinary matrices with negative determinant, so the
//! reflection groups and developing frames used elsewhere need no special
//! cases.

use std::f64::consts::PI;
use std::ops::Mul;

use serde::Serialize;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Tolerance for the point / pole normalization invariants.
pub const NORM_TOL: f64 = 1e-9;
/// Arguments of arccosh in `[1 − ACOSH_SLACK, 1]` are treated as 1.
pub const ACOSH_SLACK: f64 = 1e-6;
/// Default grid for [`Isometry::key`].
pub const KEY_GRID: f64 = 1e-6;
/// Residual above which an isometry is considered unrecoverable.
pub const DRIFT_LIMIT: f64 = 1e-3;

/// Minkowski form `p1 q1 + p2 q2 − p3 q3`.
#[inline]
pub fn mink(p: &Vec3, q: &Vec3) -> f64 {
    p[0] * q[0] + p[1] * q[1] - p[2] * q[2]
}

#[inline]
fn cross(p: &Vec3, q: &Vec3) -> Vec3 {
    [
        p[1] * q[2] - p[2] * q[1],
        p[2] * q[0] - p[0] * q[2],
        p[0] * q[1] - p[1] * q[0],
    ]
}

#[inline]
fn scale(v: &Vec3, s: f64) -> Vec3 {
    [v[0] * s, v[1] * s, v[2] * s]
}

/// arccosh with the argument clamped to `≥ 1`.
#[inline]
pub(crate) fn acosh_clamped(x: f64) -> f64 {
    if x <= 1.0 {
        0.0
    } else {
        x.acosh()
    }
}

/// A point of ℍ² on the upper sheet of the hyperboloid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Point(Vec3);

impl Point {
    /// The basepoint `(0, 0, 1)`.
    pub const ORIGIN: Point = Point([0.0, 0.0, 1.0]);

    /// Validates `⟨p,p⟩ = −1` (within 1e−9) and `x3 > 0`.
    pub fn new(coords: Vec3) -> Result<Self> {
        let p = Point(coords);
        if !p.is_valid() {
            return Err(Error::InvalidPoint {
                value: -mink(&coords, &coords),
            });
        }
        Ok(p)
    }

    /// Rescales a future-pointing or past-pointing timelike vector onto the upper sheet.
    pub fn from_timelike(v: Vec3) -> Result<Self> {
        let q = -mink(&v, &v);
        if !(q > 0.0) {
            return Err(Error::InvalidPoint { value: q });
        }
        let s = q.sqrt().recip() * v[2].signum();
        Ok(Point(scale(&v, s)))
    }

    #[inline]
    pub(crate) fn from_raw(v: Vec3) -> Self {
        Point(v)
    }

    #[inline]
    pub fn coords(&self) -> &Vec3 {
        &self.0
    }

    /// Relative check of the hyperboloid invariants.
    pub fn is_valid(&self) -> bool {
        let v = &self.0;
        let scale = v[2].abs().max(1.0);
        v[2] > 0.0 && (mink(v, v) + 1.0).abs() <= NORM_TOL * scale * scale
    }
}

/// Unit spacelike vector `n` representing the geodesic `{p : ⟨p,n⟩ = 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeodesicPole(Vec3);

impl GeodesicPole {
    pub fn new(coords: Vec3) -> Result<Self> {
        let q = mink(&coords, &coords);
        if (q - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "pole must satisfy <n,n> = 1, got {q}"
            )));
        }
        Ok(GeodesicPole(coords))
    }

    pub fn from_spacelike(v: Vec3) -> Result<Self> {
        let q = mink(&v, &v);
        if !(q > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "vector is not spacelike: <v,v> = {q}"
            )));
        }
        Ok(GeodesicPole(scale(&v, q.sqrt().recip())))
    }

    #[inline]
    pub(crate) fn from_raw(v: Vec3) -> Self {
        GeodesicPole(v)
    }

    #[inline]
    pub fn coords(&self) -> &Vec3 {
        &self.0
    }

    /// Same geodesic, opposite side labelled "beyond".
    pub fn negated(&self) -> Self {
        GeodesicPole(scale(&self.0, -1.0))
    }
}

/// Hyperbolic distance, `arccosh(−⟨p,q⟩)`.
pub fn dist(p: &Point, q: &Point) -> Result<f64> {
    let c = -mink(&p.0, &q.0);
    if c < 1.0 - ACOSH_SLACK {
        return Err(Error::InvalidPoint { value: c });
    }
    // 2 asinh(|p − q| / 2) equals arccosh(−⟨p,q⟩) but keeps digits for nearby points
    let d = [p.0[0] - q.0[0], p.0[1] - q.0[1], p.0[2] - q.0[2]];
    let chord = mink(&d, &d).max(0.0).sqrt();
    Ok(2.0 * (0.5 * chord).asinh())
}

/// Distance from `p` to the full geodesic line with pole `n`.
#[inline]
pub fn dist_to_geodesic(p: &Point, n: &GeodesicPole) -> f64 {
    mink(&p.0, &n.0).abs().asinh()
}

/// Distance from `p` to the geodesic segment `[u, v]` lying on the line with pole `n`.
pub fn dist_to_segment(p: &Point, u: &Point, v: &Point, n: &GeodesicPole) -> f64 {
    let s = mink(&p.0, &n.0);
    // orthogonal projection onto the line, then rescale onto the hyperboloid
    let foot = [
        p.0[0] - s * n.0[0],
        p.0[1] - s * n.0[1],
        p.0[2] - s * n.0[2],
    ];
    let du = dist(p, u).unwrap_or(f64::INFINITY);
    let dv = dist(p, v).unwrap_or(f64::INFINITY);
    let Ok(foot) = Point::from_timelike(foot) else {
        return du.min(dv);
    };
    let len = dist(u, v).unwrap_or(0.0);
    let via = dist(u, &foot).unwrap_or(f64::INFINITY) + dist(&foot, v).unwrap_or(f64::INFINITY);
    if via <= len + 1e-9 * len.max(1.0) {
        dist_to_geodesic(p, n)
    } else {
        du.min(dv)
    }
}

/// Pole of the geodesic through `p` and `q`, signed so that `⟨reference, n⟩ < 0`
/// (default reference: the origin).
pub fn geodesic_through(p: &Point, q: &Point, reference: Option<&Point>) -> Result<GeodesicPole> {
    if dist(p, q)? <= NORM_TOL {
        return Err(Error::CoincidentPoints {
            tolerance: NORM_TOL,
        });
    }
    let c = cross(&p.0, &q.0);
    let n = GeodesicPole::from_spacelike([c[0], c[1], -c[2]])?;
    let r = reference.unwrap_or(&Point::ORIGIN);
    Ok(if mink(&r.0, &n.0) > 0.0 {
        n.negated()
    } else {
        n
    })
}

/// Lorentz transformation of ℍ², possibly orientation reversing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Isometry {
    m: Mat3,
    det_sign: i8,
}

/// Hashable rounding of an isometry's entries; see [`Isometry::key`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IsometryKey {
    entries: [i128; 9],
    det_sign: i8,
}

fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

#[inline]
fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        det_sign: 1,
    };

    /// Wraps a matrix after checking it preserves `J` and the upper sheet.
    pub fn from_matrix(m: Mat3) -> Result<Self> {
        let g = Isometry {
            m,
            det_sign: if det3(&m) < 0.0 { -1 } else { 1 },
        };
        let residual = g.lorentz_residual();
        if residual > 1e-8 || m[2][2] <= 0.0 {
            return Err(Error::Drift { residual });
        }
        Ok(g)
    }

    #[inline]
    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }

    #[inline]
    pub fn det_sign(&self) -> i8 {
        self.det_sign
    }

    /// Hyperbolic translation along `{x2 = 0}` moving the origin by `t`.
    pub fn translate_x(t: f64) -> Self {
        let (s, c) = (t.sinh(), t.cosh());
        Isometry {
            m: [[c, 0.0, s], [0.0, 1.0, 0.0], [s, 0.0, c]],
            det_sign: 1,
        }
    }

    /// Rotation by `theta` about the origin.
    pub fn rotate_o(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Isometry {
            m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
            det_sign: 1,
        }
    }

    /// Reflection `p ↦ p − 2⟨p,n⟩n` in the geodesic with pole `n`.
    pub fn reflection(n: &GeodesicPole) -> Self {
        let n = &n.0;
        let jn = [n[0], n[1], -n[2]];
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = if i == j { 1.0 } else { 0.0 } - 2.0 * n[i] * jn[j];
            }
        }
        Isometry { m, det_sign: -1 }
    }

    /// The pure boost taking the origin to `p`.
    pub fn boost_to(p: &Point) -> Self {
        let [x, y, z] = p.0;
        let k = 1.0 / (1.0 + z);
        Isometry {
            m: [
                [1.0 + x * x * k, x * y * k, x],
                [x * y * k, 1.0 + y * y * k, y],
                [x, y, z],
            ],
            det_sign: 1,
        }
    }

    /// `self ∘ other`.
    #[inline]
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry {
            m: matmul(&self.m, &other.m),
            det_sign: self.det_sign * other.det_sign,
        }
    }

    /// `J mᵀ J`.
    pub fn inverse(&self) -> Isometry {
        let m = &self.m;
        let sgn = |i: usize| if i == 2 { -1.0 } else { 1.0 };
        let mut inv = [[0.0; 3]; 3];
        for (i, row) in inv.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = sgn(i) * m[j][i] * sgn(j);
            }
        }
        Isometry {
            m: inv,
            det_sign: self.det_sign,
        }
    }

    #[inline]
    pub fn apply_vec(&self, v: &Vec3) -> Vec3 {
        let m = &self.m;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    #[inline]
    pub fn apply(&self, p: &Point) -> Point {
        Point(self.apply_vec(&p.0))
    }

    #[inline]
    pub fn apply_pole(&self, n: &GeodesicPole) -> GeodesicPole {
        GeodesicPole(self.apply_vec(&n.0))
    }

    /// Image of the origin (third column).
    #[inline]
    pub fn origin_image(&self) -> Point {
        Point([self.m[0][2], self.m[1][2], self.m[2][2]])
    }

    /// Distance from the origin to the image of the origin.
    #[inline]
    pub fn displacement(&self) -> f64 {
        acosh_clamped(self.m[2][2])
    }

    /// `max |mᵀJm − J|`, relative to the squared entry scale for large matrices.
    pub fn lorentz_residual(&self) -> f64 {
        let m = &self.m;
        let mut worst: f64 = 0.0;
        let mut big: f64 = 1.0;
        for row in m {
            for e in row {
                big = big.max(e.abs());
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let col_i = [m[0][i], m[1][i], m[2][i]];
                let col_j = [m[0][j], m[1][j], m[2][j]];
                let target = match (i == j, i) {
                    (true, 2) => -1.0,
                    (true, _) => 1.0,
                    _ => 0.0,
                };
                worst = worst.max((mink(&col_i, &col_j) - target).abs());
            }
        }
        worst / (big * big)
    }

    /// Gram–Schmidt on the columns with respect to `J`, starting from the
    /// timelike column (the image of the origin).
    pub fn renormalize(&self) -> Result<Isometry> {
        let residual = self.lorentz_residual();
        if !(residual <= DRIFT_LIMIT) {
            return Err(Error::Drift { residual });
        }
        let m = &self.m;
        let col = |j: usize| [m[0][j], m[1][j], m[2][j]];
        let (c0, c1, c2) = (col(0), col(1), col(2));

        let u = Point::from_timelike(c2)
            .map_err(|_| Error::Drift { residual })?
            .0;
        let add = |a: &Vec3, s: f64, b: &Vec3| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];

        let e0 = add(&c0, mink(&c0, &u), &u);
        let e0 = scale(&e0, mink(&e0, &e0).sqrt().recip());
        let e1 = add(&c1, mink(&c1, &u), &u);
        let e1 = add(&e1, -mink(&e1, &e0), &e0);
        let e1 = scale(&e1, mink(&e1, &e1).sqrt().recip());

        let out = [
            [e0[0], e1[0], u[0]],
            [e0[1], e1[1], u[1]],
            [e0[2], e1[2], u[2]],
        ];
        let g = Isometry {
            m: out,
            det_sign: if det3(&out) < 0.0 { -1 } else { 1 },
        };
        debug_assert!(g.lorentz_residual() < 1e-10, "renormalize residual");
        Ok(g)
    }

    /// Entries rounded to the nearest multiple of `grid`, plus orientation.
    pub fn key(&self, grid: f64) -> IsometryKey {
        let mut entries = [0i128; 9];
        for (k, e) in self.m.iter().flatten().enumerate() {
            entries[k] = (e / grid).round() as i128;
        }
        IsometryKey {
            entries,
            det_sign: self.det_sign,
        }
    }

    /// Maximum entrywise difference.
    pub fn max_entry_diff(&self, other: &Isometry) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Mul for &Isometry {
    type Output = Isometry;
    fn mul(self, rhs: &Isometry) -> Isometry {
        self.compose(rhs)
    }
}

impl Mul for Isometry {
    type Output = Isometry;
    fn mul(self, rhs: Isometry) -> Isometry {
        self.compose(&rhs)
    }
}

/// Rotation taking one a-side of a 3-fold symmetric configuration to the next.
pub(crate) fn third_turn(sign: f64) -> Isometry {
    Isometry::rotate_o(sign * 2.0 * PI / 3.0)
}
