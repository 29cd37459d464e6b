//! Minimal double-double arithmetic for the hexagon turtle walk.
//!
//! The closure of the walk is sensitive to the side lengths roughly like
//! `e^{3a}`, so at `a = 8` plain `f64` leaves residuals near 1e−7.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        // one Newton step from the f64 root doubles the digits
        let x = self.hi.sqrt();
        let (p, e) = two_prod(x, x);
        let r = (self - Dd { hi: p, lo: e }).to_f64() / (2.0 * x);
        let (hi, lo) = quick_two_sum(x, r);
        Dd { hi, lo }
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from_f64(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

pub(crate) type DdMat = [[Dd; 3]; 3];

pub(crate) fn identity() -> DdMat {
    let mut m = [[Dd::ZERO; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Dd::ONE;
    }
    m
}

pub(crate) fn matmul(a: &DdMat, b: &DdMat) -> DdMat {
    let mut c = [[Dd::ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

pub(crate) type DdVec = [Dd; 3];

pub(crate) fn mink(p: &DdVec, q: &DdVec) -> Dd {
    p[0] * q[0] + p[1] * q[1] - p[2] * q[2]
}

pub(crate) fn cross(p: &DdVec, q: &DdVec) -> DdVec {
    [
        p[1] * q[2] - p[2] * q[1],
        p[2] * q[0] - p[0] * q[2],
        p[0] * q[1] - p[1] * q[0],
    ]
}

/// Scales to `|<v,v>| = 1`.
pub(crate) fn normalize(v: DdVec) -> DdVec {
    let s = Dd::ONE / mink(&v, &v).abs().sqrt();
    v.map(|x| x * s)
}

pub(crate) fn apply(m: &DdMat, v: &DdVec) -> DdVec {
    [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
}

/// Inverse of the pure boost taking the origin to `p`, i.e. the boost taking `p` to the origin.
pub(crate) fn boost_from(p: &DdVec) -> DdMat {
    let [x, y, z] = *p;
    let k = Dd::ONE / (Dd::ONE + z);
    [
        [Dd::ONE + x * x * k, x * y * k, -x],
        [x * y * k, Dd::ONE + y * y * k, -y],
        [-x, -y, z],
    ]
}
