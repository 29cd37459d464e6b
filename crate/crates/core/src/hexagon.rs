//! The symmetric right-angled hexagon whose alternating sides have length `a`.
//!
//! The hexagon is built by a turtle walk, then moved so that its incenter
//! (the midpoint of the pants) sits at the origin. The three "a-sides" carry
//! the reflection generators of the hextree group; the dihedral symmetries
//! of the hexagon relabel them.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::dd::{self, Dd, DdMat};
use crate::error::{Error, Result};
use crate::hyp::{dist, dist_to_geodesic, mink, third_turn, GeodesicPole, Isometry, Point};

/// Exterior turn at every vertex.
pub const TURN: f64 = FRAC_PI_2;

const CLOSURE_TOL: f64 = 1e-9;

/// Length of the other three sides, `arccosh(cosh a / (cosh a − 1))`.
pub fn alternate_side(a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "side length a must be positive, got {a}"
        )));
    }
    // cosh b = 1 + x with x = 1 / (cosh a − 1); arccosh(1 + x) written to keep digits for large a
    let x = 1.0 / (a.cosh() - 1.0);
    Ok((x + (x * (2.0 + x)).sqrt()).ln_1p())
}

/// Symmetric right-angled hexagon, centered at the origin.
#[derive(Clone, Debug)]
pub struct Hexagon {
    a: f64,
    b: f64,
    vertices: [Point; 6],
    a_poles: [GeodesicPole; 3],
    b_poles: [GeodesicPole; 3],
    inradius_a: f64,
    inradius_b: f64,
    closure_residual: f64,
    reflections: [Isometry; 3],
    rotation: Isometry,
    flips: [Isometry; 3],
    glue: [[Isometry; 3]; 3],
}

/// Derived distances of the pants `P_a`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PantsConstants {
    /// Distance between the midpoints of two pants glued along one boundary.
    pub adjacent_midpoint_distance: f64,
    /// Upper bound on the distance from any point of a pants to its midpoint.
    pub eccentricity_bound: f64,
}

/// Invariant residuals measured on a built hexagon.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Residuals {
    pub closure: f64,
    pub side_identity: f64,
    pub max_angle: f64,
    pub side_lengths: f64,
    pub center_equidistance: f64,
}

impl Hexagon {
    pub fn build(a: f64) -> Result<Self> {
        let b = alternate_side(a)?;

        // Turtle walk in double-double: cosh/sinh of both sides are derived from
        // cosh a so that they satisfy the hexagon relation to ~32 digits.
        let one = Dd::ONE;
        let ca = Dd::from_f64(a.cosh());
        let sa = (ca * ca - one).sqrt();
        let cb = ca / (ca - one);
        let sb = (cb * cb - one).sqrt();
        let step = |c: Dd, s: Dd| -> DdMat {
            // translate_x(t) followed by an exact quarter turn
            let z = Dd::ZERO;
            [[z, -c, s], [one, z, z], [z, -s, c]]
        };
        let (step_a, step_b) = (step(ca, sa), step(cb, sb));
        let mut frame = dd::identity();
        let mut raw = [[Dd::ZERO; 3]; 6];
        for (i, v) in raw.iter_mut().enumerate() {
            *v = [frame[0][2], frame[1][2], frame[2][2]];
            frame = dd::matmul(&frame, if i % 2 == 0 { &step_a } else { &step_b });
        }
        let id = dd::identity();
        let closure_residual = (0..9)
            .map(|k| (frame[k / 3][k % 3] - id[k / 3][k % 3]).abs().to_f64())
            .fold(0.0, f64::max);
        if !(closure_residual <= CLOSURE_TOL) {
            return Err(Error::HexagonClosure {
                residual: closure_residual,
            });
        }

        // In the Klein model the normalized vertex sum is inside the convex hexagon.
        let mut sum = [0.0; 3];
        for v in &raw {
            for k in 0..3 {
                sum[k] += v[k].to_f64();
            }
        }
        let inside = Point::from_timelike(sum)?;
        let mut poles = [[Dd::ZERO; 3]; 6];
        for (i, pole) in poles.iter_mut().enumerate() {
            let c = dd::cross(&raw[i], &raw[(i + 1) % 6]);
            let n = dd::normalize([c[0], c[1], -c[2]]);
            let outward = mink(inside.coords(), &n.map(Dd::to_f64)) < 0.0;
            *pole = if outward { n } else { n.map(|x| -x) };
        }

        // incenter: Lorentz-orthogonal to n1 − n2 and n2 − n3
        let diff = |p: &[Dd; 3], q: &[Dd; 3]| [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
        let c = dd::cross(&diff(&poles[0], &poles[2]), &diff(&poles[2], &poles[4]));
        let mut center = dd::normalize([c[0], c[1], -c[2]]);
        if center[2].to_f64() < 0.0 {
            center = center.map(|x| -x);
        }
        if !(dd::mink(&center, &center).to_f64() < 0.0) {
            return Err(Error::CenterOutside(
                "incenter system has no timelike solution".into(),
            ));
        }
        for (i, n) in poles.iter().enumerate() {
            if !(dd::mink(&center, n).to_f64() < 0.0) {
                return Err(Error::CenterOutside(format!("center lies beyond side {i}")));
            }
        }

        let recenter = dd::boost_from(&center);
        let vertices = raw.map(|v| Point::from_raw(dd::apply(&recenter, &v).map(Dd::to_f64)));
        let poles = poles.map(|n| GeodesicPole::from_raw(dd::apply(&recenter, &n).map(Dd::to_f64)));
        let a_poles = [poles[0], poles[2], poles[4]];
        let b_poles = [poles[1], poles[3], poles[5]];

        let o = Point::ORIGIN;
        let inradius_a = dist_to_geodesic(&o, &a_poles[0]);
        let inradius_b = dist_to_geodesic(&o, &b_poles[0]);

        let rotation = [1.0, -1.0]
            .into_iter()
            .map(third_turn)
            .find(|s| {
                (0..3).all(|i| pole_gap(&s.apply_pole(&a_poles[i]), &a_poles[(i + 1) % 3]) < 1e-9)
            })
            .ok_or_else(|| {
                Error::CenterOutside("no 3-fold rotation maps the a-sides cyclically".into())
            })?;

        let flips = [0, 1, 2].map(|k| {
            let (p, q) = (a_poles[(k + 1) % 3].coords(), a_poles[(k + 2) % 3].coords());
            let pole = GeodesicPole::from_spacelike([p[0] - q[0], p[1] - q[1], p[2] - q[2]])
                .expect("distinct ultraparallel poles");
            Isometry::reflection(&pole)
        });
        let reflections = a_poles.map(|n| Isometry::reflection(&n));

        let mut powers = [Isometry::IDENTITY; 3];
        powers[1] = rotation;
        powers[2] = rotation.compose(&rotation);
        let glue = [0usize, 1, 2].map(|j| {
            [0usize, 1, 2].map(|k| {
                reflections[j]
                    .compose(&powers[(j + 3 - k) % 3])
                    .compose(&flips[k])
            })
        });

        Ok(Hexagon {
            a,
            b,
            vertices,
            a_poles,
            b_poles,
            inradius_a,
            inradius_b,
            closure_residual,
            reflections,
            rotation,
            flips,
            glue,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Vertices in traversal order; side `i` joins vertex `i` to vertex `i + 1`.
    pub fn vertices(&self) -> &[Point; 6] {
        &self.vertices
    }

    /// Outward poles of the a-sides (sides 0, 2, 4).
    pub fn a_poles(&self) -> &[GeodesicPole; 3] {
        &self.a_poles
    }

    /// Outward poles of the b-sides (sides 1, 3, 5).
    pub fn b_poles(&self) -> &[GeodesicPole; 3] {
        &self.b_poles
    }

    /// All six poles in side order.
    pub fn poles(&self) -> [GeodesicPole; 6] {
        let (a, b) = (&self.a_poles, &self.b_poles);
        [a[0], b[0], a[1], b[1], a[2], b[2]]
    }

    /// The incenter, which is the origin by construction.
    pub fn center(&self) -> Point {
        Point::ORIGIN
    }

    pub fn inradius_a(&self) -> f64 {
        self.inradius_a
    }

    pub fn inradius_b(&self) -> f64 {
        self.inradius_b
    }

    /// Endpoints of a-side `i`.
    pub fn a_side_endpoints(&self, i: usize) -> (Point, Point) {
        (self.vertices[2 * i], self.vertices[(2 * i + 1) % 6])
    }

    /// Reflection in a-side `i`: the generator `r_i` of the hextree group.
    pub fn reflection(&self, i: usize) -> &Isometry {
        &self.reflections[i]
    }

    pub fn reflections(&self) -> &[Isometry; 3] {
        &self.reflections
    }

    /// Rotation by a third of a turn about the center taking a-side `i` to `i + 1`.
    pub fn rotation(&self) -> &Isometry {
        &self.rotation
    }

    /// Reflection symmetry fixing a-side `k` and swapping the other two.
    pub fn flip(&self, k: usize) -> &Isometry {
        &self.flips[k]
    }

    /// Frame increment for gluing side `j` of a developed pants to side `k` of its neighbour.
    ///
    /// `r_j ∘ σ^{(j−k) mod 3} ∘ ρ_k`: the neighbour's hexagon is the mirror image
    /// across side `j`, its side `k` lands on that side with endpoints matched, and
    /// the increment preserves orientation.
    #[inline]
    pub fn glue(&self, j: usize, k: usize) -> &Isometry {
        &self.glue[j][k]
    }

    /// Label of the side that leg `x` of the neighbour lands on under [`Hexagon::glue`].
    #[inline]
    pub fn glue_label(j: usize, k: usize, x: usize) -> usize {
        (j + k + 3 - x) % 3
    }

    pub fn closure_residual(&self) -> f64 {
        self.closure_residual
    }

    /// Sum of exterior turns of the turtle walk.
    pub fn total_turning(&self) -> f64 {
        6.0 * TURN
    }

    /// Area from Gauss–Bonnet: total turning minus 2π.
    pub fn area(&self) -> f64 {
        self.total_turning() - 2.0 * PI
    }

    pub fn pants_constants(&self) -> PantsConstants {
        let o = Point::ORIGIN;
        let to_vertex = self
            .vertices
            .iter()
            .map(|v| dist(&o, v).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        let mut spread: f64 = 0.0;
        for u in &self.vertices {
            for v in &self.vertices {
                spread = spread.max(dist(u, v).unwrap_or(f64::INFINITY));
            }
        }
        PantsConstants {
            adjacent_midpoint_distance: 2.0 * self.inradius_a,
            eccentricity_bound: to_vertex + spread,
        }
    }

    pub fn residuals(&self) -> Residuals {
        let (ca, cb) = (self.a.cosh(), self.b.cosh());
        let poles = self.poles();
        let max_angle = (0..6)
            .map(|i| mink(poles[i].coords(), poles[(i + 1) % 6].coords()).abs())
            .fold(0.0, f64::max);
        let side_lengths = (0..6)
            .map(|i| {
                let want = if i % 2 == 0 { self.a } else { self.b };
                let got = dist(&self.vertices[i], &self.vertices[(i + 1) % 6]).unwrap_or(f64::NAN);
                (got - want).abs()
            })
            .fold(0.0, f64::max);
        let o = Point::ORIGIN;
        let reach: Vec<f64> = self
            .a_poles
            .iter()
            .map(|n| mink(o.coords(), n.coords()).abs())
            .collect();
        let center_equidistance = reach.iter().fold(f64::MIN, |m, &x| m.max(x))
            - reach.iter().fold(f64::MAX, |m, &x| m.min(x));
        Residuals {
            closure: self.closure_residual,
            side_identity: (cb * (ca - 1.0) - ca).abs(),
            max_angle,
            side_lengths,
            center_equidistance,
        }
    }
}

/// Shorthand used by the CLI and tests.
pub fn pants_constants(a: f64) -> Result<PantsConstants> {
    Ok(Hexagon::build(a)?.pants_constants())
}

fn pole_gap(p: &GeodesicPole, q: &GeodesicPole) -> f64 {
    p.coords()
        .iter()
        .zip(q.coords())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
