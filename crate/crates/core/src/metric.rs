//! Midpoint distances on `S_{a,n}` and diameter bounds.
//!
//! Distances are found by developing pants into the plane, one hexagon per
//! pants, in best-first order of the distance from the source midpoint to the
//! mirror crossed last. Every midpoint beyond a mirror is at least as far as
//! that mirror, so a candidate distance becomes final once the frontier has
//! moved past it.

use std::cmp::{Ordering, Reverse};
use std::collections::hash_map::Entry as MapEntry;
use std::collections::{BinaryHeap, HashMap};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{graph_diameter, Genus, HalfEdge, Surface};
use crate::hyp::{Isometry, KEY_GRID};
use crate::rng;

pub const DEFAULT_STATE_CAP: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    /// `2ρ_a` times the graph eccentricity of the source, which bounds every distance.
    Auto,
    Radius(f64),
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub budget: Budget,
    pub cap: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: Budget::Auto,
            cap: DEFAULT_STATE_CAP,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FieldStatus {
    /// Every vertex is settled.
    Complete,
    /// The frontier passed the budget first; unsettled values are upper bounds.
    BudgetReached,
    /// The state cap was hit; unsettled values are upper bounds.
    CapReached,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceField {
    pub source: usize,
    /// Best distance found per vertex, `INFINITY` if none.
    pub dist: Vec<f64>,
    pub settled: Vec<bool>,
    pub budget_radius: f64,
    pub states: usize,
    pub status: FieldStatus,
}

impl DistanceField {
    /// Largest settled distance.
    pub fn eccentricity(&self) -> f64 {
        self.dist
            .iter()
            .zip(&self.settled)
            .filter(|(_, &s)| s)
            .map(|(&d, _)| d)
            .fold(0.0, f64::max)
    }

    pub fn is_complete(&self) -> bool {
        self.status == FieldStatus::Complete
    }
}

#[derive(Clone, Copy)]
struct Queued {
    entry: f64,
    id: usize,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.entry
            .total_cmp(&other.entry)
            .then(self.id.cmp(&other.id))
    }
}

struct DevState {
    vertex: usize,
    frame: Isometry,
    /// Leg the state was entered through; `None` at the source.
    entry_leg: Option<usize>,
}

/// Settles every vertex whose candidate lies below `bound` (or at it, if `inclusive`).
fn settle_below(
    bound: f64,
    inclusive: bool,
    cands: &mut BinaryHeap<Reverse<Queued>>,
    dist: &[f64],
    settled: &mut [bool],
    open: &mut usize,
) {
    while let Some(&Reverse(q)) = cands.peek() {
        if !(q.entry < bound || (inclusive && q.entry == bound)) {
            break;
        }
        cands.pop();
        if !settled[q.id] && q.entry == dist[q.id] {
            settled[q.id] = true;
            *open -= 1;
        }
    }
}

/// Dedup key of a developed pants: its midpoint on the key grid.
///
/// Distinct developed pants have distinct midpoints, so this identifies the
/// frame; a hit with a different frame is reported as a collision.
fn midpoint_key(frame: &Isometry) -> [i64; 3] {
    let m = frame.matrix();
    [m[0][2], m[1][2], m[2][2]].map(|x| (x / KEY_GRID).round() as i64)
}

/// Best-first development from the midpoint of `source`.
pub fn midpoint_distances(
    s: &Surface,
    source: usize,
    opts: &SearchOptions,
) -> Result<DistanceField> {
    let g = &s.graph;
    let verts = g.vertex_count();
    if source >= verts {
        return Err(Error::InvalidParameter(format!(
            "source {source} out of range for {verts} vertices"
        )));
    }
    let hex = &s.hexagon;
    let step = hex.pants_constants().adjacent_midpoint_distance;
    let budget = match opts.budget {
        Budget::Auto => {
            let ecc = g.eccentricity(source).ok_or(Error::Disconnected)?;
            step * ecc as f64 * (1.0 + 1e-9) + 1e-9
        }
        Budget::Radius(r) if r >= 0.0 => r,
        Budget::Radius(r) => {
            return Err(Error::InvalidParameter(format!(
                "budget must be ≥ 0, got {r}"
            )));
        }
    };

    let mut dist = vec![f64::INFINITY; verts];
    let mut settled = vec![false; verts];
    let mut open = verts;
    let mut cands: BinaryHeap<Reverse<Queued>> = BinaryHeap::new();
    let mut states = vec![DevState {
        vertex: source,
        frame: Isometry::IDENTITY,
        entry_leg: None,
    }];
    let mut seen: HashMap<(usize, [i64; 3]), usize> = HashMap::new();
    seen.insert((source, midpoint_key(&Isometry::IDENTITY)), 0);
    let mut frontier = BinaryHeap::from([Reverse(Queued { entry: 0.0, id: 0 })]);
    dist[source] = 0.0;
    cands.push(Reverse(Queued {
        entry: 0.0,
        id: source,
    }));

    let mut status = FieldStatus::Complete;
    while let Some(Reverse(q)) = frontier.pop() {
        settle_below(q.entry, false, &mut cands, &dist, &mut settled, &mut open);
        if open == 0 {
            break;
        }
        let (u, frame, back) = {
            let st = &states[q.id];
            (st.vertex, st.frame, st.entry_leg)
        };
        for j in 0..3 {
            if Some(j) == back {
                continue;
            }
            let pole = frame.apply_vec(hex.a_poles()[j].coords());
            let entry = pole[2].abs().asinh();
            if entry > budget {
                continue;
            }
            let p = g.partner(HalfEdge::new(u, j));
            let child = frame.compose(hex.glue(j, p.leg));
            let id = states.len();
            match seen.entry((p.vertex, midpoint_key(&child))) {
                MapEntry::Occupied(o) => {
                    let prev = &states[*o.get()].frame;
                    let scale = child.matrix()[2][2].max(1.0);
                    if prev.max_entry_diff(&child) > 1e-6 * scale {
                        return Err(Error::FrameCollision { vertex: p.vertex });
                    }
                    continue;
                }
                MapEntry::Vacant(v) => {
                    v.insert(id);
                }
            }
            if states.len() >= opts.cap {
                status = FieldStatus::CapReached;
                break;
            }
            let d = child.displacement();
            if d < dist[p.vertex] {
                dist[p.vertex] = d;
                cands.push(Reverse(Queued {
                    entry: d,
                    id: p.vertex,
                }));
            }
            states.push(DevState {
                vertex: p.vertex,
                frame: child,
                entry_leg: Some(p.leg),
            });
            frontier.push(Reverse(Queued { entry, id }));
        }
        if status == FieldStatus::CapReached {
            break;
        }
    }
    match (status, frontier.peek()) {
        (FieldStatus::CapReached, Some(&Reverse(q))) => {
            settle_below(q.entry, false, &mut cands, &dist, &mut settled, &mut open)
        }
        (FieldStatus::CapReached, None) => {}
        // children past the budget were never queued, so everything found is final up to it
        _ => settle_below(budget, true, &mut cands, &dist, &mut settled, &mut open),
    }
    if status == FieldStatus::Complete && open > 0 {
        status = FieldStatus::BudgetReached;
    }
    Ok(DistanceField {
        source,
        dist,
        settled,
        budget_radius: budget,
        states: states.len(),
        status,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sources {
    All,
    Sample { count: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MidpointDiameter {
    pub value: f64,
    /// All sources were used and every field is complete.
    pub certified: bool,
    pub sources: usize,
    pub states: usize,
}

pub fn midpoint_diameter(
    s: &Surface,
    sources: Sources,
    opts: &SearchOptions,
) -> Result<MidpointDiameter> {
    if s.genus == Genus::Disconnected {
        return Err(Error::Disconnected);
    }
    let verts = s.graph.vertex_count();
    let (list, all): (Vec<usize>, bool) = match sources {
        Sources::Sample { count, seed } if count < verts => {
            let mut v: Vec<usize> = (0..verts).collect();
            let (picked, _) = v.partial_shuffle(&mut rng::stream(seed), count);
            let mut picked = picked.to_vec();
            picked.sort_unstable();
            (picked, false)
        }
        _ => ((0..verts).collect(), true),
    };
    let fields: Vec<(f64, bool, usize)> = list
        .par_iter()
        .map(|&src| {
            midpoint_distances(s, src, opts).map(|f| (f.eccentricity(), f.is_complete(), f.states))
        })
        .collect::<Result<_>>()?;
    let value = fields.iter().map(|f| f.0).fold(0.0, f64::max);
    Ok(MidpointDiameter {
        value,
        certified: all && fields.iter().all(|f| f.1),
        sources: list.len(),
        states: fields.iter().map(|f| f.2).sum(),
    })
}

/// `arccosh(2g − 1)`, the diameter forced by the area `4π(g − 1)`.
pub fn area_lower_bound(genus: u64) -> Result<f64> {
    if genus < 2 {
        return Err(Error::InvalidParameter(format!(
            "genus must be ≥ 2, got {genus}"
        )));
    }
    Ok((2.0 * genus as f64 - 1.0).acosh())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum UpperKind {
    /// Certified midpoint diameter plus twice the pants eccentricity.
    Midpoint,
    /// `2ρ_a` per graph edge along a shortest path, plus twice the pants eccentricity.
    Additive,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DiameterBounds {
    pub genus: u64,
    pub lower: f64,
    pub midpoint_diameter: f64,
    pub midpoint_certified: bool,
    pub graph_diameter: usize,
    pub graph_diameter_exact: bool,
    pub upper: f64,
    pub upper_kind: UpperKind,
}

/// Sandwiches the diameter of a connected surface.
pub fn diameter_bounds(
    s: &Surface,
    sources: Sources,
    opts: &SearchOptions,
) -> Result<DiameterBounds> {
    let genus = s.genus.value().ok_or(Error::Disconnected)?;
    let lower = area_lower_bound(genus)?;
    let consts = s.hexagon.pants_constants();
    let md = midpoint_diameter(s, sources, opts)?;
    let gd = graph_diameter(&s.graph)?;
    let (upper, upper_kind) = if md.certified {
        (
            md.value + 2.0 * consts.eccentricity_bound,
            UpperKind::Midpoint,
        )
    } else {
        // a sampled eccentricity is only half an upper bound on the graph diameter
        let hops = if gd.exact { gd.value } else { 2 * gd.value };
        (
            consts.adjacent_midpoint_distance * hops as f64 + 2.0 * consts.eccentricity_bound,
            UpperKind::Additive,
        )
    };
    if lower > upper {
        return Err(Error::BoundsViolated { lower, upper });
    }
    Ok(DiameterBounds {
        genus,
        lower,
        midpoint_diameter: md.value,
        midpoint_certified: md.certified,
        graph_diameter: gd.value,
        graph_diameter_exact: gd.exact,
        upper,
        upper_kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{sample_graph, TrivalentGraph};

    fn theta(a: f64) -> Surface {
        let he = HalfEdge::new;
        let g = TrivalentGraph::from_pairs(
            1,
            &[
                (he(0, 0), he(1, 0)),
                (he(0, 1), he(1, 1)),
                (he(0, 2), he(1, 2)),
            ],
        )
        .unwrap();
        Surface::new(g, a).unwrap()
    }

    #[test]
    fn theta_graph_distances() {
        let s = theta(2.0);
        let two_rho = 2.0 * s.hexagon.inradius_a();
        let f = midpoint_distances(&s, 0, &SearchOptions::default()).unwrap();
        assert_eq!(f.dist[0], 0.0);
        assert!((f.dist[1] - two_rho).abs() < 1e-12);
        assert!(f.is_complete());
        let md = midpoint_diameter(&s, Sources::All, &SearchOptions::default()).unwrap();
        assert!(md.certified);
        assert!((md.value - two_rho).abs() < 1e-12);
    }

    #[test]
    fn area_bound_values() {
        assert!((area_lower_bound(2).unwrap() - (3.0 + 8f64.sqrt()).ln()).abs() < 1e-14);
        assert!(area_lower_bound(1).is_err());
        let mut prev = 0.0;
        for g in 2..200u64 {
            let v = area_lower_bound(g).unwrap();
            assert!(v > prev && v <= (4.0 * g as f64 - 2.0).ln());
            prev = v;
        }
        assert!((4.0 * 1e9f64 - 2.0).ln() - area_lower_bound(1_000_000_000).unwrap() < 1e-12);
    }

    #[test]
    fn fields_respect_the_additive_bound() {
        let s = Surface::new(sample_graph(24, 5).unwrap(), 2.0).unwrap();
        if s.genus == Genus::Disconnected {
            return;
        }
        let step = s.hexagon.pants_constants().adjacent_midpoint_distance;
        let f = midpoint_distances(&s, 3, &SearchOptions::default()).unwrap();
        assert!(f.is_complete());
        let hops = s.graph.bfs(3);
        for v in 0..s.graph.vertex_count() {
            assert!(f.dist[v] <= step * hops[v].unwrap() as f64 + 1e-9);
        }
    }

    #[test]
    fn budget_and_cap_statuses() {
        let s = Surface::new(sample_graph(30, 1).unwrap(), 1.0).unwrap();
        if s.genus == Genus::Disconnected {
            return;
        }
        let small = SearchOptions {
            budget: Budget::Radius(1.0),
            ..SearchOptions::default()
        };
        let f = midpoint_distances(&s, 0, &small).unwrap();
        assert_eq!(f.status, FieldStatus::BudgetReached);
        let capped = SearchOptions {
            cap: 5,
            ..SearchOptions::default()
        };
        let f = midpoint_distances(&s, 0, &capped).unwrap();
        assert_eq!(f.status, FieldStatus::CapReached);
        assert!(midpoint_distances(&s, 60, &small).is_err());
    }

    #[test]
    fn disconnected_surfaces_are_rejected() {
        let he = HalfEdge::new;
        let mut pairs = Vec::new();
        for (u, v) in [(0, 1), (2, 3)] {
            for leg in 0..3 {
                pairs.push((he(u, leg), he(v, leg)));
            }
        }
        let s = Surface::new(TrivalentGraph::from_pairs(2, &pairs).unwrap(), 1.0).unwrap();
        assert!(matches!(
            midpoint_distances(&s, 0, &SearchOptions::default()),
            Err(Error::Disconnected)
        ));
        assert!(matches!(
            diameter_bounds(&s, Sources::All, &SearchOptions::default()),
            Err(Error::Disconnected)
        ));
    }
}
