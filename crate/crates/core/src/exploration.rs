//! Distance-ordered exploration of a pants neighbourhood.
//!
//! Legs of discovered pants wait in a frontier keyed by the distance from the
//! base midpoint to their a-side geodesic. Each step pops the closest leg and
//! reveals its partner, either from a fixed graph or uniformly from the pool
//! of unpaired half-edges. A step into a new pants is good; a step closing a
//! cycle inside the explored component is bad.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{HalfEdge, TrivalentGraph};
use crate::hexagon::Hexagon;
use crate::hyp::{dist_to_segment, Isometry, Point};
use crate::rng::{self, Rng};

/// How a leg's key is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum KeyMode {
    /// Distance to the full geodesic carrying the a-side.
    #[default]
    Line,
    /// Distance to the a-side segment itself.
    Segment,
}

#[derive(Clone, Copy, Debug)]
pub enum Mode<'g> {
    /// Partners drawn uniformly from the unpaired half-edges.
    Online,
    /// Partners revealed from a fixed pairing.
    OnGraph(&'g TrivalentGraph),
}

#[derive(Clone, Debug)]
pub struct ExploreParams {
    pub n: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub start: usize,
    pub tau_override: Option<usize>,
    pub key_mode: KeyMode,
    /// Ignore `τ` and keep going until the frontier is empty.
    pub exhaust: bool,
    /// Record every step and every discovered pants.
    pub trace: bool,
}

impl ExploreParams {
    pub fn new(n: usize, epsilon: f64, seed: u64) -> Self {
        ExploreParams {
            n,
            epsilon,
            seed,
            start: 0,
            tau_override: None,
            key_mode: KeyMode::Line,
            exhaust: false,
            trace: false,
        }
    }
}

/// `⌈√n · ln n⌉` clamped to `[2, 2n]`.
pub fn tau_target(n: usize) -> usize {
    let nf = n as f64;
    let raw = (nf.sqrt() * nf.ln()).ceil().max(0.0) as usize;
    raw.clamp(2, 2 * n.max(1))
}

/// Number of steps in the first phase, `⌊n^{1/2 − ε}⌋`.
pub fn phase1_steps(n: usize, epsilon: f64) -> usize {
    (n as f64).powf(0.5 - epsilon).floor() as usize
}

/// Probability that step `i` is bad given `frontier` legs before it:
/// `(frontier − 1) / (6n − 2i − 1)`.
pub fn bad_step_prob(frontier: usize, n: usize, i: usize) -> Result<f64> {
    if frontier == 0 {
        return Err(Error::InvalidParameter(
            "frontier must hold at least one leg".into(),
        ));
    }
    let pool = 6 * n as i64 - 2 * i as i64 - 1;
    if pool < 1 {
        return Err(Error::DepletedPool { step: i });
    }
    Ok((frontier - 1) as f64 / pool as f64)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct StepRecord {
    pub frontier_before: usize,
    pub bad: bool,
    pub key: f64,
    pub leg: HalfEdge,
    pub partner: HalfEdge,
}

#[derive(Clone, Debug, Serialize)]
pub struct Discovery {
    pub vertex: usize,
    /// Hextree word of the developed pants, as 0-based a-side labels.
    pub word: Vec<u8>,
    pub dist: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExplorationReport {
    pub n: usize,
    pub a: f64,
    pub seed: u64,
    pub start: usize,
    pub tau_target: usize,
    pub vertices_found: usize,
    pub bad_phase1: usize,
    pub bad_total: usize,
    pub radius: f64,
    pub disconnected: bool,
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<StepRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discovered: Option<Vec<Discovery>>,
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    key: f64,
    half: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // half = 3·vertex + leg, so this is (key, vertex, leg)
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then(self.half.cmp(&other.half))
    }
}

/// Unpaired half-edges with O(1) removal and uniform draws.
struct Pool {
    items: Vec<usize>,
    pos: Vec<usize>,
}

impl Pool {
    const GONE: usize = usize::MAX;

    fn full(total: usize) -> Self {
        Pool {
            items: (0..total).collect(),
            pos: (0..total).collect(),
        }
    }

    fn contains(&self, h: usize) -> bool {
        self.pos[h] != Self::GONE
    }

    fn remove(&mut self, h: usize) {
        let i = self.pos[h];
        debug_assert!(i != Self::GONE, "half-edge {h} already paired");
        let last = *self.items.last().expect("pool holds h");
        self.items.swap_remove(i);
        if last != h {
            self.pos[last] = i;
        }
        self.pos[h] = Self::GONE;
    }

    fn draw(&mut self, r: &mut Rng) -> Option<usize> {
        if self.items.is_empty() {
            return None;
        }
        let h = self.items[r.gen_range(0..self.items.len())];
        self.remove(h);
        Some(h)
    }
}

/// State shared by the explorations of one surface.
struct World<'g> {
    pool: Pool,
    /// 0 for undiscovered, otherwise the id of the exploration that owns it.
    owner: Vec<u8>,
    in_frontier: Vec<bool>,
    pairs: Vec<(usize, usize)>,
    mode: Mode<'g>,
    /// Next vertex handed out by [`tree_realizable_graph`].
    fresh: Option<usize>,
}

impl<'g> World<'g> {
    fn new(n: usize, mode: Mode<'g>) -> Self {
        World {
            pool: Pool::full(6 * n),
            owner: vec![0; 2 * n],
            in_frontier: vec![false; 6 * n],
            pairs: Vec::new(),
            mode,
            fresh: None,
        }
    }

    fn reveal(&mut self, h: usize, r: &mut Rng, step: usize) -> Result<usize> {
        self.pool.remove(h);
        let p = match self.mode {
            Mode::OnGraph(g) => {
                let p = g.partner(HalfEdge::from_index(h)).index();
                self.pool.remove(p);
                p
            }
            Mode::Online => match self.fresh_vertex() {
                Some(v) => {
                    self.pool.remove(3 * v);
                    3 * v
                }
                None => self.pool.draw(r).ok_or(Error::DepletedPool { step })?,
            },
        };
        self.pairs.push((h, p));
        Ok(p)
    }

    fn fresh_vertex(&mut self) -> Option<usize> {
        let next = self.fresh.as_mut()?;
        while *next < self.owner.len() && self.owner[*next] != 0 {
            *next += 1;
        }
        (*next < self.owner.len()).then_some(*next)
    }
}

enum Outcome {
    Continue,
    Stopped,
    /// Paired into a pants owned by another exploration.
    Merged {
        partner: usize,
    },
}

struct Explorer<'h> {
    id: u8,
    hex: &'h Hexagon,
    params: ExploreParams,
    tau: usize,
    phase1: usize,
    heap: BinaryHeap<Reverse<Entry>>,
    frames: Vec<Option<(Isometry, [u8; 3])>>,
    dists: Vec<f64>,
    words: Vec<Vec<u8>>,
    live: usize,
    good: usize,
    bad: usize,
    bad_phase1: usize,
    steps: usize,
    found: usize,
    radius: f64,
    last_key: f64,
    trace: Vec<StepRecord>,
    discovered: Vec<Discovery>,
}

impl<'h> Explorer<'h> {
    fn new(id: u8, hex: &'h Hexagon, params: ExploreParams) -> Result<Self> {
        let n = params.n;
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if !(params.epsilon > 0.0 && params.epsilon < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1/2), got {}",
                params.epsilon
            )));
        }
        if params.start >= 2 * n {
            return Err(Error::InvalidParameter(format!(
                "start vertex {} out of range for {} vertices",
                params.start,
                2 * n
            )));
        }
        let tau = params
            .tau_override
            .unwrap_or_else(|| tau_target(n))
            .clamp(1, 2 * n);
        let phase1 = phase1_steps(n, params.epsilon);
        Ok(Explorer {
            id,
            hex,
            tau,
            phase1,
            heap: BinaryHeap::new(),
            frames: vec![None; 2 * n],
            dists: vec![f64::NAN; 2 * n],
            words: if params.trace {
                vec![Vec::new(); 2 * n]
            } else {
                Vec::new()
            },
            params,
            live: 0,
            good: 0,
            bad: 0,
            bad_phase1: 0,
            steps: 0,
            found: 0,
            radius: 0.0,
            last_key: 0.0,
            trace: Vec::new(),
            discovered: Vec::new(),
        })
    }

    fn key(&self, frame: &Isometry, leg: usize) -> f64 {
        let n = frame.apply_pole(&self.hex.a_poles()[leg]);
        match self.params.key_mode {
            // d(O, geodesic) = asinh|⟨O, n⟩| and ⟨O, n⟩ = −n3
            KeyMode::Line => n.coords()[2].abs().asinh(),
            KeyMode::Segment => {
                let (u, v) = self.hex.a_side_endpoints(leg);
                dist_to_segment(&Point::ORIGIN, &frame.apply(&u), &frame.apply(&v), &n)
            }
        }
    }

    fn discover(
        &mut self,
        world: &mut World,
        v: usize,
        frame: Isometry,
        perm: [u8; 3],
        word: Vec<u8>,
        skip: Option<usize>,
    ) {
        world.owner[v] = self.id;
        let d = frame.displacement();
        self.radius = self.radius.max(d);
        self.dists[v] = d;
        self.found += 1;
        for leg in 0..3 {
            if Some(leg) == skip {
                continue;
            }
            let h = 3 * v + leg;
            if !world.pool.contains(h) {
                // a loop already paired this leg
                continue;
            }
            world.in_frontier[h] = true;
            self.live += 1;
            self.heap.push(Reverse(Entry {
                key: self.key(&frame, leg),
                half: h,
            }));
        }
        if self.params.trace {
            self.discovered.push(Discovery {
                vertex: v,
                word: word.clone(),
                dist: d,
            });
            self.words[v] = word;
        }
        self.frames[v] = Some((frame, perm));
    }

    fn start(&mut self, world: &mut World) {
        let s = self.params.start;
        self.discover(world, s, Isometry::IDENTITY, [0, 1, 2], Vec::new(), None);
    }

    fn done(&self) -> bool {
        self.live == 0 || (!self.params.exhaust && self.found >= self.tau)
    }

    fn pop(&mut self, world: &World) -> Option<Entry> {
        while let Some(Reverse(e)) = self.heap.pop() {
            if world.in_frontier[e.half] {
                return Some(e);
            }
        }
        None
    }

    fn step(&mut self, world: &mut World, r: &mut Rng) -> Result<Outcome> {
        if self.done() {
            return Ok(Outcome::Stopped);
        }
        let i = self.steps;
        let e = self.pop(world).ok_or(Error::LedgerMismatch {
            step: i,
            expected: self.live as i64,
            found: 0,
        })?;
        if e.key < self.last_key - 1e-9 * self.last_key.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "frontier key decreased at step {i}: {} after {}",
                e.key, self.last_key
            )));
        }
        self.last_key = self.last_key.max(e.key);
        let h = e.half;
        let frontier_before = self.live;
        world.in_frontier[h] = false;
        self.live -= 1;
        let p = world.reveal(h, r, i)?;
        self.steps += 1;

        let (u, j) = (h / 3, h % 3);
        let (v, k) = (p / 3, p % 3);
        let owner = world.owner[v];
        let bad = owner == self.id;
        if owner != 0 && !bad {
            return Ok(Outcome::Merged { partner: p });
        }
        if bad {
            if !world.in_frontier[p] {
                return Err(Error::InvalidParameter(format!(
                    "partner half-edge {p} is not in the frontier"
                )));
            }
            world.in_frontier[p] = false;
            self.live -= 1;
            self.bad += 1;
            if i < self.phase1 {
                self.bad_phase1 += 1;
            }
        } else {
            let (frame_u, perm_u) = self.frames[u].expect("popped legs belong to developed pants");
            let frame = frame_u.compose(self.hex.glue(j, k));
            let perm = [0, 1, 2].map(|x| perm_u[Hexagon::glue_label(j, k, x)]);
            let word = if self.params.trace {
                let mut w = self.words[u].clone();
                w.push(perm_u[j]);
                w
            } else {
                Vec::new()
            };
            self.good += 1;
            self.discover(world, v, frame, perm, word, Some(k));
        }

        let expected = 3 + self.good as i64 - 2 * self.bad as i64;
        if expected != self.live as i64 {
            return Err(Error::LedgerMismatch {
                step: i,
                expected,
                found: self.live as i64,
            });
        }
        if self.params.trace {
            self.trace.push(StepRecord {
                frontier_before,
                bad,
                key: e.key,
                leg: HalfEdge::from_index(h),
                partner: HalfEdge::from_index(p),
            });
        }
        Ok(Outcome::Continue)
    }

    fn report(self) -> ExplorationReport {
        let disconnected = self.live == 0 && self.found < self.tau;
        ExplorationReport {
            n: self.params.n,
            a: self.hex.a(),
            seed: self.params.seed,
            start: self.params.start,
            tau_target: self.tau,
            vertices_found: self.found,
            bad_phase1: self.bad_phase1,
            bad_total: self.bad,
            radius: self.radius,
            disconnected,
            steps: self.steps,
            trace: self.params.trace.then_some(self.trace),
            discovered: self.params.trace.then_some(self.discovered),
        }
    }
}

fn run_to_end(ex: &mut Explorer, world: &mut World, r: &mut Rng) -> Result<Option<usize>> {
    loop {
        match ex.step(world, r)? {
            Outcome::Continue => {}
            Outcome::Stopped => return Ok(None),
            Outcome::Merged { partner } => return Ok(Some(partner)),
        }
    }
}

/// Runs one exploration from `params.start`.
///
/// Online runs draw partners from a stream seeded by `params.seed`.
pub fn explore(hex: &Hexagon, params: &ExploreParams, mode: Mode) -> Result<ExplorationReport> {
    if let Mode::OnGraph(g) = mode {
        if g.n() != params.n {
            return Err(Error::InvalidParameter(format!(
                "graph has n = {} but the exploration expects n = {}",
                g.n(),
                params.n
            )));
        }
    }
    let mut world = World::new(params.n, mode);
    let mut r = rng::stream(params.seed);
    let mut ex = Explorer::new(1, hex, params.clone())?;
    ex.start(&mut world);
    run_to_end(&mut ex, &mut world, &mut r)?;
    Ok(ex.report())
}

/// Like [`explore`], but also returns the revealed pairs in step order.
pub fn explore_revealing(
    hex: &Hexagon,
    params: &ExploreParams,
    mode: Mode,
) -> Result<(ExplorationReport, Vec<(HalfEdge, HalfEdge)>)> {
    let mut world = World::new(params.n, mode);
    let mut r = rng::stream(params.seed);
    let mut ex = Explorer::new(1, hex, params.clone())?;
    ex.start(&mut world);
    run_to_end(&mut ex, &mut world, &mut r)?;
    let pairs = world
        .pairs
        .iter()
        .map(|&(h, p)| (HalfEdge::from_index(h), HalfEdge::from_index(p)))
        .collect();
    Ok((ex.report(), pairs))
}

fn complete(world: &mut World, n: usize, r: &mut Rng) -> Result<TrivalentGraph> {
    let mut rest = world.pool.items.clone();
    rest.sort_unstable();
    rest.shuffle(r);
    let mut pairs: Vec<(HalfEdge, HalfEdge)> = world
        .pairs
        .iter()
        .map(|&(h, p)| (HalfEdge::from_index(h), HalfEdge::from_index(p)))
        .collect();
    for c in rest.chunks_exact(2) {
        pairs.push((HalfEdge::from_index(c[0]), HalfEdge::from_index(c[1])));
    }
    TrivalentGraph::from_pairs(n, &pairs)
}

/// A graph whose exploration from `start` is a tree until `τ` pants are found.
///
/// Every revealed leg is paired with leg 0 of the lowest undiscovered vertex;
/// once all vertices are used, and for the legs left after the exploration,
/// partners are drawn at random. Replaying the result in on-graph mode
/// reproduces the hextree ball around the start.
pub fn tree_realizable_graph(hex: &Hexagon, params: &ExploreParams) -> Result<TrivalentGraph> {
    let mut world = World::new(params.n, Mode::Online);
    world.fresh = Some(0);
    let mut r = rng::stream(params.seed);
    let mut ex = Explorer::new(1, hex, params.clone())?;
    ex.start(&mut world);
    run_to_end(&mut ex, &mut world, &mut r)?;
    complete(&mut world, params.n, &mut r)
}

#[derive(Clone, Debug, Serialize)]
pub struct PairReport {
    pub merged: bool,
    pub disconnected: bool,
    /// Upper bound on the distance between the two start midpoints when merged.
    pub distance_bound: Option<f64>,
    pub starts: (usize, usize),
    pub first: ExplorationReport,
    pub second: Option<ExplorationReport>,
    #[serde(skip)]
    pub graph: TrivalentGraph,
}

/// Runs an exploration from a uniform vertex, then a second one from another
/// uniform vertex against the remaining half-edges, and reports whether they met.
///
/// The unrevealed half-edges are finally paired at random, so `graph` is a
/// uniform sample consistent with both explorations.
pub fn explore_pair(
    hex: &Hexagon,
    n: usize,
    epsilon: f64,
    seed: u64,
    key_mode: KeyMode,
) -> Result<PairReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut r = rng::stream(seed);
    let verts = 2 * n;
    let u = r.gen_range(0..verts);
    let v = (u + 1 + r.gen_range(0..verts - 1)) % verts;
    let adjacent = hex.pants_constants().adjacent_midpoint_distance;

    let params = |start| ExploreParams {
        start,
        key_mode,
        ..ExploreParams::new(n, epsilon, seed)
    };
    let mut world = World::new(n, Mode::Online);
    let mut first = Explorer::new(1, hex, params(u))?;
    first.start(&mut world);
    run_to_end(&mut first, &mut world, &mut r)?;
    let first_d = first.live == 0 && first.found < first.tau;

    let (merged, second, distance_bound, second_d) = if world.owner[v] == 1 {
        (true, None, Some(first.dists[v]), false)
    } else {
        let mut second = Explorer::new(2, hex, params(v))?;
        second.start(&mut world);
        let met = run_to_end(&mut second, &mut world, &mut r)?;
        let bound = met.map(|_| first.radius + second.radius + adjacent);
        let d = met.is_none() && second.live == 0 && second.found < second.tau;
        (met.is_some(), Some(second.report()), bound, d)
    };
    let graph = complete(&mut world, n, &mut r)?;
    Ok(PairReport {
        merged,
        disconnected: !merged && (first_d || second_d),
        distance_bound,
        starts: (u, v),
        first: first.report(),
        second,
        graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta() -> TrivalentGraph {
        let he = HalfEdge::new;
        TrivalentGraph::from_pairs(
            1,
            &[
                (he(0, 0), he(1, 0)),
                (he(0, 1), he(1, 1)),
                (he(0, 2), he(1, 2)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn tau_and_phase_lengths() {
        assert_eq!(tau_target(1), 2);
        assert_eq!(tau_target(2), 2);
        assert_eq!(tau_target(20), 14);
        assert_eq!(tau_target(100), 47);
        assert_eq!(phase1_steps(4096, 0.1), 27);
    }

    #[test]
    fn bad_step_formula() {
        assert!((bad_step_prob(3, 2, 0).unwrap() - 2.0 / 11.0).abs() < 1e-15);
        assert_eq!(bad_step_prob(1, 5, 3).unwrap(), 0.0);
        assert!(matches!(
            bad_step_prob(3, 1, 3),
            Err(Error::DepletedPool { step: 3 })
        ));
        assert!(bad_step_prob(0, 5, 0).is_err());
    }

    #[test]
    fn theta_graph_on_graph() {
        let hex = Hexagon::build(2.0).unwrap();
        let g = theta();
        let p = ExploreParams {
            trace: true,
            ..ExploreParams::new(1, 0.1, 0)
        };
        let rep = explore(&hex, &p, Mode::OnGraph(&g)).unwrap();
        assert_eq!(rep.steps, 1);
        assert_eq!(rep.vertices_found, 2);
        assert!(!rep.disconnected);
        let two_rho = 2.0 * hex.inradius_a();
        assert!((rep.radius - two_rho).abs() < 1e-12);
        let trace = rep.trace.unwrap();
        assert!(!trace[0].bad);
        assert_eq!(trace[0].frontier_before, 3);
    }

    #[test]
    fn exhaust_reveals_the_whole_graph() {
        let hex = Hexagon::build(1.0).unwrap();
        let g = crate::graph::sample_graph(40, 9).unwrap();
        let p = ExploreParams {
            exhaust: true,
            ..ExploreParams::new(40, 0.1, 0)
        };
        let (rep, pairs) = explore_revealing(&hex, &p, Mode::OnGraph(&g)).unwrap();
        if g.is_connected() {
            let mut got: Vec<_> = pairs
                .iter()
                .map(|&(x, y)| if x < y { (x, y) } else { (y, x) })
                .collect();
            got.sort();
            assert_eq!(got, g.pairs());
            assert_eq!(rep.vertices_found, 80);
        }
    }

    #[test]
    fn online_runs_are_reproducible() {
        let hex = Hexagon::build(2.0).unwrap();
        let p = ExploreParams::new(300, 0.1, 42);
        let a = explore(&hex, &p, Mode::Online).unwrap();
        let b = explore(&hex, &p, Mode::Online).unwrap();
        assert_eq!(
            (a.steps, a.bad_total, a.radius),
            (b.steps, b.bad_total, b.radius)
        );
        assert!(a.bad_phase1 <= a.bad_total && a.bad_total <= a.steps);
        assert!(a.vertices_found <= a.tau_target);
        let (_, pairs) = explore_revealing(&hex, &p, Mode::Online).unwrap();
        assert_eq!(pairs.len(), a.steps);
    }

    #[test]
    fn rejects_bad_parameters() {
        let hex = Hexagon::build(2.0).unwrap();
        assert!(explore(&hex, &ExploreParams::new(10, 0.5, 0), Mode::Online).is_err());
        assert!(explore(&hex, &ExploreParams::new(0, 0.1, 0), Mode::Online).is_err());
        let p = ExploreParams {
            start: 20,
            ..ExploreParams::new(10, 0.1, 0)
        };
        assert!(explore(&hex, &p, Mode::Online).is_err());
    }

    #[test]
    fn pair_at_n_one_always_merges() {
        let hex = Hexagon::build(2.0).unwrap();
        for seed in 0..50 {
            let rep = explore_pair(&hex, 1, 0.1, seed, KeyMode::Line).unwrap();
            assert!(rep.merged && !rep.disconnected);
            assert!(rep.distance_bound.is_some());
            assert_eq!(rep.graph.n(), 1);
        }
    }
}
