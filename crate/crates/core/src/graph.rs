//! Configuration-model trivalent multigraphs and the surfaces glued along them.
//!
//! A graph on `2n` vertices is a fixed-point-free involution on its `6n`
//! half-edges. Half-edge `h` is leg `h % 3` of vertex `h / 3`. Loops and
//! multi-edges are kept.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hexagon::Hexagon;
use crate::rng;

/// Above this many vertices [`graph_diameter`] runs BFS from sampled sources only.
pub const EXACT_DIAMETER_MAX_VERTICES: usize = 20_000;
/// Number of BFS sources used once the exact computation is skipped.
pub const SAMPLED_DIAMETER_SOURCES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct HalfEdge {
    pub vertex: usize,
    /// 0-based leg index.
    pub leg: usize,
}

impl HalfEdge {
    pub fn new(vertex: usize, leg: usize) -> Self {
        HalfEdge { vertex, leg }
    }

    pub fn from_index(h: usize) -> Self {
        HalfEdge {
            vertex: h / 3,
            leg: h % 3,
        }
    }

    pub fn index(self) -> usize {
        3 * self.vertex + self.leg
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrivalentGraph {
    n: usize,
    seed: u64,
    partner: Vec<usize>,
}

impl TrivalentGraph {
    /// Builds a graph on `2n` vertices from an explicit perfect matching of half-edges.
    pub fn from_pairs(n: usize, pairs: &[(HalfEdge, HalfEdge)]) -> Result<Self> {
        Self::from_pairs_seeded(n, 0, pairs)
    }

    fn from_pairs_seeded(n: usize, seed: u64, pairs: &[(HalfEdge, HalfEdge)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        let total = 6 * n;
        if pairs.len() != 3 * n {
            return Err(Error::InvalidParameter(format!(
                "a graph with n = {n} needs {} pairs, got {}",
                3 * n,
                pairs.len()
            )));
        }
        let mut partner = vec![usize::MAX; total];
        for &(x, y) in pairs {
            for h in [x, y] {
                if h.leg > 2 || h.vertex >= 2 * n {
                    return Err(Error::InvalidParameter(format!(
                        "half-edge (vertex {}, leg {}) is out of range",
                        h.vertex, h.leg
                    )));
                }
            }
            let (i, j) = (x.index(), y.index());
            if i == j || partner[i] != usize::MAX || partner[j] != usize::MAX {
                return Err(Error::InvalidParameter(format!(
                    "half-edges {i} and {j} do not form a new pair"
                )));
            }
            partner[i] = j;
            partner[j] = i;
        }
        Ok(TrivalentGraph { n, seed, partner })
    }

    /// Half the number of vertices.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        2 * self.n
    }

    pub fn half_edge_count(&self) -> usize {
        6 * self.n
    }

    /// Seed the graph was sampled with, or 0 for hand-built graphs.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn partner(&self, h: HalfEdge) -> HalfEdge {
        HalfEdge::from_index(self.partner[h.index()])
    }

    /// Each matched pair once, ordered by its smaller half-edge.
    pub fn pairs(&self) -> Vec<(HalfEdge, HalfEdge)> {
        (0..self.half_edge_count())
            .filter(|&h| h < self.partner[h])
            .map(|h| {
                (
                    HalfEdge::from_index(h),
                    HalfEdge::from_index(self.partner[h]),
                )
            })
            .collect()
    }

    pub fn neighbours(&self, v: usize) -> [usize; 3] {
        [0, 1, 2].map(|leg| self.partner[3 * v + leg] / 3)
    }

    /// BFS hop distances from `source`; `None` for unreachable vertices.
    pub fn bfs(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("queued vertices are reached");
            for w in self.neighbours(u) {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Largest hop distance from `source`, or `None` if some vertex is unreachable.
    pub fn eccentricity(&self, source: usize) -> Option<usize> {
        self.bfs(source)
            .into_iter()
            .try_fold(0, |m, d| d.map(|d| m.max(d)))
    }

    pub fn is_connected(&self) -> bool {
        self.bfs(0).iter().all(Option::is_some)
    }

    pub fn genus(&self) -> Genus {
        if self.is_connected() {
            Genus::Closed(self.n as u64 + 1)
        } else {
            Genus::Disconnected
        }
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n={} seed={}", self.n, self.seed)?;
        for (x, y) in self.pairs() {
            writeln!(out, "{} {} {} {}", x.vertex, x.leg + 1, y.vertex, y.leg + 1)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("n={} seed={}\n", self.n, self.seed);
        for (x, y) in self.pairs() {
            let _ = writeln!(s, "{} {} {} {}", x.vertex, x.leg + 1, y.vertex, y.leg + 1);
        }
        s
    }

    /// Parses the text format written by [`TrivalentGraph::write_text`].
    ///
    /// Blank lines and lines starting with `#` are ignored. Legs are 1-based.
    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut header = None;
        let mut pairs = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("line {}: {what}: {line:?}", lineno + 1));
            if header.is_none() {
                let mut n = None;
                let mut seed = None;
                for field in line.split_whitespace() {
                    match field.split_once('=') {
                        Some(("n", v)) => n = Some(v.parse::<usize>().map_err(|_| bad("bad n"))?),
                        Some(("seed", v)) => {
                            seed = Some(v.parse::<u64>().map_err(|_| bad("bad seed"))?)
                        }
                        _ => return Err(bad("unknown header field")),
                    }
                }
                header = Some((n.ok_or_else(|| bad("missing n"))?, seed.unwrap_or(0)));
                continue;
            }
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("expected four integers"))?;
            let [v1, l1, v2, l2] = nums[..] else {
                return Err(bad("expected four integers"));
            };
            if !(1..=3).contains(&l1) || !(1..=3).contains(&l2) {
                return Err(bad("legs are numbered 1 to 3"));
            }
            pairs.push((HalfEdge::new(v1, l1 - 1), HalfEdge::new(v2, l2 - 1)));
        }
        let (n, seed) = header.ok_or_else(|| Error::Parse("missing header line".into()))?;
        Self::from_pairs_seeded(n, seed, &pairs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Genus {
    Closed(u64),
    Disconnected,
}

impl Genus {
    pub fn value(self) -> Option<u64> {
        match self {
            Genus::Closed(g) => Some(g),
            Genus::Disconnected => None,
        }
    }
}

/// Uniform perfect matching of the `6n` half-edges by a seeded shuffle.
pub fn sample_graph(n: usize, seed: u64) -> Result<TrivalentGraph> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut halves: Vec<usize> = (0..6 * n).collect();
    halves.shuffle(&mut rng::stream(seed));
    let mut partner = vec![0; 6 * n];
    for pair in halves.chunks_exact(2) {
        partner[pair[0]] = pair[1];
        partner[pair[1]] = pair[0];
    }
    Ok(TrivalentGraph { n, seed, partner })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GraphDiameter {
    pub value: usize,
    /// False when only sampled sources were used. `value` is then the largest
    /// sampled eccentricity: a lower bound, and half an upper bound.
    pub exact: bool,
}

pub fn graph_diameter(g: &TrivalentGraph) -> Result<GraphDiameter> {
    let verts = g.vertex_count();
    let (sources, exact): (Vec<usize>, bool) = if verts <= EXACT_DIAMETER_MAX_VERTICES {
        ((0..verts).collect(), true)
    } else {
        let mut all: Vec<usize> = (0..verts).collect();
        let mut r = rng::stream(rng::derive_seed(g.seed, verts as u64));
        let (picked, _) = all.partial_shuffle(&mut r, SAMPLED_DIAMETER_SOURCES);
        (picked.to_vec(), false)
    };
    let eccs: Vec<Option<usize>> = sources.par_iter().map(|&s| g.eccentricity(s)).collect();
    let mut value = 0;
    for e in eccs {
        value = value.max(e.ok_or(Error::Disconnected)?);
    }
    Ok(GraphDiameter { value, exact })
}

/// The surface `S_{a,n}`: one pants per vertex, glued along the graph's edges.
#[derive(Clone, Debug)]
pub struct Surface {
    pub graph: TrivalentGraph,
    pub hexagon: Hexagon,
    pub genus: Genus,
}

impl Surface {
    pub fn new(graph: TrivalentGraph, a: f64) -> Result<Self> {
        let hexagon = Hexagon::build(a)?;
        Ok(Self::with_hexagon(graph, hexagon))
    }

    /// Reuses an already built hexagon.
    pub fn with_hexagon(graph: TrivalentGraph, hexagon: Hexagon) -> Self {
        let genus = graph.genus();
        Surface {
            graph,
            hexagon,
            genus,
        }
    }

    pub fn a(&self) -> f64 {
        self.hexagon.a()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn he(v: usize, l: usize) -> HalfEdge {
        HalfEdge::new(v, l)
    }

    fn theta() -> TrivalentGraph {
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
    fn sampling_is_deterministic_and_trivalent() {
        let g = sample_graph(1000, 3).unwrap();
        assert_eq!(g, sample_graph(1000, 3).unwrap());
        assert_ne!(g, sample_graph(1000, 4).unwrap());
        for h in 0..g.half_edge_count() {
            let x = HalfEdge::from_index(h);
            assert_ne!(g.partner(x), x);
            assert_eq!(g.partner(g.partner(x)), x);
        }
        assert_eq!(g.pairs().len(), 3000);
        assert!(sample_graph(0, 1).is_err());
    }

    #[test]
    fn fifteen_matchings_at_n_one() {
        let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
        for seed in 0..3000 {
            *seen
                .entry(sample_graph(1, seed).unwrap().partner)
                .or_default() += 1;
        }
        assert_eq!(seen.len(), 15);
    }

    #[test]
    fn theta_and_loops() {
        let t = theta();
        assert!(t.is_connected());
        assert_eq!(t.genus(), Genus::Closed(2));
        assert_eq!(graph_diameter(&t).unwrap().value, 1);

        // two loops joined by one edge
        let l = TrivalentGraph::from_pairs(
            1,
            &[
                (he(0, 0), he(0, 1)),
                (he(1, 0), he(1, 1)),
                (he(0, 2), he(1, 2)),
            ],
        )
        .unwrap();
        assert_eq!(l.genus(), Genus::Closed(2));
        assert_eq!(l.neighbours(0), [0, 0, 1]);
    }

    #[test]
    fn two_thetas_are_disconnected() {
        let mut pairs = Vec::new();
        for (u, v) in [(0, 1), (2, 3)] {
            for leg in 0..3 {
                pairs.push((he(u, leg), he(v, leg)));
            }
        }
        let g = TrivalentGraph::from_pairs(2, &pairs).unwrap();
        assert!(!g.is_connected());
        assert_eq!(g.genus(), Genus::Disconnected);
        assert_eq!(g.genus().value(), None);
        assert!(matches!(graph_diameter(&g), Err(Error::Disconnected)));
    }

    #[test]
    fn hand_checked_diameter() {
        // path-like chain 0-1-2-3 closed with loops at the ends and doubled middle edge
        let g = TrivalentGraph::from_pairs(
            2,
            &[
                (he(0, 0), he(0, 1)),
                (he(0, 2), he(1, 0)),
                (he(1, 1), he(2, 0)),
                (he(1, 2), he(2, 1)),
                (he(2, 2), he(3, 0)),
                (he(3, 1), he(3, 2)),
            ],
        )
        .unwrap();
        assert_eq!(g.bfs(0), vec![Some(0), Some(1), Some(2), Some(3)]);
        let d = graph_diameter(&g).unwrap();
        assert_eq!((d.value, d.exact), (3, true));
    }

    #[test]
    fn text_round_trip() {
        let g = sample_graph(25, 11).unwrap();
        let text = g.to_text();
        assert!(text.starts_with("n=25 seed=11\n"));
        let mut buf = Vec::new();
        g.write_text(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), text);
        assert_eq!(TrivalentGraph::read_text(text.as_bytes()).unwrap(), g);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(TrivalentGraph::read_text("n=1 seed=0\n0 1 1 4\n".as_bytes()).is_err());
        assert!(TrivalentGraph::read_text("0 1 1 1\n".as_bytes()).is_err());
        assert!(TrivalentGraph::read_text("n=1 seed=0\n0 1 1 1\n".as_bytes()).is_err());
        assert!(TrivalentGraph::from_pairs(
            1,
            &[
                (he(0, 0), he(0, 0)),
                (he(0, 1), he(1, 1)),
                (he(0, 2), he(1, 2))
            ]
        )
        .is_err());
    }
}
