//! Exact lattice-point counting for the hextree group.
//!
//! The group generated by the reflections in the three a-sides of the
//! hexagon is the free product `Z/2 ∗ Z/2 ∗ Z/2`, so its elements are the
//! reduced words over `{1, 2, 3}` and they act freely on the orbit of the
//! hexagon's center. Every orbit point of a word with prefix `v·r_i` lies
//! beyond the mirror `v(m_i)`; the depth-first walk below prunes a branch as
//! soon as that mirror is farther than `R` from the origin, which makes the
//! counts exact rather than truncated by word length.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hexagon::Hexagon;
use crate::hyp::{Isometry, Point, Vec3, DRIFT_LIMIT};
use crate::stats::linear_fit;

pub const DEFAULT_CAP: u64 = 100_000_000;

/// Orbit points beyond this radius have coordinates above ~1e6, where a
/// 1e−6 grid no longer resolves them; the collision check is skipped there.
pub const COLLISION_CHECK_MAX_RADIUS: f64 = 14.0;

const COLLISION_GRID: f64 = 1e-6;
/// Word length between drift checks on the running product.
const DRIFT_CHECK_EVERY: usize = 16;
const SPLIT_DEPTH: usize = 4;
const CAP_FLUSH: u64 = 1 << 14;

/// Reduced word over the generators, stored 0-based and displayed 1-based.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ReducedWord(Vec<u8>);

impl ReducedWord {
    pub fn new(letters: Vec<u8>) -> Result<Self> {
        if letters.iter().any(|&l| l > 2) {
            return Err(Error::InvalidParameter("letters must be 0, 1 or 2".into()));
        }
        if letters.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(
                "reduced words have no repeated consecutive letters".into(),
            ));
        }
        Ok(ReducedWord(letters))
    }

    pub fn empty() -> Self {
        ReducedWord(Vec::new())
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Product of the generators, multiplied out from scratch.
    pub fn isometry(&self, hex: &Hexagon) -> Isometry {
        self.0.iter().fold(Isometry::IDENTITY, |g, &l| {
            g.compose(hex.reflection(l as usize))
        })
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for l in &self.0 {
            write!(f, "{}", l + 1)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OrbitOptions {
    /// Resource limit on the number of emitted orbit points.
    pub cap: u64,
    /// Extra distance added to the pruning threshold; zero is exact.
    pub prune_slack: f64,
    /// Reject two words landing on the same point (only up to [`COLLISION_CHECK_MAX_RADIUS`]).
    pub check_collisions: bool,
    /// Generator `i` reflects in a-side `labels[i]`.
    pub labels: [usize; 3],
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions {
            cap: DEFAULT_CAP,
            prune_slack: 0.0,
            check_collisions: true,
            labels: [0, 1, 2],
        }
    }
}

/// One emitted orbit point `γ·O`.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitPoint {
    pub word: ReducedWord,
    pub point: Point,
    /// `d(O, γ·O)`.
    pub dist: f64,
    /// Distance from the origin to the last mirror crossed (0 for the empty word).
    pub entry_dist: f64,
}

struct Generators {
    mats: [Isometry; 3],
    poles: [Vec3; 3],
    /// Distance between consecutive nested mirrors: the b-side length.
    gap: f64,
}

impl Generators {
    fn new(hex: &Hexagon, labels: [usize; 3]) -> Result<Self> {
        let mut sorted = labels;
        sorted.sort_unstable();
        if sorted != [0, 1, 2] {
            return Err(Error::InvalidParameter(format!(
                "labels must be a permutation of 0..3, got {labels:?}"
            )));
        }
        Ok(Generators {
            mats: labels.map(|i| *hex.reflection(i)),
            poles: labels.map(|i| *hex.a_poles()[i].coords()),
            gap: hex.b(),
        })
    }
}

/// Subtree root handed to a parallel worker.
struct Root {
    word: Vec<u8>,
    frame: Isometry,
    entry: f64,
}

struct Dfs<'a, V> {
    gens: &'a Generators,
    radius: f64,
    prune_at: f64,
    cap: u64,
    total: &'a AtomicU64,
    pending: u64,
    word: Vec<u8>,
    seen: Option<HashMap<[i64; 3], Vec<u8>>>,
    split_at: Option<usize>,
    roots: Vec<Root>,
    visit: V,
}

impl<'a, V: FnMut(&[u8], &Isometry, f64, f64)> Dfs<'a, V> {
    fn new(
        gens: &'a Generators,
        radius: f64,
        opts: &OrbitOptions,
        total: &'a AtomicU64,
        visit: V,
    ) -> Self {
        let check = opts.check_collisions && radius <= COLLISION_CHECK_MAX_RADIUS;
        Dfs {
            gens,
            radius,
            prune_at: radius + opts.prune_slack,
            cap: opts.cap,
            total,
            pending: 0,
            word: Vec::new(),
            seen: check.then(HashMap::new),
            split_at: None,
            roots: Vec::new(),
            visit,
        }
    }

    fn emit(&mut self, g: &Isometry, d: f64, entry: f64) -> Result<()> {
        self.pending += 1;
        if self.pending >= CAP_FLUSH {
            self.flush()?;
        }
        if let Some(seen) = &mut self.seen {
            let p = g.origin_image();
            let key = p.coords().map(|x| (x / COLLISION_GRID).round() as i64);
            if let Some(prev) = seen.insert(key, self.word.clone()) {
                return Err(Error::OrbitCollision {
                    first: ReducedWord(prev).to_string(),
                    second: ReducedWord(self.word.clone()).to_string(),
                });
            }
        }
        (self.visit)(&self.word, g, d, entry);
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        let now = self.total.fetch_add(self.pending, Ordering::Relaxed) + self.pending;
        self.pending = 0;
        if now > self.cap {
            return Err(Error::CapExceeded { cap: self.cap });
        }
        Ok(())
    }

    fn descend(&mut self, g: &Isometry, last: Option<usize>, entry: f64) -> Result<()> {
        for i in 0..3 {
            if Some(i) == last {
                continue;
            }
            let pole = g.apply_vec(&self.gens.poles[i]);
            // d(O, geodesic) = asinh|⟨O, n⟩| and ⟨O, n⟩ = −n3
            let child_entry = pole[2].abs().asinh();
            if child_entry > self.prune_at {
                continue;
            }
            if last.is_some() && child_entry < entry + self.gens.gap - 1e-9 * entry.max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "nested mirrors closer than the b-side: {child_entry} after {entry}"
                )));
            }
            self.word.push(i as u8);
            // Gram–Schmidt is ill-conditioned for frames far from the origin and
            // perturbs mirror distances more than the rounding it would remove,
            // so the product is left alone and only checked.
            let child = g.compose(&self.gens.mats[i]);
            if self.word.len() % DRIFT_CHECK_EVERY == 0 {
                let residual = child.lorentz_residual();
                if !(residual <= DRIFT_LIMIT) {
                    return Err(Error::Drift { residual });
                }
            }
            let d = child.displacement();
            if d <= self.radius {
                self.emit(&child, d, child_entry)?;
            }
            if self.split_at == Some(self.word.len()) {
                self.roots.push(Root {
                    word: self.word.clone(),
                    frame: child,
                    entry: child_entry,
                });
            } else {
                self.descend(&child, Some(i), child_entry)?;
            }
            self.word.pop();
        }
        Ok(())
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "radius must be finite and ≥ 0, got {radius}"
        )));
    }
    Ok(())
}

/// Streams every orbit point within `radius` exactly once, in depth-first order.
pub fn for_each_orbit_point<F>(
    hex: &Hexagon,
    radius: f64,
    opts: &OrbitOptions,
    mut f: F,
) -> Result<()>
where
    F: FnMut(&OrbitPoint),
{
    check_radius(radius)?;
    let gens = Generators::new(hex, opts.labels)?;
    let total = AtomicU64::new(0);
    let mut visit = |word: &[u8], g: &Isometry, d: f64, entry: f64| {
        f(&OrbitPoint {
            word: ReducedWord(word.to_vec()),
            point: g.origin_image(),
            dist: d,
            entry_dist: entry,
        })
    };
    let mut dfs = Dfs::new(&gens, radius, opts, &total, &mut visit);
    dfs.emit(&Isometry::IDENTITY, 0.0, 0.0)?;
    dfs.descend(&Isometry::IDENTITY, None, 0.0)?;
    dfs.flush()
}

/// Parallel fold over the orbit points within `radius`.
///
/// The word tree is cut at a fixed depth; each subtree is walked by one
/// worker into its own accumulator and the accumulators are merged in tree
/// order, so the result does not depend on the number of threads.
pub fn fold_orbit<A, I, V, M>(
    hex: &Hexagon,
    radius: f64,
    opts: &OrbitOptions,
    init: I,
    visit: V,
    merge: M,
) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, &[u8], &Isometry, f64, f64) + Sync,
    M: Fn(A, A) -> A,
{
    check_radius(radius)?;
    let gens = Generators::new(hex, opts.labels)?;
    let total = AtomicU64::new(0);

    let mut shallow = init();
    let roots = {
        let mut dfs = Dfs::new(
            &gens,
            radius,
            opts,
            &total,
            |w: &[u8], g: &Isometry, d, e| visit(&mut shallow, w, g, d, e),
        );
        dfs.split_at = Some(SPLIT_DEPTH);
        dfs.emit(&Isometry::IDENTITY, 0.0, 0.0)?;
        dfs.descend(&Isometry::IDENTITY, None, 0.0)?;
        dfs.flush()?;
        std::mem::take(&mut dfs.roots)
    };

    let parts: Vec<A> = roots
        .par_iter()
        .map(|root| {
            let mut acc = init();
            {
                let mut dfs = Dfs::new(
                    &gens,
                    radius,
                    opts,
                    &total,
                    |w: &[u8], g: &Isometry, d, e| visit(&mut acc, w, g, d, e),
                );
                dfs.word = root.word.clone();
                let last = *root.word.last().expect("roots sit at positive depth") as usize;
                dfs.descend(&root.frame, Some(last), root.entry)?;
                dfs.flush()?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let out = parts.into_iter().fold(shallow, &merge);
    if total.load(Ordering::Relaxed) > opts.cap {
        return Err(Error::CapExceeded { cap: opts.cap });
    }
    Ok(out)
}

/// Collects the orbit points within `radius`.
pub fn enumerate_orbit(hex: &Hexagon, radius: f64, opts: &OrbitOptions) -> Result<Vec<OrbitPoint>> {
    fold_orbit(
        hex,
        radius,
        opts,
        Vec::new,
        |acc: &mut Vec<OrbitPoint>, w, g, d, e| {
            acc.push(OrbitPoint {
                word: ReducedWord(w.to_vec()),
                point: g.origin_image(),
                dist: d,
                entry_dist: e,
            })
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    )
}

/// `N_a(R)`: number of orbit points within distance `radius` of the center.
pub fn count(hex: &Hexagon, radius: f64, opts: &OrbitOptions) -> Result<u64> {
    fold_orbit(
        hex,
        radius,
        opts,
        || 0u64,
        |n, _, _, _, _| *n += 1,
        |a, b| a + b,
    )
}

/// Counts `N(R_k)` for every radius of an increasing grid in one walk.
pub fn count_grid(hex: &Hexagon, radii: &[f64], opts: &OrbitOptions) -> Result<Vec<u64>> {
    if radii.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter(
            "radius grid must be strictly increasing".into(),
        ));
    }
    let Some(&top) = radii.last() else {
        return Ok(Vec::new());
    };
    let bins = fold_orbit(
        hex,
        top,
        opts,
        || vec![0u64; radii.len()],
        |bins, _, _, d, _| {
            let k = radii.partition_point(|&r| r < d);
            bins[k] += 1;
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    )?;
    Ok(bins
        .iter()
        .scan(0u64, |acc, &b| {
            *acc += b;
            Some(*acc)
        })
        .collect())
}

/// Certified growth bound: `N(R) ≤ 1 + 3(2^{⌈R/g⌉+1} − 1)` where `g` is the
/// minimal distance gained per letter (nested mirrors are `b` apart).
pub fn growth_bound(hex: &Hexagon, radius: f64) -> f64 {
    let per_letter = hex.b();
    let k = (radius / per_letter).ceil() + 1.0;
    1.0 + 3.0 * (k.exp2() - 1.0)
}

/// Result of the unpruned enumeration used as an oracle for [`count`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BruteForceCount {
    pub count: u64,
    pub raw_words: u64,
    pub distinct_points: u64,
    /// The count is exact for every `R` strictly below this radius.
    pub certified_radius: f64,
}

impl BruteForceCount {
    pub fn certifies(&self, radius: f64) -> bool {
        radius < self.certified_radius
    }
}

pub const BRUTE_FORCE_MAX_LEN: usize = 14;

/// Enumerates all reduced words of length `≤ max_len` without pruning.
pub fn brute_force_count(hex: &Hexagon, max_len: usize, radius: f64) -> Result<BruteForceCount> {
    if max_len > BRUTE_FORCE_MAX_LEN {
        return Err(Error::InvalidParameter(format!(
            "brute force supports words up to length {BRUTE_FORCE_MAX_LEN}"
        )));
    }
    let mut layer: Vec<Vec<u8>> = vec![Vec::new()];
    let mut words: Vec<Vec<u8>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * 2 + 1);
        for w in &layer {
            for l in 0..3u8 {
                if w.last() != Some(&l) {
                    let mut v = w.clone();
                    v.push(l);
                    next.push(v);
                }
            }
        }
        words.extend(next.iter().cloned());
        layer = next;
    }

    let mut seen: HashSet<[i128; 3]> = HashSet::new();
    let mut count = 0u64;
    for w in &words {
        let g = ReducedWord(w.clone()).isometry(hex);
        let p = g.origin_image();
        let key = p.coords().map(|x| (x / COLLISION_GRID).round() as i128);
        if seen.insert(key) && g.displacement() <= radius {
            count += 1;
        }
    }

    // everything not enumerated lies beyond a mirror hanging off the last layer
    let mut certified_radius = f64::INFINITY;
    for w in &layer {
        let g = ReducedWord(w.clone()).isometry(hex);
        for l in 0..3u8 {
            if w.last() != Some(&l) {
                let n = g.apply_vec(hex.a_poles()[l as usize].coords());
                certified_radius = certified_radius.min(n[2].abs().asinh());
            }
        }
    }

    Ok(BruteForceCount {
        count,
        raw_words: words.len() as u64,
        distinct_points: seen.len() as u64,
        certified_radius,
    })
}

/// Exponential growth fit `log N ≈ δ·R + log cst` over a window of radii.
#[derive(Clone, Debug, Serialize)]
pub struct DeltaEstimate {
    pub delta: f64,
    pub log_cst: f64,
    pub r_window: (f64, f64),
    pub residual_rms: f64,
    /// Slope on the upper half of the window minus slope on the lower half.
    pub half_window_slope_diff: f64,
    pub counts: Vec<(f64, u64)>,
}

/// Least-squares fit of `log N` against `R`.
pub fn fit_growth(counts: &[(f64, u64)]) -> Result<DeltaEstimate> {
    if counts.len() < 6 {
        return Err(Error::WindowTooSmall(format!(
            "need at least 6 grid points, got {}",
            counts.len()
        )));
    }
    for w in counts.windows(2) {
        if w[1].1 < w[0].1 {
            return Err(Error::NonMonotone { radius: w[1].0 });
        }
    }
    if counts[0].1 == 0 {
        return Err(Error::InsufficientData("zero count in fit window".into()));
    }
    let xs: Vec<f64> = counts.iter().map(|c| c.0).collect();
    let ys: Vec<f64> = counts.iter().map(|c| (c.1 as f64).ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    let h = xs.len() / 2;
    let lower = linear_fit(&xs[..h], &ys[..h])?;
    let upper = linear_fit(&xs[h..], &ys[h..])?;
    Ok(DeltaEstimate {
        delta: fit.slope,
        log_cst: fit.intercept,
        r_window: (xs[0], xs[xs.len() - 1]),
        residual_rms: fit.rms,
        half_window_slope_diff: upper.slope - lower.slope,
        counts: counts.to_vec(),
    })
}

/// Radius grid `r_min, r_min + step, …` up to `r_max` (inclusive up to rounding).
pub fn radius_grid(r_min: f64, r_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(r_min >= 0.0) || !(r_max - r_min >= 5.0 * step - 1e-12) {
        return Err(Error::WindowTooSmall(format!(
            "need r_max − r_min ≥ 5·step with step > 0 (got [{r_min}, {r_max}], step {step})"
        )));
    }
    let k = ((r_max - r_min) / step + 1e-9).floor() as usize;
    Ok((0..=k).map(|i| r_min + i as f64 * step).collect())
}

/// Counts on the grid and fits the critical exponent.
pub fn estimate_delta(
    hex: &Hexagon,
    r_min: f64,
    r_max: f64,
    step: f64,
    opts: &OrbitOptions,
) -> Result<DeltaEstimate> {
    let grid = radius_grid(r_min, r_max, step)?;
    let counts = count_grid(hex, &grid, opts)?;
    let top = *counts.last().expect("grid is non-empty");
    if top < 1000 {
        return Err(Error::InsufficientData(format!(
            "N({}) = {top} < 1000; raise r_max",
            grid[grid.len() - 1]
        )));
    }
    let pairs: Vec<(f64, u64)> = grid.into_iter().zip(counts).collect();
    fit_growth(&pairs)
}

/// Orbit size at the top of the automatic fit window.
pub const AUTO_DELTA_TARGET: u64 = 2_000_000;

/// [`estimate_delta`] on `[0.4·R, R]` in steps of 0.25, where `R` is the first
/// integer radius whose ball holds [`AUTO_DELTA_TARGET`] orbit points.
pub fn estimate_delta_auto(hex: &Hexagon, opts: &OrbitOptions) -> Result<DeltaEstimate> {
    let r = radius_for_count(hex, AUTO_DELTA_TARGET, opts)?;
    estimate_delta(hex, 0.4 * r, r, 0.25, opts)
}

/// Smallest integer radius (from `2ρ_a` upwards in unit steps) where the count reaches `target`.
pub fn radius_for_count(hex: &Hexagon, target: u64, opts: &OrbitOptions) -> Result<f64> {
    let mut r = (2.0 * hex.inradius_a()).ceil();
    loop {
        if count(hex, r, opts)? >= target {
            return Ok(r);
        }
        r += 1.0;
    }
}

/// Writes `(R, N)` pairs with the header `R,N`.
pub fn write_counts_csv<W: Write>(counts: &[(f64, u64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["R", "N"])?;
    for (r, n) in counts {
        w.write_record([r.to_string(), n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
