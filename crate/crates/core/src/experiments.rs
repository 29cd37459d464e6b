//! Reproducible Monte Carlo campaigns over `(a, n)` grids and scaling fits.
//!
//! Every row draws its randomness from `seed ⊕ mix(a, n, replicate)`, so a row
//! can be replayed alone and adding grid points never changes existing rows.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exploration::{explore, ExploreParams, Mode};
use crate::graph::{sample_graph, Surface};
use crate::hexagon::Hexagon;
use crate::metric::{diameter_bounds, SearchOptions, Sources};
use crate::rng::{self, mix};
use crate::stats::{linear_fit, median, quantile};

pub const CSV_SCHEMA_VERSION: u32 = 1;
/// Environment variable holding the worker count for campaigns.
pub const WORKERS_ENV: &str = "HYPERPANTS_WORKERS";
/// Largest `n` for which campaigns use every midpoint as a source by default.
pub const ALL_SOURCES_MAX_N: usize = 512;
pub const SAMPLED_SOURCES: usize = 64;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SourcePolicy {
    /// All sources up to [`ALL_SOURCES_MAX_N`], sampled above.
    Auto,
    All,
    Sample(usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct Campaign {
    pub a_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub sources: SourcePolicy,
    pub out_csv: Option<PathBuf>,
    pub out_json: Option<PathBuf>,
}

impl Campaign {
    pub fn validate(&self) -> Result<()> {
        if self.a_grid.is_empty() || self.n_grid.is_empty() {
            return Err(Error::InvalidParameter(
                "a_grid and n_grid must be non-empty".into(),
            ));
        }
        if self.runs == 0 {
            return Err(Error::InvalidParameter("runs must be at least 1".into()));
        }
        if self.a_grid.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidParameter("every a must be positive".into()));
        }
        if self.n_grid.contains(&0) {
            return Err(Error::InvalidParameter("every n must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1/2), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Parses a flat `key = value` file. `#` starts a comment.
    ///
    /// Keys: `a_grid`, `n_grid` (comma separated), `runs`, `seed`, `epsilon`,
    /// `sources` (`auto`, `all` or a count), `out_csv`, `out_json`.
    pub fn parse<R: BufRead>(input: R) -> Result<Self> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
            v.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<T>()
                        .map_err(|_| Error::Parse(format!("{key}: bad value {t:?}")))
                })
                .collect()
        }
        fn one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse::<T>()
                .map_err(|_| Error::Parse(format!("{key}: bad value {v:?}")))
        }
        let mut c = Campaign {
            a_grid: Vec::new(),
            n_grid: Vec::new(),
            runs: 0,
            seed: 0,
            epsilon: 0.1,
            sources: SourcePolicy::Auto,
            out_csv: None,
            out_json: None,
        };
        for (k, v) in &kv {
            match k.as_str() {
                "a_grid" => c.a_grid = list(k, v)?,
                "n_grid" => c.n_grid = list(k, v)?,
                "runs" => c.runs = one(k, v)?,
                "seed" => c.seed = one(k, v)?,
                "epsilon" => c.epsilon = one(k, v)?,
                "sources" => {
                    c.sources = match v.as_str() {
                        "auto" => SourcePolicy::Auto,
                        "all" => SourcePolicy::All,
                        m => SourcePolicy::Sample(one(k, m)?),
                    }
                }
                "out_csv" => c.out_csv = Some(PathBuf::from(v)),
                "out_json" => c.out_json = Some(PathBuf::from(v)),
                other => return Err(Error::Parse(format!("unknown key {other:?}"))),
            }
        }
        for key in ["a_grid", "n_grid", "runs"] {
            if !kv.contains_key(key) {
                return Err(Error::Parse(format!("missing key {key:?}")));
            }
        }
        c.validate()?;
        Ok(c)
    }

    fn sources_for(&self, n: usize, seed: u64) -> Sources {
        let sample = |count| Sources::Sample {
            count,
            seed: rng::derive_seed(seed, 1),
        };
        match self.sources {
            SourcePolicy::All => Sources::All,
            SourcePolicy::Sample(m) => sample(m),
            SourcePolicy::Auto if n <= ALL_SOURCES_MAX_N => Sources::All,
            SourcePolicy::Auto => sample(SAMPLED_SOURCES),
        }
    }
}

/// Seed of replicate `rep` in cell `(a, n)`.
pub fn row_seed(seed: u64, a: f64, n: usize, rep: usize) -> u64 {
    rng::derive_seed(seed, mix(a.to_bits() ^ mix(n as u64 ^ mix(rep as u64))))
}

/// One replicate. Optional fields are empty when the surface is disconnected
/// or the row failed.
#[derive(Clone, Debug, Serialize)]
pub struct CampaignRow {
    pub seed: u64,
    pub n: usize,
    pub a: f64,
    pub genus: Option<u64>,
    pub connected: bool,
    pub graph_diam: Option<usize>,
    pub midpoint_diam: Option<f64>,
    pub upper: Option<f64>,
    pub lower: Option<f64>,
    pub certified: Option<bool>,
    pub replicate: usize,
    pub steps: Option<usize>,
    pub vertices_found: Option<usize>,
    pub bad_phase1: Option<usize>,
    pub bad_total: Option<usize>,
    pub radius: Option<f64>,
    pub disconnected_event: Option<bool>,
    pub error: String,
}

fn blank_row(seed: u64, a: f64, n: usize, rep: usize) -> CampaignRow {
    CampaignRow {
        seed,
        n,
        a,
        replicate: rep,
        genus: None,
        connected: false,
        graph_diam: None,
        midpoint_diam: None,
        upper: None,
        lower: None,
        certified: None,
        steps: None,
        vertices_found: None,
        bad_phase1: None,
        bad_total: None,
        radius: None,
        disconnected_event: None,
        error: String::new(),
    }
}

fn run_row(c: &Campaign, hex: &Hexagon, n: usize, rep: usize) -> CampaignRow {
    let seed = row_seed(c.seed, hex.a(), n, rep);
    let mut row = blank_row(seed, hex.a(), n, rep);
    if let Err(e) = fill_row(c, hex, &mut row) {
        row.error = e.to_string();
    }
    row
}

fn fill_row(c: &Campaign, hex: &Hexagon, row: &mut CampaignRow) -> Result<()> {
    let g = sample_graph(row.n, row.seed)?;
    let s = Surface::with_hexagon(g, hex.clone());
    row.genus = s.genus.value();
    row.connected = row.genus.is_some();

    let params = ExploreParams::new(row.n, c.epsilon, row.seed);
    let ex = explore(hex, &params, Mode::OnGraph(&s.graph))?;
    row.steps = Some(ex.steps);
    row.vertices_found = Some(ex.vertices_found);
    row.bad_phase1 = Some(ex.bad_phase1);
    row.bad_total = Some(ex.bad_total);
    row.radius = Some(ex.radius);
    row.disconnected_event = Some(ex.disconnected);

    if !row.connected {
        return Ok(());
    }
    let b = diameter_bounds(
        &s,
        c.sources_for(row.n, row.seed),
        &SearchOptions::default(),
    )?;
    row.graph_diam = Some(b.graph_diameter);
    row.midpoint_diam = Some(b.midpoint_diameter);
    row.upper = Some(b.upper);
    row.lower = Some(b.lower);
    row.certified = Some(b.midpoint_certified);
    Ok(())
}

/// Reruns a single row of a campaign from its coordinates.
pub fn replay_row(c: &Campaign, a: f64, n: usize, rep: usize) -> Result<CampaignRow> {
    Ok(run_row(c, &Hexagon::build(a)?, n, rep))
}

/// Worker count from [`WORKERS_ENV`], if set.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&k| k > 0)
            .map(Some)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "{WORKERS_ENV} must be a positive integer, got {v:?}"
                ))
            }),
        Err(_) => Ok(None),
    }
}

/// Runs every `(a, n, replicate)` cell; rows come back in that order.
pub fn run_campaign(c: &Campaign) -> Result<Vec<CampaignRow>> {
    c.validate()?;
    let hexes: Vec<Hexagon> = c
        .a_grid
        .iter()
        .map(|&a| Hexagon::build(a))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize, usize)> = (0..c.a_grid.len())
        .flat_map(|ai| {
            c.n_grid
                .iter()
                .flat_map(move |&n| (0..c.runs).map(move |r| (ai, n, r)))
        })
        .collect();
    let work = || -> Vec<CampaignRow> {
        jobs.par_iter()
            .map(|&(ai, n, rep)| run_row(c, &hexes[ai], n, rep))
            .collect()
    };
    match workers_from_env()? {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

pub fn write_rows_csv<W: Write>(c: &Campaign, rows: &[CampaignRow], mut out: W) -> Result<()> {
    let join = |v: Vec<String>| v.join(",");
    writeln!(
        out,
        "# hyperpants campaign schema={} version={} seed={} a_grid={} n_grid={} runs={} epsilon={}",
        CSV_SCHEMA_VERSION,
        env!("CARGO_PKG_VERSION"),
        c.seed,
        join(c.a_grid.iter().map(f64::to_string).collect()),
        join(c.n_grid.iter().map(usize::to_string).collect()),
        c.runs,
        c.epsilon
    )?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct CellSummary {
    pub a: f64,
    pub n: usize,
    pub runs: usize,
    pub connected: usize,
    pub errors: usize,
    pub certified: usize,
    pub median_midpoint_diam: Option<f64>,
    pub median_graph_diam: Option<f64>,
    pub median_upper: Option<f64>,
    pub lower: Option<f64>,
    pub bounds_hold: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingFit {
    pub a: f64,
    pub slope: f64,
    pub intercept: f64,
    pub slope_ci: (f64, f64),
    pub delta_hat: f64,
    pub ratio: f64,
    pub n_values: Vec<usize>,
    pub medians: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CampaignSummary {
    pub schema: u32,
    pub seed: u64,
    pub cells: Vec<CellSummary>,
    pub fits: Vec<ScalingFit>,
    /// Why a fit is missing for some `a`.
    pub fit_errors: Vec<(f64, String)>,
    /// Pass/fail thresholds in reports are engineering choices.
    pub note: &'static str,
}

fn usable(r: &CampaignRow) -> Option<f64> {
    if r.connected && r.error.is_empty() {
        r.midpoint_diam
    } else {
        None
    }
}

pub fn summarize_cells(rows: &[CampaignRow]) -> Vec<CellSummary> {
    let mut cells: BTreeMap<(u64, usize), Vec<&CampaignRow>> = BTreeMap::new();
    for r in rows {
        cells.entry((r.a.to_bits(), r.n)).or_default().push(r);
    }
    let mut out: Vec<CellSummary> = cells
        .into_values()
        .map(|rs| {
            let pick = |f: &dyn Fn(&CampaignRow) -> Option<f64>| -> Vec<f64> {
                rs.iter().filter_map(|r| f(r)).collect()
            };
            let mids = pick(&usable);
            CellSummary {
                a: rs[0].a,
                n: rs[0].n,
                runs: rs.len(),
                connected: rs.iter().filter(|r| r.connected).count(),
                errors: rs.iter().filter(|r| !r.error.is_empty()).count(),
                certified: rs.iter().filter(|r| r.certified == Some(true)).count(),
                median_midpoint_diam: median(&mids),
                median_graph_diam: median(&pick(&|r| r.graph_diam.map(|d| d as f64))),
                median_upper: median(&pick(&|r| r.upper)),
                lower: rs.iter().find_map(|r| r.lower),
                bounds_hold: rs.iter().all(|r| match (r.lower, r.upper) {
                    (Some(l), Some(u)) => l <= u,
                    _ => true,
                }),
            }
        })
        .collect();
    out.sort_by(|x, y| x.a.total_cmp(&y.a).then(x.n.cmp(&y.n)));
    out
}

/// Least-squares slope of the median midpoint diameter against `ln n` at one `a`.
///
/// Needs at least 4 values of `n` with 10 usable replicates each. The 95%
/// interval comes from resampling replicates within each `n`.
pub fn fit_scaling(rows: &[CampaignRow], a: f64, delta_hat: f64, seed: u64) -> Result<ScalingFit> {
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows
        .iter()
        .filter(|r| (r.a - a).abs() <= 1e-12 * a.max(1.0))
    {
        if let Some(d) = usable(r) {
            by_n.entry(r.n).or_default().push(d);
        }
    }
    by_n.retain(|_, v| v.len() >= 10);
    if by_n.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "a = {a}: need 4 values of n with at least 10 usable replicates, have {}",
            by_n.len()
        )));
    }
    let n_values: Vec<usize> = by_n.keys().copied().collect();
    let xs: Vec<f64> = n_values.iter().map(|&n| (n as f64).ln()).collect();
    let medians: Vec<f64> = by_n
        .values()
        .map(|v| median(v).expect("cells are non-empty"))
        .collect();
    let fit = linear_fit(&xs, &medians)?;

    let mut r = rng::stream(seed);
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut buf = Vec::new();
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let ys: Vec<f64> = by_n
            .values()
            .map(|v| {
                buf.clear();
                buf.extend((0..v.len()).map(|_| v[r.gen_range(0..v.len())]));
                median(&buf).expect("resample is non-empty")
            })
            .collect();
        slopes.push(linear_fit(&xs, &ys)?.slope);
    }
    let lo = quantile(&slopes, 0.025)
        .expect("resamples exist")
        .min(fit.slope);
    let hi = quantile(&slopes, 0.975)
        .expect("resamples exist")
        .max(fit.slope);
    Ok(ScalingFit {
        a,
        slope: fit.slope,
        intercept: fit.intercept,
        slope_ci: (lo, hi),
        delta_hat,
        ratio: fit.slope * delta_hat,
        n_values,
        medians,
    })
}

/// Cell summaries plus a scaling fit for every `a` with enough data.
///
/// `delta_hat` supplies the critical exponent estimate for each `a`.
pub fn summarize(
    c: &Campaign,
    rows: &[CampaignRow],
    delta_hat: impl Fn(f64) -> Result<f64>,
) -> CampaignSummary {
    let mut fits = Vec::new();
    let mut fit_errors = Vec::new();
    for &a in &c.a_grid {
        match delta_hat(a)
            .and_then(|d| fit_scaling(rows, a, d, rng::derive_seed(c.seed, a.to_bits())))
        {
            Ok(f) => fits.push(f),
            Err(e) => fit_errors.push((a, e.to_string())),
        }
    }
    CampaignSummary {
        schema: CSV_SCHEMA_VERSION,
        seed: c.seed,
        cells: summarize_cells(rows),
        fits,
        fit_errors,
        note: "thresholds applied to these numbers are engineering choices",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Campaign {
        Campaign::parse("a_grid = 2\nn_grid = 6, 8\nruns = 2\nseed = 9 # trailing\n".as_bytes())
            .unwrap()
    }

    #[test]
    fn parses_config() {
        let c = tiny();
        assert_eq!(c.a_grid, vec![2.0]);
        assert_eq!(c.n_grid, vec![6, 8]);
        assert_eq!((c.runs, c.seed, c.epsilon), (2, 9, 0.1));
        assert!(Campaign::parse("a_grid=1\nn_grid=4\n".as_bytes()).is_err());
        assert!(Campaign::parse("a_grid=1\nn_grid=4\nruns=1\nbogus=2\n".as_bytes()).is_err());
        assert!(Campaign::parse("a_grid=1\nn_grid=4\nruns=0\n".as_bytes()).is_err());
        let s = Campaign::parse("a_grid=1\nn_grid=4\nruns=1\nsources=12\n".as_bytes()).unwrap();
        assert_eq!(s.sources, SourcePolicy::Sample(12));
    }

    #[test]
    fn campaign_is_deterministic_and_replayable() {
        let c = tiny();
        let rows = run_campaign(&c).unwrap();
        assert_eq!(rows.len(), 4);
        let again = run_campaign(&c).unwrap();
        for (x, y) in rows.iter().zip(&again) {
            assert_eq!(x.seed, y.seed);
            assert_eq!(
                x.midpoint_diam.map(f64::to_bits),
                y.midpoint_diam.map(f64::to_bits)
            );
        }
        let r = replay_row(&c, 2.0, 8, 1).unwrap();
        assert_eq!(
            r.midpoint_diam.map(f64::to_bits),
            rows[3].midpoint_diam.map(f64::to_bits)
        );
        for row in &rows {
            if let (Some(l), Some(u)) = (row.lower, row.upper) {
                assert!(l <= u);
            }
        }
        let mut buf = Vec::new();
        write_rows_csv(&c, &rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# hyperpants campaign schema=1"));
        assert!(text.lines().nth(1).unwrap().starts_with(
            "seed,n,a,genus,connected,graph_diam,midpoint_diam,upper,lower,certified,replicate,"
        ));
    }

    fn synthetic_rows(seed: u64) -> Vec<CampaignRow> {
        let mut r = rng::stream(seed);
        let mut rows = Vec::new();
        for n in [64usize, 128, 256, 512, 1024] {
            for rep in 0..30 {
                // roughly Gaussian noise with standard deviation 0.3
                let noise: f64 = (0..12).map(|_| r.gen::<f64>()).sum::<f64>() - 6.0;
                let mut row = blank_row(0, 2.0, n, rep);
                row.connected = true;
                row.midpoint_diam = Some(2.0 * (n as f64).ln() + 0.5 + 0.3 * noise);
                rows.push(row);
            }
        }
        rows
    }

    #[test]
    fn recovers_a_synthetic_slope() {
        let rows = synthetic_rows(1);
        let f = fit_scaling(&rows, 2.0, 0.5, 3).unwrap();
        assert!((f.slope - 2.0).abs() < 0.1);
        assert!(f.slope_ci.0 <= f.slope && f.slope <= f.slope_ci.1);
        assert!((f.ratio - f.slope * 0.5).abs() < 1e-15);
        assert!(fit_scaling(&rows, 4.0, 0.5, 3).is_err());

        // the interval is a 95% one, so it should cover the true slope most of the time
        let covered = (0..40)
            .filter(|&s| {
                let f = fit_scaling(&synthetic_rows(100 + s), 2.0, 0.5, s).unwrap();
                f.slope_ci.0 <= 2.0 && 2.0 <= f.slope_ci.1
            })
            .count();
        assert!(covered >= 32, "coverage {covered}/40");
    }
}
