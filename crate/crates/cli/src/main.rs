use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use hyperpants::experiments::{run_campaign, summarize, write_rows_csv, Campaign};
use hyperpants::exploration::{explore, ExploreParams, KeyMode, Mode};
use hyperpants::graph::{sample_graph, Surface, TrivalentGraph};
use hyperpants::hexagon::Hexagon;
use hyperpants::metric::{diameter_bounds, SearchOptions, Sources};
use hyperpants::orbit::{
    count, estimate_delta, estimate_delta_auto, write_counts_csv, OrbitOptions, DEFAULT_CAP,
};
use hyperpants::rng::derive_seed;

#[derive(Parser)]
#[command(
    name = "hyperpants",
    version,
    about = "Random hyperbolic surfaces glued from pants"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the right-angled hexagon for side length a and print its constants.
    Hexagon {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        json: bool,
    },
    /// Count hextree orbit points within distance r of the base midpoint.
    Count {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u64,
    },
    /// Estimate the critical exponent from a log-linear fit of orbit counts.
    Delta {
        #[arg(long)]
        a: f64,
        /// Lower end of the fit window; with --rmax, replaces the automatic window.
        #[arg(long, requires = "rmax")]
        rmin: Option<f64>,
        #[arg(long, requires = "rmin")]
        rmax: Option<f64>,
        #[arg(long, default_value_t = 0.25)]
        step: f64,
        /// Write the (R, N) pairs of the fit to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Sample a configuration-model trivalent graph on 2n vertices.
    SampleGraph {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one distance-ordered exploration and print its report as JSON.
    Explore {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long)]
        seed: u64,
        /// Explore this graph file instead of pairing online.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        start: usize,
        /// Key legs by distance to the a-side segment instead of its geodesic.
        #[arg(long)]
        segment_distance: bool,
        /// Include the step trace and discovered pants.
        #[arg(long)]
        trace: bool,
    },
    /// Run many online explorations and write one CSV row per run.
    ExploreBatch {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        runs: u64,
        #[arg(long)]
        segment_distance: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bound the diameter of a sampled surface S_{a,n}.
    Diameter {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        seed: u64,
        /// `all`, or a number of sampled source midpoints.
        #[arg(long, default_value = "all")]
        sources: String,
        #[arg(long)]
        json: bool,
        /// Batch mode: sample this many surfaces with derived seeds and write CSV.
        #[arg(long)]
        runs: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a campaign described by a key=value config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn parse_sources(s: &str, seed: u64) -> Result<Sources> {
    if s == "all" {
        return Ok(Sources::All);
    }
    let count: usize = s
        .parse()
        .with_context(|| format!("--sources must be `all` or a count, got {s:?}"))?;
    if count == 0 {
        bail!("--sources must be at least 1");
    }
    Ok(Sources::Sample {
        count,
        seed: derive_seed(seed, 1),
    })
}

fn key_mode(segment: bool) -> KeyMode {
    if segment {
        KeyMode::Segment
    } else {
        KeyMode::Line
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Hexagon { a, json } => {
            let h = Hexagon::build(a)?;
            let pc = h.pants_constants();
            let r = h.residuals();
            if json {
                let v = serde_json::json!({
                    "a": h.a(),
                    "b": h.b(),
                    "inradius_a": h.inradius_a(),
                    "inradius_b": h.inradius_b(),
                    "pants": pc,
                    "residuals": r,
                    "vertices": h.vertices().iter().map(|p| p.coords()).collect::<Vec<_>>(),
                });
                println!("{}", serde_json::to_string_pretty(&v)?);
            } else {
                println!("a                          {}", h.a());
                println!("b                          {}", h.b());
                println!("inradius to a-sides        {}", h.inradius_a());
                println!("inradius to b-sides        {}", h.inradius_b());
                println!(
                    "adjacent midpoint distance {}",
                    pc.adjacent_midpoint_distance
                );
                println!("eccentricity bound         {}", pc.eccentricity_bound);
                println!("closure residual           {:.3e}", r.closure);
                println!("max |cos angle|            {:.3e}", r.max_angle);
            }
        }
        Command::Count { a, r, cap } => {
            let h = Hexagon::build(a)?;
            let opts = OrbitOptions {
                cap,
                ..OrbitOptions::default()
            };
            println!("{}", count(&h, r, &opts)?);
        }
        Command::Delta {
            a,
            rmin,
            rmax,
            step,
            csv,
        } => {
            let h = Hexagon::build(a)?;
            let opts = OrbitOptions::default();
            let est = match (rmin, rmax) {
                (Some(lo), Some(hi)) => estimate_delta(&h, lo, hi, step, &opts)?,
                _ => estimate_delta_auto(&h, &opts)?,
            };
            if let Some(path) = csv {
                write_counts_csv(&est.counts, output(Some(&path))?)?;
            }
            let v = serde_json::json!({
                "a": a,
                "delta": est.delta,
                "log_cst": est.log_cst,
                "r_window": est.r_window,
                "residual_rms": est.residual_rms,
                "half_window_slope_diff": est.half_window_slope_diff,
            });
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
        Command::SampleGraph { n, seed, out } => {
            let g = sample_graph(n, seed)?;
            let mut w = output(out.as_deref())?;
            g.write_text(&mut w)?;
            w.flush()?;
        }
        Command::Explore {
            n,
            a,
            eps,
            seed,
            graph,
            start,
            segment_distance,
            trace,
        } => {
            let h = Hexagon::build(a)?;
            let params = ExploreParams {
                start,
                key_mode: key_mode(segment_distance),
                trace,
                ..ExploreParams::new(n, eps, seed)
            };
            let report = match graph {
                Some(path) => {
                    let file =
                        File::open(&path).with_context(|| format!("opening {}", path.display()))?;
                    let g = TrivalentGraph::read_text(BufReader::new(file))?;
                    explore(&h, &params, Mode::OnGraph(&g))?
                }
                None => explore(&h, &params, Mode::Online)?,
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::ExploreBatch {
            n,
            a,
            eps,
            seed,
            runs,
            segment_distance,
            out,
        } => {
            let h = Hexagon::build(a)?;
            let mut w = output(out.as_deref())?;
            writeln!(
                w,
                "seed,n,a,steps,vertices_found,bad_phase1,bad_total,radius,disconnected"
            )?;
            for run in 0..runs {
                let s = derive_seed(seed, run);
                let params = ExploreParams {
                    key_mode: key_mode(segment_distance),
                    ..ExploreParams::new(n, eps, s)
                };
                let r = explore(&h, &params, Mode::Online)?;
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{}",
                    s,
                    n,
                    a,
                    r.steps,
                    r.vertices_found,
                    r.bad_phase1,
                    r.bad_total,
                    r.radius,
                    r.disconnected
                )?;
            }
            w.flush()?;
        }
        Command::Diameter {
            n,
            a,
            seed,
            sources,
            json,
            runs,
            out,
        } => {
            let h = Hexagon::build(a)?;
            let opts = SearchOptions::default();
            match runs {
                None => {
                    let s = Surface::with_hexagon(sample_graph(n, seed)?, h);
                    let b = diameter_bounds(&s, parse_sources(&sources, seed)?, &opts)?;
                    if json {
                        println!("{}", serde_json::to_string_pretty(&b)?);
                    } else {
                        println!("lower             {}", b.lower);
                        println!("midpoint_diameter {}", b.midpoint_diameter);
                        println!("upper             {}", b.upper);
                        println!("certified         {}", b.midpoint_certified);
                    }
                }
                Some(runs) => {
                    let mut w = output(out.as_deref())?;
                    writeln!(
                        w,
                        "seed,n,a,genus,connected,graph_diam,midpoint_diam,upper,lower,certified"
                    )?;
                    for run in 0..runs {
                        let s_seed = derive_seed(seed, run);
                        let s = Surface::with_hexagon(sample_graph(n, s_seed)?, h.clone());
                        match s.genus.value() {
                            None => writeln!(w, "{s_seed},{n},{a},,false,,,,,")?,
                            Some(g) => {
                                let b =
                                    diameter_bounds(&s, parse_sources(&sources, s_seed)?, &opts)?;
                                writeln!(
                                    w,
                                    "{},{},{},{},true,{},{},{},{},{}",
                                    s_seed,
                                    n,
                                    a,
                                    g,
                                    b.graph_diameter,
                                    b.midpoint_diameter,
                                    b.upper,
                                    b.lower,
                                    b.midpoint_certified
                                )?;
                            }
                        }
                    }
                    w.flush()?;
                }
            }
        }
        Command::Experiment { config } => {
            let file =
                File::open(&config).with_context(|| format!("opening {}", config.display()))?;
            let c = Campaign::parse(BufReader::new(file))?;
            let rows = run_campaign(&c)?;
            let mut w = output(c.out_csv.as_deref())?;
            write_rows_csv(&c, &rows, &mut w)?;
            w.flush()?;
            let summary = summarize(&c, &rows, |a| {
                Ok(estimate_delta_auto(&Hexagon::build(a)?, &OrbitOptions::default())?.delta)
            });
            let text = serde_json::to_string_pretty(&summary)?;
            match &c.out_json {
                Some(p) => std::fs::write(p, text + "\n")
                    .with_context(|| format!("writing {}", p.display()))?,
                None => eprintln!("{text}"),
            }
        }
    }
    Ok(())
}
