//! Command-line front end: argument parsing, signature files, and the CSV,
//! SVG and JSON artifacts written under the output directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{enumerate_family, is_prime, EpsilonSignature, FactorSieve};
use crate::atlas::{enumerate_signatures, gsharp_grid, ShapeSpec};
use crate::expsums::{cusp_constants, find_cusp_points, local_slope_probe};
use crate::moments::{convergence_report, default_hmax, MomentOrder};
use crate::paths::{eps_signature, path_grid, path_grid_with, sup_distance, PathSample};
use crate::random_model::{doubling_gap, estimate_deviation_prob, sample_limit_path_with, sample_multiplicative};
use crate::{Error, Result};

/// Environment variable holding the number of worker threads.
pub const WORKERS_ENV: &str = "GAUSS_PATHS_WORKERS";

#[derive(Clone, Debug, Parser, Serialize)]
#[command(name = "gauss-paths", version, about = "Quadratic Gauss paths and their limit shapes")]
pub struct RunConfig {
    /// Directory receiving every artifact; created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// JSON signature file: {"Z": 5, "eps": {"2": 1, "3": 1, "5": -1}}.
    #[arg(long, global = true)]
    pub signature: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// The Gauss path of one modulus on a uniform grid.
    Path {
        #[arg(long)]
        c: u64,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
    },
    /// Every limit shape for primes up to Z.
    Atlas {
        #[arg(long = "Z")]
        z: u64,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
    /// Local constants at the cusp candidates a/q of a signature.
    Cusp {
        #[command(flatten)]
        sig: InlineSignature,
        /// Search primes Z < q ≤ qmax passing the cusp criterion.
        #[arg(long, default_value_t = 100)]
        qmax: u64,
        /// Report every prime q ≤ qmax, not only the cusp candidates.
        #[arg(long)]
        all: bool,
    },
    /// Normalized increments of the shape near t₀ = a/q.
    Probe {
        #[command(flatten)]
        sig: InlineSignature,
        #[arg(long)]
        a: i64,
        #[arg(long)]
        q: u64,
        #[arg(long, value_delimiter = ',', default_value = "1e-6,-1e-6,1e-8,-1e-8")]
        offsets: Vec<f64>,
        #[arg(long, default_value_t = 1e-7)]
        tolerance: f64,
    },
    /// Empirical moments over the family against the limit moment.
    Moments {
        #[command(flatten)]
        sig: InlineSignature,
        #[arg(long, value_delimiter = ',', default_value = "0.3")]
        t: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        m: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        n: Vec<u32>,
        #[arg(long = "Q", value_delimiter = ',', default_value = "1000,10000")]
        q: Vec<u64>,
        #[arg(long)]
        hmax: Option<u64>,
    },
    /// Draws of the random series; with --delta, a deviation estimate.
    Sample {
        #[command(flatten)]
        sig: InlineSignature,
        /// Truncation |n+1| ≤ N.
        #[arg(long = "N", default_value_t = 100_000)]
        n: u64,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// Groups the family by signature and measures the distance to each shape.
    Classify {
        #[arg(long = "Q")]
        q: u64,
        #[arg(long = "Z")]
        z: u64,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
}

/// A signature given on the command line, as an alternative to --signature.
#[derive(Clone, Debug, Args, Serialize)]
pub struct InlineSignature {
    #[arg(long = "Z")]
    pub z: Option<u64>,
    /// Values for the primes ≤ Z in increasing order, e.g. 1,1,-1.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub eps: Option<Vec<i8>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SignatureFile {
    #[serde(rename = "Z")]
    z: u64,
    eps: BTreeMap<String, i8>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::Config(m),
        other => other,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses a signature file; a prime ≤ Z without an entry is an error.
pub fn parse_signature(text: &str) -> Result<EpsilonSignature> {
    let raw: SignatureFile = serde_json::from_str(text).map_err(|e| config_err(format!("signature file: {e}")))?;
    let mut pairs = Vec::with_capacity(raw.eps.len());
    for (k, v) in &raw.eps {
        let p: u64 = k
            .parse()
            .map_err(|_| config_err(format!("signature file: key {k:?} is not an integer")))?;
        if !is_prime(p) {
            return Err(config_err(format!("signature file: key {p} is not prime")));
        }
        pairs.push((p, *v));
    }
    EpsilonSignature::from_pairs(raw.z, &pairs).map_err(as_config)
}

pub fn read_signature(path: &Path) -> Result<EpsilonSignature> {
    parse_signature(&fs::read_to_string(path).map_err(io_err(path))?)
}

pub fn signature_json(sig: &EpsilonSignature) -> String {
    let eps: BTreeMap<u64, i8> = sig.pairs().collect();
    let body: Vec<String> = eps.iter().map(|(p, v)| format!("\"{p}\": {v}")).collect();
    format!("{{\"Z\": {}, \"eps\": {{{}}}}}\n", sig.z(), body.join(", "))
}

/// Twelve significant digits, then the shortest form of that value; −0
/// prints as 0.
pub fn fmt_float(x: f64) -> String {
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r:?}")
}

pub fn path_csv(sample: &PathSample) -> String {
    let mut s = String::from("t,re,im\n");
    for (i, z) in sample.values.iter().enumerate() {
        let _ = writeln!(s, "{},{},{}", fmt_float(sample.t(i)), fmt_float(z.re), fmt_float(z.im));
    }
    s
}

/// Reads `t,re,im` rows back; the grid is taken from the row count.
pub fn parse_path_csv(text: &str, label: &str) -> Result<PathSample> {
    let mut lines = text.lines();
    if lines.next() != Some("t,re,im") {
        return Err(config_err("path CSV: missing t,re,im header"));
    }
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<f64> = line
            .split(',')
            .map(|x| x.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| config_err(format!("path CSV row {}: {e}", i + 1)))?;
        if f.len() != 3 {
            return Err(config_err(format!("path CSV row {}: expected 3 fields", i + 1)));
        }
        values.push(Complex64::new(f[1], f[2]));
    }
    if values.len() < 2 {
        return Err(config_err("path CSV: fewer than two rows"));
    }
    Ok(PathSample {
        resolution: values.len() - 1,
        values,
        label: label.to_string(),
    })
}

/// One polyline in the complex plane (imaginary axis up), the view box
/// fitted to the data with a 5% margin.
pub fn svg_string(sample: &PathSample) -> Result<String> {
    if sample.values.is_empty() {
        return Err(Error::InvalidArgument("cannot draw an empty sample".into()));
    }
    let xs = sample.values.iter().map(|z| z.re);
    let ys = sample.values.iter().map(|z| -z.im);
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let (mx, my) = (0.05 * span(x0, x1), 0.05 * span(y0, y1));
    let (vx, vy) = (x0 - mx, y0 - my);
    let (vw, vh) = (span(x0, x1) + 2.0 * mx, span(y0, y1) + 2.0 * my);
    let points: Vec<String> = sample
        .values
        .iter()
        .map(|z| format!("{},{}", fmt_float(z.re), fmt_float(-z.im)))
        .collect();
    Ok(format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n\
         <title>{}</title>\n\
         <polyline fill=\"none\" stroke=\"black\" stroke-width=\"{}\" stroke-linejoin=\"round\" points=\"{}\"/>\n\
         </svg>\n",
        fmt_float(vx),
        fmt_float(vy),
        fmt_float(vw),
        fmt_float(vh),
        sample.label,
        fmt_float(0.005 * vw),
        points.join(" ")
    ))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

pub fn emit_csv(sample: &PathSample, out: &Path) -> Result<()> {
    write_file(out, &path_csv(sample))
}

pub fn emit_svg(sample: &PathSample, out: &Path) -> Result<()> {
    write_file(out, &svg_string(sample)?)
}

fn emit_json<T: Serialize>(value: &T, out: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    write_file(out, &s)
}

fn require_signature(cfg: &RunConfig, inline: &InlineSignature) -> Result<EpsilonSignature> {
    optional_signature(cfg, inline)?.ok_or_else(|| config_err("a signature is required: --signature FILE or --Z with --eps"))
}

fn optional_signature(cfg: &RunConfig, inline: &InlineSignature) -> Result<Option<EpsilonSignature>> {
    match (&cfg.signature, inline.z, &inline.eps) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            Err(config_err("give either --signature or --Z/--eps, not both"))
        }
        (Some(path), None, None) => read_signature(path).map(Some),
        (None, Some(z), Some(eps)) => EpsilonSignature::new(z, eps).map(Some).map_err(as_config),
        (None, Some(_), None) | (None, None, Some(_)) => Err(config_err("--Z and --eps go together")),
        (None, None, None) => Ok(None),
    }
}

#[derive(Serialize)]
struct AtlasEntry {
    tag: String,
    values: Vec<i8>,
    truncation: u64,
    tail_bound: f64,
    csv: String,
    svg: String,
}

#[derive(Serialize)]
struct AtlasIndex {
    #[serde(rename = "Z")]
    z: u64,
    grid: usize,
    tolerance: f64,
    primes: Vec<u64>,
    shapes: Vec<AtlasEntry>,
}

#[derive(Serialize)]
struct ClassGroup {
    tag: String,
    values: Vec<i8>,
    count: usize,
    mean_distance: f64,
    max_distance: f64,
}

#[derive(Serialize)]
struct DeviationSummary<'a> {
    #[serde(rename = "Z")]
    z: u64,
    delta: f64,
    trials: usize,
    #[serde(rename = "N")]
    n: u64,
    #[serde(rename = "R")]
    r: usize,
    seed: u64,
    estimate: f64,
    stderr: f64,
    doubling_gap: f64,
    signature: &'a [i8],
    mean_distance: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    config: &'a RunConfig,
    artifacts: Vec<String>,
}

/// Runs one command, writing its artifacts and a run manifest; returns the
/// artifact names relative to the output directory.
pub fn run(cfg: &RunConfig) -> Result<Vec<String>> {
    let out = &cfg.out;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut artifacts = Vec::new();
    let mut put = |name: String| -> PathBuf {
        let p = out.join(&name);
        artifacts.push(name);
        p
    };
    match &cfg.command {
        Command::Path { c, grid } => {
            if cfg.signature.is_some() {
                return Err(config_err("path takes no signature"));
            }
            let sample = path_grid(*c, *grid)?;
            emit_csv(&sample, &put(format!("path_c{c}.csv")))?;
            emit_svg(&sample, &put(format!("path_c{c}.svg")))?;
        }
        Command::Atlas { z, grid, tolerance } => {
            let sigs = enumerate_signatures(*z)?;
            let shapes = sigs
                .par_iter()
                .map(|s| {
                    let spec = ShapeSpec::new(s, *tolerance)?;
                    Ok((spec.clone(), gsharp_grid(&spec, *grid)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut entries = Vec::new();
            for (spec, sample) in &shapes {
                let tag = spec.signature.tag();
                let (csv, svg) = (format!("{tag}.csv"), format!("{tag}.svg"));
                emit_csv(sample, &put(csv.clone()))?;
                emit_svg(sample, &put(svg.clone()))?;
                entries.push(AtlasEntry {
                    tag,
                    values: spec.signature.values().to_vec(),
                    truncation: spec.b,
                    tail_bound: spec.tail_bound,
                    csv,
                    svg,
                });
            }
            let index = AtlasIndex {
                z: *z,
                grid: *grid,
                tolerance: *tolerance,
                primes: sigs[0].primes().to_vec(),
                shapes: entries,
            };
            emit_json(&index, &put("atlas_index.json".into()))?;
        }
        Command::Cusp { sig, qmax, all } => {
            let s = require_signature(cfg, sig)?;
            let qs: Vec<u64> = if *all {
                (s.z() + 1..=*qmax).filter(|&q| is_prime(q)).collect()
            } else {
                find_cusp_points(&s, *qmax).into_iter().map(|e| e.0).collect()
            };
            let reports = qs
                .par_iter()
                .flat_map_iter(|&q| (1..q as i64).map(move |a| (a, q)))
                .map(|(a, q)| cusp_constants(a, q, &s))
                .collect::<Result<Vec<_>>>()?;
            emit_json(&reports, &put("cusp.json".into()))?;
        }
        Command::Probe {
            sig,
            a,
            q,
            offsets,
            tolerance,
        } => {
            let s = require_signature(cfg, sig)?;
            let rows = local_slope_probe(&s, *a, *q, offsets, *tolerance)?;
            let mut csv = String::from("offset,quotient_re,quotient_im\n");
            for r in &rows {
                let _ = writeln!(
                    csv,
                    "{},{},{}",
                    fmt_float(r.offset),
                    fmt_float(r.quotient.re),
                    fmt_float(r.quotient.im)
                );
            }
            write_file(&put("probe.csv".into()), &csv)?;
        }
        Command::Moments { sig, t, m, n, q, hmax } => {
            let s = optional_signature(cfg, sig)?;
            let order = MomentOrder::new(t.clone(), m.clone(), n.clone()).map_err(as_config)?;
            let hmax = hmax.unwrap_or_else(|| default_hmax(order.degree()));
            let report = convergence_report(&order, q, hmax, s.as_ref())?;
            let mut csv = String::from("Q,re_emp,im_emp,re_lim,im_lim,abs_diff\n");
            for r in &report.rows {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    r.q,
                    fmt_float(r.empirical.re),
                    fmt_float(r.empirical.im),
                    fmt_float(r.limit.re),
                    fmt_float(r.limit.im),
                    fmt_float(r.abs_diff)
                );
            }
            write_file(&put("moments.csv".into()), &csv)?;
            emit_json(&report, &put("moments.json".into()))?;
        }
        Command::Sample {
            sig,
            n,
            grid,
            count,
            delta,
            trials,
        } => {
            let s = optional_signature(cfg, sig)?;
            if let Some(delta) = delta {
                let s = s.ok_or_else(|| config_err("--delta needs a signature"))?;
                let rep = estimate_deviation_prob(&s, *delta, *trials, *n, *grid, cfg.seed)?;
                let summary = DeviationSummary {
                    z: rep.z,
                    delta: rep.delta,
                    trials: rep.trials,
                    n: rep.n,
                    r: rep.r,
                    seed: rep.seed,
                    estimate: rep.estimate,
                    stderr: rep.stderr,
                    doubling_gap: rep.doubling_gap,
                    signature: s.values(),
                    mean_distance: rep.distances.iter().sum::<f64>() / rep.trials as f64,
                };
                emit_json(&summary, &put("deviation.json".into()))?;
            } else {
                let sieve = FactorSieve::new(2 * *n as usize + 1);
                let mut gaps = BTreeMap::new();
                for k in 0..*count {
                    let seed = cfg.seed + k;
                    let x = sample_multiplicative(2 * *n + 1, s.as_ref(), seed)?;
                    let path = sample_limit_path_with(&x, *n, *grid, &sieve)?;
                    gaps.insert(seed, doubling_gap(&x, *n, *grid, &sieve)?);
                    emit_csv(&path, &put(format!("sample_{seed}.csv")))?;
                    emit_svg(&path, &put(format!("sample_{seed}.svg")))?;
                }
                emit_json(&gaps, &put("doubling.json".into()))?;
            }
        }
        Command::Classify { q, z, grid, tolerance } => {
            if cfg.signature.is_some() {
                return Err(config_err("classify derives signatures itself"));
            }
            let family = enumerate_family(*q, None)?;
            let mut groups: BTreeMap<EpsilonSignature, Vec<u64>> = BTreeMap::new();
            for &c in &family.members {
                groups.entry(eps_signature(c, *z)?).or_default().push(c);
            }
            let sieve = FactorSieve::new(2 * *q as usize + 1);
            let mut rows = Vec::new();
            for (s, members) in &groups {
                let shape = gsharp_grid(&ShapeSpec::new(s, *tolerance)?, *grid)?;
                let d = members
                    .par_iter()
                    .map(|&c| sup_distance(&path_grid_with(c, *grid, Some(&sieve))?, &shape))
                    .collect::<Result<Vec<f64>>>()?;
                rows.push(ClassGroup {
                    tag: s.tag(),
                    values: s.values().to_vec(),
                    count: members.len(),
                    mean_distance: d.iter().sum::<f64>() / d.len() as f64,
                    max_distance: d.iter().copied().fold(0.0, f64::max),
                });
            }
            let mut csv = String::from("signature,count,mean_distance,max_distance\n");
            for r in &rows {
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    r.tag,
                    r.count,
                    fmt_float(r.mean_distance),
                    fmt_float(r.max_distance)
                );
            }
            write_file(&put("classify.csv".into()), &csv)?;
            emit_json(&rows, &put("classify.json".into()))?;
        }
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        artifacts: artifacts.clone(),
    };
    emit_json(&manifest, &out.join("run-manifest.json"))?;
    Ok(artifacts)
}

/// Process exit status for a failed run: 2 for bad input, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::Config(_) => 2,
        Error::Budget(_) | Error::Io { .. } => 1,
    }
}

/// Sizes the global thread pool from the worker-count variable, if set.
pub fn init_workers() -> Result<()> {
    let Ok(v) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| config_err(format!("{WORKERS_ENV}={v:?} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| config_err(format!("thread pool: {e}")))
}
