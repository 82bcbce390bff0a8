use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::value::RawValue;

use agmonlab::agmon::RateChoice;
use agmonlab::fixtures::green_interior;
use agmonlab::generators::{gen_family, gen_lattice_box, Family, Potential};
use agmonlab::hardy::BoundaryData;
use agmonlab::io::{graph_to_json, load_graph};
use agmonlab::metrics::{agmon_metric, scaled_combinatorial_lengths, AgmonVariant};
use agmonlab::report::format_f64;
use agmonlab::spectral::{eigensolve_lowest, lambda0_ess_estimate, EssEstimate, Method};
use agmonlab::suites::{default_radii, run_suite, Status, Suite, SuiteConfig, SuiteReport};
use agmonlab::{GraphFunction, WeightedGraph, VERSION};

const EXIT_ERROR: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "agmonlab", version, about = "Decay certificates for discrete Schrödinger operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated graph file
    Gen {
        #[command(flatten)]
        source: GeneratorArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lowest eigenpairs and an estimate of the bottom of the essential spectrum
    Spectrum {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[command(flatten)]
        exhaustion: ExhaustionArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hardy weight of the Green function as CSV
    Hardy {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Agmon distance from the root as CSV
    AgmonMetric {
        #[command(flatten)]
        source: SourceArgs,
        /// Constant Hardy weight instead of the Green-function weight
        #[arg(long)]
        weight_const: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite and write its report
    Verify {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        suite: String,
        #[command(flatten)]
        exhaustion: ExhaustionArg,
        /// Stability threshold between the two largest exhaustion levels
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Radius of the exceptional ball around the root
        #[arg(long, default_value_t = 0)]
        k_radius: usize,
        #[arg(long, value_enum, default_value_t = RateArg::ClosedForm)]
        rate: RateArg,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 8)]
        max_exact_size: usize,
        /// Multiply every checked right-hand side (failure-path testing)
        #[arg(long, hide = true, default_value_t = 1.0)]
        doctor_rhs: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge report files into one summary
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct GeneratorArgs {
    /// Lattice dimension
    #[arg(long, requires = "radius", conflicts_with = "family")]
    lattice: Option<usize>,
    #[arg(long)]
    radius: Option<usize>,
    /// Potential value at the origin
    #[arg(long, allow_hyphen_values = true)]
    well: Option<f64>,
    /// path:N, cycle:N, star:N, complete:N or tree:BRANCHING:DEPTH
    #[arg(long)]
    family: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct SourceArgs {
    #[arg(long, conflicts_with_all = ["lattice", "family"])]
    graph: Option<PathBuf>,
    #[command(flatten)]
    generator: GeneratorArgs,
}

#[derive(Args, Debug, Clone)]
struct ExhaustionArg {
    /// Ball radii as start:stop:step or a comma list
    #[arg(long)]
    exhaustion: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum RateArg {
    Bisect,
    ClosedForm,
}

#[derive(Serialize, Debug)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum GraphSource {
    File {
        path: String,
    },
    Lattice {
        dim: usize,
        radius: usize,
        #[serde(with = "agmonlab::report::opt_float17")]
        well: Option<f64>,
    },
    Family {
        spec: String,
    },
}

fn parse_family(spec: &str) -> Result<Family> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |i: usize| -> Result<usize> {
        let s = parts.get(i).with_context(|| format!("family {spec:?} is missing a number"))?;
        s.parse().with_context(|| format!("bad number {s:?} in family {spec:?}"))
    };
    let fam = match parts[0] {
        "path" => Family::Path(num(1)?),
        "cycle" => Family::Cycle(num(1)?),
        "star" => Family::Star(num(1)?),
        "complete" => Family::Complete(num(1)?),
        "tree" => Family::Tree { branching: num(1)?, depth: num(2)? },
        other => bail!("unknown family {other:?}, expected path, cycle, star, complete or tree"),
    };
    Ok(fam)
}

fn generate(a: &GeneratorArgs) -> Result<(WeightedGraph, GraphSource)> {
    if let Some(spec) = &a.family {
        if a.well.is_some() {
            bail!("--well only applies to lattice boxes");
        }
        let g = gen_family(&parse_family(spec)?)?;
        return Ok((g, GraphSource::Family { spec: spec.clone() }));
    }
    let (Some(dim), Some(radius)) = (a.lattice, a.radius) else {
        bail!("give --graph FILE, --lattice D --radius N, or --family SPEC");
    };
    let potential = match a.well {
        Some(c) => Potential::Well(c),
        None => Potential::Zero,
    };
    let g = gen_lattice_box(dim, radius, potential)?;
    Ok((g, GraphSource::Lattice { dim, radius, well: a.well }))
}

fn load(s: &SourceArgs) -> Result<(WeightedGraph, GraphSource)> {
    match &s.graph {
        Some(p) => {
            let g = load_graph(p).with_context(|| format!("reading graph {}", p.display()))?;
            Ok((g, GraphSource::File { path: p.display().to_string() }))
        }
        None => generate(&s.generator),
    }
}

fn parse_exhaustion(spec: &str) -> Result<Vec<usize>> {
    let radii: Vec<usize> = if spec.contains(':') {
        let p: Vec<usize> = spec
            .split(':')
            .map(|t| t.trim().parse().with_context(|| format!("bad number {t:?} in --exhaustion")))
            .collect::<Result<_>>()?;
        let [start, stop, step] = p[..] else {
            bail!("--exhaustion expects start:stop:step");
        };
        if step == 0 || start > stop {
            bail!("--exhaustion needs step > 0 and start <= stop");
        }
        (start..=stop).step_by(step).collect()
    } else {
        spec.split(',')
            .map(|t| t.trim().parse().with_context(|| format!("bad number {t:?} in --exhaustion")))
            .collect::<Result<_>>()?
    };
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        bail!("--exhaustion radii must be strictly increasing");
    }
    Ok(radii)
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct SpectrumReport<'a> {
    version: &'static str,
    graph: &'a GraphSource,
    vertices: usize,
    k: usize,
    #[serde(with = "agmonlab::report::vec_float17")]
    eigenvalues: Vec<f64>,
    #[serde(with = "agmonlab::report::vec_float17")]
    residuals: Vec<f64>,
    method: Method,
    exhaustion: Vec<usize>,
    essential: Option<EssEstimate>,
}

fn spectrum(source: &SourceArgs, k: usize, exhaustion: &ExhaustionArg, out: Option<&Path>) -> Result<u8> {
    let (g, src) = load(source)?;
    if k == 0 || k > g.n() {
        bail!("--k must lie in 1..={}", g.n());
    }
    let res = eigensolve_lowest(&g, k)?;
    let root = g.origin().unwrap_or(0);
    // the largest ball may cover the graph; the estimate needs a nonempty complement
    let radii = match &exhaustion.exhaustion {
        Some(s) => parse_exhaustion(s)?,
        None => default_radii(&g, root).into_iter().filter(|&r| g.ball(root, r).len() < g.n()).collect(),
    };
    let essential = if radii.is_empty() {
        None
    } else {
        let sets: Vec<_> = radii.iter().map(|&r| g.ball(root, r)).collect();
        Some(lambda0_ess_estimate(&g, &sets)?)
    };
    let report = SpectrumReport {
        version: VERSION,
        graph: &src,
        vertices: g.n(),
        k,
        eigenvalues: res.eigenvalues,
        residuals: res.residuals,
        method: res.method,
        exhaustion: radii,
        essential,
    };
    write_out(out, &to_json(&report)?)?;
    Ok(0)
}

fn distance_to_root(g: &WeightedGraph, root: usize) -> Vec<f64> {
    match g.coords() {
        Some(c) => (0..g.n())
            .map(|x| c[x].iter().zip(&c[root]).map(|(a, b)| ((a - b) * (a - b)) as f64).sum::<f64>().sqrt())
            .collect(),
        None => g.hop_distance(&[root]).into_iter().map(|d| d as f64).collect(),
    }
}

fn hardy(source: &SourceArgs, alpha: f64, out: Option<&Path>) -> Result<u8> {
    let (g, _) = load(source)?;
    let root = g.origin().unwrap_or(0);
    let gb = green_interior(g, root, &BoundaryData::Zero)?;
    let sub = &gb.interior;
    let sub_root = sub.origin().unwrap_or(0);
    let dist = distance_to_root(sub, sub_root);
    let mut csv = String::from("vertex,label,v,w,v_alpha,norm,w_norm2\n");
    for x in 0..sub.n() {
        let (v, w) = (gb.v[x], gb.hardy.w[x]);
        csv.push_str(&format!(
            "{x},{},{},{},{},{},{}\n",
            sub.labels()[x],
            format_f64(v),
            format_f64(w),
            format_f64(v.powf(alpha)),
            format_f64(dist[x]),
            format_f64(w * dist[x] * dist[x]),
        ));
    }
    for warning in &gb.hardy.warnings {
        eprintln!("warning: {warning}");
    }
    write_out(out, &csv)?;
    Ok(0)
}

fn agmon_distances(source: &SourceArgs, weight_const: Option<f64>, out: Option<&Path>) -> Result<u8> {
    let (g, _) = load(source)?;
    let (g, w) = match weight_const {
        Some(c) => {
            let w = GraphFunction::constant(&g, c)?;
            (g, w)
        }
        None => {
            let root = g.origin().unwrap_or(0);
            let gb = green_interior(g, root, &BoundaryData::Zero)?;
            (gb.interior, gb.hardy.w)
        }
    };
    let root = g.origin().unwrap_or(0);
    let sigma = scaled_combinatorial_lengths(&g)?;
    let rho = agmon_metric(&g, Some(&sigma), &w, root, AgmonVariant::Cutoff)?;
    let mut csv = String::from("vertex,label,distance,predecessor\n");
    for x in 0..g.n() {
        let pred = rho.predecessor[x].map(|p| p.to_string()).unwrap_or_default();
        csv.push_str(&format!("{x},{},{},{pred}\n", g.labels()[x], format_f64(rho.dist[x])));
    }
    write_out(out, &csv)?;
    Ok(0)
}

#[derive(Serialize)]
struct VerifyConfig<'a> {
    graph: &'a GraphSource,
    #[serde(flatten)]
    suite: &'a SuiteConfig,
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    version: &'static str,
    config: VerifyConfig<'a>,
    vertices: usize,
    status: Status,
    exit_code: i32,
    report: &'a SuiteReport,
}

fn verify(source: &SourceArgs, cfg: SuiteConfig, out: Option<&Path>) -> Result<u8> {
    let (g, src) = load(source)?;
    let report = run_suite(&g, &cfg)?;
    let doc = VerifyReport {
        version: VERSION,
        config: VerifyConfig { graph: &src, suite: &cfg },
        vertices: g.n(),
        status: report.status,
        exit_code: report.status.exit_code(),
        report: &report,
    };
    write_out(out, &to_json(&doc)?)?;
    eprintln!("{}: {:?}", cfg.suite, report.status);
    if let Some(f) = &report.failure {
        eprintln!("  {f}");
    }
    Ok(report.status.exit_code() as u8)
}

#[derive(Serialize)]
struct Summary<'a> {
    version: &'static str,
    status: Status,
    entries: Vec<SummaryEntry>,
    reports: Vec<&'a RawValue>,
}

#[derive(Serialize)]
struct SummaryEntry {
    file: String,
    suite: String,
    status: Status,
}

#[derive(serde::Deserialize)]
struct ReportHead {
    status: String,
    report: ReportSuite,
}

#[derive(serde::Deserialize)]
struct ReportSuite {
    suite: String,
}

fn parse_status(s: &str) -> Result<Status> {
    Ok(match s {
        "pass" => Status::Pass,
        "violation" => Status::Violation,
        "hypothesis_failed" => Status::HypothesisFailed,
        other => bail!("unknown status {other:?}"),
    })
}

fn merge(inputs: &[PathBuf], out: Option<&Path>) -> Result<u8> {
    let texts: Vec<String> = inputs
        .iter()
        .map(|p| fs::read_to_string(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<_>>()?;
    let mut entries = Vec::new();
    let mut reports = Vec::new();
    let mut status = Status::Pass;
    for (p, text) in inputs.iter().zip(&texts) {
        let head: ReportHead =
            serde_json::from_str(text).with_context(|| format!("{} is not a verify report", p.display()))?;
        let s = parse_status(&head.status)?;
        status = status.worst(s);
        entries.push(SummaryEntry { file: p.display().to_string(), suite: head.report.suite, status: s });
        reports.push(serde_json::from_str::<&RawValue>(text)?);
    }
    let summary = Summary { version: VERSION, status, entries, reports };
    write_out(out, &to_json(&summary)?)?;
    Ok(status.exit_code() as u8)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("AGMONLAB_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("AGMONLAB_THREADS={v:?} is not a count"))?;
        if n == 0 {
            bail!("AGMONLAB_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    configure_threads()?;
    match cli.command {
        Command::Gen { source, out } => {
            let (g, _) = generate(&source)?;
            write_out(Some(&out), &graph_to_json(&g))?;
            Ok(0)
        }
        Command::Spectrum { source, k, exhaustion, out } => spectrum(&source, k, &exhaustion, out.as_deref()),
        Command::Hardy { source, alpha, out } => hardy(&source, alpha, out.as_deref()),
        Command::AgmonMetric { source, weight_const, out } => agmon_distances(&source, weight_const, out.as_deref()),
        Command::Verify {
            source,
            suite,
            exhaustion,
            tol,
            seed,
            k_radius,
            rate,
            alpha,
            trials,
            max_exact_size,
            doctor_rhs,
            out,
        } => {
            if !(tol >= 0.0) {
                bail!("--tol must be nonnegative");
            }
            let mut cfg = SuiteConfig::new(suite.parse::<Suite>()?);
            cfg.exhaustion = exhaustion.exhaustion.as_deref().map(parse_exhaustion).transpose()?;
            cfg.stability_threshold = tol;
            cfg.seed = seed;
            cfg.k_radius = k_radius;
            cfg.rate = match rate {
                RateArg::Bisect => RateChoice::Bisect,
                RateArg::ClosedForm => RateChoice::ClosedForm,
            };
            cfg.alpha = alpha;
            cfg.trials = trials;
            cfg.max_exact_size = max_exact_size;
            cfg.rhs_scale = doctor_rhs;
            verify(&source, cfg, out.as_deref())
        }
        Command::Report { inputs, out } => merge(&inputs, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
