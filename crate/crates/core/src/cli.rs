//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error. Alarms and tables go
//! to standard output, diagnostics to standard error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};

use crate::clustering::{ClusterModel, Mask};
use crate::error::Error;
use crate::kriging::KrigingModel;
use crate::pipeline::{
    read_roles, AlarmWriter, Comparison, MonitorConfig, MonitorState, Normalizer, RealizationReader, Role, Roles,
    SCHEMA_VERSION,
};
use crate::report::{self, TraceRow};
use crate::synth::ManifoldSpec;
use crate::verify;

#[derive(Debug, Parser)]
#[command(name = "hollow", version, about = "Shell-distance monitoring of repeatable multichannel processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a noisy manifold stream as CSV, with ground truth and roles.
    Simulate(SimulateArgs),
    /// Cluster a CSV stream on its independent columns.
    Cluster(ClusterArgs),
    /// Interpolate a saved model at one operating point.
    Krige(KrigeArgs),
    /// Run the monitor over a CSV stream and print alarms as JSON lines.
    Monitor(MonitorArgs),
    /// Run the Monte-Carlo checks of the shell statistics.
    Verify(VerifyArgs),
    /// Render a monitor trace and its alarms to SVG or CSV.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ManifoldKind {
    /// Single operating point (L = 0).
    Point,
    /// Hyperplane along the first L axes.
    Affine,
    /// Circle in the plane of the first two axes (L = 1).
    Circle,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub manifold: ManifoldKind,
    /// Number of dependent channels.
    #[arg(long)]
    pub n: usize,
    /// Manifold dimension, affine only.
    #[arg(long, default_value_t = 1)]
    pub l: usize,
    #[arg(long, default_value_t = 1.0)]
    pub eps0: f64,
    /// Number of realizations.
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Half-width of the affine parameter range.
    #[arg(long, default_value_t = 5.0)]
    pub extent: f64,
    #[arg(long, default_value_t = 10.0)]
    pub radius: f64,
    /// `dims:offset:index`, dims being `all` or a comma list of 0-based
    /// dependent channels, e.g. `all:1.0:800` or `0,3,7:0.5:100`.
    #[arg(long)]
    pub defect: Option<String>,
    /// Output CSV. `<stem>.truth.csv` and `<stem>.roles.json` are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub roles: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub kmax: usize,
    #[arg(long, default_value_t = 1.5)]
    pub cdist: f64,
    /// Saves clusters, ranges and the kriging fit for `krige`.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Ingests between fusion-search trace lines.
    #[arg(long, default_value_t = 1000)]
    pub trace_every: u64,
}

#[derive(Debug, Args)]
pub struct KrigeArgs {
    /// Model written by `cluster --model-out` or `monitor --model-out`.
    #[arg(long)]
    pub model: PathBuf,
    /// Comma-separated independent coordinates, raw units.
    #[arg(long, allow_hyphen_values = true)]
    pub at: String,
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub roles: PathBuf,
    /// Resume from a saved state; its configuration is kept.
    #[arg(long)]
    pub model_in: Option<PathBuf>,
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    #[arg(long)]
    pub threshold_k: Option<f64>,
    /// Smoothing factor of the actualized average response.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub warmup: Option<u64>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long)]
    pub cdist: Option<f64>,
    /// Per-realization distance trace (CSV) for `report`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Trace written by `monitor --trace`.
    #[arg(long)]
    pub trace: PathBuf,
    /// Alarm lines written by `monitor`.
    #[arg(long)]
    pub alarms: Option<PathBuf>,
    /// `.svg` for a plot, `.csv` for a table.
    #[arg(long)]
    pub out: PathBuf,
}

/// Saved by `cluster --model-out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterArtifact {
    pub schema: u64,
    pub columns: Vec<String>,
    pub normalizer: Normalizer,
    pub clusters: ClusterModel,
    pub kriging: Option<KrigingModel>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    fn data(context: impl std::fmt::Display, e: Error) -> Self {
        Failure::Data(format!("{context}: {e}"))
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Cluster(a) => cluster(&a, &mut out),
        Command::Krige(a) => krige(&a, &mut out),
        Command::Monitor(a) => monitor(&a, &mut out),
        Command::Verify(a) => verify_cmd(&a, &mut out),
        Command::Report(a) => report_cmd(&a),
    };
    let _ = out.flush();
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn create(flag: &str, path: &Path) -> std::result::Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Data(format!("{flag} {}: {e}", path.display())))
}

fn open(flag: &str, path: &Path) -> std::result::Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Data(format!("{flag} {}: {e}", path.display())))
}

fn parse_defect(text: &str, n: usize) -> std::result::Result<(Vec<usize>, f64, usize), Failure> {
    let bad = |why: &str| Failure::Usage(format!("--defect `{text}`: {why}"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected dims:offset:index"));
    }
    let dims = if parts[0] == "all" {
        (0..n).collect()
    } else {
        let mut dims = Vec::new();
        for p in parts[0].split(',') {
            let d: usize = p.trim().parse().map_err(|_| bad("dims must be `all` or 0-based integers"))?;
            if d >= n {
                return Err(bad("dimension out of range"));
            }
            dims.push(d);
        }
        dims
    };
    let offset: f64 = parts[1].parse().map_err(|_| bad("offset is not a number"))?;
    if !offset.is_finite() {
        return Err(bad("offset must be finite"));
    }
    let index: usize = parts[2].parse().map_err(|_| bad("index is not a non-negative integer"))?;
    Ok((dims, offset, index))
}

fn simulate(a: &SimulateArgs) -> Outcome {
    let spec = match a.manifold {
        ManifoldKind::Point => ManifoldSpec::point(a.n, a.eps0, a.seed),
        ManifoldKind::Affine => ManifoldSpec::axis_aligned(a.n, a.l, a.extent, a.eps0, a.seed),
        ManifoldKind::Circle => ManifoldSpec::circle(a.n, a.radius, a.eps0, a.seed),
    };
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let defect = a.defect.as_deref().map(|d| parse_defect(d, a.n)).transpose()?;

    let inputs = spec.input_dims();
    let mut header: Vec<String> = (1..=inputs).map(|i| format!("w{i}")).collect();
    header.extend((1..=a.n).map(|i| format!("y{i}")));
    let write_err = |e: csv::Error| Failure::Data(format!("--out {}: {e}", a.out.display()));

    let mut data = csv::Writer::from_writer(create("--out", &a.out)?);
    data.write_record(&header).map_err(write_err)?;
    let truth_path = sibling(&a.out, ".truth.csv");
    let mut truth = csv::Writer::from_writer(create("--out", &truth_path)?);
    truth
        .write_record(["index", "noise_norm", "perpendicular", "defect"])
        .map_err(write_err)?;

    let sampler = spec.sampler().map_err(|e| Failure::Usage(e.to_string()))?;
    for (i, s) in sampler.take(a.m).enumerate() {
        let mut y = s.realization;
        let mut defective = false;
        if let Some((dims, offset, from)) = &defect {
            if i >= *from {
                dims.iter().for_each(|&d| y[d] += offset);
                defective = true;
            }
        }
        let mut record: Vec<String> = s.operating_point.iter().map(|v| v.to_string()).collect();
        record.extend(y.iter().map(|v| v.to_string()));
        data.write_record(&record).map_err(write_err)?;
        truth
            .write_record([
                i.to_string(),
                s.noise_norm.to_string(),
                s.perpendicular.to_string(),
                u8::from(defective).to_string(),
            ])
            .map_err(write_err)?;
    }
    data.flush().map_err(|e| Failure::Data(e.to_string()))?;
    truth.flush().map_err(|e| Failure::Data(e.to_string()))?;

    let roles: Roles = header
        .iter()
        .enumerate()
        .map(|(i, h)| (h.clone(), if i < inputs { Role::Independent } else { Role::Dependent }))
        .collect();
    let roles_path = sibling(&a.out, ".roles.json");
    let mut w = create("--out", &roles_path)?;
    serde_json::to_writer_pretty(&mut w, &roles).map_err(|e| Failure::Data(e.to_string()))?;
    w.flush().map_err(|e| Failure::Data(e.to_string()))?;
    info!("wrote {} realizations to {}", a.m, a.out.display());
    Ok(())
}

fn load_roles(path: &Path) -> std::result::Result<Roles, Failure> {
    read_roles(path).map_err(|e| Failure::data(format_args!("--roles {}", path.display()), e))
}

fn open_stream(input: &Path, roles: &Roles) -> std::result::Result<RealizationReader, Failure> {
    if !input.exists() {
        return Err(Failure::Data(format!("--in {}: no such file", input.display())));
    }
    RealizationReader::open(input, roles).map_err(|e| Failure::data(format_args!("--in {}", input.display()), e))
}

fn cluster(a: &ClusterArgs, out: &mut impl Write) -> Outcome {
    if a.trace_every == 0 {
        return Err(Failure::Usage("--trace-every must be at least 1".into()));
    }
    let roles = load_roles(&a.roles)?;
    let mut reader = open_stream(&a.input, &roles)?;
    let layout = reader.layout().clone();
    let mut model =
        ClusterModel::new(a.kmax, a.cdist, layout.mask.clone()).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut normalizer = Normalizer::new(layout.mask.len());
    let in_err = |e: Error| Failure::data(format_args!("--in {}", a.input.display()), e);
    let io_err = |e: io::Error| Failure::Data(e.to_string());

    let mut trace = Vec::new();
    while let Some(x) = reader.next_realization().map_err(in_err)? {
        normalizer.observe(&x).map_err(in_err)?;
        model.ingest_scaled(&x, &normalizer.scales()).map_err(in_err)?;
        if model.kcount() % a.trace_every == 0 {
            trace.push((model.kcount(), model.clusters().len(), model.shelldist(), model.fusion_search_count()));
        }
    }
    if model.kcount() == 0 {
        return Err(Failure::Data(format!("--in {}: no realizations", a.input.display())));
    }
    if trace.last().map(|t| t.0) != Some(model.kcount()) {
        trace.push((model.kcount(), model.clusters().len(), model.shelldist(), model.fusion_search_count()));
    }

    let indep: Vec<usize> = layout.mask.independent().collect();
    write!(out, "{:>7} {:>11} {:>12}", "cluster", "population", "cvar").map_err(io_err)?;
    for &i in &indep {
        write!(out, " {:>12}", layout.names[i]).map_err(io_err)?;
    }
    writeln!(out).map_err(io_err)?;
    for (k, c) in model.clusters().iter().enumerate() {
        write!(out, "{k:>7} {:>11} {:>12.6}", c.population, c.cvar).map_err(io_err)?;
        for &i in &indep {
            write!(out, " {:>12.6}", c.centroid[i]).map_err(io_err)?;
        }
        writeln!(out).map_err(io_err)?;
    }
    writeln!(out, "\n{:>10} {:>9} {:>12} {:>20}", "ingested", "clusters", "shelldist", "fusion_search_count")
        .map_err(io_err)?;
    for (k, n, s, f) in trace {
        writeln!(out, "{k:>10} {n:>9} {s:>12.6} {f:>20}").map_err(io_err)?;
    }

    if let Some(path) = &a.model_out {
        let kriging = match KrigingModel::fit(model.clusters(), &layout.mask, &normalizer.scales()) {
            Ok(k) => Some(k),
            Err(e) => {
                log::warn!("no kriging fit saved: {e}");
                None
            }
        };
        let artifact = ClusterArtifact {
            schema: SCHEMA_VERSION,
            columns: layout.names.clone(),
            normalizer,
            clusters: model,
            kriging,
        };
        let text = serde_json::to_string(&artifact).map_err(|e| Failure::Data(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Failure::Data(format!("--model-out {}: {e}", path.display())))?;
    }
    Ok(())
}

/// The kriging fit stored in a cluster artifact or a monitor state.
pub fn load_kriging(path: &Path) -> crate::Result<KrigingModel> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::CorruptModel(e.to_string()))?;
    let found = value
        .get("schema")
        .and_then(|s| s.as_u64())
        .ok_or_else(|| Error::CorruptModel("missing schema version".into()))?;
    if found != SCHEMA_VERSION {
        return Err(Error::SchemaVersion { found, expected: SCHEMA_VERSION });
    }
    match value.get("kriging") {
        Some(k) if !k.is_null() => KrigingModel::deserialize(k).map_err(|e| Error::CorruptModel(e.to_string())),
        _ => Err(Error::CorruptModel("model holds no kriging fit".into())),
    }
}

fn krige(a: &KrigeArgs, out: &mut impl Write) -> Outcome {
    let w: Vec<f64> = a
        .at
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("--at `{}`: expected comma-separated numbers", a.at)))?;
    if !a.model.exists() {
        return Err(Failure::Data(format!("--model {}: no such file", a.model.display())));
    }
    let model = load_kriging(&a.model).map_err(|e| Failure::data(format_args!("--model {}", a.model.display()), e))?;
    if w.len() != model.input_dims() {
        return Err(Failure::Usage(format!(
            "--at: model takes {} coordinates, got {}",
            model.input_dims(),
            w.len()
        )));
    }
    let r = model.interpolate(&w).map_err(|e| Failure::data("--at", e))?;
    let io_err = |e: io::Error| Failure::Data(e.to_string());
    let estimate: Vec<String> = r.estimate.iter().map(|v| v.to_string()).collect();
    writeln!(out, "estimate: {}", estimate.join(",")).map_err(io_err)?;
    writeln!(out, "sigma_M: {}", r.sigma_m).map_err(io_err)?;
    Ok(())
}

fn monitor(a: &MonitorArgs, out: &mut impl Write) -> Outcome {
    let roles = load_roles(&a.roles)?;
    let mut state = match &a.model_in {
        Some(path) => {
            let given = [
                ("--threshold-k", a.threshold_k.is_some()),
                ("--alpha", a.alpha.is_some()),
                ("--warmup", a.warmup.is_some()),
                ("--kmax", a.kmax.is_some()),
                ("--cdist", a.cdist.is_some()),
            ];
            if let Some((flag, _)) = given.iter().find(|g| g.1) {
                return Err(Failure::Usage(format!("{flag} conflicts with --model-in, which keeps its configuration")));
            }
            if !path.exists() {
                return Err(Failure::Data(format!("--model-in {}: no such file", path.display())));
            }
            Some(MonitorState::load(path).map_err(|e| Failure::data(format_args!("--model-in {}", path.display()), e))?)
        }
        None => None,
    };
    let config = {
        let d = MonitorConfig::default();
        MonitorConfig {
            threshold_k: a.threshold_k.unwrap_or(d.threshold_k),
            alpha: a.alpha.unwrap_or(d.alpha),
            warmup: a.warmup.unwrap_or(d.warmup),
            kmax: a.kmax.unwrap_or(d.kmax),
            cdist: a.cdist.unwrap_or(d.cdist),
            ..d
        }
    };
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if !(config.cdist > 0.0) || config.kmax < 2 {
        return Err(Failure::Usage("--kmax must be at least 2 and --cdist positive".into()));
    }

    let mut reader = open_stream(&a.input, &roles)?;
    let mask: Mask = reader.layout().mask.clone();
    let mut state = match state.take() {
        Some(s) => {
            if *s.mask() != mask {
                return Err(Failure::Data("--roles: column roles disagree with the --model-in state".into()));
            }
            s
        }
        None => MonitorState::new(mask, config).map_err(|e| Failure::Usage(e.to_string()))?,
    };

    let mut trace = match &a.trace {
        Some(p) => Some(csv::Writer::from_writer(create("--trace", p)?)),
        None => None,
    };
    let mut alarms = AlarmWriter::new(&mut *out);
    let in_err = |e: Error| Failure::data(format_args!("--in {}", a.input.display()), e);
    let (mut fast, mut trend) = (0u64, 0u64);
    while let Some(x) = reader.next_realization().map_err(in_err)? {
        let step = state.monitor_step(&x).map_err(in_err)?;
        if let Some(t) = trace.as_mut() {
            t.serialize(TraceRow::from(&step)).map_err(|e| Failure::Data(format!("--trace: {e}")))?;
        }
        if let Some(alarm) = &step.alarm {
            fast += 1;
            alarms.write(alarm).map_err(|e| Failure::Data(e.to_string()))?;
        }
        if state.warmed_up() {
            if let Some(alarm) = state.trend_step().map_err(in_err)? {
                trend += 1;
                alarms.write(&alarm).map_err(|e| Failure::Data(e.to_string()))?;
            }
        }
    }
    if let Some(mut t) = trace {
        t.flush().map_err(|e| Failure::Data(format!("--trace: {e}")))?;
    }
    if let Some(path) = &a.model_out {
        state
            .save(path)
            .map_err(|e| Failure::data(format_args!("--model-out {}", path.display()), e))?;
    }
    info!("{} realizations seen, {fast} fast and {trend} trend alarms", state.seen());
    Ok(())
}

fn verify_cmd(a: &VerifyArgs, out: &mut impl Write) -> Outcome {
    let checks = verify::run_suite(a.seed).map_err(|e| Failure::data("verify", e))?;
    write!(out, "{}", verify::format_table(&checks)).map_err(|e| Failure::Data(e.to_string()))?;
    if checks.iter().any(|c| !c.passed) {
        return Err(Failure::Data("some checks failed".into()));
    }
    Ok(())
}

fn report_cmd(a: &ReportArgs) -> Outcome {
    let ext = a.out.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    if !matches!(ext.as_deref(), Some("svg") | Some("csv")) {
        return Err(Failure::Usage(format!("--out {}: extension must be .svg or .csv", a.out.display())));
    }
    let rows = report::read_trace(open("--trace", &a.trace)?)
        .map_err(|e| Failure::data(format_args!("--trace {}", a.trace.display()), e))?;
    let alarms = match &a.alarms {
        Some(p) => report::read_alarms(open("--alarms", p)?)
            .map_err(|e| Failure::data(format_args!("--alarms {}", p.display()), e))?,
        None => Vec::new(),
    };
    let mut w = create("--out", &a.out)?;
    if ext.as_deref() == Some("svg") {
        w.write_all(report::render_svg(&rows, &alarms).as_bytes())
            .map_err(|e| Failure::Data(e.to_string()))?;
    } else {
        report::write_summary_csv(&rows, &alarms, &mut w).map_err(|e| Failure::data("--out", e))?;
    }
    w.flush().map_err(|e| Failure::Data(e.to_string()))?;
    let fast = rows.iter().filter(|r| r.alarm).count();
    let trend = alarms.iter().filter(|x| x.comparison == Comparison::Trend).count();
    info!("{} steps, {fast} fast and {trend} trend alarms rendered", rows.len());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defect_spec() {
        assert_eq!(parse_defect("all:1.5:10", 3).unwrap(), (vec![0, 1, 2], 1.5, 10));
        assert_eq!(parse_defect("0,2:-0.5:0", 3).unwrap(), (vec![0, 2], -0.5, 0));
        for bad in ["all:1", "3:1:0", "x:1:0", "all:nan:0", "all:1:-1"] {
            assert!(matches!(parse_defect(bad, 3), Err(Failure::Usage(_))), "{bad}");
        }
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["hollow", "frobnicate"]), 1);
        assert_eq!(run(["hollow", "simulate", "--manifold", "point"]), 1);
        assert_eq!(run(["hollow", "verify", "--bogus"]), 1);
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(sibling(Path::new("/tmp/run.csv"), ".truth.csv"), PathBuf::from("/tmp/run.truth.csv"));
    }
}
