use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use raptune_core::batch::{load_plant, run_batch, write_batch, BatchSpec};
use raptune_core::foi::{log_grid, make_phase_element};
use raptune_core::freq::{margins, nyquist_data, sweep};
use raptune_core::identify::{identify, Method};
use raptune_core::relay::{simulate_relay_recorded, RelayConfig, RelayOutcome};
use raptune_core::sim::{fmt_sig, TimeSeries};
use raptune_core::tracking::{evaluate_tracking, TrackingConfig, TrackingStatus};
use raptune_core::tuner::tune_with_eta;
use raptune_core::{Error, PrController, TransferFunction};

mod table;

use table::{flatten_csv, Table};

#[derive(Parser, Debug)]
#[command(name = "raptune", version, about = "Relay identification and PR controller tuning")]
struct Cli {
    /// Write each command's CSV and JSON artifacts into this directory.
    #[arg(long, global = true, value_name = "DIR")]
    seed_output_dir: Option<PathBuf>,

    /// Fixed integration step in seconds (default: chosen per plant).
    #[arg(long, global = true, value_name = "H")]
    step: Option<f64>,

    /// Output format on stdout.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Relay,
    Analytic,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Relay => Method::Relay,
            MethodArg::Analytic => Method::Analytic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Bode,
    Nyquist,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a plant and identify one frequency-response point.
    Identify(IdentifyArgs),
    /// Identify a plant and tune a PR controller for a reference frequency.
    Tune(TuneArgs),
    /// Simulate sinusoidal reference tracking and report t_s, n_s and M_o.
    Simulate(SimulateArgs),
    /// Run one relay experiment and report the limit cycle.
    SimulateRelay(RelayArgs),
    /// Bode or Nyquist data of a plant or of a controller-plant loop.
    Freqresp(FreqArgs),
    /// Gain and phase margins of a plant or controller-plant loop.
    Margins(LoopArgs),
    /// Phase flatness sweep of a relay phase element.
    FoiCheck(FoiArgs),
    /// Identify, tune and evaluate every plant and ratio of a batch spec.
    Batch(BatchArgs),
}

#[derive(Args, Debug)]
struct RelayOpts {
    /// Relay amplitude.
    #[arg(long, default_value_t = 1.0)]
    relay_d: f64,
    /// Time limit per relay experiment in seconds.
    #[arg(long)]
    max_time: Option<f64>,
}

impl RelayOpts {
    fn config(&self, step: Option<f64>) -> RelayConfig {
        RelayConfig {
            d: self.relay_d,
            h: step,
            max_time: self.max_time,
            ..RelayConfig::default()
        }
    }
}

#[derive(Args, Debug)]
struct IdentifyArgs {
    #[arg(long)]
    plant: PathBuf,
    #[arg(long, value_enum, default_value = "relay")]
    method: MethodArg,
    #[command(flatten)]
    relay: RelayOpts,
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[arg(long)]
    plant: PathBuf,
    /// Resonance (reference) frequency in rad/s.
    #[arg(long, required_unless_present = "ratio", conflicts_with = "ratio")]
    omega_r: Option<f64>,
    /// Resonance frequency as a fraction of the identified frequency.
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    xi: f64,
    #[arg(long, default_value_t = raptune_core::tuner::DEFAULT_ETA)]
    eta: f64,
    #[arg(long, value_enum, default_value = "relay")]
    method: MethodArg,
    #[command(flatten)]
    relay: RelayOpts,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    plant: PathBuf,
    #[arg(long)]
    controller: PathBuf,
    /// Reference frequency (default: the controller resonance).
    #[arg(long)]
    omega_r: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    /// Settling band as a fraction of the amplitude.
    #[arg(long, default_value_t = 0.02)]
    epsilon: f64,
    /// Fixed horizon in reference periods (default: adaptive).
    #[arg(long)]
    periods: Option<f64>,
}

#[derive(Args, Debug)]
struct RelayArgs {
    #[arg(long)]
    plant: PathBuf,
    /// Relay phase element in degrees: 0, -60 or -120.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    gamma: f64,
    #[command(flatten)]
    relay: RelayOpts,
    /// Reference value added to the relay loop.
    #[arg(long, default_value_t = 0.0)]
    reference: f64,
    /// Keep every n-th sample of the time series.
    #[arg(long, default_value_t = 1)]
    decimate: usize,
}

#[derive(Args, Debug)]
struct LoopArgs {
    #[arg(long)]
    plant: PathBuf,
    /// PR controller placed in series with the plant.
    #[arg(long)]
    controller: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FreqArgs {
    #[command(flatten)]
    target: LoopArgs,
    #[arg(long, value_enum, default_value = "bode")]
    kind: Kind,
    /// Frequency band `lo,hi` in rad/s.
    #[arg(long, value_parser = parse_band, default_value = "0.01,100")]
    band: (f64, f64),
    #[arg(long, default_value_t = 500)]
    points: usize,
}

#[derive(Args, Debug)]
struct FoiArgs {
    /// Element phase in degrees: -60 or -120.
    #[arg(long, default_value_t = -120.0, allow_negative_numbers = true)]
    gamma: f64,
    /// Frequency band `lo,hi` in rad/s.
    #[arg(long, value_parser = parse_band, default_value = "0.01,100")]
    band: (f64, f64),
    #[arg(long, default_value_t = 1000)]
    points: usize,
}

fn parse_band(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v}: {e}"));
    Ok((parse(lo)?, parse(hi)?))
}

#[derive(Args, Debug)]
struct BatchArgs {
    #[arg(long)]
    spec: PathBuf,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    /// Bad input: unreadable or invalid files and arguments.
    Usage(String),
    /// The analysis ran but did not produce a usable result.
    Analysis(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Analysis(_) => 1,
            Failure::Usage(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Analysis(m) | Failure::Usage(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotConverged
            | Error::Unclassifiable
            | Error::OutsideApproximationBand { .. }
            | Error::ResonanceAboveIdentified { .. }
            | Error::SingularTuning
            | Error::SingularFrequency { .. }
            | Error::NoGainCrossover => Failure::Analysis(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

/// Where command output goes.
struct Sink {
    dir: Option<PathBuf>,
    format: Option<Format>,
}

impl Sink {
    fn new(dir: Option<PathBuf>, format: Option<Format>) -> Result<Self, Failure> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| Failure::Usage(format!("{}: {e}", d.display())))?;
        }
        Ok(Self { dir, format })
    }

    fn save(&self, name: &str, contents: &str) -> CmdResult {
        if let Some(d) = &self.dir {
            let path = d.join(name);
            fs::write(&path, contents).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }

    /// A JSON summary, optionally accompanied by a CSV table.
    fn emit(&self, stem: &str, summary: &impl Serialize, table: Option<&str>) -> CmdResult {
        let value = serde_json::to_value(summary)?;
        let json = serde_json::to_string_pretty(&value)? + "\n";
        self.save(&format!("{stem}.json"), &json)?;
        if let Some(t) = table {
            self.save(&format!("{stem}.csv"), t)?;
        }
        let text = match self.format.unwrap_or(Format::Json) {
            Format::Json => json,
            Format::Csv => match table {
                Some(t) => t.to_string(),
                None => flatten_csv(&value),
            },
        };
        print(&text)
    }

    /// A CSV table whose JSON form is the list of its rows.
    fn emit_table(&self, stem: &str, table: &Table) -> CmdResult {
        let csv = table.to_csv();
        self.save(&format!("{stem}.csv"), &csv)?;
        let text = match self.format.unwrap_or(Format::Csv) {
            Format::Csv => csv,
            Format::Json => serde_json::to_string_pretty(&table.to_json())? + "\n",
        };
        print(&text)
    }
}

fn print(text: &str) -> CmdResult {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn read_plant(path: &Path) -> Result<TransferFunction, Failure> {
    Ok(load_plant(path)?)
}

fn read_controller(path: &Path) -> Result<PrController, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn check_step(step: Option<f64>) -> CmdResult {
    match step {
        Some(h) if !(h > 0.0 && h.is_finite()) => Err(Failure::Usage(format!("--step must be positive, got {h}"))),
        _ => Ok(()),
    }
}

fn series_csv(s: &TimeSeries) -> Result<String, Failure> {
    let mut buf = Vec::new();
    s.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is ASCII"))
}

fn loop_tf(args: &LoopArgs) -> Result<TransferFunction, Failure> {
    let g = read_plant(&args.plant)?;
    Ok(match &args.controller {
        Some(p) => read_controller(p)?.transfer_function().series(&g),
        None => g,
    })
}

fn run(cli: Cli) -> CmdResult {
    check_step(cli.step)?;
    let sink = Sink::new(cli.seed_output_dir.clone(), cli.format)?;
    let step = cli.step;
    match cli.command {
        Command::Identify(a) => {
            let g = read_plant(&a.plant)?;
            let point = identify(&g, a.method.into(), &a.relay.config(step))?;
            sink.emit("identify", &point, None)
        }
        Command::Tune(a) => {
            let g = read_plant(&a.plant)?;
            let point = identify(&g, a.method.into(), &a.relay.config(step))?;
            let omega_r = match (a.omega_r, a.ratio) {
                (Some(w), _) => w,
                (None, Some(r)) => r * point.omega_nu,
                (None, None) => unreachable!("clap requires one of --omega-r and --ratio"),
            };
            let tuning = tune_with_eta(&point, omega_r, a.xi, a.eta)?;
            for w in &tuning.warnings {
                eprintln!("warning: {w}");
            }
            sink.emit("tune", &tuning, None)
        }
        Command::Simulate(a) => {
            let g = read_plant(&a.plant)?;
            let c = read_controller(&a.controller)?;
            let mut cfg = TrackingConfig::new(a.amplitude, a.omega_r.unwrap_or(c.omega_r));
            cfg.epsilon = a.epsilon;
            cfg.h = step;
            cfg.total_periods = a.periods;
            let run = evaluate_tracking(&g, &c, &cfg)?;
            let csv = series_csv(&run.series)?;
            sink.emit("simulate", &run.report, Some(&csv))?;
            match run.report.status {
                TrackingStatus::Settled => Ok(()),
                s => Err(Failure::Analysis(format!("tracking {s:?}").to_lowercase())),
            }
        }
        Command::SimulateRelay(a) => {
            let g = read_plant(&a.plant)?;
            let f = make_phase_element(a.gamma)?;
            let cfg = RelayConfig {
                r: a.reference,
                ..a.relay.config(step)
            };
            let run = simulate_relay_recorded(&f, &g, &cfg, Some(a.decimate.max(1)))?;
            let csv = match &run.series {
                Some(s) => series_csv(s)?,
                None => String::new(),
            };
            let summary = RelaySummary::new(&run.outcome, run.h);
            sink.emit("simulate_relay", &summary, Some(&csv))?;
            match run.outcome {
                RelayOutcome::Cycle(_) => Ok(()),
                RelayOutcome::NoOscillation(r) => Err(Failure::Analysis(format!("no oscillation: {r:?}").to_lowercase())),
            }
        }
        Command::Freqresp(a) => {
            let l = loop_tf(&a.target)?;
            let band = a.band;
            let table = match a.kind {
                Kind::Bode => {
                    let s = sweep(&l, band, a.points)?;
                    if !s.excluded.is_empty() {
                        eprintln!("warning: skipped {} grid points on an undamped resonance", s.excluded.len());
                    }
                    Table::new(
                        &["omega", "magnitude_db", "phase_deg"],
                        s.points.iter().map(|p| vec![p.omega, p.magnitude_db(), p.phase_deg]).collect(),
                    )
                }
                Kind::Nyquist => Table::new(
                    &["omega", "re", "im"],
                    nyquist_data(&l, band, a.points)?
                        .iter()
                        .map(|p| vec![p.omega, p.re, p.im])
                        .collect(),
                ),
            };
            sink.emit_table("freqresp", &table)
        }
        Command::Margins(a) => {
            let l = loop_tf(&a)?;
            sink.emit("margins", &margins(&l)?, None)
        }
        Command::FoiCheck(a) => {
            let e = make_phase_element(a.gamma)?;
            let band = a.band;
            let dev = e.phase_flatness(band, a.points)?;
            eprintln!("max phase deviation from {} deg: {} deg", a.gamma, fmt_sig(dev));
            let rows = log_grid(band.0, band.1, a.points)
                .into_iter()
                .map(|w| vec![w, 20.0 * e.tf.magnitude(w).log10(), e.tf.phase_deg(w)])
                .collect();
            sink.emit_table("foi_check", &Table::new(&["omega", "magnitude_db", "phase_deg"], rows))
        }
        Command::Batch(a) => {
            let mut spec = BatchSpec::from_file(&a.spec)?;
            if step.is_some() {
                spec.step = step;
            }
            let out = cli.seed_output_dir.clone().unwrap_or_else(|| spec.output.clone());
            let report = run_batch(&spec)?;
            write_batch(&report, &out)?;
            let summary = serde_json::json!({
                "output": out,
                "plants": report.plants.len(),
                "rows": report.plants.iter().map(|p| p.rows.len()).sum::<usize>(),
                "failed_rows": report.failed_rows(),
            });
            let text = serde_json::to_string_pretty(&summary)? + "\n";
            print(&text)?;
            match report.failed_rows() {
                0 => Ok(()),
                n => Err(Failure::Analysis(format!("{n} batch rows failed; see index.json"))),
            }
        }
    }
}

#[derive(Serialize)]
struct RelaySummary {
    #[serde(rename = "A")]
    amplitude: Option<f64>,
    #[serde(rename = "T")]
    period: Option<f64>,
    bias: Option<f64>,
    converged: bool,
    cycles_used: Option<usize>,
    omega: Option<f64>,
    h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
}

impl RelaySummary {
    fn new(outcome: &RelayOutcome, h: f64) -> Self {
        match outcome {
            RelayOutcome::Cycle(c) => Self {
                amplitude: Some(c.amplitude),
                period: Some(c.period),
                bias: Some(c.bias_final),
                converged: c.converged,
                cycles_used: Some(c.cycles_used),
                omega: Some(c.omega()),
                h,
                failure: None,
            },
            RelayOutcome::NoOscillation(r) => Self {
                amplitude: None,
                period: None,
                bias: None,
                converged: false,
                cycles_used: None,
                omega: None,
                h,
                failure: Some(format!("{r:?}").to_lowercase()),
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
