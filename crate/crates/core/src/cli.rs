//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a run fails, 2 for usage or
//! configuration problems (including unreadable input files).

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::experiment::{
    run_sweep_with_progress, write_csv_to, Algorithm, Axis, RowDetail, SweepSpec,
};
use crate::geometry::{chord_cdf, chord_length, hf_probability, mc_hf_oracle, CellGeometry, Point};
use crate::matching::{max_sinr_matching, solve_market, verify_stability, SolveReport};
use crate::preferences::{GameConfig, Market};
use crate::radio::{realize_channels, RadioConfig};
use crate::scenario::{generate, load_fixture, Scenario, ScenarioConfig};

pub const SEED_ENV: &str = "CELLMATCH_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "cellmatch",
    version,
    about = "Context-aware user to small-cell association"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one scenario (generated from a config or loaded from a fixture).
    Solve(SolveArgs),
    /// Run a Monte-Carlo sweep and write per-point metrics.
    Sweep(SweepArgs),
    /// Run the geometry and radio Monte-Carlo self-checks.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveFormat {
    Text,
    JsonLines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepFormat {
    Csv,
    JsonLines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Fig2,
    Fig3,
    Fig4,
}

impl Preset {
    pub fn source(self) -> &'static str {
        match self {
            Preset::Fig2 => include_str!("../presets/fig2.json"),
            Preset::Fig3 => include_str!("../presets/fig3.json"),
            Preset::Fig4 => include_str!("../presets/fig4.json"),
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct SolveArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// TOML scenario fixture; replaces random generation.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: SolveFormat,
    /// Also write the final matching as JSON to this path.
    #[arg(long)]
    pub dump_matching: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, conflicts_with = "config")]
    pub preset: Option<Preset>,
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Output file. With several sweeps the sweep label is appended to the
    /// file stem. Defaults to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<SweepFormat>,
}

#[derive(Debug, clap::Args)]
pub struct ValidateArgs {
    /// Monte-Carlo samples per oracle.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, env = SEED_ENV, default_value_t = 1)]
    pub seed: u64,
}

/// Config file contents; every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub scenario: ScenarioConfig,
    pub game: GameConfig,
    pub sweeps: Vec<SweepEntry>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<SweepFormat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub label: String,
    pub axis: Axis,
    pub values: Vec<usize>,
    pub fixed: usize,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
}

fn default_replicas() -> usize {
    1000
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Proposed, Algorithm::MaxSinr]
}

impl CliConfig {
    pub fn parse(text: &str) -> crate::Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            Error::Parse {
                line: Some(inner.line()),
                field: (field != ".").then_some(field),
                message: inner.to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn preset(preset: Preset) -> Self {
        Self::parse(preset.source()).expect("bundled presets parse")
    }

    /// Sweep specs with flag overrides applied.
    pub fn sweep_specs(
        &self,
        seed: Option<u64>,
        replicas: Option<usize>,
    ) -> Vec<(String, SweepSpec)> {
        let mut base = self.scenario.clone();
        if let Some(s) = seed {
            base.seed = s;
        }
        self.sweeps
            .iter()
            .map(|e| {
                let spec = SweepSpec {
                    axis: e.axis,
                    values: e.values.clone(),
                    fixed: e.fixed,
                    replicas: replicas.unwrap_or(e.replicas),
                    base: base.clone(),
                    game: self.game.clone(),
                    algorithms: e.algorithms.clone(),
                };
                (e.label.clone(), spec)
            })
            .collect()
    }
}

/// A failed command with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Failure {
            code: 2,
            message: e.to_string(),
        }
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out, err),
        Command::Validate(a) => cmd_validate(&a, out),
    }
}

fn load_config(path: Option<&Path>) -> std::result::Result<CliConfig, Failure> {
    match path {
        Some(p) => CliConfig::load(p).map_err(Failure::usage),
        None => Ok(CliConfig::default()),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult {
    out.write_all(text.as_bytes()).map_err(Failure::runtime)
}

pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> CliResult {
    let config = load_config(args.config.as_deref())?;
    config.game.validate().map_err(Failure::usage)?;
    let scenario: Scenario = match &args.fixture {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| Failure::usage(Error::io(path, e)))?;
            load_fixture(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        }
        None => {
            let mut sc = config.scenario.clone();
            if let Some(s) = args.seed {
                sc.seed = s;
            }
            sc.validate().map_err(Failure::usage)?;
            generate(&sc).map_err(Failure::runtime)?
        }
    };
    let market = Market::new(&scenario, &config.game).map_err(Failure::runtime)?;
    let report = solve_market(&market, config.game.max_outer);
    let baseline = max_sinr_matching(&market, config.game.baseline_quota);

    if let Some(path) = &args.dump_matching {
        let json = serde_json::to_string_pretty(&report.matching).map_err(Failure::runtime)?;
        std::fs::write(path, json + "\n").map_err(|e| Failure::runtime(Error::io(path, e)))?;
    }
    let text = match args.format {
        SolveFormat::JsonLines => report.to_record_line() + "\n",
        SolveFormat::Text => solve_text(&scenario, &market, &report, &baseline),
    };
    emit(out, &text)
}

fn solve_text(
    scenario: &Scenario,
    market: &Market,
    report: &SolveReport,
    baseline: &crate::Matching,
) -> String {
    let n = market.n_users();
    let mean = |m: &crate::Matching| {
        (0..n)
            .map(|i| market.realized_user_utility(m, i))
            .sum::<f64>()
            / n as f64
    };
    let mut s = String::new();
    let _ = writeln!(s, "users: {}  picocells: {}", n, market.n_cells());
    if let Some(seed) = scenario.seed {
        let _ = writeln!(s, "seed: {seed}");
    }
    let _ = writeln!(s, "termination: {:?}", report.termination);
    let _ = writeln!(s, "outer iterations: {}", report.outer_iterations);
    let _ = writeln!(s, "proposal rounds: {}", report.inner_proposal_rounds);
    let _ = writeln!(s, "proposals: {}", report.proposals);
    let _ = writeln!(s, "converged: {}", report.converged);
    let _ = writeln!(
        s,
        "stable: {} ({} blocking pairs)",
        report.stable, report.blocking_pairs
    );
    let _ = writeln!(s, "macro-served users: {}", report.matching.macro_load());
    let _ = writeln!(s, "mean user utility: {:.6}", mean(&report.matching));
    let _ = writeln!(
        s,
        "max-SINR baseline: mean user utility {:.6}, macro-served {}, stable {}",
        mean(baseline),
        baseline.macro_load(),
        verify_stability(market, baseline).stable
    );
    let _ = writeln!(s, "cell occupancy:");
    for j in 0..market.n_cells() {
        let _ = writeln!(
            s,
            "  cell {j}: {}/{} {:?}",
            report.matching.load(j),
            market.quota(j),
            report.matching.members(j)
        );
    }
    s
}

#[derive(Serialize)]
struct LabeledDetail<'a> {
    sweep: &'a str,
    #[serde(flatten)]
    detail: &'a RowDetail,
}

fn output_path(base: &Path, label: &str, multiple: bool) -> PathBuf {
    if !multiple {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_{label}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{label}"),
    };
    base.with_file_name(name)
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let config = match args.preset {
        Some(p) => CliConfig::preset(p),
        None => load_config(args.config.as_deref())?,
    };
    if config.sweeps.is_empty() {
        return Err(Failure::usage(
            "no sweeps configured; pass --preset or a config with `sweeps`",
        ));
    }
    let specs = config.sweep_specs(args.seed, args.replicas);
    for (_, spec) in &specs {
        spec.validate().map_err(Failure::usage)?;
    }
    let workers = args.workers.or(config.workers);
    let format = args.format.or(config.format).unwrap_or(SweepFormat::Csv);
    let out_path = args.out.clone().or(config.out.clone());
    let multiple = specs.len() > 1;

    for (label, spec) in &specs {
        let outcome = run_sweep_with_progress(spec, workers, |done, total| {
            if done % 50 == 0 || done == total {
                eprint!("\r[{label}] {done}/{total} replicas");
                if done == total {
                    eprintln!();
                }
            }
        })
        .map_err(Failure::runtime)?;
        if !outcome.failures.is_empty() {
            let _ = writeln!(
                err,
                "warning: [{label}] {} replica(s) failed and were excluded",
                outcome.failures.len()
            );
            for f in outcome.failures.iter().take(5) {
                let _ = writeln!(
                    err,
                    "  value {} replica {}: {}",
                    f.axis_value, f.replica, f.message
                );
            }
        }
        if outcome.records.is_empty() {
            return Err(Failure::runtime(format!("[{label}] every replica failed")));
        }

        let mut buf: Vec<u8> = Vec::new();
        let dest = out_path
            .as_ref()
            .map(|p| output_path(p, label, multiple))
            .unwrap_or_else(|| PathBuf::from("<stdout>"));
        match format {
            SweepFormat::Csv => {
                write_csv_to(&outcome.rows(), &mut buf, &dest).map_err(Failure::runtime)?
            }
            SweepFormat::JsonLines => {
                for d in &outcome.details {
                    let line = serde_json::to_string(&LabeledDetail {
                        sweep: label,
                        detail: d,
                    })
                    .map_err(Failure::runtime)?;
                    buf.extend_from_slice(line.as_bytes());
                    buf.push(b'\n');
                }
            }
        }
        match &out_path {
            Some(_) => {
                std::fs::write(&dest, &buf).map_err(|e| Failure::runtime(Error::io(&dest, e)))?;
                let _ = writeln!(err, "[{label}] wrote {}", dest.display());
            }
            None => {
                if multiple {
                    emit(out, &format!("# sweep {label}\n"))?;
                }
                out.write_all(&buf).map_err(Failure::runtime)?;
            }
        }
    }
    Ok(())
}

/// One self-check line.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        (self.observed - self.expected).abs() <= self.tolerance
    }
}

/// Monte-Carlo checks of the handover-failure probability, the chord-length
/// distribution and the mean fading gain, each at 3 standard errors.
pub fn self_checks(samples: u64, seed: u64) -> crate::Result<Vec<OracleCheck>> {
    if samples < 100 {
        return Err(Error::config("validate needs at least 100 samples"));
    }
    let n = samples as f64;
    let mut checks = Vec::new();
    for ratio in [0.05, 0.1, 0.3, 0.6] {
        let geom = CellGeometry::new(Point::ORIGIN, 1.0, ratio)?;
        let p = hf_probability(&geom)?;
        checks.push(OracleCheck {
            name: format!("hf probability r/R={ratio}"),
            observed: mc_hf_oracle(&geom, samples, seed)?,
            expected: p,
            tolerance: 3.0 * (p * (1.0 - p) / n).sqrt(),
        });
    }

    let geom = CellGeometry::new(Point::ORIGIN, 1.0, 0.1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chords: Vec<f64> = (0..samples)
        .map(|_| chord_length(&geom, rng.random_range(-FRAC_PI_2..FRAC_PI_2)))
        .collect::<crate::Result<_>>()?;
    for frac in [0.25, 0.5, 0.9] {
        let d = 2.0 * frac;
        let p = chord_cdf(&geom, d)?;
        checks.push(OracleCheck {
            name: format!("chord cdf d/2R={frac}"),
            observed: chords.iter().filter(|&&c| c <= d).count() as f64 / n,
            expected: p,
            tolerance: 3.0 * (p * (1.0 - p) / n).sqrt(),
        });
    }

    let radio = RadioConfig::default();
    let users = vec![Point::new(1.0, 0.0); samples as usize];
    let channels = realize_channels(&users, &[Point::ORIGIN], &radio, seed)?;
    let mean_gain = 2.0 * radio.rayleigh_scale * radio.rayleigh_scale;
    let observed = (0..users.len()).map(|i| channels.gain(i, 0)).sum::<f64>() / n;
    checks.push(OracleCheck {
        name: "rayleigh power gain mean".into(),
        observed,
        expected: mean_gain,
        // exponential: standard deviation equals the mean
        tolerance: 3.0 * mean_gain / n.sqrt(),
    });
    Ok(checks)
}

pub fn cmd_validate(args: &ValidateArgs, out: &mut dyn Write) -> CliResult {
    let checks = self_checks(args.samples, args.seed).map_err(Failure::usage)?;
    let mut text = String::new();
    for c in &checks {
        let _ = writeln!(
            text,
            "{} {}: observed {:.6} expected {:.6} tolerance {:.6}",
            if c.passed() { "PASS" } else { "FAIL" },
            c.name,
            c.observed,
            c.expected,
            c.tolerance
        );
    }
    emit(out, &text)?;
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(Failure::runtime(format!("{failed} oracle check(s) failed")));
    }
    Ok(())
}
