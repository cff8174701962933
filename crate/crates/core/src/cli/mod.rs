//! Logic behind the `povmc` binary. Every command reads one `povmc/1`
//! document, delegates to a single library operation and writes one
//! document (or a CSV table for `cvscan`).
//!
//! Exit codes: 0 for a certified answer, 2 for a heuristic one, 1 when the
//! input is rejected or a solver refuses.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::compat::{
    self, jm_robustness, lhs_robustness, lhs_test_with, lhs_to_separable_preparation, separable_preparation_to_lhs, CompatOptions,
    Depolarizing, JmOutcome, LhsModel, LhsOutcome, ParentModel, RobustnessResult, SdpRecord, SeparableEnsemble,
};
use crate::compress::{
    jm_from_one_sim, kraus_to_choi_sn_witness, one_sim_from_jm, peb_kraus_extraction, prep_to_sim, seesaw_n_prep, sim_to_prep,
    PreparationModel, SeesawOptions,
};
use crate::cv::{incompressibility_scan, CellStatus, ScanConfig};
use crate::error::{Error, Result};
use crate::json;
use crate::objects::{
    choi_of_channel, sandwich, sn_upper_from_decomposition, Assemblage, DensityState, KrausChannel, MeasurementSet, PointwiseKrausModel,
    PureDecomposition, Validate, ValidationReport,
};
use crate::sdp::SdpProblem;

/// Tolerance at which returned SDP certificates are re-verified.
const CERT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Certified = 0,
    Refused = 1,
    Heuristic = 2,
}

#[derive(Debug, Parser)]
#[command(name = "povmc", version, about = "Measurement compression, joint measurability and steering certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Noise {
    Depolarizing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    /// parent_model -> pointwise_kraus_model
    JmToSim,
    /// pointwise_kraus_model (rank 1) -> parent_model
    SimToJm,
    /// preparation_model + --sigma -> pointwise_kraus_model
    PrepToSim,
    /// pointwise_kraus_model + --sigma -> preparation_model
    SimToPrep,
    /// lhs_model -> separable_preparation
    LhsToSep,
    /// separable_preparation -> lhs_model
    SepToLhs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChoiDirection {
    /// kraus_channel -> pure decomposition of its Choi state
    KrausToWitness,
    /// pure_decomposition + --sigma -> weighted Kraus operators
    Extract,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Input document; `-` reads stdin.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Solver tolerance.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// Largest number of deterministic strategies an SDP may enumerate.
    #[arg(long, default_value_t = compat::DEFAULT_STRATEGY_CAP)]
    pub cap: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check any povmc/1 document against its invariants.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Joint-measurability test of a measurement_set.
    Jm {
        #[command(flatten)]
        common: Common,
    },
    /// LHS test of an assemblage, or of a measurement_set sandwiched by --sigma.
    Steer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sigma: Option<PathBuf>,
    },
    /// Noise robustness of a measurement_set or an assemblage.
    Robustness {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "depolarizing")]
        noise: Noise,
    },
    /// See-saw search for an n-preparation model.
    Compress {
        #[command(flatten)]
        common: Common,
        /// Dimension of the prepared systems.
        #[arg(long)]
        n: usize,
        /// Seed for the restart initializations.
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        /// Sandwiching state for a measurement_set input; maximally mixed
        /// when absent.
        #[arg(long)]
        sigma: Option<PathBuf>,
    },
    /// Convert between model representations.
    Translate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        direction: Direction,
        /// Reference state for the prep/sim directions.
        #[arg(long)]
        sigma: Option<PathBuf>,
    },
    /// Choi-state decompositions and Kraus extraction.
    Choi {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        direction: ChoiDirection,
        /// Input state for `extract`; maximally mixed when absent.
        #[arg(long)]
        sigma: Option<PathBuf>,
    },
    /// Robustness table of binned position/momentum pairs.
    Cvscan {
        #[command(flatten)]
        common: Common,
        /// See-saw preparation dimensions, comma separated.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        /// Required together with --n; overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config restart count.
        #[arg(long)]
        restarts: Option<usize>,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Validate { common }
            | Command::Jm { common }
            | Command::Steer { common, .. }
            | Command::Robustness { common, .. }
            | Command::Compress { common, .. }
            | Command::Translate { common, .. }
            | Command::Choi { common, .. }
            | Command::Cvscan { common, .. } => common,
        }
    }
}

/// Separable state plus Alice's measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparablePreparation {
    pub ensemble: SeparableEnsemble,
    pub measurements: MeasurementSet,
}

/// What a command produced: the text to write and the exit code.
#[derive(Debug)]
pub struct Output {
    pub text: String,
    pub exit: Exit,
}

/// Sets the rayon pool size from `POVMC_THREADS` when present.
pub fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("POVMC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| Error::Validation(format!("POVMC_THREADS must be a positive integer, got {raw:?}")))?;
    if n == 0 {
        return Err(Error::Validation("POVMC_THREADS must be positive".into()));
    }
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs the command and writes its output. Errors are returned to the
/// caller, which maps them to exit code 1.
pub fn run(cli: &Cli) -> Result<Exit> {
    let out = execute(&cli.command)?;
    match &cli.command.common().output {
        Some(path) => std::fs::write(path, &out.text)?,
        None => print!("{}", out.text),
    }
    Ok(out.exit)
}

/// Runs the command without touching the output destination.
pub fn execute(cmd: &Command) -> Result<Output> {
    let common = cmd.common();
    if common.format == Format::Csv && !matches!(cmd, Command::Cvscan { .. }) {
        return Err(Error::Validation("csv output is only available for cvscan".into()));
    }
    if !(common.tol > 0.0 && common.tol < 1.0) {
        return Err(Error::Validation(format!("--tol must lie in (0, 1), got {}", common.tol)));
    }
    let opts = CompatOptions { cap: common.cap, tol: common.tol };
    match cmd {
        Command::Validate { .. } => cmd_validate(&read_input(common)?),
        Command::Jm { .. } => cmd_jm(&read_input(common)?, opts),
        Command::Steer { sigma, .. } => cmd_steer(&read_input(common)?, sigma.as_deref(), opts),
        Command::Robustness { noise, .. } => cmd_robustness(&read_input(common)?, *noise, opts),
        Command::Compress { n, seed, restarts, sigma, .. } => {
            let seesaw =
                SeesawOptions { restarts: *restarts, seed: *seed, sdp_tol: common.tol, cap: common.cap, ..SeesawOptions::default() };
            cmd_compress(&read_input(common)?, *n, sigma.as_deref(), &seesaw)
        }
        Command::Translate { direction, sigma, .. } => cmd_translate(&read_input(common)?, *direction, sigma.as_deref()),
        Command::Choi { direction, sigma, .. } => cmd_choi(&read_input(common)?, *direction, sigma.as_deref()),
        Command::Cvscan { n, seed, restarts, .. } => {
            let mut cfg = match &common.input {
                Some(_) => json::from_document::<ScanConfig>(&read_input(common)?, "scan_config")?,
                None => ScanConfig::default(),
            };
            if !n.is_empty() {
                if seed.is_none() {
                    return Err(Error::Validation("--seed is required when --n requests see-saw cells".into()));
                }
                cfg.seesaw_ns = n.clone();
            }
            if let Some(s) = seed {
                cfg.seed = *s;
            }
            if let Some(r) = restarts {
                cfg.restarts = *r;
            }
            cfg.cap = common.cap;
            cmd_cvscan(&cfg, common.format)
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        return Ok(std::io::read_to_string(std::io::stdin())?);
    }
    std::fs::read_to_string(path).map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))
}

fn read_input(common: &Common) -> Result<String> {
    let path = common.input.as_deref().ok_or_else(|| Error::Validation("--input is required".into()))?;
    read_text(path)
}

fn read_sigma(path: &Path) -> Result<DensityState> {
    let s: DensityState = json::from_document(&read_text(path)?, "density_state")?;
    s.validate().into_result()?;
    Ok(s)
}

fn document<T: Serialize>(kind: &str, data: &T, exit: Exit) -> Result<Output> {
    let mut text = json::to_pretty(&json::to_document(kind, data)?)?;
    text.push('\n');
    Ok(Output { text, exit })
}

fn parse_valid<T: serde::de::DeserializeOwned + Validate>(data: Value) -> Result<T> {
    let v: T = json::from_data(data)?;
    v.validate().into_result()?;
    Ok(v)
}

fn expect_kind(found: &str, want: &[&str]) -> Result<()> {
    if want.contains(&found) {
        Ok(())
    } else {
        Err(Error::Json(format!("at `kind`: expected one of {want:?}, found {found:?}")))
    }
}

fn check_records(records: &[&SdpRecord]) -> Result<Value> {
    let mut reports = Vec::with_capacity(records.len());
    for r in records {
        let rep = r.verify(CERT_TOL);
        if !rep.ok {
            let worst: Vec<String> = rep.breaches().iter().map(|c| format!("{} = {:.3e}", c.name, c.value)).collect();
            return Err(Error::Solver(format!("certificate failed re-verification: {}", worst.join(", "))));
        }
        reports.push(rep);
    }
    Ok(json!({ "verified": reports.len(), "tolerance": CERT_TOL }))
}

pub fn cmd_validate(text: &str) -> Result<Output> {
    let (kind, data) = json::read_envelope(text)?;
    let report: ValidationReport = match kind.as_str() {
        "measurement_set" => json::from_data::<MeasurementSet>(data)?.validate(),
        "assemblage" => json::from_data::<Assemblage>(data)?.validate(),
        "density_state" => json::from_data::<DensityState>(data)?.validate(),
        "kraus_channel" => json::from_data::<KrausChannel>(data)?.validate(),
        "pure_decomposition" => json::from_data::<PureDecomposition>(data)?.validate(),
        "parent_model" => json::from_data::<ParentModel>(data)?.validate(),
        "lhs_model" => json::from_data::<LhsModel>(data)?.validate(),
        "pointwise_kraus_model" => json::from_data::<PointwiseKrausModel>(data)?.validate(),
        "preparation_model" => json::from_data::<PreparationModel>(data)?.validate(),
        "separable_preparation" => {
            let s: SeparablePreparation = json::from_data(data)?;
            let mut r = ValidationReport::new("separable_preparation");
            r.merge("measurements", s.measurements.validate());
            if let Err(e) = separable_preparation_to_lhs(&s.ensemble, &s.measurements) {
                r.fail(&e.to_string(), "ensemble");
            }
            r
        }
        "sdp" => {
            let p: SdpProblem = serde_json::from_value(data.get("problem").cloned().unwrap_or(Value::Null))
                .map_err(|e| Error::Json(format!("at `data.problem`: {e}")))?;
            let mut r = ValidationReport::new("sdp");
            if let Err(e) = p.check() {
                r.fail(&e.to_string(), "problem");
            }
            r
        }
        "scan_config" => {
            let c: ScanConfig = json::from_data(data)?;
            let mut r = ValidationReport::new("scan_config");
            if let Err(e) = crate::cv::TruncationConfig::from_interior(1, &c.interior_edges, c.quadrature_tol) {
                r.fail(&e.to_string(), "interior_edges");
            }
            if c.dims.is_empty() || c.dims.contains(&0) {
                r.fail("dims must be non-empty and positive", "dims");
            }
            r
        }
        other => return Err(Error::Json(format!("at `kind`: unknown document kind {other:?}"))),
    };
    let exit = if report.is_ok() { Exit::Certified } else { Exit::Refused };
    document("validation_report", &report, exit)
}

pub fn cmd_jm(text: &str, opts: CompatOptions) -> Result<Output> {
    let ms: MeasurementSet = json::from_document(text, "measurement_set")?;
    ms.validate().into_result()?;
    let outcome = compat::jm_test_with(&ms, opts)?;
    let cert = check_records(&[outcome.record()])?;
    let data = match &outcome {
        JmOutcome::Compatible { model, .. } => {
            json!({ "status": "feasible", "verdict": "jointly_measurable", "model": model, "certificate": cert })
        }
        JmOutcome::Incompatible { witness, .. } => {
            json!({ "status": "infeasible", "verdict": "incompatible", "witness": witness, "certificate": cert })
        }
    };
    document("jm_result", &data, Exit::Certified)
}

/// Reads an assemblage, or a measurement set sandwiched by `sigma`
/// (maximally mixed when absent).
fn assemblage_input(text: &str, sigma: Option<&Path>) -> Result<Assemblage> {
    let (kind, data) = json::read_envelope(text)?;
    expect_kind(&kind, &["assemblage", "measurement_set"])?;
    if kind == "assemblage" {
        if sigma.is_some() {
            return Err(Error::Validation("--sigma only applies to measurement_set inputs".into()));
        }
        return parse_valid(data);
    }
    let ms: MeasurementSet = parse_valid(data)?;
    let s = match sigma {
        Some(p) => read_sigma(p)?,
        None => DensityState::maximally_mixed(ms.dim()),
    };
    sandwich(&s, &ms)
}

pub fn cmd_steer(text: &str, sigma: Option<&Path>, opts: CompatOptions) -> Result<Output> {
    let asm = assemblage_input(text, sigma)?;
    let outcome = lhs_test_with(&asm, opts)?;
    let record = match &outcome {
        LhsOutcome::Unsteerable { record, .. } | LhsOutcome::Steerable { record, .. } => record,
    };
    let cert = check_records(&[record])?;
    let data = match &outcome {
        LhsOutcome::Unsteerable { model, .. } => {
            json!({ "status": "feasible", "verdict": "unsteerable", "model": model, "certificate": cert })
        }
        LhsOutcome::Steerable { witness, .. } => {
            json!({ "status": "infeasible", "verdict": "steerable", "witness": witness, "certificate": cert })
        }
    };
    document("lhs_result", &data, Exit::Certified)
}

pub fn cmd_robustness(text: &str, noise: Noise, opts: CompatOptions) -> Result<Output> {
    let (kind, data) = json::read_envelope(text)?;
    expect_kind(&kind, &["measurement_set", "assemblage"])?;
    let Noise::Depolarizing = noise;
    let (target, r): (&str, RobustnessResult) = if kind == "measurement_set" {
        let ms: MeasurementSet = parse_valid(data)?;
        ("joint_measurability", jm_robustness(&ms, &Depolarizing, opts)?)
    } else {
        let asm: Assemblage = parse_valid(data)?;
        ("steering", lhs_robustness(&asm, opts)?)
    };
    let cert = check_records(&r.records.iter().collect::<Vec<_>>())?;
    let data = json!({
        "target": target,
        "noise": "depolarizing",
        "eta_star": r.eta_star,
        "lower": r.lower,
        "upper": r.upper,
        "method": r.method,
        "certificate": cert,
    });
    document("robustness", &data, Exit::Certified)
}

pub fn cmd_compress(text: &str, n: usize, sigma: Option<&Path>, opts: &SeesawOptions) -> Result<Output> {
    let asm = assemblage_input(text, sigma)?;
    let r = seesaw_n_prep(&asm, n, opts)?;
    let exit = if r.exact { Exit::Certified } else { Exit::Heuristic };
    document("seesaw_result", &r, exit)
}

pub fn cmd_translate(text: &str, direction: Direction, sigma: Option<&Path>) -> Result<Output> {
    let (kind, data) = json::read_envelope(text)?;
    let need_sigma =
        || -> Result<DensityState> { read_sigma(sigma.ok_or_else(|| Error::Validation("--sigma is required for this direction".into()))?) };
    match direction {
        Direction::JmToSim => {
            expect_kind(&kind, &["parent_model"])?;
            let pm: ParentModel = parse_valid(data)?;
            document("pointwise_kraus_model", &one_sim_from_jm(&pm)?, Exit::Certified)
        }
        Direction::SimToJm => {
            expect_kind(&kind, &["pointwise_kraus_model"])?;
            let m: PointwiseKrausModel = parse_valid(data)?;
            document("parent_model", &jm_from_one_sim(&m)?, Exit::Certified)
        }
        Direction::PrepToSim => {
            expect_kind(&kind, &["preparation_model"])?;
            let pm: PreparationModel = parse_valid(data)?;
            document("pointwise_kraus_model", &prep_to_sim(&pm, &need_sigma()?)?, Exit::Certified)
        }
        Direction::SimToPrep => {
            expect_kind(&kind, &["pointwise_kraus_model"])?;
            let m: PointwiseKrausModel = parse_valid(data)?;
            document("preparation_model", &sim_to_prep(&m, &need_sigma()?)?, Exit::Certified)
        }
        Direction::LhsToSep => {
            expect_kind(&kind, &["lhs_model"])?;
            let m: LhsModel = parse_valid(data)?;
            let (ensemble, measurements) = lhs_to_separable_preparation(&m)?;
            document("separable_preparation", &SeparablePreparation { ensemble, measurements }, Exit::Certified)
        }
        Direction::SepToLhs => {
            expect_kind(&kind, &["separable_preparation"])?;
            let s: SeparablePreparation = json::from_data(data)?;
            s.measurements.validate().into_result()?;
            document("lhs_model", &separable_preparation_to_lhs(&s.ensemble, &s.measurements)?, Exit::Certified)
        }
    }
}

pub fn cmd_choi(text: &str, direction: ChoiDirection, sigma: Option<&Path>) -> Result<Output> {
    let (kind, data) = json::read_envelope(text)?;
    match direction {
        ChoiDirection::KrausToWitness => {
            expect_kind(&kind, &["kraus_channel"])?;
            let c: KrausChannel = parse_valid(data)?;
            let dec = kraus_to_choi_sn_witness(&c)?;
            let bound = sn_upper_from_decomposition(&choi_of_channel(&c).matrix, &dec)?;
            let data = json!({ "decomposition": dec, "schmidt_number_upper": bound });
            document("choi_witness", &data, Exit::Certified)
        }
        ChoiDirection::Extract => {
            expect_kind(&kind, &["pure_decomposition"])?;
            let dec: PureDecomposition = json::from_data(data)?;
            dec.validate().into_result()?;
            let s = match sigma {
                Some(p) => read_sigma(p)?,
                None => DensityState::maximally_mixed(dec.shape.dim_b),
            };
            document("kraus_extraction", &peb_kraus_extraction(&dec, &s)?, Exit::Certified)
        }
    }
}

pub fn cmd_cvscan(cfg: &ScanConfig, format: Format) -> Result<Output> {
    let table = incompressibility_scan(cfg)?;
    check_records(&table.records.iter().collect::<Vec<_>>())?;
    let exit = if table.rows.iter().any(|r| r.cert_status == CellStatus::Refused) {
        Exit::Refused
    } else if table.rows.iter().any(|r| r.cert_status == CellStatus::Heuristic) {
        Exit::Heuristic
    } else {
        Exit::Certified
    };
    match format {
        Format::Csv => Ok(Output { text: table.to_csv(), exit }),
        Format::Json => document("scan_table", &table, exit),
    }
}
