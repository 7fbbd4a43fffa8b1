//! The `snapsynth` command line.
//!
//! Exit codes: 0 success, 1 quality failure (a result was produced but
//! missed its threshold), 2 usage or input error. Flags take precedence over
//! `SNAPSYNTH_*` environment variables, which take precedence over defaults.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Partial, Result};
use crate::fock::{
    apply_sequence, displacement_operator, sequence_unitary, state_fidelity, unitary_fidelity,
    CutoffDim, FidelityMode, GateSequence, TruncatedState, C64,
};
use crate::optimizer::OptimizerConfig;
use crate::state_prep::{
    compile_fock_sublinear, compile_state_prep, gate_count_sweep, CutoffRule, PrepPlan, Scheme,
    TargetState,
};
use crate::unitary::{compile_unitary, TargetUnitary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_QUALITY: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Unitarity tolerance for matrices read from files.
const INPUT_UNITARITY_TOLERANCE: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(name = "snapsynth", version, about = "Displacement + SNAP gate synthesis for a bosonic mode")]
pub struct Cli {
    #[command(flatten)]
    pub run: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    /// Truncation dimension; defaults depend on the target.
    #[arg(long, global = true, env = "SNAPSYNTH_CUTOFF")]
    pub cutoff: Option<usize>,
    /// Objective evaluations per optimizer run (scaled by parameter count for joint refinements).
    #[arg(long, global = true, env = "SNAPSYNTH_MAX_EVALS", default_value_t = 4000)]
    pub max_evals: usize,
    #[arg(long, global = true, env = "SNAPSYNTH_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long, global = true, env = "SNAPSYNTH_OUT")]
    pub out: Option<PathBuf>,
    /// -v for progress, -vv for optimizer detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

impl RunConfig {
    fn optimizer(&self) -> Result<OptimizerConfig> {
        let cfg = OptimizerConfig {
            max_evals: self.max_evals,
            seed: self.seed,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn cutoff(&self) -> Result<Option<CutoffDim>> {
        self.cutoff.map(CutoffDim::new).transpose()
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compile a state: `fock:N`, `uniform:N`, or a JSON list of coefficients
    /// (reals or `[re, im]` pairs).
    PrepareState {
        target: String,
        #[arg(long, env = "SNAPSYNTH_FIDELITY", default_value_t = 0.999)]
        fidelity: f64,
    },
    /// Compile the number state |n⟩ with either scheme.
    PrepareFock {
        n: usize,
        #[arg(long, env = "SNAPSYNTH_FIDELITY", default_value_t = 0.999)]
        fidelity: f64,
        #[arg(long, env = "SNAPSYNTH_SCHEME", value_enum, default_value_t = SchemeChoice::Auto)]
        scheme: SchemeChoice,
    },
    /// Compile a unitary given as `{"dim": d, "matrix": [[[re, im], …], …]}`.
    SynthesizeUnitary {
        matrix: PathBuf,
        #[arg(long, env = "SNAPSYNTH_FIDELITY", default_value_t = 0.999)]
        fidelity: f64,
    },
    /// Re-simulate a sequence (bare, or embedded in a report) and compare it
    /// with an expectation. Without one, the report's own target is used.
    Verify {
        sequence: PathBuf,
        /// Target state, same syntax as `prepare-state`.
        #[arg(long, conflicts_with_all = ["unitary", "displacement"])]
        state: Option<String>,
        /// Target unitary matrix file.
        #[arg(long, conflicts_with = "displacement")]
        unitary: Option<PathBuf>,
        /// Target displacement `D(re + i·im)` given as `re,im`.
        #[arg(long, allow_hyphen_values = true)]
        displacement: Option<String>,
        /// Threshold; defaults to the report's threshold, else 0.999.
        #[arg(long, env = "SNAPSYNTH_FIDELITY")]
        fidelity: Option<f64>,
    },
    /// SNAP-count sweep from `{"n_values": […], "fidelities": […]}`; writes CSV.
    Sweep { spec: PathBuf },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeChoice {
    Linear,
    Sublinear,
    Auto,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    init_logging(cli.run.verbose);
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::BelowTarget { .. } | Error::Optimizer(_) | Error::Calibration { .. } => EXIT_QUALITY,
                _ => EXIT_INPUT,
            }
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
}

fn execute(cli: &Cli) -> Result<i32> {
    let run = &cli.run;
    match &cli.command {
        Command::PrepareState { target, fidelity } => prepare_state(run, target, *fidelity),
        Command::PrepareFock {
            n,
            fidelity,
            scheme,
        } => prepare_fock(run, *n, *fidelity, *scheme),
        Command::SynthesizeUnitary { matrix, fidelity } => synthesize(run, matrix, *fidelity),
        Command::Verify {
            sequence,
            state,
            unitary,
            displacement,
            fidelity,
        } => verify(run, sequence, state.as_deref(), unitary.as_deref(), displacement.as_deref(), *fidelity),
        Command::Sweep { spec } => sweep(run, spec),
    }
}

fn write_output(run: &RunConfig, text: &str) -> Result<()> {
    match &run.out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn check_threshold(f: f64) -> Result<()> {
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::invalid(format!("fidelity threshold {f} outside (0, 1]")));
    }
    Ok(())
}

/// `fock:N`, `uniform:N`, or JSON coefficients. Coefficients must be
/// normalized within 1e-6 and are then rescaled exactly.
pub fn parse_target_spec(spec: &str) -> Result<TargetState> {
    let spec = spec.trim();
    let preset = |prefix: &str| -> Result<Option<usize>> {
        match spec.strip_prefix(prefix) {
            Some(rest) => rest
                .parse()
                .map(Some)
                .map_err(|_| Error::Format(format!("bad level in {spec:?}"))),
            None => Ok(None),
        }
    };
    if let Some(n) = preset("fock:")? {
        return Ok(TargetState::fock(n));
    }
    if let Some(n) = preset("uniform:")? {
        return Ok(TargetState::uniform(n));
    }
    if !spec.starts_with('[') {
        return Err(Error::Format(format!(
            "target {spec:?} is neither fock:N, uniform:N nor a JSON list"
        )));
    }
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Coeff {
        Real(f64),
        Complex([f64; 2]),
    }
    let coeffs: Vec<Coeff> = serde_json::from_str(spec)?;
    let coeffs: Vec<C64> = coeffs
        .into_iter()
        .map(|c| match c {
            Coeff::Real(x) => C64::new(x, 0.0),
            Coeff::Complex([re, im]) => C64::new(re, im),
        })
        .collect();
    let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("target norm {norm} is not 1")));
    }
    TargetState::normalized(coeffs)
}

fn coeff_pairs(t: &TargetState) -> Vec<[f64; 2]> {
    t.coeffs().iter().map(|c| [c.re, c.im]).collect()
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum TargetWire {
    State(Vec<[f64; 2]>),
    Unitary(Value),
}

#[derive(Serialize)]
struct PrepReport<'a> {
    command: &'static str,
    target: TargetWire,
    threshold: f64,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    requested_scheme: Option<SchemeChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chosen_scheme: Option<Scheme>,
    seed: u64,
    plan: &'a PrepPlan,
}

fn emit_plan(
    run: &RunConfig,
    command: &'static str,
    target: &TargetState,
    threshold: f64,
    plan: &PrepPlan,
    schemes: Option<(SchemeChoice, Scheme)>,
) -> Result<i32> {
    let passed = plan.fidelity >= threshold;
    let report = PrepReport {
        command,
        target: TargetWire::State(coeff_pairs(target)),
        threshold,
        passed,
        requested_scheme: schemes.map(|s| s.0),
        chosen_scheme: schemes.map(|s| s.1),
        seed: run.seed,
        plan,
    };
    write_output(run, &crate::json::to_canonical_string(&report)?)?;
    if passed {
        Ok(EXIT_OK)
    } else {
        eprintln!("fidelity {} below threshold {threshold}", significant(plan.fidelity));
        Ok(EXIT_QUALITY)
    }
}

fn prepare_state(run: &RunConfig, spec: &str, threshold: f64) -> Result<i32> {
    check_threshold(threshold)?;
    let target = parse_target_spec(spec)?;
    let cutoff = run
        .cutoff()?
        .unwrap_or_else(|| CutoffDim::for_target_dim(target.support().max(1)));
    let plan = compile_state_prep(&target, cutoff, &run.optimizer()?)?;
    emit_plan(run, "prepare-state", &target, threshold, &plan, None)
}

fn prepare_fock(run: &RunConfig, n: usize, threshold: f64, choice: SchemeChoice) -> Result<i32> {
    check_threshold(threshold)?;
    let cfg = run.optimizer()?;
    let target = TargetState::fock(n);
    let cutoff_for = |scheme| -> Result<CutoffDim> {
        Ok(run.cutoff()?.unwrap_or_else(|| CutoffRule::PerScheme.cutoff(scheme, n)))
    };
    let linear = || compile_state_prep(&target, cutoff_for(Scheme::Linear)?, &cfg);
    let sublinear = || -> Result<PrepPlan> {
        if threshold >= 1.0 {
            return Err(Error::invalid("the folding scheme needs a threshold below 1"));
        }
        compile_fock_sublinear(n, threshold.max(0.9 + 1e-12), cutoff_for(Scheme::Sublinear)?, &cfg)
    };
    let plan = match choice {
        _ if n == 0 => linear()?,
        SchemeChoice::Linear => linear()?,
        SchemeChoice::Sublinear => match sublinear() {
            Ok(p) => p,
            Err(Error::BelowTarget { best, detail, .. }) => {
                eprintln!("folding missed its target: {detail}");
                match *best {
                    Partial::Plan(p) => p,
                    _ => return Ok(EXIT_QUALITY),
                }
            }
            Err(e) => return Err(e),
        },
        SchemeChoice::Auto => {
            let lin = linear()?;
            match sublinear() {
                Ok(sub) if sub.snap_count < lin.snap_count || lin.fidelity < threshold => sub,
                Ok(_) => lin,
                Err(e) => {
                    log::info!("folding scheme unavailable: {e}");
                    lin
                }
            }
        }
    };
    emit_plan(run, "prepare-fock", &target, threshold, &plan, Some((choice, plan.scheme)))
}

#[derive(Serialize)]
struct SynthOutput<'a> {
    command: &'static str,
    target: TargetWire,
    threshold: f64,
    passed: bool,
    seed: u64,
    report: &'a crate::unitary::SynthReport,
}

fn synthesize(run: &RunConfig, path: &Path, threshold: f64) -> Result<i32> {
    check_threshold(threshold)?;
    let text = fs::read_to_string(path)?;
    let target = TargetUnitary::from_json(&text, run.cutoff()?, INPUT_UNITARITY_TOLERANCE)?;
    let report = compile_unitary(&target, &run.optimizer()?, true)?;
    let passed = report.f_unitary_full >= threshold;
    let out = SynthOutput {
        command: "synthesize-unitary",
        target: TargetWire::Unitary(serde_json::from_str(&target.to_json()?)?),
        threshold,
        passed,
        seed: run.seed,
        report: &report,
    };
    write_output(run, &crate::json::to_canonical_string(&out)?)?;
    if passed {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "full fidelity {} below threshold {threshold} (block fidelity {})",
            significant(report.f_unitary_full),
            significant(report.f_unitary_block)
        );
        Ok(EXIT_QUALITY)
    }
}

/// First object in `v` (depth-first) that looks like a gate sequence.
fn find_sequence(v: &Value) -> Option<&Value> {
    match v {
        Value::Object(map) if map.contains_key("gates") && map.contains_key("cutoff") => Some(v),
        Value::Object(map) => map.values().find_map(find_sequence),
        _ => None,
    }
}

fn verify(
    run: &RunConfig,
    path: &Path,
    state: Option<&str>,
    unitary: Option<&Path>,
    displacement: Option<&str>,
    threshold: Option<f64>,
) -> Result<i32> {
    let doc: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let seq_value = find_sequence(&doc).ok_or_else(|| Error::Format("no gate sequence found".into()))?;
    let seq: GateSequence = serde_json::from_value(seq_value.clone())?;
    let cutoff = seq.cutoff();
    let threshold = threshold
        .or_else(|| doc.get("threshold").and_then(Value::as_f64))
        .unwrap_or(0.999);
    check_threshold(threshold)?;

    let state_fid = |t: &TargetState| -> Result<f64> {
        let ideal = TruncatedState::from_amplitudes(t.coeffs(), cutoff)?;
        let out = apply_sequence(&seq, &TruncatedState::vacuum(cutoff))?;
        state_fidelity(&ideal, &out.state)
    };
    let unitary_fid = |text: &str| -> Result<f64> {
        let t = TargetUnitary::from_json(text, Some(cutoff), INPUT_UNITARITY_TOLERANCE)?;
        unitary_fidelity(&sequence_unitary(&seq), &t.embedded(), FidelityMode::Full)
    };

    let fidelity = if let Some(spec) = state {
        state_fid(&parse_target_spec(spec)?)?
    } else if let Some(p) = unitary {
        unitary_fid(&fs::read_to_string(p)?)?
    } else if let Some(d) = displacement {
        let alpha = parse_complex(d)?;
        let ideal = displacement_operator(alpha, cutoff)?;
        unitary_fidelity(&sequence_unitary(&seq), &ideal, FidelityMode::Full)?
    } else {
        let target = doc
            .get("target")
            .ok_or_else(|| Error::invalid("no expectation given and the file has no target"))?;
        match serde_json::from_value::<TargetWire>(target.clone())? {
            TargetWire::State(pairs) => {
                let coeffs = pairs.iter().map(|[re, im]| C64::new(*re, *im)).collect();
                state_fid(&TargetState::normalized(coeffs)?)?
            }
            TargetWire::Unitary(m) => unitary_fid(&m.to_string())?,
        }
    };

    let line = format!("fidelity {}\n", significant(fidelity));
    write_output(run, &line)?;
    if fidelity >= threshold {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "fidelity {} below threshold {threshold} (drop {:.3e})",
            significant(fidelity),
            threshold - fidelity
        );
        Ok(EXIT_QUALITY)
    }
}

fn parse_complex(s: &str) -> Result<C64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| Error::Format(format!("bad number {p:?}")));
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err(Error::Format(format!("expected re,im but got {s:?}"))),
    }
}

/// Decimal rendering with 12 significant digits.
pub fn significant(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSpec {
    n_values: Vec<usize>,
    fidelities: Vec<f64>,
}

fn sweep(run: &RunConfig, path: &Path) -> Result<i32> {
    let spec: SweepSpec = serde_json::from_str(&fs::read_to_string(path)?)?;
    for &f in &spec.fidelities {
        check_threshold(f)?;
    }
    let rule = match run.cutoff()? {
        Some(c) => CutoffRule::Fixed(c),
        None => CutoffRule::PerScheme,
    };
    let table = gate_count_sweep(&spec.n_values, &spec.fidelities, rule, &run.optimizer()?)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    write_output(run, &String::from_utf8(buf).expect("csv output is UTF-8"))?;
    if !table.missing.is_empty() {
        let log = table.missing.join("\n") + "\n";
        match &run.out {
            Some(out) => {
                let mut name = out.as_os_str().to_owned();
                name.push(".missing.log");
                fs::write(PathBuf::from(name), log)?;
            }
            None => eprint!("{log}"),
        }
    }
    Ok(EXIT_OK)
}
