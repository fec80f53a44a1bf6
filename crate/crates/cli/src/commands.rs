use std::io::Write;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use rio_core::homodyne::HomodyneError;
use rio_core::multiparty::{
    build_chain_channel, build_controlled_joint_channel, build_cyclic_channel, build_joint_channel,
    controller_chain_apply, resource_count, resource_table, ControllerForm, MultipartyError, Task,
};
use rio_core::protocol::{monte_carlo, trial_rng, McConfig, ProtocolError};
use rio_core::report::{format_sig, sweep as sweep_rows, SweepAxis, SweepError, SWEEP_HEADER};
use rio_core::verify::{run_verification, VerifyOptions};
use rio_core::{
    run_riho, run_ripuo, BranchState, ChannelVariant, ForcedOutcomes, HomodyneModel, LumpOperator, OperatorError,
    ProtocolKind, ProtocolResult, QubitState, SingleQubitOperator, StateError, C64,
};

use crate::config::{invalid, parse_bits, pick, pick_complex, pick_real, ConfigError, FileConfig};
use crate::{ChannelArgs, McArgs, ModelArgs, RunArgs, SweepArgs, VerifyArgs};

pub const SEED_ENV: &str = "RIO_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Homodyne(#[from] HomodyneError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Multiparty(#[from] MultipartyError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

type Outcome = Result<u8, CliError>;

fn seed(flag: Option<u64>, file: &FileConfig) -> Result<u64, ConfigError> {
    if let Some(s) = flag.or(file.seed) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| invalid("seed", format!("${SEED_ENV} = {text:?} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn protocol(flag: &Option<String>, file: &FileConfig) -> Result<ProtocolKind, ConfigError> {
    pick(flag, &file.protocol).map_or(Ok(ProtocolKind::Riho), |p| {
        p.parse().map_err(|_| invalid("protocol", format!("unknown protocol {p:?}")))
    })
}

fn channel(flag: &Option<String>, file: &FileConfig) -> Result<ChannelVariant, ConfigError> {
    pick(flag, &file.channel).map_or(Ok(ChannelVariant::OmegaPlus), |c| {
        c.parse().map_err(|_| invalid("channel", format!("unknown channel {c:?}; expected omega+, omega-, pi+ or pi-")))
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
struct ModelEcho {
    z: f64,
    theta: f64,
    #[serde(rename = "D")]
    d: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
}

/// Resolves the homodyne parameters; `defaults` is `(z, θ)`.
fn model(args: &ModelArgs, file: &FileConfig, defaults: (f64, f64)) -> Result<(HomodyneModel, ModelEcho), CliError> {
    let z = pick_real("z", &args.z, &file.z)?.unwrap_or(defaults.0);
    let theta = pick_real("theta", &args.theta, &file.theta)?.unwrap_or(defaults.1);
    let d = pick_real("D", &args.d, &file.d)?;
    let gamma = pick_real("gamma", &args.gamma, &file.gamma)?;
    let t = pick_real("t", &args.t, &file.t)?;
    let d = match (d, gamma, t) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err(invalid("D", "give either D or (gamma, t), not both").into())
        }
        (Some(d), None, None) => d,
        (None, Some(g), Some(t)) => (-g * t).exp(),
        (None, Some(_), None) | (None, None, Some(_)) => {
            return Err(invalid("gamma", "gamma and t must be given together").into())
        }
        (None, None, None) => 1.0,
    };
    let model = HomodyneModel::new(z, theta, d)?;
    Ok((model, ModelEcho { z, theta, d, gamma, t }))
}

#[derive(Debug, Serialize)]
struct RunEcho {
    protocol: ProtocolKind,
    channel: ChannelVariant,
    alpha: C64,
    beta: C64,
    u: C64,
    v: C64,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<u8>,
    #[serde(flatten)]
    model: ModelEcho,
    seed: u64,
    forced_outcomes: ForcedOutcomes,
}

#[derive(Debug, Serialize)]
struct RunOutput<'a> {
    config: RunEcho,
    succeeded: bool,
    result: &'a ProtocolResult,
}

fn phase_value<R: Rng>(
    name: &'static str,
    literal: Option<Option<C64>>,
    phase: Option<f64>,
    rng: &mut R,
) -> Result<C64, ConfigError> {
    match (literal, phase) {
        (Some(_), Some(_)) => Err(invalid(name, format!("give either --{name} or --{name}-phase"))),
        (Some(Some(c)), None) => Ok(c),
        (None, Some(p)) => Ok(C64::from_polar(1.0, p)),
        (Some(None), None) | (None, None) => Ok(C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))),
    }
}

pub fn run(args: &RunArgs, file: &FileConfig) -> Outcome {
    let kind = protocol(&args.protocol, file)?;
    let channel = channel(&args.channel, file)?;
    let (model, model_echo) = model(&args.model, file, (50.0, 0.6))?;
    let seed = seed(args.seed, file)?;
    let forced: ForcedOutcomes = match pick(&args.force, &file.force) {
        Some(text) => text.parse()?,
        None => ForcedOutcomes::default(),
    };
    let mut rng = trial_rng(seed, 0);

    let alpha = pick_complex("alpha", &args.alpha, &file.alpha)?.flatten();
    let beta = pick_complex("beta", &args.beta, &file.beta)?.flatten();
    let psi = match (alpha, beta) {
        (Some(a), Some(b)) => QubitState::new(a, b)?,
        (None, None) => QubitState::random(&mut rng),
        _ => return Err(invalid("alpha", "give both alpha and beta, or neither for a random input").into()),
    };
    let u = phase_value(
        "u",
        pick_complex("u", &args.u, &file.u)?,
        pick_real("u_phase", &args.u_phase, &file.u_phase)?,
        &mut rng,
    )?;
    let v = phase_value(
        "v",
        pick_complex("v", &args.v, &file.v)?,
        pick_real("v_phase", &args.v_phase, &file.v_phase)?,
        &mut rng,
    )?;
    let lump = LumpOperator::new(u, v)?;
    let m_choice = pick(&args.m, &file.m);
    if m_choice.is_some_and(|m| m > 1) {
        return Err(invalid("m", "m must be 0 or 1").into());
    }

    let result = match kind {
        ProtocolKind::Riho => run_riho(&psi, &lump, channel, &model, &mut rng, &forced)?,
        ProtocolKind::Ripuo => {
            let m = m_choice.unwrap_or(0);
            let sub: SingleQubitOperator = lump.sub_operator(m);
            run_ripuo(&psi, &sub, m, channel, &model, &mut rng, &forced)?
        }
    };
    let output = RunOutput {
        config: RunEcho {
            protocol: kind,
            channel,
            alpha: psi.alpha(),
            beta: psi.beta(),
            u,
            v,
            m: if kind == ProtocolKind::Ripuo { Some(m_choice.unwrap_or(0)) } else { None },
            model: model_echo,
            seed,
            forced_outcomes: forced,
        },
        succeeded: result.succeeded(),
        result: &result,
    };
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &output)?;
    writeln!(out)?;
    Ok(if result.succeeded() { 0 } else { 2 })
}

pub fn sweep(args: &SweepArgs, file: &FileConfig) -> Outcome {
    let axis: SweepAxis = pick(&args.axis, &file.axis).map_or(Ok(SweepAxis::Dissipation), |a| a.parse())?;
    let (base, _) = model(&args.model, file, (1.0, std::f64::consts::PI))?;
    let (default_from, default_to) = match axis {
        SweepAxis::Dissipation => (0.0, 1.0),
        SweepAxis::Amplitude => (0.1, 3.0),
        SweepAxis::Phase => (0.05, std::f64::consts::PI),
    };
    let from = pick_real("from", &args.from, &file.from)?.unwrap_or(default_from);
    let to = pick_real("to", &args.to, &file.to)?.unwrap_or(default_to);
    let steps = pick(&args.steps, &file.steps).unwrap_or(11);
    let rows = sweep_rows(&base, axis, from, to, steps)?;

    let mut writer = csv::Writer::from_writer(std::io::stdout().lock());
    writer.write_record(SWEEP_HEADER)?;
    for row in &rows {
        writer.write_record(row.fields())?;
    }
    writer.flush()?;
    Ok(0)
}

fn opt_field(value: Option<f64>) -> String {
    value.map(|x| format_sig(x, 12)).unwrap_or_default()
}

fn opt_flag(value: Option<bool>) -> String {
    value.map(|b| b.to_string()).unwrap_or_default()
}

pub fn mc(args: &McArgs, file: &FileConfig) -> Outcome {
    let kind = protocol(&args.protocol, file)?;
    let channel = channel(&args.channel, file)?;
    let (model, _) = model(&args.model, file, (1.0, std::f64::consts::FRAC_PI_4))?;
    let trials = pick(&args.trials, &file.trials).unwrap_or(10_000);
    if trials < 100 {
        return Err(invalid("trials", format!("at least 100 trials are required (got {trials})")).into());
    }
    let seed = seed(args.seed, file)?;
    let summary = monte_carlo(&McConfig { protocol: kind, channel, model, trials, seed })?;

    let mut writer = csv::Writer::from_writer(std::io::stdout().lock());
    writer.write_record(["row", "count", "events", "rate", "expected", "within_3sigma"])?;
    for stage in &summary.stages {
        writer.write_record([
            stage.step.clone(),
            stage.measured.to_string(),
            stage.misidentified.to_string(),
            format_sig(stage.rate, 12),
            opt_field(stage.expected),
            opt_flag(stage.within_3sigma),
        ])?;
    }
    writer.write_record([
        "success".to_string(),
        summary.trials.to_string(),
        summary.successes.to_string(),
        format_sig(summary.success_rate, 12),
        opt_field(summary.predicted_success),
        opt_flag(summary.success_within_3sigma),
    ])?;
    let formula = match kind {
        ProtocolKind::Riho => summary.analytic.p1suc,
        ProtocolKind::Ripuo => summary.analytic.p2suc,
    };
    writer.write_record([
        "aggregate_formula".to_string(),
        String::new(),
        String::new(),
        String::new(),
        format_sig(formula, 12),
        String::new(),
    ])?;
    if kind == ProtocolKind::Ripuo {
        writer.write_record([
            "m_zero".to_string(),
            summary.trials.to_string(),
            summary.m_zero.to_string(),
            format_sig(summary.m_zero as f64 / summary.trials as f64, 12),
            "0.5".to_string(),
            String::new(),
        ])?;
    }
    writer.flush()?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct ChannelOutput<'a> {
    kind: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase_bit: Option<u8>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    states: Vec<NamedState>,
}

#[derive(Debug, Serialize)]
struct NamedState {
    name: String,
    state: BranchState,
}

fn print_json<T: Serialize>(value: &T) -> Outcome {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(0)
}

pub fn channels(args: &ChannelArgs, file: &FileConfig) -> Outcome {
    let kind = pick(&args.kind, &file.kind).unwrap_or_else(|| "bell".into()).to_ascii_lowercase();
    let parties = pick(&args.parties, &file.parties);
    let single = |name: &str, state: BranchState| vec![NamedState { name: name.into(), state }];
    let (phase_bit, states) = match kind.as_str() {
        "bell" => {
            let variant = channel(&args.channel, file)?;
            (None, single(variant.as_str(), BranchState::channel(variant)))
        }
        "joint" => {
            let c = build_joint_channel(parties.unwrap_or(1))?;
            (Some(c.phase_bit), single("joint", c.state))
        }
        "controlled" => {
            let controllers = pick(&args.controllers, &file.controllers).unwrap_or(1);
            let form = match pick(&args.form, &file.form).as_deref().unwrap_or("classical") {
                "qubits" => ControllerForm::Qubits,
                "classical" => ControllerForm::Classical { r: pick(&args.r, &file.r).unwrap_or(0) & 1 },
                other => {
                    return Err(invalid("form", format!("unknown form {other:?}; expected qubits or classical")).into())
                }
            };
            let c = build_controlled_joint_channel(parties.unwrap_or(1), controllers, form)?;
            (Some(c.phase_bit), single("controlled", c.state))
        }
        "chain" => {
            let text = pick(&args.bits, &file.bits).unwrap_or_else(|| "0".into());
            let bits = parse_bits("bits", &text)?;
            let (first, rest) =
                bits.split_first().ok_or_else(|| invalid("bits", "at least one controller bit is needed"))?;
            let c = controller_chain_apply(&build_chain_channel(parties.unwrap_or(1), *first)?, rest)?;
            (Some(c.phase_bit), single("chain", c.state))
        }
        "cyclic" => {
            let bidirectional = args.bidirectional || file.bidirectional.unwrap_or(false);
            let links = build_cyclic_channel(parties.unwrap_or(3), bidirectional)?;
            let states = links
                .into_iter()
                .map(|l| NamedState { name: format!("{}-{}", l.sender, l.receiver), state: l.state })
                .collect();
            (None, states)
        }
        "resources" => {
            return match pick(&args.task, &file.task) {
                Some(name) => {
                    let task: Task = name.parse()?;
                    print_json(&serde_json::json!({ "task": task.to_string(), "bell_pairs": resource_count(task)? }))
                }
                None => print_json(&resource_table()),
            };
        }
        other => {
            return Err(invalid(
                "kind",
                format!("unknown kind {other:?}; expected bell, joint, controlled, chain, cyclic or resources"),
            )
            .into())
        }
    };
    print_json(&ChannelOutput { kind: &kind, phase_bit, states })
}

pub fn verify(args: &VerifyArgs, file: &FileConfig) -> Outcome {
    let defaults = VerifyOptions::default();
    let options = VerifyOptions {
        cases_per_branch: pick(&args.cases, &file.cases).unwrap_or(defaults.cases_per_branch),
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
        corrupt_table: args.corrupt_table,
    };
    let report = run_verification(&options)?;
    let mut out = std::io::stdout().lock();
    for check in &report.checks {
        let status = if check.passed() { "ok" } else { "FAILED" };
        writeln!(out, "{status:6} {:40} {:6} cases, {} failures", check.name, check.cases, check.failure_count)?;
        for failure in &check.failures {
            writeln!(out, "         {failure}")?;
        }
    }
    let total: usize = report.checks.iter().map(|c| c.cases).sum();
    if report.passed() {
        writeln!(out, "verify: all {total} cases passed")?;
        Ok(0)
    } else {
        writeln!(out, "verify: failures found")?;
        Ok(2)
    }
}
