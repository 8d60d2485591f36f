//! `simulate`: run the named pumping / measurement protocols from the
//! command line and emit machine-readable results.
//!
//! Exit codes: 0 success, 1 simulation/IO failure, 2 usage error.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use qpump::experiments::{
    qnd_to_record, run_anyon_pushing, run_bell_cooling, run_excited_pumping, run_four_body,
    run_ghz_pumping, run_qnd, run_repeated_x_pumping, sample_shots, ExperimentRecord,
    MeasurementBasis, RunPath, Sampling, StepRecord,
};
use qpump::qcore::{basis_state, DensityMatrix, PureState};
use qpump::sequences::{parse_sequence, run_circuit, SequenceVariant};
use qpump::{C64, SimError};

const PROTOCOLS: &[&str] = &[
    "bell-cooling",
    "ghz-pumping",
    "repeated-x-pumping",
    "anyon-pushing",
    "excited-pumping",
    "four-body",
    "qnd",
    "custom",
];

#[derive(Parser, Debug)]
#[command(
    name = "simulate",
    version,
    about = "Simulate dissipative stabilizer pumping protocols",
    after_help = "Protocols: bell-cooling, ghz-pumping, repeated-x-pumping, anyon-pushing,\n\
                  excited-pumping, four-body, qnd, custom (requires --sequence-file).\n\
                  The SIM_SEED environment variable overrides the default seed."
)]
struct Cli {
    /// Protocol to run.
    protocol: String,

    /// Pump probability per step.
    #[arg(long, default_value_t = 0.5)]
    p: f64,

    /// Cooling cycles (bell-cooling).
    #[arg(long, default_value_t = 3)]
    cycles: usize,

    /// Pump repetitions (repeated-x-pumping).
    #[arg(long, default_value_t = 5)]
    steps: usize,

    /// Angle grid START:STOP:POINTS for four-body; values may use pi
    /// (e.g. 0:pi:11).
    #[arg(long, value_name = "A:B:N")]
    beta_grid: Option<String>,

    /// Include the optional (blue-marked) rotations.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    blue: bool,

    /// Sign of the red-marked light shifts; -1 inverts the pump direction.
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    sign: i8,

    /// Red-qubit target override for ghz-pumping (1-4).
    #[arg(long)]
    red_qubit: Option<usize>,

    /// Comma-separated red-qubit schedule for repeated-x-pumping
    /// (default: the published 4,3,2,1,1 pattern, cycled).
    #[arg(long)]
    schedule: Option<String>,

    /// Measurement shots per probed step; 0 emits exact values only.
    #[arg(long, default_value_t = 0)]
    shots: u64,

    /// RNG seed for shot sampling.
    #[arg(long)]
    seed: Option<u64>,

    /// Sampling basis (x or z).
    #[arg(long, default_value = "z")]
    basis: String,

    /// Output format (json or csv).
    #[arg(long, default_value = "json")]
    format: String,

    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Use the closed-form channels instead of the pulse sequences.
    #[arg(long)]
    analytic: bool,

    /// Sweep a parameter, e.g. p=0.1:1:10; one run per value, ordered by
    /// parameter.
    #[arg(long, value_name = "p=A:B:N")]
    sweep: Option<String>,

    /// Sequence file for the custom protocol.
    #[arg(long)]
    sequence_file: Option<PathBuf>,

    /// Probe after every half cycle instead of every full cycle
    /// (bell-cooling).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    probe_half_cycles: bool,

    /// Input state for qnd: a 4-bit string or one of ghz-plus, ghz-minus,
    /// xx-minus.
    #[arg(long, default_value = "1111")]
    input: String,

    /// Register size (ancilla included) for the custom protocol.
    #[arg(long, default_value_t = 5)]
    qubits: usize,
}

#[derive(Debug)]
enum AppError {
    Usage(String),
    Run(String),
}

impl From<SimError> for AppError {
    fn from(e: SimError) -> Self {
        AppError::Run(e.to_string())
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Run(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<(), AppError> {
    if !PROTOCOLS.contains(&cli.protocol.as_str()) {
        return Err(AppError::Usage(format!(
            "unknown protocol {:?}; expected one of {}",
            cli.protocol,
            PROTOCOLS.join(", ")
        )));
    }
    let sweep_values = match &cli.sweep {
        Some(spec) => Some(parse_sweep(spec)?),
        None => None,
    };

    let mut records = Vec::new();
    match &sweep_values {
        None => records.push(run_one(cli, cli.p)?),
        Some(values) => {
            for &p in values {
                records.push(run_one(cli, p)?);
            }
        }
    }
    for r in &records {
        r.validate()?;
    }

    let output = match cli.format.as_str() {
        "json" => emit_json(&records),
        "csv" => emit_csv(&records),
        other => return Err(AppError::Usage(format!("unsupported format {other:?}"))),
    };
    match &cli.out {
        None => {
            std::io::stdout().write_all(output.as_bytes())?;
        }
        Some(path) => {
            std::fs::write(path, output.as_bytes())?;
        }
    }
    Ok(())
}

fn run_one(cli: &Cli, p: f64) -> Result<ExperimentRecord, AppError> {
    let path = if cli.analytic { RunPath::Analytic } else { RunPath::Sequence };
    let sampling = sampling_from(cli)?;
    let variant = SequenceVariant {
        include_optional_blue: cli.blue,
        red_qubit: cli.red_qubit,
        sign: cli.sign,
        p,
    };
    let record = match cli.protocol.as_str() {
        "bell-cooling" => {
            run_bell_cooling(p, cli.cycles, cli.probe_half_cycles, path, sampling)?
        }
        "ghz-pumping" => run_ghz_pumping(&variant, path, sampling)?,
        "repeated-x-pumping" => {
            let schedule = match &cli.schedule {
                Some(s) => parse_schedule(s)?,
                None => [4usize, 3, 2, 1, 1].iter().copied().cycle().take(cli.steps).collect(),
            };
            run_repeated_x_pumping(p, cli.steps, &schedule, path, sampling)?
        }
        "anyon-pushing" => run_anyon_pushing(path, sampling)?,
        "excited-pumping" => run_excited_pumping(path, sampling)?,
        "four-body" => {
            let grid = match &cli.beta_grid {
                Some(spec) => parse_grid(spec)?,
                None => parse_grid("0:pi:11")?,
            };
            run_four_body(&grid, path, sampling)?
        }
        "qnd" => {
            let input = qnd_input(&cli.input)?;
            qnd_to_record(&run_qnd(&input)?)
        }
        "custom" => run_custom(cli, sampling)?,
        _ => unreachable!("protocol validated earlier"),
    };
    Ok(record)
}

fn sampling_from(cli: &Cli) -> Result<Option<Sampling>, AppError> {
    if cli.shots == 0 {
        return Ok(None);
    }
    let basis = match cli.basis.to_ascii_lowercase().as_str() {
        "x" => MeasurementBasis::X,
        "z" => MeasurementBasis::Z,
        other => return Err(AppError::Usage(format!("unknown basis {other:?}"))),
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => match std::env::var("SIM_SEED") {
            Ok(v) => v
                .parse()
                .map_err(|_| AppError::Usage(format!("SIM_SEED {v:?} is not a u64")))?,
            Err(_) => 0,
        },
    };
    Ok(Some(Sampling { shots: cli.shots, basis, seed }))
}

/// Run an arbitrary parsed sequence file on an ancilla-plus-system register
/// and report the system's basis-state populations.
fn run_custom(cli: &Cli, sampling: Option<Sampling>) -> Result<ExperimentRecord, AppError> {
    let path = cli
        .sequence_file
        .as_ref()
        .ok_or_else(|| AppError::Usage("custom protocol requires --sequence-file".into()))?;
    if !(2..=5).contains(&cli.qubits) {
        return Err(AppError::Usage("--qubits must be between 2 and 5".into()));
    }
    let text = std::fs::read_to_string(path)?;
    let circ = parse_sequence(&text, cli.qubits)?;
    let n_sys = cli.qubits - 1;
    let joint = basis_state("1")?
        .density_matrix()
        .tensor(&DensityMatrix::fully_mixed(n_sys)?);
    let out = run_circuit(&circ, &joint)?;
    let keep: Vec<usize> = (1..cli.qubits).collect();
    let sys = out.partial_trace(&keep)?;

    let mut populations = std::collections::BTreeMap::new();
    for i in 0..sys.dim() {
        let label = format!("{i:0width$b}", width = n_sys);
        populations.insert(format!("P{label}"), sys.matrix()[(i, i)].re);
    }
    let counts = match sampling {
        Some(s) => Some(sample_shots(&sys, s.basis, s.shots, s.seed)?),
        None => None,
    };
    let mut record = ExperimentRecord {
        protocol: "custom".into(),
        model: "ideal".into(),
        metadata: std::collections::BTreeMap::new(),
        steps: vec![StepRecord {
            label: "final".into(),
            expectations: std::collections::BTreeMap::new(),
            populations,
            fidelity: None,
            counts,
        }],
    };
    record
        .metadata
        .insert("sequence_file".into(), path.display().to_string());
    record.metadata.insert("qubits".into(), cli.qubits.to_string());
    if let Some(s) = sampling {
        record.metadata.insert("shots".into(), s.shots.to_string());
        record.metadata.insert("seed".into(), s.seed.to_string());
    }
    Ok(record)
}

fn qnd_input(spec: &str) -> Result<DensityMatrix, AppError> {
    let pure = match spec {
        "ghz-plus" => PureState::superpose(
            &basis_state("0000")?,
            &basis_state("1111")?,
            C64::new(1.0, 0.0),
        )?,
        "ghz-minus" => PureState::superpose(
            &basis_state("0000")?,
            &basis_state("1111")?,
            C64::new(-1.0, 0.0),
        )?,
        "xx-minus" => PureState::superpose(
            &basis_state("0011")?,
            &basis_state("1100")?,
            C64::new(-1.0, 0.0),
        )?,
        bits if bits.len() == 4 && bits.bytes().all(|b| b == b'0' || b == b'1') => {
            basis_state(bits)?
        }
        other => {
            return Err(AppError::Usage(format!(
                "unknown qnd input {other:?}; use a 4-bit string, ghz-plus, ghz-minus or xx-minus"
            )))
        }
    };
    Ok(pure.density_matrix())
}

// ---------------------------------------------------------------------------
// Flag parsing helpers
// ---------------------------------------------------------------------------

/// A number that may use pi, e.g. "0.3", "pi", "2pi", "pi/2", "3pi/4".
fn parse_pi_expr(s: &str) -> Result<f64, AppError> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    let bad = || AppError::Usage(format!("cannot parse number {s:?}"));
    let (head, den) = match s.split_once('/') {
        Some((h, d)) => (h, d.trim().parse::<f64>().map_err(|_| bad())?),
        None => (s, 1.0),
    };
    let head = head.trim();
    let factor = match head.strip_suffix("pi") {
        Some("") => 1.0,
        Some("-") => -1.0,
        Some(k) => k.trim().parse::<f64>().map_err(|_| bad())?,
        None => return Err(bad()),
    };
    Ok(factor * std::f64::consts::PI / den)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, AppError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(AppError::Usage(format!("grid {spec:?} is not START:STOP:POINTS")));
    }
    let start = parse_pi_expr(parts[0])?;
    let stop = parse_pi_expr(parts[1])?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| AppError::Usage(format!("grid point count {:?} is not an integer", parts[2])))?;
    if n == 0 {
        return Err(AppError::Usage("grid needs at least one point".into()));
    }
    if n == 1 {
        return Ok(vec![start]);
    }
    let step = (stop - start) / (n as f64 - 1.0);
    Ok((0..n).map(|i| start + step * i as f64).collect())
}

fn parse_sweep(spec: &str) -> Result<Vec<f64>, AppError> {
    match spec.split_once('=') {
        Some(("p", grid)) => parse_grid(grid),
        _ => Err(AppError::Usage(format!(
            "sweep {spec:?} is not of the form p=START:STOP:POINTS"
        ))),
    }
}

fn parse_schedule(spec: &str) -> Result<Vec<usize>, AppError> {
    spec.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| AppError::Usage(format!("schedule entry {tok:?} is not an integer")))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

fn emit_json(records: &[ExperimentRecord]) -> String {
    let mut s = if records.len() == 1 {
        serde_json::to_string_pretty(&records[0]).expect("record serializes")
    } else {
        serde_json::to_string_pretty(records).expect("records serialize")
    };
    s.push('\n');
    s
}

/// Twelve significant digits, plain decimal where reasonable.
fn fmt_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.11e}")
    }
}

/// Header plus one row per step; columns sorted lexicographically; sweep
/// output concatenates runs in parameter order.
fn emit_csv(records: &[ExperimentRecord]) -> String {
    let sweep = records.len() > 1;
    let mut columns: BTreeSet<String> = BTreeSet::new();
    columns.insert("label".into());
    if sweep {
        columns.insert("p".into());
    }
    let mut any_fidelity = false;
    for record in records {
        for step in &record.steps {
            columns.extend(step.expectations.keys().cloned());
            columns.extend(step.populations.keys().cloned());
            any_fidelity |= step.fidelity.is_some();
        }
    }
    if any_fidelity {
        columns.insert("fidelity".into());
    }
    let columns: Vec<String> = columns.into_iter().collect();

    let mut out = columns.join(",");
    out.push('\n');
    for record in records {
        for step in &record.steps {
            let row: Vec<String> = columns
                .iter()
                .map(|col| match col.as_str() {
                    "label" => step.label.clone(),
                    "p" if sweep => record.metadata.get("p").cloned().unwrap_or_default(),
                    "fidelity" => step.fidelity.map(fmt_sig).unwrap_or_default(),
                    key => step
                        .expectations
                        .get(key)
                        .or_else(|| step.populations.get(key))
                        .map(|&v| fmt_sig(v))
                        .unwrap_or_default(),
                })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    out
}
