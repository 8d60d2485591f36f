//! Named end-to-end protocol runners: Bell-state cooling, sequential GHZ
//! pumping and its excited-state and anyon-moving variants, repeated
//! four-body pumping, coherent four-body evolution, and the QND stabilizer
//! measurement with its fidelity metrics.
//!
//! Every runner can execute either the transcribed pulse sequences or the
//! closed-form channels; both paths are first-class so a discrepancy
//! localizes a transcription bug. Records carry a `model: ideal` tag — the
//! experimental noise channel is deliberately absent.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{stabilizer_pump, KrausChannel};
use crate::error::SimError;
use crate::gates::{apply_gate, Axis, GateOp};
use crate::qcore::{
    basis_state, ghz_state, partial_trace_matrix, DensityMatrix, Pauli, PauliString, Projector,
    PureState,
};
use crate::sequences::{
    bell_cooling_circuit, four_body_evolution_circuit, ghz_pump_step, optimized_x_pump_circuit,
    qnd_mapping_circuit, run_circuit, SequenceVariant,
};
use crate::{Mat, C64};

/// Which implementation a runner executes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunPath {
    /// The transcribed pulse sequences (default).
    Sequence,
    /// Closed-form pumping channels.
    Analytic,
}

impl RunPath {
    fn tag(self) -> &'static str {
        match self {
            RunPath::Sequence => "sequence",
            RunPath::Analytic => "analytic",
        }
    }
}

/// Measurement basis for finite-shot sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasurementBasis {
    X,
    Z,
}

/// Finite-shot sampling request attached to a run.
#[derive(Clone, Copy, Debug)]
pub struct Sampling {
    pub shots: u64,
    pub basis: MeasurementBasis,
    pub seed: u64,
}

/// One probed point of a protocol.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepRecord {
    pub label: String,
    pub expectations: BTreeMap<String, f64>,
    pub populations: BTreeMap<String, f64>,
    pub fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counts: Option<BTreeMap<String, u64>>,
}

/// Full output of one protocol run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub protocol: String,
    /// Always `"ideal"`: the experimental noise channel is out of scope and
    /// downstream tooling must not confuse these values with measured ones.
    pub model: String,
    pub metadata: BTreeMap<String, String>,
    pub steps: Vec<StepRecord>,
}

impl ExperimentRecord {
    fn new(protocol: &str) -> Self {
        ExperimentRecord {
            protocol: protocol.into(),
            model: "ideal".into(),
            metadata: BTreeMap::new(),
            steps: Vec::new(),
        }
    }

    fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.into(), value.to_string());
    }

    fn note_sampling(&mut self, sampling: &Option<Sampling>) {
        if let Some(s) = sampling {
            self.meta("shots", s.shots);
            self.meta("seed", s.seed);
            self.meta("basis", format!("{:?}", s.basis));
        }
    }

    /// Range checks on every recorded number.
    pub fn validate(&self) -> Result<(), SimError> {
        let tol = crate::TOL_INVARIANT;
        for step in &self.steps {
            for (k, &v) in &step.expectations {
                if !(-1.0 - tol..=1.0 + tol).contains(&v) {
                    return Err(SimError::InvariantViolation(format!(
                        "expectation {k} = {v} outside [-1, 1]"
                    )));
                }
            }
            for (k, &v) in &step.populations {
                if !(-tol..=1.0 + tol).contains(&v) {
                    return Err(SimError::InvariantViolation(format!(
                        "population {k} = {v} outside [0, 1]"
                    )));
                }
            }
            if let Some(f) = step.fidelity {
                if !(-tol..=1.0 + tol).contains(&f) {
                    return Err(SimError::InvariantViolation(format!(
                        "fidelity {f} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn ancilla_ket1() -> Result<DensityMatrix, SimError> {
    Ok(basis_state("1")?.density_matrix())
}

fn maybe_counts(
    sys: &DensityMatrix,
    sampling: &Option<Sampling>,
    rng: &mut Option<ChaCha8Rng>,
) -> Option<BTreeMap<String, u64>> {
    match (sampling, rng) {
        (Some(s), Some(rng)) => Some(draw_counts(sys, s.basis, s.shots, rng)),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Bell-state cooling
// ---------------------------------------------------------------------------

fn bell_snapshot(
    label: String,
    sys: &DensityMatrix,
    sampling: &Option<Sampling>,
    rng: &mut Option<ChaCha8Rng>,
) -> Result<StepRecord, SimError> {
    let pops = sys.bell_populations()?;
    let mut populations = BTreeMap::new();
    for (name, p) in ["phi_plus", "phi_minus", "psi_plus", "psi_minus"].iter().zip(pops) {
        populations.insert((*name).into(), p);
    }
    let mut expectations = BTreeMap::new();
    for (name, pauli) in [("X1X2", Pauli::X), ("Y1Y2", Pauli::Y), ("Z1Z2", Pauli::Z)] {
        expectations.insert(name.into(), sys.expectation(&PauliString::on(2, &[0, 1], pauli))?);
    }
    let counts = maybe_counts(sys, sampling, rng);
    Ok(StepRecord { label, expectations, populations, fidelity: Some(pops[3]), counts })
}

/// Alternate X1X2- and Y1Y2-pumping from the fully mixed two-qubit state,
/// probing the Bell populations after each half cycle (or full cycle).
pub fn run_bell_cooling(
    p: f64,
    cycles: usize,
    probe_half_cycles: bool,
    path: RunPath,
    sampling: Option<Sampling>,
) -> Result<ExperimentRecord, SimError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::ProbabilityOutOfRange(p));
    }
    if cycles == 0 {
        return Err(SimError::Config("cycles must be at least 1".into()));
    }
    let mut record = ExperimentRecord::new("bell-cooling");
    record.meta("p", p);
    record.meta("cycles", cycles);
    record.meta("path", path.tag());
    record.meta("probe_half_cycles", probe_half_cycles);
    record.note_sampling(&sampling);
    let mut rng = sampling.map(|s| ChaCha8Rng::seed_from_u64(s.seed));

    // The X1X2 pump flips through Y1, the Y1Y2 pump through X1; the singlet
    // is the joint -1 eigenstate both pumps drive into.
    let pump_x = stabilizer_pump(
        &PauliString::on(2, &[0, 1], Pauli::X),
        -1,
        p,
        &PauliString::single(2, 0, Pauli::Y),
    )?;
    let pump_y = stabilizer_pump(
        &PauliString::on(2, &[0, 1], Pauli::Y),
        -1,
        p,
        &PauliString::single(2, 0, Pauli::X),
    )?;

    let mut sys = DensityMatrix::fully_mixed(2)?;
    let mut joint = ancilla_ket1()?.tensor(&sys);
    record.steps.push(bell_snapshot("mixed".into(), &sys, &sampling, &mut rng)?);

    for cycle in 1..=cycles {
        for (half, axis, pump) in [(1usize, Axis::X, &pump_x), (2, Axis::Y, &pump_y)] {
            match path {
                RunPath::Sequence => {
                    joint = run_circuit(&bell_cooling_circuit(axis, p)?, &joint)?;
                    sys = joint.partial_trace(&[1, 2])?;
                }
                RunPath::Analytic => sys = pump.apply(&sys)?,
            }
            if probe_half_cycles || half == 2 {
                let label = if probe_half_cycles {
                    format!("cycle{cycle}.{half}")
                } else {
                    format!("cycle{cycle}")
                };
                record.steps.push(bell_snapshot(label, &sys, &sampling, &mut rng)?);
            }
        }
    }
    record.validate()?;
    Ok(record)
}

// ---------------------------------------------------------------------------
// Four-step GHZ-type pumping (shared by ghz / anyon / excited protocols)
// ---------------------------------------------------------------------------

const FOUR_QUBIT_OBSERVABLES: [(&str, &[usize], Pauli); 5] = [
    ("Z1Z2", &[0, 1], Pauli::Z),
    ("Z2Z3", &[1, 2], Pauli::Z),
    ("Z3Z4", &[2, 3], Pauli::Z),
    ("Z1Z4", &[0, 3], Pauli::Z),
    ("X1X2X3X4", &[0, 1, 2, 3], Pauli::X),
];

fn four_qubit_snapshot(
    label: String,
    sys: &DensityMatrix,
    target: &PureState,
    sampling: &Option<Sampling>,
    rng: &mut Option<ChaCha8Rng>,
) -> Result<StepRecord, SimError> {
    let mut expectations = BTreeMap::new();
    for (name, idx, pauli) in FOUR_QUBIT_OBSERVABLES {
        expectations.insert(name.into(), sys.expectation(&PauliString::on(4, idx, pauli))?);
    }
    let mut populations = BTreeMap::new();
    populations.insert("P0000".into(), sys.fidelity(&basis_state("0000")?)?);
    populations.insert("P1111".into(), sys.fidelity(&basis_state("1111")?)?);
    let fidelity = Some(sys.fidelity(target)?);
    let counts = maybe_counts(sys, sampling, rng);
    Ok(StepRecord { label, expectations, populations, fidelity, counts })
}

/// Closed-form channel for one pumping step. Step 1 always pumps Z1Z2 into
/// +1 (its sequence has no sign-carrying light shift); steps 2-4 follow the
/// variant's sign, and the flip retargets with the variant's red qubit.
fn analytic_pump_step(step: usize, variant: &SequenceVariant) -> Result<KrausChannel, SimError> {
    let red = |default: usize| variant.red_qubit.unwrap_or(default) - 1;
    let (stab, sign, flip) = match step {
        1 => (
            PauliString::on(4, &[0, 1], Pauli::Z),
            1,
            PauliString::single(4, 1, Pauli::X),
        ),
        2 => (
            PauliString::on(4, &[1, 2], Pauli::Z),
            variant.sign,
            PauliString::single(4, red(3), Pauli::X),
        ),
        3 => (
            PauliString::on(4, &[2, 3], Pauli::Z),
            variant.sign,
            PauliString::single(4, red(4), Pauli::X),
        ),
        4 => (
            PauliString::on(4, &[0, 1, 2, 3], Pauli::X),
            variant.sign,
            PauliString::single(4, red(4), Pauli::Z),
        ),
        _ => return Err(SimError::Config(format!("pump step {step} out of range 1..=4"))),
    };
    stabilizer_pump(&stab, sign, 1.0, &flip)
}

fn four_step_run(
    protocol: &str,
    initial_sys: DensityMatrix,
    initial_label: &str,
    variant: &SequenceVariant,
    path: RunPath,
    target: &PureState,
    sampling: Option<Sampling>,
) -> Result<ExperimentRecord, SimError> {
    let mut record = ExperimentRecord::new(protocol);
    record.meta("path", path.tag());
    record.meta("blue", variant.include_optional_blue);
    record.meta("sign", variant.sign);
    if let Some(rq) = variant.red_qubit {
        record.meta("red_qubit", rq);
    }
    record.note_sampling(&sampling);
    let mut rng = sampling.map(|s| ChaCha8Rng::seed_from_u64(s.seed));

    let mut sys = initial_sys;
    let mut joint = ancilla_ket1()?.tensor(&sys);
    record.steps.push(four_qubit_snapshot(
        initial_label.into(),
        &sys,
        target,
        &sampling,
        &mut rng,
    )?);

    for step in 1..=4 {
        match path {
            RunPath::Sequence => {
                joint = run_circuit(&ghz_pump_step(step, variant)?, &joint)?;
                sys = joint.partial_trace(&[1, 2, 3, 4])?;
            }
            RunPath::Analytic => sys = analytic_pump_step(step, variant)?.apply(&sys)?,
        }
        record.steps.push(four_qubit_snapshot(
            format!("step{step}"),
            &sys,
            target,
            &sampling,
            &mut rng,
        )?);
    }
    record.validate()?;
    Ok(record)
}

/// Sequentially pump Z1Z2, Z2Z3, Z3Z4 and X1X2X3X4 from the fully mixed
/// four-qubit state; the fidelity column tracks the GHZ state.
pub fn run_ghz_pumping(
    variant: &SequenceVariant,
    path: RunPath,
    sampling: Option<Sampling>,
) -> Result<ExperimentRecord, SimError> {
    four_step_run(
        "ghz-pumping",
        DensityMatrix::fully_mixed(4)?,
        "mixed",
        variant,
        path,
        &ghz_state(4),
        sampling,
    )
}

/// Run the four deterministic pumping steps on the initial state |0111>,
/// whose -1 stabilizer eigenvalues get pushed across the register and
/// finally absorbed.
pub fn run_anyon_pushing(
    path: RunPath,
    sampling: Option<Sampling>,
) -> Result<ExperimentRecord, SimError> {
    four_step_run(
        "anyon-pushing",
        basis_state("0111")?.density_matrix(),
        "initial",
        &SequenceVariant::default(),
        path,
        &ghz_state(4),
        sampling,
    )
}

/// Pump into +1 of Z1Z2 and -1 of Z2Z3, Z3Z4 and X1X2X3X4; the unique dark
/// state is (|0010> - |1101>)/sqrt(2).
pub fn run_excited_pumping(
    path: RunPath,
    sampling: Option<Sampling>,
) -> Result<ExperimentRecord, SimError> {
    let target = excited_target()?;
    let variant = SequenceVariant { sign: -1, ..Default::default() };
    four_step_run(
        "excited-pumping",
        DensityMatrix::fully_mixed(4)?,
        "mixed",
        &variant,
        path,
        &target,
        sampling,
    )
}

/// The simultaneous eigenstate with Z1Z2 = +1 and Z2Z3 = Z3Z4 = X1X2X3X4 = -1.
pub fn excited_target() -> Result<PureState, SimError> {
    PureState::superpose(
        &basis_state("0010")?,
        &basis_state("1101")?,
        C64::new(-1.0, 0.0),
    )
}

// ---------------------------------------------------------------------------
// Repeated probabilistic four-body pumping
// ---------------------------------------------------------------------------

/// Repetitively pump |1111> into the -1 eigenspace of X1X2X3X4 with
/// probability `p`, retargeting the light shift per `schedule` (one-based
/// qubit labels, one entry per step).
pub fn run_repeated_x_pumping(
    p: f64,
    steps: usize,
    schedule: &[usize],
    path: RunPath,
    sampling: Option<Sampling>,
) -> Result<ExperimentRecord, SimError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::ProbabilityOutOfRange(p));
    }
    if steps == 0 {
        return Err(SimError::Config("steps must be at least 1".into()));
    }
    if schedule.len() != steps {
        return Err(SimError::Config(format!(
            "schedule length {} does not match steps {steps}",
            schedule.len()
        )));
    }
    let mut record = ExperimentRecord::new("repeated-x-pumping");
    record.meta("p", p);
    record.meta("steps", steps);
    record.meta("path", path.tag());
    record.meta(
        "schedule",
        schedule.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
    );
    record.note_sampling(&sampling);
    let mut rng = sampling.map(|s| ChaCha8Rng::seed_from_u64(s.seed));

    // Dark state of the -1 pump reachable from |1111>.
    let target = PureState::superpose(
        &basis_state("0000")?,
        &basis_state("1111")?,
        C64::new(-1.0, 0.0),
    )?;
    let stab = PauliString::on(4, &[0, 1, 2, 3], Pauli::X);

    let mut sys = basis_state("1111")?.density_matrix();
    let mut joint = ancilla_ket1()?.tensor(&sys);
    record.steps.push(four_qubit_snapshot("initial".into(), &sys, &target, &sampling, &mut rng)?);

    for (k, &rq) in schedule.iter().enumerate() {
        if !(1..=4).contains(&rq) {
            return Err(SimError::Config(format!("schedule entry {rq} outside 1..=4")));
        }
        match path {
            RunPath::Sequence => {
                let variant = SequenceVariant { red_qubit: Some(rq), p, ..Default::default() };
                joint = run_circuit(&optimized_x_pump_circuit(&variant)?, &joint)?;
                sys = joint.partial_trace(&[1, 2, 3, 4])?;
            }
            RunPath::Analytic => {
                let flip = PauliString::single(4, rq - 1, Pauli::Z);
                sys = stabilizer_pump(&stab, -1, p, &flip)?.apply(&sys)?;
            }
        }
        record.steps.push(four_qubit_snapshot(
            format!("step{}", k + 1),
            &sys,
            &target,
            &sampling,
            &mut rng,
        )?);
    }
    record.validate()?;
    Ok(record)
}

// ---------------------------------------------------------------------------
// Coherent four-body evolution
// ---------------------------------------------------------------------------

/// Sweep the ancilla-mediated exp(-i(beta/2) X1X2X3X4) evolution over a
/// grid of angles, recording |0000> and |1111> populations alongside the
/// separable comparison where each qubit is driven by exp(-i(beta/2) X_i).
pub fn run_four_body(
    beta_grid: &[f64],
    path: RunPath,
    sampling: Option<Sampling>,
) -> Result<ExperimentRecord, SimError> {
    if beta_grid.is_empty() {
        return Err(SimError::Config("beta grid must be nonempty".into()));
    }
    let mut record = ExperimentRecord::new("four-body");
    record.meta("path", path.tag());
    record.meta("points", beta_grid.len());
    record.note_sampling(&sampling);
    let mut rng = sampling.map(|s| ChaCha8Rng::seed_from_u64(s.seed));

    let p0000 = basis_state("0000")?;
    let p1111 = basis_state("1111")?;
    let initial = p1111.density_matrix();

    for &beta in beta_grid {
        let (pop0, pop1) = match path {
            RunPath::Sequence => {
                let joint = ancilla_ket1()?.tensor(&initial);
                let out = run_circuit(&four_body_evolution_circuit(beta)?, &joint)?;
                let sys = out.partial_trace(&[1, 2, 3, 4])?;
                (sys.fidelity(&p0000)?, sys.fidelity(&p1111)?)
            }
            RunPath::Analytic => {
                let half = beta / 2.0;
                (half.sin().powi(2), half.cos().powi(2))
            }
        };
        // Separable comparison: four independent single-qubit drives.
        let one_body = apply_gate(
            &GateOp::CollectiveRot { axis: Axis::X, theta: beta, participants: None },
            &initial,
        )?;
        let mut populations = BTreeMap::new();
        populations.insert("P0000".into(), pop0);
        populations.insert("P1111".into(), pop1);
        populations.insert("P0000_one_body".into(), one_body.fidelity(&p0000)?);
        populations.insert("P1111_one_body".into(), one_body.fidelity(&p1111)?);
        let counts = match (&sampling, &mut rng) {
            (Some(s), Some(rng)) if path == RunPath::Sequence => {
                let joint = ancilla_ket1()?.tensor(&initial);
                let out = run_circuit(&four_body_evolution_circuit(beta)?, &joint)?;
                let sys = out.partial_trace(&[1, 2, 3, 4])?;
                Some(draw_counts(&sys, s.basis, s.shots, rng))
            }
            _ => None,
        };
        record.steps.push(StepRecord {
            label: format!("beta={beta}"),
            expectations: BTreeMap::new(),
            populations,
            fidelity: None,
            counts,
        });
    }
    record.validate()?;
    Ok(record)
}

// ---------------------------------------------------------------------------
// QND stabilizer measurement
// ---------------------------------------------------------------------------

/// Distributions, conditional post-measurement states and fidelity metrics
/// of one QND measurement of X1X2X3X4.
#[derive(Clone, Debug)]
pub struct QndReport {
    /// Ancilla outcome distribution `[p(|0>), p(|1>)]`.
    pub p_m: [f64; 2],
    /// Eigenspace distribution `[p+, p-]` of the input state.
    pub p_in: [f64; 2],
    /// Eigenspace distribution `[p+, p-]` of the unconditional output state.
    pub p_out: [f64; 2],
    /// Probability of finding the system in the +1 eigenspace given the
    /// ancilla read |0>; absent when that outcome never occurs.
    pub conditional_plus: Option<f64>,
    /// Probability of the -1 eigenspace given the ancilla read |1>.
    pub conditional_minus: Option<f64>,
    /// Measurement fidelity: ancilla outcomes vs. direct measurement.
    pub f_m: f64,
    /// QND fidelity: input vs. output eigenspace distributions.
    pub f_qnd: f64,
    /// State-preparation fidelity: outcome/eigenspace correlations.
    pub f_qsp: f64,
    /// Normalized system state conditioned on ancilla outcome |0>.
    pub post_plus: Option<DensityMatrix>,
    /// Normalized system state conditioned on ancilla outcome |1>.
    pub post_minus: Option<DensityMatrix>,
    /// Branch normalizations (outcome probabilities) `N+`, `N-`.
    pub n_plus: f64,
    pub n_minus: f64,
}

const BRANCH_FLOOR: f64 = 1e-12;

/// Map the X1X2X3X4 eigenspace information onto the ancilla, read the
/// ancilla out, and score the three fidelity metrics.
pub fn run_qnd(input: &DensityMatrix) -> Result<QndReport, SimError> {
    if input.n_qubits() != 4 {
        return Err(SimError::DimensionMismatch { expected: 16, got: input.dim() });
    }
    let stab = PauliString::on(4, &[0, 1, 2, 3], Pauli::X);
    let proj_plus = Projector::new(stab.clone(), 1).matrix();
    let proj_minus = Projector::new(stab, -1).matrix();

    let p_in_plus = (&proj_plus * input.matrix()).trace().re;
    let p_in = [p_in_plus, 1.0 - p_in_plus];

    let joint = ancilla_ket1()?.tensor(input);
    let out = run_circuit(&qnd_mapping_circuit(), &joint)?;

    // Ancilla projectors on the 5-qubit register (qubit 0 is the most
    // significant factor).
    let branch = |anc: usize| -> Result<(f64, Option<DensityMatrix>), SimError> {
        let mut pa = Mat::zeros(2, 2);
        pa[(anc, anc)] = C64::new(1.0, 0.0);
        let proj = pa.kronecker(&Mat::identity(16, 16));
        let m = &proj * out.matrix() * &proj;
        let p = m.trace().re;
        if p < BRANCH_FLOOR {
            return Ok((p.max(0.0), None));
        }
        let sys = partial_trace_matrix(&(m / C64::new(p, 0.0)), 5, &[1, 2, 3, 4])?;
        Ok((p, Some(DensityMatrix::new(sys)?)))
    };
    let (n_plus, post_plus) = branch(0)?;
    let (n_minus, post_minus) = branch(1)?;
    let p_m = [n_plus, n_minus];

    let out_sys = out.partial_trace(&[1, 2, 3, 4])?;
    let p_out_plus = (&proj_plus * out_sys.matrix()).trace().re;
    let p_out = [p_out_plus, 1.0 - p_out_plus];

    let conditional_plus = post_plus
        .as_ref()
        .map(|rho| (&proj_plus * rho.matrix()).trace().re);
    let conditional_minus = post_minus
        .as_ref()
        .map(|rho| (&proj_minus * rho.matrix()).trace().re);

    let root = |a: f64, b: f64| (a.max(0.0) * b.max(0.0)).sqrt();
    let f_m = (root(p_in[0], p_m[0]) + root(p_in[1], p_m[1])).powi(2);
    let f_qnd = (root(p_in[0], p_out[0]) + root(p_in[1], p_out[1])).powi(2);
    let f_qsp = p_m[0] * conditional_plus.unwrap_or(0.0) + p_m[1] * conditional_minus.unwrap_or(0.0);

    Ok(QndReport {
        p_m,
        p_in,
        p_out,
        conditional_plus,
        conditional_minus,
        f_m,
        f_qnd,
        f_qsp,
        post_plus,
        post_minus,
        n_plus,
        n_minus,
    })
}

/// Flatten a [`QndReport`] into the common record shape for emission.
pub fn qnd_to_record(report: &QndReport) -> ExperimentRecord {
    let mut record = ExperimentRecord::new("qnd");
    let pops = |pairs: &[(&str, f64)]| -> BTreeMap<String, f64> {
        pairs.iter().map(|&(k, v)| (k.into(), v)).collect()
    };
    record.steps.push(StepRecord {
        label: "input".into(),
        expectations: pops(&[("X1X2X3X4", report.p_in[0] - report.p_in[1])]),
        populations: pops(&[("p_plus", report.p_in[0]), ("p_minus", report.p_in[1])]),
        fidelity: None,
        counts: None,
    });
    record.steps.push(StepRecord {
        label: "ancilla".into(),
        expectations: BTreeMap::new(),
        populations: pops(&[("p0", report.p_m[0]), ("p1", report.p_m[1])]),
        fidelity: None,
        counts: None,
    });
    let mut out = pops(&[("p_plus", report.p_out[0]), ("p_minus", report.p_out[1])]);
    if let Some(c) = report.conditional_plus {
        out.insert("cond_plus_given_0".into(), c);
    }
    if let Some(c) = report.conditional_minus {
        out.insert("cond_minus_given_1".into(), c);
    }
    record.steps.push(StepRecord {
        label: "output".into(),
        expectations: pops(&[("X1X2X3X4", report.p_out[0] - report.p_out[1])]),
        populations: out,
        fidelity: None,
        counts: None,
    });
    record.steps.push(StepRecord {
        label: "fidelities".into(),
        expectations: BTreeMap::new(),
        populations: pops(&[
            ("F_M", report.f_m),
            ("F_QND", report.f_qnd),
            ("F_QSP", report.f_qsp),
        ]),
        fidelity: None,
        counts: None,
    });
    record
}

// ---------------------------------------------------------------------------
// Finite-shot sampling
// ---------------------------------------------------------------------------

fn outcome_probabilities(rho: &DensityMatrix, basis: MeasurementBasis) -> Vec<f64> {
    let n = rho.n_qubits();
    let m = match basis {
        MeasurementBasis::Z => rho.matrix().clone(),
        MeasurementBasis::X => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let h = Mat::from_row_slice(
                2,
                2,
                &[
                    C64::new(s, 0.0),
                    C64::new(s, 0.0),
                    C64::new(s, 0.0),
                    C64::new(-s, 0.0),
                ],
            );
            let mut hn = Mat::identity(1, 1);
            for _ in 0..n {
                hn = hn.kronecker(&h);
            }
            &hn * rho.matrix() * hn.adjoint()
        }
    };
    (0..rho.dim()).map(|i| m[(i, i)].re.max(0.0)).collect()
}

fn draw_counts(
    rho: &DensityMatrix,
    basis: MeasurementBasis,
    shots: u64,
    rng: &mut ChaCha8Rng,
) -> BTreeMap<String, u64> {
    let probs = outcome_probabilities(rho, basis);
    let total: f64 = probs.iter().sum();
    let n = rho.n_qubits();
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut outcome = probs.len() - 1;
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                outcome = i;
                break;
            }
        }
        *counts.entry(format!("{outcome:0n$b}")).or_insert(0) += 1;
    }
    counts
}

/// Multinomial sampling of computational-basis (or X-basis) outcomes;
/// deterministic for a fixed seed. Keys are bitstrings; outcomes that were
/// never drawn are absent.
pub fn sample_shots(
    rho: &DensityMatrix,
    basis: MeasurementBasis,
    shots: u64,
    seed: u64,
) -> Result<BTreeMap<String, u64>, SimError> {
    if shots == 0 {
        return Err(SimError::Config("shots must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(draw_counts(rho, basis, shots, &mut rng))
}
