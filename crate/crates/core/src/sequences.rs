//! Circuit intermediate representation, the transcribed pulse-sequence
//! library, and the sequence-notation parser.
//!
//! The experimental pulse listings are frozen verbatim in `data/*.txt` and
//! parsed at run time, so the source of truth stays diffable text rather
//! than hand-coded gate lists. A listing is an operator product: the
//! last-listed token acts first. That convention is pinned by the
//! channel-equivalence tests.

use std::f64::consts::PI;

use crate::error::SimError;
use crate::gates::{apply_gate, Axis, GateOp};
use crate::qcore::{DensityMatrix, PauliString};

const STEP1: &str = include_str!("../data/step1.txt");
const STEP2: &str = include_str!("../data/step2.txt");
const STEP3: &str = include_str!("../data/step3.txt");
const STEP4: &str = include_str!("../data/step4.txt");
const XPUMP: &str = include_str!("../data/xpump.txt");
const QND_MAP: &str = include_str!("../data/qnd_map.txt");

/// An ordered pulse list over `n_qubits` (ancilla is qubit 0).
#[derive(Clone, Debug)]
pub struct Circuit {
    n_qubits: usize,
    elements: Vec<GateOp>,
}

/// Counts of the three coherent gate classes in a circuit (dissipative
/// elements excluded).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GateCounts {
    pub entangling: usize,
    pub collective: usize,
    pub single_qubit: usize,
}

impl std::ops::Add for GateCounts {
    type Output = GateCounts;
    fn add(self, rhs: GateCounts) -> GateCounts {
        GateCounts {
            entangling: self.entangling + rhs.entangling,
            collective: self.collective + rhs.collective,
            single_qubit: self.single_qubit + rhs.single_qubit,
        }
    }
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self, SimError> {
        if n_qubits == 0 {
            return Err(SimError::InvalidGate("circuit needs at least one qubit".into()));
        }
        Ok(Self { n_qubits, elements: Vec::new() })
    }

    pub fn push(&mut self, gate: GateOp) -> Result<(), SimError> {
        let n = self.n_qubits;
        let check = |i: usize| {
            if i >= n {
                Err(SimError::IndexOutOfRange { index: i, n_qubits: n })
            } else {
                Ok(())
            }
        };
        match &gate {
            GateOp::CollectiveRot { participants, .. } | GateOp::Ms { participants, .. } => {
                if let Some(p) = participants {
                    for &i in p {
                        check(i)?;
                    }
                }
            }
            GateOp::SingleZ { target, .. } => check(*target)?,
            GateOp::SystemMix { targets } => {
                for &i in targets {
                    check(i)?;
                }
            }
            GateOp::AncillaReset => {
                if n < 2 {
                    return Err(SimError::InvalidGate("reset needs an ancilla plus a system".into()));
                }
            }
            GateOp::StabilizerMap { stab, .. } => {
                if stab.n_qubits() + 1 != n {
                    return Err(SimError::DimensionMismatch {
                        expected: 1 << n,
                        got: 1 << (stab.n_qubits() + 1),
                    });
                }
            }
            GateOp::ControlledFlip { flip, pump_prob } => {
                if flip.n_qubits() + 1 != n {
                    return Err(SimError::DimensionMismatch {
                        expected: 1 << n,
                        got: 1 << (flip.n_qubits() + 1),
                    });
                }
                if !(0.0..=1.0).contains(pump_prob) {
                    return Err(SimError::ProbabilityOutOfRange(*pump_prob));
                }
            }
        }
        self.elements.push(gate);
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn elements(&self) -> &[GateOp] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Tally entangling (MS), collective-rotation, and single-qubit light
    /// shift operations; reset and mixing elements are not counted.
    pub fn gate_counts(&self) -> GateCounts {
        let mut counts = GateCounts::default();
        for g in &self.elements {
            match g {
                GateOp::Ms { .. } => counts.entangling += 1,
                GateOp::CollectiveRot { .. } => counts.collective += 1,
                GateOp::SingleZ { .. } => counts.single_qubit += 1,
                _ => {}
            }
        }
        counts
    }
}

/// Apply every element of `circ` in order.
pub fn run_circuit(circ: &Circuit, rho0: &DensityMatrix) -> Result<DensityMatrix, SimError> {
    if rho0.n_qubits() != circ.n_qubits {
        return Err(SimError::DimensionMismatch {
            expected: 1 << circ.n_qubits,
            got: rho0.dim(),
        });
    }
    let mut rho = rho0.clone();
    for gate in &circ.elements {
        rho = apply_gate(gate, &rho)?;
    }
    Ok(rho)
}

/// Binding parameters for a parsed sequence template: whether the optional
/// (blue-marked) rotations are included, an override target for the
/// red-marked light shifts, their sign (-1 inverts the pump direction), and
/// the probability scale bound to `*p` angles.
#[derive(Clone, Copy, Debug)]
pub struct SequenceVariant {
    pub include_optional_blue: bool,
    pub red_qubit: Option<usize>,
    pub sign: i8,
    pub p: f64,
}

impl Default for SequenceVariant {
    fn default() -> Self {
        Self { include_optional_blue: true, red_qubit: None, sign: 1, p: 1.0 }
    }
}

impl SequenceVariant {
    pub fn validate(&self, n_qubits: usize) -> Result<(), SimError> {
        if self.sign != 1 && self.sign != -1 {
            return Err(SimError::InvalidGate("variant sign must be +1 or -1".into()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(SimError::ProbabilityOutOfRange(self.p));
        }
        if let Some(q) = self.red_qubit {
            if q == 0 || q >= n_qubits {
                return Err(SimError::IndexOutOfRange { index: q, n_qubits });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Generator {
    CollectiveX,
    CollectiveY,
    MsX,
    MsY,
    Z(usize),
}

/// One parsed token: a generator, an angle `num/den * pi`, an optional `*p`
/// scale, and the blue/red markers.
#[derive(Clone, Copy, Debug)]
struct SeqToken {
    gen: Generator,
    num: i64,
    den: i64,
    scale_p: bool,
    blue: bool,
    red: bool,
}

/// A parsed sequence with `p` (and the red/blue markers) still symbolic.
#[derive(Clone, Debug)]
pub struct SequenceTemplate {
    tokens: Vec<SeqToken>,
}

impl SequenceTemplate {
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let normalized = normalize(text);
        let mut tokens = Vec::new();
        for line in normalized.lines() {
            let line = line.split('#').next().unwrap_or("");
            for raw in line.split([' ', '\t', ',']) {
                let raw = raw.trim();
                if raw.is_empty() {
                    continue;
                }
                tokens.push(parse_token(raw)?);
            }
        }
        if tokens.is_empty() {
            return Err(SimError::Parse("sequence contains no tokens".into()));
        }
        Ok(Self { tokens })
    }

    /// Smallest register (including the ancilla) the sequence fits on.
    pub fn min_qubits(&self) -> usize {
        let max_z = self
            .tokens
            .iter()
            .filter_map(|t| match t.gen {
                Generator::Z(i) => Some(i),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        (max_z + 1).max(2)
    }

    /// Resolve markers and the `*p` scale into a concrete circuit.
    ///
    /// The listings are operator products: the last-listed operation acts
    /// first. The returned circuit is in application order, so its elements
    /// are the tokens reversed. (The alternative reading — apply in listing
    /// order — is ruled out by the channel-equivalence tests.)
    pub fn bind(&self, n_qubits: usize, variant: &SequenceVariant) -> Result<Circuit, SimError> {
        variant.validate(n_qubits)?;
        let mut circ = Circuit::new(n_qubits)?;
        for t in self.tokens.iter().rev() {
            if t.blue && !variant.include_optional_blue {
                continue;
            }
            let mut theta = PI * t.num as f64 / t.den as f64;
            if t.scale_p {
                theta *= variant.p;
            }
            if t.red && variant.sign < 0 {
                theta = -theta;
            }
            let gate = match t.gen {
                Generator::CollectiveX => {
                    GateOp::CollectiveRot { axis: Axis::X, theta, participants: None }
                }
                Generator::CollectiveY => {
                    GateOp::CollectiveRot { axis: Axis::Y, theta, participants: None }
                }
                Generator::MsX => GateOp::Ms { axis: Axis::X, theta, participants: None },
                Generator::MsY => GateOp::Ms { axis: Axis::Y, theta, participants: None },
                Generator::Z(printed) => {
                    let target = if t.red {
                        variant.red_qubit.unwrap_or(printed)
                    } else {
                        printed
                    };
                    GateOp::SingleZ { target, theta }
                }
            };
            circ.push(gate)?;
        }
        Ok(circ)
    }
}

/// Parse a fully concrete sequence (default variant, `p = 1`).
pub fn parse_sequence(text: &str, n_qubits: usize) -> Result<Circuit, SimError> {
    SequenceTemplate::parse(text)?.bind(n_qubits, &SequenceVariant::default())
}

fn normalize(text: &str) -> String {
    let mut s = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            'π' => s.push_str("pi"),
            '−' | '–' => s.push('-'),
            '×' | '·' => s.push('*'),
            '²' => s.push_str("^2"),
            '₀'..='₉' => {
                s.push('_');
                s.push(char::from(b'0' + (ch as u32 - '₀' as u32) as u8));
            }
            _ => s.push(ch),
        }
    }
    s
}

fn parse_token(raw: &str) -> Result<SeqToken, SimError> {
    let err = |msg: String| SimError::Parse(format!("{msg} in token {raw:?}"));
    let mut rest = raw;
    let mut blue = false;
    let mut red = false;
    loop {
        if let Some(r) = rest.strip_prefix("[blue]") {
            blue = true;
            rest = r;
        } else if let Some(r) = rest.strip_prefix("[red") {
            let close = r.find(']').ok_or_else(|| err("unterminated [red marker".into()))?;
            let inner = &r[..close];
            if let Some(idx) = inner.strip_prefix(':') {
                idx.parse::<usize>().map_err(|_| err("bad red index".into()))?;
            } else if !inner.is_empty() {
                return Err(err("bad red marker".into()));
            }
            red = true;
            rest = &r[close + 1..];
        } else {
            break;
        }
    }
    let body = rest
        .strip_prefix("U_")
        .ok_or_else(|| err("expected U_<generator>(<angle>)".into()))?;
    let open = body.find('(').ok_or_else(|| err("missing angle".into()))?;
    let close = body.rfind(')').ok_or_else(|| err("missing closing parenthesis".into()))?;
    if close != body.len() - 1 || close <= open {
        return Err(err("malformed angle".into()));
    }
    let gen_str: String = body[..open].chars().filter(|&c| c != '{' && c != '}').collect();
    let gen = match gen_str.as_str() {
        "X" => Generator::CollectiveX,
        "Y" => Generator::CollectiveY,
        "X^2" => Generator::MsX,
        "Y^2" => Generator::MsY,
        z if z.starts_with('Z') => {
            let idx = z[1..].trim_start_matches('_');
            Generator::Z(idx.parse().map_err(|_| err(format!("bad qubit index {idx:?}")))?)
        }
        other => return Err(err(format!("unknown generator {other:?}"))),
    };
    let (num, den, scale_p) = parse_angle(&body[open + 1..close])
        .ok_or_else(|| err(format!("bad angle {:?}", &body[open + 1..close])))?;
    Ok(SeqToken { gen, num, den, scale_p, blue, red })
}

/// Angle grammar: `0` or `[-][k]pi[/d]`, optionally followed by `*p`.
fn parse_angle(s: &str) -> Option<(i64, i64, bool)> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let (s, scale_p) = match s.strip_suffix("*p") {
        Some(rest) => (rest, true),
        None => (s.as_str(), false),
    };
    if s == "0" {
        return Some((0, 1, scale_p));
    }
    let (s, sign) = match s.strip_prefix('-') {
        Some(rest) => (rest, -1i64),
        None => (s, 1),
    };
    let pi_at = s.find("pi")?;
    let coef = if pi_at == 0 { 1 } else { s[..pi_at].parse::<i64>().ok()? };
    let after = &s[pi_at + 2..];
    let den = if after.is_empty() {
        1
    } else {
        let d = after.strip_prefix('/')?.parse::<i64>().ok()?;
        if d <= 0 {
            return None;
        }
        d
    };
    Some((sign * coef, den, scale_p))
}

fn template(text: &str) -> SequenceTemplate {
    SequenceTemplate::parse(text).expect("built-in sequence must parse")
}

/// The transcribed pulse sequence for one of the four pumping steps
/// (1: Z1Z2, 2: Z2Z3, 3: Z3Z4, 4: X1X2X3X4; all into +1 for sign = +1),
/// bound to `variant` and terminated by the ancilla reset.
pub fn ghz_pump_step(step: usize, variant: &SequenceVariant) -> Result<Circuit, SimError> {
    let text = match step {
        1 => STEP1,
        2 => STEP2,
        3 => STEP3,
        4 => STEP4,
        _ => return Err(SimError::InvalidGate(format!("pump step {step} not in 1..=4"))),
    };
    let mut circ = template(text).bind(5, variant)?;
    circ.push(GateOp::AncillaReset)?;
    Ok(circ)
}

/// The optimized repeated-pump sequence (into the -1 eigenspace of
/// X1X2X3X4), with the red light shifts retargeted per `variant.red_qubit`
/// and the `*p` angles bound to `variant.p`; ends with the ancilla reset.
pub fn optimized_x_pump_circuit(variant: &SequenceVariant) -> Result<Circuit, SimError> {
    let mut circ = template(XPUMP).bind(5, variant)?;
    circ.push(GateOp::AncillaReset)?;
    Ok(circ)
}

/// Coherent mapping of the X1X2X3X4 eigenspace information onto the
/// ancilla (no reset; the ancilla is measured afterwards).
pub fn qnd_mapping_circuit() -> Circuit {
    template(QND_MAP)
        .bind(5, &SequenceVariant::default())
        .expect("built-in sequence must bind")
}

/// Pumping circuit for one Bell cooling half-cycle on ancilla + 2 system
/// qubits: mapping MS gate, controlled flip `C(p)`, unmapping MS gate,
/// ancilla reset. `Axis::X` pumps into the -1 eigenspace of X1X2,
/// `Axis::Y` into the -1 eigenspace of Y1Y2.
pub fn bell_cooling_circuit(axis: Axis, p: f64) -> Result<Circuit, SimError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::ProbabilityOutOfRange(p));
    }
    let alpha = p.sqrt().asin();
    let mut circ = Circuit::new(3)?;
    let ms = |theta| GateOp::Ms { axis, theta, participants: None };
    // The controlled flip C(p) in application order (the inner rotations
    // turn the two-ion MS gate into a controlled phase flip on qubit 1).
    let (inner, inner_sign) = match axis {
        Axis::X => (Axis::Y, 1.0),
        // phase-shifted variant: X and Y exchange under the quarter-wave
        // reframing, Y picks up a sign
        Axis::Y => (Axis::X, -1.0),
    };
    circ.push(ms(PI / 2.0))?;
    circ.push(GateOp::CollectiveRot { axis: inner, theta: -inner_sign * PI / 2.0, participants: None })?;
    circ.push(GateOp::Ms { axis, theta: -alpha, participants: Some(vec![0, 1]) })?;
    circ.push(GateOp::CollectiveRot { axis: inner, theta: inner_sign * PI / 2.0, participants: None })?;
    circ.push(GateOp::SingleZ { target: 1, theta: -alpha })?;
    circ.push(ms(PI / 2.0))?;
    circ.push(GateOp::AncillaReset)?;
    Ok(circ)
}

/// The ancilla-mediated pumping circuit in its abstract form: eigenspace
/// mapping, controlled flip with probability `p`, inverse mapping, reset.
/// Pumps into the `target_sign` eigenspace of `stab` (a Pauli string over
/// the system qubits).
pub fn box_pump_circuit(
    stab: &PauliString,
    target_sign: i8,
    p: f64,
    flip: &PauliString,
) -> Result<Circuit, SimError> {
    if target_sign != 1 && target_sign != -1 {
        return Err(SimError::InvalidGate("target sign must be +1 or -1".into()));
    }
    if flip.commutes_with(stab) {
        return Err(SimError::FlipCommutes);
    }
    // The mapping marks the +1 eigenspace of its argument, i.e. the
    // complement of the target eigenspace, whose population gets flipped.
    let marked = if target_sign == -1 { stab.clone() } else { stab.negated() };
    let mut circ = Circuit::new(stab.n_qubits() + 1)?;
    circ.push(GateOp::StabilizerMap { stab: marked.clone(), inverse: false })?;
    circ.push(GateOp::ControlledFlip { flip: flip.clone(), pump_prob: p })?;
    circ.push(GateOp::StabilizerMap { stab: marked, inverse: true })?;
    circ.push(GateOp::AncillaReset)?;
    Ok(circ)
}

/// Coherent four-body evolution exp(-i (beta/2) X1X2X3X4) on the system,
/// mediated by the ancilla: map with the fully entangling MS gate, rotate
/// the ancilla by `beta` about Z, invert the mapping. The ancilla returns
/// to |1> and decouples.
pub fn four_body_evolution_circuit(beta: f64) -> Result<Circuit, SimError> {
    let mut circ = Circuit::new(5)?;
    circ.push(GateOp::Ms { axis: Axis::X, theta: PI / 2.0, participants: None })?;
    circ.push(GateOp::SingleZ { target: 0, theta: beta })?;
    circ.push(GateOp::Ms { axis: Axis::X, theta: -PI / 2.0, participants: None })?;
    Ok(circ)
}
