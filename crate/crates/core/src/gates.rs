//! The trapped-ion gate set: collective rotations, Mølmer-Sørensen
//! entangling operations, single-ion light shifts, and the two dissipative
//! elements (ancilla reset, system mixing).
//!
//! All coherent unitaries are exact matrix exponentials of their Hermitian
//! generators, computed by spectral decomposition.

use crate::error::SimError;
use crate::qcore::{
    hermitian_eigen, partial_trace_matrix, DensityMatrix, Pauli, PauliString, Projector,
};
use crate::{c, Mat, C64};

/// Rotation axis of a collective or MS operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
        }
    }
}

/// One element of a pulse sequence.
///
/// `participants: None` means the operation acts collectively on every
/// qubit of the register. The two `StabilizerMap`/`ControlledFlip` kinds
/// are the abstract mapping and controlled-flip blocks of the
/// ancilla-mediated pumping circuit; the transcribed experimental
/// sequences use only the concrete kinds above them.
#[derive(Clone, Debug)]
pub enum GateOp {
    /// `exp(-i (theta/2) sum_i A_i)` over the participants.
    CollectiveRot {
        axis: Axis,
        theta: f64,
        participants: Option<Vec<usize>>,
    },
    /// Light shift `exp(-i (theta/2) Z_target)`.
    SingleZ { target: usize, theta: f64 },
    /// Mølmer-Sørensen `exp(-i (theta/4) (sum_i A_i)^2)` over the participants.
    Ms {
        axis: Axis,
        theta: f64,
        participants: Option<Vec<usize>>,
    },
    /// Dissipative reset of the ancilla (qubit 0) to `|1>`.
    AncillaReset,
    /// Ideal depolarization of the targeted qubits to the fully mixed state.
    SystemMix { targets: Vec<usize> },
    /// Coherent mapping `M(S)` of the stabilizer eigenspace information onto
    /// the ancilla: flips the ancilla from `|1>` to `|0>` on the +1
    /// eigenspace of `stab` (a Pauli string over the system qubits 1..n-1).
    StabilizerMap { stab: PauliString, inverse: bool },
    /// `C(p) = |0><0|_0 (x) exp(i alpha F) + |1><1|_0 (x) 1` with
    /// `p = sin^2 alpha`; `flip` is a Pauli string over the system qubits.
    ControlledFlip { flip: PauliString, pump_prob: f64 },
}

impl GateOp {
    fn resolve_participants(
        participants: &Option<Vec<usize>>,
        n: usize,
    ) -> Result<Vec<usize>, SimError> {
        match participants {
            None => Ok((0..n).collect()),
            Some(v) => {
                if v.is_empty() {
                    return Err(SimError::InvalidGate("empty participant set".into()));
                }
                for &i in v {
                    if i >= n {
                        return Err(SimError::IndexOutOfRange { index: i, n_qubits: n });
                    }
                }
                Ok(v.clone())
            }
        }
    }

    /// True for the two dissipative kinds.
    pub fn is_dissipative(&self) -> bool {
        matches!(self, GateOp::AncillaReset | GateOp::SystemMix { .. })
    }
}

fn embed_single(op: &Mat, index: usize, n: usize) -> Mat {
    let left = 1usize << index;
    let right = 1usize << (n - 1 - index);
    Mat::identity(left, left)
        .kronecker(op)
        .kronecker(&Mat::identity(right, right))
}

fn collective_sum(axis: Axis, participants: &[usize], n: usize) -> Mat {
    let d = 1usize << n;
    let p = axis.pauli().matrix();
    let mut sum = Mat::zeros(d, d);
    for &i in participants {
        sum += embed_single(&p, i, n);
    }
    sum
}

/// `exp(-i theta G)` for a Hermitian generator `G`.
pub fn herm_exp(generator: &Mat, theta: f64) -> Mat {
    let (vals, vecs) = hermitian_eigen(generator);
    let d = generator.nrows();
    let mut diag = Mat::zeros(d, d);
    for (k, &l) in vals.iter().enumerate() {
        diag[(k, k)] = C64::from_polar(1.0, -theta * l);
    }
    &vecs * diag * vecs.adjoint()
}

/// Exact unitary of a coherent gate on an `n`-qubit register.
pub fn unitary_of(gate: &GateOp, n: usize) -> Result<Mat, SimError> {
    match gate {
        GateOp::CollectiveRot { axis, theta, participants } => {
            let part = GateOp::resolve_participants(participants, n)?;
            let g = collective_sum(*axis, &part, n) * c(0.5, 0.0);
            Ok(herm_exp(&g, *theta))
        }
        GateOp::SingleZ { target, theta } => {
            if *target >= n {
                return Err(SimError::IndexOutOfRange { index: *target, n_qubits: n });
            }
            let g = embed_single(&Pauli::Z.matrix(), *target, n) * c(0.5, 0.0);
            Ok(herm_exp(&g, *theta))
        }
        GateOp::Ms { axis, theta, participants } => {
            let part = GateOp::resolve_participants(participants, n)?;
            let s = collective_sum(*axis, &part, n);
            let g = &s * &s * c(0.25, 0.0);
            Ok(herm_exp(&g, *theta))
        }
        GateOp::StabilizerMap { stab, inverse } => {
            let m = mapping_unitary(stab, n)?;
            Ok(if *inverse { m.adjoint() } else { m })
        }
        GateOp::ControlledFlip { flip, pump_prob } => controlled_flip(flip, *pump_prob, n),
        GateOp::AncillaReset => Err(SimError::DissipativeGate("AncillaReset")),
        GateOp::SystemMix { .. } => Err(SimError::DissipativeGate("SystemMix")),
    }
}

/// Two-ion MS gate `exp(-i (theta/2) A_a A_b)` embedded in `n` qubits.
pub fn partial_ms(axis: Axis, theta: f64, pair: (usize, usize), n: usize) -> Result<Mat, SimError> {
    let (a, b) = pair;
    if a == b {
        return Err(SimError::InvalidGate("partial MS pair must be distinct".into()));
    }
    if a >= n || b >= n {
        return Err(SimError::IndexOutOfRange { index: a.max(b), n_qubits: n });
    }
    let p = axis.pauli().matrix();
    let g = embed_single(&p, a, n) * embed_single(&p, b, n) * c(0.5, 0.0);
    Ok(herm_exp(&g, theta))
}

/// Closed-form eigenspace mapping `M(S)` onto the ancilla (qubit 0):
/// `M = -(i/sqrt2)(X_0 + Y_0) (x) P_+  +  (1/sqrt2)(1 - i Z_0) (x) P_-`.
///
/// `stab` lives on the system register (qubits 1..n-1 of the full one).
pub fn mapping_unitary(stab: &PauliString, n: usize) -> Result<Mat, SimError> {
    if stab.n_qubits() != n - 1 {
        return Err(SimError::DimensionMismatch {
            expected: 1 << (n - 1),
            got: 1 << stab.n_qubits(),
        });
    }
    let p_plus = Projector::new(stab.clone(), 1).matrix();
    let p_minus = Projector::new(stab.clone(), -1).matrix();
    let inv_sqrt2 = 1.0 / f64::sqrt(2.0);
    let a_plus = (Pauli::X.matrix() + Pauli::Y.matrix()) * c(0.0, -inv_sqrt2);
    let a_minus = (Mat::identity(2, 2) - Pauli::Z.matrix() * c(0.0, 1.0)) * c(inv_sqrt2, 0.0);
    Ok(a_plus.kronecker(&p_plus) + a_minus.kronecker(&p_minus))
}

fn controlled_flip(flip: &PauliString, pump_prob: f64, n: usize) -> Result<Mat, SimError> {
    if !(0.0..=1.0).contains(&pump_prob) {
        return Err(SimError::ProbabilityOutOfRange(pump_prob));
    }
    if flip.n_qubits() != n - 1 {
        return Err(SimError::DimensionMismatch {
            expected: 1 << (n - 1),
            got: 1 << flip.n_qubits(),
        });
    }
    let alpha = pump_prob.sqrt().asin();
    let ds = 1usize << (n - 1);
    // exp(i alpha F) = cos(alpha) 1 + i sin(alpha) F for a Pauli string F
    let rot = Mat::identity(ds, ds) * c(alpha.cos(), 0.0) + flip.matrix() * c(0.0, alpha.sin());
    let p0 = basis_projector(0);
    let p1 = basis_projector(1);
    Ok(p0.kronecker(&rot) + p1.kronecker(&Mat::identity(ds, ds)))
}

fn basis_projector(b: usize) -> Mat {
    let mut m = Mat::zeros(2, 2);
    m[(b, b)] = c(1.0, 0.0);
    m
}

/// Apply a gate to a density matrix: `U rho U^dag` for coherent kinds,
/// the corresponding trace-preserving map for the dissipative kinds.
pub fn apply_gate(gate: &GateOp, rho: &DensityMatrix) -> Result<DensityMatrix, SimError> {
    let out = apply_gate_matrix(gate, rho.matrix(), rho.n_qubits())?;
    Ok(DensityMatrix::from_raw(rho.n_qubits(), out))
}

/// Linear action of a gate on an arbitrary matrix. Used both by
/// [`apply_gate`] and by channel extraction, which feeds matrix units.
pub(crate) fn apply_gate_matrix(gate: &GateOp, m: &Mat, n: usize) -> Result<Mat, SimError> {
    match gate {
        GateOp::AncillaReset => {
            if n < 2 {
                return Err(SimError::InvalidGate("reset needs an ancilla plus a system".into()));
            }
            let keep: Vec<usize> = (1..n).collect();
            let reduced = partial_trace_matrix(m, n, &keep)?;
            Ok(basis_projector(1).kronecker(&reduced))
        }
        GateOp::SystemMix { targets } => {
            if targets.is_empty() {
                return Err(SimError::InvalidGate("empty SystemMix target set".into()));
            }
            let mut out = m.clone();
            for &t in targets {
                if t >= n {
                    return Err(SimError::IndexOutOfRange { index: t, n_qubits: n });
                }
                // Pauli twirl on one qubit replaces it by 1/2 and decouples it.
                let mut acc = Mat::zeros(m.nrows(), m.ncols());
                for p in [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z] {
                    let e = embed_single(&p.matrix(), t, n);
                    acc += &e * &out * &e;
                }
                out = acc * c(0.25, 0.0);
            }
            Ok(out)
        }
        _ => {
            let u = unitary_of(gate, n)?;
            Ok(&u * m * u.adjoint())
        }
    }
}

/// True if `u = exp(i phi) v` for some global phase, within `tol`.
pub fn eq_up_to_global_phase(u: &Mat, v: &Mat, tol: f64) -> bool {
    if u.shape() != v.shape() {
        return false;
    }
    // phase from the largest entry of v
    let mut best = (0usize, 0usize);
    let mut mag = 0.0;
    for r in 0..v.nrows() {
        for c_ in 0..v.ncols() {
            if v[(r, c_)].norm() > mag {
                mag = v[(r, c_)].norm();
                best = (r, c_);
            }
        }
    }
    if mag < tol {
        return crate::max_abs_diff(u, v) < tol;
    }
    let phase = u[best] / v[best];
    if (phase.norm() - 1.0).abs() > tol {
        return false;
    }
    crate::max_abs_diff(u, &(v * phase)) < tol
}
