//! CPTP channels as Kraus operator lists: stabilizer-pumping constructors,
//! channel composition with Choi-based canonicalization, induced channels
//! of ancilla circuits, process (chi) matrices, Jamiolkowski fidelity, and
//! the Lindblad master-equation limit of repeated pumping.

use crate::error::SimError;
use crate::gates::{apply_gate_matrix, unitary_of, GateOp};
use crate::qcore::{
    bell_states, hermitian_eigen, partial_trace_matrix, psd_sqrt, DensityMatrix, PauliString,
    Projector, PureState,
};
use crate::sequences::Circuit;
use crate::{c, Mat, C64, TOL_INVARIANT};

/// Eigenvalue threshold below which Choi components are dropped when
/// canonicalizing a channel.
const CHOI_EIG_FLOOR: f64 = 1e-12;

/// A CPTP map given by operation elements `E_k` with `sum E_k^dag E_k = 1`.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    n_qubits: usize,
    ops: Vec<Mat>,
}

impl KrausChannel {
    pub fn new(n_qubits: usize, ops: Vec<Mat>) -> Result<Self, SimError> {
        let d = 1usize << n_qubits;
        if ops.is_empty() {
            return Err(SimError::InvalidGate("channel needs at least one operation element".into()));
        }
        for op in &ops {
            if op.nrows() != d || op.ncols() != d {
                return Err(SimError::DimensionMismatch { expected: d, got: op.nrows() });
            }
        }
        let ch = Self { n_qubits, ops };
        ch.check_completeness(TOL_INVARIANT)?;
        Ok(ch)
    }

    pub fn check_completeness(&self, tol: f64) -> Result<(), SimError> {
        let d = self.dim();
        let mut acc = Mat::zeros(d, d);
        for op in &self.ops {
            acc += op.adjoint() * op;
        }
        let dev = crate::max_abs_diff(&acc, &Mat::identity(d, d));
        if dev > tol {
            return Err(SimError::CompletenessViolation(dev));
        }
        Ok(())
    }

    pub fn identity(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        Self { n_qubits, ops: vec![Mat::identity(d, d)] }
    }

    pub fn from_unitary(n_qubits: usize, u: Mat) -> Result<Self, SimError> {
        Self::new(n_qubits, vec![u])
    }

    /// The ideal preparation process `rho -> |psi><psi| Tr(rho)`.
    pub fn projector_process(target: &PureState) -> Self {
        let n = target.n_qubits();
        let d = 1usize << n;
        let v = target.amplitudes();
        let mut ops = Vec::with_capacity(d);
        for k in 0..d {
            let mut e = Mat::zeros(d, d);
            for r in 0..d {
                e[(r, k)] = v[r];
            }
            ops.push(e);
        }
        Self { n_qubits: n, ops }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn ops(&self) -> &[Mat] {
        &self.ops
    }

    /// `sum_k E_k rho E_k^dag`.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix, SimError> {
        if rho.n_qubits() != self.n_qubits {
            return Err(SimError::DimensionMismatch { expected: self.dim(), got: rho.dim() });
        }
        Ok(DensityMatrix::from_raw(self.n_qubits, self.apply_matrix(rho.matrix())))
    }

    /// Linear action on an arbitrary matrix.
    pub fn apply_matrix(&self, m: &Mat) -> Mat {
        let d = self.dim();
        let mut out = Mat::zeros(d, d);
        for op in &self.ops {
            out += op * m * op.adjoint();
        }
        out
    }

    /// Heisenberg-picture action on an observable: `sum_k E_k^dag O E_k`.
    pub fn apply_adjoint(&self, obs: &Mat) -> Mat {
        let d = self.dim();
        let mut out = Mat::zeros(d, d);
        for op in &self.ops {
            out += op.adjoint() * obs * op;
        }
        out
    }

    /// Choi state `(1/d) sum_ij E(|i><j|) (x) |i><j|` (output factor first).
    pub fn choi(&self) -> Mat {
        let d = self.dim();
        let mut choi = Mat::zeros(d * d, d * d);
        for op in &self.ops {
            // (E_k (x) 1)|Omega> has entries op[(a, i)]/sqrt(d) at index a*d+i
            let mut v = crate::Vec64::zeros(d * d);
            for a in 0..d {
                for i in 0..d {
                    v[a * d + i] = op[(a, i)] / c((d as f64).sqrt(), 0.0);
                }
            }
            choi += &v * v.adjoint();
        }
        choi
    }

    /// Rebuild a channel from a Choi state, dropping tiny eigenvalues.
    pub fn from_choi(n_qubits: usize, choi: &Mat) -> Result<Self, SimError> {
        let d = 1usize << n_qubits;
        let (vals, vecs) = hermitian_eigen(choi);
        let mut ops = Vec::new();
        for (k, &l) in vals.iter().enumerate() {
            if l < CHOI_EIG_FLOOR {
                continue;
            }
            let scale = (d as f64 * l).sqrt();
            let mut e = Mat::zeros(d, d);
            for a in 0..d {
                for i in 0..d {
                    e[(a, i)] = vecs[(a * d + i, k)] * c(scale, 0.0);
                }
            }
            ops.push(e);
        }
        Self::new(n_qubits, ops)
    }

    /// Canonical (minimal) Kraus representation of the same map.
    pub fn canonicalize(&self) -> Result<Self, SimError> {
        Self::from_choi(self.n_qubits, &self.choi())
    }
}

/// Composition `then o first`, canonicalized so repeated cycles do not
/// accumulate operation elements combinatorially.
pub fn compose(first: &KrausChannel, then: &KrausChannel) -> Result<KrausChannel, SimError> {
    if first.n_qubits != then.n_qubits {
        return Err(SimError::DimensionMismatch { expected: first.dim(), got: then.dim() });
    }
    let mut ops = Vec::with_capacity(first.ops.len() * then.ops.len());
    for f in &then.ops {
        for e in &first.ops {
            ops.push(f * e);
        }
    }
    let raw = KrausChannel { n_qubits: first.n_qubits, ops };
    if raw.ops.len() > raw.dim() * raw.dim() {
        raw.canonicalize()
    } else {
        Ok(raw)
    }
}

/// Two-element pumping channel into the `target_sign` eigenspace of `stab`:
/// `E1 = sqrt(p) flip (1 - target_sign S)/2`,
/// `E2 = (1 + target_sign S)/2 + sqrt(1-p) (1 - target_sign S)/2`.
pub fn stabilizer_pump(
    stab: &PauliString,
    target_sign: i8,
    p: f64,
    flip: &PauliString,
) -> Result<KrausChannel, SimError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::ProbabilityOutOfRange(p));
    }
    if flip.commutes_with(stab) {
        return Err(SimError::FlipCommutes);
    }
    let n = stab.n_qubits();
    let p_target = Projector::new(stab.clone(), target_sign).matrix();
    let p_other = Projector::new(stab.clone(), -target_sign).matrix();
    let e1 = flip.matrix() * &p_other * c(p.sqrt(), 0.0);
    let e2 = &p_target + &p_other * c((1.0 - p).sqrt(), 0.0);
    KrausChannel::new(n, vec![e1, e2])
}

/// Induced system-only channel of an ancilla-mediated circuit: prepare the
/// ancilla (qubit 0), run the circuit, trace the ancilla out. Extracted by
/// pushing all system matrix units through the circuit and decomposing the
/// resulting Choi state.
pub fn channel_from_circuit(
    circ: &Circuit,
    ancilla_prep: &PureState,
) -> Result<KrausChannel, SimError> {
    if ancilla_prep.n_qubits() != 1 {
        return Err(SimError::DimensionMismatch { expected: 2, got: ancilla_prep.amplitudes().len() });
    }
    let n = circ.n_qubits();
    if n < 2 {
        return Err(SimError::InvalidGate("circuit needs an ancilla plus a system".into()));
    }
    let n_sys = n - 1;
    let d = 1usize << n_sys;
    let anc = ancilla_prep.density_matrix();
    let keep: Vec<usize> = (1..n).collect();
    // resolve each coherent gate's unitary once; it is reused for all d^2
    // basis inputs
    enum Action<'a> {
        Unitary(Mat),
        Dissipative(&'a GateOp),
    }
    let actions: Vec<Action> = circ
        .elements()
        .iter()
        .map(|g| {
            if g.is_dissipative() {
                Ok(Action::Dissipative(g))
            } else {
                Ok(Action::Unitary(unitary_of(g, n)?))
            }
        })
        .collect::<Result<_, SimError>>()?;
    let mut choi = Mat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let mut unit = Mat::zeros(d, d);
            unit[(i, j)] = c(1.0, 0.0);
            let mut m = anc.matrix().kronecker(&unit);
            for action in &actions {
                m = match action {
                    Action::Unitary(u) => u * m * u.adjoint(),
                    Action::Dissipative(g) => apply_gate_matrix(g, &m, n)?,
                };
            }
            let out = partial_trace_matrix(&m, n, &keep)?;
            for a in 0..d {
                for b in 0..d {
                    choi[(a * d + i, b * d + j)] += out[(a, b)] / c(d as f64, 0.0);
                }
            }
        }
    }
    KrausChannel::from_choi(n_sys, &choi)
}

/// Unsquared Uhlmann fidelity `Tr sqrt(sqrt(Ca) Cb sqrt(Ca))` between the
/// Choi states of two channels.
pub fn jamiolkowski_fidelity(a: &KrausChannel, b: &KrausChannel) -> Result<f64, SimError> {
    if a.n_qubits != b.n_qubits {
        return Err(SimError::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let ra = psd_sqrt(&a.choi());
    let m = &ra * b.choi() * &ra;
    // floor numerically-zero eigenvalues: sqrt would amplify 1e-18 noise
    // into 1e-9 fidelity error
    let f: f64 = hermitian_eigen(&m)
        .0
        .iter()
        .map(|&l| if l > 1e-14 { l.sqrt() } else { 0.0 })
        .sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Lindblad generator data: a (possibly zero) Hamiltonian and jump operators.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    hamiltonian: Mat,
    jump_ops: Vec<Mat>,
}

impl LindbladModel {
    pub fn new(hamiltonian: Mat, jump_ops: Vec<Mat>) -> Result<Self, SimError> {
        let dev = crate::max_abs_diff(&hamiltonian, &hamiltonian.adjoint());
        if dev > TOL_INVARIANT {
            return Err(SimError::NotHermitian(dev));
        }
        Ok(Self { hamiltonian, jump_ops })
    }

    /// Purely dissipative model (`H_S = 0`).
    pub fn dissipative(dim: usize, jump_ops: Vec<Mat>) -> Self {
        Self { hamiltonian: Mat::zeros(dim, dim), jump_ops }
    }

    pub fn hamiltonian(&self) -> &Mat {
        &self.hamiltonian
    }

    pub fn jump_ops(&self) -> &[Mat] {
        &self.jump_ops
    }
}

/// Right-hand side of the master equation
/// `-i[H, rho] + sum_k (c_k rho c_k^dag - 1/2 {c_k^dag c_k, rho})`.
pub fn lindblad_rhs(model: &LindbladModel, rho: &Mat) -> Mat {
    let h = &model.hamiltonian;
    let comm = h * rho - rho * h;
    let mut out = comm * c(0.0, -1.0);
    for ck in &model.jump_ops {
        let ckd_ck = ck.adjoint() * ck;
        out += ck * rho * ck.adjoint() - (&ckd_ck * rho + rho * &ckd_ck) * c(0.5, 0.0);
    }
    out
}

/// Classical fixed-step 4th-order integration of the master equation,
/// re-symmetrizing after every step.
pub fn integrate_master_equation(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    total_time: f64,
    dt: f64,
) -> Result<DensityMatrix, SimError> {
    if dt <= 0.0 || total_time < 0.0 {
        return Err(SimError::InvalidGate("need dt > 0 and total_time >= 0".into()));
    }
    let mut rho = rho0.matrix().clone();
    let mut t = 0.0;
    while t < total_time - 1e-15 {
        let h = dt.min(total_time - t);
        let k1 = lindblad_rhs(model, &rho);
        let k2 = lindblad_rhs(model, &(&rho + &k1 * c(h / 2.0, 0.0)));
        let k3 = lindblad_rhs(model, &(&rho + &k2 * c(h / 2.0, 0.0)));
        let k4 = lindblad_rhs(model, &(&rho + &k3 * c(h, 0.0)));
        rho += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(h / 6.0, 0.0);
        rho = (&rho + rho.adjoint()) * c(0.5, 0.0);
        t += h;
    }
    let out = DensityMatrix::from_raw(rho0.n_qubits(), rho);
    out.check_invariants(1e-6)?;
    Ok(out)
}

/// A channel expanded over an orthonormal operator basis:
/// `E(rho) = sum_mn chi_mn B_m rho B_n^dag`.
#[derive(Clone, Debug)]
pub struct ProcessMatrix {
    pub basis: Vec<Mat>,
    pub chi: Mat,
}

/// Operator basis `|B_i><B_j|` over the four Bell states, ordered
/// (Phi+, Phi-, Psi+, Psi-); element `m = 4*i + j`.
pub fn bell_operator_basis() -> Vec<Mat> {
    let bells = bell_states();
    let mut basis = Vec::with_capacity(16);
    for bi in &bells {
        for bj in &bells {
            basis.push(bi.amplitudes() * bj.amplitudes().adjoint());
        }
    }
    basis
}

/// Normalized Pauli-string basis `P / sqrt(d)` on `n` qubits.
pub fn pauli_operator_basis(n: usize) -> Vec<Mat> {
    use crate::qcore::Pauli;
    let d = (1usize << n) as f64;
    let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let mut basis = Vec::with_capacity(1 << (2 * n));
    for idx in 0..(4usize.pow(n as u32)) {
        let mut factors = Vec::with_capacity(n);
        let mut rem = idx;
        for _ in 0..n {
            factors.push(letters[rem % 4]);
            rem /= 4;
        }
        basis.push(PauliString::new(factors, 1).matrix() / c(d.sqrt(), 0.0));
    }
    basis
}

/// Expand a channel in an orthonormal, complete operator basis.
pub fn chi_matrix(ch: &KrausChannel, basis: &[Mat]) -> Result<ProcessMatrix, SimError> {
    let d = ch.dim();
    if basis.len() != d * d {
        return Err(SimError::BadOperatorBasis);
    }
    for (m, bm) in basis.iter().enumerate() {
        for (n, bn) in basis.iter().enumerate() {
            let ip = (bm.adjoint() * bn).trace();
            let expect = if m == n { 1.0 } else { 0.0 };
            if (ip.re - expect).abs() > 1e-9 || ip.im.abs() > 1e-9 {
                return Err(SimError::BadOperatorBasis);
            }
        }
    }
    let mut chi = Mat::zeros(d * d, d * d);
    for op in ch.ops() {
        // op = sum_m coeff_m B_m with coeff_m = <B_m, op>_HS
        let coeffs: Vec<C64> = basis.iter().map(|b| (b.adjoint() * op).trace()).collect();
        for (m, cm) in coeffs.iter().enumerate() {
            for (n, cn) in coeffs.iter().enumerate() {
                chi[(m, n)] += cm * cn.conj();
            }
        }
    }
    Ok(ProcessMatrix { basis: basis.to_vec(), chi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{basis_state, Pauli};
    use approx::assert_abs_diff_eq;

    fn zz_pump(p: f64) -> KrausChannel {
        // Box-1 map: pump into the -1 eigenspace of Z1Z2 with flip X2
        let zz = PauliString::on(2, &[0, 1], Pauli::Z);
        let x2 = PauliString::single(2, 1, Pauli::X);
        stabilizer_pump(&zz, -1, p, &x2).unwrap()
    }

    fn bell_cooling_cycle(p: f64) -> KrausChannel {
        let xx = PauliString::on(2, &[0, 1], Pauli::X);
        let yy = PauliString::on(2, &[0, 1], Pauli::Y);
        let y1 = PauliString::single(2, 0, Pauli::Y);
        let x1 = PauliString::single(2, 0, Pauli::X);
        let m1 = stabilizer_pump(&xx, -1, p, &y1).unwrap();
        let m2 = stabilizer_pump(&yy, -1, p, &x1).unwrap();
        compose(&m1, &m2).unwrap()
    }

    #[test]
    fn identity_channel_is_identity() {
        let rho = DensityMatrix::fully_mixed(2).unwrap();
        let out = KrausChannel::identity(2).apply(&rho).unwrap();
        assert!(crate::max_abs_diff(out.matrix(), rho.matrix()) < 1e-15);
    }

    #[test]
    fn zz_pump_moves_phi_plus_to_psi_plus() {
        let bells = bell_states();
        let out = zz_pump(1.0).apply(&bells[0].density_matrix()).unwrap();
        assert_abs_diff_eq!(out.fidelity(&bells[2]).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zz_pump_leaves_minus_eigenspace_invariant() {
        let bells = bell_states();
        for b in [&bells[2], &bells[3]] {
            let rho = b.density_matrix();
            let out = zz_pump(0.7).apply(&rho).unwrap();
            assert!(crate::max_abs_diff(out.matrix(), rho.matrix()) < 1e-12);
        }
    }

    #[test]
    fn pump_at_zero_probability_is_identity_map() {
        let ch = zz_pump(0.0);
        for i in 0..4 {
            for j in 0..4 {
                let mut unit = Mat::zeros(4, 4);
                unit[(i, j)] = c(1.0, 0.0);
                assert!(crate::max_abs_diff(&ch.apply_matrix(&unit), &unit) < 1e-12);
            }
        }
    }

    #[test]
    fn pump_rejects_commuting_flip() {
        let zz = PauliString::on(2, &[0, 1], Pauli::Z);
        let z1 = PauliString::single(2, 0, Pauli::Z);
        assert!(stabilizer_pump(&zz, -1, 0.5, &z1).is_err());
        assert!(stabilizer_pump(&zz, -1, 1.5, &PauliString::single(2, 1, Pauli::X)).is_err());
    }

    #[test]
    fn si_kraus_operators_reproduced_verbatim() {
        // E1 = sqrt(p) Y1 (1 + X1X2)/2 for pumping X1X2 -> -1
        let p = 0.37;
        let xx = PauliString::on(2, &[0, 1], Pauli::X);
        let y1 = PauliString::single(2, 0, Pauli::Y);
        let ch = stabilizer_pump(&xx, -1, p, &y1).unwrap();
        let plus = Projector::new(xx.clone(), 1).matrix();
        let minus = Projector::new(xx, -1).matrix();
        let e1 = y1.matrix() * &plus * c(p.sqrt(), 0.0);
        let e2 = &minus + &plus * c((1.0 - p).sqrt(), 0.0);
        assert!(crate::max_abs_diff(&ch.ops()[0], &e1) < 1e-12);
        assert!(crate::max_abs_diff(&ch.ops()[1], &e2) < 1e-12);
    }

    #[test]
    fn deterministic_cooling_cycle_prepares_psi_minus_from_anything() {
        let cycle = bell_cooling_cycle(1.0);
        let target = bell_states()[3].clone();
        let target_rho = target.density_matrix();
        for i in 0..4 {
            for j in 0..4 {
                let mut unit = Mat::zeros(4, 4);
                unit[(i, j)] = c(1.0, 0.0);
                let out = cycle.apply_matrix(&unit);
                let expect = target_rho.matrix() * unit.trace();
                assert!(crate::max_abs_diff(&out, &expect) < 1e-9);
            }
        }
    }

    #[test]
    fn compose_is_associative_and_respects_identity() {
        let a = zz_pump(0.3);
        let id = KrausChannel::identity(2);
        let left = compose(&id, &a).unwrap();
        let rho = DensityMatrix::fully_mixed(2).unwrap();
        assert!(crate::max_abs_diff(
            left.apply(&rho).unwrap().matrix(),
            a.apply(&rho).unwrap().matrix()
        ) < 1e-12);

        let b = bell_cooling_cycle(0.5);
        let c1 = compose(&compose(&a, &b).unwrap(), &a).unwrap();
        let c2 = compose(&a, &compose(&b, &a).unwrap()).unwrap();
        for i in 0..4 {
            let mut unit = Mat::zeros(4, 4);
            unit[(i, i)] = c(1.0, 0.0);
            assert!(crate::max_abs_diff(&c1.apply_matrix(&unit), &c2.apply_matrix(&unit)) < 1e-9);
        }
    }

    #[test]
    fn pump_expectation_closed_form_from_mixed() {
        // <S> after k cycles = target_sign (1 - (1-p)^k)
        let zz = PauliString::on(2, &[0, 1], Pauli::Z);
        let x2 = PauliString::single(2, 1, Pauli::X);
        for p in [0.25, 0.5, 1.0] {
            let ch = stabilizer_pump(&zz, -1, p, &x2).unwrap();
            let mut rho = DensityMatrix::fully_mixed(2).unwrap();
            for k in 1..=5 {
                rho = ch.apply(&rho).unwrap();
                let expect = -(1.0 - (1.0 - p).powi(k));
                assert_abs_diff_eq!(rho.expectation(&zz).unwrap(), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn canonicalization_keeps_the_map_and_bounds_rank() {
        let cycle = bell_cooling_cycle(0.5);
        let mut ch = KrausChannel::identity(2);
        for _ in 0..6 {
            ch = compose(&ch, &cycle).unwrap();
        }
        assert!(ch.ops().len() <= 16);
        ch.check_completeness(1e-9).unwrap();
    }

    #[test]
    fn choi_roundtrip_preserves_the_map() {
        let ch = bell_cooling_cycle(0.6);
        let re = ch.canonicalize().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut unit = Mat::zeros(4, 4);
                unit[(i, j)] = c(1.0, 0.0);
                assert!(crate::max_abs_diff(&ch.apply_matrix(&unit), &re.apply_matrix(&unit)) < 1e-10);
            }
        }
    }

    #[test]
    fn jamiolkowski_examples() {
        let ch = bell_cooling_cycle(1.0);
        assert_abs_diff_eq!(jamiolkowski_fidelity(&ch, &ch).unwrap(), 1.0, epsilon = 1e-9);

        let target = bell_states()[3].clone();
        let proj = KrausChannel::projector_process(&target);
        assert_abs_diff_eq!(jamiolkowski_fidelity(&ch, &proj).unwrap(), 1.0, epsilon = 1e-9);

        let id = KrausChannel::identity(2);
        assert_abs_diff_eq!(jamiolkowski_fidelity(&id, &proj).unwrap(), 0.25, epsilon = 1e-9);
    }

    fn bell_cooling_jump_ops(gamma: f64) -> Vec<Mat> {
        // unit-norm jump operators flip * P_+ scaled by sqrt(gamma)
        let xx = PauliString::on(2, &[0, 1], Pauli::X);
        let yy = PauliString::on(2, &[0, 1], Pauli::Y);
        let y1 = PauliString::single(2, 0, Pauli::Y);
        let x1 = PauliString::single(2, 0, Pauli::X);
        vec![
            y1.matrix() * Projector::new(xx, 1).matrix() * c(gamma.sqrt(), 0.0),
            x1.matrix() * Projector::new(yy, 1).matrix() * c(gamma.sqrt(), 0.0),
        ]
    }

    #[test]
    fn lindblad_dark_state_and_gain_term() {
        // c = (1/2) X2 P_+(Z1Z2): annihilates the -1 eigenspace of Z1Z2
        let zz = PauliString::on(2, &[0, 1], Pauli::Z);
        let x2 = PauliString::single(2, 1, Pauli::X);
        let jump = x2.matrix() * Projector::new(zz, 1).matrix() * c(0.5, 0.0);
        let model = LindbladModel::dissipative(4, vec![jump]);
        let bells = bell_states();

        let dark = lindblad_rhs(&model, bells[3].density_matrix().matrix());
        assert!(dark.iter().all(|z| z.norm() < 1e-12));

        let rhs = lindblad_rhs(&model, bells[0].density_matrix().matrix());
        assert_abs_diff_eq!(rhs.trace().re, 0.0, epsilon = 1e-12);
        let v = bells[2].amplitudes();
        let gain = (v.adjoint() * &rhs * v)[(0, 0)];
        assert_abs_diff_eq!(gain.re, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn lindblad_rhs_is_traceless_on_random_states() {
        let model = LindbladModel::dissipative(4, bell_cooling_jump_ops(1.0));
        let mut rho = DensityMatrix::fully_mixed(2).unwrap();
        let ch = zz_pump(0.3);
        for _ in 0..3 {
            rho = ch.apply(&rho).unwrap();
            let rhs = lindblad_rhs(&model, rho.matrix());
            assert_abs_diff_eq!(rhs.trace().norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn rejects_non_hermitian_hamiltonian() {
        let mut h = Mat::zeros(4, 4);
        h[(0, 1)] = c(1.0, 0.0);
        assert!(LindbladModel::new(h, vec![]).is_err());
    }

    #[test]
    fn integrator_zero_time_returns_input() {
        let model = LindbladModel::dissipative(4, bell_cooling_jump_ops(1.0));
        let rho = DensityMatrix::fully_mixed(2).unwrap();
        let out = integrate_master_equation(&model, &rho, 0.0, 1e-2).unwrap();
        assert!(crate::max_abs_diff(out.matrix(), rho.matrix()) < 1e-15);
    }

    #[test]
    fn integrator_converges_to_cooling_target() {
        let model = LindbladModel::dissipative(4, bell_cooling_jump_ops(1.0));
        let rho = DensityMatrix::fully_mixed(2).unwrap();
        let out = integrate_master_equation(&model, &rho, 20.0, 1e-3).unwrap();
        let fid = out.fidelity(&bell_states()[3]).unwrap();
        assert!((1.0 - fid).abs() < 1e-4, "fidelity {fid}");
    }

    #[test]
    fn chi_of_identity_in_pauli_basis() {
        let basis = pauli_operator_basis(1);
        let chi = chi_matrix(&KrausChannel::identity(1), &basis).unwrap().chi;
        assert_abs_diff_eq!(chi[(0, 0)].re, 2.0, epsilon = 1e-12);
        for m in 0..4 {
            for n in 0..4 {
                if (m, n) != (0, 0) {
                    assert_abs_diff_eq!(chi[(m, n)].norm(), 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn chi_of_cooling_process_has_four_entries_in_bell_basis() {
        let basis = bell_operator_basis();
        let chi = chi_matrix(&bell_cooling_cycle(1.0), &basis).unwrap().chi;
        let big: Vec<(usize, usize)> = (0..16)
            .flat_map(|m| (0..16).map(move |n| (m, n)))
            .filter(|&(m, n)| chi[(m, n)].norm() > 1e-9)
            .collect();
        assert_eq!(big.len(), 4, "nonzero chi entries: {big:?}");
        // diagonal elements |Psi-><B_k| : indices m = 4*3 + k
        for (m, n) in big {
            assert_eq!(m, n);
            assert!(m >= 12);
        }
    }

    #[test]
    fn chi_is_hermitian_and_psd() {
        let basis = pauli_operator_basis(2);
        let chi = chi_matrix(&bell_cooling_cycle(0.5), &basis).unwrap().chi;
        assert!(crate::max_abs_diff(&chi, &chi.adjoint()) < 1e-10);
        let min = hermitian_eigen(&chi).0.into_iter().fold(f64::INFINITY, f64::min);
        assert!(min > -1e-10);
    }

    #[test]
    fn chi_rejects_incomplete_basis() {
        let mut basis = pauli_operator_basis(1);
        basis.pop();
        assert!(chi_matrix(&KrausChannel::identity(1), &basis).is_err());
    }

    #[test]
    fn monotone_fidelity_under_repeated_cycles() {
        let cycle = bell_cooling_cycle(0.3);
        let target = bell_states()[3].clone();
        // start from a few different states, including basis states
        for label in ["00", "01", "10", "11"] {
            let mut rho = basis_state(label).unwrap().density_matrix();
            let mut prev = rho.fidelity(&target).unwrap();
            for _ in 0..6 {
                rho = cycle.apply(&rho).unwrap();
                let f = rho.fidelity(&target).unwrap();
                assert!(f >= prev - 1e-12);
                prev = f;
            }
        }
    }
}
