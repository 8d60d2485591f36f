//! Quantum-state primitives: pure states, density matrices, Pauli strings,
//! projectors, tensor structure, partial trace, expectations and fidelities.
//!
//! Index convention: qubit 0 is the leftmost (most significant) tensor
//! factor, so the basis label `"0111"` addresses amplitude index `0b0111`.

use crate::error::SimError;
use crate::{c, Mat, Vec64, C64, TOL_INVARIANT};

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Mat {
        match self {
            Pauli::I => Mat::identity(2, 2),
            Pauli::X => Mat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
            Pauli::Y => Mat::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
            Pauli::Z => Mat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
        }
    }

    fn commutes_with(self, other: Pauli) -> bool {
        self == Pauli::I || other == Pauli::I || self == other
    }
}

/// Signed tensor product of Pauli letters over a qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    factors: Vec<Pauli>,
    sign: i8,
}

impl PauliString {
    pub fn new(factors: Vec<Pauli>, sign: i8) -> Self {
        assert!(sign == 1 || sign == -1, "sign must be +1 or -1");
        assert!(!factors.is_empty());
        Self { factors, sign }
    }

    /// Identity string on `n` qubits.
    pub fn identity(n: usize) -> Self {
        Self::new(vec![Pauli::I; n], 1)
    }

    /// String with a single non-identity letter at `index`.
    pub fn single(n: usize, index: usize, p: Pauli) -> Self {
        let mut factors = vec![Pauli::I; n];
        factors[index] = p;
        Self::new(factors, 1)
    }

    /// String with the same letter on every listed qubit, e.g. `Z1Z2`.
    pub fn on(n: usize, indices: &[usize], p: Pauli) -> Self {
        let mut factors = vec![Pauli::I; n];
        for &i in indices {
            factors[i] = p;
        }
        Self::new(factors, 1)
    }

    pub fn n_qubits(&self) -> usize {
        self.factors.len()
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn factors(&self) -> &[Pauli] {
        &self.factors
    }

    /// Same string with the overall sign flipped.
    pub fn negated(&self) -> Self {
        Self::new(self.factors.clone(), -self.sign)
    }

    /// True if the two strings commute as operators.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        assert_eq!(self.n_qubits(), other.n_qubits());
        let anticommuting = self
            .factors
            .iter()
            .zip(&other.factors)
            .filter(|(a, b)| !a.commutes_with(**b))
            .count();
        anticommuting % 2 == 0
    }

    /// Dense matrix representation (2^n x 2^n).
    pub fn matrix(&self) -> Mat {
        let mut m = Mat::identity(1, 1);
        for f in &self.factors {
            m = m.kronecker(&f.matrix());
        }
        m * c(self.sign as f64, 0.0)
    }

    /// Display label such as `Z1Z2` (identity factors omitted, indices as
    /// stored). The all-identity string prints as `I`.
    pub fn label(&self) -> String {
        let mut s = String::new();
        if self.sign < 0 {
            s.push('-');
        }
        let mut any = false;
        for (i, f) in self.factors.iter().enumerate() {
            let ch = match f {
                Pauli::I => continue,
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            };
            s.push(ch);
            s.push_str(&i.to_string());
            any = true;
        }
        if !any {
            s.push('I');
        }
        s
    }
}

/// Eigenspace projector `P = (1 + sign * S) / 2` of a Pauli string.
#[derive(Clone, Debug)]
pub struct Projector {
    pub base: PauliString,
    pub eigen_sign: i8,
}

impl Projector {
    pub fn new(base: PauliString, eigen_sign: i8) -> Self {
        assert!(eigen_sign == 1 || eigen_sign == -1);
        Self { base, eigen_sign }
    }

    pub fn matrix(&self) -> Mat {
        let d = 1 << self.base.n_qubits();
        (Mat::identity(d, d) + self.base.matrix() * c(self.eigen_sign as f64, 0.0)) * c(0.5, 0.0)
    }
}

/// Normalized pure state on `n` qubits.
#[derive(Clone, Debug)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec64,
}

impl PureState {
    pub fn new(amplitudes: Vec64) -> Result<Self, SimError> {
        let d = amplitudes.len();
        let n = d.trailing_zeros() as usize;
        if d == 0 || d != 1 << n {
            return Err(SimError::DimensionMismatch { expected: 1 << n, got: d });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > TOL_INVARIANT {
            return Err(SimError::InvariantViolation(format!(
                "pure state norm {norm} deviates from 1"
            )));
        }
        Ok(Self { n_qubits: n, amplitudes })
    }

    /// Normalize an arbitrary nonzero vector.
    pub fn from_unnormalized(mut amplitudes: Vec64) -> Result<Self, SimError> {
        let norm = amplitudes.norm();
        if norm < 1e-300 {
            return Err(SimError::InvariantViolation("zero vector".into()));
        }
        amplitudes /= c(norm, 0.0);
        Self::new(amplitudes)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &Vec64 {
        &self.amplitudes
    }

    /// Equal superposition `(a + phase * b) / sqrt(2)` of two states.
    pub fn superpose(a: &PureState, b: &PureState, phase: C64) -> Result<Self, SimError> {
        if a.n_qubits != b.n_qubits {
            return Err(SimError::DimensionMismatch {
                expected: a.amplitudes.len(),
                got: b.amplitudes.len(),
            });
        }
        Self::from_unnormalized(&a.amplitudes + &b.amplitudes * phase)
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        let v = &self.amplitudes;
        DensityMatrix {
            n_qubits: self.n_qubits,
            data: v * v.adjoint(),
        }
    }
}

/// Computational basis state from a bit label, qubit 0 most significant.
pub fn basis_state(label: &str) -> Result<PureState, SimError> {
    if label.is_empty() || !label.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(SimError::InvalidLabel(label.to_string()));
    }
    let n = label.len();
    let index = usize::from_str_radix(label, 2).unwrap();
    let mut v = Vec64::zeros(1 << n);
    v[index] = c(1.0, 0.0);
    PureState::new(v)
}

/// The four Bell states in the order (Phi+, Phi-, Psi+, Psi-).
pub fn bell_states() -> [PureState; 4] {
    let b = |i: usize, j: usize, s: f64| {
        let mut v = Vec64::zeros(4);
        v[i] = c(1.0 / f64::sqrt(2.0), 0.0);
        v[j] = c(s / f64::sqrt(2.0), 0.0);
        PureState::new(v).unwrap()
    };
    [b(0, 3, 1.0), b(0, 3, -1.0), b(1, 2, 1.0), b(1, 2, -1.0)]
}

/// `(|0...0> + |1...1>)/sqrt(2)` on `n` qubits.
pub fn ghz_state(n: usize) -> PureState {
    let mut v = Vec64::zeros(1 << n);
    v[0] = c(1.0 / f64::sqrt(2.0), 0.0);
    v[(1 << n) - 1] = c(1.0 / f64::sqrt(2.0), 0.0);
    PureState::new(v).unwrap()
}

/// Hermitian, unit-trace, positive semidefinite state on `n` qubits.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: Mat,
}

impl DensityMatrix {
    /// Wrap a matrix, checking all three invariants at `TOL_INVARIANT`.
    pub fn new(data: Mat) -> Result<Self, SimError> {
        let d = data.nrows();
        let n = d.trailing_zeros() as usize;
        if d == 0 || d != 1 << n || data.ncols() != d {
            return Err(SimError::DimensionMismatch { expected: 1 << n, got: data.ncols() });
        }
        let rho = Self { n_qubits: n, data };
        rho.check_invariants(TOL_INVARIANT)?;
        Ok(rho)
    }

    /// Wrap without validation. For internal linear-algebra plumbing where
    /// intermediate matrices are not physical states.
    pub(crate) fn from_raw(n_qubits: usize, data: Mat) -> Self {
        Self { n_qubits, data }
    }

    pub fn check_invariants(&self, tol: f64) -> Result<(), SimError> {
        let tr = self.data.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(SimError::InvariantViolation(format!("trace {tr} deviates from 1")));
        }
        let herm_dev = crate::max_abs_diff(&self.data, &self.data.adjoint());
        if herm_dev > tol {
            return Err(SimError::NotHermitian(herm_dev));
        }
        let min_eig = hermitian_eigenvalues(&self.data)
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -tol {
            return Err(SimError::InvariantViolation(format!(
                "smallest eigenvalue {min_eig:.3e} below PSD floor"
            )));
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn matrix(&self) -> &Mat {
        &self.data
    }

    /// `(1/2^n) * I`.
    pub fn fully_mixed(n: usize) -> Result<Self, SimError> {
        if n == 0 {
            return Err(SimError::InvalidLabel("qubit count must be >= 1".into()));
        }
        let d = 1usize << n;
        Ok(Self {
            n_qubits: n,
            data: Mat::identity(d, d) * c(1.0 / d as f64, 0.0),
        })
    }

    /// Kronecker product; `self`'s qubits become the leading factors.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            n_qubits: self.n_qubits + other.n_qubits,
            data: self.data.kronecker(&other.data),
        }
    }

    /// Reduced state on `keep` (ascending original order), tracing out the
    /// rest.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix, SimError> {
        let data = partial_trace_matrix(&self.data, self.n_qubits, keep)?;
        Ok(DensityMatrix { n_qubits: keep.len(), data })
    }

    /// `Tr(rho * S)` as a real number; errors if the imaginary residue
    /// exceeds the invariant tolerance.
    pub fn expectation(&self, obs: &PauliString) -> Result<f64, SimError> {
        if obs.n_qubits() != self.n_qubits {
            return Err(SimError::DimensionMismatch {
                expected: self.dim(),
                got: 1 << obs.n_qubits(),
            });
        }
        let val = (&self.data * obs.matrix()).trace();
        if val.im.abs() > TOL_INVARIANT {
            return Err(SimError::ImaginaryResidue(val.im.abs()));
        }
        Ok(val.re)
    }

    /// Overlap `<psi| rho |psi>` with a pure target.
    pub fn fidelity(&self, target: &PureState) -> Result<f64, SimError> {
        if target.n_qubits() != self.n_qubits {
            return Err(SimError::DimensionMismatch {
                expected: self.dim(),
                got: target.amplitudes().len(),
            });
        }
        let v = target.amplitudes();
        let val = (v.adjoint() * &self.data * v)[(0, 0)];
        Ok(val.re.clamp(0.0, 1.0))
    }

    /// Populations of the four Bell states (Phi+, Phi-, Psi+, Psi-).
    pub fn bell_populations(&self) -> Result<[f64; 4], SimError> {
        if self.n_qubits != 2 {
            return Err(SimError::DimensionMismatch { expected: 4, got: self.dim() });
        }
        let bells = bell_states();
        let mut out = [0.0; 4];
        for (o, b) in out.iter_mut().zip(&bells) {
            *o = self.fidelity(b)?;
        }
        Ok(out)
    }

    /// `(1/2) Tr |rho - other|`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = &self.data - &other.data;
        0.5 * hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum::<f64>()
    }
}

/// Partial trace over the complement of `keep` for an arbitrary matrix on
/// `n` qubits. Works entrywise so it applies to non-state matrices too.
pub(crate) fn partial_trace_matrix(m: &Mat, n: usize, keep: &[usize]) -> Result<Mat, SimError> {
    if keep.is_empty() {
        return Err(SimError::EmptyKeepSet);
    }
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != keep.len() {
        return Err(SimError::EmptyKeepSet);
    }
    for &i in &sorted {
        if i >= n {
            return Err(SimError::IndexOutOfRange { index: i, n_qubits: n });
        }
    }
    let traced: Vec<usize> = (0..n).filter(|i| !sorted.contains(i)).collect();
    let dk = 1usize << sorted.len();
    let dt = 1usize << traced.len();

    // Bit position of qubit q in the full index (qubit 0 most significant).
    let pos = |q: usize| n - 1 - q;
    let assemble = |bits_keep: usize, bits_tr: usize| -> usize {
        let mut idx = 0usize;
        for (rank, &q) in sorted.iter().enumerate() {
            let bit = (bits_keep >> (sorted.len() - 1 - rank)) & 1;
            idx |= bit << pos(q);
        }
        for (rank, &q) in traced.iter().enumerate() {
            let bit = (bits_tr >> (traced.len() - 1 - rank)) & 1;
            idx |= bit << pos(q);
        }
        idx
    };

    let mut out = Mat::zeros(dk, dk);
    for r in 0..dk {
        for col in 0..dk {
            let mut acc = c(0.0, 0.0);
            for e in 0..dt {
                acc += m[(assemble(r, e), assemble(col, e))];
            }
            out[(r, col)] = acc;
        }
    }
    Ok(out)
}

/// Eigenvalues of a (near-)Hermitian matrix via the symmetrized part.
pub fn hermitian_eigenvalues(m: &Mat) -> Vec<f64> {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    h.symmetric_eigen().eigenvalues.iter().cloned().collect()
}

/// Hermitian eigendecomposition `(eigenvalues, eigenvectors)` of the
/// symmetrized part of `m`; column k of the matrix is the k-th vector.
pub fn hermitian_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let se = h.symmetric_eigen();
    (se.eigenvalues.iter().cloned().collect(), se.eigenvectors)
}

/// PSD square root via eigendecomposition, clamping small negatives to zero.
pub fn psd_sqrt(m: &Mat) -> Mat {
    let (vals, vecs) = hermitian_eigen(m);
    let d = m.nrows();
    let mut diag = Mat::zeros(d, d);
    for (k, &l) in vals.iter().enumerate() {
        diag[(k, k)] = c(l.max(0.0).sqrt(), 0.0);
    }
    &vecs * diag * vecs.adjoint()
}
