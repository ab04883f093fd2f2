//! Dense complex statevectors and small dense operators.
//!
//! Basis-state indexing is little-endian throughout the crate: qubit `k`
//! corresponds to bit `k` of the basis index, so for three qubits the index
//! 6 = 0b110 denotes qubit 0 in |0>, qubits 1 and 2 in |1>.

use num_complex::Complex64;

use crate::circuit::{PauliAxis, PauliObservable};
use crate::error::{Error, Result};

/// Largest register for which dense matrix realizations are supported.
pub const DENSE_MAX_QUBITS: usize = 12;

/// Norm below which a state scheduled for renormalization is rejected as
/// numerically meaningless.
pub const DEGENERATE_NORM_THRESHOLD: f64 = 1e-12;

/// Tolerance used when checking that a state is normalized.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// A pure state of `num_qubits` qubits stored as a dense amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The computational basis state `|index>` of a `num_qubits` register.
    pub fn basis_state(num_qubits: usize, index: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidArgument(
                "state must have at least one qubit".into(),
            ));
        }
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::BasisIndexOutOfRange {
                index,
                num_qubits,
                dim,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    /// The all-zeros state `|0...0>`.
    pub fn zero_state(num_qubits: usize) -> Result<Self> {
        Self::basis_state(num_qubits, 0)
    }

    /// Builds a state from explicit amplitudes; the length must be `2^num_qubits`.
    ///
    /// No normalization is imposed: intermediate vectors (for example the
    /// output of a non-unitary mixing step) are representable on purpose.
    pub fn from_amplitudes(num_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidArgument(
                "state must have at least one qubit".into(),
            ));
        }
        let dim = 1usize << num_qubits;
        if amps.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "from_amplitudes",
                left: amps.len(),
                right: dim,
            });
        }
        Ok(Self { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Dimension of the amplitude vector, `2^num_qubits`.
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// Euclidean norm of the amplitude vector.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Squared Euclidean norm, `sum_i |amp_i|^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Whether the norm is within [`NORM_TOLERANCE`] of 1.
    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOLERANCE
    }

    /// Returns the unit-norm rescaling of this state.
    ///
    /// Fails with [`Error::DegenerateState`] when the norm is below
    /// [`DEGENERATE_NORM_THRESHOLD`]; callers must not silently renormalize
    /// a vector that has collapsed to numerical noise.
    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if norm < DEGENERATE_NORM_THRESHOLD {
            return Err(Error::DegenerateState {
                norm,
                threshold: DEGENERATE_NORM_THRESHOLD,
            });
        }
        let inv = 1.0 / norm;
        let amps = self.amps.iter().map(|a| a * inv).collect();
        Ok(Self {
            num_qubits: self.num_qubits,
            amps,
        })
    }

    /// `<self|other>`, conjugate-linear in `self`, linear in `other`.
    pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                context: "inner_product",
                left: self.dim(),
                right: other.dim(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.amps.iter().zip(other.amps.iter()) {
            acc += a.conj() * b;
        }
        Ok(acc)
    }

    /// In-place `self += alpha * x`.
    pub fn axpy(&mut self, alpha: Complex64, x: &Self) -> Result<()> {
        if self.dim() != x.dim() {
            return Err(Error::DimensionMismatch {
                context: "axpy",
                left: self.dim(),
                right: x.dim(),
            });
        }
        for (y, xv) in self.amps.iter_mut().zip(x.amps.iter()) {
            *y += alpha * xv;
        }
        Ok(())
    }

    /// In-place multiplication by a complex scalar.
    pub fn scale(&mut self, alpha: Complex64) {
        for a in &mut self.amps {
            *a *= alpha;
        }
    }

    /// Expectation value `<self| P |self>` of a single-qubit Pauli observable.
    ///
    /// The caller must pass a normalized state. The imaginary part of the
    /// raw sum is a pure rounding residue for Hermitian observables; it is
    /// asserted tiny and discarded.
    pub fn expectation(&self, observable: &PauliObservable) -> Result<f64> {
        let q = observable.qubit;
        if q >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: q,
                num_qubits: self.num_qubits,
            });
        }
        let mask = 1usize << q;
        let mut acc = Complex64::new(0.0, 0.0);
        match observable.axis {
            PauliAxis::X => {
                for (i, a) in self.amps.iter().enumerate() {
                    acc += a.conj() * self.amps[i ^ mask];
                }
            }
            PauliAxis::Y => {
                // (Y psi)_i = -i psi_{i+mask} when bit q of i is 0, and
                // +i psi_{i-mask} when it is 1.
                for (i, a) in self.amps.iter().enumerate() {
                    let sign = if i & mask == 0 {
                        Complex64::new(0.0, -1.0)
                    } else {
                        Complex64::new(0.0, 1.0)
                    };
                    acc += a.conj() * sign * self.amps[i ^ mask];
                }
            }
            PauliAxis::Z => {
                for (i, a) in self.amps.iter().enumerate() {
                    if i & mask == 0 {
                        acc += a.norm_sqr();
                    } else {
                        acc -= a.norm_sqr();
                    }
                }
            }
        }
        debug_assert!(
            acc.im.abs() <= 1e-10,
            "Pauli expectation gained an imaginary residue: {}",
            acc.im
        );
        Ok(acc.re)
    }

    /// Largest entrywise amplitude difference against another state.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// A dense square operator on at most [`DENSE_MAX_QUBITS`] qubits,
/// stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    dim: usize,
    entries: Vec<Complex64>,
}

impl DenseOperator {
    fn check_dim(dim: usize) -> Result<()> {
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::NotPowerOfTwo { dim });
        }
        let max = 1usize << DENSE_MAX_QUBITS;
        if dim > max {
            return Err(Error::DenseTooLarge {
                qubits: dim.trailing_zeros() as usize,
                max_qubits: DENSE_MAX_QUBITS,
            });
        }
        Ok(())
    }

    /// The zero operator of the given power-of-two dimension.
    pub fn zeros(dim: usize) -> Result<Self> {
        Self::check_dim(dim)?;
        Ok(Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        })
    }

    /// The identity operator of the given power-of-two dimension.
    pub fn identity(dim: usize) -> Result<Self> {
        let mut op = Self::zeros(dim)?;
        for i in 0..dim {
            op.entries[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Ok(op)
    }

    /// Builds an operator from row-major entries of length `dim * dim`.
    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        Self::check_dim(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                context: "from_entries",
                left: entries.len(),
                right: dim * dim,
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.entries[row * self.dim + col] = value;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "matvec",
                left: v.len(),
                right: self.dim,
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.entries[r * self.dim..(r + 1) * self.dim];
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, x) in row.iter().zip(v.iter()) {
                acc += m * x;
            }
            *o = acc;
        }
        Ok(out)
    }

    /// Applies the operator to a state, producing a new (possibly unnormalized) state.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        let amps = self.matvec(state.amplitudes())?;
        StateVector::from_amplitudes(state.num_qubits(), amps)
    }

    /// Naive cubic matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                context: "matmul",
                left: self.dim,
                right: rhs.dim,
            });
        }
        let n = self.dim;
        let mut out = Self::zeros(n)?;
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let rhs_row = &rhs.entries[k * n..(k + 1) * n];
                let out_row = &mut out.entries[i * n..(i + 1) * n];
                for (o, b) in out_row.iter_mut().zip(rhs_row.iter()) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let n = self.dim;
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for c in 0..n {
                entries[c * n + r] = self.entries[r * n + c].conj();
            }
        }
        Self { dim: n, entries }
    }

    /// Kronecker product `self (x) rhs`; the left factor occupies the high bits.
    pub fn kron(&self, rhs: &Self) -> Result<Self> {
        let dim = self
            .dim
            .checked_mul(rhs.dim)
            .ok_or(Error::NotPowerOfTwo { dim: usize::MAX })?;
        Self::check_dim(dim)?;
        let mut out = Self::zeros(dim)?;
        for ar in 0..self.dim {
            for ac in 0..self.dim {
                let a = self.entries[ar * self.dim + ac];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for br in 0..rhs.dim {
                    for bc in 0..rhs.dim {
                        let v = a * rhs.entries[br * rhs.dim + bc];
                        out.entries[(ar * rhs.dim + br) * dim + (ac * rhs.dim + bc)] = v;
                    }
                }
            }
        }
        Ok(out)
    }

    /// In-place `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: Complex64, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                context: "add_scaled",
                left: self.dim,
                right: other.dim,
            });
        }
        for (a, b) in self.entries.iter_mut().zip(other.entries.iter()) {
            *a += alpha * b;
        }
        Ok(())
    }

    /// In-place multiplication by a complex scalar.
    pub fn scale(&mut self, alpha: Complex64) {
        for e in &mut self.entries {
            *e *= alpha;
        }
    }

    /// Extracts the square sub-block of the given size at `(row0, col0)`.
    pub fn block(&self, row0: usize, col0: usize, size: usize) -> Result<Self> {
        if row0 + size > self.dim || col0 + size > self.dim {
            return Err(Error::DimensionMismatch {
                context: "block",
                left: row0.max(col0) + size,
                right: self.dim,
            });
        }
        let mut out = Self::zeros(size)?;
        for r in 0..size {
            for c in 0..size {
                out.entries[r * size + c] = self.entries[(row0 + r) * self.dim + (col0 + c)];
            }
        }
        Ok(out)
    }

    /// Largest entrywise difference against another operator.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Whether `self^dagger * self` is entrywise within `tol` of the identity.
    pub fn is_unitary(&self, tol: f64) -> bool {
        let gram = match self.dagger().matmul(self) {
            Ok(g) => g,
            Err(_) => return false,
        };
        let id = DenseOperator::identity(self.dim).expect("dim already validated");
        gram.max_abs_diff(&id) <= tol
    }
}
