//! Linear-combination-of-unitaries mixing: matrix-free application of
//! `M = sum_j b_j U_j`, the coefficient parameterisation that keeps
//! `sum_j |b_j| = 1` structural, and an explicit PREP/SELECT block encoding
//! used only to verify the matrix-free path at small scale.

use num_complex::Complex64;

use crate::circuit::GateCircuit;
use crate::error::{Error, Result};
use crate::state::{DenseOperator, StateVector, DENSE_MAX_QUBITS};

/// Mixing coefficients in their unconstrained parameterisation.
///
/// The effective complex coefficients are `b_j = exp(i gamma_j) * a_j^2`
/// with `a = raw / ||raw||_2`, so `sum_j |b_j| = 1` holds by construction
/// and both the raw amplitudes and the phases can be optimized freely.
#[derive(Clone, Debug, PartialEq)]
pub struct LcuCoefficients {
    raw_amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

impl LcuCoefficients {
    pub fn new(raw_amplitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if raw_amplitudes.is_empty() {
            return Err(Error::InvalidArgument(
                "mixing requires at least one term".into(),
            ));
        }
        if raw_amplitudes.len() != phases.len() {
            return Err(Error::DimensionMismatch {
                context: "LcuCoefficients",
                left: raw_amplitudes.len(),
                right: phases.len(),
            });
        }
        Ok(Self {
            raw_amplitudes,
            phases,
        })
    }

    /// Number of mixed terms.
    pub fn len(&self) -> usize {
        self.raw_amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw_amplitudes.is_empty()
    }

    pub fn raw_amplitudes(&self) -> &[f64] {
        &self.raw_amplitudes
    }

    /// Mutable view for in-place optimizer updates (length is fixed).
    pub fn raw_amplitudes_mut(&mut self) -> &mut [f64] {
        &mut self.raw_amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Mutable view for in-place optimizer updates (length is fixed).
    pub fn phases_mut(&mut self) -> &mut [f64] {
        &mut self.phases
    }

    /// Normalized real amplitudes `a = raw / ||raw||_2`.
    pub fn normalized_amplitudes(&self) -> Result<Vec<f64>> {
        let norm = self
            .raw_amplitudes
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroAmplitudes);
        }
        Ok(self.raw_amplitudes.iter().map(|a| a / norm).collect())
    }

    /// Effective complex coefficients `b_j = exp(i gamma_j) * a_j^2`.
    pub fn effective(&self) -> Result<Vec<Complex64>> {
        let a = self.normalized_amplitudes()?;
        Ok(a.iter()
            .zip(self.phases.iter())
            .map(|(aj, gj)| Complex64::from_polar(aj * aj, *gj))
            .collect())
    }
}

/// A mixer `M = sum_j b_j U_j(theta_j)`: coefficients plus the per-term
/// circuits and their parameter vectors.
#[derive(Clone, Debug)]
pub struct BlockEncodingSpec {
    coeffs: LcuCoefficients,
    token_circuits: Vec<GateCircuit>,
    token_params: Vec<Vec<f64>>,
}

impl BlockEncodingSpec {
    pub fn new(
        coeffs: LcuCoefficients,
        token_circuits: Vec<GateCircuit>,
        token_params: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = coeffs.len();
        if token_circuits.len() != n {
            return Err(Error::DimensionMismatch {
                context: "BlockEncodingSpec circuits",
                left: token_circuits.len(),
                right: n,
            });
        }
        if token_params.len() != n {
            return Err(Error::DimensionMismatch {
                context: "BlockEncodingSpec params",
                left: token_params.len(),
                right: n,
            });
        }
        let q = token_circuits[0].num_qubits();
        for circ in &token_circuits {
            if circ.num_qubits() != q {
                return Err(Error::DimensionMismatch {
                    context: "BlockEncodingSpec qubit widths",
                    left: circ.num_qubits(),
                    right: q,
                });
            }
        }
        for (circ, params) in token_circuits.iter().zip(token_params.iter()) {
            if params.len() != circ.num_params() {
                return Err(Error::ParamCountMismatch {
                    got: params.len(),
                    expected: circ.num_params(),
                });
            }
        }
        Ok(Self {
            coeffs,
            token_circuits,
            token_params,
        })
    }

    /// Number of mixed unitaries (the context window size).
    pub fn window(&self) -> usize {
        self.coeffs.len()
    }

    /// Width of the data register.
    pub fn num_qubits(&self) -> usize {
        self.token_circuits[0].num_qubits()
    }

    pub fn coeffs(&self) -> &LcuCoefficients {
        &self.coeffs
    }

    pub fn token_circuits(&self) -> &[GateCircuit] {
        &self.token_circuits
    }

    pub fn token_params(&self) -> &[Vec<f64>] {
        &self.token_params
    }

    /// Matrix-free `M |state>`: the weighted sum of per-term unitary images,
    /// accumulated in term order so the reduction is bitwise deterministic.
    /// The result is generally unnormalized.
    pub fn apply_m(&self, state: &StateVector) -> Result<StateVector> {
        let b = self.coeffs.effective()?;
        let zero = Complex64::new(0.0, 0.0);
        let mut acc = StateVector::from_amplitudes(
            state.num_qubits(),
            vec![zero; state.dim()],
        )?;
        for ((bj, circ), params) in b
            .iter()
            .zip(self.token_circuits.iter())
            .zip(self.token_params.iter())
        {
            let image = circ.apply(params, state)?;
            acc.axpy(*bj, &image)?;
        }
        Ok(acc)
    }

    /// Matrix-free `M^dagger |state> = sum_j conj(b_j) U_j^dagger |state>`.
    pub fn apply_m_adjoint(&self, state: &StateVector) -> Result<StateVector> {
        let b = self.coeffs.effective()?;
        let zero = Complex64::new(0.0, 0.0);
        let mut acc = StateVector::from_amplitudes(
            state.num_qubits(),
            vec![zero; state.dim()],
        )?;
        for ((bj, circ), params) in b
            .iter()
            .zip(self.token_circuits.iter())
            .zip(self.token_params.iter())
        {
            let image = circ.apply_adjoint(params, state)?;
            acc.axpy(bj.conj(), &image)?;
        }
        Ok(acc)
    }

    /// `||M |0...0>||^2`, the probability that postselecting the control
    /// register succeeds after a single mixing step.
    pub fn postselection_prob_m(&self) -> Result<f64> {
        let zero = StateVector::zero_state(self.num_qubits())?;
        Ok(self.apply_m(&zero)?.norm_sqr())
    }

    /// Number of control qubits the explicit encoding uses
    /// (`ceil(log2 n)` after padding to a power of two).
    pub fn control_qubits(&self) -> usize {
        let padded = self.window().next_power_of_two();
        padded.trailing_zeros() as usize
    }

    /// Explicit `(PREP^dagger (x) I) SELECT (PREP (x) I)` construction on
    /// `control_qubits() + q` wires, with the control register on the high
    /// bits. Exists for verification only: its top-left `2^q` block must
    /// reproduce the matrix-free mixer.
    ///
    /// Windows that are not a power of two are padded with identity
    /// unitaries carrying zero coefficients. The phases `gamma_j` are
    /// realized inside SELECT, so PREP's first column is the real amplitude
    /// vector `a`.
    pub fn explicit_block_encoding(&self) -> Result<DenseOperator> {
        let n = self.window();
        let padded = n.next_power_of_two();
        let control = padded.trailing_zeros() as usize;
        let q = self.num_qubits();
        if control + q > DENSE_MAX_QUBITS {
            return Err(Error::DenseTooLarge {
                qubits: control + q,
                max_qubits: DENSE_MAX_QUBITS,
            });
        }
        let data_dim = 1usize << q;
        let full_dim = padded * data_dim;

        let mut a = self.coeffs.normalized_amplitudes()?;
        a.resize(padded, 0.0);
        let prep = unitary_with_first_column(&a)?;

        // SELECT = sum_m |m><m| (x) V_m, block-diagonal in the control index,
        // where V_m = exp(i gamma_m) U_m for real terms and identity for padding.
        let mut select = DenseOperator::zeros(full_dim)?;
        for m in 0..padded {
            let block = if m < n {
                let mut u = self.token_circuits[m].dense_matrix(&self.token_params[m])?;
                u.scale(Complex64::from_polar(1.0, self.coeffs.phases()[m]));
                u
            } else {
                DenseOperator::identity(data_dim)?
            };
            for r in 0..data_dim {
                for c in 0..data_dim {
                    select.set(m * data_dim + r, m * data_dim + c, block.get(r, c));
                }
            }
        }

        let data_identity = DenseOperator::identity(data_dim)?;
        let prep_wide = prep.kron(&data_identity)?;
        let unprep_wide = prep.dagger().kron(&data_identity)?;
        unprep_wide.matmul(&select.matmul(&prep_wide)?)
    }
}

/// Completes a real unit-norm first column into a dense unitary via
/// Gram-Schmidt over the standard basis.
fn unitary_with_first_column(column: &[f64]) -> Result<DenseOperator> {
    let dim = column.len();
    let norm: f64 = column.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized {
            norm,
            tolerance: 1e-10,
        });
    }
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    cols.push(column.iter().map(|x| Complex64::new(*x, 0.0)).collect());
    for i in 0..dim {
        if cols.len() == dim {
            break;
        }
        // Candidate e_i minus its projections onto the columns found so far.
        let mut w = vec![Complex64::new(0.0, 0.0); dim];
        w[i] = Complex64::new(1.0, 0.0);
        for col in &cols {
            let overlap = col[i].conj();
            for (wk, ck) in w.iter_mut().zip(col.iter()) {
                *wk -= overlap * ck;
            }
        }
        let residual: f64 = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if residual > 1e-8 {
            let inv = 1.0 / residual;
            for wk in &mut w {
                *wk *= inv;
            }
            cols.push(w);
        }
    }
    if cols.len() != dim {
        return Err(Error::NonFinite {
            context: "Gram-Schmidt completion failed to span".into(),
        });
    }
    let mut out = DenseOperator::zeros(dim)?;
    for (c, col) in cols.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            out.set(r, c, *v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{circuit14, GateKind};

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn effective_coefficients_match_reference_cases() {
        let single = LcuCoefficients::new(vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        let b = single.effective().unwrap();
        assert!((b[0] - c64(1.0, 0.0)).norm() < 1e-15);
        assert!((b[1] - c64(0.0, 0.0)).norm() < 1e-15);

        let phased =
            LcuCoefficients::new(vec![1.0, 1.0], vec![0.0, std::f64::consts::PI]).unwrap();
        let b = phased.effective().unwrap();
        assert!((b[0] - c64(0.5, 0.0)).norm() < 1e-15);
        assert!((b[1] - c64(-0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn effective_coefficients_have_unit_absolute_sum() {
        let coeffs =
            LcuCoefficients::new(vec![0.3, -1.2, 0.0, 2.5], vec![0.1, -2.0, 0.4, 1.0]).unwrap();
        let total: f64 = coeffs.effective().unwrap().iter().map(|b| b.norm()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_zero_amplitudes_are_rejected() {
        let coeffs = LcuCoefficients::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert!(matches!(coeffs.effective(), Err(Error::ZeroAmplitudes)));
    }

    fn identity_spec(n: usize, q: usize, raw: Vec<f64>, phases: Vec<f64>) -> BlockEncodingSpec {
        let circuits: Vec<GateCircuit> = (0..n).map(|_| GateCircuit::new(q).unwrap()).collect();
        let params = vec![Vec::new(); n];
        BlockEncodingSpec::new(
            LcuCoefficients::new(raw, phases).unwrap(),
            circuits,
            params,
        )
        .unwrap()
    }

    fn ring_spec(n: usize, q: usize, seed: u64) -> BlockEncodingSpec {
        // Deterministic pseudo-random parameters without pulling in an RNG.
        let mut x = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        let mut next = move || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x as f64 / u64::MAX as f64) * 4.0 - 2.0
        };
        let circuits: Vec<GateCircuit> = (0..n).map(|_| circuit14(q, 1).unwrap()).collect();
        let params: Vec<Vec<f64>> = circuits
            .iter()
            .map(|c| (0..c.num_params()).map(|_| next()).collect())
            .collect();
        let raw: Vec<f64> = (0..n).map(|_| next()).collect();
        let phases: Vec<f64> = (0..n).map(|_| next()).collect();
        BlockEncodingSpec::new(
            LcuCoefficients::new(raw, phases).unwrap(),
            circuits,
            params,
        )
        .unwrap()
    }

    #[test]
    fn single_identity_term_leaves_state_unchanged() {
        let spec = identity_spec(1, 2, vec![1.0], vec![0.0]);
        let state = StateVector::basis_state(2, 3).unwrap();
        let out = spec.apply_m(&state).unwrap();
        assert!(out.max_abs_diff(&state) < 1e-15);
        assert!((spec.postselection_prob_m().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_terms_scale_by_coefficient_sum() {
        let spec = identity_spec(
            3,
            2,
            vec![1.0, 1.0, 1.0],
            vec![0.0, std::f64::consts::FRAC_PI_2, 0.0],
        );
        let b = spec.coeffs().effective().unwrap();
        let total: Complex64 = b.iter().sum();
        let state = StateVector::basis_state(2, 1).unwrap();
        let out = spec.apply_m(&state).unwrap();
        let mut expected = state.clone();
        expected.scale(total);
        assert!(out.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn apply_m_matches_dense_sum_of_unitaries() {
        let spec = ring_spec(3, 2, 7);
        let b = spec.coeffs().effective().unwrap();
        let mut dense = DenseOperator::zeros(4).unwrap();
        for (j, bj) in b.iter().enumerate() {
            let u = spec.token_circuits()[j]
                .dense_matrix(&spec.token_params()[j])
                .unwrap();
            dense.add_scaled(*bj, &u).unwrap();
        }
        for idx in 0..4 {
            let basis = StateVector::basis_state(2, idx).unwrap();
            let free = spec.apply_m(&basis).unwrap();
            let via_dense = dense.apply(&basis).unwrap();
            assert!(free.max_abs_diff(&via_dense) < 1e-13, "column {idx}");
        }
    }

    #[test]
    fn adjoint_satisfies_defining_property() {
        let spec = ring_spec(4, 3, 11);
        let mut phi = StateVector::basis_state(3, 2).unwrap();
        let mut psi = StateVector::basis_state(3, 5).unwrap();
        // Make the vectors less trivial.
        phi.axpy(c64(0.3, -0.4), &StateVector::basis_state(3, 7).unwrap())
            .unwrap();
        psi.axpy(c64(-0.2, 0.9), &StateVector::basis_state(3, 0).unwrap())
            .unwrap();
        let lhs = phi.inner_product(&spec.apply_m(&psi).unwrap()).unwrap();
        let rhs = spec
            .apply_m_adjoint(&phi)
            .unwrap()
            .inner_product(&psi)
            .unwrap();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn mixing_never_grows_the_norm() {
        let spec = ring_spec(5, 3, 23);
        let state = StateVector::basis_state(3, 4).unwrap();
        let out = spec.apply_m(&state).unwrap();
        assert!(out.norm() <= 1.0 + 1e-10);
    }

    #[test]
    fn explicit_encoding_top_block_is_identity_for_identity_terms() {
        for raw in [vec![1.0, 0.0], vec![1.0, 1.0]] {
            let spec = identity_spec(2, 2, raw, vec![0.0, 0.0]);
            let encoding = spec.explicit_block_encoding().unwrap();
            assert!(encoding.is_unitary(1e-10));
            let block = encoding.block(0, 0, 4).unwrap();
            let id = DenseOperator::identity(4).unwrap();
            assert!(block.max_abs_diff(&id) < 1e-10);
        }
    }

    #[test]
    fn explicit_encoding_reproduces_matrix_free_mixer() {
        // Includes a non-power-of-two window to exercise the padding rule.
        for (n, q, seed) in [(4, 2, 3), (3, 2, 5), (2, 3, 9)] {
            let spec = ring_spec(n, q, seed);
            let encoding = spec.explicit_block_encoding().unwrap();
            assert!(encoding.is_unitary(1e-10), "n={n} q={q}");
            let dim = 1usize << q;
            let block = encoding.block(0, 0, dim).unwrap();
            for col in 0..dim {
                let basis = StateVector::basis_state(q, col).unwrap();
                let expected = spec.apply_m(&basis).unwrap();
                for row in 0..dim {
                    let got = block.get(row, col);
                    let want = expected.amplitudes()[row];
                    assert!(
                        (got - want).norm() < 1e-10,
                        "n={n} q={q} entry ({row},{col}): {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn explicit_encoding_respects_dense_size_limit() {
        let spec = ring_spec(2, 12, 1);
        assert!(matches!(
            spec.explicit_block_encoding(),
            Err(Error::DenseTooLarge { .. })
        ));
    }

    #[test]
    fn postselection_prob_stays_in_unit_interval() {
        for seed in 0..20 {
            let spec = ring_spec(4, 2, seed);
            let p = spec.postselection_prob_m().unwrap();
            assert!((0.0..=1.0 + 1e-10).contains(&p), "p = {p}");
        }
    }

    #[test]
    fn spec_construction_validates_shapes() {
        let coeffs = LcuCoefficients::new(vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let circuits = vec![GateCircuit::new(2).unwrap()];
        assert!(BlockEncodingSpec::new(coeffs.clone(), circuits, vec![Vec::new()]).is_err());

        let mut with_param = GateCircuit::new(2).unwrap();
        with_param.push_rotation(GateKind::Ry, 0).unwrap();
        let circuits = vec![GateCircuit::new(2).unwrap(), with_param];
        assert!(BlockEncodingSpec::new(coeffs, circuits, vec![Vec::new(), Vec::new()]).is_err());
    }
}
