//! Polynomial transformation of the mixer: matrix-free evaluation of
//! `P(M)|psi>` by iterated mixing, parity bookkeeping for the two-branch
//! hardware construction, an exhaustive term-enumeration oracle used in
//! verification, and the post-hoc feasibility report for trained
//! coefficients.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lcu::BlockEncodingSpec;
use crate::state::StateVector;

/// Work budget for the exhaustive enumeration oracle: at most `n^d` terms.
pub const ENUMERATION_BUDGET: u128 = 100_000;

/// A real polynomial `P(x) = c_d x^d + ... + c_1 x + c_0`, stored
/// lowest-degree first; the degree is at least 1.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialSpec {
    coefficients: Vec<f64>,
}

impl PolynomialSpec {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() < 2 {
            return Err(Error::InvalidArgument(
                "polynomial must have degree at least 1".into(),
            ));
        }
        Ok(Self { coefficients })
    }

    /// Coefficients `c_0..c_d`, lowest-degree first.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Mutable view for in-place optimizer updates (length is fixed).
    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Scalar evaluation by Horner's rule.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c)
    }

    /// Splits into `(odd part, even part)`, each zero-padded to the input's
    /// degree, so the two parts sum back to the original coefficientwise.
    pub fn parity_split(&self) -> (PolynomialSpec, PolynomialSpec) {
        let mut odd = vec![0.0; self.coefficients.len()];
        let mut even = vec![0.0; self.coefficients.len()];
        for (k, c) in self.coefficients.iter().enumerate() {
            if k % 2 == 1 {
                odd[k] = *c;
            } else {
                even[k] = *c;
            }
        }
        (
            PolynomialSpec { coefficients: odd },
            PolynomialSpec { coefficients: even },
        )
    }

    /// Max of `|P(x)|` over a uniform grid on [-1, 1] including both
    /// endpoints. Exceeding 1 means the trained polynomial is outside the
    /// region a singular-value transform can realize directly; the value is
    /// reported, never enforced.
    ///
    /// Panics if `grid_points < 2`.
    pub fn sup_norm(&self, grid_points: usize) -> f64 {
        assert!(grid_points >= 2, "sup-norm grid needs at least two points");
        let step = 2.0 / (grid_points - 1) as f64;
        let mut max = 0.0f64;
        for i in 0..grid_points {
            let x = -1.0 + step * i as f64;
            max = max.max(self.evaluate(x).abs());
        }
        max
    }
}

/// `P(M)|state>` together with the intermediate powers `M^k |state>` for
/// `k = 0..d`. The powers are what a gradient pass replays, so they are
/// returned rather than recomputed.
pub fn apply_polynomial_states(
    poly: &PolynomialSpec,
    spec: &BlockEncodingSpec,
    state: &StateVector,
) -> Result<(Vec<StateVector>, StateVector)> {
    let c = poly.coefficients();
    let mut powers = Vec::with_capacity(c.len());
    powers.push(state.clone());
    let mut acc = state.clone();
    acc.scale(Complex64::new(c[0], 0.0));
    for ck in &c[1..] {
        let next = spec.apply_m(powers.last().expect("nonempty"))?;
        acc.axpy(Complex64::new(*ck, 0.0), &next)?;
        powers.push(next);
    }
    Ok((powers, acc))
}

/// `P(M)|state>` evaluated by power accumulation: `v_{k+1} = M v_k`,
/// accumulating `sum_k c_k v_k`. Costs `d` mixing applications.
pub fn apply_polynomial(
    poly: &PolynomialSpec,
    spec: &BlockEncodingSpec,
    state: &StateVector,
) -> Result<StateVector> {
    let (_, result) = apply_polynomial_states(poly, spec, state)?;
    Ok(result)
}

/// Exhaustive expansion of `P(M)|state>` as the weighted sum over all
/// ordered unitary compositions of each length `k <= d` (every skip-k-gram
/// of the window), plus the constant term. Verification-only: requires
/// `n^d <= ENUMERATION_BUDGET`; must agree with [`apply_polynomial`].
pub fn skipgram_expansion_oracle(
    poly: &PolynomialSpec,
    spec: &BlockEncodingSpec,
    state: &StateVector,
) -> Result<StateVector> {
    let n = spec.window() as u128;
    let required = n
        .checked_pow(poly.degree() as u32)
        .unwrap_or(u128::MAX);
    if required > ENUMERATION_BUDGET {
        return Err(Error::EnumerationBudget {
            required,
            budget: ENUMERATION_BUDGET,
        });
    }
    let b = spec.coeffs().effective()?;
    let c = poly.coefficients();
    let mut acc = state.clone();
    acc.scale(Complex64::new(c[0], 0.0));
    skipgram_recurse(spec, &b, c, 0, state, &mut acc)?;
    Ok(acc)
}

/// Depth-first enumeration sharing composition suffixes: `current` holds the
/// weighted image of one length-`depth` composition; each recursion level
/// extends it on the left by one more weighted unitary and adds the
/// `c_{depth+1}`-weighted result into `acc`.
fn skipgram_recurse(
    spec: &BlockEncodingSpec,
    b: &[Complex64],
    coeffs: &[f64],
    depth: usize,
    current: &StateVector,
    acc: &mut StateVector,
) -> Result<()> {
    if depth + 1 >= coeffs.len() {
        return Ok(());
    }
    for j in 0..spec.window() {
        let mut image =
            spec.token_circuits()[j].apply(&spec.token_params()[j], current)?;
        image.scale(b[j]);
        acc.axpy(Complex64::new(coeffs[depth + 1], 0.0), &image)?;
        skipgram_recurse(spec, b, coeffs, depth + 1, &image, acc)?;
    }
    Ok(())
}

/// `|| P(M) |0...0> ||^2`: the probability that the full postselected
/// preparation of the polynomial-transformed state succeeds.
pub fn final_postselection_prob(
    poly: &PolynomialSpec,
    spec: &BlockEncodingSpec,
) -> Result<f64> {
    let zero = StateVector::zero_state(spec.num_qubits())?;
    Ok(apply_polynomial(poly, spec, &zero)?.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{circuit14, GateCircuit};
    use crate::lcu::LcuCoefficients;
    use crate::state::DenseOperator;

    fn ring_spec(n: usize, q: usize, seed: u64) -> BlockEncodingSpec {
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

    fn random_state(q: usize, seed: u64) -> StateVector {
        let mut x = seed.wrapping_mul(0xD1B54A32D192ED03).wrapping_add(5);
        let mut next = move || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        let amps: Vec<Complex64> = (0..1usize << q)
            .map(|_| Complex64::new(next(), next()))
            .collect();
        StateVector::from_amplitudes(q, amps)
            .unwrap()
            .normalized()
            .unwrap()
    }

    fn dense_mixer(spec: &BlockEncodingSpec) -> DenseOperator {
        let b = spec.coeffs().effective().unwrap();
        let mut m = DenseOperator::zeros(1 << spec.num_qubits()).unwrap();
        for (j, bj) in b.iter().enumerate() {
            let u = spec.token_circuits()[j]
                .dense_matrix(&spec.token_params()[j])
                .unwrap();
            m.add_scaled(*bj, &u).unwrap();
        }
        m
    }

    #[test]
    fn degree_must_be_at_least_one() {
        assert!(PolynomialSpec::new(vec![1.0]).is_err());
        assert!(PolynomialSpec::new(vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn horner_evaluation_matches_naive_powers() {
        let poly = PolynomialSpec::new(vec![0.5, -1.0, 2.0, 0.25]).unwrap();
        for x in [-1.0f64, -0.3, 0.0, 0.7, 1.0] {
            let naive: f64 = poly
                .coefficients()
                .iter()
                .enumerate()
                .map(|(k, c)| c * x.powi(k as i32))
                .sum();
            assert!((poly.evaluate(x) - naive).abs() < 1e-14);
        }
    }

    #[test]
    fn linear_polynomial_reduces_to_one_mixing_step() {
        let spec = ring_spec(4, 2, 3);
        let poly = PolynomialSpec::new(vec![0.0, 1.0]).unwrap();
        let state = random_state(2, 1);
        let via_poly = apply_polynomial(&poly, &spec, &state).unwrap();
        let via_m = spec.apply_m(&state).unwrap();
        assert!(via_poly.max_abs_diff(&via_m) < 1e-13);
    }

    #[test]
    fn constant_polynomial_leaves_state_unchanged() {
        let spec = ring_spec(3, 2, 5);
        let poly = PolynomialSpec::new(vec![1.0, 0.0]).unwrap();
        let state = random_state(2, 2);
        let out = apply_polynomial(&poly, &spec, &state).unwrap();
        assert!(out.max_abs_diff(&state) < 1e-14);
    }

    #[test]
    fn pure_power_equals_repeated_mixing() {
        let spec = ring_spec(3, 3, 8);
        let d = 3;
        let mut coeffs = vec![0.0; d + 1];
        coeffs[d] = 1.0;
        let poly = PolynomialSpec::new(coeffs).unwrap();
        let state = random_state(3, 4);
        let via_poly = apply_polynomial(&poly, &spec, &state).unwrap();
        let mut repeated = state.clone();
        for _ in 0..d {
            repeated = spec.apply_m(&repeated).unwrap();
        }
        assert!(via_poly.max_abs_diff(&repeated) < 1e-12);
    }

    #[test]
    fn application_is_linear_in_coefficients() {
        let spec = ring_spec(4, 2, 13);
        let state = random_state(2, 9);
        let ca = vec![0.3, -0.6, 0.9, 0.1];
        let cb = vec![-0.2, 0.5, 0.0, 0.8];
        let sum: Vec<f64> = ca.iter().zip(cb.iter()).map(|(a, b)| a + b).collect();
        let via_sum =
            apply_polynomial(&PolynomialSpec::new(sum).unwrap(), &spec, &state).unwrap();
        let mut via_parts =
            apply_polynomial(&PolynomialSpec::new(ca).unwrap(), &spec, &state).unwrap();
        via_parts
            .axpy(
                Complex64::new(1.0, 0.0),
                &apply_polynomial(&PolynomialSpec::new(cb).unwrap(), &spec, &state).unwrap(),
            )
            .unwrap();
        assert!(via_sum.max_abs_diff(&via_parts) < 1e-12);
    }

    #[test]
    fn cubic_matches_dense_polynomial_oracle() {
        let spec = ring_spec(4, 3, 17);
        let poly = PolynomialSpec::new(vec![0.2, -0.7, 1.1, 0.5]).unwrap();
        let state = random_state(3, 6);

        let m = dense_mixer(&spec);
        let dim = m.dim();
        let mut dense_poly = DenseOperator::identity(dim).unwrap();
        dense_poly.scale(Complex64::new(poly.coefficients()[0], 0.0));
        let mut power = DenseOperator::identity(dim).unwrap();
        for ck in &poly.coefficients()[1..] {
            power = m.matmul(&power).unwrap();
            dense_poly
                .add_scaled(Complex64::new(*ck, 0.0), &power)
                .unwrap();
        }

        let via_free = apply_polynomial(&poly, &spec, &state).unwrap();
        let via_dense = dense_poly.apply(&state).unwrap();
        assert!(via_free.max_abs_diff(&via_dense) < 1e-10);
    }

    #[test]
    fn parity_split_partitions_coefficients() {
        let poly = PolynomialSpec::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (odd, even) = poly.parity_split();
        assert_eq!(odd.coefficients(), &[0.0, 2.0, 0.0, 4.0]);
        assert_eq!(even.coefficients(), &[1.0, 0.0, 3.0, 0.0]);

        let even_input = PolynomialSpec::new(vec![2.0, 0.0, -1.0]).unwrap();
        let (odd_part, _) = even_input.parity_split();
        assert!(odd_part.coefficients().iter().all(|c| *c == 0.0));
    }

    #[test]
    fn parity_parts_recombine_exactly() {
        let poly = PolynomialSpec::new(vec![0.12, -3.4, 0.0, 7.7, -0.5]).unwrap();
        let (odd, even) = poly.parity_split();
        for ((o, e), c) in odd
            .coefficients()
            .iter()
            .zip(even.coefficients())
            .zip(poly.coefficients())
        {
            assert_eq!(o + e, *c);
        }
    }

    #[test]
    fn sup_norm_reference_values() {
        let identity = PolynomialSpec::new(vec![0.0, 1.0]).unwrap();
        assert!((identity.sup_norm(101) - 1.0).abs() < 1e-14);
        let steep = PolynomialSpec::new(vec![0.0, 0.0, 2.0]).unwrap();
        assert!((steep.sup_norm(11) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn skipgram_enumeration_matches_linear_formula() {
        let spec = ring_spec(3, 2, 19);
        let poly = PolynomialSpec::new(vec![0.4, -1.2]).unwrap();
        let state = random_state(2, 3);
        let b = spec.coeffs().effective().unwrap();
        let mut expected = state.clone();
        expected.scale(Complex64::new(0.4, 0.0));
        for j in 0..3 {
            let image = spec.token_circuits()[j]
                .apply(&spec.token_params()[j], &state)
                .unwrap();
            expected
                .axpy(Complex64::new(-1.2, 0.0) * b[j], &image)
                .unwrap();
        }
        let out = skipgram_expansion_oracle(&poly, &spec, &state).unwrap();
        assert!(out.max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn skipgram_enumeration_matches_iterated_mixing() {
        let spec = ring_spec(3, 3, 29);
        let poly = PolynomialSpec::new(vec![0.3, -0.8, 0.6, 1.4]).unwrap();
        let state = random_state(3, 12);
        let via_enumeration = skipgram_expansion_oracle(&poly, &spec, &state).unwrap();
        let via_iteration = apply_polynomial(&poly, &spec, &state).unwrap();
        assert!(via_enumeration.max_abs_diff(&via_iteration) < 1e-10);
    }

    #[test]
    fn skipgram_enumeration_enforces_budget() {
        let spec = ring_spec(60, 2, 31);
        let poly = PolynomialSpec::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let state = random_state(2, 7);
        assert!(matches!(
            skipgram_expansion_oracle(&poly, &spec, &state),
            Err(Error::EnumerationBudget { .. })
        ));
    }

    #[test]
    fn final_postselection_reference_values() {
        let spec = ring_spec(3, 2, 37);
        let constant = PolynomialSpec::new(vec![1.0, 0.0]).unwrap();
        assert!((final_postselection_prob(&constant, &spec).unwrap() - 1.0).abs() < 1e-12);

        let single = BlockEncodingSpec::new(
            LcuCoefficients::new(vec![1.0], vec![0.0]).unwrap(),
            vec![circuit14(2, 1).unwrap()],
            vec![vec![0.7; 8]],
        )
        .unwrap();
        let linear = PolynomialSpec::new(vec![0.0, 1.0]).unwrap();
        assert!((final_postselection_prob(&linear, &single).unwrap() - 1.0).abs() < 1e-12);

        for seed in 0..10 {
            let spec = ring_spec(4, 2, 41 + seed);
            let poly = PolynomialSpec::new(vec![0.1, 0.2, -0.9, 0.4]).unwrap();
            assert!(final_postselection_prob(&poly, &spec).unwrap() >= 0.0);
        }
    }
}
