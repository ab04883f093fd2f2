//! Independent verification oracles and the property suites behind the
//! `verify` command.
//!
//! Every suite checks the production code against a second route computed
//! here from first principles: circuit matrices assembled by Kronecker
//! products instead of in-place amplitude updates, mixtures summed as dense
//! matrices, postselection probabilities expanded into pairwise overlaps,
//! singular values from a hand-rolled Hermitian Jacobi eigensolver, and
//! gradients against central finite differences. The generators and oracles
//! are public so integration tests can pin their own tolerances.

use std::time::Instant;

use num_complex::Complex64;

use crate::circuit::{circuit14, GateCircuit, GateKind, PauliAxis};
use crate::error::{Error, Result};
use crate::grad;
use crate::lcu::{BlockEncodingSpec, LcuCoefficients};
use crate::model::{ModelConfig, QuixerModel};
use crate::qsvt::{
    apply_polynomial, final_postselection_prob, skipgram_expansion_oracle, PolynomialSpec,
};
use crate::resources::{
    control_qubit_count, estimate, multicontrolled_gate_count, qubit_count, ResourceQuery,
};
use crate::state::{DenseOperator, StateVector};

/// Outcome of one verification suite.
#[derive(Clone, Debug)]
pub struct PropertyReport {
    pub name: String,
    pub passed: bool,
    pub details: String,
    pub runtime_secs: f64,
}

impl std::fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {} ({:.2}s) — {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.runtime_secs,
            self.details
        )
    }
}

/// How many random instances the suites draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyScale {
    /// Quick smoke scale (seconds).
    Small,
    /// Acceptance scale with the documented instance counts.
    Full,
}

/// Deterministic splitmix64 generator for instance sampling, independent of
/// any external RNG crate so oracle inputs are reproducible byte-for-byte.
#[derive(Clone, Debug)]
pub struct InstanceRng(u64);

impl InstanceRng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform double in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let unit = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * unit
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

fn pauli_block(axis: PauliAxis) -> DenseOperator {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let entries = match axis {
        PauliAxis::X => vec![zero, one, one, zero],
        PauliAxis::Y => vec![zero, -i, i, zero],
        PauliAxis::Z => vec![one, zero, zero, -one],
    };
    DenseOperator::from_entries(2, entries).expect("2x2")
}

/// Reference rotation block exp(-i theta A / 2) = cos(theta/2) I - i sin(theta/2) A.
fn rotation_block_reference(axis: PauliAxis, theta: f64) -> DenseOperator {
    let mut block = DenseOperator::identity(2).expect("2x2");
    block.scale(Complex64::new((theta / 2.0).cos(), 0.0));
    block
        .add_scaled(Complex64::new(0.0, -(theta / 2.0).sin()), &pauli_block(axis))
        .expect("2x2");
    block
}

fn projector_block(value: usize) -> DenseOperator {
    let mut p = DenseOperator::zeros(2).expect("2x2");
    p.set(value, value, Complex64::new(1.0, 0.0));
    p
}

/// Embeds 2x2 blocks at the given qubits (identity elsewhere) by folding
/// Kronecker products from the highest qubit down.
fn embed_factors(num_qubits: usize, factors: &[(usize, &DenseOperator)]) -> Result<DenseOperator> {
    let mut acc = DenseOperator::identity(1)?;
    for k in (0..num_qubits).rev() {
        let factor = match factors.iter().find(|(qubit, _)| *qubit == k) {
            Some((_, block)) => (*block).clone(),
            None => DenseOperator::identity(2)?,
        };
        acc = acc.kron(&factor)?;
    }
    Ok(acc)
}

/// Circuit unitary assembled gate by gate from Kronecker products — an
/// independent route to the same matrix the amplitude-update simulator
/// realizes.
pub fn circuit_matrix_via_kron(circuit: &GateCircuit, params: &[f64]) -> Result<DenseOperator> {
    if params.len() != circuit.num_params() {
        return Err(Error::ParamCountMismatch {
            got: params.len(),
            expected: circuit.num_params(),
        });
    }
    let q = circuit.num_qubits();
    let mut total = DenseOperator::identity(1 << q)?;
    for gate in circuit.gates() {
        let theta = gate.param_slot.map(|slot| params[slot]);
        let op = match gate.kind {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => {
                let axis = match gate.kind {
                    GateKind::Rx => PauliAxis::X,
                    GateKind::Ry => PauliAxis::Y,
                    _ => PauliAxis::Z,
                };
                let block = rotation_block_reference(axis, theta.expect("rotation has a slot"));
                embed_factors(q, &[(gate.target, &block)])?
            }
            GateKind::Crx | GateKind::Cry | GateKind::Crz | GateKind::Cx => {
                let block = match gate.kind {
                    GateKind::Crx => rotation_block_reference(PauliAxis::X, theta.unwrap()),
                    GateKind::Cry => rotation_block_reference(PauliAxis::Y, theta.unwrap()),
                    GateKind::Crz => rotation_block_reference(PauliAxis::Z, theta.unwrap()),
                    _ => pauli_block(PauliAxis::X),
                };
                let control = gate.control.expect("controlled gate has a control");
                let p0 = projector_block(0);
                let p1 = projector_block(1);
                let mut op = embed_factors(q, &[(control, &p0)])?;
                let active = embed_factors(q, &[(control, &p1), (gate.target, &block)])?;
                op.add_scaled(Complex64::new(1.0, 0.0), &active)?;
                op
            }
            GateKind::GlobalPhase => {
                let mut op = DenseOperator::identity(1 << q)?;
                op.scale(Complex64::from_polar(1.0, theta.unwrap()));
                op
            }
        };
        total = op.matmul(&total)?;
    }
    Ok(total)
}

/// Dense mixture matrix: the coefficient-weighted sum of Kron-route token
/// unitaries.
pub fn dense_mixture_matrix(spec: &BlockEncodingSpec) -> Result<DenseOperator> {
    let b = spec.coeffs().effective()?;
    let mut m = DenseOperator::zeros(1 << spec.num_qubits())?;
    for j in 0..spec.window() {
        let u = circuit_matrix_via_kron(&spec.token_circuits()[j], &spec.token_params()[j])?;
        m.add_scaled(b[j], &u)?;
    }
    Ok(m)
}

/// Dense route for the transformed zero state: sum_k c_k M^k |0> with M as
/// an explicit matrix.
pub fn dense_polynomial_zero_state(
    poly: &PolynomialSpec,
    m: &DenseOperator,
) -> Result<StateVector> {
    let q = m.dim().trailing_zeros() as usize;
    let mut power = StateVector::zero_state(q)?;
    let mut acc =
        StateVector::from_amplitudes(q, vec![Complex64::new(0.0, 0.0); m.dim()])?;
    for (k, c) in poly.coefficients().iter().enumerate() {
        if k > 0 {
            power = m.apply(&power)?;
        }
        acc.axpy(Complex64::new(*c, 0.0), &power)?;
    }
    Ok(acc)
}

/// Postselection probability expanded into pairwise overlaps:
/// ||M|0>||^2 = sum_j |b_j|^2 + 2 Re sum_{j<k} conj(b_j) b_k <U_j 0|U_k 0>.
pub fn overlap_expansion_prob(spec: &BlockEncodingSpec) -> Result<f64> {
    let b = spec.coeffs().effective()?;
    let zero = StateVector::zero_state(spec.num_qubits())?;
    let images: Vec<StateVector> = spec
        .token_circuits()
        .iter()
        .zip(spec.token_params().iter())
        .map(|(circ, params)| circ.apply(params, &zero))
        .collect::<Result<_>>()?;
    let mut prob: f64 = b.iter().map(|bj| bj.norm_sqr()).sum();
    for j in 0..b.len() {
        for k in (j + 1)..b.len() {
            let overlap = images[j].inner_product(&images[k])?;
            prob += 2.0 * (b[j].conj() * b[k] * overlap).re;
        }
    }
    Ok(prob)
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
/// Rejects visibly non-Hermitian input.
pub fn hermitian_eigenvalues(op: &DenseOperator) -> Result<Vec<f64>> {
    if op.max_abs_diff(&op.dagger()) > 1e-10 {
        return Err(Error::InvalidArgument(
            "matrix is not Hermitian to 1e-10".into(),
        ));
    }
    let n = op.dim();
    let mut a: Vec<Complex64> = op.entries().to_vec();
    let idx = |r: usize, c: usize| r * n + c;
    for _sweep in 0..200 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[idx(p, q)].norm_sqr();
            }
        }
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[idx(p, q)];
                let r = apq.norm();
                if r < 1e-18 {
                    continue;
                }
                let phase = apq / r; // e^{i phi}
                let app = a[idx(p, p)].re;
                let aqq = a[idx(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Unitary U: U[p][p]=c, U[p][q]=s, U[q][p]=-s*conj(phase),
                // U[q][q]=c*conj(phase); update A <- U^dagger A U.
                let upp = Complex64::new(c, 0.0);
                let upq = Complex64::new(s, 0.0);
                let uqp = -s * phase.conj();
                let uqq = c * phase.conj();
                for i in 0..n {
                    let aip = a[idx(i, p)];
                    let aiq = a[idx(i, q)];
                    a[idx(i, p)] = aip * upp + aiq * uqp;
                    a[idx(i, q)] = aip * upq + aiq * uqq;
                }
                for i in 0..n {
                    let api = a[idx(p, i)];
                    let aqi = a[idx(q, i)];
                    a[idx(p, i)] = upp.conj() * api + uqp.conj() * aqi;
                    a[idx(q, i)] = upq.conj() * api + uqq.conj() * aqi;
                }
            }
        }
    }
    let mut eigenvalues: Vec<f64> = (0..n).map(|i| a[idx(i, i)].re).collect();
    eigenvalues.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(eigenvalues)
}

/// Singular values (descending) via eigenvalues of M^dagger M.
pub fn singular_values(op: &DenseOperator) -> Result<Vec<f64>> {
    let gram = op.dagger().matmul(op)?;
    let mut sigma: Vec<f64> = hermitian_eigenvalues(&gram)?
        .into_iter()
        .map(|lambda| lambda.max(0.0).sqrt())
        .collect();
    sigma.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(sigma)
}

/// Random mixing instance: ring-ansatz token circuits with uniform angles,
/// raw amplitudes in (0.5, 1.5), phases in (-pi, pi).
pub fn random_spec(
    num_qubits: usize,
    window: usize,
    layers: usize,
    seed: u64,
) -> Result<BlockEncodingSpec> {
    let mut rng = InstanceRng::new(seed);
    let pi = std::f64::consts::PI;
    let template = circuit14(num_qubits, layers)?;
    let mut circuits = Vec::with_capacity(window);
    let mut params = Vec::with_capacity(window);
    for _ in 0..window {
        circuits.push(template.clone());
        params.push(
            (0..template.num_params())
                .map(|_| rng.uniform(-pi, pi))
                .collect(),
        );
    }
    let raw: Vec<f64> = (0..window).map(|_| rng.uniform(0.5, 1.5)).collect();
    let phases: Vec<f64> = (0..window).map(|_| rng.uniform(-pi, pi)).collect();
    BlockEncodingSpec::new(LcuCoefficients::new(raw, phases)?, circuits, params)
}

/// The adjoint of a circuit as a standalone circuit: gates reversed, each
/// with a fresh parameter slot whose value is the negated original angle.
pub fn adjoint_circuit(circuit: &GateCircuit, params: &[f64]) -> Result<(GateCircuit, Vec<f64>)> {
    let mut adj = GateCircuit::new(circuit.num_qubits())?;
    let mut adj_params = Vec::new();
    for gate in circuit.gates().iter().rev() {
        match gate.kind {
            GateKind::Cx => adj.push_cx(gate.control.expect("cx control"), gate.target)?,
            GateKind::GlobalPhase => {
                adj.push_global_phase()?;
                adj_params.push(-params[gate.param_slot.expect("phase slot")]);
            }
            GateKind::Rx | GateKind::Ry | GateKind::Rz => {
                adj.push_rotation(gate.kind, gate.target)?;
                adj_params.push(-params[gate.param_slot.expect("rotation slot")]);
            }
            GateKind::Crx | GateKind::Cry | GateKind::Crz => {
                adj.push_controlled_rotation(
                    gate.kind,
                    gate.control.expect("control"),
                    gate.target,
                )?;
                adj_params.push(-params[gate.param_slot.expect("rotation slot")]);
            }
        }
    }
    Ok((adj, adj_params))
}

/// Random mixing instance whose matrix is Hermitian by construction: tokens
/// come in (U, U^dagger) pairs with conjugate coefficients, so the sum
/// equals its own adjoint.
pub fn random_hermitian_spec(
    num_qubits: usize,
    pairs: usize,
    layers: usize,
    seed: u64,
) -> Result<BlockEncodingSpec> {
    let mut rng = InstanceRng::new(seed);
    let pi = std::f64::consts::PI;
    let template = circuit14(num_qubits, layers)?;
    let mut circuits = Vec::with_capacity(2 * pairs);
    let mut params = Vec::with_capacity(2 * pairs);
    let mut raw = Vec::with_capacity(2 * pairs);
    let mut phases = Vec::with_capacity(2 * pairs);
    for _ in 0..pairs {
        let theta: Vec<f64> = (0..template.num_params())
            .map(|_| rng.uniform(-pi, pi))
            .collect();
        let amplitude = rng.uniform(0.5, 1.5);
        let gamma = rng.uniform(-pi, pi);
        let (adj, adj_theta) = adjoint_circuit(&template, &theta)?;
        circuits.push(template.clone());
        params.push(theta);
        raw.push(amplitude);
        phases.push(gamma);
        circuits.push(adj);
        params.push(adj_theta);
        raw.push(amplitude);
        phases.push(-gamma);
    }
    BlockEncodingSpec::new(LcuCoefficients::new(raw, phases)?, circuits, params)
}

/// Random polynomial with true sup norm at most 1 on [-1, 1]: an L1-normalized
/// combination of the first Chebyshev polynomials (each bounded by 1 there).
pub fn random_bounded_polynomial(degree: usize, seed: u64) -> Result<PolynomialSpec> {
    assert!((1..=3).contains(&degree), "supported degrees: 1..=3");
    let chebyshev: [&[f64]; 4] = [
        &[1.0],
        &[0.0, 1.0],
        &[-1.0, 0.0, 2.0],
        &[0.0, -3.0, 0.0, 4.0],
    ];
    let mut rng = InstanceRng::new(seed);
    let weights: Vec<f64> = (0..=degree).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let l1: f64 = weights.iter().map(|w| w.abs()).sum();
    let mut coefficients = vec![0.0; degree + 1];
    for (k, w) in weights.iter().enumerate() {
        for (power, c) in chebyshev[k].iter().enumerate() {
            coefficients[power] += (w / l1) * c;
        }
    }
    PolynomialSpec::new(coefficients)
}

/// Random gate sequence exercising every gate kind.
pub fn random_circuit(num_qubits: usize, gates: usize, seed: u64) -> Result<(GateCircuit, Vec<f64>)> {
    let mut rng = InstanceRng::new(seed);
    let pi = std::f64::consts::PI;
    let mut circuit = GateCircuit::new(num_qubits)?;
    let mut params = Vec::new();
    for _ in 0..gates {
        match rng.below(8) {
            0 => {
                circuit.push_rotation(GateKind::Rx, rng.below(num_qubits))?;
                params.push(rng.uniform(-pi, pi));
            }
            1 => {
                circuit.push_rotation(GateKind::Ry, rng.below(num_qubits))?;
                params.push(rng.uniform(-pi, pi));
            }
            2 => {
                circuit.push_rotation(GateKind::Rz, rng.below(num_qubits))?;
                params.push(rng.uniform(-pi, pi));
            }
            kind @ (3 | 4 | 5) if num_qubits >= 2 => {
                let control = rng.below(num_qubits);
                let mut target = rng.below(num_qubits);
                while target == control {
                    target = rng.below(num_qubits);
                }
                let kind = [GateKind::Crx, GateKind::Cry, GateKind::Crz][kind - 3];
                circuit.push_controlled_rotation(kind, control, target)?;
                params.push(rng.uniform(-pi, pi));
            }
            6 if num_qubits >= 2 => {
                let control = rng.below(num_qubits);
                let mut target = rng.below(num_qubits);
                while target == control {
                    target = rng.below(num_qubits);
                }
                circuit.push_cx(control, target)?;
            }
            _ => {
                circuit.push_global_phase()?;
                params.push(rng.uniform(-pi, pi));
            }
        }
    }
    Ok((circuit, params))
}

fn suite<F>(name: &str, body: F) -> PropertyReport
where
    F: FnOnce() -> Result<(bool, String)>,
{
    let start = Instant::now();
    let (passed, details) = match body() {
        Ok(result) => result,
        Err(e) => (false, format!("errored: {e}")),
    };
    PropertyReport {
        name: name.to_string(),
        passed,
        details,
        runtime_secs: start.elapsed().as_secs_f64(),
    }
}

/// Block-encoding correctness: the top-left block of the explicit
/// prepare–select–unprepare unitary equals the dense coefficient-weighted
/// unitary sum.
pub fn block_encoding_suite(scale: VerifyScale) -> PropertyReport {
    suite("block encoding realizes the coefficient-weighted unitary sum", || {
        let instances = match scale {
            VerifyScale::Small => 20,
            VerifyScale::Full => 100,
        };
        let mut max_dev = 0.0f64;
        for i in 0..instances {
            let q = 2 + i % 2;
            let n = [2, 4, 8][i % 3];
            let spec = random_spec(q, n, 1, 0xA11CE + i as u64)?;
            let full = spec.explicit_block_encoding()?;
            let block = full.block(0, 0, 1 << q)?;
            let dense = dense_mixture_matrix(&spec)?;
            max_dev = max_dev.max(block.max_abs_diff(&dense));
        }
        Ok((
            max_dev <= 1e-10,
            format!("{instances} instances, max |block - sum| = {max_dev:.3e} (tol 1e-10)"),
        ))
    })
}

/// Polynomial-transform correctness: the power-accumulation route equals
/// both the dense matrix-polynomial route and the ordered token-tuple
/// enumeration.
pub fn polynomial_suite(scale: VerifyScale) -> PropertyReport {
    suite("polynomial transform matches dense and enumeration routes", || {
        let instances = match scale {
            VerifyScale::Small => 10,
            VerifyScale::Full => 50,
        };
        let mut max_dense = 0.0f64;
        let mut max_enum = 0.0f64;
        for i in 0..instances {
            let q = 2 + i % 2;
            let n = 2 + i % 3;
            let degree = 1 + i % 3;
            let spec = random_spec(q, n, 1, 0xB0B + i as u64)?;
            let mut rng = InstanceRng::new(0xC0FFEE + i as u64);
            let coefficients: Vec<f64> =
                (0..=degree).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let poly = PolynomialSpec::new(coefficients)?;
            let zero = StateVector::zero_state(q)?;
            let via_powers = apply_polynomial(&poly, &spec, &zero)?;
            let dense = dense_polynomial_zero_state(&poly, &dense_mixture_matrix(&spec)?)?;
            let via_tuples = skipgram_expansion_oracle(&poly, &spec, &zero)?;
            max_dense = max_dense.max(via_powers.max_abs_diff(&dense));
            max_enum = max_enum.max(via_powers.max_abs_diff(&via_tuples));
        }
        Ok((
            max_dense <= 1e-10 && max_enum <= 1e-10,
            format!(
                "{instances} instances, max dev vs dense {max_dense:.3e}, vs enumeration {max_enum:.3e} (tol 1e-10)"
            ),
        ))
    })
}

/// Postselection-probability identities: the direct squared norm equals the
/// pairwise-overlap expansion, and on Hermitian mixes with singular values
/// in [0, 1] a sup-norm-bounded polynomial keeps the probability at most 1.
///
/// The bounded-probability half uses Hermitian instances deliberately: for a
/// non-Hermitian contraction the polynomial's sup over the real interval
/// does not control its values on the complex spectrum, so no bound holds
/// in general.
pub fn postselection_suite(scale: VerifyScale) -> PropertyReport {
    suite("postselection probability identities and bound", || {
        let instances = match scale {
            VerifyScale::Small => 20,
            VerifyScale::Full => 100,
        };
        let mut max_identity_dev = 0.0f64;
        for i in 0..instances {
            let q = 2 + i % 2;
            let n = 2 + i % 5;
            let spec = random_spec(q, n, 1, 0xD1CE + i as u64)?;
            let direct = spec.postselection_prob_m()?;
            let expanded = overlap_expansion_prob(&spec)?;
            max_identity_dev = max_identity_dev.max((direct - expanded).abs());
        }

        let bound_instances = match scale {
            VerifyScale::Small => 10,
            VerifyScale::Full => 50,
        };
        let mut max_prob = 0.0f64;
        let mut max_sigma = 0.0f64;
        for i in 0..bound_instances {
            let q = 2 + i % 2;
            let pairs = 1 + i % 2;
            let spec = random_hermitian_spec(q, pairs, 1, 0xFACE + i as u64)?;
            let degree = 1 + i % 3;
            let poly = random_bounded_polynomial(degree, 0xBEAD + i as u64)?;
            let m = dense_mixture_matrix(&spec)?;
            let sigma = singular_values(&m)?;
            max_sigma = max_sigma.max(sigma[0]);
            if sigma[0] > 1.0 + 1e-9 {
                return Ok((false, format!("instance {i}: sigma_max {} > 1", sigma[0])));
            }
            if poly.sup_norm(2001) > 1.0 + 1e-12 {
                return Ok((false, format!("instance {i}: polynomial exceeds sup norm 1")));
            }
            max_prob = max_prob.max(final_postselection_prob(&poly, &spec)?);
        }
        Ok((
            max_identity_dev <= 1e-12 && max_prob <= 1.0 + 1e-8,
            format!(
                "{instances} identity instances (max dev {max_identity_dev:.3e}, tol 1e-12); {bound_instances} Hermitian bound instances (max sigma {max_sigma:.6}, max prob {max_prob:.6}, tol 1+1e-8)"
            ),
        ))
    })
}

/// Gradient correctness: analytic gradients against central finite
/// differences across every parameter segment.
pub fn gradient_suite(scale: VerifyScale) -> PropertyReport {
    suite("analytic gradients match finite differences in every segment", || {
        let (config, samples) = match scale {
            VerifyScale::Small => (
                ModelConfig {
                    vocab_size: 5,
                    embed_dim: 3,
                    num_qubits: 2,
                    window: 2,
                    degree: 2,
                    ansatz_layers: 1,
                    head_hidden: 6,
                    freeze_embedding: false,
                },
                6,
            ),
            VerifyScale::Full => (
                ModelConfig {
                    vocab_size: 11,
                    embed_dim: 6,
                    num_qubits: 3,
                    window: 4,
                    degree: 3,
                    ansatz_layers: 1,
                    head_hidden: 36,
                    freeze_embedding: false,
                },
                20,
            ),
        };
        let n = config.window;
        let v = config.vocab_size;
        let model = QuixerModel::new(config, 0x17E57)?;
        let mut rng = InstanceRng::new(0x5EED);
        let contexts: Vec<Vec<usize>> = (0..3)
            .map(|_| (0..n).map(|_| rng.below(v)).collect())
            .collect();
        let batch: Vec<(&[usize], usize)> = contexts
            .iter()
            .map(|c| (c.as_slice(), rng.below(v)))
            .collect();
        let reports = grad::finite_difference_check(&model, &batch, 1e-5, samples, 0xACC)?;
        let mut worst: Option<&grad::FdSegmentReport> = None;
        for report in &reports {
            if report.skipped.is_some() {
                continue;
            }
            if worst.map_or(true, |w| report.max_rel_error > w.max_rel_error) {
                worst = Some(report);
            }
        }
        let worst = worst.expect("at least one checked segment");
        Ok((
            worst.max_rel_error <= 1e-4,
            format!(
                "{} segments, {} coords/segment, worst {} rel err {:.3e} (tol 1e-4)",
                reports.len(),
                samples,
                worst.segment.name(),
                worst.max_rel_error
            ),
        ))
    })
}

/// Model-level invariances on random forward passes: readout boundedness,
/// joint permutation of (coefficient, unitary) pairs, and trading a
/// coefficient phase against a global-phase gate in the paired unitary.
pub fn invariance_suite(scale: VerifyScale) -> PropertyReport {
    suite("forward pass invariances (boundedness, permutation, phase trade)", || {
        let instances = match scale {
            VerifyScale::Small => 20,
            VerifyScale::Full => 100,
        };
        let mut max_readout: f64 = 0.0;
        let mut max_perm_dev: f64 = 0.0;
        let mut max_phase_dev: f64 = 0.0;
        for i in 0..instances {
            let q = 2 + i % 2;
            let n = 2 + i % 3;
            let config = ModelConfig {
                vocab_size: 7,
                embed_dim: 4,
                num_qubits: q,
                window: n,
                degree: 1 + i % 3,
                ansatz_layers: 1,
                head_hidden: 8,
                freeze_embedding: false,
            };
            let model = QuixerModel::new(config, 0xF00D + i as u64)?;
            let mut rng = InstanceRng::new(0xDADA + i as u64);
            let context: Vec<usize> = (0..n).map(|_| rng.below(7)).collect();
            let spec = model.build_block_encoding(&context)?;
            let trace = model.forward_from_spec(&spec)?;
            for o in &trace.expectations {
                max_readout = max_readout.max(o.abs());
            }

            // Joint rotation of the (coefficient, unitary) list.
            let shift = 1 + rng.below(n.max(2) - 1);
            let perm: Vec<usize> = (0..n).map(|j| (j + shift) % n).collect();
            let raw = spec.coeffs().raw_amplitudes();
            let phases = spec.coeffs().phases();
            let permuted = BlockEncodingSpec::new(
                LcuCoefficients::new(
                    perm.iter().map(|&j| raw[j]).collect(),
                    perm.iter().map(|&j| phases[j]).collect(),
                )?,
                perm.iter().map(|&j| spec.token_circuits()[j].clone()).collect(),
                perm.iter().map(|&j| spec.token_params()[j].clone()).collect(),
            )?;
            let perm_trace = model.forward_from_spec(&permuted)?;
            for (a, b) in trace.logits.iter().zip(perm_trace.logits.iter()) {
                max_perm_dev = max_perm_dev.max((a - b).abs());
            }

            // Move a phase angle from the coefficient into the unitary.
            let token = rng.below(n);
            let alpha = rng.uniform(-1.0, 1.0);
            let mut traded_circuits: Vec<GateCircuit> = spec.token_circuits().to_vec();
            let mut traded_params: Vec<Vec<f64>> = spec.token_params().to_vec();
            traded_circuits[token].push_global_phase()?;
            traded_params[token].push(alpha);
            let mut traded_phases = phases.to_vec();
            traded_phases[token] -= alpha;
            let traded = BlockEncodingSpec::new(
                LcuCoefficients::new(raw.to_vec(), traded_phases)?,
                traded_circuits,
                traded_params,
            )?;
            let traded_trace = model.forward_from_spec(&traded)?;
            for (a, b) in trace.logits.iter().zip(traded_trace.logits.iter()) {
                max_phase_dev = max_phase_dev.max((a - b).abs());
            }
        }
        let bounded = max_readout <= 1.0 + 1e-10;
        Ok((
            bounded && max_perm_dev <= 1e-10 && max_phase_dev <= 1e-10,
            format!(
                "{instances} forwards: max |readout| = {max_readout:.12}, permutation dev {max_perm_dev:.3e}, phase-trade dev {max_phase_dev:.3e} (tol 1e-10)"
            ),
        ))
    })
}

/// Circuit-layer checks: ring-ansatz parameter counts and agreement of the
/// amplitude-update simulator with Kronecker-assembled matrices.
pub fn circuit_suite(scale: VerifyScale) -> PropertyReport {
    suite("ansatz parameter counts and simulator/matrix agreement", || {
        let reference = circuit14(6, 4)?;
        if reference.num_params() != 96 {
            return Ok((
                false,
                format!("(q=6, l=4) has {} parameters, expected 96", reference.num_params()),
            ));
        }
        for q in 2..=7 {
            for l in 1..=5 {
                let c = circuit14(q, l)?;
                if c.num_params() != 4 * l * q {
                    return Ok((
                        false,
                        format!("(q={q}, l={l}) has {} parameters, expected {}", c.num_params(), 4 * l * q),
                    ));
                }
            }
        }
        let instances = match scale {
            VerifyScale::Small => 10,
            VerifyScale::Full => 40,
        };
        let mut max_dev = 0.0f64;
        for i in 0..instances {
            let q = 1 + i % 3;
            let (circuit, params) = random_circuit(q, 12, 0xCAB + i as u64)?;
            let matrix = circuit_matrix_via_kron(&circuit, &params)?;
            if !matrix.is_unitary(1e-10) {
                return Ok((false, format!("instance {i}: kron matrix not unitary")));
            }
            // Column-by-column comparison against the simulator.
            for col in 0..(1 << q) {
                let basis = StateVector::basis_state(q, col)?;
                let simulated = circuit.apply(&params, &basis)?;
                let reference_col = matrix.apply(&basis)?;
                max_dev = max_dev.max(simulated.max_abs_diff(&reference_col));
            }
            let dense = circuit.dense_matrix(&params)?;
            max_dev = max_dev.max(dense.max_abs_diff(&matrix));
        }
        Ok((
            max_dev <= 1e-12,
            format!("{instances} random circuits, max deviation {max_dev:.3e} (tol 1e-12)"),
        ))
    })
}

/// Resource-estimator arithmetic: hand-traceable counts and scaling laws.
pub fn resources_suite() -> PropertyReport {
    suite("resource estimates match hand arithmetic and scaling laws", || {
        let base = ResourceQuery::new(6, 32, 4, 3);
        if qubit_count(&base) != 14 {
            return Ok((false, format!("qubits {} != 14", qubit_count(&base))));
        }
        let mut assisted = base;
        assisted.use_ancilla_select = true;
        if qubit_count(&assisted) != 17 {
            return Ok((false, format!("ancilla qubits {} != 17", qubit_count(&assisted))));
        }
        for n in [2u64, 4, 8, 16, 32] {
            if control_qubit_count(4 * n) != control_qubit_count(n) + 2 {
                return Ok((false, format!("4x window at n={n} did not add 2 controls")));
            }
        }
        for m in 2..=12u64 {
            if multicontrolled_gate_count(m) != 2 * (m - 1) + 1 {
                return Ok((false, format!("ladder count wrong at m={m}")));
            }
        }
        let doubled = ResourceQuery { degree: 6, ..base };
        let (a, b) = (estimate(&base)?, estimate(&doubled)?);
        if 2 * a.gates_select != b.gates_select {
            return Ok((false, "doubling degree did not double select gates".into()));
        }
        for n in [8u64, 16, 32, 64, 128] {
            let naive = ResourceQuery::new(4, n, 2, 3);
            let mut fast = naive;
            fast.use_ancilla_select = true;
            if estimate(&fast)?.gates_select > estimate(&naive)?.gates_select {
                return Ok((false, format!("ancilla select not cheaper at n={n}")));
            }
        }
        Ok((true, "14/17 qubits, +2 controls per 4x window, linear ladders, degree-linear select, ancilla wins for n >= 8".into()))
    })
}

/// Runs every suite.
pub fn run_all(scale: VerifyScale) -> Vec<PropertyReport> {
    vec![
        block_encoding_suite(scale),
        polynomial_suite(scale),
        postselection_suite(scale),
        gradient_suite(scale),
        invariance_suite(scale),
        circuit_suite(scale),
        resources_suite(),
    ]
}
