//! End-to-end model assembly: token embeddings are mapped to circuit angles,
//! the context window is mixed as a linear combination of token unitaries, a
//! trained polynomial of the mixer is applied to |0...0>, the result is
//! normalized (postselected semantics), transformed by a feed-forward
//! unitary, read out as per-qubit Pauli expectations, and finished by a
//! two-layer classical head producing next-token logits.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{circuit14, GateCircuit, PauliAxis, PauliObservable};
use crate::error::{Error, Result};
use crate::lcu::{BlockEncodingSpec, LcuCoefficients};
use crate::qsvt::{apply_polynomial_states, PolynomialSpec};
use crate::state::StateVector;

/// Static shape of a model; everything needed to rebuild parameter tensors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Vocabulary size V.
    pub vocab_size: usize,
    /// Word-embedding width.
    pub embed_dim: usize,
    /// Width q of the data register.
    pub num_qubits: usize,
    /// Context window length n (number of mixed token unitaries).
    pub window: usize,
    /// Degree d of the trained polynomial.
    pub degree: usize,
    /// Layer count l of the ring ansatz used for token and feed-forward circuits.
    pub ansatz_layers: usize,
    /// Hidden width of the classical head.
    pub head_hidden: usize,
    /// When set, the embedding table receives no gradient updates.
    #[serde(default)]
    pub freeze_embedding: bool,
}

impl ModelConfig {
    /// Default head hidden width: four times the readout width 3q.
    pub fn default_head_hidden(num_qubits: usize) -> usize {
        12 * num_qubits
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 {
            return Err(Error::Config("vocab_size must be at least 2".into()));
        }
        if self.embed_dim == 0 {
            return Err(Error::Config("embed_dim must be positive".into()));
        }
        if self.num_qubits < 2 {
            return Err(Error::Config("num_qubits must be at least 2".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be positive".into()));
        }
        if self.degree == 0 {
            return Err(Error::Config("degree must be at least 1".into()));
        }
        if self.ansatz_layers == 0 {
            return Err(Error::Config("ansatz_layers must be at least 1".into()));
        }
        if self.head_hidden == 0 {
            return Err(Error::Config("head_hidden must be positive".into()));
        }
        Ok(())
    }

    /// Angle count of one token (and of the feed-forward) circuit: 4lq.
    pub fn angle_count(&self) -> usize {
        4 * self.ansatz_layers * self.num_qubits
    }

    /// Width of the readout vector: 3q.
    pub fn readout_dim(&self) -> usize {
        3 * self.num_qubits
    }
}

/// Two dense layers with a ReLU between: logits = W2 relu(W1 o + b1) + b2.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadParams {
    /// hidden x 3q, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// V x hidden, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// The full trainable model.
#[derive(Clone, Debug)]
pub struct QuixerModel {
    config: ModelConfig,
    /// V x embed_dim word vectors, row-major.
    pub embedding_table: Vec<f64>,
    /// (4lq) x embed_dim angle projection, row-major.
    pub w_e: Vec<f64>,
    /// Mixing amplitudes and phases, length n each.
    pub lcu_coeffs: LcuCoefficients,
    /// Trained polynomial coefficients, lowest degree first.
    pub poly: PolynomialSpec,
    /// Feed-forward circuit angles, length 4lq.
    pub ff_params: Vec<f64>,
    pub head: HeadParams,
    token_circuit: GateCircuit,
    ff_circuit: GateCircuit,
}

/// Everything a forward pass produced, kept for gradients and diagnostics.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    /// The chain of mixed states in application order: the initial |0...0>
    /// followed by each successive mixing image (v_0..v_d for one layer;
    /// stages concatenate for stacked layers).
    pub powers: Vec<StateVector>,
    /// The polynomial image before normalization.
    pub pre_normalization: StateVector,
    /// Squared norm of `pre_normalization`: the postselection success probability.
    pub postselection_prob: f64,
    /// Unit-norm state fed to the feed-forward unitary.
    pub normalized: StateVector,
    /// State after the feed-forward unitary, from which readout is taken.
    pub final_state: StateVector,
    /// Readout vector o, ordered [X_0..X_{q-1}, Y_0..Y_{q-1}, Z_0..Z_{q-1}].
    pub expectations: Vec<f64>,
    /// Next-token logits, length V.
    pub logits: Vec<f64>,
}

impl QuixerModel {
    /// Builds a model with freshly initialized parameters.
    ///
    /// Draw order (fixed for reproducibility): embedding table, angle
    /// projection, mixing amplitudes, mixing phases, feed-forward angles,
    /// head weights and biases. Linear maps use uniform(-1/sqrt(fan_in),
    /// 1/sqrt(fan_in)); circuit angles and phases use uniform(-pi, pi);
    /// amplitudes use uniform(0.5, 1.5); the polynomial starts at P(x) = x
    /// so training begins from the plain mixing model.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = config.vocab_size;
        let e = config.embed_dim;
        let angles = config.angle_count();
        let n = config.window;
        let q = config.num_qubits;
        let h = config.head_hidden;
        let pi = std::f64::consts::PI;

        let embed_bound = 1.0 / (e as f64).sqrt();
        let embedding_table: Vec<f64> = (0..v * e)
            .map(|_| rng.gen_range(-embed_bound..embed_bound))
            .collect();
        let w_e: Vec<f64> = (0..angles * e)
            .map(|_| rng.gen_range(-embed_bound..embed_bound))
            .collect();
        let raw_amplitudes: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
        let phases: Vec<f64> = (0..n).map(|_| rng.gen_range(-pi..pi)).collect();
        let ff_params: Vec<f64> = (0..angles).map(|_| rng.gen_range(-pi..pi)).collect();

        let w1_bound = 1.0 / (config.readout_dim() as f64).sqrt();
        let w1: Vec<f64> = (0..h * config.readout_dim())
            .map(|_| rng.gen_range(-w1_bound..w1_bound))
            .collect();
        let b1: Vec<f64> = (0..h).map(|_| rng.gen_range(-w1_bound..w1_bound)).collect();
        let w2_bound = 1.0 / (h as f64).sqrt();
        let w2: Vec<f64> = (0..v * h)
            .map(|_| rng.gen_range(-w2_bound..w2_bound))
            .collect();
        let b2: Vec<f64> = (0..v).map(|_| rng.gen_range(-w2_bound..w2_bound)).collect();

        let mut poly_coeffs = vec![0.0; config.degree + 1];
        poly_coeffs[1] = 1.0;

        let token_circuit = circuit14(q, config.ansatz_layers)?;
        let ff_circuit = circuit14(q, config.ansatz_layers)?;
        Ok(Self {
            config,
            embedding_table,
            w_e,
            lcu_coeffs: LcuCoefficients::new(raw_amplitudes, phases)?,
            poly: PolynomialSpec::new(poly_coeffs)?,
            ff_params,
            head: HeadParams { w1, b1, w2, b2 },
            token_circuit,
            ff_circuit,
        })
    }

    /// Rebuilds a model from explicit tensors (checkpoint restore path).
    /// All shapes are validated against the config.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        config: ModelConfig,
        embedding_table: Vec<f64>,
        w_e: Vec<f64>,
        raw_amplitudes: Vec<f64>,
        phases: Vec<f64>,
        poly_coefficients: Vec<f64>,
        ff_params: Vec<f64>,
        head: HeadParams,
    ) -> Result<Self> {
        config.validate()?;
        let checks = [
            ("embedding_table", embedding_table.len(), config.vocab_size * config.embed_dim),
            ("w_e", w_e.len(), config.angle_count() * config.embed_dim),
            ("raw_amplitudes", raw_amplitudes.len(), config.window),
            ("phases", phases.len(), config.window),
            ("poly_coefficients", poly_coefficients.len(), config.degree + 1),
            ("ff_params", ff_params.len(), config.angle_count()),
            ("head.w1", head.w1.len(), config.head_hidden * config.readout_dim()),
            ("head.b1", head.b1.len(), config.head_hidden),
            ("head.w2", head.w2.len(), config.vocab_size * config.head_hidden),
            ("head.b2", head.b2.len(), config.vocab_size),
        ];
        for (name, got, expected) in checks {
            if got != expected {
                return Err(Error::Checkpoint(format!(
                    "tensor {name} has {got} values, config implies {expected}"
                )));
            }
        }
        let token_circuit = circuit14(config.num_qubits, config.ansatz_layers)?;
        let ff_circuit = circuit14(config.num_qubits, config.ansatz_layers)?;
        Ok(Self {
            config,
            embedding_table,
            w_e,
            lcu_coeffs: LcuCoefficients::new(raw_amplitudes, phases)?,
            poly: PolynomialSpec::new(poly_coefficients)?,
            ff_params,
            head,
            token_circuit,
            ff_circuit,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// The shared token-circuit template (parameters supplied per token).
    pub fn token_circuit(&self) -> &GateCircuit {
        &self.token_circuit
    }

    pub fn ff_circuit(&self) -> &GateCircuit {
        &self.ff_circuit
    }

    /// Embedding row of one token.
    pub fn embedding_row(&self, token_id: usize) -> Result<&[f64]> {
        let v = self.config.vocab_size;
        if token_id >= v {
            return Err(Error::TokenOutOfRange {
                id: token_id,
                vocab_size: v,
            });
        }
        let e = self.config.embed_dim;
        Ok(&self.embedding_table[token_id * e..(token_id + 1) * e])
    }

    /// Circuit angles of one token: the angle projection applied to its
    /// embedding row, a vector of length 4lq.
    pub fn token_angles(&self, token_id: usize) -> Result<Vec<f64>> {
        let row = self.embedding_row(token_id)?;
        let e = self.config.embed_dim;
        let angles = self.config.angle_count();
        let mut theta = vec![0.0; angles];
        for (a, t) in theta.iter_mut().enumerate() {
            let w_row = &self.w_e[a * e..(a + 1) * e];
            let mut acc = 0.0;
            for (w, x) in w_row.iter().zip(row.iter()) {
                acc += w * x;
            }
            *t = acc;
        }
        Ok(theta)
    }

    /// Assembles the mixing description for one context window.
    pub fn build_block_encoding(&self, context: &[usize]) -> Result<BlockEncodingSpec> {
        if context.len() != self.config.window {
            return Err(Error::ContextLength {
                got: context.len(),
                expected: self.config.window,
            });
        }
        let mut params = Vec::with_capacity(context.len());
        for &token in context {
            params.push(self.token_angles(token)?);
        }
        let circuits = vec![self.token_circuit.clone(); context.len()];
        BlockEncodingSpec::new(self.lcu_coeffs.clone(), circuits, params)
    }

    /// Full forward pass on one context window.
    pub fn forward(&self, context: &[usize]) -> Result<ForwardTrace> {
        let spec = self.build_block_encoding(context)?;
        self.forward_from_spec(&spec)
    }

    /// Forward pass from an already-assembled mixing description. Public so
    /// verification can perturb the description (phases, term order) and
    /// check the induced invariances of the rest of the pipeline.
    pub fn forward_from_spec(&self, spec: &BlockEncodingSpec) -> Result<ForwardTrace> {
        if spec.num_qubits() != self.config.num_qubits {
            return Err(Error::DimensionMismatch {
                context: "forward_from_spec",
                left: spec.num_qubits(),
                right: self.config.num_qubits,
            });
        }
        let zero = StateVector::zero_state(self.config.num_qubits)?;
        let (powers, pre_normalization) = apply_polynomial_states(&self.poly, spec, &zero)?;
        self.finish_forward(powers, pre_normalization)
    }

    /// Normalization, feed-forward unitary, readout, and head - the shared
    /// tail of the single-layer and stacked forward passes.
    fn finish_forward(
        &self,
        powers: Vec<StateVector>,
        pre_normalization: StateVector,
    ) -> Result<ForwardTrace> {
        let postselection_prob = pre_normalization.norm_sqr();
        let normalized = pre_normalization.normalized()?;
        let final_state = self.ff_circuit.apply(&self.ff_params, &normalized)?;
        let expectations = readout_expectations(&final_state)?;
        let (_, _, logits) = self.head_apply(&expectations, None);
        Ok(ForwardTrace {
            powers,
            pre_normalization,
            postselection_prob,
            normalized,
            final_state,
            expectations,
            logits,
        })
    }

    /// Head evaluation with optional inverted dropout on the hidden layer.
    /// Returns (pre-activation, post-ReLU/dropout hidden, logits); the
    /// intermediates feed the backward pass.
    pub(crate) fn head_apply(
        &self,
        readout: &[f64],
        dropout: Option<(&[bool], f64)>,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let d_in = self.config.readout_dim();
        let h = self.config.head_hidden;
        let v = self.config.vocab_size;
        debug_assert_eq!(readout.len(), d_in);

        let mut pre = vec![0.0; h];
        for (i, p) in pre.iter_mut().enumerate() {
            let row = &self.head.w1[i * d_in..(i + 1) * d_in];
            let mut acc = self.head.b1[i];
            for (w, x) in row.iter().zip(readout.iter()) {
                acc += w * x;
            }
            *p = acc;
        }
        let mut hidden: Vec<f64> = pre.iter().map(|p| p.max(0.0)).collect();
        if let Some((mask, keep_prob)) = dropout {
            debug_assert_eq!(mask.len(), h);
            for (val, keep) in hidden.iter_mut().zip(mask.iter()) {
                if *keep {
                    *val /= keep_prob;
                } else {
                    *val = 0.0;
                }
            }
        }
        let mut logits = vec![0.0; v];
        for (o, l) in logits.iter_mut().enumerate() {
            let row = &self.head.w2[o * h..(o + 1) * h];
            let mut acc = self.head.b2[o];
            for (w, x) in row.iter().zip(hidden.iter()) {
                acc += w * x;
            }
            *l = acc;
        }
        (pre, hidden, logits)
    }
}

/// Per-qubit Pauli expectations of a normalized state, ordered
/// [X_0..X_{q-1}, Y_0..Y_{q-1}, Z_0..Z_{q-1}].
pub fn readout_expectations(state: &StateVector) -> Result<Vec<f64>> {
    let norm = state.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized {
            norm,
            tolerance: 1e-8,
        });
    }
    let q = state.num_qubits();
    let mut out = Vec::with_capacity(3 * q);
    for axis in [PauliAxis::X, PauliAxis::Y, PauliAxis::Z] {
        for k in 0..q {
            out.push(state.expectation(&PauliObservable::new(axis, k))?);
        }
    }
    Ok(out)
}

/// Stacked forward pass: each layer's polynomial of its own mixer is applied
/// to the running state in order, then the first layer's feed-forward
/// unitary, readout, and head finish the pipeline (the stack shares one
/// readout). Normalization happens once, after all layers.
pub fn forward_multilayer(layers: &[QuixerModel], context: &[usize]) -> Result<ForwardTrace> {
    let first = layers
        .first()
        .ok_or_else(|| Error::InvalidArgument("layer stack is empty".into()))?;
    for layer in layers {
        if layer.config().num_qubits != first.config().num_qubits {
            return Err(Error::DimensionMismatch {
                context: "forward_multilayer qubits",
                left: layer.config().num_qubits,
                right: first.config().num_qubits,
            });
        }
    }
    let mut running = StateVector::zero_state(first.config().num_qubits)?;
    let mut all_powers = vec![running.clone()];
    for layer in layers {
        let spec = layer.build_block_encoding(context)?;
        let (powers, out) = apply_polynomial_states(&layer.poly, &spec, &running)?;
        all_powers.extend(powers.into_iter().skip(1));
        running = out;
    }
    first.finish_forward(all_powers, running)
}
