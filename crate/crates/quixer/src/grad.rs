//! Exact reverse-mode gradients of the cross-entropy training loss with
//! respect to every trainable tensor, plus a finite-difference verifier.
//!
//! Complex intermediates use the convention `g_z := dL/d(conj z)` with
//! `dL = 2 Re <g_z, dz>`, so a real parameter theta of a complex map
//! satisfies `dL/dtheta = 2 Re <g_out, d(out)/dtheta>`. Circuits are
//! differentiated by the adjoint-state walk in [`crate::circuit`]; the
//! mixing chain reuses the recorded power states, giving a backward cost of
//! the same order as the forward pass.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ModelConfig, QuixerModel};
use crate::state::StateVector;

/// Identifies one named tensor inside the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Segment {
    Embedding,
    AngleProjection,
    MixAmplitudes,
    MixPhases,
    PolyCoefficients,
    FeedForward,
    HeadW1,
    HeadB1,
    HeadW2,
    HeadB2,
}

impl Segment {
    /// All segments, in bundle order.
    pub const ALL: [Segment; 10] = [
        Segment::Embedding,
        Segment::AngleProjection,
        Segment::MixAmplitudes,
        Segment::MixPhases,
        Segment::PolyCoefficients,
        Segment::FeedForward,
        Segment::HeadW1,
        Segment::HeadB1,
        Segment::HeadW2,
        Segment::HeadB2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Segment::Embedding => "embedding",
            Segment::AngleProjection => "angle_projection",
            Segment::MixAmplitudes => "mix_amplitudes",
            Segment::MixPhases => "mix_phases",
            Segment::PolyCoefficients => "poly_coefficients",
            Segment::FeedForward => "feed_forward",
            Segment::HeadW1 => "head_w1",
            Segment::HeadB1 => "head_b1",
            Segment::HeadW2 => "head_w2",
            Segment::HeadB2 => "head_b2",
        }
    }

    /// Whether weight decay applies. Mixing phases are periodic angles;
    /// decaying them toward zero is not meaningful regularization.
    pub fn decays(self) -> bool {
        !matches!(self, Segment::MixPhases)
    }
}

/// Offsets of every segment inside the flat vector; derived from a config.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BundleLayout {
    config: ModelConfig,
    offsets: [usize; 11],
}

impl BundleLayout {
    pub fn new(config: &ModelConfig) -> Self {
        let lengths = [
            config.vocab_size * config.embed_dim,
            config.angle_count() * config.embed_dim,
            config.window,
            config.window,
            config.degree + 1,
            config.angle_count(),
            config.head_hidden * config.readout_dim(),
            config.head_hidden,
            config.vocab_size * config.head_hidden,
            config.vocab_size,
        ];
        let mut offsets = [0usize; 11];
        for (i, len) in lengths.iter().enumerate() {
            offsets[i + 1] = offsets[i] + len;
        }
        Self {
            config: config.clone(),
            offsets,
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn total_len(&self) -> usize {
        self.offsets[10]
    }

    pub fn range(&self, segment: Segment) -> std::ops::Range<usize> {
        let i = Segment::ALL
            .iter()
            .position(|s| *s == segment)
            .expect("segment in ALL");
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Per-coordinate weight-decay eligibility.
    pub fn decay_mask(&self) -> Vec<bool> {
        let mut mask = vec![true; self.total_len()];
        for s in Segment::ALL {
            if !s.decays() {
                for m in &mut mask[self.range(s)] {
                    *m = false;
                }
            }
        }
        mask
    }
}

/// All trainable parameters flattened into one vector with a named layout.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterBundle {
    layout: BundleLayout,
    pub values: Vec<f64>,
}

impl ParameterBundle {
    /// Snapshots a model's parameters.
    pub fn from_model(model: &QuixerModel) -> Self {
        let layout = BundleLayout::new(model.config());
        let mut values = Vec::with_capacity(layout.total_len());
        values.extend_from_slice(&model.embedding_table);
        values.extend_from_slice(&model.w_e);
        values.extend_from_slice(model.lcu_coeffs.raw_amplitudes());
        values.extend_from_slice(model.lcu_coeffs.phases());
        values.extend_from_slice(model.poly.coefficients());
        values.extend_from_slice(&model.ff_params);
        values.extend_from_slice(&model.head.w1);
        values.extend_from_slice(&model.head.b1);
        values.extend_from_slice(&model.head.w2);
        values.extend_from_slice(&model.head.b2);
        debug_assert_eq!(values.len(), layout.total_len());
        Self { layout, values }
    }

    pub fn layout(&self) -> &BundleLayout {
        &self.layout
    }

    pub fn segment(&self, segment: Segment) -> &[f64] {
        &self.values[self.layout.range(segment)]
    }

    pub fn segment_mut(&mut self, segment: Segment) -> &mut [f64] {
        let range = self.layout.range(segment);
        &mut self.values[range]
    }

    /// Writes the flat values back into a model of the same configuration.
    pub fn write_to_model(&self, model: &mut QuixerModel) -> Result<()> {
        if model.config() != &self.layout.config {
            return Err(Error::Config(
                "parameter bundle belongs to a different model shape".into(),
            ));
        }
        model
            .embedding_table
            .copy_from_slice(self.segment(Segment::Embedding));
        model
            .w_e
            .copy_from_slice(self.segment(Segment::AngleProjection));
        model
            .lcu_coeffs
            .raw_amplitudes_mut()
            .copy_from_slice(self.segment(Segment::MixAmplitudes));
        model
            .lcu_coeffs
            .phases_mut()
            .copy_from_slice(self.segment(Segment::MixPhases));
        model
            .poly
            .coefficients_mut()
            .copy_from_slice(self.segment(Segment::PolyCoefficients));
        model
            .ff_params
            .copy_from_slice(self.segment(Segment::FeedForward));
        model.head.w1.copy_from_slice(self.segment(Segment::HeadW1));
        model.head.b1.copy_from_slice(self.segment(Segment::HeadB1));
        model.head.w2.copy_from_slice(self.segment(Segment::HeadW2));
        model.head.b2.copy_from_slice(self.segment(Segment::HeadB2));
        Ok(())
    }
}

/// Loss gradient in the same flat layout as [`ParameterBundle`].
#[derive(Clone, Debug)]
pub struct GradientBundle {
    layout: BundleLayout,
    pub values: Vec<f64>,
}

impl GradientBundle {
    pub fn zeros(layout: BundleLayout) -> Self {
        let total = layout.total_len();
        Self {
            layout,
            values: vec![0.0; total],
        }
    }

    pub fn layout(&self) -> &BundleLayout {
        &self.layout
    }

    pub fn segment(&self, segment: Segment) -> &[f64] {
        &self.values[self.layout.range(segment)]
    }

    /// Global L2 norm, used for gradient clipping.
    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// Dropout description for one optimization step: each example's hidden-layer
/// mask is derived from (seed, example index), so results do not depend on
/// thread count or batch chunking.
#[derive(Clone, Copy, Debug)]
pub struct DropoutPlan {
    /// Probability of zeroing a hidden unit; in [0, 1).
    pub rate: f64,
    pub seed: u64,
}

fn dropout_mask(plan: DropoutPlan, example_index: usize, width: usize) -> (Vec<bool>, f64) {
    let keep_prob = 1.0 - plan.rate;
    let mut rng = ChaCha8Rng::seed_from_u64(
        plan.seed ^ (example_index as u64)
            .wrapping_mul(0x9E3779B97F4A7C15)
            .wrapping_add(0x5851F42D4C957F2D),
    );
    let mask = (0..width).map(|_| rng.gen::<f64>() < keep_prob).collect();
    (mask, keep_prob)
}

/// Numerically stable log-sum-exp.
pub(crate) fn log_sum_exp(logits: &[f64]) -> f64 {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

/// Cross-entropy (natural log) of one example's logits against its target.
pub(crate) fn cross_entropy(logits: &[f64], target: usize) -> f64 {
    log_sum_exp(logits) - logits[target]
}

/// Backpropagates one example, accumulating unscaled gradients into `grads`
/// (a full bundle-layout buffer); returns the example's loss.
fn backprop_example(
    model: &QuixerModel,
    context: &[usize],
    target: usize,
    dropout: Option<(&[bool], f64)>,
    layout: &BundleLayout,
    grads: &mut [f64],
) -> Result<f64> {
    let cfg = model.config();
    let v = cfg.vocab_size;
    if target >= v {
        return Err(Error::TokenOutOfRange {
            id: target,
            vocab_size: v,
        });
    }
    let spec = model.build_block_encoding(context)?;
    let trace = model.forward_from_spec(&spec)?;
    let q = cfg.num_qubits;
    let h = cfg.head_hidden;
    let d_in = cfg.readout_dim();

    // Head forward with the training-time dropout mask (the trace's logits
    // are the evaluation-time ones).
    let (pre1, hidden, logits) = model.head_apply(&trace.expectations, dropout);
    let loss = cross_entropy(&logits, target);

    // --- Head backward: d(loss)/d(logits) = softmax - onehot. ---
    let lse = log_sum_exp(&logits);
    let mut dlogits: Vec<f64> = logits.iter().map(|l| (l - lse).exp()).collect();
    dlogits[target] -= 1.0;

    {
        let w2_range = layout.range(Segment::HeadW2);
        let b2_range = layout.range(Segment::HeadB2);
        let (w2_grads, b2_grads) = (&mut grads[w2_range.start..b2_range.end])
            .split_at_mut(w2_range.len());
        for (o, dl) in dlogits.iter().enumerate() {
            b2_grads[o] += dl;
            let row = &mut w2_grads[o * h..(o + 1) * h];
            for (g, hv) in row.iter_mut().zip(hidden.iter()) {
                *g += dl * hv;
            }
        }
    }

    let mut dhidden = vec![0.0; h];
    for (o, dl) in dlogits.iter().enumerate() {
        let row = &model.head.w2[o * h..(o + 1) * h];
        for (dh, w) in dhidden.iter_mut().zip(row.iter()) {
            *dh += dl * w;
        }
    }
    if let Some((mask, keep_prob)) = dropout {
        for (dh, keep) in dhidden.iter_mut().zip(mask.iter()) {
            if *keep {
                *dh /= keep_prob;
            } else {
                *dh = 0.0;
            }
        }
    }
    // ReLU gate.
    let dpre: Vec<f64> = dhidden
        .iter()
        .zip(pre1.iter())
        .map(|(dh, p)| if *p > 0.0 { *dh } else { 0.0 })
        .collect();

    let mut dreadout = vec![0.0; d_in];
    {
        let w1_range = layout.range(Segment::HeadW1);
        let b1_range = layout.range(Segment::HeadB1);
        let (w1_grads, b1_grads) = (&mut grads[w1_range.start..b1_range.end])
            .split_at_mut(w1_range.len());
        for (i, dp) in dpre.iter().enumerate() {
            b1_grads[i] += dp;
            let wrow = &model.head.w1[i * d_in..(i + 1) * d_in];
            let grow = &mut w1_grads[i * d_in..(i + 1) * d_in];
            for k in 0..d_in {
                grow[k] += dp * trace.expectations[k];
                dreadout[k] += dp * wrow[k];
            }
        }
    }

    // --- Readout backward: o_k = <psi|O_k|psi> gives g_psi = sum_k do_k O_k psi. ---
    use crate::circuit::{PauliAxis, PauliObservable};
    let mut g_psi = StateVector::from_amplitudes(
        q,
        vec![Complex64::new(0.0, 0.0); 1 << q],
    )?;
    for (block, axis) in [PauliAxis::X, PauliAxis::Y, PauliAxis::Z].iter().enumerate() {
        for k in 0..q {
            let weight = dreadout[block * q + k];
            if weight == 0.0 {
                continue;
            }
            let image = PauliObservable::new(*axis, k).apply(&trace.final_state)?;
            g_psi.axpy(Complex64::new(weight, 0.0), &image)?;
        }
    }

    // --- Feed-forward unitary backward. ---
    let ff_range = layout.range(Segment::FeedForward);
    let g_phi = model.ff_circuit().backprop(
        &model.ff_params,
        &trace.final_state,
        &g_psi,
        &mut grads[ff_range],
    )?;

    // --- Normalization backward: phi = phi_raw / r with the full quotient
    // Jacobian: g_raw = (g_phi - Re<g_phi, phi> * phi) / r. ---
    let r = trace.postselection_prob.sqrt();
    let radial = g_phi.inner_product(&trace.normalized)?.re;
    let mut g_raw = g_phi;
    g_raw.axpy(Complex64::new(-radial, 0.0), &trace.normalized)?;
    g_raw.scale(Complex64::new(1.0 / r, 0.0));

    // --- Polynomial coefficients: phi_raw = sum_k c_k v_k. ---
    {
        let poly_grads = &mut grads[layout.range(Segment::PolyCoefficients)];
        for (k, vk) in trace.powers.iter().enumerate() {
            poly_grads[k] += 2.0 * g_raw.inner_product(vk)?.re;
        }
    }

    // --- Mixing chain backward. Walking k = d-1 down to 0 with
    // g = adjoint of v_{k+1}: each token contributes its parameter and
    // coefficient gradients through w_{j,k} = U_j v_k, and
    // g_{v_k} = sum_j conj(b_j) U_j^dagger g + c_k g_raw. ---
    let b = spec.coeffs().effective()?;
    let n = cfg.window;
    let angles = cfg.angle_count();
    let c = model.poly.coefficients();
    let d = cfg.degree;
    let mut s_tot = vec![Complex64::new(0.0, 0.0); n];
    let mut dtheta = vec![0.0; n * angles];

    let mut g = g_raw.clone();
    g.scale(Complex64::new(c[d], 0.0));
    for k in (0..d).rev() {
        let vk = &trace.powers[k];
        let mut g_next =
            StateVector::from_amplitudes(q, vec![Complex64::new(0.0, 0.0); 1 << q])?;
        for j in 0..n {
            let circuit = &spec.token_circuits()[j];
            let params = &spec.token_params()[j];
            let w = circuit.apply(params, vk)?;
            s_tot[j] += g.inner_product(&w)?;
            let mut g_j = g.clone();
            g_j.scale(b[j].conj());
            let g_in = circuit.backprop(
                params,
                &w,
                &g_j,
                &mut dtheta[j * angles..(j + 1) * angles],
            )?;
            g_next.axpy(Complex64::new(1.0, 0.0), &g_in)?;
        }
        g = g_next;
        g.axpy(Complex64::new(c[k], 0.0), &g_raw)?;
    }

    // --- Mixing coefficients: b_j = exp(i gamma_j) a_j^2, a = raw/||raw||. ---
    {
        let a = model.lcu_coeffs.normalized_amplitudes()?;
        let raw_norm = model
            .lcu_coeffs
            .raw_amplitudes()
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        let phases = model.lcu_coeffs.phases();
        let mut t = vec![0.0; n];
        for j in 0..n {
            let phase = Complex64::from_polar(1.0, phases[j]);
            t[j] = 4.0 * a[j] * (s_tot[j] * phase).re;
        }
        let radial: f64 = t.iter().zip(a.iter()).map(|(tj, aj)| tj * aj).sum();
        let amp_grads = &mut grads[layout.range(Segment::MixAmplitudes)];
        for m in 0..n {
            amp_grads[m] += (t[m] - a[m] * radial) / raw_norm;
        }
        let phase_grads = &mut grads[layout.range(Segment::MixPhases)];
        for j in 0..n {
            phase_grads[j] += 2.0 * (Complex64::new(0.0, 1.0) * b[j] * s_tot[j]).re;
        }
    }

    // --- Angle projection and embeddings: theta_j = W_E * emb(t_j). ---
    let e = cfg.embed_dim;
    {
        let we_range = layout.range(Segment::AngleProjection);
        let emb_range = layout.range(Segment::Embedding);
        for (j, &token) in context.iter().enumerate() {
            let dth = &dtheta[j * angles..(j + 1) * angles];
            let row = model.embedding_row(token)?;
            {
                let we_grads = &mut grads[we_range.clone()];
                for (a_idx, da) in dth.iter().enumerate() {
                    if *da == 0.0 {
                        continue;
                    }
                    let grow = &mut we_grads[a_idx * e..(a_idx + 1) * e];
                    for (g, x) in grow.iter_mut().zip(row.iter()) {
                        *g += da * x;
                    }
                }
            }
            if !cfg.freeze_embedding {
                let emb_grads = &mut grads[emb_range.clone()];
                let grow = &mut emb_grads[token * e..(token + 1) * e];
                for (a_idx, da) in dth.iter().enumerate() {
                    if *da == 0.0 {
                        continue;
                    }
                    let wrow = &model.w_e[a_idx * e..(a_idx + 1) * e];
                    for (g, w) in grow.iter_mut().zip(wrow.iter()) {
                        *g += da * w;
                    }
                }
            }
        }
    }

    Ok(loss)
}

/// Mean cross-entropy loss and its exact gradient over a batch of
/// (context, target) examples.
///
/// Work is split into one contiguous chunk per rayon thread; each chunk
/// accumulates sequentially and the chunks are reduced in order, so the
/// result is deterministic for a fixed thread count.
pub fn loss_and_grad(
    model: &QuixerModel,
    batch: &[(&[usize], usize)],
    dropout: Option<DropoutPlan>,
) -> Result<(f64, GradientBundle)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("batch is empty".into()));
    }
    if let Some(plan) = dropout {
        if !(0.0..1.0).contains(&plan.rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate {} outside [0, 1)",
                plan.rate
            )));
        }
    }
    let layout = BundleLayout::new(model.config());
    let total = layout.total_len();
    let h = model.config().head_hidden;

    let threads = rayon::current_num_threads().max(1);
    let chunk_size = batch.len().div_ceil(threads);
    let chunks: Vec<(usize, &[(&[usize], usize)])> = batch
        .chunks(chunk_size)
        .enumerate()
        .map(|(i, c)| (i * chunk_size, c))
        .collect();

    let partials: Result<Vec<(f64, Vec<f64>)>> = chunks
        .into_par_iter()
        .map(|(base_index, chunk)| {
            let mut buffer = vec![0.0; total];
            let mut loss_sum = 0.0;
            for (offset, (context, target)) in chunk.iter().enumerate() {
                let mask = dropout
                    .filter(|p| p.rate > 0.0)
                    .map(|p| dropout_mask(p, base_index + offset, h));
                let mask_ref = mask.as_ref().map(|(m, keep)| (m.as_slice(), *keep));
                loss_sum += backprop_example(
                    model, context, *target, mask_ref, &layout, &mut buffer,
                )?;
            }
            Ok((loss_sum, buffer))
        })
        .collect();

    let mut grads = GradientBundle::zeros(layout);
    let mut loss_sum = 0.0;
    for (chunk_loss, buffer) in partials? {
        loss_sum += chunk_loss;
        for (g, b) in grads.values.iter_mut().zip(buffer.iter()) {
            *g += b;
        }
    }
    let scale = 1.0 / batch.len() as f64;
    for g in grads.values.iter_mut() {
        *g *= scale;
    }
    let loss = loss_sum * scale;
    if !loss.is_finite() || grads.values.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            context: "batch loss gradient".into(),
        });
    }
    Ok((loss, grads))
}

/// Mean cross-entropy loss only (no dropout, no gradient); the reference
/// the finite-difference verifier differentiates numerically.
pub fn batch_loss(model: &QuixerModel, batch: &[(&[usize], usize)]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("batch is empty".into()));
    }
    let mut sum = 0.0;
    for (context, target) in batch {
        if *target >= model.config().vocab_size {
            return Err(Error::TokenOutOfRange {
                id: *target,
                vocab_size: model.config().vocab_size,
            });
        }
        let trace = model.forward(context)?;
        sum += cross_entropy(&trace.logits, *target);
    }
    Ok(sum / batch.len() as f64)
}

/// Relative-error floor: coordinates where both analytic and numeric
/// gradients are below this magnitude are compared absolutely against it,
/// so central-difference rounding noise on near-zero gradients does not
/// masquerade as relative error.
pub const FD_RELATIVE_FLOOR: f64 = 1e-4;

/// Verification report for one parameter segment.
#[derive(Clone, Debug)]
pub struct FdSegmentReport {
    pub segment: Segment,
    /// Number of coordinates sampled (0 when skipped).
    pub sampled: usize,
    /// Max of |analytic - numeric| / max(|analytic|, |numeric|, [`FD_RELATIVE_FLOOR`]).
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// Set (with a reason) when the segment was not checked.
    pub skipped: Option<String>,
}

/// Compares analytic gradients against central finite differences on
/// randomly sampled coordinates of every segment.
///
/// `epsilon` must lie in [1e-7, 1e-3]. Segments that cannot influence the
/// loss (a frozen embedding table) are skipped with an explicit note rather
/// than reported as mismatches.
pub fn finite_difference_check(
    model: &QuixerModel,
    batch: &[(&[usize], usize)],
    epsilon: f64,
    samples_per_segment: usize,
    seed: u64,
) -> Result<Vec<FdSegmentReport>> {
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!(
            "epsilon {epsilon} outside [1e-7, 1e-3]"
        )));
    }
    let (_, grads) = loss_and_grad(model, batch, None)?;
    let bundle = ParameterBundle::from_model(model);
    let mut scratch_model = model.clone();
    let mut scratch = bundle.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut reports = Vec::with_capacity(Segment::ALL.len());
    for segment in Segment::ALL {
        let range = bundle.layout().range(segment);
        if range.is_empty() {
            reports.push(FdSegmentReport {
                segment,
                sampled: 0,
                max_rel_error: 0.0,
                max_abs_error: 0.0,
                skipped: Some("segment has no parameters".into()),
            });
            continue;
        }
        if segment == Segment::Embedding && model.config().freeze_embedding {
            reports.push(FdSegmentReport {
                segment,
                sampled: 0,
                max_rel_error: 0.0,
                max_abs_error: 0.0,
                skipped: Some("embedding table is frozen (no gradient defined)".into()),
            });
            continue;
        }
        let count = samples_per_segment.min(range.len());
        let picks = rand::seq::index::sample(&mut rng, range.len(), count);
        let mut max_rel = 0.0f64;
        let mut max_abs = 0.0f64;
        for local in picks.iter() {
            let idx = range.start + local;
            let analytic = grads.values[idx];
            let original = bundle.values[idx];

            scratch.values[idx] = original + epsilon;
            scratch.write_to_model(&mut scratch_model)?;
            let plus = batch_loss(&scratch_model, batch)?;
            scratch.values[idx] = original - epsilon;
            scratch.write_to_model(&mut scratch_model)?;
            let minus = batch_loss(&scratch_model, batch)?;
            scratch.values[idx] = original;

            let numeric = (plus - minus) / (2.0 * epsilon);
            let abs = (analytic - numeric).abs();
            let rel = abs / analytic.abs().max(numeric.abs()).max(FD_RELATIVE_FLOOR);
            max_abs = max_abs.max(abs);
            max_rel = max_rel.max(rel);
        }
        // Restore the untouched parameters for the next segment.
        scratch.values.copy_from_slice(&bundle.values);
        scratch.write_to_model(&mut scratch_model)?;
        reports.push(FdSegmentReport {
            segment,
            sampled: count,
            max_rel_error: max_rel,
            max_abs_error: max_abs,
            skipped: None,
        });
    }
    Ok(reports)
}
