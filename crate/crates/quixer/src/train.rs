//! Optimization loop: Adam with cosine-annealed learning rate, decoupled
//! weight decay, head-only dropout, gradient clipping, per-epoch validation
//! perplexity, and best-epoch model selection.
//!
//! Determinism contract: with a fixed seed and a fixed rayon thread count,
//! two runs produce identical metrics; with one thread the metrics CSV is
//! byte-identical across machines with the same floating-point environment.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grad::{self, DropoutPlan, GradientBundle, ParameterBundle};
use crate::model::QuixerModel;
use crate::text::TokenStream;

/// Hyperparameters of one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Peak learning rate (start of the cosine schedule).
    pub lr_max: f64,
    /// Floor learning rate (end of the cosine schedule).
    pub lr_min: f64,
    pub epochs: usize,
    /// Context groups per optimizer step.
    pub batch_contexts: usize,
    /// Consecutive stride-1 windows grouped per context; defaults to the
    /// window length, so a step sees batch_contexts * window examples.
    pub targets_per_context: Option<usize>,
    /// Context length fed to the model.
    pub window: usize,
    /// Step between window starts in the training stream.
    pub stride: usize,
    /// Decoupled weight-decay coefficient (skips mixing phases).
    pub weight_decay: f64,
    /// Dropout rate on the head's hidden activations; in [0, 1).
    pub dropout: f64,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Global L2 gradient-clipping threshold; None disables clipping.
    pub grad_clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_max: 1e-2,
            lr_min: 1e-4,
            epochs: 30,
            batch_contexts: 32,
            targets_per_context: None,
            window: 32,
            stride: 1,
            weight_decay: 0.0,
            dropout: 0.0,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            grad_clip: Some(1.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr_max.is_finite() && self.lr_min.is_finite()) {
            return Err(Error::Config("learning rates must be finite".into()));
        }
        if !(self.lr_max >= self.lr_min && self.lr_min > 0.0) {
            return Err(Error::Config(
                "learning rates must satisfy lr_max >= lr_min > 0".into(),
            ));
        }
        if self.batch_contexts == 0 || self.window == 0 || self.stride == 0 {
            return Err(Error::Config(
                "batch_contexts, window, and stride must be positive".into(),
            ));
        }
        if self.targets_per_context == Some(0) {
            return Err(Error::Config("targets_per_context must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must lie in [0, 1)".into()));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::Config("weight_decay must be finite and >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.adam_eps.is_finite() && self.adam_eps > 0.0) {
            return Err(Error::Config("adam_eps must be finite and positive".into()));
        }
        if let Some(clip) = self.grad_clip {
            if !(clip.is_finite() && clip > 0.0) {
                return Err(Error::Config("grad_clip must be finite and positive".into()));
            }
        }
        Ok(())
    }

    fn group_len(&self) -> usize {
        self.targets_per_context.unwrap_or(self.window)
    }
}

/// First and second moment accumulators for Adam.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    beta1: f64,
    beta2: f64,
    eps: f64,
    decay_mask: Vec<bool>,
}

impl AdamState {
    pub fn new(params: &ParameterBundle, beta1: f64, beta2: f64, eps: f64) -> Self {
        let len = params.values.len();
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            beta1,
            beta2,
            eps,
            decay_mask: params.layout().decay_mask(),
        }
    }
}

/// One Adam update with bias correction. Decoupled weight decay multiplies
/// eligible parameters by (1 - lr * weight_decay) before the moment-based
/// update. `step_index` is 1-based.
pub fn adam_step(
    params: &mut ParameterBundle,
    grads: &GradientBundle,
    state: &mut AdamState,
    step_index: usize,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    if params.values.len() != grads.values.len() || params.values.len() != state.m.len() {
        return Err(Error::DimensionMismatch {
            context: "adam_step parameter/gradient/state lengths",
            left: params.values.len(),
            right: grads.values.len(),
        });
    }
    if step_index == 0 {
        return Err(Error::InvalidArgument("step_index must be >= 1".into()));
    }
    if grads.values.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            context: format!("gradient at optimizer step {step_index}"),
        });
    }
    let bc1 = 1.0 - state.beta1.powi(step_index as i32);
    let bc2 = 1.0 - state.beta2.powi(step_index as i32);
    for i in 0..params.values.len() {
        if weight_decay != 0.0 && state.decay_mask[i] {
            params.values[i] *= 1.0 - lr * weight_decay;
        }
        let g = grads.values[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params.values[i] -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

/// Cosine-annealed learning rate: lr_min + (lr_max - lr_min)(1 + cos(pi t/T))/2.
pub fn cosine_lr(step: usize, total_steps: usize, lr_max: f64, lr_min: f64) -> Result<f64> {
    if total_steps == 0 {
        return Err(Error::InvalidArgument(
            "cosine schedule needs at least one step".into(),
        ));
    }
    if step > total_steps {
        return Err(Error::InvalidArgument(format!(
            "step {step} exceeds total_steps {total_steps}"
        )));
    }
    let phase = std::f64::consts::PI * step as f64 / total_steps as f64;
    Ok(lr_min + 0.5 * (lr_max - lr_min) * (1.0 + phase.cos()))
}

/// Clips the gradient to a global L2 norm; returns the pre-clip norm.
fn clip_gradient(grads: &mut GradientBundle, max_norm: f64) -> f64 {
    let norm = grads.l2_norm();
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.values.iter_mut() {
            *g *= scale;
        }
    }
    norm
}

/// Postselection-probability statistics over a set of windows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostselectionStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Per-window evaluation record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowEval {
    /// Negative log-likelihood (natural log) of the window's target.
    pub nll: f64,
    pub postselection_prob: f64,
}

/// Aggregate evaluation result.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport {
    /// exp(mean NLL) over all stride-1 windows of the stream.
    pub perplexity: f64,
    pub postselection: PostselectionStats,
    pub windows: usize,
}

/// Evaluates every stride-1 window of the stream (dropout disabled),
/// returning per-window records in stream order.
///
/// Windows are processed in parallel, collected in order, and folded
/// sequentially, so the result does not depend on the thread count.
pub fn evaluate_windows(model: &QuixerModel, stream: &TokenStream, window: usize) -> Result<Vec<WindowEval>> {
    let examples: Vec<(&[usize], usize)> = stream.windows(window, 1)?.collect();
    examples
        .into_par_iter()
        .map(|(context, target)| {
            if target >= model.config().vocab_size {
                return Err(Error::TokenOutOfRange {
                    id: target,
                    vocab_size: model.config().vocab_size,
                });
            }
            let trace = model.forward(context)?;
            Ok(WindowEval {
                nll: grad::cross_entropy(&trace.logits, target),
                postselection_prob: trace.postselection_prob,
            })
        })
        .collect()
}

/// Perplexity (exp of mean NLL) and postselection statistics over all
/// stride-1 windows of a stream.
pub fn evaluate_perplexity(
    model: &QuixerModel,
    stream: &TokenStream,
    window: usize,
) -> Result<EvalReport> {
    let evals = evaluate_windows(model, stream, window)?;
    let count = evals.len();
    let mut nll_sum = 0.0;
    let mut post_sum = 0.0;
    let mut post_min = f64::INFINITY;
    let mut post_max = f64::NEG_INFINITY;
    for e in &evals {
        nll_sum += e.nll;
        post_sum += e.postselection_prob;
        post_min = post_min.min(e.postselection_prob);
        post_max = post_max.max(e.postselection_prob);
    }
    let mean_nll = nll_sum / count as f64;
    if !mean_nll.is_finite() {
        return Err(Error::NonFinite {
            context: "mean negative log-likelihood".into(),
        });
    }
    Ok(EvalReport {
        perplexity: mean_nll.exp(),
        postselection: PostselectionStats {
            mean: post_sum / count as f64,
            min: post_min,
            max: post_max,
        },
        windows: count,
    })
}

/// Metrics of one epoch. Wall time is reported on stdout and kept here but
/// excluded from the CSV so reruns with a fixed seed are byte-identical.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_perplexity: f64,
    pub postselection: PostselectionStats,
    pub wall_time_secs: f64,
}

/// Metrics of one optimizer step (for the optional JSON-lines step log).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepMetrics {
    pub global_step: usize,
    pub epoch: usize,
    pub lr: f64,
    pub loss: f64,
    pub grad_norm: f64,
}

/// Full training log.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsLog {
    pub epochs: Vec<EpochMetrics>,
    pub steps: Vec<StepMetrics>,
    /// Index into `epochs` of the best validation perplexity.
    pub best_epoch: Option<usize>,
}

impl MetricsLog {
    /// CSV with one row per epoch; columns: epoch, train_loss,
    /// val_perplexity, postselection_mean, postselection_min,
    /// postselection_max. Deterministic shortest-round-trip float formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "epoch,train_loss,val_perplexity,postselection_mean,postselection_min,postselection_max\n",
        );
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.epoch,
                e.train_loss,
                e.val_perplexity,
                e.postselection.mean,
                e.postselection.min,
                e.postselection.max
            ));
        }
        out
    }

    /// JSON-lines step log (one object per optimizer step).
    pub fn steps_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for step in &self.steps {
            out.push_str(&serde_json::to_string(step)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Trains a copy of the model, returning the epoch snapshot with the best
/// validation perplexity together with the full metrics log.
///
/// Windows are grouped into runs of consecutive stride-positioned examples
/// (`targets_per_context` per group); each optimizer step draws
/// `batch_contexts` groups in a seeded per-epoch shuffle of group order.
pub fn train_model(
    model: &QuixerModel,
    train_stream: &TokenStream,
    valid_stream: &TokenStream,
    config: &TrainConfig,
) -> Result<(QuixerModel, MetricsLog)> {
    train_model_with_progress(model, train_stream, valid_stream, config, |_| {})
}

/// [`train_model`] with a per-epoch observer (progress reporting for long
/// runs; the observer sees each epoch's metrics as they complete).
pub fn train_model_with_progress(
    model: &QuixerModel,
    train_stream: &TokenStream,
    valid_stream: &TokenStream,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<(QuixerModel, MetricsLog)> {
    config.validate()?;
    let mut log = MetricsLog::default();
    if config.epochs == 0 {
        return Ok((model.clone(), log));
    }

    let windows: Vec<(&[usize], usize)> =
        train_stream.windows(config.window, config.stride)?.collect();
    let groups: Vec<&[(&[usize], usize)]> = windows.chunks(config.group_len()).collect();
    let steps_per_epoch = groups.len().div_ceil(config.batch_contexts);
    let total_steps = steps_per_epoch * config.epochs;

    let mut current = model.clone();
    let mut params = ParameterBundle::from_model(&current);
    let mut adam = AdamState::new(&params, config.beta1, config.beta2, config.adam_eps);
    let mut best: Option<(f64, QuixerModel, usize)> = None;
    let mut global_step = 0usize;

    for epoch in 0..config.epochs {
        let epoch_start = Instant::now();
        let mut order: Vec<usize> = (0..groups.len()).collect();
        let mut shuffle_rng =
            ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9E37 * (epoch as u64 + 1)));
        order.shuffle(&mut shuffle_rng);

        let mut loss_sum = 0.0;
        let mut example_count = 0usize;
        for step_groups in order.chunks(config.batch_contexts) {
            let batch: Vec<(&[usize], usize)> = step_groups
                .iter()
                .flat_map(|gi| groups[*gi].iter().copied())
                .collect();
            let lr = cosine_lr(global_step, total_steps, config.lr_max, config.lr_min)?;
            let dropout = (config.dropout > 0.0).then_some(DropoutPlan {
                rate: config.dropout,
                seed: config
                    .seed
                    .wrapping_mul(0x100000001B3)
                    .wrapping_add(global_step as u64),
            });
            let (loss, mut grads) = grad::loss_and_grad(&current, &batch, dropout)?;
            let grad_norm = match config.grad_clip {
                Some(max_norm) => clip_gradient(&mut grads, max_norm),
                None => grads.l2_norm(),
            };
            adam_step(
                &mut params,
                &grads,
                &mut adam,
                global_step + 1,
                lr,
                config.weight_decay,
            )?;
            params.write_to_model(&mut current)?;
            loss_sum += loss * batch.len() as f64;
            example_count += batch.len();
            log.steps.push(StepMetrics {
                global_step,
                epoch,
                lr,
                loss,
                grad_norm,
            });
            global_step += 1;
        }

        let eval = evaluate_perplexity(&current, valid_stream, config.window)?;
        let metrics = EpochMetrics {
            epoch,
            train_loss: loss_sum / example_count as f64,
            val_perplexity: eval.perplexity,
            postselection: eval.postselection,
            wall_time_secs: epoch_start.elapsed().as_secs_f64(),
        };
        let improved = best
            .as_ref()
            .map_or(true, |(best_ppl, _, _)| eval.perplexity < *best_ppl);
        if improved {
            best = Some((eval.perplexity, current.clone(), epoch));
        }
        on_epoch(&metrics);
        log.epochs.push(metrics);
    }

    let (_, best_model, best_epoch) = best.expect("epochs >= 1 evaluates at least once");
    log.best_epoch = Some(best_epoch);
    Ok((best_model, log))
}
