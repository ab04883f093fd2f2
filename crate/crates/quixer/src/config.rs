//! Run configuration: a single flat JSON document describing model shape,
//! training hyperparameters, data paths, and output location. Unknown keys
//! are rejected so typos fail loudly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::train::TrainConfig;

/// Everything one training or evaluation run needs, with defaults matching
/// the full-scale benchmark configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    // Model shape (vocabulary size comes from the training data).
    pub num_qubits: usize,
    pub window: usize,
    pub degree: usize,
    pub ansatz_layers: usize,
    pub embed_dim: usize,
    /// Hidden width of the classical head; defaults to 12 * num_qubits.
    pub head_hidden: Option<usize>,
    pub freeze_embedding: bool,

    // Optimization.
    pub lr_max: f64,
    pub lr_min: f64,
    pub epochs: usize,
    pub batch_contexts: usize,
    pub targets_per_context: Option<usize>,
    pub stride: usize,
    pub weight_decay: f64,
    pub dropout: f64,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Global L2 gradient clip; JSON null disables clipping.
    pub grad_clip: Option<f64>,

    // Data.
    pub train_path: String,
    pub valid_path: String,
    pub test_path: Option<String>,
    /// Append the end-of-sentence token to every encoded line.
    pub append_eos: bool,

    // Output.
    pub output_dir: String,
    /// Also write a JSON-lines log with one record per optimizer step.
    pub steps_jsonl: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            num_qubits: 6,
            window: 32,
            degree: 3,
            ansatz_layers: 4,
            embed_dim: 512,
            head_hidden: None,
            freeze_embedding: false,
            lr_max: 1e-2,
            lr_min: 1e-4,
            epochs: 30,
            batch_contexts: 32,
            targets_per_context: None,
            stride: 1,
            weight_decay: 0.0,
            dropout: 0.0,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            grad_clip: Some(1.0),
            train_path: String::new(),
            valid_path: String::new(),
            test_path: None,
            append_eos: true,
            output_dir: "runs/default".into(),
            steps_jsonl: false,
        }
    }
}

impl RunConfig {
    /// Parses a JSON config file, naming the file in any error.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Structural checks that do not need the data loaded yet.
    pub fn validate(&self) -> Result<()> {
        if self.num_qubits < 2 {
            return Err(Error::Config("num_qubits must be at least 2".into()));
        }
        if self.window == 0 || self.degree == 0 || self.ansatz_layers == 0 || self.embed_dim == 0 {
            return Err(Error::Config(
                "window, degree, ansatz_layers, and embed_dim must be positive".into(),
            ));
        }
        if self.head_hidden == Some(0) {
            return Err(Error::Config("head_hidden must be positive".into()));
        }
        if self.train_path.is_empty() || self.valid_path.is_empty() {
            return Err(Error::Config(
                "train_path and valid_path must be set".into(),
            ));
        }
        if self.output_dir.is_empty() {
            return Err(Error::Config("output_dir must be set".into()));
        }
        self.train_config().validate()
    }

    /// Model shape for a given vocabulary size.
    pub fn model_config(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            embed_dim: self.embed_dim,
            num_qubits: self.num_qubits,
            window: self.window,
            degree: self.degree,
            ansatz_layers: self.ansatz_layers,
            head_hidden: self
                .head_hidden
                .unwrap_or_else(|| ModelConfig::default_head_hidden(self.num_qubits)),
            freeze_embedding: self.freeze_embedding,
        }
    }

    /// Optimization hyperparameters.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr_max: self.lr_max,
            lr_min: self.lr_min,
            epochs: self.epochs,
            batch_contexts: self.batch_contexts,
            targets_per_context: self.targets_per_context,
            window: self.window,
            stride: self.stride,
            weight_decay: self.weight_decay,
            dropout: self.dropout,
            seed: self.seed,
            beta1: self.beta1,
            beta2: self.beta2,
            adam_eps: self.adam_eps,
            grad_clip: self.grad_clip,
        }
    }

    /// Pretty JSON for the config echo written into the output directory.
    pub fn to_pretty_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
