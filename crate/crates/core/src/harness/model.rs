//! Link-prediction model: per-node embeddings, one kernel-modulated
//! attention layer over each endpoint's recent history (recomputed per
//! query, so no memory state to maintain), and a two-layer predictor over
//! the concatenated updated embeddings.

use rand::Rng;

use crate::attention::{
    attention_forward, AttentionDims, AttentionParams, AttentionVars, Modulation, NeighborInput,
    TapeKernel,
};
use crate::encoding::{base_for_span, EncoderMode, TimeEncoder};
use crate::graph::TemporalGraph;
use crate::kernel::{Kernel, MlpVars};
use crate::numeric::{NumericResult, Tape, Tensor, VarId};
use crate::rng::substream_rng;

use super::{HarnessError, HarnessResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelChoice {
    None,
    Laplacian,
    Rbf,
    Mlp,
}

impl KernelChoice {
    pub fn name(&self) -> &'static str {
        match self {
            KernelChoice::None => "none",
            KernelChoice::Laplacian => "laplacian",
            KernelChoice::Rbf => "rbf",
            KernelChoice::Mlp => "mlp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "none" => KernelChoice::None,
            "laplacian" => KernelChoice::Laplacian,
            "rbf" => KernelChoice::Rbf,
            "mlp" => KernelChoice::Mlp,
            _ => return None,
        })
    }
}

/// Kernel width given either absolutely or as a multiple of the training
/// set's inter-event gap deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSpec {
    Absolute(f64),
    SigmaMult(f64),
}

impl LambdaSpec {
    pub fn resolve(&self, sigma: Option<f64>) -> HarnessResult<f64> {
        match *self {
            LambdaSpec::Absolute(v) if v > 0.0 => Ok(v),
            LambdaSpec::Absolute(v) => Err(HarnessError::Domain(format!(
                "kernel.lambda must be positive, got {v}"
            ))),
            LambdaSpec::SigmaMult(m) if m > 0.0 => match sigma {
                Some(s) => Ok(m * s),
                None => Err(HarnessError::Domain(
                    "kernel width is a sigma multiple but no training sigma is available".into(),
                )),
            },
            LambdaSpec::SigmaMult(m) => Err(HarnessError::Domain(format!(
                "kernel.lambda_sigma_mult must be positive, got {m}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub d: usize,
    pub d_prime: usize,
    pub d_e: usize,
    /// Time-encoding width; 0 disables the time encoding.
    pub d_t: usize,
    pub kernel_family: KernelChoice,
    pub lambda: LambdaSpec,
    pub encoder_mode: EncoderMode,
    /// Frequency ladder base; 0 derives it from the training time span.
    pub encoder_base: f64,
    pub modulation: Modulation,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: usize,
    pub neighbor_k: usize,
    pub num_negatives: usize,
    pub hidden: usize,
    pub train_frac: f64,
    pub val_frac: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    /// Desk-scale defaults, sized so a full train/eval run on the default
    /// synthetic benchmark finishes in seconds on one core. Matches the
    /// default [`super::SynthConfig`] edge-feature width.
    fn default() -> Self {
        ModelConfig {
            d: 4,
            d_prime: 8,
            d_e: 21,
            d_t: 4,
            kernel_family: KernelChoice::Laplacian,
            lambda: LambdaSpec::SigmaMult(1.0),
            encoder_mode: EncoderMode::Fixed,
            encoder_base: 0.0,
            modulation: Modulation::Edge,
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 3,
            patience: 3,
            neighbor_k: 10,
            num_negatives: 50,
            hidden: 16,
            train_frac: 0.7,
            val_frac: 0.15,
            seed: 1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> HarnessResult<()> {
        if self.d == 0 || self.d_prime == 0 || self.d_e == 0 || self.hidden == 0 {
            return Err(HarnessError::Domain(
                "dims d, d_prime, d_e and hidden must be >= 1".into(),
            ));
        }
        if self.d_t != 0 && !self.d_t.is_multiple_of(2) {
            return Err(HarnessError::Domain(format!(
                "time_encoding.d_t must be 0 (disabled) or even, got {}",
                self.d_t
            )));
        }
        if self.learning_rate <= 0.0 {
            return Err(HarnessError::Domain(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.neighbor_k == 0 || self.num_negatives == 0 {
            return Err(HarnessError::Domain(
                "batch_size, neighbor_k and num_negatives must be >= 1".into(),
            ));
        }
        if !(self.train_frac > 0.0 && self.val_frac >= 0.0 && self.train_frac + self.val_frac <= 1.0)
        {
            return Err(HarnessError::Domain(format!(
                "invalid split fractions train {} val {}",
                self.train_frac, self.val_frac
            )));
        }
        Ok(())
    }

    pub fn attention_dims(&self) -> AttentionDims {
        AttentionDims {
            d: self.d,
            d_prime: self.d_prime,
            d_e: self.d_e,
            d_t: self.d_t,
        }
    }
}

/// The trainable state plus everything needed to run a forward pass.
#[derive(Debug, Clone)]
pub struct LinkModel {
    pub config: ModelConfig,
    /// Resolved kernel width (absolute, after any sigma multiple).
    pub lambda: f64,
    pub num_nodes: usize,
    pub node_emb: Tensor,
    pub attn: AttentionParams,
    pub encoder: Option<TimeEncoder>,
    pub kernel: Kernel,
    pub pred_w1: Tensor,
    pub pred_b1: Tensor,
    pub pred_w2: Tensor,
    pub pred_b2: Tensor,
}

/// Tape bindings for every trainable tensor, in the canonical parameter
/// order (see [`LinkModel::params`]).
#[derive(Debug, Clone, Copy)]
pub struct ModelVars {
    pub node_emb: VarId,
    pub attn: AttentionVars,
    pub omega: Option<VarId>,
    pub mlp: Option<MlpVars>,
    pub pred_w1: VarId,
    pub pred_b1: VarId,
    pub pred_w2: VarId,
    pub pred_b2: VarId,
}

impl LinkModel {
    /// Initialize from a config. `sigma` is the training-set gap deviation
    /// (needed when the width is a sigma multiple), `train_span` the training
    /// time range (used to auto-derive the encoder base).
    pub fn init(
        config: &ModelConfig,
        num_nodes: usize,
        sigma: Option<f64>,
        train_span: f64,
    ) -> HarnessResult<Self> {
        config.validate()?;
        if num_nodes == 0 {
            return Err(HarnessError::Domain("model needs at least one node".into()));
        }
        let lambda = match config.kernel_family {
            KernelChoice::None => 1.0,
            _ => config.lambda.resolve(sigma)?,
        };
        let kernel = match config.kernel_family {
            KernelChoice::None => Kernel::None,
            KernelChoice::Laplacian => Kernel::laplacian(lambda)?,
            KernelChoice::Rbf => Kernel::rbf(lambda)?,
            KernelChoice::Mlp => Kernel::mlp(lambda, config.seed)?,
        };
        let encoder = if config.d_t == 0 {
            None
        } else {
            let base = if config.encoder_base > 0.0 {
                config.encoder_base
            } else {
                base_for_span(config.d_t, train_span)
            };
            Some(TimeEncoder::new(config.d_t, config.encoder_mode, base)?)
        };
        let mut rng = substream_rng(config.seed, "model-init");
        let attn = AttentionParams::init(config.attention_dims(), &mut rng)?;
        let mut init = |rows: usize, cols: usize| -> Tensor {
            let bound = 1.0 / (cols as f64).sqrt();
            let data = (0..rows * cols)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            Tensor::matrix(rows, cols, data).expect("valid init shape")
        };
        let node_emb = init(num_nodes, config.d);
        let pred_w1 = init(config.hidden, 2 * config.d_prime);
        let pred_w2 = init(1, config.hidden);
        Ok(LinkModel {
            config: config.clone(),
            lambda,
            num_nodes,
            node_emb,
            attn,
            encoder,
            kernel,
            pred_w1,
            pred_b1: Tensor::zeros(&[config.hidden]),
            pred_w2,
            pred_b2: Tensor::zeros(&[1]),
        })
    }

    /// Named parameters in canonical order. `bind` registers tape leaves in
    /// exactly this order, which fixes the optimizer state layout and the
    /// checkpoint layout.
    pub fn params(&self) -> Vec<(&'static str, &Tensor)> {
        let mut out: Vec<(&'static str, &Tensor)> = vec![("node_emb", &self.node_emb)];
        out.extend(self.attn.params());
        if let Some(enc) = &self.encoder {
            if enc.is_learnable() {
                out.push(("encoder.omega", enc.omega()));
            }
        }
        if let Kernel::Mlp(mlp) = &self.kernel {
            out.extend(mlp.params());
        }
        out.push(("pred.w1", &self.pred_w1));
        out.push(("pred.b1", &self.pred_b1));
        out.push(("pred.w2", &self.pred_w2));
        out.push(("pred.b2", &self.pred_b2));
        out
    }

    pub fn params_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        let mut out: Vec<(&'static str, &mut Tensor)> = vec![("node_emb", &mut self.node_emb)];
        out.extend(self.attn.params_mut());
        if let Some(enc) = &mut self.encoder {
            if enc.is_learnable() {
                out.push(("encoder.omega", enc.omega_mut()));
            }
        }
        if let Kernel::Mlp(mlp) = &mut self.kernel {
            out.extend(mlp.params_mut());
        }
        out.push(("pred.w1", &mut self.pred_w1));
        out.push(("pred.b1", &mut self.pred_b1));
        out.push(("pred.w2", &mut self.pred_w2));
        out.push(("pred.b2", &mut self.pred_b2));
        out
    }

    pub fn bind(&self, tape: &mut Tape) -> ModelVars {
        let node_emb = tape.param(self.node_emb.clone());
        let attn = self.attn.bind(tape);
        let omega = self.encoder.as_ref().and_then(|e| e.bind(tape));
        let mlp = match &self.kernel {
            Kernel::Mlp(m) => Some(m.bind(tape)),
            _ => None,
        };
        ModelVars {
            node_emb,
            attn,
            omega,
            mlp,
            pred_w1: tape.param(self.pred_w1.clone()),
            pred_b1: tape.param(self.pred_b1.clone()),
            pred_w2: tape.param(self.pred_w2.clone()),
            pred_b2: tape.param(self.pred_b2.clone()),
        }
    }

    /// `VarId`s aligned with [`LinkModel::params`].
    pub fn param_ids(&self, vars: &ModelVars) -> Vec<VarId> {
        let mut out = vec![vars.node_emb];
        out.extend([
            vars.attn.w_q,
            vars.attn.w_k,
            vars.attn.w_v,
            vars.attn.w_e,
            vars.attn.w_e_prime,
            vars.attn.w_self,
        ]);
        if let Some(w) = vars.omega {
            out.push(w);
        }
        if let Some(m) = vars.mlp {
            out.extend([m.w1, m.b1, m.w2, m.b2, m.w3, m.b3]);
        }
        out.extend([vars.pred_w1, vars.pred_b1, vars.pred_w2, vars.pred_b2]);
        out
    }

    fn tape_kernel(&self, vars: &ModelVars) -> TapeKernel<'_> {
        match (&self.kernel, vars.mlp) {
            (Kernel::Mlp(_), Some(m)) => TapeKernel::Mlp(m),
            (k, _) => TapeKernel::Fixed(k),
        }
    }

    /// Updated embedding of `node` at `query_time`: one attention layer over
    /// its most recent `neighbor_k` events strictly before the query.
    pub fn updated_state(
        &self,
        tape: &mut Tape,
        vars: &ModelVars,
        graph: &TemporalGraph,
        node: usize,
        query_time: f64,
    ) -> NumericResult<VarId> {
        let batch = graph.recent_neighbors(node, query_time, self.config.neighbor_k);
        let h_center = tape.row(vars.node_emb, node)?;
        let mut states = Vec::with_capacity(batch.len());
        for (other, _, _) in &batch.neighbors {
            states.push(tape.row(vars.node_emb, *other)?);
        }
        let neighbors: Vec<NeighborInput> = batch
            .neighbors
            .iter()
            .zip(&batch.delta_ts)
            .zip(&states)
            .map(|(((_, feat, _), &dt), &state)| NeighborInput {
                state,
                edge_feat: feat,
                delta_t: dt,
            })
            .collect();
        let kernel = self.tape_kernel(vars);
        let enc = self.encoder.as_ref().map(|e| (e, vars.omega));
        let trace = attention_forward(
            tape,
            &vars.attn,
            &kernel,
            self.config.modulation,
            h_center,
            &neighbors,
            enc,
        )?;
        Ok(trace.h_prime)
    }

    /// Two-layer predictor over concatenated updated embeddings; returns the
    /// link logit as a scalar node.
    pub fn predictor_logit(
        &self,
        tape: &mut Tape,
        vars: &ModelVars,
        h_src: VarId,
        h_dst: VarId,
    ) -> NumericResult<VarId> {
        let z = tape.concat(h_src, h_dst)?;
        let a1 = tape.matvec(vars.pred_w1, z)?;
        let a1 = tape.add(a1, vars.pred_b1)?;
        let h = tape.tanh(a1)?;
        let a2 = tape.matvec(vars.pred_w2, h)?;
        let a2 = tape.add(a2, vars.pred_b2)?;
        tape.index(a2, 0)
    }

    /// Link logit for one `(src, dst, t)` query on a fresh binding.
    pub fn score(
        &self,
        tape: &mut Tape,
        graph: &TemporalGraph,
        src: usize,
        dst: usize,
        query_time: f64,
    ) -> HarnessResult<f64> {
        Ok(self.score_candidates(tape, graph, src, query_time, &[dst])?[0])
    }

    /// Score `src` against many candidate destinations at one query time,
    /// sharing the source-side computation.
    pub fn score_candidates(
        &self,
        tape: &mut Tape,
        graph: &TemporalGraph,
        src: usize,
        query_time: f64,
        candidates: &[usize],
    ) -> HarnessResult<Vec<f64>> {
        tape.reset();
        let vars = self.bind(tape);
        let h_src = self.updated_state(tape, &vars, graph, src, query_time)?;
        let mut scores = Vec::with_capacity(candidates.len());
        for &dst in candidates {
            let h_dst = self.updated_state(tape, &vars, graph, dst, query_time)?;
            let logit = self.predictor_logit(tape, &vars, h_src, h_dst)?;
            scores.push(tape.value(logit).scalar_value()?);
        }
        Ok(scores)
    }
}
