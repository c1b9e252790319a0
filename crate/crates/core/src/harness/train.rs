//! Training loop: adaptive-moment updates on binary cross-entropy over
//! positive links and sampled negatives, early stopping on validation MRR,
//! best-checkpoint restore. Bitwise deterministic for a fixed seed.

use crate::graph::{SplitBounds, TemporalGraph};
use crate::numeric::{NumericError, Tape, Tensor};
use crate::rng::{substream_rng, substream_seed};

use super::metrics::{destination_universe, evaluate_model, sample_negatives};
use super::{HarnessError, HarnessResult, LinkModel};

const IMPROVEMENT_TOL: f64 = 1e-6;

/// Per-epoch record of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub epoch_loss: Vec<f64>,
    pub val_mrr: Vec<f64>,
    pub best_epoch: Option<usize>,
    pub best_val_mrr: f64,
    pub stopped_early: bool,
}

/// First-order adaptive-moment optimizer with bias correction. Parameter
/// slots are positional and must match the model's canonical order.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    steps: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl Adam {
    pub fn new(lr: f64, shapes: &[Vec<usize>]) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            steps: 0,
            m: shapes.iter().map(|s| Tensor::zeros(s)).collect(),
            v: shapes.iter().map(|s| Tensor::zeros(s)).collect(),
        }
    }

    pub fn step(&mut self, params: &mut [(&'static str, &mut Tensor)], grads: &[&Tensor]) {
        self.steps += 1;
        let t = self.steps as f64;
        let bc1 = 1.0 - self.beta1.powf(t);
        let bc2 = 1.0 - self.beta2.powf(t);
        for (slot, (_, param)) in params.iter_mut().enumerate() {
            let g = grads[slot].data();
            let m = self.m[slot].data_mut();
            let v = self.v[slot].data_mut();
            let p = param.data_mut();
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

/// Train in place on the events before `bounds.train_end`, validating on
/// `[train_end, val_end)`. Returns the per-epoch history; the model is left
/// at the best-validation checkpoint. Zero configured epochs return the
/// initialization unchanged.
pub fn train(
    model: &mut LinkModel,
    graph: &TemporalGraph,
    bounds: SplitBounds,
) -> HarnessResult<TrainHistory> {
    let config = model.config.clone();
    config.validate()?;
    if bounds.train_end == 0 {
        return Err(HarnessError::Domain("empty training split".into()));
    }
    let mut history = TrainHistory {
        epoch_loss: Vec::new(),
        val_mrr: Vec::new(),
        best_epoch: None,
        best_val_mrr: f64::NEG_INFINITY,
        stopped_early: false,
    };
    if config.epochs == 0 {
        return Ok(history);
    }

    let universe = destination_universe(graph);
    let shapes: Vec<Vec<usize>> = model
        .params()
        .iter()
        .map(|(_, t)| t.shape().to_vec())
        .collect();
    let mut adam = Adam::new(config.learning_rate, &shapes);
    let has_val = bounds.val_end > bounds.train_end;
    let mut best_params: Vec<Tensor> = model.params().iter().map(|(_, t)| (*t).clone()).collect();
    let mut bad_epochs = 0usize;
    let mut tape = Tape::new();

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..bounds.train_end).collect();
        let mut order_rng = substream_rng(config.seed, &format!("train-order-{epoch}"));
        shuffle(&mut order, &mut order_rng);
        let mut neg_rng = substream_rng(config.seed, &format!("train-negatives-{epoch}"));

        let mut loss_sum = 0.0;
        let mut loss_events = 0usize;
        for chunk in order.chunks(config.batch_size) {
            tape.reset();
            let vars = model.bind(&mut tape);
            let ids = model.param_ids(&vars);
            let mut losses = Vec::with_capacity(2 * chunk.len());
            for &idx in chunk {
                let ev = &graph.events()[idx];
                let neg = sample_negatives(&universe, ev.dst, 1, &mut neg_rng)?[0];
                let result: Result<(), NumericError> = (|| {
                    let h_src = model.updated_state(&mut tape, &vars, graph, ev.src, ev.time)?;
                    let h_pos = model.updated_state(&mut tape, &vars, graph, ev.dst, ev.time)?;
                    let h_neg = model.updated_state(&mut tape, &vars, graph, neg, ev.time)?;
                    let pos_logit = model.predictor_logit(&mut tape, &vars, h_src, h_pos)?;
                    let neg_logit = model.predictor_logit(&mut tape, &vars, h_src, h_neg)?;
                    losses.push(tape.bce_with_logits(pos_logit, 1.0)?);
                    losses.push(tape.bce_with_logits(neg_logit, 0.0)?);
                    Ok(())
                })();
                result.map_err(|e| diverged_or(e, epoch))?;
            }
            let batch_loss = (|| -> Result<f64, NumericError> {
                let stacked = tape.stack(&losses)?;
                let total = tape.sum(stacked)?;
                let loss = tape.scale(total, 1.0 / losses.len() as f64)?;
                let value = tape.value(loss).scalar_value()?;
                let grads = tape.backward(loss)?;
                let grad_refs: Vec<&Tensor> = ids.iter().map(|&id| grads.get(id)).collect();
                let mut params = model.params_mut();
                adam.step(&mut params, &grad_refs);
                Ok(value)
            })()
            .map_err(|e| diverged_or(e, epoch))?;
            if !batch_loss.is_finite() {
                return Err(HarnessError::Diverged { epoch });
            }
            loss_sum += batch_loss * chunk.len() as f64;
            loss_events += chunk.len();
        }
        history.epoch_loss.push(loss_sum / loss_events as f64);

        if has_val {
            let val = evaluate_model(
                model,
                graph,
                bounds.train_end..bounds.val_end,
                config.num_negatives,
                &[],
                substream_seed(config.seed, "val-negatives"),
            )?;
            history.val_mrr.push(val.mrr);
            if val.mrr > history.best_val_mrr + IMPROVEMENT_TOL {
                history.best_val_mrr = val.mrr;
                history.best_epoch = Some(epoch);
                best_params = model.params().iter().map(|(_, t)| (*t).clone()).collect();
                bad_epochs = 0;
            } else {
                bad_epochs += 1;
                if bad_epochs >= config.patience {
                    history.stopped_early = true;
                    break;
                }
            }
        } else {
            history.val_mrr.push(f64::NAN);
            history.best_epoch = Some(epoch);
            best_params = model.params().iter().map(|(_, t)| (*t).clone()).collect();
        }
    }

    for ((_, param), saved) in model.params_mut().iter_mut().zip(best_params) {
        **param = saved;
    }
    Ok(history)
}

fn diverged_or(err: NumericError, epoch: usize) -> HarnessError {
    match err {
        NumericError::NonFinite { .. } => HarnessError::Diverged { epoch },
        other => HarnessError::Numeric(other),
    }
}

fn shuffle(order: &mut [usize], rng: &mut impl rand::Rng) {
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
}
