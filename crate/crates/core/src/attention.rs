//! Transformer-style temporal attention over a node's recent neighbors,
//! with optional kernel modulation of the edge-time features.
//!
//! The standard score for neighbor j is
//! `(W_q h_i)^T (W_k h_j + W_e e_bar_ij) / sqrt(d_k)` and the update adds
//! `W_self h_i` to the alpha-weighted sum of `W_v h_j + W_e' e_bar_ij`.
//! The modulated variant replaces `e_bar_ij` with `psi(dt) * e_bar_ij` in
//! both edge terms while leaving the node terms untouched; ablation flags
//! can move the scaling onto the node terms instead (or as well).

use crate::encoding::TimeEncoder;
use crate::graph::NeighborBatch;
use crate::kernel::{Kernel, MlpKernel, MlpVars};
use crate::numeric::{NumericError, NumericResult, Tape, Tensor, VarId};
use rand::Rng;

/// Projection dimensions: node embeddings `d`, output `d_prime` (also the
/// attention scale `d_k`), raw edge features `d_e`, time encoding `d_t`
/// (0 disables the time encoding entirely).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttentionDims {
    pub d: usize,
    pub d_prime: usize,
    pub d_e: usize,
    pub d_t: usize,
}

impl AttentionDims {
    pub fn edge_time_dim(&self) -> usize {
        self.d_e + self.d_t
    }
}

/// The six projection matrices of the attention block.
#[derive(Debug, Clone)]
pub struct AttentionParams {
    pub dims: AttentionDims,
    pub w_q: Tensor,
    pub w_k: Tensor,
    pub w_v: Tensor,
    pub w_e: Tensor,
    pub w_e_prime: Tensor,
    pub w_self: Tensor,
}

/// Tape bindings for [`AttentionParams`].
#[derive(Debug, Clone, Copy)]
pub struct AttentionVars {
    pub dims: AttentionDims,
    pub w_q: VarId,
    pub w_k: VarId,
    pub w_v: VarId,
    pub w_e: VarId,
    pub w_e_prime: VarId,
    pub w_self: VarId,
}

impl AttentionParams {
    /// Seeded uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
    pub fn init(dims: AttentionDims, rng: &mut impl Rng) -> NumericResult<Self> {
        if dims.d == 0 || dims.d_prime == 0 || dims.d_e == 0 {
            return Err(NumericError::Domain(format!(
                "attention dims d, d_prime, d_e must be positive, got {dims:?}"
            )));
        }
        let mut init = |rows: usize, cols: usize| -> Tensor {
            let bound = 1.0 / (cols as f64).sqrt();
            let data = (0..rows * cols)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            Tensor::matrix(rows, cols, data).expect("valid init shape")
        };
        let de = dims.edge_time_dim();
        Ok(AttentionParams {
            dims,
            w_q: init(dims.d_prime, dims.d),
            w_k: init(dims.d_prime, dims.d),
            w_v: init(dims.d_prime, dims.d),
            w_e: init(dims.d_prime, de),
            w_e_prime: init(dims.d_prime, de),
            w_self: init(dims.d_prime, dims.d),
        })
    }

    /// All-ones matrices; handy for hand-evaluated fixtures.
    pub fn ones(dims: AttentionDims) -> NumericResult<Self> {
        let fill = |rows: usize, cols: usize| {
            Tensor::matrix(rows, cols, vec![1.0; rows * cols]).expect("valid shape")
        };
        if dims.d == 0 || dims.d_prime == 0 || dims.d_e == 0 {
            return Err(NumericError::Domain(format!(
                "attention dims d, d_prime, d_e must be positive, got {dims:?}"
            )));
        }
        let de = dims.edge_time_dim();
        Ok(AttentionParams {
            dims,
            w_q: fill(dims.d_prime, dims.d),
            w_k: fill(dims.d_prime, dims.d),
            w_v: fill(dims.d_prime, dims.d),
            w_e: fill(dims.d_prime, de),
            w_e_prime: fill(dims.d_prime, de),
            w_self: fill(dims.d_prime, dims.d),
        })
    }

    pub fn bind(&self, tape: &mut Tape) -> AttentionVars {
        AttentionVars {
            dims: self.dims,
            w_q: tape.param(self.w_q.clone()),
            w_k: tape.param(self.w_k.clone()),
            w_v: tape.param(self.w_v.clone()),
            w_e: tape.param(self.w_e.clone()),
            w_e_prime: tape.param(self.w_e_prime.clone()),
            w_self: tape.param(self.w_self.clone()),
        }
    }

    pub fn params(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("attn.w_q", &self.w_q),
            ("attn.w_k", &self.w_k),
            ("attn.w_v", &self.w_v),
            ("attn.w_e", &self.w_e),
            ("attn.w_e_prime", &self.w_e_prime),
            ("attn.w_self", &self.w_self),
        ]
    }

    pub fn params_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![
            ("attn.w_q", &mut self.w_q),
            ("attn.w_k", &mut self.w_k),
            ("attn.w_v", &mut self.w_v),
            ("attn.w_e", &mut self.w_e),
            ("attn.w_e_prime", &mut self.w_e_prime),
            ("attn.w_self", &mut self.w_self),
        ]
    }
}

/// Where the kernel weight lands in the score and update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    /// No scaling anywhere: the standard formulation.
    Neither,
    /// Scale the node terms `W_k h_j` / `W_v h_j` (ablation variant).
    Node,
    /// Scale the edge terms: the primary modulated formulation.
    Edge,
    /// Scale both node and edge terms.
    Both,
}

impl Modulation {
    pub fn name(&self) -> &'static str {
        match self {
            Modulation::Neither => "neither",
            Modulation::Node => "node",
            Modulation::Edge => "edge",
            Modulation::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Modulation> {
        Some(match s {
            "neither" => Modulation::Neither,
            "node" => Modulation::Node,
            "edge" => Modulation::Edge,
            "both" => Modulation::Both,
            _ => return None,
        })
    }
}

/// Kernel as seen by the tape: either a constant weight per neighbor or a
/// trainable MLP evaluated as tape nodes.
pub enum TapeKernel<'a> {
    Fixed(&'a Kernel),
    Mlp(MlpVars),
}

enum PsiTerm {
    Const(f64),
    Var(VarId),
}

impl TapeKernel<'_> {
    fn psi(&self, tape: &mut Tape, delta_t: f64) -> NumericResult<PsiTerm> {
        match self {
            TapeKernel::Fixed(k) => Ok(PsiTerm::Const(k.eval(delta_t)?)),
            TapeKernel::Mlp(vars) => Ok(PsiTerm::Var(MlpKernel::forward_on_tape(
                tape, vars, delta_t,
            )?)),
        }
    }
}

fn apply_psi(tape: &mut Tape, x: VarId, psi: &PsiTerm) -> NumericResult<VarId> {
    match psi {
        PsiTerm::Const(c) => tape.scale(x, *c),
        PsiTerm::Var(s) => tape.mul_scalar(x, *s),
    }
}

/// One neighbor as seen by the attention block.
pub struct NeighborInput<'a> {
    pub state: VarId,
    pub edge_feat: &'a [f64],
    pub delta_t: f64,
}

/// Tape handles produced by a forward pass.
pub struct AttentionTrace {
    pub h_prime: VarId,
    /// Softmax output over neighbors; absent for an empty neighborhood.
    pub alphas: Option<VarId>,
    /// Pre-softmax scores, one per neighbor.
    pub logits: Vec<VarId>,
}

/// Forward values extracted from a trace.
#[derive(Debug, Clone)]
pub struct AttentionOutput {
    pub h_prime: Tensor,
    pub alphas: Vec<f64>,
    pub logits: Vec<f64>,
}

impl AttentionOutput {
    pub fn from_trace(tape: &Tape, trace: &AttentionTrace) -> Self {
        AttentionOutput {
            h_prime: tape.value(trace.h_prime).clone(),
            alphas: trace
                .alphas
                .map(|a| tape.value(a).data().to_vec())
                .unwrap_or_default(),
            logits: trace
                .logits
                .iter()
                .map(|&l| tape.value(l).data()[0])
                .collect(),
        }
    }
}

fn named_dim_check(actual: usize, expected: usize, matrix: &str, role: &str) -> NumericResult<()> {
    if actual != expected {
        return Err(NumericError::Domain(format!(
            "attention: {role} has length {actual} but {matrix} expects {expected}"
        )));
    }
    Ok(())
}

/// Attention over recorded tape values. `h_center` and each neighbor state
/// must be `d`-vectors already on the tape; edge features and elapsed times
/// enter as constants. Empty neighborhoods reduce to `W_self h_i`.
pub fn attention_forward(
    tape: &mut Tape,
    vars: &AttentionVars,
    kernel: &TapeKernel,
    modulation: Modulation,
    h_center: VarId,
    neighbors: &[NeighborInput],
    encoder: Option<(&TimeEncoder, Option<VarId>)>,
) -> NumericResult<AttentionTrace> {
    let dims = vars.dims;
    named_dim_check(tape.value(h_center).numel(), dims.d, "W_q", "h_i")?;
    if let Some((enc, _)) = encoder {
        named_dim_check(enc.d_t(), dims.d_t, "W_e", "time encoding")?;
    } else {
        named_dim_check(0, dims.d_t, "W_e", "time encoding")?;
    }

    let h_self = tape.matvec(vars.w_self, h_center)?;
    if neighbors.is_empty() {
        return Ok(AttentionTrace {
            h_prime: h_self,
            alphas: None,
            logits: Vec::new(),
        });
    }

    let q = tape.matvec(vars.w_q, h_center)?;
    let inv_sqrt_dk = 1.0 / (dims.d_prime as f64).sqrt();

    let mut logits = Vec::with_capacity(neighbors.len());
    let mut values = Vec::with_capacity(neighbors.len());
    for nb in neighbors {
        named_dim_check(tape.value(nb.state).numel(), dims.d, "W_k", "h_j")?;
        named_dim_check(nb.edge_feat.len(), dims.d_e, "W_e", "edge features")?;
        if nb.delta_t < 0.0 || !nb.delta_t.is_finite() {
            return Err(NumericError::Domain(format!(
                "attention: delta_t must be finite and non-negative, got {}",
                nb.delta_t
            )));
        }

        let edge = tape.constant(Tensor::vector(nb.edge_feat.to_vec())?);
        let edge_time = match encoder {
            Some((enc, omega)) => {
                let phi = enc.encode_on_tape(tape, omega, nb.delta_t)?;
                tape.concat(edge, phi)?
            }
            None => edge,
        };

        let psi = kernel.psi(tape, nb.delta_t)?;
        let modulate_edge = matches!(modulation, Modulation::Edge | Modulation::Both);
        let modulate_node = matches!(modulation, Modulation::Node | Modulation::Both);
        let edge_term = if modulate_edge {
            apply_psi(tape, edge_time, &psi)?
        } else {
            edge_time
        };

        let mut node_key = tape.matvec(vars.w_k, nb.state)?;
        let mut node_value = tape.matvec(vars.w_v, nb.state)?;
        if modulate_node {
            node_key = apply_psi(tape, node_key, &psi)?;
            node_value = apply_psi(tape, node_value, &psi)?;
        }

        let edge_key = tape.matvec(vars.w_e, edge_term)?;
        let key = tape.add(node_key, edge_key)?;
        let raw = tape.dot(q, key)?;
        logits.push(tape.scale(raw, inv_sqrt_dk)?);

        let edge_value = tape.matvec(vars.w_e_prime, edge_term)?;
        values.push(tape.add(node_value, edge_value)?);
    }

    let logit_vec = tape.stack(&logits)?;
    let alphas = tape.softmax(logit_vec)?;

    let mut h_prime = h_self;
    for (j, value) in values.iter().enumerate() {
        let alpha_j = tape.index(alphas, j)?;
        let weighted = tape.mul_scalar(*value, alpha_j)?;
        h_prime = tape.add(h_prime, weighted)?;
    }

    Ok(AttentionTrace {
        h_prime,
        alphas: Some(alphas),
        logits,
    })
}

/// Convenience wrapper over plain tensors: builds a scratch tape, binds
/// nothing trainable, and extracts forward values. `node_states[id]` holds
/// the embedding for graph node `id`.
pub fn modulated_attention(
    params: &AttentionParams,
    kernel: &Kernel,
    modulation: Modulation,
    h_center: &Tensor,
    batch: &NeighborBatch,
    node_states: &[Tensor],
    encoder: Option<&TimeEncoder>,
) -> NumericResult<AttentionOutput> {
    let mut tape = Tape::new();
    let vars = params.bind(&mut tape);
    let center = tape.constant(h_center.clone());
    let states: Vec<VarId> = batch
        .neighbors
        .iter()
        .map(|(node, _, _)| {
            if *node >= node_states.len() {
                return Err(NumericError::Domain(format!(
                    "attention: no state for node {node}"
                )));
            }
            Ok(tape.constant(node_states[*node].clone()))
        })
        .collect::<NumericResult<_>>()?;
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
    let omega = encoder.and_then(|e| e.bind(&mut tape));
    let enc = encoder.map(|e| (e, omega));
    let trace = attention_forward(
        &mut tape,
        &vars,
        &TapeKernel::Fixed(kernel),
        modulation,
        center,
        &neighbors,
        enc,
    )?;
    Ok(AttentionOutput::from_trace(&tape, &trace))
}

/// Standard attention: no kernel, no modulation.
pub fn standard_attention(
    params: &AttentionParams,
    h_center: &Tensor,
    batch: &NeighborBatch,
    node_states: &[Tensor],
    encoder: Option<&TimeEncoder>,
) -> NumericResult<AttentionOutput> {
    modulated_attention(
        params,
        &Kernel::None,
        Modulation::Neither,
        h_center,
        batch,
        node_states,
        encoder,
    )
}

/// Kernel-modulated attention with the edge terms scaled by `psi(dt)`.
pub fn keat_attention(
    params: &AttentionParams,
    kernel: &Kernel,
    h_center: &Tensor,
    batch: &NeighborBatch,
    node_states: &[Tensor],
    encoder: Option<&TimeEncoder>,
) -> NumericResult<AttentionOutput> {
    modulated_attention(
        params,
        kernel,
        Modulation::Edge,
        h_center,
        batch,
        node_states,
        encoder,
    )
}

/// Which representative timestamp to use for a patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchTimeStat {
    Mean,
    Max,
    Last,
}

pub fn patch_timestamp(times: &[f64], stat: PatchTimeStat) -> NumericResult<f64> {
    if times.is_empty() {
        return Err(NumericError::EmptyInput {
            op: "patch_timestamp",
        });
    }
    Ok(match stat {
        PatchTimeStat::Mean => times.iter().sum::<f64>() / times.len() as f64,
        PatchTimeStat::Max => times.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        PatchTimeStat::Last => *times.last().unwrap(),
    })
}

/// Min-max normalize patch timestamps into `[0, hi]` so the exponential
/// query/key scaling cannot overflow. Constant inputs map to all zeros.
pub fn normalize_patch_times(times: &[f64], hi: f64) -> Vec<f64> {
    let lo = times.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = times.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max - lo;
    if span <= 0.0 || !span.is_finite() {
        return vec![0.0; times.len()];
    }
    times.iter().map(|&t| (t - lo) / span * hi).collect()
}

/// Patch-level score matrix with asymmetric temporal scaling: the query of
/// patch p is scaled by `exp(t_p)` and the key of patch q by `exp(-t_q)`,
/// so `logit[p][q] = exp(t_p - t_q) * (W_q z_p)^T (W_k z_q) / sqrt(d_k)`.
/// Timestamps must be pre-normalized to a bounded range (see
/// [`normalize_patch_times`]); overflow is reported, not propagated.
pub fn patch_scaled_scores(
    z_patches: &[Tensor],
    t_patches: &[f64],
    w_q: &Tensor,
    w_k: &Tensor,
) -> NumericResult<Tensor> {
    if z_patches.is_empty() {
        return Err(NumericError::EmptyInput {
            op: "patch_scaled_scores",
        });
    }
    if z_patches.len() != t_patches.len() {
        return Err(NumericError::Domain(format!(
            "patch_scaled_scores: {} patches but {} timestamps",
            z_patches.len(),
            t_patches.len()
        )));
    }
    let d_k = w_q.rows();
    if w_k.rows() != d_k {
        return Err(NumericError::ShapeMismatch {
            op: "patch_scaled_scores",
            lhs: w_q.shape().to_vec(),
            rhs: w_k.shape().to_vec(),
        });
    }
    let mut queries = Vec::with_capacity(z_patches.len());
    let mut keys = Vec::with_capacity(z_patches.len());
    for (z, &t) in z_patches.iter().zip(t_patches) {
        let scale_q = t.exp();
        let scale_k = (-t).exp();
        if !scale_q.is_finite() || !scale_k.is_finite() {
            return Err(NumericError::NonFinite {
                context: format!(
                    "patch_scaled_scores: exp({t}) overflows; normalize patch timestamps \
                     to a bounded range first (see normalize_patch_times)"
                ),
            });
        }
        let q = crate::numeric::matvec(w_q, z)?;
        let k = crate::numeric::matvec(w_k, z)?;
        queries.push(Tensor::vector(q.data().iter().map(|v| v * scale_q).collect())?);
        keys.push(Tensor::vector(k.data().iter().map(|v| v * scale_k).collect())?);
    }
    let n = z_patches.len();
    let inv_sqrt_dk = 1.0 / (d_k as f64).sqrt();
    let mut out = vec![0.0; n * n];
    for p in 0..n {
        for q in 0..n {
            let raw = crate::numeric::dot(&queries[p], &keys[q])?;
            let v = raw * inv_sqrt_dk;
            if !v.is_finite() {
                return Err(NumericError::NonFinite {
                    context: "patch_scaled_scores: logit overflow; normalize patch timestamps"
                        .to_string(),
                });
            }
            out[p * n + q] = v;
        }
    }
    Tensor::matrix(n, n, out)
}

/// Fixed scene for the attention heatmap: node and edge features are held
/// constant while one probe neighbor's elapsed time sweeps a grid.
#[derive(Debug, Clone)]
pub struct HeatmapFixture {
    pub params: AttentionParams,
    pub kernel: Kernel,
    pub encoder: Option<TimeEncoder>,
    pub h_center: Tensor,
    pub neighbor_states: Vec<Tensor>,
    pub edge_feats: Vec<Vec<f64>>,
    pub base_delta_ts: Vec<f64>,
    pub probe: usize,
}

/// One row of the heatmap table: attention on `neighbor` when the probe
/// neighbor sits at elapsed time `delta_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapRow {
    pub neighbor: usize,
    pub delta_t: f64,
    pub alpha_std: f64,
    pub alpha_keat: f64,
    pub alpha_diff: f64,
}

/// Evaluate standard and modulated attention at each grid elapsed time
/// (applied to the probe neighbor, the others held fixed) and emit per
/// neighbor alphas plus their difference.
pub fn attention_heatmap(fixture: &HeatmapFixture, grid: &[f64]) -> NumericResult<Vec<HeatmapRow>> {
    let n = fixture.neighbor_states.len();
    if fixture.probe >= n {
        return Err(NumericError::Domain(format!(
            "heatmap probe index {} out of range ({n} neighbors)",
            fixture.probe
        )));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(NumericError::Domain(
            "heatmap grid must be strictly ascending".into(),
        ));
    }
    let mut rows = Vec::with_capacity(grid.len() * n);
    for &dt in grid {
        let mut delta_ts = fixture.base_delta_ts.clone();
        delta_ts[fixture.probe] = dt;
        let std_out = run_fixture(fixture, &delta_ts, &Kernel::None, Modulation::Neither)?;
        let keat_out = run_fixture(fixture, &delta_ts, &fixture.kernel, Modulation::Edge)?;
        for j in 0..n {
            rows.push(HeatmapRow {
                neighbor: j,
                delta_t: dt,
                alpha_std: std_out.alphas[j],
                alpha_keat: keat_out.alphas[j],
                alpha_diff: keat_out.alphas[j] - std_out.alphas[j],
            });
        }
    }
    Ok(rows)
}

fn run_fixture(
    fixture: &HeatmapFixture,
    delta_ts: &[f64],
    kernel: &Kernel,
    modulation: Modulation,
) -> NumericResult<AttentionOutput> {
    let mut tape = Tape::new();
    let vars = fixture.params.bind(&mut tape);
    let center = tape.constant(fixture.h_center.clone());
    let states: Vec<VarId> = fixture
        .neighbor_states
        .iter()
        .map(|s| tape.constant(s.clone()))
        .collect();
    let neighbors: Vec<NeighborInput> = states
        .iter()
        .zip(&fixture.edge_feats)
        .zip(delta_ts)
        .map(|((&state, feat), &dt)| NeighborInput {
            state,
            edge_feat: feat,
            delta_t: dt,
        })
        .collect();
    let omega = fixture.encoder.as_ref().and_then(|e| e.bind(&mut tape));
    let enc = fixture.encoder.as_ref().map(|e| (e, omega));
    let trace = attention_forward(
        &mut tape,
        &vars,
        &TapeKernel::Fixed(kernel),
        modulation,
        center,
        &neighbors,
        enc,
    )?;
    Ok(AttentionOutput::from_trace(&tape, &trace))
}
