//! Temporal modulation kernels: scalar weights in (0, 1] that downweight
//! older interactions before they enter attention.
//!
//! The closed forms (`exp(-dt/lambda)`, `exp(-dt^2/lambda^2)`) are pure
//! functions with no trainable state and stay off the tape. The MLP kernel
//! is a small trainable network squashed to [0, 1] by a terminal sigmoid.

use rand::Rng;

use crate::numeric::{NumericError, NumericResult, Tape, Tensor, VarId};
use crate::rng::substream_rng;

const MLP_HIDDEN: usize = 16;

/// The modulation family. `None` is the identity (no modulation), which
/// makes the modulated attention collapse to the standard one.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum Kernel {
    None,
    Laplacian { lambda: f64 },
    Rbf { lambda: f64 },
    Mlp(MlpKernel),
}

impl Kernel {
    pub fn laplacian(lambda: f64) -> NumericResult<Self> {
        check_lambda(lambda)?;
        Ok(Kernel::Laplacian { lambda })
    }

    pub fn rbf(lambda: f64) -> NumericResult<Self> {
        check_lambda(lambda)?;
        Ok(Kernel::Rbf { lambda })
    }

    pub fn mlp(lambda: f64, seed: u64) -> NumericResult<Self> {
        check_lambda(lambda)?;
        Ok(Kernel::Mlp(MlpKernel::new(lambda, seed)))
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Kernel::None => "none",
            Kernel::Laplacian { .. } => "laplacian",
            Kernel::Rbf { .. } => "rbf",
            Kernel::Mlp(_) => "mlp",
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Kernel::None)
    }

    pub fn is_mlp(&self) -> bool {
        matches!(self, Kernel::Mlp(_))
    }

    /// Kernel value in [0, 1] for an elapsed time.
    pub fn eval(&self, delta_t: f64) -> NumericResult<f64> {
        if delta_t < 0.0 || !delta_t.is_finite() {
            return Err(NumericError::Domain(format!(
                "kernel requires a finite non-negative delta_t, got {delta_t}"
            )));
        }
        Ok(match self {
            Kernel::None => 1.0,
            Kernel::Laplacian { lambda } => (-delta_t / lambda).exp(),
            Kernel::Rbf { lambda } => (-(delta_t * delta_t) / (lambda * lambda)).exp(),
            Kernel::Mlp(mlp) => mlp.eval_plain(delta_t),
        })
    }
}

fn check_lambda(lambda: f64) -> NumericResult<()> {
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(NumericError::Domain(format!(
            "kernel width lambda must be positive and finite, got {lambda}"
        )));
    }
    Ok(())
}

/// Learned kernel: 1 -> 16 -> 16 -> 1 with tanh hidden activations and a
/// terminal sigmoid, operating on `dt / lambda` for scale robustness.
#[derive(Debug, Clone)]
pub struct MlpKernel {
    pub lambda: f64,
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
    pub w3: Tensor,
    pub b3: Tensor,
}

/// Tape bindings for the MLP kernel parameters.
#[derive(Debug, Clone, Copy)]
pub struct MlpVars {
    pub lambda: f64,
    pub w1: VarId,
    pub b1: VarId,
    pub w2: VarId,
    pub b2: VarId,
    pub w3: VarId,
    pub b3: VarId,
}

impl MlpKernel {
    pub fn new(lambda: f64, seed: u64) -> Self {
        let mut rng = substream_rng(seed, "mlp-kernel-init");
        let mut init = |rows: usize, cols: usize| -> Tensor {
            let bound = 1.0 / (cols as f64).sqrt();
            let data = (0..rows * cols)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            Tensor::matrix(rows, cols, data).expect("valid init shape")
        };
        let w1 = init(MLP_HIDDEN, 1);
        let w2 = init(MLP_HIDDEN, MLP_HIDDEN);
        let w3 = init(1, MLP_HIDDEN);
        MlpKernel {
            lambda,
            w1,
            b1: Tensor::zeros(&[MLP_HIDDEN]),
            w2,
            b2: Tensor::zeros(&[MLP_HIDDEN]),
            w3,
            b3: Tensor::zeros(&[1]),
        }
    }

    pub fn eval_plain(&self, delta_t: f64) -> f64 {
        let x = delta_t / self.lambda;
        let mut h1 = [0.0; MLP_HIDDEN];
        for i in 0..MLP_HIDDEN {
            h1[i] = (self.w1.data()[i] * x + self.b1.data()[i]).tanh();
        }
        let mut h2 = [0.0; MLP_HIDDEN];
        for i in 0..MLP_HIDDEN {
            let mut acc = self.b2.data()[i];
            for j in 0..MLP_HIDDEN {
                acc += self.w2.get2(i, j) * h1[j];
            }
            h2[i] = acc.tanh();
        }
        let mut z = self.b3.data()[0];
        for j in 0..MLP_HIDDEN {
            z += self.w3.get2(0, j) * h2[j];
        }
        1.0 / (1.0 + (-z).exp())
    }

    pub fn bind(&self, tape: &mut Tape) -> MlpVars {
        MlpVars {
            lambda: self.lambda,
            w1: tape.param(self.w1.clone()),
            b1: tape.param(self.b1.clone()),
            w2: tape.param(self.w2.clone()),
            b2: tape.param(self.b2.clone()),
            w3: tape.param(self.w3.clone()),
            b3: tape.param(self.b3.clone()),
        }
    }

    /// Forward pass on the tape; returns a scalar node in (0, 1).
    pub fn forward_on_tape(tape: &mut Tape, vars: &MlpVars, delta_t: f64) -> NumericResult<VarId> {
        let x = tape.constant(Tensor::vector(vec![delta_t / vars.lambda])?);
        let a1 = tape.matvec(vars.w1, x)?;
        let a1 = tape.add(a1, vars.b1)?;
        let h1 = tape.tanh(a1)?;
        let a2 = tape.matvec(vars.w2, h1)?;
        let a2 = tape.add(a2, vars.b2)?;
        let h2 = tape.tanh(a2)?;
        let a3 = tape.matvec(vars.w3, h2)?;
        let a3 = tape.add(a3, vars.b3)?;
        let squashed = tape.sigmoid(a3)?;
        tape.index(squashed, 0)
    }

    pub fn params(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("kernel.w1", &self.w1),
            ("kernel.b1", &self.b1),
            ("kernel.w2", &self.w2),
            ("kernel.b2", &self.b2),
            ("kernel.w3", &self.w3),
            ("kernel.b3", &self.b3),
        ]
    }

    pub fn params_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![
            ("kernel.w1", &mut self.w1),
            ("kernel.b1", &mut self.b1),
            ("kernel.w2", &mut self.w2),
            ("kernel.b2", &mut self.b2),
            ("kernel.w3", &mut self.w3),
            ("kernel.b3", &mut self.b3),
        ]
    }
}

/// Scale an edge-time feature by the kernel weight. For the `None` family
/// the input is returned unchanged, bit for bit.
pub fn modulate(kernel: &Kernel, delta_t: f64, edge_time_feat: &[f64]) -> NumericResult<Vec<f64>> {
    if kernel.is_none() {
        return Ok(edge_time_feat.to_vec());
    }
    let psi = kernel.eval(delta_t)?;
    Ok(edge_time_feat.iter().map(|&v| psi * v).collect())
}

/// Per-criterion outcome of the kernel design checks on a sample grid:
/// monotone non-increasing, bounded in [0, 1], and continuous (largest
/// adjacent jump below the threshold). The MLP family may legitimately
/// fail monotonicity.
#[derive(Debug, Clone, PartialEq)]
pub struct CriteriaReport {
    pub monotone_nonincreasing: bool,
    pub bounded: bool,
    pub continuous: bool,
    pub max_adjacent_jump: f64,
    pub min_value: f64,
    pub max_value: f64,
}

pub fn check_design_criteria(
    kernel: &Kernel,
    grid: &[f64],
    continuity_threshold: f64,
) -> NumericResult<CriteriaReport> {
    if grid.len() < 2 {
        return Err(NumericError::Domain(
            "design criteria need a grid of at least 2 points".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(NumericError::Domain(
            "design criteria grid must be strictly ascending".into(),
        ));
    }
    let values: Vec<f64> = grid
        .iter()
        .map(|&dt| kernel.eval(dt))
        .collect::<NumericResult<_>>()?;
    let mut monotone = true;
    let mut max_jump = 0.0_f64;
    for w in values.windows(2) {
        if w[1] > w[0] + 1e-12 {
            monotone = false;
        }
        max_jump = max_jump.max((w[1] - w[0]).abs());
    }
    let min_value = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_value = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(CriteriaReport {
        monotone_nonincreasing: monotone,
        bounded: min_value >= 0.0 && max_value <= 1.0,
        continuous: max_jump <= continuity_threshold,
        max_adjacent_jump: max_jump,
        min_value,
        max_value,
    })
}
