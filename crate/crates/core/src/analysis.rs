//! Numerical verification of the kernel-modulation analysis: decay of the
//! moment ratios `R_n = E[psi(t) t^n] / E[t^n]`, full-moment sensitivity of
//! the kernel-times-cosine product series, and the variance reduction of
//! modulated attention logits, including the correlated-neighbor extension.
//!
//! Monte-Carlo estimates use batch means over a fixed number of equally
//! sized batches: the pooled mean is the estimate, the batch spread gives
//! the standard error. Reductions run in fixed batch order so results are
//! reproducible for a given seed.

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal};
use thiserror::Error;

use crate::kernel::Kernel;
use crate::rng::substream_rng;

const BATCHES: usize = 20;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{0}")]
    Domain(String),
    #[error("degenerate distribution: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Numeric(#[from] crate::numeric::NumericError),
}

pub type AnalysisResult<T> = Result<T, AnalysisError>;

/// Sampling distributions supported on [0, inf).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeDist {
    Exp { rate: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Uniform { lo: f64, hi: f64 },
    PointMass { at: f64 },
}

impl TimeDist {
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            TimeDist::Exp { rate } => Exp::new(rate).expect("valid rate").sample(rng),
            TimeDist::LogNormal { mu, sigma } => {
                LogNormal::new(mu, sigma).expect("valid params").sample(rng)
            }
            TimeDist::Uniform { lo, hi } => rng.random_range(lo..hi),
            TimeDist::PointMass { at } => at,
        }
    }

    pub fn validate(&self) -> AnalysisResult<()> {
        let ok = match *self {
            TimeDist::Exp { rate } => rate > 0.0,
            TimeDist::LogNormal { mu: _, sigma } => sigma > 0.0,
            TimeDist::Uniform { lo, hi } => 0.0 <= lo && lo < hi,
            TimeDist::PointMass { at } => at >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(AnalysisError::Domain(format!(
                "invalid distribution parameters: {self:?}"
            )))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TimeDist::Exp { .. } => "exp",
            TimeDist::LogNormal { .. } => "lognormal",
            TimeDist::Uniform { .. } => "uniform",
            TimeDist::PointMass { .. } => "pointmass",
        }
    }
}

/// Sampled moments `E[t^n]`, kernel-weighted moments `E[psi(t) t^n]`, and
/// their ratios with batch-means standard errors.
#[derive(Debug, Clone)]
pub struct MomentReport {
    pub orders: Vec<usize>,
    pub base_moments: Vec<f64>,
    pub weighted_moments: Vec<f64>,
    pub ratios: Vec<f64>,
    pub std_errs: Vec<f64>,
    /// Orders n where `R_{n+1} > R_n` beyond three standard errors of the
    /// batchwise difference.
    pub decrease_violations: Vec<usize>,
}

/// Closed form for the Exp(1) + Laplacian(1) reference case:
/// `E[t^n e^{-t}] = n! / 2^{n+1}` against `E[t^n] = n!`.
pub fn exp1_laplacian_ratio(n: usize) -> f64 {
    0.5_f64.powi(n as i32 + 1)
}

/// Monte-Carlo moment ratios for a kernel over a time distribution.
///
/// The identity kernel is rejected (`R_n` would be 1 identically), as are
/// distributions whose base moments vanish. Means are accumulated in the log
/// domain so factorial-scale moments cannot overflow.
pub fn moment_ratios(
    dist: TimeDist,
    kernel: &Kernel,
    max_order: usize,
    samples: usize,
    seed: u64,
) -> AnalysisResult<MomentReport> {
    dist.validate()?;
    if kernel.is_none() {
        return Err(AnalysisError::Domain(
            "moment ratios require a decaying kernel; the identity kernel gives R_n = 1".into(),
        ));
    }
    if max_order < 1 {
        return Err(AnalysisError::Domain("max_order must be >= 1".into()));
    }
    if samples < BATCHES {
        return Err(AnalysisError::Domain(format!(
            "need at least {BATCHES} samples"
        )));
    }

    let batch_size = samples / BATCHES;
    let mut rng = substream_rng(seed, "moment-ratios");
    let total = batch_size * BATCHES;
    let mut log_t = Vec::with_capacity(total);
    let mut log_psi = Vec::with_capacity(total);
    for _ in 0..total {
        let t = dist.sample(&mut rng);
        log_t.push(t.ln()); // -inf at t = 0 drops out of the log-domain mean
        log_psi.push(kernel.eval(t)?.ln());
    }

    let orders: Vec<usize> = (0..=max_order).collect();
    let mut base_moments = Vec::with_capacity(orders.len());
    let mut weighted_moments = Vec::with_capacity(orders.len());
    let mut ratios = Vec::with_capacity(orders.len());
    let mut std_errs = Vec::with_capacity(orders.len());
    let mut batch_ratios: Vec<Vec<f64>> = Vec::with_capacity(orders.len());

    for &n in &orders {
        let mut batch_r = Vec::with_capacity(BATCHES);
        let mut base_sum = 0.0;
        let mut weighted_sum = 0.0;
        for b in 0..BATCHES {
            let lo = b * batch_size;
            let hi = lo + batch_size;
            let base = log_mean(&log_t[lo..hi], &[], n);
            let weighted = log_mean(&log_t[lo..hi], &log_psi[lo..hi], n);
            base_sum += base;
            weighted_sum += weighted;
            batch_r.push(if base > 0.0 { weighted / base } else { f64::NAN });
        }
        let base = base_sum / BATCHES as f64;
        let weighted = weighted_sum / BATCHES as f64;
        if n >= 1 && base <= 0.0 {
            return Err(AnalysisError::Degenerate(format!(
                "E[t^{n}] = 0; moment ratios are undefined (point mass at zero?)"
            )));
        }
        let ratio = weighted / base;
        let se = batch_std_err(&batch_r);
        base_moments.push(base);
        weighted_moments.push(weighted);
        ratios.push(ratio);
        std_errs.push(se);
        batch_ratios.push(batch_r);
    }

    let mut decrease_violations = Vec::new();
    for n in 0..max_order {
        let diffs: Vec<f64> = batch_ratios[n]
            .iter()
            .zip(&batch_ratios[n + 1])
            .map(|(a, b)| a - b)
            .collect();
        let se_diff = batch_std_err(&diffs);
        if ratios[n + 1] > ratios[n] + 3.0 * se_diff {
            decrease_violations.push(n);
        }
    }

    Ok(MomentReport {
        orders,
        base_moments,
        weighted_moments,
        ratios,
        std_errs,
        decrease_violations,
    })
}

/// Stable mean of `t^n * psi` over a batch: `exp(logsumexp - ln count)`.
/// Pass an empty `log_psi` for the unweighted moment.
fn log_mean(log_t: &[f64], log_psi: &[f64], n: usize) -> f64 {
    let count = log_t.len();
    let term = |i: usize| -> f64 {
        let base = n as f64 * log_t[i];
        if log_psi.is_empty() {
            base
        } else {
            base + log_psi[i]
        }
    };
    let mut max = f64::NEG_INFINITY;
    for i in 0..count {
        max = max.max(term(i));
    }
    if max == f64::NEG_INFINITY {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..count {
        sum += (term(i) - max).exp();
    }
    (max + sum.ln() - (count as f64).ln()).exp()
}

fn batch_std_err(batch_values: &[f64]) -> f64 {
    let b = batch_values.len() as f64;
    let mean = batch_values.iter().sum::<f64>() / b;
    let var = batch_values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (b - 1.0);
    (var / b).sqrt()
}

/// Taylor coefficients of `exp(-lambda t)`, `cos(omega t)`, and their
/// product. The product coefficient `c_k` collects every pair `(m, n)` with
/// `m + 2n = k`, so odd powers appear as soon as `lambda > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients {
    /// `a_m = (-lambda)^m / m!`
    pub kernel_coeffs: Vec<f64>,
    /// `b_n = (-1)^n omega^{2n} / (2n)!`
    pub encoding_coeffs: Vec<f64>,
    /// `c_k = sum over m + 2n = k of a_m b_n`
    pub product_coeffs: Vec<f64>,
}

pub fn product_series(lambda: f64, omega: f64, max_order: usize) -> SeriesCoefficients {
    let mut a = Vec::with_capacity(max_order + 1);
    a.push(1.0);
    for m in 1..=max_order {
        let prev = a[m - 1];
        a.push(prev * (-lambda) / m as f64);
    }
    let n_terms = max_order / 2 + 1;
    let mut b = Vec::with_capacity(n_terms);
    b.push(1.0);
    for n in 1..n_terms {
        let k = 2.0 * n as f64;
        let prev = b[n - 1];
        b.push(prev * (-omega * omega) / (k * (k - 1.0)));
    }
    let mut c = vec![0.0; max_order + 1];
    for (k, ck) in c.iter_mut().enumerate() {
        let mut acc = 0.0;
        for n in 0..=(k / 2) {
            acc += a[k - 2 * n] * b[n];
        }
        *ck = acc;
    }
    SeriesCoefficients {
        kernel_coeffs: a,
        encoding_coeffs: b,
        product_coeffs: c,
    }
}

/// Truncated product series against the closed form `exp(-lambda t) cos(omega t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesComparison {
    pub series: f64,
    pub direct: f64,
    pub abs_diff: f64,
    /// Estimated truncation remainder is negligible at this `t` and order.
    pub converged: bool,
}

pub fn series_vs_direct(lambda: f64, omega: f64, t: f64, max_order: usize) -> SeriesComparison {
    // extend the expansion a little past max_order to bound the remainder
    let extra = 30;
    let coeffs = product_series(lambda, omega, max_order + extra);
    let mut series = 0.0;
    let mut power = 1.0;
    for k in 0..=max_order {
        series += coeffs.product_coeffs[k] * power;
        power *= t;
    }
    let mut remainder = 0.0;
    for k in (max_order + 1)..=(max_order + extra) {
        remainder += (coeffs.product_coeffs[k] * power).abs();
        power *= t;
    }
    let direct = (-lambda * t).exp() * (omega * t).cos();
    SeriesComparison {
        series,
        direct,
        abs_diff: (series - direct).abs(),
        converged: remainder <= 1e-12 * series.abs().max(1.0),
    }
}

/// Single-edge variance fixture: logit `s = X + psi * Y` with
/// `Var[X] = sigma_x^2`, `Var[Y] = sigma_y^2`, `corr(X, Y) = rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceFixture {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub rho: f64,
    pub psi: f64,
}

impl VarianceFixture {
    pub fn validate(&self) -> AnalysisResult<()> {
        if self.sigma_x <= 0.0 || self.sigma_y <= 0.0 {
            return Err(AnalysisError::Domain(format!(
                "standard deviations must be positive, got sigma_x {} sigma_y {}",
                self.sigma_x, self.sigma_y
            )));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(AnalysisError::Domain(format!(
                "correlation must lie in [-1, 1], got {}",
                self.rho
            )));
        }
        if !(self.psi > 0.0 && self.psi <= 1.0) {
            return Err(AnalysisError::Domain(format!(
                "kernel value must lie in (0, 1], got {}",
                self.psi
            )));
        }
        Ok(())
    }

    /// Closed form: `Delta = (1 - psi) [sigma_y^2 (1 + psi) + 2 rho sigma_x sigma_y]`.
    pub fn analytic_delta(&self) -> f64 {
        (1.0 - self.psi)
            * (self.sigma_y * self.sigma_y * (1.0 + self.psi)
                + 2.0 * self.rho * self.sigma_x * self.sigma_y)
    }

    /// Sufficient condition for `Delta >= 0`: `sigma_y (1 + psi) >= 2 sigma_x`.
    pub fn condition_holds(&self) -> bool {
        self.sigma_y * (1.0 + self.psi) >= 2.0 * self.sigma_x
    }
}

/// Analytic vs Monte-Carlo variance gap `Var[s0] - Var[sK]` for one edge.
#[derive(Debug, Clone, Copy)]
pub struct VarianceDelta {
    pub analytic: f64,
    pub monte_carlo: f64,
    pub std_err: f64,
    pub condition_holds: bool,
}

pub fn variance_delta(
    fixture: &VarianceFixture,
    samples: usize,
    seed: u64,
) -> AnalysisResult<VarianceDelta> {
    fixture.validate()?;
    if samples < BATCHES * 2 {
        return Err(AnalysisError::Domain(format!(
            "need at least {} samples",
            BATCHES * 2
        )));
    }
    let batch_size = samples / BATCHES;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = substream_rng(seed, "variance-delta");
    let tail = (1.0 - fixture.rho * fixture.rho).max(0.0).sqrt();

    let mut batch_deltas = Vec::with_capacity(BATCHES);
    for _ in 0..BATCHES {
        let mut s0 = Vec::with_capacity(batch_size);
        let mut sk = Vec::with_capacity(batch_size);
        for _ in 0..batch_size {
            let z1: f64 = normal.sample(&mut rng);
            let z2: f64 = normal.sample(&mut rng);
            let x = fixture.sigma_x * z1;
            let y = fixture.sigma_y * (fixture.rho * z1 + tail * z2);
            s0.push(x + y);
            sk.push(x + fixture.psi * y);
        }
        batch_deltas.push(sample_variance(&s0) - sample_variance(&sk));
    }
    let monte_carlo = batch_deltas.iter().sum::<f64>() / BATCHES as f64;
    Ok(VarianceDelta {
        analytic: fixture.analytic_delta(),
        monte_carlo,
        std_err: batch_std_err(&batch_deltas),
        condition_holds: fixture.condition_holds(),
    })
}

fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}

/// Neighborhood fixture: per-edge kernel values and the full covariance of
/// `(X_1..X_n, Y_1..Y_n)` in that variable order.
#[derive(Debug, Clone)]
pub struct NeighborhoodFixture {
    pub psis: Vec<f64>,
    /// Row-major symmetric `2n x 2n` covariance matrix.
    pub cov: Vec<Vec<f64>>,
}

impl NeighborhoodFixture {
    pub fn n(&self) -> usize {
        self.psis.len()
    }

    fn cov_xy(&self, j: usize, l: usize) -> f64 {
        self.cov[j][self.n() + l]
    }

    fn cov_yx(&self, j: usize, l: usize) -> f64 {
        self.cov[self.n() + j][l]
    }

    fn cov_yy(&self, j: usize, l: usize) -> f64 {
        self.cov[self.n() + j][self.n() + l]
    }

    pub fn validate(&self) -> AnalysisResult<()> {
        let n = self.n();
        if n == 0 {
            return Err(AnalysisError::Domain("need at least one neighbor".into()));
        }
        if self.cov.len() != 2 * n || self.cov.iter().any(|row| row.len() != 2 * n) {
            return Err(AnalysisError::Domain(format!(
                "covariance must be {0} x {0} for {n} neighbors",
                2 * n
            )));
        }
        for psi in &self.psis {
            if !(*psi > 0.0 && *psi <= 1.0) {
                return Err(AnalysisError::Domain(format!(
                    "kernel values must lie in (0, 1], got {psi}"
                )));
            }
        }
        for j in 0..2 * n {
            for l in 0..2 * n {
                if (self.cov[j][l] - self.cov[l][j]).abs() > 1e-12 {
                    return Err(AnalysisError::Domain(
                        "covariance matrix is not symmetric".into(),
                    ));
                }
            }
        }
        // the theorem's range: cross-neighbor covariances must be non-negative
        for j in 0..n {
            for l in 0..n {
                if j != l
                    && (self.cov_yy(j, l) < 0.0
                        || self.cov_xy(j, l) < 0.0
                        || self.cov_yx(j, l) < 0.0)
                {
                    return Err(AnalysisError::Domain(format!(
                        "negative cross-neighbor covariance between {j} and {l}; \
                         the variance bound does not apply"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Triple-sum closed form for the gap between unmodulated and modulated
    /// variance of the neighborhood-averaged logit. Expanding
    /// `Cov[X_j + psi_j Y_j, X_l + psi_l Y_l]` puts the kernel weight of the
    /// modulated side on each cross term: `Cov[X_j, Y_l]` loses a factor
    /// `psi_l`, `Cov[Y_j, X_l]` a factor `psi_j`.
    pub fn analytic_delta(&self) -> f64 {
        let n = self.n();
        let mut total = 0.0;
        for j in 0..n {
            for l in 0..n {
                total += (1.0 - self.psis[j] * self.psis[l]) * self.cov_yy(j, l)
                    + (1.0 - self.psis[l]) * self.cov_xy(j, l)
                    + (1.0 - self.psis[j]) * self.cov_yx(j, l);
            }
        }
        total / (n * n) as f64
    }

    /// Every summand of the triple sum is non-negative, so the bound holds
    /// with certainty. Requires the within-pair covariances `Cov[X_j, Y_j]`
    /// to be non-negative as well; the cross terms are already validated.
    pub fn guaranteed_nonneg(&self) -> bool {
        (0..self.n()).all(|j| {
            let diag = (1.0 - self.psis[j] * self.psis[j]) * self.cov_yy(j, j)
                + 2.0 * (1.0 - self.psis[j]) * self.cov_xy(j, j);
            diag >= 0.0
        })
    }
}

/// Analytic vs Monte-Carlo variance gap for the neighborhood-averaged logit.
#[derive(Debug, Clone, Copy)]
pub struct NeighborhoodDelta {
    pub analytic: f64,
    pub monte_carlo: f64,
    pub std_err: f64,
    pub guaranteed_nonneg: bool,
}

pub fn neighborhood_variance_delta(
    fixture: &NeighborhoodFixture,
    samples: usize,
    seed: u64,
) -> AnalysisResult<NeighborhoodDelta> {
    fixture.validate()?;
    if samples < BATCHES * 2 {
        return Err(AnalysisError::Domain(format!(
            "need at least {} samples",
            BATCHES * 2
        )));
    }
    let n = fixture.n();
    let chol = cholesky(&fixture.cov)?;
    let batch_size = samples / BATCHES;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = substream_rng(seed, "neighborhood-variance");

    let mut batch_deltas = Vec::with_capacity(BATCHES);
    let dim = 2 * n;
    let mut z = vec![0.0; dim];
    let mut v = vec![0.0; dim];
    for _ in 0..BATCHES {
        let mut s0 = Vec::with_capacity(batch_size);
        let mut sk = Vec::with_capacity(batch_size);
        for _ in 0..batch_size {
            for zi in z.iter_mut() {
                *zi = normal.sample(&mut rng);
            }
            for i in 0..dim {
                let mut acc = 0.0;
                for k in 0..=i {
                    acc += chol[i][k] * z[k];
                }
                v[i] = acc;
            }
            let mut acc0 = 0.0;
            let mut acck = 0.0;
            for j in 0..n {
                let (x, y) = (v[j], v[n + j]);
                acc0 += x + y;
                acck += x + fixture.psis[j] * y;
            }
            s0.push(acc0 / n as f64);
            sk.push(acck / n as f64);
        }
        batch_deltas.push(sample_variance(&s0) - sample_variance(&sk));
    }
    let monte_carlo = batch_deltas.iter().sum::<f64>() / BATCHES as f64;
    Ok(NeighborhoodDelta {
        analytic: fixture.analytic_delta(),
        monte_carlo,
        std_err: batch_std_err(&batch_deltas),
        guaranteed_nonneg: fixture.guaranteed_nonneg(),
    })
}

/// Lower-triangular Cholesky factor; fails when the matrix is not positive
/// definite (the sampling path needs strict positivity).
fn cholesky(cov: &[Vec<f64>]) -> AnalysisResult<Vec<Vec<f64>>> {
    let n = cov.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = cov[i][j];
            for k in 0..j {
                acc -= l[i][k] * l[j][k];
            }
            if i == j {
                if acc <= 0.0 {
                    return Err(AnalysisError::Domain(
                        "covariance matrix is not positive definite".into(),
                    ));
                }
                l[i][j] = acc.sqrt();
            } else {
                l[i][j] = acc / l[j][j];
            }
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp1_laplacian_closed_form_within_three_se() {
        let kernel = Kernel::laplacian(1.0).unwrap();
        let report =
            moment_ratios(TimeDist::Exp { rate: 1.0 }, &kernel, 6, 200_000, 77).unwrap();
        for n in 0..=6 {
            let expect = exp1_laplacian_ratio(n);
            let err = (report.ratios[n] - expect).abs();
            assert!(
                err <= 3.0 * report.std_errs[n].max(1e-9),
                "n = {n}: {} vs {expect} (se {})",
                report.ratios[n],
                report.std_errs[n]
            );
        }
        assert!(report.decrease_violations.is_empty());
    }

    #[test]
    fn ratios_strictly_decreasing_and_r0_in_unit_interval() {
        let kernel = Kernel::rbf(2.0).unwrap();
        let report = moment_ratios(
            TimeDist::LogNormal { mu: 0.0, sigma: 0.8 },
            &kernel,
            8,
            100_000,
            3,
        )
        .unwrap();
        assert!(report.ratios[0] > 0.0 && report.ratios[0] < 1.0);
        for w in report.ratios.windows(2) {
            assert!(w[1] < w[0], "ratios not decreasing: {:?}", report.ratios);
        }
    }

    #[test]
    fn point_mass_at_zero_is_degenerate() {
        let kernel = Kernel::laplacian(1.0).unwrap();
        let err = moment_ratios(TimeDist::PointMass { at: 0.0 }, &kernel, 3, 10_000, 1)
            .unwrap_err();
        assert!(matches!(err, AnalysisError::Degenerate(_)));
    }

    #[test]
    fn identity_kernel_rejected() {
        let err =
            moment_ratios(TimeDist::Exp { rate: 1.0 }, &Kernel::None, 3, 10_000, 1).unwrap_err();
        assert!(matches!(err, AnalysisError::Domain(_)));
    }

    #[test]
    fn product_series_manual_convolution() {
        // exp(-t) cos(t) = 1 - t + t^3/3 - ...
        let s = product_series(1.0, 1.0, 3);
        assert!((s.product_coeffs[0] - 1.0).abs() < 1e-15);
        assert!((s.product_coeffs[1] + 1.0).abs() < 1e-15);
        assert!(s.product_coeffs[2].abs() < 1e-15);
        assert!((s.product_coeffs[3] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn product_series_lambda_zero_kills_odd_terms() {
        let s = product_series(0.0, 1.0, 9);
        for k in (1..=9).step_by(2) {
            assert_eq!(s.product_coeffs[k], 0.0, "c_{k} should vanish");
        }
        // and reduces to the pure cosine coefficients on even orders
        for n in 0..=4 {
            assert_eq!(s.product_coeffs[2 * n], s.encoding_coeffs[n]);
        }
    }

    #[test]
    fn product_series_omega_zero_reduces_to_kernel() {
        let s = product_series(1.3, 0.0, 8);
        for k in 0..=8 {
            assert!((s.product_coeffs[k] - s.kernel_coeffs[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn product_series_positive_lambda_has_odd_terms() {
        let s = product_series(1.0, 1.0, 9);
        assert!((1..=9).step_by(2).any(|k| s.product_coeffs[k] != 0.0));
    }

    #[test]
    fn series_matches_direct_at_zero() {
        let cmp = series_vs_direct(1.0, 1.0, 0.0, 5);
        assert_eq!(cmp.series, 1.0);
        assert_eq!(cmp.direct, 1.0);
    }

    #[test]
    fn series_matches_direct_small_t() {
        let cmp = series_vs_direct(1.0, 1.0, 0.5, 20);
        assert!(cmp.converged);
        assert!(cmp.abs_diff < 1e-12, "diff {}", cmp.abs_diff);

        let cmp = series_vs_direct(1.0, 1.0, 1.0, 30);
        assert!(cmp.converged);
        assert!(cmp.abs_diff < 1e-10, "diff {}", cmp.abs_diff);
    }

    #[test]
    fn series_flags_unconverged_truncation() {
        let cmp = series_vs_direct(1.0, 1.0, 30.0, 5);
        assert!(!cmp.converged);
    }

    #[test]
    fn variance_delta_identity_kernel_value() {
        let fixture = VarianceFixture {
            sigma_x: 1.0,
            sigma_y: 2.0,
            rho: 0.3,
            psi: 1.0,
        };
        let out = variance_delta(&fixture, 50_000, 5).unwrap();
        assert_eq!(out.analytic, 0.0);
        assert_eq!(out.monte_carlo, 0.0); // s0 and sK coincide sample by sample
    }

    #[test]
    fn variance_delta_worked_example_positive() {
        // (1 - 0.5) * (9 * 1.5 + 2 * (-1) * 1 * 3) = 3.75
        let fixture = VarianceFixture {
            sigma_x: 1.0,
            sigma_y: 3.0,
            rho: -1.0,
            psi: 0.5,
        };
        let out = variance_delta(&fixture, 400_000, 6).unwrap();
        assert!((out.analytic - 3.75).abs() < 1e-12);
        assert!(out.condition_holds);
        assert!(
            (out.monte_carlo - out.analytic).abs() <= 3.0 * out.std_err,
            "mc {} vs analytic {} (se {})",
            out.monte_carlo,
            out.analytic,
            out.std_err
        );
    }

    #[test]
    fn variance_delta_condition_violation_can_go_negative() {
        // condition fails: sigma_y (1 + psi) = 1.5 < 2 sigma_x = 20
        let fixture = VarianceFixture {
            sigma_x: 10.0,
            sigma_y: 1.0,
            rho: -1.0,
            psi: 0.5,
        };
        let out = variance_delta(&fixture, 100_000, 7).unwrap();
        assert!(!out.condition_holds);
        assert!((out.analytic - (-9.25)).abs() < 1e-12);
        assert!(out.monte_carlo < 0.0);
    }

    #[test]
    fn variance_delta_rejects_bad_rho() {
        let fixture = VarianceFixture {
            sigma_x: 1.0,
            sigma_y: 1.0,
            rho: 1.5,
            psi: 0.5,
        };
        assert!(variance_delta(&fixture, 10_000, 1).is_err());
    }

    fn block_diag_fixture(
        psis: &[f64],
        sigma_x: f64,
        sigma_y: f64,
        rho: f64,
    ) -> NeighborhoodFixture {
        let n = psis.len();
        let mut cov = vec![vec![0.0; 2 * n]; 2 * n];
        for j in 0..n {
            cov[j][j] = sigma_x * sigma_x;
            cov[n + j][n + j] = sigma_y * sigma_y;
            cov[j][n + j] = rho * sigma_x * sigma_y;
            cov[n + j][j] = rho * sigma_x * sigma_y;
        }
        NeighborhoodFixture {
            psis: psis.to_vec(),
            cov,
        }
    }

    #[test]
    fn neighborhood_identity_kernels_give_zero() {
        let fixture = block_diag_fixture(&[1.0, 1.0, 1.0], 1.0, 2.0, 0.2);
        let out = neighborhood_variance_delta(&fixture, 50_000, 8).unwrap();
        assert_eq!(out.analytic, 0.0);
        assert_eq!(out.monte_carlo, 0.0);
    }

    #[test]
    fn neighborhood_independent_reduces_to_mean_of_edges_over_n() {
        let psis = [0.3, 0.6, 0.9];
        let (sx, sy, rho) = (0.8, 1.7, 0.4);
        let fixture = block_diag_fixture(&psis, sx, sy, rho);
        let per_edge: f64 = psis
            .iter()
            .map(|&psi| {
                VarianceFixture {
                    sigma_x: sx,
                    sigma_y: sy,
                    rho,
                    psi,
                }
                .analytic_delta()
            })
            .sum::<f64>()
            / psis.len() as f64;
        let expect = per_edge / psis.len() as f64;
        assert!((fixture.analytic_delta() - expect).abs() < 1e-12);
    }

    #[test]
    fn neighborhood_positive_cross_covariances() {
        // n = 3, all pairwise covariances +0.1, psis mixed -> analytic > 0
        let n = 3;
        let mut cov = vec![vec![0.1; 2 * n]; 2 * n];
        for i in 0..2 * n {
            cov[i][i] = 1.0;
        }
        let fixture = NeighborhoodFixture {
            psis: vec![0.3, 0.5, 0.9],
            cov,
        };
        let out = neighborhood_variance_delta(&fixture, 400_000, 9).unwrap();
        assert!(out.guaranteed_nonneg);
        assert!(out.analytic > 0.0);
        assert!(
            (out.monte_carlo - out.analytic).abs() <= 3.0 * out.std_err,
            "mc {} vs analytic {} (se {})",
            out.monte_carlo,
            out.analytic,
            out.std_err
        );
    }

    #[test]
    fn neighborhood_rejects_negative_cross_covariance() {
        let n = 2;
        let mut cov = vec![vec![0.0; 2 * n]; 2 * n];
        for i in 0..2 * n {
            cov[i][i] = 1.0;
        }
        cov[n][n + 1] = -0.2; // Cov[Y_0, Y_1] < 0
        cov[n + 1][n] = -0.2;
        let fixture = NeighborhoodFixture {
            psis: vec![0.5, 0.5],
            cov,
        };
        assert!(neighborhood_variance_delta(&fixture, 10_000, 1).is_err());
    }

    #[test]
    fn cholesky_round_trip() {
        let cov = vec![
            vec![4.0, 2.0, 0.6],
            vec![2.0, 5.0, 1.0],
            vec![0.6, 1.0, 3.0],
        ];
        let l = cholesky(&cov).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += l[i][k] * l[j][k];
                }
                assert!((acc - cov[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let cov = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(cholesky(&cov).is_err());
    }
}
