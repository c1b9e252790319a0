//! Sinusoidal time encodings: fixed or with trainable frequencies.
//!
//! `encode` maps an elapsed time to interleaved `(cos, sin)` pairs,
//! `phi(dt)[2k] = cos(w_k dt)`, `phi(dt)[2k+1] = sin(w_k dt)`. The
//! interleaved ordering is fixed for checkpoint compatibility.

use crate::numeric::{NumericError, NumericResult, Tape, Tensor, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderMode {
    Fixed,
    Learnable,
}

impl EncoderMode {
    pub fn name(&self) -> &'static str {
        match self {
            EncoderMode::Fixed => "fixed",
            EncoderMode::Learnable => "learnable",
        }
    }
}

/// Maps `dt >= 0` to a `d_t`-dimensional feature bounded in [-1, 1].
#[derive(Debug, Clone)]
pub struct TimeEncoder {
    d_t: usize,
    mode: EncoderMode,
    base: f64,
    /// Frequencies, one per (cos, sin) pair; trainable in learnable mode.
    omega: Tensor,
}

impl TimeEncoder {
    pub fn new(d_t: usize, mode: EncoderMode, base: f64) -> NumericResult<Self> {
        if d_t == 0 || !d_t.is_multiple_of(2) {
            return Err(NumericError::Domain(format!(
                "time encoder dimension must be even and positive, got {d_t}"
            )));
        }
        if base <= 0.0 {
            return Err(NumericError::Domain(format!(
                "time encoder base must be positive, got {base}"
            )));
        }
        let omega = Tensor::vector(geometric_ladder(d_t, base))?;
        Ok(TimeEncoder {
            d_t,
            mode,
            base,
            omega,
        })
    }

    pub fn fixed(d_t: usize, base: f64) -> NumericResult<Self> {
        TimeEncoder::new(d_t, EncoderMode::Fixed, base)
    }

    pub fn learnable(d_t: usize, base: f64) -> NumericResult<Self> {
        TimeEncoder::new(d_t, EncoderMode::Learnable, base)
    }

    pub fn d_t(&self) -> usize {
        self.d_t
    }

    pub fn mode(&self) -> EncoderMode {
        self.mode
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn omega(&self) -> &Tensor {
        &self.omega
    }

    pub fn omega_mut(&mut self) -> &mut Tensor {
        &mut self.omega
    }

    pub fn is_learnable(&self) -> bool {
        self.mode == EncoderMode::Learnable
    }

    fn check_delta(&self, delta_t: f64) -> NumericResult<()> {
        if delta_t < 0.0 || !delta_t.is_finite() {
            return Err(NumericError::Domain(format!(
                "time encoding requires a finite non-negative delta_t, got {delta_t}"
            )));
        }
        Ok(())
    }

    /// Plain (untaped) encoding.
    pub fn encode(&self, delta_t: f64) -> NumericResult<Vec<f64>> {
        self.check_delta(delta_t)?;
        let mut out = Vec::with_capacity(self.d_t);
        for &w in self.omega.data() {
            out.push((w * delta_t).cos());
            out.push((w * delta_t).sin());
        }
        Ok(out)
    }

    /// Register the frequencies on a tape when learnable; fixed encoders
    /// carry no trainable state.
    pub fn bind(&self, tape: &mut Tape) -> Option<VarId> {
        match self.mode {
            EncoderMode::Fixed => None,
            EncoderMode::Learnable => Some(tape.param(self.omega.clone())),
        }
    }

    /// Encoding as a tape node. In learnable mode the result depends on the
    /// bound `omega` parameter, so gradients flow into the frequencies.
    pub fn encode_on_tape(
        &self,
        tape: &mut Tape,
        omega: Option<VarId>,
        delta_t: f64,
    ) -> NumericResult<VarId> {
        self.check_delta(delta_t)?;
        match (self.mode, omega) {
            (EncoderMode::Learnable, Some(w)) => {
                let angles = tape.scale(w, delta_t)?;
                let c = tape.cos(angles)?;
                let s = tape.sin(angles)?;
                tape.interleave(c, s)
            }
            _ => {
                let values = self.encode(delta_t)?;
                Ok(tape.constant(Tensor::vector(values)?))
            }
        }
    }
}

/// Geometric frequency ladder `w_k = base^(-2k / d_t)`, k = 0 .. d_t/2 - 1.
pub fn geometric_ladder(d_t: usize, base: f64) -> Vec<f64> {
    (0..d_t / 2)
        .map(|k| base.powf(-2.0 * k as f64 / d_t as f64))
        .collect()
}

/// Base for which the slowest ladder period covers a given time span.
pub fn base_for_span(d_t: usize, span: f64) -> f64 {
    let span = span.max(1.0);
    // slowest frequency is base^(-(d_t-2)/d_t); want 2*pi/w_min >= span
    let exponent = (d_t as f64 - 2.0) / d_t as f64;
    if exponent <= 0.0 {
        return 10_000.0;
    }
    (span / (2.0 * std::f64::consts::PI)).powf(1.0 / exponent).max(2.0)
}

/// Truncated even-moment series for the expected cosine encoding:
/// `sum_{n=0..N} (-1)^n w^{2n} / (2n)! * E[dt^{2n}]`.
///
/// `even_moments[n]` holds `E[dt^{2n}]`; the series is only sensitive to
/// these even-order moments. The truncation converges for distributions and
/// frequencies where the moment series does (for an Exp(1) source that means
/// `|w| < 1`); at or beyond that radius the partial sums oscillate.
pub fn moment_series_cos(omega: f64, even_moments: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut coeff = 1.0; // (-1)^n w^{2n} / (2n)!
    for (n, &m) in even_moments.iter().enumerate() {
        if n > 0 {
            let k = 2.0 * n as f64;
            coeff *= -omega * omega / (k * (k - 1.0));
        }
        total += coeff * m;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{finite_diff_grad, relative_error};
    use rand::Rng;

    #[test]
    fn rejects_odd_or_zero_dimension() {
        assert!(TimeEncoder::fixed(3, 10.0).is_err());
        assert!(TimeEncoder::fixed(0, 10.0).is_err());
    }

    #[test]
    fn encode_at_zero() {
        let enc = TimeEncoder::fixed(6, 100.0).unwrap();
        let v = enc.encode(0.0).unwrap();
        assert_eq!(v, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn encode_known_angles() {
        let mut enc = TimeEncoder::fixed(2, 10.0).unwrap();
        enc.omega_mut().data_mut()[0] = std::f64::consts::PI;
        let v = enc.encode(1.0).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-12);
        assert!(v[1].abs() < 1e-12);

        enc.omega_mut().data_mut()[0] = 1.0;
        let v = enc.encode(std::f64::consts::FRAC_PI_2).unwrap();
        assert!(v[0].abs() < 1e-12);
        assert!((v[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn encode_rejects_negative_delta() {
        let enc = TimeEncoder::fixed(2, 10.0).unwrap();
        assert!(enc.encode(-0.5).is_err());
        assert!(enc.encode(f64::NAN).is_err());
    }

    #[test]
    fn encode_bounded() {
        let enc = TimeEncoder::fixed(8, 1000.0).unwrap();
        let mut rng = crate::rng::substream_rng(3, "encode-bounds");
        for _ in 0..200 {
            let dt: f64 = rng.random_range(0.0..1e6);
            for v in enc.encode(dt).unwrap() {
                assert!((-1.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn learnable_omega_gradient_matches_finite_differences() {
        let enc = TimeEncoder::learnable(4, 50.0).unwrap();
        let dt = 1.7;
        let weights = vec![0.3, -0.9, 1.4, 0.2];
        let run = |omega: &Tensor| -> crate::numeric::NumericResult<(f64, Tensor)> {
            let mut tape = Tape::new();
            let w = tape.param(omega.clone());
            let phi = enc.encode_on_tape(&mut tape, Some(w), dt)?;
            let coeffs = tape.constant(Tensor::vector(weights.clone())?);
            let loss = tape.dot(phi, coeffs)?;
            let grads = tape.backward(loss)?;
            Ok((tape.value(loss).scalar_value()?, grads.get(w).clone()))
        };
        let (_, grad) = run(enc.omega()).unwrap();
        let fd = finite_diff_grad(|w| run(w).map(|r| r.0), enc.omega(), 1e-6).unwrap();
        for (a, b) in grad.data().iter().zip(fd.data()) {
            assert!(relative_error(*a, *b) < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn moment_series_zeroth_term_only() {
        assert_eq!(moment_series_cos(0.7, &[1.0]), 1.0);
    }

    #[test]
    fn moment_series_point_mass_at_zero() {
        // E[dt^0] = 1, all higher moments 0 -> series = 1 = cos(0)
        let moments = [1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(moment_series_cos(1.3, &moments), 1.0);
    }

    #[test]
    fn moment_series_exp_inside_radius() {
        // Exp(1): E[t^{2n}] = (2n)!, E[cos(w t)] = 1/(1+w^2).
        // At w = 0.5 the series converges geometrically; N = 20 nails it.
        let moments: Vec<f64> = (0..=20).map(|n| factorial(2 * n)).collect();
        let series = moment_series_cos(0.5, &moments);
        assert!((series - 0.8).abs() < 1e-9, "series {series}");
    }

    #[test]
    fn moment_series_diverges_at_radius() {
        // At w = 1 the Exp(1) moment series terms are (-1)^n: the partial
        // sums oscillate between 1 and 0 and never reach E[cos t] = 1/2.
        let m20: Vec<f64> = (0..=20).map(|n| factorial(2 * n)).collect();
        let m21: Vec<f64> = (0..=21).map(|n| factorial(2 * n)).collect();
        let s20 = moment_series_cos(1.0, &m20);
        let s21 = moment_series_cos(1.0, &m21);
        assert!((s20 - 1.0).abs() < 1e-9);
        assert!(s21.abs() < 1e-9);
    }

    #[test]
    fn monte_carlo_agrees_with_series_inside_radius() {
        // E[cos(0.5 t)], t ~ Exp(1), 1e6 samples vs the N=20 truncation.
        use rand_distr::{Distribution, Exp};
        let omega = 0.5;
        let moments: Vec<f64> = (0..=20).map(|n| factorial(2 * n)).collect();
        let series = moment_series_cos(omega, &moments);

        let exp = Exp::new(1.0).unwrap();
        let mut rng = crate::rng::substream_rng(11, "moment-series-mc");
        let n = 1_000_000usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let t: f64 = exp.sample(&mut rng);
            let c = (omega * t).cos();
            sum += c;
            sum_sq += c * c;
        }
        let mean = sum / n as f64;
        let var = (sum_sq / n as f64 - mean * mean).max(0.0);
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - series).abs() < 3.0 * se,
            "mc {mean} vs series {series} (se {se})"
        );
    }

    fn factorial(k: usize) -> f64 {
        (1..=k).map(|i| i as f64).product()
    }
}
