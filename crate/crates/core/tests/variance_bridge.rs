//! Bridge between the attention block and the variance analysis: on logit
//! ensembles whose node and edge terms satisfy the sufficient condition
//! `sigma_Y (1 + psi) >= 2 sigma_X`, the modulated logits must show no more
//! variance than the standard ones. The logits here are produced by the
//! actual attention forward over a one-dimensional all-ones parameter set,
//! so `s_std = X_j + Y_j` and `s_mod = X_j + psi Y_j` exactly.

use keat_core::attention::{
    keat_attention, standard_attention, AttentionDims, AttentionParams,
};
use keat_core::graph::NeighborBatch;
use keat_core::kernel::Kernel;
use keat_core::numeric::Tensor;
use keat_core::rng::substream_rng;
use rand_distr::{Distribution, Normal};

fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}

#[test]
fn modulated_logits_have_no_more_variance_under_the_condition() {
    let fixtures: [(f64, f64, f64, f64); 4] = [
        // (sigma_x, sigma_y, rho, delta_t with lambda 1 -> psi = e^{-dt})
        (0.5, 2.0, 0.0, 0.7),
        (1.0, 3.0, -1.0, 2.0f64.ln()), // psi = 0.5, the worked example
        (0.2, 1.0, 0.5, 1.5),
        (0.8, 2.5, -0.4, 0.3),
    ];
    let params = AttentionParams::ones(AttentionDims {
        d: 1,
        d_prime: 1,
        d_e: 1,
        d_t: 0,
    })
    .unwrap();
    let kernel = Kernel::laplacian(1.0).unwrap();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let n = 4000usize;

    for (fi, &(sigma_x, sigma_y, rho, delta_t)) in fixtures.iter().enumerate() {
        let psi = (-delta_t).exp();
        assert!(
            sigma_y * (1.0 + psi) >= 2.0 * sigma_x,
            "fixture {fi} violates the sufficient condition"
        );
        let mut rng = substream_rng(fi as u64, "variance-bridge");
        let tail = (1.0 - rho * rho).max(0.0).sqrt();
        let mut states = vec![Tensor::vector(vec![0.0]).unwrap()]; // center id 0
        let mut neighbors = Vec::with_capacity(n);
        let mut delta_ts = Vec::with_capacity(n);
        for j in 0..n {
            let z1: f64 = normal.sample(&mut rng);
            let z2: f64 = normal.sample(&mut rng);
            let x = sigma_x * z1;
            let y = sigma_y * (rho * z1 + tail * z2);
            states.push(Tensor::vector(vec![x]).unwrap());
            neighbors.push((j + 1, vec![y], 0.0));
            delta_ts.push(delta_t);
        }
        let batch = NeighborBatch {
            center: 0,
            query_time: 10.0,
            neighbors,
            delta_ts,
        };
        let h = Tensor::vector(vec![1.0]).unwrap();
        let std_out = standard_attention(&params, &h, &batch, &states, None).unwrap();
        let keat_out = keat_attention(&params, &kernel, &h, &batch, &states, None).unwrap();

        let var_std = sample_variance(&std_out.logits);
        let var_keat = sample_variance(&keat_out.logits);
        assert!(
            var_keat <= var_std,
            "fixture {fi}: modulated logit variance {var_keat} exceeds standard {var_std}"
        );
    }
}
