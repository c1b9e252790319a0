//! Property tests for the contracts that must hold on arbitrary inputs.

use keat_core::encoding::TimeEncoder;
use keat_core::graph::{chrono_split, train_sigma, TemporalEvent, TemporalGraph};
use keat_core::kernel::{modulate, Kernel};
use keat_core::numeric::softmax_slice;
use proptest::prelude::*;

fn events_strategy() -> impl Strategy<Value = Vec<TemporalEvent>> {
    prop::collection::vec((0usize..6, 0usize..6, 0.0f64..100.0), 0..40).prop_map(|raw| {
        raw.into_iter()
            .map(|(src, dst, time)| TemporalEvent {
                src,
                dst,
                time,
                edge_feat: vec![],
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn softmax_is_a_simplex_and_shift_invariant(
        logits in prop::collection::vec(-50.0f64..50.0, 1..20),
        shift in -100.0f64..100.0,
    ) {
        let s = softmax_slice(&logits).unwrap();
        let total: f64 = s.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(s.iter().all(|&v| v > 0.0 && v <= 1.0));

        let shifted: Vec<f64> = logits.iter().map(|v| v + shift).collect();
        let s2 = softmax_slice(&shifted).unwrap();
        for (a, b) in s.iter().zip(&s2) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn chrono_split_preserves_order_and_loses_nothing(
        events in events_strategy(),
        train_frac in 0.1f64..0.8,
        val_frac in 0.0f64..0.2,
    ) {
        let g = TemporalGraph::new(events, 6, 0).unwrap();
        let total = g.num_events();
        let (train, val, test) = chrono_split(&g, train_frac, val_frac).unwrap();
        prop_assert_eq!(train.num_events() + val.num_events() + test.num_events(), total);
        let max_train = train.events().last().map(|e| e.time);
        let min_val = val.events().first().map(|e| e.time);
        let min_test = test.events().first().map(|e| e.time);
        if let (Some(a), Some(b)) = (max_train, min_val) {
            prop_assert!(a <= b);
        }
        if let (Some(a), Some(b)) = (min_val, min_test) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn neighbors_never_leak_the_future(
        events in events_strategy(),
        node in 0usize..6,
        query_time in 0.0f64..120.0,
        k in 1usize..8,
    ) {
        let g = TemporalGraph::new(events, 6, 0).unwrap();
        let batch = g.recent_neighbors(node, query_time, k);
        prop_assert!(batch.len() <= k);
        for (i, (_, _, time)) in batch.neighbors.iter().enumerate() {
            prop_assert!(*time < query_time);
            prop_assert!(batch.delta_ts[i] >= 0.0);
        }
        // most recent first
        for w in batch.delta_ts.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn encoding_is_bounded(
        d_half in 1usize..6,
        base in 1.5f64..10_000.0,
        delta_t in 0.0f64..1e7,
    ) {
        let enc = TimeEncoder::fixed(2 * d_half, base).unwrap();
        let phi = enc.encode(delta_t).unwrap();
        prop_assert_eq!(phi.len(), 2 * d_half);
        for v in phi {
            prop_assert!((-1.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn closed_form_kernels_stay_in_unit_interval(
        lambda in 0.01f64..100.0,
        delta_t in 0.0f64..1000.0,
    ) {
        for kernel in [Kernel::laplacian(lambda).unwrap(), Kernel::rbf(lambda).unwrap()] {
            let v = kernel.eval(delta_t).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
            // strictly positive whenever exp() cannot underflow
            if delta_t / lambda < 20.0 {
                prop_assert!(v > 0.0);
            }
            prop_assert_eq!(kernel.eval(0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn identity_modulation_is_bitwise(
        feat in prop::collection::vec(-10.0f64..10.0, 1..8),
        delta_t in 0.0f64..100.0,
    ) {
        let out = modulate(&Kernel::None, delta_t, &feat).unwrap();
        prop_assert_eq!(out.len(), feat.len());
        for (a, b) in out.iter().zip(&feat) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn sigma_scales_linearly_and_ignores_translation(
        gaps in prop::collection::vec(0.01f64..10.0, 2..15),
        offset in 0.0f64..1000.0,
        scale in 0.1f64..10.0,
    ) {
        let times: Vec<f64> = gaps.iter().scan(0.0, |acc, g| { *acc += g; Some(*acc) }).collect();
        let build = |ts: &[f64]| {
            let events = ts.iter().map(|&t| TemporalEvent { src: 0, dst: 1, time: t, edge_feat: vec![] }).collect();
            TemporalGraph::new(events, 2, 0).unwrap()
        };
        let base = train_sigma(&build(&times));
        prop_assume!(base.is_ok());
        let base = base.unwrap();

        let shifted: Vec<f64> = times.iter().map(|t| t + offset).collect();
        let scaled: Vec<f64> = times.iter().map(|t| t * scale).collect();
        let s_shift = train_sigma(&build(&shifted)).unwrap();
        let s_scale = train_sigma(&build(&scaled)).unwrap();
        prop_assert!((s_shift - base).abs() <= 1e-7 * base.max(1.0));
        prop_assert!((s_scale - scale * base).abs() <= 1e-7 * (scale * base).max(1.0));
    }
}
