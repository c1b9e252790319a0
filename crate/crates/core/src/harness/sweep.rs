//! Kernel-width and modulation sweeps over the link-prediction benchmark.
//! Cells (variant x seed) are independent full train/eval runs; they may
//! execute in parallel, with results reduced in fixed cell order.

use rayon::prelude::*;

use crate::attention::Modulation;
use crate::graph::{chrono_split, chrono_split_bounds, train_sigma, TemporalGraph};
use crate::rng::substream_seed;

use super::metrics::evaluate_model;
use super::model::{KernelChoice, LambdaSpec, LinkModel, ModelConfig};
use super::train::{train, TrainHistory};
use super::HarnessResult;

/// Width multiplier standing for "no kernel at all".
pub const INFINITE_WIDTH: Option<f64> = None;

/// One trained run.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub variant: String,
    pub seed: u64,
    pub val_mrr: f64,
    pub test_mrr: f64,
    pub best_epoch: Option<usize>,
}

/// Mean and deviation over seeds for one variant.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub variant: String,
    pub mean_val_mrr: f64,
    pub std_val_mrr: f64,
    pub mean_test_mrr: f64,
    pub std_test_mrr: f64,
    pub cells: Vec<CellResult>,
}

/// Train one configuration on the graph's chronological split and evaluate
/// on validation and test.
pub fn run_benchmark_cell(
    config: &ModelConfig,
    graph: &TemporalGraph,
) -> HarnessResult<(f64, f64, TrainHistory)> {
    let bounds = chrono_split_bounds(graph.num_events(), config.train_frac, config.val_frac)?;
    let (train_split, _, _) = chrono_split(graph, config.train_frac, config.val_frac)?;
    let sigma = match config.kernel_family {
        KernelChoice::None => train_sigma(&train_split).ok(),
        _ => Some(train_sigma(&train_split)?),
    };
    let span = train_split
        .events()
        .last()
        .map(|e| e.time - train_split.events()[0].time)
        .unwrap_or(1.0);
    let mut model = LinkModel::init(config, graph.num_nodes(), sigma, span)?;
    let history = train(&mut model, graph, bounds)?;
    let val = evaluate_model(
        &model,
        graph,
        bounds.train_end..bounds.val_end,
        config.num_negatives,
        &[],
        substream_seed(config.seed, "val-negatives"),
    )?;
    let test = evaluate_model(
        &model,
        graph,
        bounds.val_end..graph.num_events(),
        config.num_negatives,
        &[],
        substream_seed(config.seed, "test-negatives"),
    )?;
    Ok((val.mrr, test.mrr, history))
}

fn run_cells(
    variants: Vec<(String, ModelConfig)>,
    graph: &TemporalGraph,
    seeds: &[u64],
) -> HarnessResult<Vec<SweepRow>> {
    let cells: Vec<(String, ModelConfig, u64)> = variants
        .iter()
        .flat_map(|(name, cfg)| {
            seeds.iter().map(move |&seed| {
                let mut cfg = cfg.clone();
                cfg.seed = seed;
                (name.clone(), cfg, seed)
            })
        })
        .collect();
    let results: Vec<HarnessResult<CellResult>> = cells
        .par_iter()
        .map(|(name, cfg, seed)| {
            let (val_mrr, test_mrr, history) = run_benchmark_cell(cfg, graph)?;
            Ok(CellResult {
                variant: name.clone(),
                seed: *seed,
                val_mrr,
                test_mrr,
                best_epoch: history.best_epoch,
            })
        })
        .collect();
    let mut flat = Vec::with_capacity(results.len());
    for r in results {
        flat.push(r?);
    }

    let mut rows = Vec::with_capacity(variants.len());
    for (name, _) in &variants {
        let cells: Vec<CellResult> = flat.iter().filter(|c| &c.variant == name).cloned().collect();
        let vals: Vec<f64> = cells.iter().map(|c| c.val_mrr).collect();
        let tests: Vec<f64> = cells.iter().map(|c| c.test_mrr).collect();
        rows.push(SweepRow {
            variant: name.clone(),
            mean_val_mrr: mean(&vals),
            std_val_mrr: std_dev(&vals),
            mean_test_mrr: mean(&tests),
            std_test_mrr: std_dev(&tests),
            cells,
        });
    }
    Ok(rows)
}

/// Sweep the kernel width as multiples of the training sigma; `None` in the
/// multiplier list stands for an infinite width, realized as the identity
/// kernel (no modulation at all).
pub fn sweep_sigma(
    base: &ModelConfig,
    graph: &TemporalGraph,
    multipliers: &[Option<f64>],
    seeds: &[u64],
) -> HarnessResult<Vec<SweepRow>> {
    let variants = multipliers
        .iter()
        .map(|m| {
            let mut cfg = base.clone();
            let name = match m {
                Some(mult) => {
                    cfg.lambda = LambdaSpec::SigmaMult(*mult);
                    format!("{mult}sigma")
                }
                None => {
                    cfg.kernel_family = KernelChoice::None;
                    "inf".to_string()
                }
            };
            (name, cfg)
        })
        .collect();
    run_cells(variants, graph, seeds)
}

/// Train one model per modulation flag.
pub fn ablate_modulation(
    base: &ModelConfig,
    graph: &TemporalGraph,
    flags: &[Modulation],
    seeds: &[u64],
) -> HarnessResult<Vec<SweepRow>> {
    let variants = flags
        .iter()
        .map(|&flag| {
            let mut cfg = base.clone();
            cfg.modulation = flag;
            (flag.name().to_string(), cfg)
        })
        .collect();
    run_cells(variants, graph, seeds)
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{gen_synthetic, SynthConfig};

    fn quick_config() -> ModelConfig {
        ModelConfig {
            d: 4,
            d_prime: 4,
            d_t: 2,
            hidden: 8,
            epochs: 1,
            learning_rate: 1e-3,
            num_negatives: 5,
            neighbor_k: 5,
            ..ModelConfig::default()
        }
    }

    fn quick_graph() -> TemporalGraph {
        gen_synthetic(&SynthConfig {
            num_src: 5,
            num_dst: 10,
            num_events: 200,
            seed: 21,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn single_multiplier_single_row() {
        let rows = sweep_sigma(&quick_config(), &quick_graph(), &[Some(1.0)], &[1]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].cells.len(), 1);
        assert_eq!(rows[0].variant, "1sigma");
    }

    #[test]
    fn infinite_width_equals_no_kernel_baseline() {
        let graph = quick_graph();
        let base = quick_config();
        let rows = sweep_sigma(&base, &graph, &[INFINITE_WIDTH], &[2]).unwrap();
        let mut none_cfg = base.clone();
        none_cfg.kernel_family = KernelChoice::None;
        none_cfg.seed = 2;
        let (val, test, _) = run_benchmark_cell(&none_cfg, &graph).unwrap();
        assert_eq!(rows[0].cells[0].val_mrr.to_bits(), val.to_bits());
        assert_eq!(rows[0].cells[0].test_mrr.to_bits(), test.to_bits());
    }

    #[test]
    fn ablation_has_four_rows_with_stats() {
        let flags = [
            Modulation::Neither,
            Modulation::Node,
            Modulation::Edge,
            Modulation::Both,
        ];
        let rows = ablate_modulation(&quick_config(), &quick_graph(), &flags, &[1]).unwrap();
        assert_eq!(rows.len(), 4);
        for row in &rows {
            assert!(row.mean_test_mrr.is_finite());
            assert!(row.mean_val_mrr.is_finite());
        }
    }

    #[test]
    fn neither_flag_reproduces_no_kernel_baseline() {
        let graph = quick_graph();
        let base = quick_config();
        let rows = ablate_modulation(&base, &graph, &[Modulation::Neither], &[3]).unwrap();
        let mut none_cfg = base.clone();
        none_cfg.kernel_family = KernelChoice::None;
        none_cfg.modulation = Modulation::Edge;
        none_cfg.seed = 3;
        let (val, test, _) = run_benchmark_cell(&none_cfg, &graph).unwrap();
        assert_eq!(rows[0].cells[0].val_mrr.to_bits(), val.to_bits());
        assert_eq!(rows[0].cells[0].test_mrr.to_bits(), test.to_bits());
    }
}
