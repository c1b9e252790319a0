//! Subcommand implementations. Every primary output is a UTF-8 CSV with a
//! header, written with deterministic float formatting so repeat runs with
//! identical inputs and seed produce byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use rand::Rng;

use keat_core::analysis::{
    exp1_laplacian_ratio, moment_ratios, neighborhood_variance_delta, product_series,
    series_vs_direct, variance_delta, NeighborhoodFixture, TimeDist, VarianceFixture,
};
use keat_core::attention::{attention_heatmap, AttentionDims, AttentionParams, HeatmapFixture};
use keat_core::encoding::TimeEncoder;
use keat_core::graph::{
    chrono_split, chrono_split_bounds, interarrival_histogram, spectral_entropy, train_sigma,
    TemporalGraph,
};
use keat_core::harness::{
    ablate_modulation as run_ablation, evaluate_model, gen_synthetic, load_checkpoint,
    save_checkpoint, sweep_sigma as run_sweep, train as run_train, LinkModel, ModelConfig,
    SweepRow, SynthConfig,
};
use keat_core::kernel::Kernel;
use keat_core::numeric::Tensor;
use keat_core::rng::{substream_rng, substream_seed};

use crate::config::build_model_config;
use crate::{resolve_seed, CliError};

#[derive(Args)]
pub struct GenDataArgs {
    /// Output CSV path
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub events: usize,
    #[arg(long, default_value_t = 20)]
    pub sources: usize,
    #[arg(long, default_value_t = 100)]
    pub destinations: usize,
    /// Probability of repeating the source's most recent destination
    #[arg(long, default_value_t = 0.8)]
    pub recency: f64,
    /// Edge feature width (destination-group channels + recency channel)
    #[arg(long, default_value_t = 21)]
    pub d_e: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub gap_log_mean: f64,
    #[arg(long, default_value_t = 2.5)]
    pub gap_log_std: f64,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    /// Master seed (falls back to KEAT_SEED, then 1)
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn gen_data(args: GenDataArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed)?;
    let cfg = SynthConfig {
        num_src: args.sources,
        num_dst: args.destinations,
        num_events: args.events,
        recency_prob: args.recency,
        d_e: args.d_e,
        gap_log_mean: args.gap_log_mean,
        gap_log_std: args.gap_log_std,
        feature_noise: args.noise,
        seed,
    };
    if !(0.0..=1.0).contains(&cfg.recency_prob) {
        return Err(CliError::usage(format!(
            "--recency must lie in [0, 1], got {}",
            cfg.recency_prob
        )));
    }
    if cfg.d_e == 0 || cfg.num_src == 0 || cfg.num_dst == 0 {
        return Err(CliError::usage(
            "--d-e, --sources and --destinations must be at least 1".to_string(),
        ));
    }
    let graph = gen_synthetic(&cfg)?;
    let mut out = String::new();
    let headers: Vec<String> = (0..cfg.d_e).map(|i| format!("f_{i}")).collect();
    let _ = writeln!(out, "src,dst,time,{}", headers.join(","));
    for ev in graph.events() {
        let feats: Vec<String> = ev.edge_feat.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{},{},{:?},{}", ev.src, ev.dst, ev.time, feats.join(","));
    }
    write_file(&args.out, &out)?;
    let sigma = match train_sigma(&graph) {
        Ok(s) => format!("{s:?}"),
        Err(_) => "n/a".to_string(),
    };
    println!(
        "events={} nodes={} sigma={sigma}",
        graph.num_events(),
        graph.num_nodes()
    );
    Ok(())
}

#[derive(Args)]
#[command(after_help = crate::config_help())]
pub struct TrainArgs {
    /// Event CSV produced by gen-data (or matching its format)
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for checkpoint.txt, metrics.csv, history.csv
    #[arg(long)]
    pub out: PathBuf,
    /// Config file of key=value lines
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. --set kernel.family=rbf (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn prepare_model(config: &ModelConfig, graph: &TemporalGraph) -> Result<LinkModel, CliError> {
    let (train_split, _, _) = chrono_split(graph, config.train_frac, config.val_frac)?;
    let sigma = train_sigma(&train_split).ok();
    let span = train_split
        .events()
        .last()
        .map(|e| e.time - train_split.events()[0].time)
        .unwrap_or(1.0);
    Ok(LinkModel::init(config, graph.num_nodes(), sigma, span)?)
}

fn variant_name(config: &ModelConfig) -> String {
    format!("{}-{}", config.kernel_family.name(), config.modulation.name())
}

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    let seed_override = crate::seed_from_env(args.seed)?;
    let config = build_model_config(args.config.as_deref(), &args.sets, seed_override)?;
    let graph = TemporalGraph::load_csv(&args.data, config.d_e)?;
    let bounds = chrono_split_bounds(graph.num_events(), config.train_frac, config.val_frac)?;
    let mut model = prepare_model(&config, &graph)?;
    let history = run_train(&mut model, &graph, bounds)?;

    std::fs::create_dir_all(&args.out)?;
    save_checkpoint(args.out.join("checkpoint.txt"), &model)?;

    let ks = [1usize, 5, 10];
    let val = evaluate_model(
        &model,
        &graph,
        bounds.train_end..bounds.val_end,
        config.num_negatives,
        &ks,
        substream_seed(config.seed, "val-negatives"),
    )?;
    let test = evaluate_model(
        &model,
        &graph,
        bounds.val_end..graph.num_events(),
        config.num_negatives,
        &ks,
        substream_seed(config.seed, "test-negatives"),
    )?;

    let variant = variant_name(&config);
    let mut metrics = String::from("variant,seed,split,metric,value\n");
    for (split, result) in [("val", &val), ("test", &test)] {
        let _ = writeln!(metrics, "{variant},{},{split},mrr,{:?}", config.seed, result.mrr);
        for (k, frac) in &result.hits {
            let _ = writeln!(
                metrics,
                "{variant},{},{split},hits@{k},{frac:?}",
                config.seed
            );
        }
    }
    write_file(&args.out.join("metrics.csv"), &metrics)?;

    let mut hist = String::from("epoch,train_loss,val_mrr\n");
    for (epoch, (loss, mrr)) in history.epoch_loss.iter().zip(&history.val_mrr).enumerate() {
        let _ = writeln!(hist, "{epoch},{loss:?},{mrr:?}");
    }
    write_file(&args.out.join("history.csv"), &hist)?;

    println!("val_mrr={:?} test_mrr={:?}", val.mrr, test.mrr);
    Ok(())
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Split to evaluate: val or test
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Negatives per positive (defaults to the checkpoint's setting)
    #[arg(long)]
    pub num_neg: Option<usize>,
    /// Comma-separated Hits@K cutoffs
    #[arg(long, default_value = "1,5,10")]
    pub ks: String,
    /// Output directory for metrics.csv
    #[arg(long)]
    pub out: PathBuf,
}

pub fn eval(args: EvalArgs) -> Result<(), CliError> {
    let model = load_checkpoint(&args.checkpoint)?;
    let config = model.config.clone();
    let graph = TemporalGraph::load_csv(&args.data, config.d_e)?;
    let bounds = chrono_split_bounds(graph.num_events(), config.train_frac, config.val_frac)?;
    let (range, neg_label) = match args.split.as_str() {
        "val" => (bounds.train_end..bounds.val_end, "val-negatives"),
        "test" => (bounds.val_end..graph.num_events(), "test-negatives"),
        other => {
            return Err(CliError::usage(format!(
                "--split must be val or test, got `{other}`"
            )))
        }
    };
    let num_neg = args.num_neg.unwrap_or(config.num_negatives);
    let ks = parse_usize_list(&args.ks)?;
    let result = evaluate_model(
        &model,
        &graph,
        range,
        num_neg,
        &ks,
        substream_seed(config.seed, neg_label),
    )?;

    std::fs::create_dir_all(&args.out)?;
    let variant = variant_name(&config);
    let mut metrics = String::from("variant,seed,split,metric,value\n");
    let _ = writeln!(
        metrics,
        "{variant},{},{},mrr,{:?}",
        config.seed, args.split, result.mrr
    );
    for (k, frac) in &result.hits {
        let _ = writeln!(
            metrics,
            "{variant},{},{},hits@{k},{frac:?}",
            config.seed, args.split
        );
    }
    if let (Some(ap), Some(auc)) = (result.ap, result.auc) {
        let _ = writeln!(metrics, "{variant},{},{},ap,{ap:?}", config.seed, args.split);
        let _ = writeln!(metrics, "{variant},{},{},auc,{auc:?}", config.seed, args.split);
    }
    write_file(&args.out.join("metrics.csv"), &metrics)?;
    println!("{}_mrr={:?}", args.split, result.mrr);
    Ok(())
}

#[derive(Args)]
pub struct MomentsArgs {
    /// Sampling distribution: exp1, exp:<rate>, lognormal:<mu>:<sigma>, uniform:<lo>:<hi>
    #[arg(long, default_value = "exp1")]
    pub dist: String,
    /// Kernel family: laplacian, rbf or mlp
    #[arg(long, default_value = "laplacian")]
    pub kernel: String,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Highest moment order
    #[arg(long, default_value_t = 12)]
    pub orders: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_dist(spec: &str) -> Result<TimeDist, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse_f = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| CliError::usage(format!("--dist: {e} in `{spec}`")))
    };
    match parts.as_slice() {
        ["exp1"] => Ok(TimeDist::Exp { rate: 1.0 }),
        ["exp", rate] => Ok(TimeDist::Exp {
            rate: parse_f(rate)?,
        }),
        ["lognormal", mu, sigma] => Ok(TimeDist::LogNormal {
            mu: parse_f(mu)?,
            sigma: parse_f(sigma)?,
        }),
        ["uniform", lo, hi] => Ok(TimeDist::Uniform {
            lo: parse_f(lo)?,
            hi: parse_f(hi)?,
        }),
        _ => Err(CliError::usage(format!(
            "--dist: expected exp1, exp:<rate>, lognormal:<mu>:<sigma> or uniform:<lo>:<hi>, got `{spec}`"
        ))),
    }
}

fn parse_kernel(family: &str, lambda: f64, seed: u64) -> Result<Kernel, CliError> {
    Ok(match family {
        "laplacian" => Kernel::laplacian(lambda)?,
        "rbf" => Kernel::rbf(lambda)?,
        "mlp" => Kernel::mlp(lambda, seed)?,
        "none" => Kernel::None,
        other => {
            return Err(CliError::usage(format!(
                "--kernel: expected laplacian, rbf, mlp or none, got `{other}`"
            )))
        }
    })
}

pub fn analyze_moments(args: MomentsArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed)?;
    let dist = parse_dist(&args.dist)?;
    let kernel = parse_kernel(&args.kernel, args.lambda, seed)?;
    let report = moment_ratios(dist, &kernel, args.orders, args.samples, seed)?;

    // closed form available for the Exp(1) + Laplacian(1) reference case
    let reference = matches!(dist, TimeDist::Exp { rate } if rate == 1.0)
        && matches!(kernel, Kernel::Laplacian { lambda } if lambda == 1.0);

    let mut out = String::from("n,base_moment,weighted_moment,ratio,std_err,expected\n");
    for (i, &n) in report.orders.iter().enumerate() {
        let expected = if reference {
            format!("{:?}", exp1_laplacian_ratio(n))
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{n},{:?},{:?},{:?},{:?},{expected}",
            report.base_moments[i], report.weighted_moments[i], report.ratios[i],
            report.std_errs[i]
        );
    }
    std::fs::create_dir_all(&args.out)?;
    write_file(&args.out.join("moments.csv"), &out)?;

    if let Some(&n) = report.decrease_violations.first() {
        return Err(CliError::violation(format!(
            "moment ratios are not decreasing at order n={n}: R_{n}={:?} < R_{}={:?}",
            report.ratios[n],
            n + 1,
            report.ratios[n + 1]
        )));
    }
    if !(report.ratios[0] > 0.0 && report.ratios[0] <= 1.0) {
        return Err(CliError::violation(format!(
            "R_0 = {:?} outside (0, 1]",
            report.ratios[0]
        )));
    }
    if reference {
        for (i, &n) in report.orders.iter().enumerate() {
            let err = (report.ratios[i] - exp1_laplacian_ratio(n)).abs();
            if err > 3.0 * report.std_errs[i].max(1e-9) {
                return Err(CliError::violation(format!(
                    "row n={n}: ratio {:?} deviates from the closed form {:?} beyond 3 standard errors",
                    report.ratios[i],
                    exp1_laplacian_ratio(n)
                )));
            }
        }
    }
    println!(
        "orders=0..{} R_0={:?} R_{}={:?} decreasing=yes",
        args.orders,
        report.ratios[0],
        args.orders,
        report.ratios[args.orders]
    );
    Ok(())
}

#[derive(Args)]
pub struct VarianceArgs {
    /// Optional single fixture: psi value in (0, 1]
    #[arg(long)]
    pub psi: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_x: f64,
    #[arg(long, default_value_t = 3.0)]
    pub sigma_y: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn analyze_variance(args: VarianceArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed)?;
    let fixtures: Vec<VarianceFixture> = match args.psi {
        Some(psi) => vec![VarianceFixture {
            sigma_x: args.sigma_x,
            sigma_y: args.sigma_y,
            rho: args.rho,
            psi,
        }],
        None => {
            // a deterministic grid covering both sides of the sufficient condition
            let mut grid = Vec::new();
            for &psi in &[0.25, 0.5, 0.75, 1.0] {
                for &rho in &[-1.0, -0.5, 0.0, 0.5, 1.0] {
                    for &(sx, sy) in &[(1.0, 3.0), (1.0, 1.0), (5.0, 1.0)] {
                        grid.push(VarianceFixture {
                            sigma_x: sx,
                            sigma_y: sy,
                            rho,
                            psi,
                        });
                    }
                }
            }
            grid
        }
    };

    let mut out =
        String::from("sigma_x,sigma_y,rho,psi,delta_analytic,delta_mc,std_err,condition,mc_match\n");
    let mut failure: Option<String> = None;
    for (i, fixture) in fixtures.iter().enumerate() {
        let delta = variance_delta(fixture, args.samples, substream_seed(seed, &format!("vd-{i}")))?;
        let mc_match = (delta.monte_carlo - delta.analytic).abs() <= 3.0 * delta.std_err.max(1e-12);
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{}",
            fixture.sigma_x,
            fixture.sigma_y,
            fixture.rho,
            fixture.psi,
            delta.analytic,
            delta.monte_carlo,
            delta.std_err,
            delta.condition_holds,
            mc_match
        );
        if failure.is_none() {
            if delta.condition_holds && delta.analytic < 0.0 {
                failure = Some(format!(
                    "row {i}: condition holds but analytic delta {:?} < 0",
                    delta.analytic
                ));
            } else if !mc_match {
                failure = Some(format!(
                    "row {i}: Monte-Carlo delta {:?} deviates from analytic {:?} beyond 3 standard errors",
                    delta.monte_carlo, delta.analytic
                ));
            }
        }
    }

    // neighborhood extension on deterministic non-negative-covariance fixtures
    let mut nb_out = String::from("fixture,n,delta_analytic,delta_mc,std_err,nonneg\n");
    for (i, psis) in [vec![0.3, 0.5, 0.9], vec![0.6, 0.6, 0.6, 0.6]]
        .into_iter()
        .enumerate()
    {
        let n = psis.len();
        let mut cov = vec![vec![0.1; 2 * n]; 2 * n];
        for (d, row) in cov.iter_mut().enumerate() {
            row[d] = 1.0;
        }
        let fixture = NeighborhoodFixture { psis, cov };
        let delta = neighborhood_variance_delta(
            &fixture,
            args.samples,
            substream_seed(seed, &format!("nvd-{i}")),
        )?;
        let _ = writeln!(
            nb_out,
            "{i},{n},{:?},{:?},{:?},{}",
            delta.analytic, delta.monte_carlo, delta.std_err, delta.guaranteed_nonneg
        );
        if failure.is_none() && delta.guaranteed_nonneg && delta.analytic < 0.0 {
            failure = Some(format!(
                "neighborhood fixture {i}: guaranteed non-negative but delta {:?} < 0",
                delta.analytic
            ));
        }
    }

    std::fs::create_dir_all(&args.out)?;
    write_file(&args.out.join("variance.csv"), &out)?;
    write_file(&args.out.join("variance_neighborhood.csv"), &nb_out)?;
    if let Some(message) = failure {
        return Err(CliError::violation(message));
    }
    println!("fixtures={} all checks passed", fixtures.len());
    Ok(())
}

#[derive(Args)]
pub struct SeriesArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    /// Evaluation point for the truncated-series vs closed-form check
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    /// Truncation order
    #[arg(long, default_value_t = 20)]
    pub order: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn analyze_series(args: SeriesArgs) -> Result<(), CliError> {
    let coeffs = product_series(args.lambda, args.omega, args.order);
    let mut out = String::from("k,kernel_coeff,encoding_coeff,product_coeff\n");
    for k in 0..=args.order {
        let b = if k % 2 == 0 {
            format!("{:?}", coeffs.encoding_coeffs[k / 2])
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{k},{:?},{b},{:?}",
            coeffs.kernel_coeffs[k], coeffs.product_coeffs[k]
        );
    }
    let cmp = series_vs_direct(args.lambda, args.omega, args.t, args.order);
    let _ = writeln!(
        out,
        "check,t={:?},series={:?},direct={:?};abs_diff={:?};converged={}",
        args.t, cmp.series, cmp.direct, cmp.abs_diff, cmp.converged
    );
    std::fs::create_dir_all(&args.out)?;
    write_file(&args.out.join("series.csv"), &out)?;

    let odd_nonzero = (1..=args.order)
        .step_by(2)
        .any(|k| coeffs.product_coeffs[k] != 0.0);
    if args.lambda == 0.0 && odd_nonzero {
        return Err(CliError::violation(
            "lambda = 0 must zero every odd product coefficient",
        ));
    }
    if args.lambda > 0.0 && args.order >= 1 && !odd_nonzero {
        return Err(CliError::violation(
            "positive lambda must produce at least one odd product coefficient",
        ));
    }
    if cmp.converged && cmp.abs_diff > 1e-10 {
        return Err(CliError::violation(format!(
            "series and closed form disagree by {:?} at t={:?}",
            cmp.abs_diff, args.t
        )));
    }
    if !cmp.converged {
        eprintln!(
            "warning: truncation order {} has not converged at t={:?}; the comparison is not asserted",
            args.order, args.t
        );
    }
    println!(
        "order={} abs_diff={:?} converged={}",
        args.order, cmp.abs_diff, cmp.converged
    );
    Ok(())
}

#[derive(Args)]
pub struct SpectralArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Edge feature width of the dataset
    #[arg(long, default_value_t = 21)]
    pub d_e: usize,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn analyze_spectral(args: SpectralArgs) -> Result<(), CliError> {
    let graph = TemporalGraph::load_csv(&args.data, args.d_e)?;
    std::fs::create_dir_all(&args.out)?;

    let mut hist_out = String::from("bin_low,bin_high,count\n");
    match interarrival_histogram(&graph, args.bins)? {
        Some(hist) => {
            for (i, count) in hist.counts.iter().enumerate() {
                let _ = writeln!(
                    hist_out,
                    "{:?},{:?},{count}",
                    hist.edges[i],
                    hist.edges[i + 1]
                );
            }
        }
        None => eprintln!("warning: no inter-arrival gaps in the dataset; histogram is empty"),
    }
    write_file(&args.out.join("histogram.csv"), &hist_out)?;

    let mut entropy_out = String::from("node,entropy\n");
    let mut violations = Vec::new();
    for node in 0..graph.num_nodes() {
        // nodes with fewer than 4 events have no defined spectrum
        if let Ok(h) = spectral_entropy(&graph, node) {
            let _ = writeln!(entropy_out, "{node},{h:?}");
            if h < 0.0 {
                violations.push(node);
            }
        }
    }
    write_file(&args.out.join("entropy.csv"), &entropy_out)?;
    if let Some(node) = violations.first() {
        return Err(CliError::violation(format!(
            "node {node} has negative spectral entropy"
        )));
    }
    println!("nodes={} bins={}", graph.num_nodes(), args.bins);
    Ok(())
}

#[derive(Args)]
pub struct HeatmapArgs {
    /// Use a trained checkpoint's parameters (otherwise a seeded fixture)
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub d: usize,
    #[arg(long, default_value_t = 4)]
    pub d_prime: usize,
    #[arg(long, default_value_t = 3)]
    pub d_e: usize,
    /// Time encoding width; 0 disables the encoding
    #[arg(long, default_value_t = 0)]
    pub d_t: usize,
    #[arg(long, default_value = "laplacian")]
    pub kernel: String,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 5)]
    pub neighbors: usize,
    /// Probe neighbor index whose elapsed time sweeps the grid
    #[arg(long, default_value_t = 0)]
    pub probe: usize,
    #[arg(long, default_value_t = 5.0)]
    pub grid_max: f64,
    #[arg(long, default_value_t = 50)]
    pub grid_steps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn heatmap(args: HeatmapArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed)?;
    let mut rng = substream_rng(seed, "heatmap-fixture");

    let (params, kernel, encoder) = match &args.checkpoint {
        Some(path) => {
            let model = load_checkpoint(path)?;
            (model.attn, model.kernel, model.encoder)
        }
        None => {
            let dims = AttentionDims {
                d: args.d,
                d_prime: args.d_prime,
                d_e: args.d_e,
                d_t: args.d_t,
            };
            let params = AttentionParams::init(dims, &mut rng)?;
            let kernel = parse_kernel(&args.kernel, args.lambda, seed)?;
            let encoder = if args.d_t == 0 {
                None
            } else {
                Some(TimeEncoder::fixed(args.d_t, 100.0)?)
            };
            (params, kernel, encoder)
        }
    };
    let dims = params.dims;
    if args.neighbors == 0 || args.probe >= args.neighbors {
        return Err(CliError::usage(format!(
            "--probe {} out of range for {} neighbors",
            args.probe, args.neighbors
        )));
    }
    let mut vec_of = |n: usize| -> Tensor {
        Tensor::vector((0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .expect("positive length")
    };
    let h_center = vec_of(dims.d);
    let neighbor_states: Vec<Tensor> = (0..args.neighbors).map(|_| vec_of(dims.d)).collect();
    let edge_feats: Vec<Vec<f64>> = (0..args.neighbors)
        .map(|_| (0..dims.d_e).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let base_delta_ts: Vec<f64> = (0..args.neighbors)
        .map(|_| rng.random_range(0.0..args.grid_max))
        .collect();

    let fixture = HeatmapFixture {
        params,
        kernel,
        encoder,
        h_center,
        neighbor_states,
        edge_feats,
        base_delta_ts,
        probe: args.probe,
    };
    let grid: Vec<f64> = (0..=args.grid_steps)
        .map(|i| args.grid_max * i as f64 / args.grid_steps as f64)
        .collect();
    let rows = attention_heatmap(&fixture, &grid)?;

    let mut out = String::from("neighbor,delta_t,alpha_std,alpha_keat,alpha_diff\n");
    for row in &rows {
        let _ = writeln!(
            out,
            "{},{:?},{:?},{:?},{:?}",
            row.neighbor, row.delta_t, row.alpha_std, row.alpha_keat, row.alpha_diff
        );
    }
    std::fs::create_dir_all(&args.out)?;
    write_file(&args.out.join("heatmap.csv"), &out)?;
    println!("rows={} neighbors={} grid={}", rows.len(), args.neighbors, grid.len());
    Ok(())
}

#[derive(Args)]
#[command(after_help = crate::config_help())]
pub struct SweepArgs {
    /// Event CSV; omitted means the default synthetic benchmark
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Comma-separated width multipliers of sigma; `inf` means no kernel
    #[arg(long, default_value = "0.25,0.5,1,2,4,inf")]
    pub multipliers: String,
    /// Comma-separated training seeds
    #[arg(long, default_value = "1,2,3,4,5")]
    pub seeds: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    /// Seed for the generated benchmark when --data is omitted
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn load_or_generate(
    data: &Option<PathBuf>,
    d_e: usize,
    seed: u64,
) -> Result<TemporalGraph, CliError> {
    match data {
        Some(path) => Ok(TemporalGraph::load_csv(path, d_e)?),
        None => Ok(gen_synthetic(&SynthConfig {
            d_e,
            seed,
            ..SynthConfig::default()
        })?),
    }
}

fn write_sweep_outputs(dir: &Path, table_name: &str, rows: &[SweepRow]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let mut runs = String::from("variant,seed,split,metric,value\n");
    for row in rows {
        for cell in &row.cells {
            let _ = writeln!(runs, "{},{},val,mrr,{:?}", cell.variant, cell.seed, cell.val_mrr);
            let _ = writeln!(
                runs,
                "{},{},test,mrr,{:?}",
                cell.variant, cell.seed, cell.test_mrr
            );
        }
    }
    write_file(&dir.join("runs.csv"), &runs)?;

    let mut table =
        String::from("variant,mean_val_mrr,std_val_mrr,mean_test_mrr,std_test_mrr\n");
    for row in rows {
        let _ = writeln!(
            table,
            "{},{:?},{:?},{:?},{:?}",
            row.variant, row.mean_val_mrr, row.std_val_mrr, row.mean_test_mrr, row.std_test_mrr
        );
    }
    write_file(&dir.join(table_name), &table)?;
    for row in rows {
        println!(
            "{}: val {:?} +- {:?}  test {:?} +- {:?}",
            row.variant, row.mean_val_mrr, row.std_val_mrr, row.mean_test_mrr, row.std_test_mrr
        );
    }
    Ok(())
}

pub fn sweep_sigma(args: SweepArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed)?;
    let config = build_model_config(args.config.as_deref(), &args.sets, Some(seed))?;
    let graph = load_or_generate(&args.data, config.d_e, seed)?;
    let multipliers: Vec<Option<f64>> = args
        .multipliers
        .split(',')
        .map(|m| {
            let m = m.trim();
            if m == "inf" {
                Ok(None)
            } else {
                m.parse::<f64>()
                    .map(Some)
                    .map_err(|e| CliError::usage(format!("--multipliers: {e} (got `{m}`)")))
            }
        })
        .collect::<Result<_, _>>()?;
    let seeds = parse_u64_list(&args.seeds)?;
    let rows = run_sweep(&config, &graph, &multipliers, &seeds)?;
    write_sweep_outputs(&args.out, "sweep.csv", &rows)
}

#[derive(Args)]
#[command(after_help = crate::config_help())]
pub struct AblateArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Comma-separated modulation flags
    #[arg(long, default_value = "neither,node,edge,both")]
    pub flags: String,
    #[arg(long, default_value = "1,2,3,4,5")]
    pub seeds: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn ablate(args: AblateArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed)?;
    let config = build_model_config(args.config.as_deref(), &args.sets, Some(seed))?;
    let graph = load_or_generate(&args.data, config.d_e, seed)?;
    let flags: Vec<keat_core::attention::Modulation> = args
        .flags
        .split(',')
        .map(|f| {
            keat_core::attention::Modulation::parse(f.trim())
                .ok_or_else(|| CliError::usage(format!("--flags: unknown flag `{f}`")))
        })
        .collect::<Result<_, _>>()?;
    let seeds = parse_u64_list(&args.seeds)?;
    let rows = run_ablation(&config, &graph, &flags, &seeds)?;
    write_sweep_outputs(&args.out, "ablate.csv", &rows)
}

fn parse_usize_list(raw: &str) -> Result<Vec<usize>, CliError> {
    raw.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| CliError::usage(format!("{e} (got `{p}`)")))
        })
        .collect()
}

fn parse_u64_list(raw: &str) -> Result<Vec<u64>, CliError> {
    raw.split(',')
        .map(|p| {
            p.trim()
                .parse::<u64>()
                .map_err(|e| CliError::usage(format!("{e} (got `{p}`)")))
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}
