//! Flat key=value configuration with dotted keys. A config file supplies
//! base values, `--set key=value` overrides win, and unknown keys are
//! rejected outright so typos fail fast.

use std::collections::BTreeMap;
use std::path::Path;

use keat_core::attention::Modulation;
use keat_core::encoding::EncoderMode;
use keat_core::harness::{KernelChoice, LambdaSpec, ModelConfig};

use crate::CliError;

/// Every accepted key with its meaning; printed by `--help`.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("model.d", "node embedding width (>= 1)"),
    ("model.d_prime", "attention output width d' (>= 1)"),
    ("model.d_e", "raw edge feature width, must match the dataset"),
    ("model.hidden", "link predictor hidden width"),
    ("time_encoding.mode", "fixed | learnable"),
    ("time_encoding.d_t", "time encoding width; 0 disables, otherwise even"),
    ("time_encoding.base", "frequency ladder base; 0 derives it from the train span"),
    ("kernel.family", "none | laplacian | rbf | mlp"),
    ("kernel.lambda", "absolute kernel width (overrides the sigma multiple)"),
    ("kernel.lambda_sigma_mult", "kernel width as a multiple of the train sigma"),
    ("modulation", "neither | node | edge | both"),
    ("train.learning_rate", "optimizer step size (> 0)"),
    ("train.batch_size", "events per update (>= 1)"),
    ("train.epochs", "maximum training epochs"),
    ("train.patience", "epochs without val improvement before stopping"),
    ("eval.num_negatives", "negatives per positive in ranking"),
    ("neighbors.k", "most recent events per node visible to attention"),
    ("split.train_frac", "chronological train fraction"),
    ("split.val_frac", "chronological validation fraction"),
    ("seed", "master seed; all substreams derive from it"),
];

pub fn config_keys_help() -> String {
    let mut out = String::from("Config keys (file lines and --set overrides, key=value):\n");
    for (key, doc) in CONFIG_KEYS {
        out.push_str(&format!("  {key:26} {doc}\n"));
    }
    out
}

/// Parse `key=value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_kv_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::usage(format!(
                "{}:{}: expected key=value, got `{line}`",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

pub fn parse_kv_overrides(pairs: &[String]) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for pair in pairs {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--set expects key=value, got `{pair}`")))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Build a model config from default <- file <- overrides, rejecting any
/// key that is not in [`CONFIG_KEYS`].
pub fn build_model_config(
    file: Option<&Path>,
    overrides: &[String],
    seed: Option<u64>,
) -> Result<ModelConfig, CliError> {
    let mut merged = match file {
        Some(path) => parse_kv_file(path)?,
        None => BTreeMap::new(),
    };
    merged.extend(parse_kv_overrides(overrides)?);

    let mut config = ModelConfig::default();
    for (key, value) in &merged {
        apply_key(&mut config, key, value)?;
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

fn apply_key(config: &mut ModelConfig, key: &str, value: &str) -> Result<(), CliError> {
    let bad = |what: &str| CliError::usage(format!("config key {key}: {what} (got `{value}`)"));
    match key {
        "model.d" => config.d = parse(key, value)?,
        "model.d_prime" => config.d_prime = parse(key, value)?,
        "model.d_e" => config.d_e = parse(key, value)?,
        "model.hidden" => config.hidden = parse(key, value)?,
        "time_encoding.mode" => {
            config.encoder_mode = match value {
                "fixed" => EncoderMode::Fixed,
                "learnable" => EncoderMode::Learnable,
                _ => return Err(bad("expected fixed or learnable")),
            }
        }
        "time_encoding.d_t" => config.d_t = parse(key, value)?,
        "time_encoding.base" => config.encoder_base = parse(key, value)?,
        "kernel.family" => {
            config.kernel_family = KernelChoice::parse(value)
                .ok_or_else(|| bad("expected none, laplacian, rbf or mlp"))?
        }
        "kernel.lambda" => config.lambda = LambdaSpec::Absolute(parse(key, value)?),
        "kernel.lambda_sigma_mult" => config.lambda = LambdaSpec::SigmaMult(parse(key, value)?),
        "modulation" => {
            config.modulation = Modulation::parse(value)
                .ok_or_else(|| bad("expected neither, node, edge or both"))?
        }
        "train.learning_rate" => config.learning_rate = parse(key, value)?,
        "train.batch_size" => config.batch_size = parse(key, value)?,
        "train.epochs" => config.epochs = parse(key, value)?,
        "train.patience" => config.patience = parse(key, value)?,
        "eval.num_negatives" => config.num_negatives = parse(key, value)?,
        "neighbors.k" => config.neighbor_k = parse(key, value)?,
        "split.train_frac" => config.train_frac = parse(key, value)?,
        "split.val_frac" => config.val_frac = parse(key, value)?,
        "seed" => config.seed = parse(key, value)?,
        _ => {
            return Err(CliError::usage(format!(
                "unknown config key `{key}`; run with --help for the accepted keys"
            )))
        }
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| CliError::usage(format!("config key {key}: {e} (got `{value}`)")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_win_over_file() {
        let dir = std::env::temp_dir().join("keat_cli_config_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("base.cfg");
        std::fs::write(&path, "kernel.family=rbf\ntrain.epochs=9\n# comment\n").unwrap();
        let cfg = build_model_config(
            Some(&path),
            &["train.epochs=2".to_string()],
            Some(7),
        )
        .unwrap();
        assert_eq!(cfg.kernel_family, KernelChoice::Rbf);
        assert_eq!(cfg.epochs, 2);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = build_model_config(None, &["kernel.widht=3".to_string()], None).unwrap_err();
        assert!(err.message.contains("kernel.widht"), "{}", err.message);
    }

    #[test]
    fn bad_value_names_key() {
        let err =
            build_model_config(None, &["train.epochs=soon".to_string()], None).unwrap_err();
        assert!(err.message.contains("train.epochs"), "{}", err.message);
    }
}
