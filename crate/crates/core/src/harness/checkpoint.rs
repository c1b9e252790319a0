//! Structured-text checkpoints: a format-version line, the full config echo
//! (with the kernel width and encoder base already resolved to absolute
//! values), then one named array per parameter. Keys are written in a fixed
//! order so identical models produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::attention::Modulation;
use crate::encoding::EncoderMode;

use super::model::{KernelChoice, LambdaSpec, LinkModel, ModelConfig};
use super::{HarnessError, HarnessResult};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

pub fn save_checkpoint(path: impl AsRef<Path>, model: &LinkModel) -> HarnessResult<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let _ = writeln!(out, "format_version={CHECKPOINT_FORMAT_VERSION}");
    let c = &model.config;
    let _ = writeln!(out, "config.d={}", c.d);
    let _ = writeln!(out, "config.d_prime={}", c.d_prime);
    let _ = writeln!(out, "config.d_e={}", c.d_e);
    let _ = writeln!(out, "config.d_t={}", c.d_t);
    let _ = writeln!(out, "config.kernel.family={}", c.kernel_family.name());
    let _ = writeln!(out, "config.kernel.lambda={:?}", model.lambda);
    let _ = writeln!(out, "config.time_encoding.mode={}", encoder_mode_name(c.encoder_mode));
    let _ = writeln!(
        out,
        "config.time_encoding.base={:?}",
        model.encoder.as_ref().map(|e| e.base()).unwrap_or(0.0)
    );
    let _ = writeln!(out, "config.modulation={}", c.modulation.name());
    let _ = writeln!(out, "config.learning_rate={:?}", c.learning_rate);
    let _ = writeln!(out, "config.batch_size={}", c.batch_size);
    let _ = writeln!(out, "config.epochs={}", c.epochs);
    let _ = writeln!(out, "config.patience={}", c.patience);
    let _ = writeln!(out, "config.neighbor_k={}", c.neighbor_k);
    let _ = writeln!(out, "config.num_negatives={}", c.num_negatives);
    let _ = writeln!(out, "config.hidden={}", c.hidden);
    let _ = writeln!(out, "config.train_frac={:?}", c.train_frac);
    let _ = writeln!(out, "config.val_frac={:?}", c.val_frac);
    let _ = writeln!(out, "config.seed={}", c.seed);
    let _ = writeln!(out, "num_nodes={}", model.num_nodes);
    for (name, tensor) in model.params() {
        let dims: Vec<String> = tensor.shape().iter().map(|e| e.to_string()).collect();
        let _ = writeln!(out, "param {} {}", name, dims.join(" "));
        let values: Vec<String> = tensor.data().iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", values.join(" "));
    }
    std::fs::write(path, out).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn encoder_mode_name(mode: EncoderMode) -> &'static str {
    mode.name()
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> HarnessResult<LinkModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut kv = std::collections::BTreeMap::new();
    let mut params: Vec<(String, Vec<usize>, Vec<f64>)> = Vec::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((lineno, line)) = lines.next() {
        let line_num = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("param ") {
            let mut fields = rest.split_whitespace();
            let name = fields
                .next()
                .ok_or_else(|| parse_err(line_num, "missing parameter name"))?
                .to_string();
            let shape: Vec<usize> = fields
                .map(|f| f.parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|e| parse_err(line_num, &format!("bad shape: {e}")))?;
            let (data_lineno, data_line) = lines
                .next()
                .ok_or_else(|| parse_err(line_num, "missing data line after param header"))?;
            let data: Vec<f64> = data_line
                .split_whitespace()
                .map(|f| f.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| parse_err(data_lineno + 1, &format!("bad value: {e}")))?;
            let numel: usize = shape.iter().product();
            if numel != data.len() {
                return Err(parse_err(
                    data_lineno + 1,
                    &format!("expected {numel} values, got {}", data.len()),
                ));
            }
            params.push((name, shape, data));
        } else if let Some((key, value)) = line.split_once('=') {
            kv.insert(key.to_string(), value.to_string());
        } else {
            return Err(parse_err(line_num, "expected key=value or param block"));
        }
    }

    let version: u32 = get(&kv, "format_version")?;
    if version != CHECKPOINT_FORMAT_VERSION {
        return Err(HarnessError::Domain(format!(
            "unsupported checkpoint format version {version}"
        )));
    }
    let kernel_name: String = get(&kv, "config.kernel.family")?;
    let kernel_family = KernelChoice::parse(&kernel_name)
        .ok_or_else(|| HarnessError::Domain(format!("unknown kernel family {kernel_name}")))?;
    let mode_name: String = get(&kv, "config.time_encoding.mode")?;
    let encoder_mode = match mode_name.as_str() {
        "fixed" => EncoderMode::Fixed,
        "learnable" => EncoderMode::Learnable,
        other => {
            return Err(HarnessError::Domain(format!(
                "unknown time encoding mode {other}"
            )))
        }
    };
    let modulation_name: String = get(&kv, "config.modulation")?;
    let modulation = Modulation::parse(&modulation_name)
        .ok_or_else(|| HarnessError::Domain(format!("unknown modulation {modulation_name}")))?;
    let lambda: f64 = get(&kv, "config.kernel.lambda")?;
    let base: f64 = get(&kv, "config.time_encoding.base")?;
    let d_t: usize = get(&kv, "config.d_t")?;
    let config = ModelConfig {
        d: get(&kv, "config.d")?,
        d_prime: get(&kv, "config.d_prime")?,
        d_e: get(&kv, "config.d_e")?,
        d_t,
        kernel_family,
        lambda: LambdaSpec::Absolute(lambda),
        encoder_mode,
        encoder_base: if d_t == 0 { 0.0 } else { base },
        modulation,
        learning_rate: get(&kv, "config.learning_rate")?,
        batch_size: get(&kv, "config.batch_size")?,
        epochs: get(&kv, "config.epochs")?,
        patience: get(&kv, "config.patience")?,
        neighbor_k: get(&kv, "config.neighbor_k")?,
        num_negatives: get(&kv, "config.num_negatives")?,
        hidden: get(&kv, "config.hidden")?,
        train_frac: get(&kv, "config.train_frac")?,
        val_frac: get(&kv, "config.val_frac")?,
        seed: get(&kv, "config.seed")?,
    };
    let num_nodes: usize = get(&kv, "num_nodes")?;
    let mut model = LinkModel::init(&config, num_nodes, None, 1.0)?;

    let mut params_mut = model.params_mut();
    if params.len() != params_mut.len() {
        return Err(HarnessError::Domain(format!(
            "checkpoint has {} parameters, model expects {}",
            params.len(),
            params_mut.len()
        )));
    }
    for ((name, shape, data), (slot, target)) in params.into_iter().zip(params_mut.iter_mut()) {
        if name != *slot {
            return Err(HarnessError::Domain(format!(
                "unexpected parameter {name}, expected {slot}"
            )));
        }
        if target.shape() != shape.as_slice() {
            return Err(HarnessError::Domain(format!(
                "parameter {name} has shape {:?}, expected {:?}",
                shape,
                target.shape()
            )));
        }
        target.data_mut().copy_from_slice(&data);
    }
    Ok(model)
}

fn parse_err(line: usize, message: &str) -> HarnessError {
    HarnessError::Checkpoint {
        line,
        message: message.to_string(),
    }
}

fn get<T: std::str::FromStr>(
    kv: &std::collections::BTreeMap<String, String>,
    key: &str,
) -> HarnessResult<T>
where
    T::Err: std::fmt::Display,
{
    let raw = kv
        .get(key)
        .ok_or_else(|| HarnessError::Domain(format!("checkpoint missing key {key}")))?;
    raw.parse::<T>()
        .map_err(|e| HarnessError::Domain(format!("checkpoint key {key}: {e}")))
}
