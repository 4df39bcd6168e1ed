//! Plain-text model checkpoints.
//!
//! ```text
//! DREXPLAIN-CKPT-1
//! seed 42
//! model {"omics":{...},"embed_dim":64,...}
//! config task = A
//! tensor cell.expr.weight 674 100
//! <one row of values per line>
//! ...
//! end
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{Model, ModelConfig};
use crate::autograd::Matrix;
use crate::{Error, Result};

pub const CHECKPOINT_HEADER: &str = "DREXPLAIN-CKPT-1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    /// Run configuration echoed for reproduction.
    pub echo: BTreeMap<String, String>,
}

pub fn save_checkpoint(path: &Path, model: &Model, echo: &BTreeMap<String, String>) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "{CHECKPOINT_HEADER}").unwrap();
    writeln!(out, "seed {}", model.seed).unwrap();
    writeln!(out, "model {}", serde_json::to_string(&model.config)?).unwrap();
    for (k, v) in echo {
        if k.contains(char::is_whitespace) || v.contains('\n') {
            return Err(Error::Invalid(format!("echo entry `{k}` cannot be stored on one line")));
        }
        writeln!(out, "config {k} = {v}").unwrap();
    }
    for (name, value) in model.store.iter() {
        writeln!(out, "tensor {name} {} {}", value.nrows(), value.ncols()).unwrap();
        for row in value.rows() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
    }
    out.push_str("end\n");
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, msg: &str| Error::format(path, line + 1, 1, msg);
    let mut lines = text.lines().enumerate().peekable();

    match lines.next() {
        Some((_, CHECKPOINT_HEADER)) => {}
        _ => return Err(bad(0, "missing DREXPLAIN-CKPT-1 header")),
    }
    let (n, seed_line) = lines.next().ok_or_else(|| bad(1, "missing seed"))?;
    let seed: u64 = seed_line
        .strip_prefix("seed ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| bad(n, "expected `seed <u64>`"))?;
    let (n, model_line) = lines.next().ok_or_else(|| bad(2, "missing model line"))?;
    let config: ModelConfig = model_line
        .strip_prefix("model ")
        .and_then(|s| serde_json::from_str(s).ok())
        .ok_or_else(|| bad(n, "expected `model <json>`"))?;
    let mut model = Model::new(config, seed)?;

    let mut echo = BTreeMap::new();
    while let Some(&(n, line)) = lines.peek() {
        let Some(rest) = line.strip_prefix("config ") else { break };
        let (k, v) = rest.split_once(" = ").ok_or_else(|| bad(n, "expected `config key = value`"))?;
        echo.insert(k.to_string(), v.to_string());
        lines.next();
    }

    let mut loaded = 0;
    loop {
        let (n, line) = lines.next().ok_or_else(|| bad(text.lines().count(), "missing `end`"))?;
        if line == "end" {
            break;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [tag, name, rows, cols] = parts[..] else {
            return Err(bad(n, "expected `tensor <name> <rows> <cols>`"));
        };
        let (Ok(rows), Ok(cols)) = (rows.parse::<usize>(), cols.parse::<usize>()) else {
            return Err(bad(n, "tensor shape is not numeric"));
        };
        if tag != "tensor" {
            return Err(bad(n, "expected `tensor`"));
        }
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (m, row) = lines.next().ok_or_else(|| bad(n, "truncated tensor"))?;
            let before = values.len();
            for tok in row.split_whitespace() {
                values.push(tok.parse::<f64>().map_err(|_| bad(m, "bad number"))?);
            }
            if values.len() - before != cols {
                return Err(bad(m, "row length does not match tensor shape"));
            }
        }
        let matrix = Matrix::from_shape_vec((rows, cols), values).expect("length checked");
        model.store.set(name, matrix).map_err(|e| bad(n, &e.to_string()))?;
        loaded += 1;
    }
    if loaded != model.store.len() {
        return Err(Error::format(
            path,
            1,
            1,
            format!("checkpoint holds {loaded} of {} tensors", model.store.len()),
        ));
    }
    Ok(Checkpoint { model, echo })
}
