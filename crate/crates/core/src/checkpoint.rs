//! Text checkpoints of trained parameters.
//!
//! ```text
//! GCNGAN-CHECKPOINT 1
//! kind gcn-gan                      (or lstm-baseline)
//! config {"window":10,...}          (training configuration as one JSON line)
//! tensors <count>
//! tensor <name> <rows> <cols>
//! <rows lines of cols values>
//! ...
//! end
//! ```
//!
//! Values are written in shortest round-trip scientific notation, so a
//! save/load cycle reproduces every parameter bit for bit. Optimizer state
//! is not stored; a loaded model resumes with fresh RMSProp accumulators.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::baseline::LstmBaselineParams;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{DiscriminatorParams, GeneratorParams, TrainConfig};
use crate::nn::{DenseParams, GcnLayerParams, LstmParams, ParamSet};

const MAGIC: &str = "GCNGAN-CHECKPOINT 1";

fn prefixed<'a>(prefix: &str, v: Vec<(String, &'a Matrix)>) -> Vec<(String, &'a Matrix)> {
    v.into_iter()
        .map(|(n, m)| (format!("{prefix}.{n}"), m))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Checkpoint {
    GcnGan {
        config: TrainConfig,
        generator: GeneratorParams,
        critic: DiscriminatorParams,
    },
    LstmBaseline {
        config: TrainConfig,
        params: LstmBaselineParams,
    },
}

impl Checkpoint {
    pub fn kind(&self) -> &'static str {
        match self {
            Checkpoint::GcnGan { .. } => "gcn-gan",
            Checkpoint::LstmBaseline { .. } => "lstm-baseline",
        }
    }

    pub fn config(&self) -> &TrainConfig {
        match self {
            Checkpoint::GcnGan { config, .. } | Checkpoint::LstmBaseline { config, .. } => config,
        }
    }

    fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        match self {
            Checkpoint::GcnGan {
                generator, critic, ..
            } => {
                let mut out = prefixed("generator", generator.named_tensors());
                out.extend(prefixed("critic", critic.named_tensors()));
                out
            }
            Checkpoint::LstmBaseline { params, .. } => params.named_tensors(),
        }
    }
}

pub fn write_checkpoint(ckpt: &Checkpoint) -> Result<String> {
    let config = serde_json::to_string(ckpt.config())
        .map_err(|e| Error::Validation(format!("cannot serialize config: {e}")))?;
    let tensors = ckpt.named_tensors();
    let mut out = format!(
        "{MAGIC}\nkind {}\nconfig {config}\ntensors {}\n",
        ckpt.kind(),
        tensors.len()
    );
    for (name, m) in tensors {
        let _ = writeln!(out, "tensor {name} {} {}", m.rows(), m.cols());
        for r in 0..m.rows() {
            let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out.push_str("end\n");
    Ok(out)
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_checkpoint(ckpt)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&text, path)
}

struct Reader<'a> {
    path: PathBuf,
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: self.line,
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Result<&'a str> {
        match self.lines.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => {
                self.line += 1;
                Err(self.err("unexpected end of file"))
            }
        }
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next()?;
        l.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| self.err(format!("expected '{key} ...'")))
    }
}

/// Tensors by name with the line their header appeared on.
type TensorMap = BTreeMap<String, (usize, Matrix)>;

pub fn parse_checkpoint(text: &str, path: &Path) -> Result<Checkpoint> {
    let mut r = Reader {
        path: path.to_path_buf(),
        lines: text.lines().enumerate(),
        line: 0,
    };
    if r.next()? != MAGIC {
        return Err(r.err(format!("not a checkpoint, expected '{MAGIC}'")));
    }
    let kind = r.keyed("kind")?;
    let config_line = r.line + 1;
    let config: TrainConfig = serde_json::from_str(r.keyed("config")?)
        .map_err(|e| r.err(format!("invalid config: {e}")))?;
    let count: usize = r
        .keyed("tensors")?
        .parse()
        .map_err(|_| r.err("invalid tensor count"))?;
    let count_line = r.line;

    let mut tensors = TensorMap::new();
    for _ in 0..count {
        let header: Vec<&str> = r.keyed("tensor")?.split(' ').collect();
        if header.len() != 3 {
            return Err(r.err("expected 'tensor <name> <rows> <cols>'"));
        }
        let header_line = r.line;
        let (rows, cols): (usize, usize) = match (header[1].parse(), header[2].parse()) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return Err(r.err("invalid tensor dimensions")),
        };
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let values: Vec<&str> = r.next()?.split(' ').filter(|s| !s.is_empty()).collect();
            if values.len() != cols {
                return Err(r.err(format!("expected {cols} values, found {}", values.len())));
            }
            for v in values {
                data.push(
                    v.parse::<f64>()
                        .map_err(|_| r.err(format!("invalid number '{v}'")))?,
                );
            }
        }
        let m = Matrix::new(rows, cols, data)?;
        if tensors
            .insert(header[0].to_string(), (header_line, m))
            .is_some()
        {
            return Err(r.err(format!("duplicate tensor '{}'", header[0])));
        }
    }
    if r.next()? != "end" {
        return Err(r.err("expected 'end'"));
    }

    let shape_of = |tensors: &TensorMap, name: &str| -> Result<(usize, usize)> {
        tensors
            .get(name)
            .map(|(_, m)| m.shape())
            .ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: count_line,
                msg: format!("missing tensor '{name}'"),
            })
    };
    let ckpt = match kind {
        "gcn-gan" => {
            let (n, gcn_out) = shape_of(&tensors, "generator.gcn.weight")?;
            let (_, hidden) = shape_of(&tensors, "generator.lstm.input.recurrent_weight")?;
            let (_, critic_hidden) = shape_of(&tensors, "critic.hidden.weight")?;
            let mut generator = GeneratorParams {
                gcn: GcnLayerParams {
                    weight: Matrix::zeros(n, gcn_out),
                },
                lstm: LstmParams {
                    candidate_activation: config.candidate_activation,
                    ..LstmParams::zeros(n * gcn_out, hidden)
                },
                output: DenseParams::zeros(hidden, n * n),
            };
            let mut critic = DiscriminatorParams::zeros(n, critic_hidden);
            fill(&mut generator, "generator.", &mut tensors, path)?;
            fill(&mut critic, "critic.", &mut tensors, path)?;
            Checkpoint::GcnGan {
                config,
                generator,
                critic,
            }
        }
        "lstm-baseline" => {
            let (hidden, width) = shape_of(&tensors, "output.weight")?;
            let (inputs, _) = shape_of(&tensors, "lstm.input.input_weight")?;
            let mut params = LstmBaselineParams {
                lstm: LstmParams {
                    candidate_activation: config.candidate_activation,
                    ..LstmParams::zeros(inputs, hidden)
                },
                output: DenseParams::zeros(hidden, width),
            };
            fill(&mut params, "", &mut tensors, path)?;
            Checkpoint::LstmBaseline { config, params }
        }
        other => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 2,
                msg: format!("unknown model kind '{other}'"),
            })
        }
    };
    if let Some((name, (line, _))) = tensors.into_iter().next() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("unexpected tensor '{name}'"),
        });
    }
    if let Err(e) = ckpt.config().validate() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: config_line,
            msg: e.to_string(),
        });
    }
    Ok(ckpt)
}

/// Moves every tensor `template` expects out of `tensors`, checking shapes.
fn fill<P: ParamSet>(
    template: &mut P,
    prefix: &str,
    tensors: &mut TensorMap,
    path: &Path,
) -> Result<()> {
    let names: Vec<String> = template
        .named_tensors()
        .into_iter()
        .map(|(n, _)| format!("{prefix}{n}"))
        .collect();
    for (name, slot) in names.iter().zip(template.tensors_mut()) {
        let Some((line, m)) = tensors.remove(name) else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                msg: format!("missing tensor '{name}'"),
            });
        };
        if m.shape() != slot.shape() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!(
                    "tensor '{name}' has shape {:?}, expected {:?}",
                    m.shape(),
                    slot.shape()
                ),
            });
        }
        *slot = m;
    }
    Ok(())
}
