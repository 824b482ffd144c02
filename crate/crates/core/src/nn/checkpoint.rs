//! Versioned, self-describing text format for model checkpoints.
//!
//! Layout: a magic/version line, the architecture block as `key value`
//! lines, the optional input standardization, then one `param <name> <len>`
//! section per parameter array (in canonical order) whose next line holds
//! the values space-separated, and a closing `end`. Floats are written in
//! shortest round-trip form, so save → load reproduces every bit.

use std::fmt::Write as _;
use std::path::Path;

use super::{
    ArchitectureConfig, InputNorm, ModelCheckpoint, ModelParams, NnError,
    CHECKPOINT_FORMAT_VERSION,
};

const MAGIC: &str = "dvlaccel checkpoint";

impl ModelCheckpoint {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} v{}", self.version);
        let a = &self.arch;
        let _ = writeln!(out, "window_len {}", self.window_len);
        let _ = writeln!(out, "in_channels {}", a.in_channels);
        let _ = writeln!(out, "conv_filters {}", a.conv_filters);
        let _ = writeln!(out, "kernel {}", a.kernel);
        let _ = writeln!(out, "leaky_slope {}", a.leaky_slope);
        let _ = writeln!(out, "pool {}", a.pool);
        let _ = writeln!(out, "lstm_hidden {}", a.lstm_hidden);
        let _ = writeln!(out, "lstm_layers {}", a.lstm_layers);
        let _ = writeln!(out, "fc_hidden {}", a.fc_hidden);
        let _ = writeln!(out, "output {}", a.output);
        match &self.input_norm {
            None => out.push_str("input_norm none\n"),
            Some(norm) => {
                out.push_str("input_norm affine\n");
                let _ = writeln!(
                    out,
                    "norm_mean {} {} {}",
                    norm.mean[0], norm.mean[1], norm.mean[2]
                );
                let _ = writeln!(
                    out,
                    "norm_std {} {} {}",
                    norm.std[0], norm.std[1], norm.std[2]
                );
            }
        }
        for (name, values) in self.params.named_arrays() {
            let _ = writeln!(out, "param {name} {}", values.len());
            let mut first = true;
            for v in values {
                if !first {
                    out.push(' ');
                }
                let _ = write!(out, "{v}");
                first = false;
            }
            out.push('\n');
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self, NnError> {
        Parser::new(text).parse()
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        std::fs::write(path, self.to_text()).map_err(|source| NnError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        let text = std::fs::read_to_string(path).map_err(|source| NnError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }
}

struct Parser<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines(),
            line_no: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> NnError {
        NnError::CheckpointParse {
            line: self.line_no,
            msg: msg.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str, NnError> {
        self.line_no += 1;
        self.lines
            .next()
            .map(|l| l.strip_suffix('\r').unwrap_or(l))
            .ok_or(NnError::CheckpointParse {
                line: self.line_no,
                msg: "unexpected end of file".into(),
            })
    }

    fn parse(mut self) -> Result<ModelCheckpoint, NnError> {
        let magic = self.next_line()?;
        let version = magic
            .strip_prefix(MAGIC)
            .map(str::trim)
            .and_then(|v| v.strip_prefix('v'))
            .and_then(|v| v.parse::<u32>().ok())
            .ok_or_else(|| self.err(format!("expected '{MAGIC} v<version>', got '{magic}'")))?;
        if version != CHECKPOINT_FORMAT_VERSION {
            return Err(self.err(format!("unsupported checkpoint version {version}")));
        }

        let mut window_len = None;
        let mut fields = std::collections::HashMap::new();
        let mut leaky_slope = None;
        let mut input_norm: Option<Option<InputNorm>> = None;

        // header block runs until the first `param` line
        let first_param_line = loop {
            let line = self.next_line()?;
            let mut parts = line.split_whitespace();
            let key = parts.next().ok_or_else(|| self.err("blank header line"))?;
            match key {
                "param" => break line,
                "window_len" => window_len = Some(self.parse_usize(parts.next(), "window_len")?),
                "leaky_slope" => {
                    let raw = parts
                        .next()
                        .ok_or_else(|| self.err("leaky_slope missing value"))?;
                    leaky_slope = Some(raw.parse::<f64>().map_err(|_| {
                        self.err(format!("leaky_slope: invalid number '{raw}'"))
                    })?);
                }
                "input_norm" => match parts.next() {
                    Some("none") => input_norm = Some(None),
                    Some("affine") => {
                        let mean = self.parse_vec3_line("norm_mean")?;
                        let std = self.parse_vec3_line("norm_std")?;
                        input_norm = Some(Some(InputNorm { mean, std }));
                    }
                    other => {
                        return Err(self.err(format!("input_norm: expected 'none' or 'affine', got {other:?}")))
                    }
                },
                "in_channels" | "conv_filters" | "kernel" | "pool" | "lstm_hidden"
                | "lstm_layers" | "fc_hidden" | "output" => {
                    let v = self.parse_usize(parts.next(), key)?;
                    fields.insert(key.to_string(), v);
                }
                other => return Err(self.err(format!("unknown header key '{other}'"))),
            }
        };

        let get = |name: &str| -> Result<usize, NnError> {
            fields.get(name).copied().ok_or(NnError::CheckpointParse {
                line: self.line_no,
                msg: format!("missing header field '{name}'"),
            })
        };
        let arch = ArchitectureConfig {
            in_channels: get("in_channels")?,
            conv_filters: get("conv_filters")?,
            kernel: get("kernel")?,
            leaky_slope: leaky_slope
                .ok_or_else(|| self.err("missing header field 'leaky_slope'"))?,
            pool: get("pool")?,
            lstm_hidden: get("lstm_hidden")?,
            lstm_layers: get("lstm_layers")?,
            fc_hidden: get("fc_hidden")?,
            output: get("output")?,
        };
        let window_len =
            window_len.ok_or_else(|| self.err("missing header field 'window_len'"))?;
        let input_norm =
            input_norm.ok_or_else(|| self.err("missing header field 'input_norm'"))?;
        arch.validate(window_len)?;

        let mut params = ModelParams::zeros(&arch);
        let expected: Vec<(String, usize)> = params
            .named_arrays()
            .iter()
            .map(|(name, values)| (name.clone(), values.len()))
            .collect();
        let mut param_line = first_param_line.to_string();
        for (i, (name, len)) in expected.iter().enumerate() {
            let mut parts = param_line.split_whitespace();
            let keyword = parts.next();
            let got_name = parts.next();
            let got_len = parts.next().and_then(|v| v.parse::<usize>().ok());
            if keyword != Some("param") || got_name != Some(name.as_str()) || got_len != Some(*len)
            {
                return Err(self.err(format!(
                    "expected 'param {name} {len}', got '{param_line}'"
                )));
            }
            let values_line = self.next_line()?;
            let arr = params.arrays_mut().swap_remove(i);
            self.fill_values(values_line, name, arr)?;
            if i + 1 < expected.len() {
                param_line = self.next_line()?.to_string();
            }
        }
        let end = self.next_line()?;
        if end != "end" {
            return Err(self.err(format!("expected 'end', got '{end}'")));
        }

        Ok(ModelCheckpoint {
            version,
            arch,
            window_len,
            input_norm,
            params,
        })
    }

    fn fill_values(&self, line: &str, name: &str, arr: &mut Vec<f64>) -> Result<(), NnError> {
        let mut count = 0;
        for (i, token) in line.split_ascii_whitespace().enumerate() {
            if i >= arr.len() {
                return Err(self.err(format!("{name}: more than {} values", arr.len())));
            }
            let v: f64 = token
                .parse()
                .map_err(|_| self.err(format!("{name}[{i}]: invalid number '{token}'")))?;
            if !v.is_finite() {
                return Err(self.err(format!("{name}[{i}]: non-finite value")));
            }
            arr[i] = v;
            count += 1;
        }
        if count != arr.len() {
            return Err(self.err(format!(
                "{name}: expected {} values, got {count}",
                arr.len()
            )));
        }
        Ok(())
    }

    fn parse_usize(&self, token: Option<&str>, key: &str) -> Result<usize, NnError> {
        token
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| self.err(format!("{key}: expected an integer")))
    }

    fn parse_vec3_line(&mut self, key: &str) -> Result<[f64; 3], NnError> {
        let line = self.next_line()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected '{key} <x> <y> <z>', got '{line}'")));
        }
        let mut out = [0.0; 3];
        for (i, slot) in out.iter_mut().enumerate() {
            let token = parts
                .next()
                .ok_or_else(|| self.err(format!("{key}: missing component {i}")))?;
            *slot = token
                .parse()
                .map_err(|_| self.err(format!("{key}[{i}]: invalid number '{token}'")))?;
        }
        Ok(out)
    }
}
