//! The JSON fit report.
//!
//! Reports are written with a hand-rolled serializer so the byte layout is
//! fully determined: fixed key order, 2-space indentation, every float in
//! 9-significant-digit scientific notation. Identical inputs then yield
//! byte-identical reports, which the determinism tests rely on. Reading
//! reports back (for `--init-from`) goes through serde_json, which accepts
//! anything we emit.

use std::path::Path;

use crate::io::num9;
use crate::CliError;

#[derive(Debug, Clone)]
pub enum Val {
    Num(f64),
    Int(i64),
    Str(String),
    Bool(bool),
    List(Vec<Val>),
    Map(Vec<(String, Val)>),
}

impl Val {
    fn write(&self, buf: &mut String, indent: usize) {
        match self {
            // Non-finite values have no JSON spelling; null marks them.
            Val::Num(x) if !x.is_finite() => buf.push_str("null"),
            Val::Num(x) => buf.push_str(&num9(*x)),
            Val::Int(i) => buf.push_str(&i.to_string()),
            Val::Str(s) => write_json_string(buf, s),
            Val::Bool(b) => buf.push_str(if *b { "true" } else { "false" }),
            Val::List(items) => {
                if items.is_empty() {
                    buf.push_str("[]");
                    return;
                }
                buf.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        buf.push(',');
                    }
                    buf.push('\n');
                    pad(buf, indent + 1);
                    item.write(buf, indent + 1);
                }
                buf.push('\n');
                pad(buf, indent);
                buf.push(']');
            }
            Val::Map(entries) => {
                if entries.is_empty() {
                    buf.push_str("{}");
                    return;
                }
                buf.push('{');
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        buf.push(',');
                    }
                    buf.push('\n');
                    pad(buf, indent + 1);
                    write_json_string(buf, k);
                    buf.push_str(": ");
                    v.write(buf, indent + 1);
                }
                buf.push('\n');
                pad(buf, indent);
                buf.push('}');
            }
        }
    }
}

fn pad(buf: &mut String, indent: usize) {
    for _ in 0..indent {
        buf.push_str("  ");
    }
}

fn write_json_string(buf: &mut String, s: &str) {
    buf.push('"');
    for c in s.chars() {
        match c {
            '"' => buf.push_str("\\\""),
            '\\' => buf.push_str("\\\\"),
            '\n' => buf.push_str("\\n"),
            '\r' => buf.push_str("\\r"),
            '\t' => buf.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                buf.push_str(&format!("\\u{:04x}", c as u32));
            }
            c => buf.push(c),
        }
    }
    buf.push('"');
}

/// One fit report. `inputs` echoes what the command consumed (paths, fixed
/// values, config), `parameters` and `uncertainties` carry the result,
/// `extras` holds command-specific output that is neither.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub inputs: Vec<(String, Val)>,
    pub parameters: Vec<(String, Val)>,
    pub uncertainties: Vec<(String, Val)>,
    pub status: String,
    pub residual_norm: f64,
    pub extras: Vec<(String, Val)>,
}

impl Report {
    pub fn new(command: &str) -> Report {
        Report {
            command: command.to_owned(),
            inputs: Vec::new(),
            parameters: Vec::new(),
            uncertainties: Vec::new(),
            status: String::new(),
            residual_norm: f64::NAN,
            extras: Vec::new(),
        }
    }

    pub fn input(&mut self, key: &str, v: Val) -> &mut Self {
        self.inputs.push((key.to_owned(), v));
        self
    }

    pub fn param(&mut self, key: &str, x: f64) -> &mut Self {
        self.parameters.push((key.to_owned(), Val::Num(x)));
        self
    }

    pub fn sigma(&mut self, key: &str, x: f64) -> &mut Self {
        self.uncertainties.push((key.to_owned(), Val::Num(x)));
        self
    }

    pub fn extra(&mut self, key: &str, v: Val) -> &mut Self {
        self.extras.push((key.to_owned(), v));
        self
    }

    pub fn render(&self, with_timestamp: bool) -> String {
        let mut root: Vec<(String, Val)> = vec![
            ("command".into(), Val::Str(self.command.clone())),
            ("inputs".into(), Val::Map(self.inputs.clone())),
            ("parameters".into(), Val::Map(self.parameters.clone())),
            ("uncertainties".into(), Val::Map(self.uncertainties.clone())),
            ("status".into(), Val::Str(self.status.clone())),
            ("residual_norm".into(), Val::Num(self.residual_norm)),
        ];
        if !self.extras.is_empty() {
            root.push(("extras".into(), Val::Map(self.extras.clone())));
        }
        root.push((
            "version".into(),
            Val::Str(env!("CARGO_PKG_VERSION").to_owned()),
        ));
        if with_timestamp {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            root.push(("timestamp".into(), Val::Int(secs as i64)));
        }
        let mut buf = String::new();
        Val::Map(root).write(&mut buf, 0);
        buf.push('\n');
        buf
    }
}

/// The `parameters` section of an earlier report, for seeding a refit.
pub fn read_report_params(path: &Path) -> Result<Vec<(String, f64)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let doc: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Io(format!("{}: invalid JSON: {e}", path.display())))?;
    let params = doc
        .get("parameters")
        .and_then(|p| p.as_object())
        .ok_or_else(|| {
            CliError::Io(format!(
                "{}: report has no 'parameters' object",
                path.display()
            ))
        })?;
    let mut out = Vec::with_capacity(params.len());
    for (k, v) in params {
        if let Some(x) = v.as_f64() {
            out.push((k.clone(), x));
        }
    }
    Ok(out)
}
