//! Parameter checkpoint files.
//!
//! Text format, one tensor per line after a version header:
//!
//! ```text
//! gnncomm-params v1
//! <key> <len> <v_0> <v_1> ... <v_{len-1}>
//! ```
//!
//! Keys are dotted paths from [`Params::visit`]; values are written in
//! shortest round-trip exponential notation, so save → load is exact.

use std::fmt::Write as _;
use std::path::Path;

use super::params::Params;
use crate::error::{Error, Result};

pub const HEADER: &str = "gnncomm-params v1";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub entries: Vec<(String, Vec<f64>)>,
}

impl Checkpoint {
    pub fn from_params<P: Params + ?Sized>(params: &P, prefix: &str) -> Self {
        let mut ck = Checkpoint::default();
        ck.append(params, prefix);
        ck
    }

    pub fn append<P: Params + ?Sized>(&mut self, params: &P, prefix: &str) {
        params.visit(prefix, &mut |k, t| self.entries.push((k.to_string(), t.to_vec())));
    }

    /// Copy every tensor under `prefix` into `params`; keys and lengths must match.
    pub fn restore<P: Params + ?Sized>(&self, params: &mut P, prefix: &str) -> Result<()> {
        let mut keys = Vec::new();
        params.visit(prefix, &mut |k, t| keys.push((k.to_string(), t.len())));
        let mut tensors = Vec::with_capacity(keys.len());
        for (key, len) in &keys {
            let (_, values) = self
                .entries
                .iter()
                .find(|(k, _)| k == key)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor {key}")))?;
            if values.len() != *len {
                return Err(Error::Checkpoint(format!(
                    "tensor {key}: expected {len} values, found {}",
                    values.len()
                )));
            }
            tensors.push(values);
        }
        let mut it = tensors.into_iter();
        params.visit_mut(&mut |t| t.copy_from_slice(it.next().expect("visit order is stable")));
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from(HEADER);
        s.push('\n');
        for (k, v) in &self.entries {
            let _ = write!(s, "{k} {}", v.len());
            for x in v {
                let _ = write!(s, " {x:e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == HEADER => {}
            other => {
                return Err(Error::Checkpoint(format!(
                    "unsupported header {:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let mut entries = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_ascii_whitespace();
            let key = parts.next().unwrap().to_string();
            let len: usize = parts
                .next()
                .and_then(|x| x.parse().ok())
                .ok_or_else(|| Error::Checkpoint(format!("line {}: bad length", n + 2)))?;
            let values = parts
                .map(|x| x.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Checkpoint(format!("line {}: {e}", n + 2)))?;
            if values.len() != len {
                return Err(Error::Checkpoint(format!(
                    "line {}: declared {len} values, found {}",
                    n + 2,
                    values.len()
                )));
            }
            entries.push((key, values));
        }
        Ok(Self { entries })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}
