//! On-disk model format: canonical JSON with sorted keys and every float
//! written with 17 significant digits, so identical fits give identical bytes
//! and parsing restores every field exactly.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::families::{ComponentPrior, FamilyKind};
use crate::mixture::{FitDiagnostics, MixtureModel, NullMode};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub model: MixtureModel,
    pub seed: u64,
    /// Caller-supplied fit time; never read from the clock.
    pub timestamp: Option<String>,
}

impl ModelDocument {
    pub fn new(model: MixtureModel, seed: u64) -> Self {
        Self {
            model,
            seed,
            timestamp: None,
        }
    }

    pub fn to_value(&self) -> Value {
        let m = &self.model;
        let components: Vec<Value> = m
            .components
            .iter()
            .map(|c| match *c {
                ComponentPrior::Normal { mean, var } => json!({ "mean": mean, "var": var }),
                ComponentPrior::Beta { alpha, beta } => json!({ "alpha": alpha, "beta": beta }),
            })
            .collect();
        json!({
            "format_version": FORMAT_VERSION,
            "family": m.family.to_string(),
            "J": m.len(),
            "null_mode": m.null_mode.to_string(),
            "pi": m.weights,
            "components": components,
            "penalty": m.penalty,
            "diagnostics": {
                "penalized_loglik": m.diagnostics.penalized_loglik,
                "iterations": m.diagnostics.iterations,
                "converged": m.diagnostics.converged,
                "max_decrease": m.diagnostics.max_decrease,
            },
            "timestamp": self.timestamp,
            "seed": self.seed,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut out = String::new();
        write_canonical(&self.to_value(), 0, &mut out)?;
        out.push('\n');
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        let obj = v.as_object().ok_or_else(|| bad("document is not an object"))?;
        let version = get_u64(obj, "format_version")?;
        if version != FORMAT_VERSION {
            return Err(bad(&format!("unsupported format_version {version}")));
        }
        let family = match get_str(obj, "family")? {
            "normal" => FamilyKind::Normal,
            "binomial" => FamilyKind::Binomial,
            other => return Err(bad(&format!("unknown family `{other}`"))),
        };
        let null_mode: NullMode = get_str(obj, "null_mode")?.parse()?;
        let weights = get_f64_array(obj, "pi")?;
        let penalty = get_f64_array(obj, "penalty")?;
        let components = obj
            .get("components")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing components"))?
            .iter()
            .map(|c| {
                let c = c.as_object().ok_or_else(|| bad("component is not an object"))?;
                match family {
                    FamilyKind::Normal => Ok(ComponentPrior::Normal {
                        mean: get_f64(c, "mean")?,
                        var: get_f64(c, "var")?,
                    }),
                    FamilyKind::Binomial => Ok(ComponentPrior::Beta {
                        alpha: get_f64(c, "alpha")?,
                        beta: get_f64(c, "beta")?,
                    }),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if get_u64(obj, "J")? as usize != components.len() {
            return Err(bad("J does not match the number of components"));
        }
        let d = obj
            .get("diagnostics")
            .and_then(Value::as_object)
            .ok_or_else(|| bad("missing diagnostics"))?;
        let diagnostics = FitDiagnostics {
            penalized_loglik: get_f64(d, "penalized_loglik")?,
            iterations: get_u64(d, "iterations")? as usize,
            converged: d
                .get("converged")
                .and_then(Value::as_bool)
                .ok_or_else(|| bad("missing converged flag"))?,
            max_decrease: get_f64(d, "max_decrease")?,
        };
        let model = MixtureModel {
            family,
            weights,
            components,
            null_mode,
            penalty,
            diagnostics,
        };
        model.validate()?;
        let timestamp = match obj.get("timestamp") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(bad("timestamp must be a string or null")),
        };
        Ok(Self {
            model,
            seed: get_u64(obj, "seed")?,
            timestamp,
        })
    }
}

fn bad(msg: &str) -> Error {
    Error::Parse {
        line: 0,
        message: format!("model document: {msg}"),
    }
}

fn get_str<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a str> {
    obj.get(key).and_then(Value::as_str).ok_or_else(|| bad(&format!("missing string `{key}`")))
}

fn get_u64(obj: &Map<String, Value>, key: &str) -> Result<u64> {
    obj.get(key).and_then(Value::as_u64).ok_or_else(|| bad(&format!("missing integer `{key}`")))
}

fn get_f64(obj: &Map<String, Value>, key: &str) -> Result<f64> {
    obj.get(key).and_then(Value::as_f64).ok_or_else(|| bad(&format!("missing number `{key}`")))
}

fn get_f64_array(obj: &Map<String, Value>, key: &str) -> Result<Vec<f64>> {
    obj.get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| bad(&format!("missing array `{key}`")))?
        .iter()
        .map(|v| v.as_f64().ok_or_else(|| bad(&format!("non-numeric entry in `{key}`"))))
        .collect()
}

/// Format a float with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_canonical(v: &Value, indent: usize, out: &mut String) -> Result<()> {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else {
                let x = n.as_f64().ok_or_else(|| bad("unrepresentable number"))?;
                out.push_str(&format_float(x));
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return Ok(());
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_canonical(item, indent + 1, out)?;
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            // serde_json's default map is ordered by key
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_canonical(item, indent + 1, out)?;
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
    Ok(())
}
