//! Case-level CSV input: `id,z[,s2]` for the normal family, `id,H,N` for the
//! binomial family.

use std::path::Path;

use ebmix::{Error, FamilyKind, Observation};

use crate::error::{usage, CliResult};

#[derive(Debug, Clone)]
pub struct Cases {
    pub ids: Vec<String>,
    pub observations: Vec<Observation>,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Detects the family from the header.
fn header_family(headers: &csv::StringRecord) -> Option<(FamilyKind, Vec<usize>)> {
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id = find("id")?;
    if let Some(z) = find("z") {
        let mut cols = vec![id, z];
        if let Some(s2) = find("s2") {
            cols.push(s2);
        }
        return Some((FamilyKind::Normal, cols));
    }
    Some((FamilyKind::Binomial, vec![id, find("H")?, find("N")?]))
}

pub fn read_cases(path: &Path, expected: Option<FamilyKind>) -> CliResult<Cases> {
    let file = std::fs::File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(file);
    let headers = reader.headers().map_err(|e| parse_error(1, e.to_string()))?.clone();
    let (family, cols) = header_family(&headers)
        .ok_or_else(|| parse_error(1, "header must be `id,z[,s2]` or `id,H,N`"))?;
    if let Some(want) = expected {
        if want != family {
            return Err(usage(format!("input holds {family} data but {want} was expected")));
        }
    }
    let mut ids = Vec::new();
    let mut observations = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| parse_error(line, e.to_string()))?;
        let field = |k: usize| -> Result<&str, Error> {
            record.get(cols[k]).ok_or_else(|| parse_error(line, format!("missing column {}", headers[cols[k]].trim())))
        };
        let number = |k: usize| -> Result<f64, Error> {
            let text = field(k)?;
            text.parse::<f64>().map_err(|_| parse_error(line, format!("`{text}` is not a number")))
        };
        let count = |k: usize| -> Result<u64, Error> {
            let text = field(k)?;
            text.parse::<u64>().map_err(|_| parse_error(line, format!("`{text}` is not a nonnegative integer")))
        };
        let obs = match family {
            FamilyKind::Normal => {
                let z = number(1)?;
                let s2 = if cols.len() > 2 && !field(2)?.is_empty() { number(2)? } else { 1.0 };
                Observation::normal_with_variance(z, s2)
            }
            FamilyKind::Binomial => Observation::binomial(count(1)?, count(2)?),
        }
        .map_err(|e| parse_error(line, e.to_string()))?;
        ids.push(field(0)?.to_string());
        observations.push(obs);
    }
    Ok(Cases { ids, observations })
}
