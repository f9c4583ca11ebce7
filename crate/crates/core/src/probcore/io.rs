//! JSON and CSV formats for distributions and mechanisms.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Alphabet, JointDistribution, Mechanism, MechanismKind, TripleDistribution};

/// A probability written either as a JSON number or as a decimal string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Prob {
    Num(f64),
    Str(String),
}

impl Prob {
    fn value(&self) -> Result<f64> {
        match self {
            Prob::Num(v) => Ok(*v),
            Prob::Str(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("{s:?} is not a decimal number"))),
        }
    }
}

fn values(row: &[Prob]) -> Result<Vec<f64>> {
    row.iter().map(Prob::value).collect()
}

#[derive(Debug, Deserialize)]
struct DistributionIn {
    x_alphabet: Alphabet,
    y_alphabet: Alphabet,
    pmf: Vec<Vec<Prob>>,
}

#[derive(Debug, Serialize)]
struct DistributionOut<'a> {
    x_alphabet: &'a Alphabet,
    y_alphabet: &'a Alphabet,
    pmf: Vec<Vec<f64>>,
}

pub fn distribution_from_json(s: &str) -> Result<JointDistribution> {
    let d: DistributionIn = serde_json::from_str(s)?;
    let rows = d.pmf.iter().map(|r| values(r)).collect::<Result<Vec<_>>>()?;
    JointDistribution::new(d.x_alphabet, d.y_alphabet, rows)
}

pub fn distribution_to_json(j: &JointDistribution) -> String {
    let out = DistributionOut {
        x_alphabet: j.x_alphabet(),
        y_alphabet: j.y_alphabet(),
        pmf: j.rows(),
    };
    serde_json::to_string_pretty(&out).expect("serializable")
}

/// Header row holds the Y labels (first cell is a corner label and ignored);
/// each further row is an X label followed by probabilities.
pub fn distribution_from_csv(s: &str) -> Result<JointDistribution> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(s.as_bytes());
    let header = rdr.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::Parse("CSV header needs a corner cell and at least one Y label".into()));
    }
    let y = Alphabet::new(header.iter().skip(1))?;
    let mut xs = Vec::new();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut it = rec.iter();
        xs.push(it.next().unwrap_or_default().to_string());
        let row = it
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {line}: {c:?} is not a decimal number")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    JointDistribution::new(Alphabet::new(xs)?, y, rows)
}

/// Reads JSON or CSV depending on the extension (JSON when unsure).
pub fn read_distribution(path: &Path) -> Result<JointDistribution> {
    let text = std::fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => distribution_from_csv(&text),
        _ => distribution_from_json(&text),
    }
}

#[derive(Debug, Deserialize)]
struct TripleIn {
    x1_alphabet: Alphabet,
    x2_alphabet: Alphabet,
    y_alphabet: Alphabet,
    pmf: Vec<Vec<Vec<Prob>>>,
}

pub fn triple_from_json(s: &str) -> Result<TripleDistribution> {
    let d: TripleIn = serde_json::from_str(s)?;
    let mut flat = Vec::new();
    for (a, plane) in d.pmf.iter().enumerate() {
        if plane.len() != d.x2_alphabet.len() {
            return Err(Error::Validation(format!("pmf[{a}] has the wrong number of X2 rows")));
        }
        for row in plane {
            if row.len() != d.y_alphabet.len() {
                return Err(Error::Validation(format!("pmf[{a}] has a row of the wrong length")));
            }
            flat.extend(values(row)?);
        }
    }
    if d.pmf.len() != d.x1_alphabet.len() {
        return Err(Error::Validation("pmf has the wrong number of X1 planes".into()));
    }
    TripleDistribution::new(d.x1_alphabet, d.x2_alphabet, d.y_alphabet, flat)
}

/// True when the JSON document describes an (X1, X2, Y) triple.
pub fn is_triple_json(s: &str) -> bool {
    serde_json::from_str::<serde_json::Value>(s)
        .map(|v| v.get("x1_alphabet").is_some())
        .unwrap_or(false)
}

#[derive(Debug, Serialize, Deserialize)]
struct MechanismFile {
    kind: MechanismKind,
    u_alphabet: Alphabet,
    kernel: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reconstruction: Option<Vec<Vec<String>>>,
}

pub fn mechanism_to_value(m: &Mechanism, j: &JointDistribution) -> serde_json::Value {
    let nu = m.nu();
    let kernel = match m.kind() {
        MechanismKind::GivenY => serde_json::to_value(
            m.kernel().chunks(nu).map(<[f64]>::to_vec).collect::<Vec<_>>(),
        ),
        MechanismKind::GivenXY => serde_json::to_value(
            m.kernel()
                .chunks(nu * m.ny())
                .map(|plane| plane.chunks(nu).map(<[f64]>::to_vec).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        ),
    }
    .expect("serializable");
    let reconstruction = m.reconstruction().map(|_| {
        (0..nu)
            .map(|u| {
                (0..j.nx())
                    .map(|x| j.y_alphabet().label(m.reconstruct(u, x).unwrap()).to_string())
                    .collect()
            })
            .collect()
    });
    serde_json::to_value(MechanismFile {
        kind: m.kind(),
        u_alphabet: m.u_alphabet().clone(),
        kernel,
        reconstruction,
    })
    .expect("serializable")
}

pub fn mechanism_to_json(m: &Mechanism, j: &JointDistribution) -> String {
    serde_json::to_string_pretty(&mechanism_to_value(m, j)).expect("serializable")
}

/// Parses a mechanism; `j` resolves reconstruction labels and shapes.
pub fn mechanism_from_value(v: serde_json::Value, j: &JointDistribution) -> Result<Mechanism> {
    let f: MechanismFile = serde_json::from_value(v)?;
    let nu = f.u_alphabet.len();
    let (mut m, nx) = match f.kind {
        MechanismKind::GivenY => {
            let rows: Vec<Vec<Prob>> = serde_json::from_value(f.kernel)?;
            if rows.len() != j.ny() {
                return Err(Error::Usage(format!(
                    "kernel has {} rows, distribution has {} Y symbols",
                    rows.len(),
                    j.ny()
                )));
            }
            let rows = rows.iter().map(|r| values(r)).collect::<Result<Vec<_>>>()?;
            (Mechanism::given_y(f.u_alphabet, rows)?, j.nx())
        }
        MechanismKind::GivenXY => {
            let planes: Vec<Vec<Vec<Prob>>> = serde_json::from_value(f.kernel)?;
            if planes.len() != j.nx() || planes.iter().any(|p| p.len() != j.ny()) {
                return Err(Error::Usage("kernel shape does not match the distribution".into()));
            }
            let mut flat = Vec::with_capacity(j.nx() * j.ny() * nu);
            for row in planes.iter().flatten() {
                if row.len() != nu {
                    return Err(Error::Validation("kernel slice length differs from |U|".into()));
                }
                flat.extend(values(row)?);
            }
            (Mechanism::given_xy(f.u_alphabet, j.nx(), j.ny(), flat, None)?, j.nx())
        }
    };
    if let Some(rec) = f.reconstruction {
        if rec.len() != nu || rec.iter().any(|r| r.len() != nx) {
            return Err(Error::Usage("reconstruction table must be |U| rows of |X| labels".into()));
        }
        let mut table = Vec::with_capacity(nu * nx);
        for label in rec.iter().flatten() {
            table.push(j.y_alphabet().index_of(label).ok_or_else(|| {
                Error::Validation(format!("reconstruction names unknown y {label:?}"))
            })?);
        }
        m = m.with_reconstruction(table, nx)?;
    }
    Ok(m)
}

pub fn mechanism_from_json(s: &str, j: &JointDistribution) -> Result<Mechanism> {
    mechanism_from_value(serde_json::from_str(s)?, j)
}
