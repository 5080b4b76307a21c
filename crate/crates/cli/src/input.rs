use std::collections::BTreeMap;
use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use pdfa_core::lang::{parse_labelled, Label, Program};
use pdfa_core::linalg::ProbVector;
use pdfa_core::semantics::StateSpace;
use serde_json::Value;

use crate::error::CliError;

/// Total mass a distribution file may be off by before it is rejected.
pub const MASS_TOL: f64 = 1e-6;

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => CliError::NoSuchFile(path.display().to_string()),
        _ => CliError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        },
    })
}

pub fn load_program(path: &Path) -> Result<Program, CliError> {
    let text = read_file(path)?;
    parse_labelled(&text).map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Read {
        path: path.display().to_string(),
        message: format!("invalid JSON: {e}"),
    })
}

/// Reads an input distribution: the literal `uniform`, or a JSON file
/// holding a list of `{"state": {"x": 0, ...}, "p": 0.5}` entries. Every
/// listed state must assign each declared variable a value in range;
/// unlisted states get probability 0. The result is normalised.
pub fn load_distribution(spec: &str, ss: &StateSpace) -> Result<ProbVector, CliError> {
    if spec == "uniform" {
        return Ok(ss.uniform());
    }
    let path = Path::new(spec);
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let value = read_json(path)?;
    let items = value
        .as_array()
        .ok_or_else(|| bad("expected a list of {state, p} entries".into()))?;
    let decls = ss.decls();
    let mut rho = vec![0.0; ss.len()];
    let mut seen = vec![false; ss.len()];
    for (n, item) in items.iter().enumerate() {
        let state = item
            .get("state")
            .and_then(Value::as_object)
            .ok_or_else(|| bad(format!("entry {n}: missing `state` object")))?;
        let p = item
            .get("p")
            .and_then(Value::as_f64)
            .ok_or_else(|| bad(format!("entry {n}: missing numeric `p`")))?;
        if !(0.0..=1.0 + MASS_TOL).contains(&p) {
            return Err(bad(format!("entry {n}: probability {p} outside [0, 1]")));
        }
        for name in state.keys() {
            if decls.lookup(name).is_none() {
                return Err(bad(format!("entry {n}: unknown variable `{name}`")));
            }
        }
        let mut tuple = Vec::with_capacity(decls.len());
        for (_, d) in decls.iter() {
            let v = state
                .get(&d.name)
                .and_then(Value::as_i64)
                .ok_or_else(|| bad(format!("entry {n}: no integer value for `{}`", d.name)))?;
            if v < 0 || v as usize >= d.size {
                return Err(bad(format!(
                    "entry {n}: value {v} of `{}` outside 0..{}",
                    d.name,
                    d.size - 1
                )));
            }
            tuple.push(v);
        }
        let i = ss.index(&tuple);
        if std::mem::replace(&mut seen[i], true) {
            return Err(bad(format!("entry {n}: state listed twice")));
        }
        rho[i] = p;
    }
    let mass: f64 = rho.iter().sum();
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(bad(format!("total probability {mass} is not 1")));
    }
    Ok(ProbVector::new(rho.into_iter().map(|p| p / mass).collect()))
}

/// Reads user-given branch probabilities: a JSON object mapping each test
/// label to the probability of its true branch, e.g. `{"4": 0.25}`.
pub fn load_static_probs(path: &Path) -> Result<BTreeMap<Label, f64>, CliError> {
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let value = read_json(path)?;
    let obj = value
        .as_object()
        .ok_or_else(|| bad("expected an object mapping test labels to probabilities".into()))?;
    obj.iter()
        .map(|(k, v)| {
            let label = k.parse::<u32>().map_err(|_| bad(format!("`{k}` is not a label")))?;
            let p = v
                .as_f64()
                .ok_or_else(|| bad(format!("probability for label {k} is not a number")))?;
            Ok((Label(label), p))
        })
        .collect()
}
