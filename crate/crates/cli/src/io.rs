//! JSON wire formats for states and operators.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use schmidt_core::{Dims, Operator, PureState, C64};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    pub dims: Dims,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dims: Dims,
    pub amplitudes: Vec<[f64; 2]>,
}

pub enum Object {
    State(PureState),
    Operator(Operator),
}

fn pair(z: &C64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn operator_to_file(op: &Operator) -> OperatorFile {
    let m = op.matrix();
    OperatorFile {
        dims: op.dims(),
        matrix: (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| pair(&m[(r, c)])).collect()).collect(),
    }
}

pub fn state_to_file(psi: &PureState) -> StateFile {
    StateFile { dims: psi.dims(), amplitudes: psi.amplitudes().iter().map(pair).collect() }
}

pub fn operator_json(op: &Operator) -> Value {
    serde_json::to_value(operator_to_file(op)).expect("plain data serializes")
}

pub fn state_json(psi: &PureState) -> Value {
    serde_json::to_value(state_to_file(psi)).expect("plain data serializes")
}

fn operator_from_file(f: OperatorFile) -> Result<Operator, CliError> {
    let n = f.dims.total();
    if f.matrix.len() != n || f.matrix.iter().any(|row| row.len() != n) {
        return Err(CliError::input(format!("field `matrix` must be {n}x{n} for dims {}", f.dims)));
    }
    let m = DMatrix::from_fn(n, n, |r, c| C64::new(f.matrix[r][c][0], f.matrix[r][c][1]));
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CliError::input("field `matrix` contains a non-finite entry"));
    }
    Ok(Operator::new(f.dims, m)?)
}

fn state_from_file(f: StateFile) -> Result<PureState, CliError> {
    let n = f.dims.total();
    if f.amplitudes.len() != n {
        return Err(CliError::input(format!(
            "field `amplitudes` has {} entries, dims {} need {n}",
            f.amplitudes.len(),
            f.dims
        )));
    }
    let v = DVector::from_iterator(n, f.amplitudes.iter().map(|p| C64::new(p[0], p[1])));
    Ok(PureState::from_vector(f.dims, v)?)
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: malformed JSON: {e}", path.display())))
}

/// Reads a state (`amplitudes`) or operator (`matrix`) file.
pub fn read_object(path: &Path) -> Result<Object, CliError> {
    let value = read_json(path)?;
    let ctx = |e: serde_json::Error| CliError::input(format!("{}: {e}", path.display()));
    match &value {
        Value::Object(map) if map.contains_key("matrix") => {
            Ok(Object::Operator(operator_from_file(serde_json::from_value(value).map_err(ctx)?)?))
        }
        Value::Object(map) if map.contains_key("amplitudes") => {
            Ok(Object::State(state_from_file(serde_json::from_value(value).map_err(ctx)?)?))
        }
        _ => Err(CliError::input(format!("{}: expected field `matrix` or `amplitudes`", path.display()))),
    }
}

pub fn read_operator(path: &Path) -> Result<Operator, CliError> {
    match read_object(path)? {
        Object::Operator(op) => Ok(op),
        Object::State(_) => Err(CliError::input(format!("{}: expected an operator (field `matrix`)", path.display()))),
    }
}

pub fn read_state(path: &Path) -> Result<PureState, CliError> {
    match read_object(path)? {
        Object::State(psi) => Ok(psi),
        Object::Operator(_) => Err(CliError::input(format!("{}: expected a state (field `amplitudes`)", path.display()))),
    }
}

pub fn to_pretty(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Writes to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
