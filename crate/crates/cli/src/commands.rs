use std::path::Path;

use schmidt_core::families::{bisect_sign_change, fmt_value, product_floor as floor_at};
use schmidt_core::verify::{run_suite, Suite};
use schmidt_core::{
    classify_schmidt_witness, lift_operator, lift_state, lower_state, make_isotropic_witness, threshold_scan, Dims,
    IsotropicWitnessSpec, Operator, OptimizerConfig, ScanOptions,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::io::{emit, operator_json, read_object, read_operator, read_state, state_json, to_pretty, Object};
use crate::{ClassifyArgs, CliError, Family, FloorArgs, Format, LiftArgs, LowerArgs, ScanArgs, VerifyArgs};

/// Machine-readable record of one command invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub inputs: Value,
    pub result: Value,
    pub diagnostics: Value,
}

impl Report {
    fn new(command: &str, args: &impl Serialize, config: Option<&OptimizerConfig>, result: Value, diagnostics: Value) -> Self {
        let mut inputs = serde_json::to_value(args).expect("arguments serialize");
        if let (Some(cfg), Value::Object(map)) = (config, &mut inputs) {
            map.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
        }
        Report {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            inputs,
            result,
            diagnostics,
        }
    }

    fn write(&self, path: Option<&Path>) -> Result<(), CliError> {
        emit(path, &to_pretty(self))
    }
}

fn family_operator(family: Family, a: f64, d: usize) -> Result<Operator, CliError> {
    match family {
        Family::Isotropic => Ok(make_isotropic_witness(&IsotropicWitnessSpec { a, d })?),
    }
}

pub fn classify(args: &ClassifyArgs) -> Result<(), CliError> {
    let config = args.optimizer.config();
    let op = match (&args.input, args.family) {
        (Some(path), _) => read_operator(path)?,
        (None, Some(family)) => {
            let a = args.a.ok_or_else(|| CliError::input("--a is required with --family"))?;
            family_operator(family, a, args.dim)?
        }
        (None, None) => return Err(CliError::input("either --input or --family is required")),
    };
    let dims = op.dims();
    let max_k = args.max_k.unwrap_or(dims.d_a().min(dims.d_b()));
    let class = classify_schmidt_witness(&op, max_k, &config)?;

    let levels: Vec<Value> = class
        .levels
        .values()
        .map(|e| json!({ "level": e.level, "productMin": e.product_min, "converged": e.converged, "restarts": e.restarts }))
        .collect();
    let traces: Vec<Value> = class
        .levels
        .values()
        .map(|e| json!({ "level": e.level, "iterations": e.iterations, "trace": e.trace }))
        .collect();
    let result = json!({
        "verdict": class.verdict,
        "label": class.verdict.label(),
        "k": class.k(),
        "minEigenvalue": class.min_eigenvalue,
        "maxK": max_k,
        "levels": levels,
        "detectedState": class.detected_state.as_ref().map(state_json),
        "detectedValue": class.detected_value,
        "detectedRank": class.detected_rank,
        "enlargedRank": class.enlarged_rank,
    });
    let report = Report::new("classify", args, Some(&config), result, json!({ "levels": traces }));
    report.write(args.output.as_deref())
}

fn linear_grid(from: f64, to: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if steps == 0 {
        return Err(CliError::input("--steps must be at least 1"));
    }
    if !from.is_finite() || !to.is_finite() || to < from {
        return Err(CliError::input(format!("invalid range [{from}, {to}]")));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    let h = (to - from) / (steps - 1) as f64;
    Ok((0..steps).map(|i| if i + 1 == steps { to } else { from + h * i as f64 }).collect())
}

pub fn scan(args: &ScanArgs) -> Result<(), CliError> {
    let config = args.optimizer.config();
    let grid = linear_grid(args.a_from, args.a_to, args.steps)?;
    let Family::Isotropic = args.family;
    let opts = ScanOptions { d: args.dim, max_k: args.max_k, levels: args.levels.clone(), bisect_tol: args.bisect };
    let table = threshold_scan(&grid, &opts, &config)?;
    let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
    let boundaries: Vec<Value> = table
        .boundaries
        .iter()
        .map(|b| {
            json!({
                "lower": b.lower.label(),
                "upper": b.upper.label(),
                "aLow": b.a_low,
                "aHigh": b.a_high,
                "estimate": b.estimate(),
            })
        })
        .collect();
    let result = json!({ "table": table, "boundaries": boundaries });
    let report = Report::new("scan", args, Some(&config), result, json!({ "failedRows": failed }));
    match args.format {
        Format::Csv => {
            emit(args.output.as_deref(), &table.to_csv())?;
            if let Some(path) = &args.report {
                report.write(Some(path))?;
            }
            Ok(())
        }
        Format::Json => {
            report.write(args.output.as_deref())?;
            if let Some(path) = &args.report {
                report.write(Some(path))?;
            }
            Ok(())
        }
    }
}

pub fn lift(args: &LiftArgs) -> Result<(), CliError> {
    let (object, result) = match read_object(&args.input)? {
        Object::State(psi) => {
            let lifted = lift_state(&psi, args.k)?;
            let object = state_json(&lifted.state);
            let result = json!({
                "kind": "state",
                "k": args.k,
                "sourceRank": lifted.source_rank,
                "blockCount": lifted.block_count,
                "normSquared": lifted.state.norm_sqr(),
                "object": object,
            });
            (object, result)
        }
        Object::Operator(op) => {
            let lifted = lift_operator(&op, args.k)?.operator;
            let object = operator_json(&lifted);
            let trace = lifted.trace();
            let result = json!({
                "kind": "operator",
                "k": args.k,
                "trace": trace.re,
                "traceImag": trace.im,
                "object": object,
            });
            (object, result)
        }
    };
    if let Some(path) = &args.output {
        emit(Some(path), &to_pretty(&object))?;
    }
    Report::new("lift", args, None, result, json!({})).write(args.report.as_deref())
}

pub fn lower(args: &LowerArgs) -> Result<(), CliError> {
    let psi = read_state(&args.input)?;
    let dims = psi.dims();
    if dims.k_a() != args.k || dims.k_b() != args.k {
        return Err(CliError::input(format!("ancilla dimensions of {dims} do not match k = {}", args.k)));
    }
    let lowered = lower_state(&psi, args.k)?;
    let object = state_json(&lowered);
    if let Some(path) = &args.output {
        emit(Some(path), &to_pretty(&object))?;
    }
    let rank = if lowered.norm_sqr() > 0.0 { Some(lowered.schmidt_rank(1e-8)?) } else { None };
    let result = json!({
        "k": args.k,
        "schmidtRank": rank,
        "normSquared": lowered.norm_sqr(),
        "object": object,
    });
    Report::new("lower", args, None, result, json!({})).write(args.report.as_deref())
}

fn parse_dims(text: &str) -> Result<Dims, CliError> {
    let bad = || CliError::input(format!("--dims expects AxB, got '{text}'"));
    let (a, b) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    Ok(Dims::new(a, b)?)
}

pub fn verify(args: &VerifyArgs) -> Result<(), CliError> {
    let suite: Suite = args.suite.parse()?;
    let config = args.optimizer.config();
    let dims = args.dims.as_deref().map(parse_dims).transpose()?;
    let rep = run_suite(suite, args.trials, config.seed, dims, &config)?;
    let result = json!({
        "suite": rep.suite,
        "trials": rep.trials,
        "tolerance": rep.tolerance,
        "maxError": rep.max_error,
        "passed": rep.passed,
    });
    let report = Report::new("verify", args, Some(&config), result, json!({ "errors": rep.errors }));
    report.write(args.output.as_deref())?;
    if rep.passed {
        Ok(())
    } else {
        Err(CliError::numerical(format!(
            "suite {} exceeded tolerance {:e}: max error {:e}",
            suite.name(),
            rep.tolerance,
            rep.max_error
        )))
    }
}

pub fn product_floor(args: &FloorArgs) -> Result<(), CliError> {
    let config = args.optimizer.config();
    config.validate()?;
    let grid = linear_grid(args.a_from, args.a_to, args.steps)?;
    let d = args.dim;
    let floors = grid.iter().map(|&a| floor_at(a, d, &config)).collect::<Result<Vec<f64>, _>>()?;
    let closed = |a: f64| 1.0 / (d * d) as f64 - a / d as f64;

    let bracket = grid.windows(2).zip(floors.windows(2)).find(|(_, f)| (f[0] < 0.0) != (f[1] < 0.0));
    let crossing = match bracket {
        Some((g, _)) => Some(bisect_sign_change(|a| floor_at(a, d, &config), g[0], g[1], args.bisect)?),
        None => None,
    };

    if args.format == Format::Csv {
        let mut csv = String::from("a,floor,closed_form\n");
        for (a, f) in grid.iter().zip(&floors) {
            csv.push_str(&format!("{a:.6},{},{}\n", fmt_value(*f), fmt_value(closed(*a))));
        }
        return emit(args.output.as_deref(), &csv);
    }
    let rows: Vec<Value> = grid
        .iter()
        .zip(&floors)
        .map(|(a, f)| json!({ "a": a, "floor": f, "closedForm": closed(*a), "error": (f - closed(*a)).abs() }))
        .collect();
    let max_error = rows.iter().filter_map(|r| r["error"].as_f64()).fold(0.0, f64::max);
    let result = json!({ "rows": rows, "maxError": max_error, "crossing": crossing });
    Report::new("product-floor", args, Some(&config), result, json!({})).write(args.output.as_deref())
}
