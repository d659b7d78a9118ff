//! The isotropic witness family `S(a)`, seeded fixtures and the threshold
//! scanner.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Dims, Operator, PureState, C64};
use crate::random::{complex_gaussian, random_isometry, rng_for};
use crate::witness::{
    classify_schmidt_witness, min_product_expectation, product_min_at_level, OptimizerConfig, Verdict,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsotropicWitnessSpec {
    pub a: f64,
    pub d: usize,
}

impl IsotropicWitnessSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.a) {
            return Err(Error::param(format!("a must lie in [0, 1), got {}", self.a)));
        }
        if self.d < 2 {
            return Err(Error::param(format!("d must be at least 2, got {}", self.d)));
        }
        Ok(())
    }
}

/// `S(a) = (𝟙/d² − a P_ψ) / (1 − a)` with `ψ` maximally entangled.
pub fn make_isotropic_witness(spec: &IsotropicWitnessSpec) -> Result<Operator> {
    spec.validate()?;
    let d = spec.d;
    let n = d * d;
    let scale = 1.0 / (1.0 - spec.a);
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::from(scale / n as f64);
    }
    let p = spec.a * scale / d as f64;
    for i in 0..d {
        for j in 0..d {
            m[(i * d + i, j * d + j)] -= C64::from(p);
        }
    }
    Operator::hermitian(Dims::new(d, d)?, m)
}

/// `(1/√d) Σ_i |ii⟩`.
pub fn maximally_entangled_state(d: usize) -> Result<PureState> {
    if d < 2 {
        return Err(Error::param(format!("d must be at least 2, got {d}")));
    }
    let mut v = DVector::<C64>::zeros(d * d);
    let c = C64::from(1.0 / (d as f64).sqrt());
    for i in 0..d {
        v[i * d + i] = c;
    }
    PureState::from_vector(Dims::new(d, d)?, v)
}

/// Normalized state with Schmidt rank exactly `rank` across the party split.
/// Coefficients are drawn from `[0.2, 1]` before normalization, local bases
/// from random isometries.
pub fn random_pure_state(dims: Dims, rank: usize, seed: u64) -> Result<PureState> {
    let (n_a, n_b) = (dims.local_a(), dims.local_b());
    if rank == 0 || rank > n_a.min(n_b) {
        return Err(Error::param(format!("rank must lie in 1..={}, got {rank}", n_a.min(n_b))));
    }
    let mut rng = rng_for(seed, 0);
    let mut coeffs: Vec<f64> = (0..rank).map(|_| rng.random_range(0.2..=1.0)).collect();
    coeffs.sort_by(|x, y| y.total_cmp(x));
    let u = random_isometry(&mut rng, n_a, rank);
    let v = random_isometry(&mut rng, n_b, rank);
    let mut amps = DVector::<C64>::zeros(n_a * n_b);
    for (r, c) in coeffs.iter().enumerate() {
        let term = u.column(r).kronecker(&v.column(r)) * C64::from(*c);
        amps += term;
    }
    PureState::from_vector(dims, amps)?.into_normalized()
}

/// Hermitian operator with complex Gaussian entries, shifted to unit trace.
pub fn random_hermitian(dims: Dims, seed: u64) -> Operator {
    let n = dims.total();
    let mut rng = rng_for(seed, 1);
    let scale = 1.0 / n as f64;
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        let x: f64 = rng.sample(rand_distr::StandardNormal);
        m[(i, i)] = C64::from(x * scale);
        for j in (i + 1)..n {
            let z = complex_gaussian(&mut rng) * scale;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    let shift = (1.0 - m.trace().re) / n as f64;
    for i in 0..n {
        m[(i, i)] += C64::from(shift);
    }
    Operator::hermitian(dims, m).expect("symmetric by construction")
}

/// `(1−a)·min_e λ_min(⟨e|S(a)|e⟩)` over unit `e` on party A, which is the
/// product-state minimum of the unnormalized family member.
pub fn product_floor(a: f64, d: usize, config: &OptimizerConfig) -> Result<f64> {
    let s = make_isotropic_witness(&IsotropicWitnessSpec { a, d })?;
    Ok((1.0 - a) * min_product_expectation(&s, config)?.value)
}

/// Bisects a sign change of `f` on `[lo, hi]` down to width `tol` and
/// returns the midpoint. `f(lo)` and `f(hi)` must have opposite signs.
pub fn bisect_sign_change<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) || tol.is_nan() || tol <= 0.0 {
        return Err(Error::param(format!("bad bracket [{lo}, {hi}] or tolerance {tol}")));
    }
    let (mut lo, mut hi) = (lo, hi);
    let lo_neg = f(lo)? < 0.0;
    if lo_neg == (f(hi)? < 0.0) {
        return Err(Error::param(format!("no sign change on [{lo}, {hi}]")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if (f(mid)? < 0.0) == lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScanOptions {
    pub d: usize,
    /// Highest lifting level tried by the classifier; defaults to `d`.
    pub max_k: Option<usize>,
    /// Levels whose product minima are recorded on every row.
    pub levels: Vec<usize>,
    /// Bisect every verdict change to this width when set.
    pub bisect_tol: Option<f64>,
}

impl ScanOptions {
    pub fn new(d: usize) -> Self {
        ScanOptions { d, max_k: None, levels: vec![1, 2], bisect_tol: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScanRow {
    pub a: f64,
    pub verdict: Option<Verdict>,
    pub min_eigenvalue: Option<f64>,
    pub product_min: BTreeMap<usize, f64>,
    pub restarts: usize,
    pub converged: bool,
    pub error: Option<String>,
}

/// Verdict change between two parameter values. Points up to `a_low` carry
/// `lower`, points from `a_high` on carry `upper`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Boundary {
    pub lower: Verdict,
    pub upper: Verdict,
    pub a_low: f64,
    pub a_high: f64,
}

impl Boundary {
    pub fn estimate(&self) -> f64 {
        0.5 * (self.a_low + self.a_high)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScanTable {
    pub d: usize,
    pub levels: Vec<usize>,
    pub rows: Vec<ScanRow>,
    pub boundaries: Vec<Boundary>,
}

fn scan_row(a: f64, opts: &ScanOptions, max_k: usize, config: &OptimizerConfig) -> ScanRow {
    let mut row = ScanRow {
        a,
        verdict: None,
        min_eigenvalue: None,
        product_min: BTreeMap::new(),
        restarts: config.restarts,
        converged: false,
        error: None,
    };
    let mut run = || -> Result<()> {
        let s = make_isotropic_witness(&IsotropicWitnessSpec { a, d: opts.d })?;
        let class = classify_schmidt_witness(&s, max_k, config)?;
        row.verdict = Some(class.verdict);
        row.min_eigenvalue = Some(class.min_eigenvalue);
        let mut converged = true;
        for &l in &opts.levels {
            let (value, conv) = match class.levels.get(&l) {
                Some(ev) => (ev.product_min, ev.converged),
                None => {
                    let r = product_min_at_level(&s, l, config)?;
                    (r.value, r.converged)
                }
            };
            converged &= conv;
            row.product_min.insert(l, value);
        }
        row.converged = converged;
        Ok(())
    };
    if let Err(e) = run() {
        row.error = Some(e.to_string());
    }
    row
}

fn verdict_at(a: f64, d: usize, max_k: usize, config: &OptimizerConfig) -> Result<Verdict> {
    let s = make_isotropic_witness(&IsotropicWitnessSpec { a, d })?;
    Ok(classify_schmidt_witness(&s, max_k, config)?.verdict)
}

/// Classifies `S(a)` on every grid point, records the requested level minima
/// and optionally bisects each verdict change.
pub fn threshold_scan(grid: &[f64], opts: &ScanOptions, config: &OptimizerConfig) -> Result<ScanTable> {
    config.validate()?;
    if grid.is_empty() {
        return Err(Error::param("empty parameter grid"));
    }
    if let Some(a) = grid.iter().find(|a| !(0.0..1.0).contains(*a)) {
        return Err(Error::param(format!("grid value {a} outside [0, 1)")));
    }
    if opts.d < 2 {
        return Err(Error::param("d must be at least 2"));
    }
    let max_k = opts.max_k.unwrap_or(opts.d);
    if max_k == 0 || max_k > opts.d {
        return Err(Error::param(format!("maxK must lie in 1..={}", opts.d)));
    }
    if let Some(l) = opts.levels.iter().find(|&&l| l == 0 || l > opts.d) {
        return Err(Error::param(format!("level {l} outside 1..={}", opts.d)));
    }
    if let Some(t) = opts.bisect_tol {
        if t.is_nan() || t <= 0.0 {
            return Err(Error::param("bisection tolerance must be positive"));
        }
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let rows: Vec<ScanRow> = sorted.par_iter().map(|&a| scan_row(a, opts, max_k, config)).collect();

    let mut boundaries = Vec::new();
    for pair in rows.windows(2) {
        let (Some(lower), Some(upper)) = (pair[0].verdict, pair[1].verdict) else { continue };
        if lower == upper {
            continue;
        }
        let (mut lo, mut hi) = (pair[0].a, pair[1].a);
        if let Some(tol) = opts.bisect_tol {
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if verdict_at(mid, opts.d, max_k, config)? == lower {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        boundaries.push(Boundary { lower, upper, a_low: lo, a_high: hi });
    }
    Ok(ScanTable { d: opts.d, levels: opts.levels.clone(), rows, boundaries })
}

impl ScanTable {
    /// CSV with columns `a, verdict, k, min_eig, prodmin_l1, prodmin_l2,
    /// restarts, converged`, one extra `prodmin_l<n>` column per further
    /// recorded level. Failed rows carry `failed` as verdict.
    pub fn to_csv(&self) -> String {
        let mut levels = vec![1, 2];
        for &l in &self.levels {
            if !levels.contains(&l) {
                levels.push(l);
            }
        }
        let mut out = String::from("a,verdict,k,min_eig");
        for l in &levels {
            let _ = write!(out, ",prodmin_l{l}");
        }
        out.push_str(",restarts,converged\n");
        for row in &self.rows {
            let verdict = row.verdict.map_or("failed".to_string(), |v| v.label());
            let k = row.verdict.and_then(|v| v.k()).map_or(String::new(), |k| k.to_string());
            let _ = write!(out, "{:.6},{verdict},{k},{}", row.a, fmt_opt(row.min_eigenvalue));
            for l in &levels {
                let _ = write!(out, ",{}", fmt_opt(row.product_min.get(l).copied()));
            }
            let _ = writeln!(out, ",{},{}", row.restarts, row.converged);
        }
        out
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), fmt_value)
}

/// Fixed-width scientific notation; values within `1e-13` of zero print as
/// zero so sub-roundoff noise cannot flip the text.
pub fn fmt_value(v: f64) -> String {
    if v.abs() < 1e-13 {
        "0.000000000e0".to_string()
    } else {
        format!("{v:.9e}")
    }
}
