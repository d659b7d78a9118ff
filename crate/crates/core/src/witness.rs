//! Witness predicates and Schmidt-number classification.
//!
//! Positivity on product states is checked by see-saw minimization: with one
//! factor fixed, the best partner is the minimal eigenvector of the partial
//! expectation, so every half-step is an exact eigenproblem and the objective
//! never increases. A Schmidt-number question for `S` at level `l` becomes a
//! product-state question for the lifted operator `𝕊_l`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{lift_operator, lift_state, lower_product_state, lower_state};
use crate::error::{Error, Result};
use crate::families::random_pure_state;
use crate::linalg;
use crate::hilbert::{
    hermitize, min_eigenpair_of, partial_expectation_matrix, Operator, PureState, Side, C64,
};
use crate::random::{random_unit_vector, rng_for};

/// Knobs for the randomized product-state optimizers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
    pub convergence_tol: f64,
    pub positivity_tol: f64,
    pub zero_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            seed: 0,
            restarts: 64,
            max_iters: 500,
            convergence_tol: 1e-10,
            positivity_tol: 1e-7,
            zero_tol: 1e-8,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::param("restarts must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("maxIters must be at least 1"));
        }
        for (name, v) in [
            ("convergenceTol", self.convergence_tol),
            ("positivityTol", self.positivity_tol),
            ("zeroTol", self.zero_tol),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::param(format!("{name} must be a positive number, got {v}")));
            }
        }
        Ok(())
    }
}

/// One see-saw run from a random start.
#[derive(Clone, Debug)]
pub struct RestartOutcome {
    pub value: f64,
    pub a: DVector<C64>,
    pub b: DVector<C64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every half-step, starting with the first B update.
    pub history: Vec<f64>,
}

/// Best product state found for `min ⟨A,B|W|A,B⟩` over unit `|A⟩, |B⟩`.
#[derive(Clone, Debug)]
pub struct ProductMinResult {
    pub value: f64,
    pub arg_a: PureState,
    pub arg_b: PureState,
    pub restarts_used: usize,
    /// Whether the winning restart met the convergence tolerance.
    pub converged: bool,
    pub iterations: usize,
    /// Best value of each restart, by restart index.
    pub trace: Vec<f64>,
}

fn see_saw_restart(
    m: &DMatrix<C64>,
    n_a: usize,
    n_b: usize,
    config: &OptimizerConfig,
    index: usize,
) -> Result<RestartOutcome> {
    let mut rng = rng_for(config.seed, index as u64);
    let mut a = random_unit_vector(&mut rng, n_a);
    let half_step = |fixed: &DVector<C64>, side: Side| {
        min_eigenpair_of(&hermitize(partial_expectation_matrix(m, n_a, n_b, fixed, side)))
    };
    let (mut value, mut b) = half_step(&a, Side::A)?;
    let mut history = vec![value];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iters {
        iterations += 1;
        let (va, new_a) = half_step(&b, Side::B)?;
        a = new_a;
        history.push(va);
        let (vb, new_b) = half_step(&a, Side::A)?;
        b = new_b;
        history.push(vb);
        let improvement = value - vb;
        value = vb;
        if improvement < config.convergence_tol {
            converged = true;
            break;
        }
    }
    let ab = a.kronecker(&b);
    let exact = ab.dotc(&(m * &ab)).re;
    Ok(RestartOutcome { value: exact, a, b, iterations, converged, history })
}

/// Runs every restart of the see-saw and returns them in restart order.
/// Restart `i` draws from stream `i` of `config.seed`, so the output does not
/// depend on how the restarts are scheduled.
pub fn see_saw_restarts(w: &Operator, config: &OptimizerConfig) -> Result<Vec<RestartOutcome>> {
    config.validate()?;
    w.require_hermitian()?;
    let (n_a, n_b) = (w.dims().local_a(), w.dims().local_b());
    let m = w.matrix();
    (0..config.restarts)
        .into_par_iter()
        .map(|i| see_saw_restart(m, n_a, n_b, config, i))
        .collect()
}

/// Minimum of `⟨A,B|W|A,B⟩` over unit product states, by see-saw with
/// restarts. The result is an upper bound on the true infimum.
pub fn min_product_expectation(w: &Operator, config: &OptimizerConfig) -> Result<ProductMinResult> {
    let runs = see_saw_restarts(w, config)?;
    let trace: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let (best_idx, _) = trace
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .ok_or_else(|| Error::param("no restarts"))?;
    let best = &runs[best_idx];
    if !best.value.is_finite() {
        return Err(Error::Numerical("see-saw produced a non-finite value".into()));
    }
    let dims = w.dims();
    Ok(ProductMinResult {
        value: best.value,
        arg_a: PureState::from_vector(dims.factor_a(), best.a.clone())?,
        arg_b: PureState::from_vector(dims.factor_b(), best.b.clone())?,
        restarts_used: runs.len(),
        converged: best.converged,
        iterations: best.iterations,
        trace,
    })
}

/// Outcome of the entanglement-witness test.
#[derive(Clone, Debug)]
pub struct WitnessCheck {
    pub is_witness: bool,
    pub min_eigenvalue: f64,
    pub product_min: ProductMinResult,
    /// Minimal eigenvector of `W`, reported when it is detected.
    pub detected_state: Option<PureState>,
    pub trace: f64,
}

/// `W` is an entanglement witness when it is non-negative on product states
/// but has a negative eigenvalue.
pub fn is_entanglement_witness(w: &Operator, config: &OptimizerConfig) -> Result<WitnessCheck> {
    w.require_hermitian()?;
    let (min_eigenvalue, eigvec) = w.min_eigenpair()?;
    let product_min = min_product_expectation(w, config)?;
    let negative = min_eigenvalue < -config.positivity_tol;
    let is_witness = product_min.value >= -config.positivity_tol && negative;
    Ok(WitnessCheck {
        is_witness,
        min_eigenvalue,
        product_min,
        detected_state: negative.then_some(eigvec),
        trace: w.trace().re,
    })
}

/// Classification verdict for an operator on `H_A ⊗ H_B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Verdict {
    /// Positive semidefinite; detects nothing.
    PositiveOperator,
    /// Negative on some product state, so not a witness for any class.
    NotAWitness,
    /// Non-negative on Schmidt rank `< k`, negative on some rank-`k` state.
    SchmidtWitness { k: usize },
}

impl Verdict {
    pub fn label(&self) -> String {
        match self {
            Verdict::PositiveOperator => "positive".into(),
            Verdict::NotAWitness => "not-a-witness".into(),
            Verdict::SchmidtWitness { k } => format!("{k}-SW"),
        }
    }

    pub fn k(&self) -> Option<usize> {
        match self {
            Verdict::SchmidtWitness { k } => Some(*k),
            _ => None,
        }
    }
}

/// Product-state minimum of `𝕊_l` for one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LevelEvidence {
    pub level: usize,
    pub product_min: f64,
    pub converged: bool,
    pub restarts: usize,
    pub iterations: usize,
    /// Final value of every restart, by restart index.
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct WitnessClassification {
    pub verdict: Verdict,
    pub min_eigenvalue: f64,
    pub levels: BTreeMap<usize, LevelEvidence>,
    /// Normalized state of Schmidt rank at most `k` with negative expectation.
    pub detected_state: Option<PureState>,
    pub detected_value: Option<f64>,
    pub detected_rank: Option<usize>,
    /// Schmidt rank, in the level `k−1` enlarged space, of the lifted
    /// detected state.
    pub enlarged_rank: Option<usize>,
}

impl WitnessClassification {
    pub fn k(&self) -> Option<usize> {
        self.verdict.k()
    }

    pub fn per_level_product_min(&self) -> BTreeMap<usize, f64> {
        self.levels.iter().map(|(l, e)| (*l, e.product_min)).collect()
    }
}

/// Product-state minimum of `lift_operator(s, level)`.
pub fn product_min_at_level(s: &Operator, level: usize, config: &OptimizerConfig) -> Result<ProductMinResult> {
    let lifted = lift_operator(s, level)?;
    min_product_expectation(&lifted.operator, config)
}

/// Finds the Schmidt class detected by `s`.
///
/// Levels `l = 1, 2, …, max_k` are scanned in order; the first level whose
/// lifted operator goes negative on product states is the witness class `k`.
pub fn classify_schmidt_witness(
    s: &Operator,
    max_k: usize,
    config: &OptimizerConfig,
) -> Result<WitnessClassification> {
    config.validate()?;
    s.require_hermitian()?;
    let dims = s.dims();
    if !dims.is_base() {
        return Err(Error::dims(format!("classification expects an unextended operator, got {dims}")));
    }
    let max_local = dims.d_a().min(dims.d_b());
    if max_k == 0 || max_k > max_local {
        return Err(Error::param(format!("maxK must lie in 1..={max_local}, got {max_k}")));
    }
    let tol = config.positivity_tol;
    let (min_eigenvalue, _) = s.min_eigenpair()?;
    let mut out = WitnessClassification {
        verdict: Verdict::PositiveOperator,
        min_eigenvalue,
        levels: BTreeMap::new(),
        detected_state: None,
        detected_value: None,
        detected_rank: None,
        enlarged_rank: None,
    };
    if min_eigenvalue >= -tol {
        return Ok(out);
    }

    for level in 1..=max_k {
        let res = product_min_at_level(s, level, config)?;
        out.levels.insert(
            level,
            LevelEvidence {
                level,
                product_min: res.value,
                converged: res.converged,
                restarts: res.restarts_used,
                iterations: res.iterations,
                trace: res.trace.clone(),
            },
        );
        if res.value < -tol {
            if level == 1 {
                out.verdict = Verdict::NotAWitness;
                let psi = PureState::product(&res.arg_a, &res.arg_b)?;
                out.detected_value = Some(s.expectation(&psi)?);
                out.detected_rank = Some(1);
                out.detected_state = Some(psi);
                return Ok(out);
            }
            out.verdict = Verdict::SchmidtWitness { k: level };
            attach_detected_state(s, level, &res, &mut out)?;
            return Ok(out);
        }
    }
    if max_k == max_local {
        // Every state has rank ≤ min(dA, dB), so the last level must see the
        // negative eigenvalue.
        return Err(Error::Numerical(format!(
            "product minimum at level {max_k} stayed non-negative although the minimal eigenvalue is {min_eigenvalue:.3e}"
        )));
    }
    out.verdict = Verdict::SchmidtWitness { k: max_k + 1 };
    Ok(out)
}

/// The level-`k` minimizer lowers to a rank-≤k state detected by `S`; its
/// lift to level `k−1` is the enlarged-space state detected by `𝕊_{k−1}`,
/// and lowering that one again gives the reported state.
fn attach_detected_state(
    s: &Operator,
    k: usize,
    res: &ProductMinResult,
    out: &mut WitnessClassification,
) -> Result<()> {
    let candidate = lower_product_state(&res.arg_a, &res.arg_b, k)?;
    if candidate.norm_sqr() == 0.0 {
        return Ok(());
    }
    let candidate = candidate.into_normalized()?;
    let enlarged = lift_state(&candidate, k - 1)?.state;
    let lifted_op = lift_operator(s, k - 1)?.operator;
    if lifted_op.expectation(&enlarged)? >= 0.0 {
        return Ok(());
    }
    out.enlarged_rank = Some(enlarged.schmidt_rank(1e-8)?);
    let detected = lower_state(&enlarged, k - 1)?.into_normalized()?;
    out.detected_value = Some(s.expectation(&detected)?);
    out.detected_rank = Some(detected.schmidt_rank(1e-8)?);
    out.detected_state = Some(detected);
    Ok(())
}

/// True iff `Tr(W ρ) < −tol`.
pub fn detects(w: &Operator, rho: &Operator, tol: f64) -> Result<bool> {
    if w.dims() != rho.dims() {
        return Err(Error::dims(format!("witness on {} but state on {}", w.dims(), rho.dims())));
    }
    let (rho_min, _) = rho.min_eigenpair()?;
    if rho_min < -tol {
        return Err(Error::Precondition(format!("state is not positive (eigenvalue {rho_min:.3e})")));
    }
    Ok(w.trace_pair(rho)? < -tol)
}

/// Affine mixing of a witness with `Z`.
///
/// `epsilon ≥ 0` coarsens: `(1−ε)W₁ + εZ`, with `ε < 1`. A negative
/// `epsilon = −ε` gives the finer candidate `(1+ε)W₁ − εZ`.
pub fn subtract(w1: &Operator, z: &Operator, epsilon: f64) -> Result<Operator> {
    if !epsilon.is_finite() {
        return Err(Error::param("epsilon must be finite"));
    }
    if epsilon >= 1.0 {
        return Err(Error::param(format!("coarsening needs 0 <= epsilon < 1, got {epsilon}")));
    }
    if epsilon >= 0.0 {
        w1.combine(1.0 - epsilon, z, epsilon)
    } else {
        let e = -epsilon;
        w1.combine(1.0 + e, z, -e)
    }
}

/// Evidence for or against `W₁` being finer than `W₂`.
#[derive(Clone, Debug)]
pub enum FinerOutcome {
    /// `W₂ = (1−ε)W₁ + εZ` with `Z` positive semidefinite.
    Certificate { epsilon: f64, z: Option<Operator>, z_min_eigenvalue: f64 },
    /// No grid point gave a positive `Z`; the least negative one is reported.
    Refutation { best_epsilon: f64, best_min_eigenvalue: f64 },
}

/// Grid search over `ε ∈ (0, 1)` for a positive `Z = (W₂ − (1−ε)W₁)/ε`.
///
/// Among admissible grid points the one maximizing the smallest eigenvalue
/// of `Z` is returned.
pub fn finer_certificate(w1: &Operator, w2: &Operator, grid: usize, tol: f64) -> Result<FinerOutcome> {
    if w1.dims() != w2.dims() {
        return Err(Error::dims(format!("witnesses on {} and {}", w1.dims(), w2.dims())));
    }
    if grid < 2 {
        return Err(Error::param("grid needs at least 2 intervals"));
    }
    if w1.max_abs_diff(w2)? < 1e-12 {
        return Ok(FinerOutcome::Certificate { epsilon: 0.0, z: None, z_min_eigenvalue: f64::INFINITY });
    }
    let mut best: Option<(f64, f64, Operator)> = None;
    for i in 1..grid {
        let eps = i as f64 / grid as f64;
        let z = w2.combine(1.0 / eps, w1, -(1.0 - eps) / eps)?;
        let min = z.eigenvalues()?[0];
        if best.as_ref().is_none_or(|(_, m, _)| min > *m) {
            best = Some((eps, min, z));
        }
    }
    let (epsilon, min, z) = best.expect("grid has at least one interior point");
    if min >= -tol {
        Ok(FinerOutcome::Certificate { epsilon, z: Some(z), z_min_eigenvalue: min })
    } else {
        Ok(FinerOutcome::Refutation { best_epsilon: epsilon, best_min_eigenvalue: min })
    }
}

/// `(S − λZ)/(1 − λ)`.
pub fn refine_witness(s: &Operator, z: &Operator, lambda: f64) -> Result<Operator> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::param(format!("refinement needs 0 <= lambda < 1, got {lambda}")));
    }
    s.combine(1.0 / (1.0 - lambda), z, -lambda / (1.0 - lambda))
}

/// Largest admissible subtraction of `Z` from a `k`-Schmidt witness.
#[derive(Clone, Debug)]
pub struct SubtractionResult {
    pub lambda0: f64,
    /// `inf_A [Z_A^{-1/2} S_A Z_A^{-1/2}]_min`.
    pub formula_min: f64,
    /// `(sup_A [S_A^{-1/2} Z_A S_A^{-1/2}]_max)^{-1}`.
    pub formula_sup_inv: f64,
    /// `S'(λ₀)`, absent when `λ₀` reaches 1 within the positivity tolerance.
    pub refined: Option<Operator>,
    /// Set when a singular pencil forced `λ₀ = 0`.
    pub degenerate: bool,
    pub level: usize,
}

struct PencilStep {
    value: f64,
    vector: DVector<C64>,
    kernel_violation: bool,
}

/// `min_x ⟨x|H|x⟩ / ⟨x|M|x⟩` over the support of `M`, through
/// `M^{-1/2} H M^{-1/2}` restricted to that support. `kernel_violation`
/// reports a negative direction of `H` inside the kernel of `M`.
fn pencil_min(h: &DMatrix<C64>, m: &DMatrix<C64>, label: &str) -> Result<Option<PencilStep>> {
    let (values, vectors) = linalg::eigh(m)?;
    let scale = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return Ok(None);
    }
    let cut = 1e-10 * scale;
    if values.iter().any(|&v| v < -1e-8 * scale.max(1.0)) {
        return Err(Error::Precondition(format!("{label} is not positive on product states")));
    }
    let support: Vec<usize> = (0..m.nrows()).filter(|&i| values[i] > cut).collect();
    let kernel: Vec<usize> = (0..m.nrows()).filter(|&i| values[i] <= cut).collect();

    let t = DMatrix::from_columns(
        &support
            .iter()
            .map(|&i| vectors.column(i) / C64::from(values[i].sqrt()))
            .collect::<Vec<_>>(),
    );
    let reduced = hermitize(t.adjoint() * h * &t);
    let (value, y) = min_eigenpair_of(&reduced)?;
    let mut vector = &t * y;
    let n = vector.norm();
    if n > 0.0 {
        vector.unscale_mut(n);
    }

    let mut kernel_violation = false;
    if !kernel.is_empty() {
        let k = DMatrix::from_columns(&kernel.iter().map(|&i| vectors.column(i)).collect::<Vec<_>>());
        let hk = hermitize(k.adjoint() * h * &k);
        let (hk_min, _) = min_eigenpair_of(&hk)?;
        let h_scale = h.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
        kernel_violation = hk_min < -1e-9 * h_scale.max(1e-300);
    }
    Ok(Some(PencilStep { value, vector, kernel_violation }))
}

/// Result of minimizing a product-state Rayleigh quotient.
struct RatioRun {
    value: f64,
    kernel_violation: bool,
}

/// Alternating minimization of `⟨ab|H|ab⟩ / ⟨ab|M|ab⟩` over product states.
fn ratio_see_saw(
    h: &DMatrix<C64>,
    m: &DMatrix<C64>,
    n_a: usize,
    n_b: usize,
    config: &OptimizerConfig,
    stream: u64,
    label: &str,
) -> Result<Option<RatioRun>> {
    let mut rng = rng_for(config.seed, stream);
    let mut a = random_unit_vector(&mut rng, n_a);
    let step = |fixed: &DVector<C64>, side: Side| {
        let hs = hermitize(partial_expectation_matrix(h, n_a, n_b, fixed, side));
        let ms = hermitize(partial_expectation_matrix(m, n_a, n_b, fixed, side));
        pencil_min(&hs, &ms, label)
    };
    let Some(first) = step(&a, Side::A)? else { return Ok(None) };
    if first.kernel_violation {
        return Ok(Some(RatioRun { value: f64::NEG_INFINITY, kernel_violation: true }));
    }
    let mut value = first.value;
    let mut b = first.vector;
    for _ in 0..config.max_iters {
        let Some(sa) = step(&b, Side::B)? else { break };
        if sa.kernel_violation {
            return Ok(Some(RatioRun { value: f64::NEG_INFINITY, kernel_violation: true }));
        }
        a = sa.vector;
        let Some(sb) = step(&a, Side::A)? else { break };
        if sb.kernel_violation {
            return Ok(Some(RatioRun { value: f64::NEG_INFINITY, kernel_violation: true }));
        }
        b = sb.vector;
        let improvement = value - sb.value;
        value = value.min(sb.value);
        if improvement < config.convergence_tol {
            break;
        }
    }
    Ok(Some(RatioRun { value, kernel_violation: false }))
}

fn best_ratio(
    h: &DMatrix<C64>,
    m: &DMatrix<C64>,
    n_a: usize,
    n_b: usize,
    config: &OptimizerConfig,
    stream_offset: u64,
    label: &str,
) -> Result<(f64, bool)> {
    let runs: Vec<Option<RatioRun>> = (0..config.restarts)
        .into_par_iter()
        .map(|i| ratio_see_saw(h, m, n_a, n_b, config, stream_offset + i as u64, label))
        .collect::<Result<_>>()?;
    let mut best = f64::INFINITY;
    let mut violation = false;
    for run in runs.into_iter().flatten() {
        violation |= run.kernel_violation;
        best = best.min(run.value);
    }
    if best == f64::INFINITY {
        return Err(Error::Numerical(format!("every restart hit a vanishing {label}")));
    }
    Ok((best, violation))
}

const PRECONDITION_SAMPLES: usize = 64;

fn check_subtrahend(z: &Operator, k: usize, config: &OptimizerConfig) -> Result<()> {
    let base = z.dims();
    for rank in 1..=k.min(base.d_a().min(base.d_b())) {
        for i in 0..PRECONDITION_SAMPLES {
            let seed = config.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add((rank * 1000 + i) as u64);
            let psi = random_pure_state(base, rank, seed)?;
            let v = z.expectation(&psi)?;
            if v < -config.positivity_tol {
                return Err(Error::Precondition(format!(
                    "Z is negative ({v:.3e}) on a sampled state of Schmidt rank {rank}"
                )));
            }
        }
    }
    Ok(())
}

/// Estimates `λ₀`, the largest `λ` for which `(S − λZ)/(1 − λ)` is still a
/// `k`-Schmidt witness, by both pencil formulations over level `k−1`.
pub fn lambda_max_subtraction(
    s: &Operator,
    z: &Operator,
    k: usize,
    config: &OptimizerConfig,
) -> Result<SubtractionResult> {
    config.validate()?;
    s.require_hermitian()?;
    z.require_hermitian()?;
    if s.dims() != z.dims() {
        return Err(Error::dims(format!("S on {} but Z on {}", s.dims(), z.dims())));
    }
    if k < 2 {
        return Err(Error::param("subtraction needs k >= 2"));
    }
    check_subtrahend(z, k, config)?;
    let level = k - 1;
    let big_s = lift_operator(s, level)?.operator;
    let big_z = lift_operator(z, level)?.operator;
    let (n_a, n_b) = (big_s.dims().local_a(), big_s.dims().local_b());

    let (formula_min, v1) =
        best_ratio(big_s.matrix(), big_z.matrix(), n_a, n_b, config, 0, "lifted Z")?;
    let neg_z = -big_z.matrix();
    let (neg_sup, v2) = best_ratio(
        &neg_z,
        big_s.matrix(),
        n_a,
        n_b,
        config,
        config.restarts as u64,
        "lifted S",
    )?;
    let degenerate = v1 || v2;
    let sup = -neg_sup;
    let formula_sup_inv = if sup > 0.0 { 1.0 / sup } else { f64::INFINITY };
    let (lambda0, formula_min, formula_sup_inv) =
        if degenerate { (0.0, 0.0, 0.0) } else { (formula_min, formula_min, formula_sup_inv) };
    if lambda0 < -config.positivity_tol {
        return Err(Error::Precondition(format!(
            "S is negative on Schmidt rank {level} (pencil minimum {lambda0:.3e}); not a {k}-SW"
        )));
    }
    let lambda0 = lambda0.max(0.0);
    let refined = if lambda0 < 1.0 - config.positivity_tol { Some(refine_witness(s, z, lambda0)?) } else { None };
    Ok(SubtractionResult { lambda0, formula_min, formula_sup_inv, refined, degenerate, level })
}

/// Span of the zero set of a witness on product states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OptimalityCertificate {
    pub span_dim: usize,
    pub total_dim: usize,
    /// True when the zero set spans the whole space, which suffices for
    /// optimality. False is inconclusive.
    pub optimal: bool,
    pub zero_states: usize,
    pub rounds: usize,
}

const OPTIMALITY_ROUNDS: usize = 8;

/// Collects product states with `|⟨ψ|W|ψ⟩| ≤ zeroTol` from repeated see-saw
/// rounds and reports the dimension of their span.
pub fn optimality_certificate(w: &Operator, config: &OptimizerConfig) -> Result<OptimalityCertificate> {
    let check = is_entanglement_witness(w, config)?;
    if !check.is_witness {
        return Err(Error::Precondition("operator is not an entanglement witness".into()));
    }
    let total = w.dims().total();
    let mut zeros: Vec<DVector<C64>> = Vec::new();
    let mut span_dim = 0;
    let mut rounds = 0;
    for round in 0..OPTIMALITY_ROUNDS {
        rounds = round + 1;
        let cfg = config.clone().with_seed(config.seed.wrapping_add(round as u64));
        for run in see_saw_restarts(w, &cfg)? {
            if run.value.abs() <= config.zero_tol {
                zeros.push(run.a.kronecker(&run.b));
            }
        }
        span_dim = span_dimension(&zeros)?;
        if span_dim == total {
            break;
        }
    }
    Ok(OptimalityCertificate { span_dim, total_dim: total, optimal: span_dim == total, zero_states: zeros.len(), rounds })
}

fn span_dimension(vectors: &[DVector<C64>]) -> Result<usize> {
    if vectors.is_empty() {
        return Ok(0);
    }
    let sv = linalg::singular_values(&DMatrix::from_columns(vectors))?;
    Ok(sv.iter().filter(|&&v| v > 1e-7 * sv[0]).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_isotropic_witness, maximally_entangled_state, random_hermitian, IsotropicWitnessSpec};
    use crate::hilbert::Dims;
    use approx::assert_abs_diff_eq;

    fn iso(a: f64) -> Operator {
        make_isotropic_witness(&IsotropicWitnessSpec { a, d: 3 }).unwrap()
    }

    fn flip_witness() -> Operator {
        // (𝟙 − 2 P_{Φ+}) / 2 on 2x2
        let phi = maximally_entangled_state(2).unwrap();
        let id = Operator::identity(Dims::new(2, 2).unwrap());
        id.combine(0.5, &phi.projector(), -1.0).unwrap()
    }

    fn quick() -> OptimizerConfig {
        OptimizerConfig::default().with_restarts(16).with_seed(3)
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        let bad = OptimizerConfig { restarts: 0, ..Default::default() };
        assert!(matches!(bad.validate(), Err(Error::Parameter(_))));
        let w = Operator::identity(Dims::new(2, 2).unwrap());
        assert!(matches!(min_product_expectation(&w, &bad), Err(Error::Parameter(_))));
        let bad = OptimizerConfig { convergence_tol: -1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn product_min_of_flat_operator() {
        let dims = Dims::new(2, 3).unwrap();
        let w = Operator::identity(dims).scaled(1.0 / 6.0);
        let r = min_product_expectation(&w, &quick()).unwrap();
        assert_abs_diff_eq!(r.value, 1.0 / 6.0, epsilon = 1e-12);
        assert_eq!(r.restarts_used, 16);
        assert_eq!(r.trace.len(), 16);
    }

    #[test]
    fn product_min_examples() {
        let r = min_product_expectation(&flip_witness(), &quick()).unwrap();
        assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-10);
        let r = min_product_expectation(&iso(1.0 / 3.0), &quick()).unwrap();
        assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn product_min_rejects_non_hermitian() {
        let dims = Dims::new(2, 1).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[C64::from(0.0), C64::from(1.0), C64::from(0.0), C64::from(0.0)]);
        let w = Operator::new(dims, m).unwrap();
        assert!(matches!(min_product_expectation(&w, &quick()), Err(Error::NotHermitian { .. })));
        assert!(matches!(is_entanglement_witness(&w, &quick()), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn see_saw_is_monotone_and_bounded_by_spectrum() {
        for seed in 0..10 {
            let w = random_hermitian(Dims::new(3, 3).unwrap(), seed);
            let (lambda, _) = w.min_eigenpair().unwrap();
            let runs = see_saw_restarts(&w, &quick()).unwrap();
            for r in &runs {
                for pair in r.history.windows(2) {
                    assert!(pair[1] <= pair[0] + 1e-12, "history went up: {pair:?}");
                }
                assert!(r.value >= lambda - 1e-9);
            }
            let best = min_product_expectation(&w, &quick()).unwrap();
            let psi = PureState::product(&best.arg_a, &best.arg_b).unwrap();
            assert_abs_diff_eq!(w.expectation(&psi).unwrap(), best.value, epsilon = 1e-9);
        }
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let w = random_hermitian(Dims::new(3, 2).unwrap(), 42);
        let cfg = quick();
        let seq = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = seq.install(|| min_product_expectation(&w, &cfg).unwrap());
        let b = min_product_expectation(&w, &cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.arg_a, b.arg_a);
    }

    #[test]
    fn entanglement_witness_examples() {
        let cfg = quick();
        let flat = Operator::identity(Dims::new(3, 3).unwrap()).scaled(1.0 / 9.0);
        assert!(!is_entanglement_witness(&flat, &cfg).unwrap().is_witness);
        let check = is_entanglement_witness(&iso(0.125), &cfg).unwrap();
        assert!(check.is_witness);
        let detected = check.detected_state.unwrap();
        assert!(iso(0.125).expectation(&detected).unwrap() < 0.0);
        assert!(!is_entanglement_witness(&iso(0.05), &cfg).unwrap().is_witness);
    }

    #[test]
    fn classification_examples() {
        let cfg = quick();
        let c = classify_schmidt_witness(&iso(0.05), 3, &cfg).unwrap();
        assert_eq!(c.verdict, Verdict::PositiveOperator);
        let c = classify_schmidt_witness(&iso(0.125), 3, &cfg).unwrap();
        assert_eq!(c.verdict, Verdict::SchmidtWitness { k: 3 });
        let levels = c.per_level_product_min();
        assert!(levels[&1] >= -1e-7 && levels[&2] >= -1e-7 && levels[&3] < -1e-7);
        assert_eq!(c.detected_rank, Some(3));
        assert_eq!(c.enlarged_rank, Some(2));
        assert!(c.detected_value.unwrap() < 0.0);
        let c = classify_schmidt_witness(&iso(0.2), 3, &cfg).unwrap();
        assert_eq!(c.verdict, Verdict::SchmidtWitness { k: 2 });
        assert_eq!(c.detected_rank, Some(2));
        let c = classify_schmidt_witness(&iso(0.5), 3, &cfg).unwrap();
        assert_eq!(c.verdict, Verdict::NotAWitness);
    }

    #[test]
    fn classification_rejects_bad_max_k() {
        assert!(matches!(classify_schmidt_witness(&iso(0.2), 4, &quick()), Err(Error::Parameter(_))));
        assert!(matches!(classify_schmidt_witness(&iso(0.2), 0, &quick()), Err(Error::Parameter(_))));
    }

    #[test]
    fn classification_with_truncated_levels() {
        let c = classify_schmidt_witness(&iso(0.125), 2, &quick()).unwrap();
        assert_eq!(c.verdict, Verdict::SchmidtWitness { k: 3 });
        assert!(c.detected_state.is_none());
    }

    #[test]
    fn level_minima_are_nested() {
        let cfg = quick();
        for a in [0.125, 0.15, 0.2, 0.3] {
            let s = iso(a);
            let mins: Vec<f64> =
                (1..=3).map(|l| product_min_at_level(&s, l, &cfg).unwrap().value).collect();
            assert!(mins[1] <= mins[0] + 1e-9 && mins[2] <= mins[1] + 1e-9, "a = {a}: {mins:?}");
        }
    }

    #[test]
    fn detects_examples() {
        let psi = maximally_entangled_state(3).unwrap();
        assert!(detects(&iso(0.2), &psi.projector(), 1e-9).unwrap());
        let flat = Operator::identity(Dims::new(3, 3).unwrap()).scaled(1.0 / 9.0);
        assert!(!detects(&iso(0.2), &flat, 1e-9).unwrap());
        assert!(!detects(&flat, &psi.projector(), 1e-9).unwrap());
        let other = Operator::identity(Dims::new(2, 2).unwrap());
        assert!(matches!(detects(&iso(0.2), &other, 1e-9), Err(Error::Dimension(_))));
    }

    #[test]
    fn subtract_examples() {
        let w = iso(1.0 / 3.0);
        let flat = Operator::identity(Dims::new(3, 3).unwrap()).scaled(1.0 / 9.0);
        assert_eq!(subtract(&w, &flat, 0.0).unwrap().matrix(), w.matrix());
        let mixed = subtract(&w, &flat, 0.5).unwrap();
        assert!(mixed.max_abs_diff(&iso(0.2)).unwrap() < 1e-12);
        assert!(matches!(subtract(&w, &flat, 1.0), Err(Error::Parameter(_))));
        let finer = subtract(&iso(0.2), &flat, -1.0).unwrap();
        assert!(finer.max_abs_diff(&iso(0.2).combine(2.0, &flat, -1.0).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn finer_certificate_examples() {
        let (w1, w2) = (iso(1.0 / 3.0), iso(0.2));
        match finer_certificate(&w1, &w2, 100, 1e-10).unwrap() {
            FinerOutcome::Certificate { epsilon, z, .. } => {
                assert_abs_diff_eq!(epsilon, 0.5, epsilon = 1e-12);
                let flat = Operator::identity(Dims::new(3, 3).unwrap()).scaled(1.0 / 9.0);
                assert!(z.unwrap().max_abs_diff(&flat).unwrap() < 1e-12);
            }
            other => panic!("expected certificate, got {other:?}"),
        }
        assert!(matches!(finer_certificate(&w2, &w1, 100, 1e-10).unwrap(), FinerOutcome::Refutation { .. }));
        match finer_certificate(&w1, &w1, 100, 1e-10).unwrap() {
            FinerOutcome::Certificate { epsilon, z, .. } => {
                assert_eq!(epsilon, 0.0);
                assert!(z.is_none());
            }
            other => panic!("expected trivial certificate, got {other:?}"),
        }
    }

    #[test]
    fn refine_rejects_lambda_at_one() {
        let flat = Operator::identity(Dims::new(3, 3).unwrap()).scaled(1.0 / 9.0);
        assert!(matches!(refine_witness(&iso(0.125), &flat, 1.0), Err(Error::Parameter(_))));
        assert!(matches!(refine_witness(&iso(0.125), &flat, -0.1), Err(Error::Parameter(_))));
    }

    #[test]
    fn subtraction_with_identical_pencil() {
        let s = iso(0.125);
        let r = lambda_max_subtraction(&s, &s, 3, &quick()).unwrap();
        assert_abs_diff_eq!(r.lambda0, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.formula_sup_inv, 1.0, epsilon = 1e-9);
        assert!(r.refined.is_none());
    }

    #[test]
    fn subtraction_rejects_negative_subtrahend() {
        let flat = Operator::identity(Dims::new(3, 3).unwrap()).scaled(1.0 / 9.0);
        let neg = flat.scaled(-1.0);
        assert!(matches!(
            lambda_max_subtraction(&iso(0.125), &neg, 3, &quick()),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(lambda_max_subtraction(&iso(0.125), &flat, 1, &quick()), Err(Error::Parameter(_))));
    }

    #[test]
    fn optimality_examples() {
        let cfg = quick();
        let flat = Operator::identity(Dims::new(3, 3).unwrap()).scaled(1.0 / 9.0);
        assert!(matches!(optimality_certificate(&flat, &cfg), Err(Error::Precondition(_))));
        let cert = optimality_certificate(&flip_witness(), &cfg).unwrap();
        assert_eq!(cert.span_dim, 4);
        assert!(cert.optimal);
        let cert = optimality_certificate(&iso(1.0 / 3.0), &cfg).unwrap();
        assert_eq!(cert.optimal, cert.span_dim == 9);
        assert_eq!(cert.span_dim, 9);
    }

    mod properties {
        use super::*;
        use crate::random::{random_unit_vector, rng_for};
        use proptest::prelude::*;

        fn near_phi(seed: u64, t: f64) -> Operator {
            let phi = maximally_entangled_state(3).unwrap();
            let mut rng = rng_for(seed, 0);
            let v = phi.amplitudes() + random_unit_vector(&mut rng, 9) * C64::from(t);
            PureState::from_vector(phi.dims(), v).unwrap().into_normalized().unwrap().projector()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn see_saw_never_increases(seed in any::<u64>(), da in 2usize..4, db in 2usize..4) {
                let w = random_hermitian(Dims::new(da, db).unwrap(), seed);
                let cfg = OptimizerConfig::default().with_restarts(4).with_seed(seed);
                let lambda = w.eigenvalues().unwrap()[0];
                for run in see_saw_restarts(&w, &cfg).unwrap() {
                    for pair in run.history.windows(2) {
                        prop_assert!(pair[1] <= pair[0] + 1e-12);
                    }
                    prop_assert!(run.value >= lambda - 1e-9);
                }
            }

            #[test]
            fn level_minima_nest(a in 0.0f64..0.9, seed in any::<u64>()) {
                let s = iso(a);
                let cfg = OptimizerConfig::default().with_restarts(8).with_seed(seed);
                let mins: Vec<f64> = (1..=3).map(|l| product_min_at_level(&s, l, &cfg).unwrap().value).collect();
                prop_assert!(mins[1] <= mins[0] + 1e-7 && mins[2] <= mins[1] + 1e-7);
            }

            #[test]
            fn finer_witness_detects_more_strongly(seed in any::<u64>(), t in 0.0f64..1.5) {
                let (w1, w2) = (iso(1.0 / 3.0), iso(0.2));
                let rho = near_phi(seed, t);
                let t2 = w2.trace_pair(&rho).unwrap();
                if t2 < 0.0 {
                    prop_assert!(w1.trace_pair(&rho).unwrap() <= t2 + 1e-12);
                }
            }

            #[test]
            fn finer_witness_on_zero_level_set(seed in any::<u64>()) {
                // ρ = p P_Φ + (1−p) σ with σ supported off Φ and p tuned so Tr(W₂ρ) = 0.
                let (w1, w2) = (iso(1.0 / 3.0), iso(0.2));
                let phi = maximally_entangled_state(3).unwrap();
                let mut rng = rng_for(seed, 1);
                let v = random_unit_vector(&mut rng, 9);
                let v = &v - phi.amplitudes() * phi.amplitudes().dotc(&v);
                let sigma = PureState::from_vector(phi.dims(), v).unwrap().into_normalized().unwrap().projector();
                let p = 5.0 / 9.0;
                let rho = phi.projector().combine(p, &sigma, 1.0 - p).unwrap();
                prop_assert!(w2.trace_pair(&rho).unwrap().abs() < 1e-12);
                prop_assert!(w1.trace_pair(&rho).unwrap() <= 1e-9);
            }

            #[test]
            fn subtraction_keeps_detected_states(a in 0.12f64..0.33, lambda in 0.0f64..0.5, seed in any::<u64>(), t in 0.0f64..1.5) {
                let s = iso(a);
                let refined = refine_witness(&s, &Operator::identity(Dims::new(3, 3).unwrap()).scaled(1.0 / 9.0), lambda).unwrap();
                let rho = near_phi(seed, t);
                if s.trace_pair(&rho).unwrap() < 0.0 {
                    prop_assert!(refined.trace_pair(&rho).unwrap() < 0.0);
                }
            }
        }
    }
}
