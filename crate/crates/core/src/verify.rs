//! Seeded identity suites and a brute-force oracle for the see-saw.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{lift_ensemble, lift_operator, lift_state, lower_ensemble, lower_product_state, lower_state};
use crate::error::{Error, Result};
use crate::families::{random_hermitian, random_pure_state};
use crate::hilbert::{Dims, Operator, PureState, C64};
use crate::random::{random_unit_vector, rng_for, SeededRng};
use crate::witness::{min_product_expectation, OptimizerConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Roundtrip,
    Trace,
    MatrixElements,
    Oracle,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Identities, Suite::Roundtrip, Suite::Trace, Suite::MatrixElements, Suite::Oracle];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Roundtrip => "roundtrip",
            Suite::Trace => "trace",
            Suite::MatrixElements => "lemma5",
            Suite::Oracle => "oracle",
        }
    }

    pub fn tolerance(&self) -> f64 {
        match self {
            Suite::Roundtrip => 1e-10,
            Suite::Oracle => 1e-4,
            _ => 1e-9,
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::param(format!("unknown suite '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteReport {
    pub suite: Suite,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub errors: Vec<f64>,
    pub max_error: f64,
    pub passed: bool,
}

/// Runs `trials` seeded trials of a suite. `dims` only affects the oracle
/// suite, whose grid side must be a qubit; the others run on 3x3.
pub fn run_suite(suite: Suite, trials: usize, seed: u64, dims: Option<Dims>, config: &OptimizerConfig) -> Result<SuiteReport> {
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    let errors = (0..trials)
        .map(|t| {
            let mut rng = rng_for(seed, t as u64);
            match suite {
                Suite::Identities => identity_trial(&mut rng, t),
                Suite::Roundtrip => roundtrip_trial(&mut rng, t),
                Suite::Trace => trace_trial(&mut rng, t),
                Suite::MatrixElements => matrix_element_trial(&mut rng, t),
                Suite::Oracle => oracle_trial(&mut rng, dims.unwrap_or(Dims::new(2, 2)?), config),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_error = errors.iter().fold(0.0_f64, |m, e| m.max(*e));
    let tolerance = suite.tolerance();
    Ok(SuiteReport { suite, trials, seed, tolerance, errors, max_error, passed: max_error < tolerance })
}

fn base3() -> Dims {
    Dims::new(3, 3).expect("valid dims")
}

/// `|⟨ψ|S|ψ⟩ − ⟨I_k ψ|𝕊_k|I_k ψ⟩|` with ranks on both sides of `k`.
pub fn identity_trial(rng: &mut SeededRng, t: usize) -> Result<f64> {
    let k = 2 + t % 2;
    let rank = 1 + (t / 2) % 3;
    let s = random_hermitian(base3(), rng.random());
    let psi = random_pure_state(base3(), rank, rng.random())?;
    let lifted = lift_state(&psi, k)?.state;
    let big = lift_operator(&s, k)?.operator;
    Ok((s.expectation(&psi)? - big.expectation(&lifted)?).abs())
}

/// `‖J_k(I_k ψ) − ψ‖` for rank at most `k`.
pub fn roundtrip_trial(rng: &mut SeededRng, t: usize) -> Result<f64> {
    let k = 1 + t % 3;
    let rank = 1 + (t / 3) % k;
    let psi = random_pure_state(base3(), rank, rng.random())?;
    let back = lower_state(&lift_state(&psi, k)?.state, k)?;
    back.distance(&psi)
}

fn random_weights(rng: &mut SeededRng, m: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Both trace correspondences on one random ensemble pair.
pub fn trace_trial(rng: &mut SeededRng, t: usize) -> Result<f64> {
    let k = 2 + t % 2;
    let s = random_hermitian(base3(), rng.random());
    let big = lift_operator(&s, k)?.operator;
    let m = rng.random_range(2..=5);

    let weights = random_weights(rng, m);
    let mut ensemble = Vec::with_capacity(m);
    for p in &weights {
        let rank = rng.random_range(1..=k);
        ensemble.push((*p, random_pure_state(base3(), rank, rng.random())?));
    }
    let rho = ensemble.iter().try_fold(Operator::zeros(base3()), |acc, (p, psi)| acc.combine(1.0, &psi.projector(), *p))?;
    let gamma = lift_ensemble(&ensemble, k)?;
    let forward = (s.trace_pair(&rho)? - big.trace_pair(&gamma)?).abs();

    let weights = random_weights(rng, m);
    let lifted_dims = base3().lifted(k)?;
    let mut big_ensemble = Vec::with_capacity(m);
    for p in &weights {
        let v = random_unit_vector(rng, lifted_dims.total());
        big_ensemble.push((*p, PureState::from_vector(lifted_dims, v)?));
    }
    let big_theta = big_ensemble
        .iter()
        .try_fold(Operator::zeros(lifted_dims), |acc, (p, psi)| acc.combine(1.0, &psi.projector(), *p))?;
    let theta = lower_ensemble(&big_ensemble, k)?;
    let backward = (big.trace_pair(&big_theta)? - s.trace_pair(&theta)?).abs();
    Ok(forward.max(backward))
}

/// `|⟨A₁B₁|𝕊_k|A₂B₂⟩ − ⟨J(A₁B₁)|S|J(A₂B₂)⟩|` on random product pairs.
pub fn matrix_element_trial(rng: &mut SeededRng, t: usize) -> Result<f64> {
    let k = 2 + t % 2;
    let s = random_hermitian(base3(), rng.random());
    let big = lift_operator(&s, k)?.operator;
    let mut party = |n: usize| random_unit_vector(rng, n);
    let (a1, b1, a2, b2) = (party(3 * k), party(3 * k), party(3 * k), party(3 * k));
    let lhs = a1.kronecker(&b1).dotc(&(big.matrix() * a2.kronecker(&b2)));
    let lower = |a: &DVector<C64>, b: &DVector<C64>| -> Result<PureState> {
        lower_product_state(&PureState::on_party_a(3, k, a.clone())?, &PureState::on_party_b(3, k, b.clone())?, k)
    };
    let (j1, j2) = (lower(&a1, &b1)?, lower(&a2, &b2)?);
    let rhs = j1.amplitudes().dotc(&(s.matrix() * j2.amplitudes()));
    Ok((lhs - rhs).norm())
}

/// `|see-saw − grid|` on one random operator.
pub fn oracle_trial(rng: &mut SeededRng, dims: Dims, config: &OptimizerConfig) -> Result<f64> {
    let w = random_hermitian(dims, rng.random());
    let seesaw = min_product_expectation(&w, config)?.value;
    let grid = grid_product_minimum(&w)?;
    Ok((seesaw - grid).abs())
}

const THETA_STEPS: usize = 48;
const PHI_STEPS: usize = 96;
const ZOOM_CANDIDATES: usize = 6;
const ZOOM_ROUNDS: usize = 30;
const ZOOM_STEPS: usize = 8;

/// Product-state minimum by exhaustive search over the Bloch sphere of the
/// qubit party, with the other party's minimum taken exactly as the lowest
/// eigenvalue of the partial expectation. A coarse `(θ, φ)` grid is followed
/// by zoomed grids around the best cells.
///
/// Shares no numerical code with the see-saw: contractions are explicit sums
/// and eigenvalues come from a Jacobi sweep over the real form of the matrix.
pub fn grid_product_minimum(w: &Operator) -> Result<f64> {
    let dims = w.dims();
    let (n_a, n_b) = (dims.local_a(), dims.local_b());
    let qubit_first = if n_a == 2 {
        true
    } else if n_b == 2 {
        false
    } else {
        return Err(Error::dims(format!("grid oracle needs a qubit party, got {dims}")));
    };
    let m = w.matrix();
    let other = if qubit_first { n_b } else { n_a };
    let f = |theta: f64, phi: f64| -> f64 {
        let e = [C64::from((theta / 2.0).cos()), C64::from_polar((theta / 2.0).sin(), phi)];
        let mut h = vec![vec![C64::from(0.0); other]; other];
        for (x, row) in h.iter_mut().enumerate() {
            for (y, out) in row.iter_mut().enumerate() {
                let mut acc = C64::from(0.0);
                for p in 0..2 {
                    for q in 0..2 {
                        let (r, c) = if qubit_first { (p * n_b + x, q * n_b + y) } else { (x * n_b + p, y * n_b + q) };
                        acc += e[p].conj() * m[(r, c)] * e[q];
                    }
                }
                *out = acc;
            }
        }
        jacobi_min_eigenvalue(&h)
    };

    let dt = std::f64::consts::PI / THETA_STEPS as f64;
    let dp = 2.0 * std::f64::consts::PI / PHI_STEPS as f64;
    let mut cells: Vec<(f64, f64, f64)> = Vec::with_capacity((THETA_STEPS + 1) * PHI_STEPS);
    for i in 0..=THETA_STEPS {
        for j in 0..PHI_STEPS {
            let (t, p) = (i as f64 * dt, j as f64 * dp);
            cells.push((f(t, p), t, p));
        }
    }
    cells.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut best = cells[0].0;
    for &(v0, t0, p0) in cells.iter().take(ZOOM_CANDIDATES) {
        let (mut v, mut t, mut p) = (v0, t0, p0);
        let (mut ht, mut hp) = (dt, dp);
        for _ in 0..ZOOM_ROUNDS {
            let (ct, cp) = (t, p);
            for i in 0..=2 * ZOOM_STEPS {
                for j in 0..=2 * ZOOM_STEPS {
                    let tt = ct + ht * (i as f64 - ZOOM_STEPS as f64) / ZOOM_STEPS as f64;
                    let pp = cp + hp * (j as f64 - ZOOM_STEPS as f64) / ZOOM_STEPS as f64;
                    let val = f(tt, pp);
                    if val < v {
                        (v, t, p) = (val, tt, pp);
                    }
                }
            }
            ht *= 0.5;
            hp *= 0.5;
        }
        best = best.min(v);
    }
    Ok(best)
}

/// Smallest eigenvalue of a Hermitian matrix via cyclic Jacobi rotations on
/// the real symmetric matrix `[[Re, −Im], [Im, Re]]`, whose spectrum is the
/// Hermitian spectrum with doubled multiplicity.
pub fn jacobi_min_eigenvalue(h: &[Vec<C64>]) -> f64 {
    let n = h.len();
    let size = 2 * n;
    let mut a = vec![vec![0.0_f64; size]; size];
    for i in 0..n {
        for j in 0..n {
            let z = h[i][j];
            a[i][j] = z.re;
            a[i + n][j + n] = z.re;
            a[i][j + n] = -z.im;
            a[i + n][j] = z.im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..size).flat_map(|i| (0..size).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..size {
            for q in (p + 1)..size {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (row_p, row_q) = (a[p].clone(), a[q].clone());
                for k in 0..size {
                    a[p][k] = c * row_p[k] - s * row_q[k];
                    a[q][k] = s * row_p[k] + c * row_q[k];
                }
            }
        }
    }
    (0..size).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}
