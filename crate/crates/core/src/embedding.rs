//! Ancilla embeddings between `H_A ⊗ H_B` and `(H_A ⊗ K^k) ⊗ (H_B ⊗ K^k)`.
//!
//! Lifting sends a pure state of Schmidt rank at most `k` to a product state
//! of the enlarged space and an operator `S` to `Σ_{s,t} S ⊗ |ss⟩⟨tt|`, so
//! that expectation values agree. Lowering goes the other way: it contracts
//! the two ancillas against `Σ_i |ii⟩`, which yields states of Schmidt rank at
//! most `k` for product inputs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{Dims, Operator, PureState, Split, C64, ZERO};

/// Relative cutoff below which Schmidt terms are dropped before lifting.
/// Tight enough that dropping them stays far below the round-trip tolerance.
pub const LIFT_CUTOFF: f64 = 1e-12;

/// A lifted pure state together with the data of its pre-image.
#[derive(Clone, Debug)]
pub struct LiftedState {
    pub state: PureState,
    /// Schmidt rank of the source state.
    pub source_rank: usize,
    /// Number of Schmidt-term blocks, `ceil(source_rank / k)`.
    pub block_count: usize,
}

/// A lifted operator and its source.
#[derive(Clone, Debug)]
pub struct LiftedOperator {
    pub operator: Operator,
    pub source: Operator,
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::param("ancilla dimension k must be at least 1"));
    }
    Ok(())
}

fn require_base(dims: &Dims, what: &str) -> Result<()> {
    if !dims.is_base() {
        return Err(Error::dims(format!("{what} must live on the unextended space, got {dims}")));
    }
    Ok(())
}

/// Lifts `ψ = Σ λ_i |a_i b_i⟩` into the enlarged space.
///
/// Schmidt terms are grouped into consecutive blocks of `k`; block `β`
/// contributes `(Σ_{i∈β} |a_i⟩|i−off⟩) ⊗ (Σ_{j∈β} λ_j |b_j⟩|j−off⟩)`. A state
/// of rank at most `k` therefore becomes a single product term.
pub fn lift_state(psi: &PureState, k: usize) -> Result<LiftedState> {
    check_k(k)?;
    let base = psi.dims();
    require_base(&base, "lifted state")?;
    let sf = psi.schmidt_decompose(Split::Parties)?;
    let n = sf.rank_with(LIFT_CUTOFF);
    let dims = base.lifted(k)?;
    let (d_a, d_b) = (base.d_a(), base.d_b());
    let local_b = d_b * k;

    let block_count = n.div_ceil(k);
    let mut out = DVector::<C64>::zeros(dims.total());
    for block in 0..block_count {
        let start = block * k;
        let end = (start + k).min(n);
        let mut party_a = DVector::<C64>::zeros(d_a * k);
        let mut party_b = DVector::<C64>::zeros(local_b);
        for r in start..end {
            let s = r - start;
            let lam = C64::from(sf.coefficients[r]);
            for i in 0..d_a {
                party_a[i * k + s] += sf.basis_a[r][i];
            }
            for j in 0..d_b {
                party_b[j * k + s] += lam * sf.basis_b[r][j];
            }
        }
        out += party_a.kronecker(&party_b);
    }
    Ok(LiftedState { state: PureState::from_vector(dims, out)?, source_rank: n, block_count })
}

/// `𝕊_k = Σ_{s,t=1..k} S ⊗ |ss⟩⟨tt|` written in the global index order.
pub fn lift_operator(s: &Operator, k: usize) -> Result<LiftedOperator> {
    check_k(k)?;
    let base = s.dims();
    require_base(&base, "lifted operator")?;
    let dims = base.lifted(k)?;
    let (d_a, d_b) = (base.d_a(), base.d_b());
    let n = dims.total();
    let src = s.matrix();
    let mut m = DMatrix::<C64>::zeros(n, n);
    let index = |i: usize, s: usize, j: usize, t: usize| ((i * k + s) * d_b + j) * k + t;
    for i in 0..d_a {
        for j in 0..d_b {
            let row_src = i * d_b + j;
            for l in 0..d_a {
                for mm in 0..d_b {
                    let v = src[(row_src, l * d_b + mm)];
                    if v == ZERO {
                        continue;
                    }
                    for a1 in 0..k {
                        let row = index(i, a1, j, a1);
                        for a2 in 0..k {
                            m[(row, index(l, a2, mm, a2))] = v;
                        }
                    }
                }
            }
        }
    }
    let operator = if s.is_hermitian() {
        Operator::hermitian(dims, m)?
    } else {
        Operator::new(dims, m)?
    };
    Ok(LiftedOperator { operator, source: s.clone() })
}

/// Lowers a product `|A⟩ ⊗ |B⟩` of party vectors with ancilla dimension `k`.
///
/// Each factor is Schmidt-decomposed across its own system/ancilla split,
/// `A = Σ λ_l |a_l⟩|c_l⟩` and `B = Σ μ_m |b_m⟩|d_m⟩`, and the result is
/// `Σ_{l,m} F_{lm} λ_l μ_m |a_l b_m⟩` with `F_{lm} = Σ_i ⟨ii|c_l d_m⟩`.
pub fn lower_product_state(a: &PureState, b: &PureState, k: usize) -> Result<PureState> {
    check_k(k)?;
    let (da, db) = (a.dims(), b.dims());
    if da.local_b() != 1 || db.local_a() != 1 {
        return Err(Error::dims(format!(
            "lowering expects a party-A and a party-B vector, got {da} and {db}"
        )));
    }
    if da.k_a() != k || db.k_b() != k {
        return Err(Error::dims(format!(
            "ancilla dimensions {} and {} do not match k = {k}",
            da.k_a(),
            db.k_b()
        )));
    }
    let out_dims = Dims::new(da.d_a(), db.d_b())?;
    if a.norm_sqr() == 0.0 || b.norm_sqr() == 0.0 {
        return Ok(PureState::zeros(out_dims));
    }
    let sa = a.schmidt_decompose(Split::InternalA)?;
    let sb = b.schmidt_decompose(Split::InternalB)?;

    let mut out = DVector::<C64>::zeros(out_dims.total());
    for (lam, (a_l, c_l)) in sa.coefficients.iter().zip(sa.basis_a.iter().zip(&sa.basis_b)) {
        if *lam == 0.0 {
            continue;
        }
        for (mu, (b_m, d_m)) in sb.coefficients.iter().zip(sb.basis_a.iter().zip(&sb.basis_b)) {
            if *mu == 0.0 {
                continue;
            }
            let f: C64 = c_l.iter().zip(d_m.iter()).map(|(x, y)| x * y).sum();
            let w = f * (lam * mu);
            if w == ZERO {
                continue;
            }
            out += a_l.kronecker(b_m) * w;
        }
    }
    PureState::from_vector(out_dims, out)
}

/// Lowers an arbitrary enlarged-space state term by term along its
/// Schmidt decomposition across the party split.
pub fn lower_state(psi: &PureState, k: usize) -> Result<PureState> {
    check_k(k)?;
    let dims = psi.dims();
    if dims.k_a() != k || dims.k_b() != k {
        return Err(Error::dims(format!("lowering with k = {k} needs ancillas of size k, got {dims}")));
    }
    let base = dims.base();
    if psi.norm_sqr() == 0.0 {
        return Ok(PureState::zeros(base));
    }
    let sf = psi.schmidt_decompose(Split::Parties)?;
    let mut out = DVector::<C64>::zeros(base.total());
    for (lam, (a, b)) in sf.coefficients.iter().zip(sf.basis_a.iter().zip(&sf.basis_b)) {
        if *lam == 0.0 {
            continue;
        }
        let pa = PureState::on_party_a(dims.d_a(), k, a.clone())?;
        let pb = PureState::on_party_b(dims.d_b(), k, b.clone())?;
        let term = lower_product_state(&pa, &pb, k)?;
        out += term.amplitudes() * C64::from(*lam);
    }
    PureState::from_vector(base, out)
}

fn check_weights(ensemble: &[(f64, PureState)]) -> Result<Dims> {
    let first = ensemble
        .first()
        .ok_or_else(|| Error::param("ensemble must contain at least one state"))?;
    for (p, s) in ensemble {
        if !p.is_finite() || *p < 0.0 {
            return Err(Error::param(format!("ensemble weight {p} is not a non-negative number")));
        }
        if s.dims() != first.1.dims() {
            return Err(Error::dims(format!(
                "ensemble mixes dims {} and {}",
                first.1.dims(),
                s.dims()
            )));
        }
    }
    Ok(first.1.dims())
}

fn mixture(dims: Dims, vectors: impl Iterator<Item = (f64, PureState)>) -> Result<Operator> {
    let n = dims.total();
    let mut m = DMatrix::<C64>::zeros(n, n);
    for (p, v) in vectors {
        let a = v.amplitudes();
        m += a * a.adjoint() * C64::from(p);
    }
    Operator::hermitian(dims, m)
}

/// `Γ_k = Σ p_i |I_k(φ_i)⟩⟨I_k(φ_i)|`, left unnormalized.
pub fn lift_ensemble(ensemble: &[(f64, PureState)], k: usize) -> Result<Operator> {
    check_k(k)?;
    let dims = check_weights(ensemble)?;
    require_base(&dims, "ensemble")?;
    let lifted = ensemble
        .iter()
        .map(|(p, s)| Ok((*p, lift_state(s, k)?.state)))
        .collect::<Result<Vec<_>>>()?;
    mixture(dims.lifted(k)?, lifted.into_iter())
}

/// `θ = Σ p_i |J_k(Φ_i)⟩⟨J_k(Φ_i)|` for an ensemble on the enlarged space.
pub fn lower_ensemble(ensemble: &[(f64, PureState)], k: usize) -> Result<Operator> {
    check_k(k)?;
    let dims = check_weights(ensemble)?;
    let lowered = ensemble
        .iter()
        .map(|(p, s)| Ok((*p, lower_state(s, k)?)))
        .collect::<Result<Vec<_>>>()?;
    mixture(dims.base(), lowered.into_iter())
}
