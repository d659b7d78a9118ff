//! Dimension-aware linear algebra for bipartite pure states and Hermitian
//! operators.
//!
//! Every vector and matrix uses one global index convention. A basis state
//! `|i_A⟩|s_A⟩|j_B⟩|t_B⟩` (system A, ancilla of A, system B, ancilla of B)
//! sits at
//!
//! ```text
//! ((i_A * k_A + s_A) * d_B + j_B) * k_B + t_B
//! ```
//!
//! so the space factors as `(A ⊗ K_A) ⊗ (B ⊗ K_B)` with the A-side index
//! running slowest. Without ancillas (`k_A = k_B = 1`) this is the usual
//! row-major `i * d_B + j`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub type C64 = Complex64;

/// Entrywise tolerance for the Hermitian flag.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance on the squared norm of states flagged as normalized.
pub const NORM_TOL: f64 = 1e-10;
/// Relative Schmidt-rank cutoff used when none is given.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;
/// Largest imaginary residue tolerated in an expectation value.
pub const IMAG_TOL: f64 = 1e-8;

const PHASE_TOL: f64 = 1e-12;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Local dimensions of a bipartite space, optionally extended by one
/// ancilla on each side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDims", into = "RawDims")]
pub struct Dims {
    d_a: usize,
    d_b: usize,
    k_a: usize,
    k_b: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDims {
    #[serde(rename = "dA")]
    d_a: usize,
    #[serde(rename = "dB")]
    d_b: usize,
    #[serde(rename = "kA", default = "one")]
    k_a: usize,
    #[serde(rename = "kB", default = "one")]
    k_b: usize,
}

fn one() -> usize {
    1
}

impl TryFrom<RawDims> for Dims {
    type Error = Error;

    fn try_from(raw: RawDims) -> Result<Self> {
        Dims::with_ancillas(raw.d_a, raw.d_b, raw.k_a, raw.k_b)
    }
}

impl From<Dims> for RawDims {
    fn from(d: Dims) -> Self {
        RawDims { d_a: d.d_a, d_b: d.d_b, k_a: d.k_a, k_b: d.k_b }
    }
}

impl Dims {
    pub fn new(d_a: usize, d_b: usize) -> Result<Self> {
        Self::with_ancillas(d_a, d_b, 1, 1)
    }

    pub fn with_ancillas(d_a: usize, d_b: usize, k_a: usize, k_b: usize) -> Result<Self> {
        if d_a == 0 || d_b == 0 || k_a == 0 || k_b == 0 {
            return Err(Error::dims(format!(
                "all dimensions must be positive, got dA={d_a} dB={d_b} kA={k_a} kB={k_b}"
            )));
        }
        Ok(Dims { d_a, d_b, k_a, k_b })
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn k_a(&self) -> usize {
        self.k_a
    }

    pub fn k_b(&self) -> usize {
        self.k_b
    }

    /// Dimension of the A party including its ancilla.
    pub fn local_a(&self) -> usize {
        self.d_a * self.k_a
    }

    /// Dimension of the B party including its ancilla.
    pub fn local_b(&self) -> usize {
        self.d_b * self.k_b
    }

    pub fn total(&self) -> usize {
        self.local_a() * self.local_b()
    }

    /// True when neither side carries an ancilla.
    pub fn is_base(&self) -> bool {
        self.k_a == 1 && self.k_b == 1
    }

    /// The same systems with both ancillas of dimension `k`.
    pub fn lifted(&self, k: usize) -> Result<Dims> {
        if k == 0 {
            return Err(Error::param("ancilla dimension must be at least 1"));
        }
        Dims::with_ancillas(self.d_a, self.d_b, k, k)
    }

    /// The systems with the ancillas stripped.
    pub fn base(&self) -> Dims {
        Dims { d_a: self.d_a, d_b: self.d_b, k_a: 1, k_b: 1 }
    }

    /// Dims of a vector living on the A party alone (`A ⊗ K_A`).
    pub fn factor_a(&self) -> Dims {
        Dims { d_a: self.d_a, d_b: 1, k_a: self.k_a, k_b: 1 }
    }

    /// Dims of a vector living on the B party alone (`B ⊗ K_B`).
    pub fn factor_b(&self) -> Dims {
        Dims { d_a: 1, d_b: self.d_b, k_a: 1, k_b: self.k_b }
    }

    fn check_same(&self, other: &Dims, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::dims(format!("{what}: {self} vs {other}")));
        }
        Ok(())
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}·{})x({}·{})", self.d_a, self.k_a, self.d_b, self.k_b)
    }
}

/// One of the two parties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// Which bipartition a Schmidt decomposition is taken across.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    /// `(A ⊗ K_A) | (B ⊗ K_B)`.
    Parties,
    /// `A | K_A` for a vector on the A party alone.
    InternalA,
    /// `B | K_B` for a vector on the B party alone.
    InternalB,
}

/// Complex amplitude vector with dimension metadata. Lifted states are
/// deliberately left unnormalized, so normalization is a flag rather than
/// an invariant of the type.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    dims: Dims,
    amplitudes: DVector<C64>,
    normalized: bool,
}

impl PureState {
    pub fn new(dims: Dims, amplitudes: Vec<C64>) -> Result<Self> {
        Self::from_vector(dims, DVector::from_vec(amplitudes))
    }

    pub fn from_vector(dims: Dims, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != dims.total() {
            return Err(Error::dims(format!(
                "state of length {} does not fit dims {dims} (total {})",
                amplitudes.len(),
                dims.total()
            )));
        }
        let normalized = (amplitudes.norm_squared() - 1.0).abs() <= NORM_TOL;
        Ok(PureState { dims, amplitudes, normalized })
    }

    /// Builds a state and rescales it to unit norm.
    pub fn normalized(dims: Dims, amplitudes: Vec<C64>) -> Result<Self> {
        Self::new(dims, amplitudes)?.into_normalized()
    }

    pub fn into_normalized(mut self) -> Result<Self> {
        let n = self.amplitudes.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateState("cannot normalize a zero vector".into()));
        }
        self.amplitudes.unscale_mut(n);
        self.normalized = true;
        Ok(self)
    }

    pub fn zeros(dims: Dims) -> Self {
        PureState { dims, amplitudes: DVector::zeros(dims.total()), normalized: false }
    }

    pub fn basis(dims: Dims, index: usize) -> Result<Self> {
        if index >= dims.total() {
            return Err(Error::dims(format!("basis index {index} out of range for {dims}")));
        }
        let mut v = DVector::zeros(dims.total());
        v[index] = ONE;
        Ok(PureState { dims, amplitudes: v, normalized: true })
    }

    /// Vector on the A party alone: `A ⊗ K_A` with `k_a` ancilla levels.
    pub fn on_party_a(d_a: usize, k_a: usize, amplitudes: DVector<C64>) -> Result<Self> {
        Self::from_vector(Dims::with_ancillas(d_a, 1, k_a, 1)?, amplitudes)
    }

    /// Vector on the B party alone: `B ⊗ K_B` with `k_b` ancilla levels.
    pub fn on_party_b(d_b: usize, k_b: usize, amplitudes: DVector<C64>) -> Result<Self> {
        Self::from_vector(Dims::with_ancillas(1, d_b, 1, k_b)?, amplitudes)
    }

    /// `|a⟩ ⊗ |b⟩` for `a` on the A party and `b` on the B party.
    pub fn product(a: &PureState, b: &PureState) -> Result<Self> {
        if a.dims.local_b() != 1 || b.dims.local_a() != 1 {
            return Err(Error::dims(format!(
                "product expects a party-A vector and a party-B vector, got {} and {}",
                a.dims, b.dims
            )));
        }
        let dims = Dims::with_ancillas(a.dims.d_a, b.dims.d_b, a.dims.k_a, b.dims.k_b)?;
        let amplitudes = a.amplitudes.kronecker(&b.amplitudes);
        Ok(PureState { dims, amplitudes, normalized: a.normalized && b.normalized })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        self.dims.check_same(&other.dims, "inner product")?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn scaled(&self, c: C64) -> PureState {
        let amplitudes = &self.amplitudes * c;
        let normalized = (amplitudes.norm_squared() - 1.0).abs() <= NORM_TOL;
        PureState { dims: self.dims, amplitudes, normalized }
    }

    /// Euclidean distance `‖self − other‖`.
    pub fn distance(&self, other: &PureState) -> Result<f64> {
        self.dims.check_same(&other.dims, "distance")?;
        Ok((&self.amplitudes - &other.amplitudes).norm())
    }

    /// Reshapes the amplitudes into the coefficient matrix of a split.
    pub fn coefficient_matrix(&self, split: Split) -> Result<DMatrix<C64>> {
        let (rows, cols) = split_shape(&self.dims, split)?;
        Ok(DMatrix::from_fn(rows, cols, |r, c| self.amplitudes[r * cols + c]))
    }

    pub fn schmidt_decompose(&self, split: Split) -> Result<SchmidtForm> {
        SchmidtForm::of(self, split)
    }

    /// Number of Schmidt coefficients (across the party split) strictly
    /// above `tol · λ₁`.
    pub fn schmidt_rank(&self, tol: f64) -> Result<usize> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::param(format!("rank tolerance must be positive, got {tol}")));
        }
        Ok(self.schmidt_decompose(Split::Parties)?.rank_with(tol))
    }

    pub fn projector(&self) -> Operator {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        Operator::from_parts(self.dims, hermitize(m), true)
    }
}

fn split_shape(dims: &Dims, split: Split) -> Result<(usize, usize)> {
    match split {
        Split::Parties => Ok((dims.local_a(), dims.local_b())),
        Split::InternalA => {
            if dims.local_b() != 1 {
                return Err(Error::dims(format!(
                    "internal A split needs a party-A vector, got {dims}"
                )));
            }
            Ok((dims.d_a, dims.k_a))
        }
        Split::InternalB => {
            if dims.local_a() != 1 {
                return Err(Error::dims(format!(
                    "internal B split needs a party-B vector, got {dims}"
                )));
            }
            Ok((dims.d_b, dims.k_b))
        }
    }
}

/// Schmidt decomposition `Σ λ_i |a_i⟩|b_i⟩` of a vector across a split.
///
/// Coefficients are sorted descending. The first entry of each `|a_i⟩` with
/// modulus above `1e-12` is real and non-negative; the compensating phase
/// sits in `|b_i⟩`.
#[derive(Clone, Debug)]
pub struct SchmidtForm {
    pub coefficients: Vec<f64>,
    pub basis_a: Vec<DVector<C64>>,
    pub basis_b: Vec<DVector<C64>>,
    pub rank: usize,
}

impl SchmidtForm {
    fn of(psi: &PureState, split: Split) -> Result<Self> {
        let m = psi.coefficient_matrix(split)?;
        if m.iter().all(|z| *z == ZERO) {
            return Err(Error::DegenerateState("Schmidt decomposition of the zero vector".into()));
        }
        let (u, sv, v_t) = linalg::svd(&m)?;

        let mut order: Vec<usize> = (0..sv.len()).collect();
        order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]).then(i.cmp(&j)));

        let mut coefficients = Vec::with_capacity(order.len());
        let mut basis_a = Vec::with_capacity(order.len());
        let mut basis_b = Vec::with_capacity(order.len());
        for &i in &order {
            let mut a: DVector<C64> = u.column(i).into_owned();
            let mut b: DVector<C64> = v_t.row(i).transpose();
            if let Some(lead) = a.iter().find(|z| z.norm() > PHASE_TOL).copied() {
                let phase = lead / lead.norm();
                a *= phase.conj();
                b *= phase;
            }
            coefficients.push(sv[i].max(0.0));
            basis_a.push(a);
            basis_b.push(b);
        }
        let mut form = SchmidtForm { coefficients, basis_a, basis_b, rank: 0 };
        form.rank = form.rank_with(DEFAULT_RANK_TOL);
        Ok(form)
    }

    /// Count of coefficients strictly above `tol · λ₁`.
    pub fn rank_with(&self, tol: f64) -> usize {
        let lead = self.coefficients.first().copied().unwrap_or(0.0);
        self.coefficients.iter().filter(|&&l| l > tol * lead).count()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.iter().map(|l| l * l).sum()
    }

    /// `Σ λ_i |a_i⟩ ⊗ |b_i⟩` in the split's index order, which coincides
    /// with the amplitude order of the source state.
    pub fn reconstruct(&self) -> DVector<C64> {
        let rows = self.basis_a.first().map_or(0, |a| a.len());
        let cols = self.basis_b.first().map_or(0, |b| b.len());
        let mut out = DVector::zeros(rows * cols);
        for ((l, a), b) in self.coefficients.iter().zip(&self.basis_a).zip(&self.basis_b) {
            out += a.kronecker(b) * C64::from(*l);
        }
        out
    }
}

/// Square complex matrix with dimension metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dims: Dims,
    matrix: DMatrix<C64>,
    hermitian: bool,
}

impl Operator {
    /// Wraps a matrix, flagging it Hermitian when `max |M − M†| < 1e-10`.
    pub fn new(dims: Dims, matrix: DMatrix<C64>) -> Result<Self> {
        check_square(&dims, &matrix)?;
        let hermitian = hermitian_deviation(&matrix) < HERMITIAN_TOL;
        Ok(Operator { dims, matrix, hermitian })
    }

    /// Wraps a matrix that must be Hermitian; the stored matrix is made
    /// exactly Hermitian by averaging with its adjoint.
    pub fn hermitian(dims: Dims, matrix: DMatrix<C64>) -> Result<Self> {
        check_square(&dims, &matrix)?;
        let deviation = hermitian_deviation(&matrix);
        if deviation >= HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Operator { dims, matrix: hermitize(matrix), hermitian: true })
    }

    pub(crate) fn from_parts(dims: Dims, matrix: DMatrix<C64>, hermitian: bool) -> Self {
        debug_assert_eq!(matrix.nrows(), dims.total());
        Operator { dims, matrix, hermitian }
    }

    pub fn identity(dims: Dims) -> Self {
        Operator { dims, matrix: DMatrix::identity(dims.total(), dims.total()), hermitian: true }
    }

    pub fn zeros(dims: Dims) -> Self {
        Operator { dims, matrix: DMatrix::zeros(dims.total(), dims.total()), hermitian: true }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn require_hermitian(&self) -> Result<()> {
        if self.hermitian {
            Ok(())
        } else {
            Err(Error::NotHermitian { deviation: hermitian_deviation(&self.matrix) })
        }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn scaled(&self, factor: f64) -> Operator {
        Operator {
            dims: self.dims,
            matrix: &self.matrix * C64::from(factor),
            hermitian: self.hermitian,
        }
    }

    /// `alpha · self + beta · other`.
    pub fn combine(&self, alpha: f64, other: &Operator, beta: f64) -> Result<Operator> {
        self.dims.check_same(&other.dims, "operator combination")?;
        let matrix = &self.matrix * C64::from(alpha) + &other.matrix * C64::from(beta);
        let hermitian = self.hermitian && other.hermitian;
        let matrix = if hermitian { hermitize(matrix) } else { matrix };
        Ok(Operator { dims: self.dims, matrix, hermitian })
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        self.dims.check_same(&other.dims, "operator difference")?;
        Ok(self
            .matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.require_hermitian()?;
        Ok(linalg::eigh(&self.matrix)?.0)
    }

    /// Smallest eigenvalue with a unit eigenvector.
    pub fn min_eigenpair(&self) -> Result<(f64, PureState)> {
        self.require_hermitian()?;
        let (value, vector) = min_eigenpair_of(&self.matrix)?;
        Ok((value, PureState { dims: self.dims, amplitudes: vector, normalized: true }))
    }

    /// `⟨ψ|W|ψ⟩` for a possibly unnormalized `ψ`.
    pub fn expectation(&self, psi: &PureState) -> Result<f64> {
        self.dims.check_same(&psi.dims, "expectation")?;
        let v = psi.amplitudes.dotc(&(&self.matrix * &psi.amplitudes));
        if v.im.abs() > IMAG_TOL * psi.norm_sqr().max(1.0) {
            return Err(Error::NotHermitian { deviation: v.im.abs() });
        }
        Ok(v.re)
    }

    /// `Tr(W ρ)`.
    pub fn trace_pair(&self, rho: &Operator) -> Result<f64> {
        self.dims.check_same(&rho.dims, "trace pairing")?;
        self.require_hermitian()?;
        rho.require_hermitian()?;
        let n = self.matrix.nrows();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += self.matrix[(i, j)] * rho.matrix[(j, i)];
            }
        }
        if acc.im.abs() > IMAG_TOL * acc.re.abs().max(1.0) {
            return Err(Error::NotHermitian { deviation: acc.im.abs() });
        }
        Ok(acc.re)
    }

    /// `⟨e|W|e⟩` for `e` on the selected party; the result acts on the
    /// other party.
    pub fn partial_expectation(&self, e: &PureState, side: Side) -> Result<Operator> {
        let (n_a, n_b) = (self.dims.local_a(), self.dims.local_b());
        let expected = match side {
            Side::A => self.dims.factor_a(),
            Side::B => self.dims.factor_b(),
        };
        expected.check_same(&e.dims, "partial expectation vector")?;
        let m = partial_expectation_matrix(&self.matrix, n_a, n_b, &e.amplitudes, side);
        let dims = match side {
            Side::A => self.dims.factor_b(),
            Side::B => self.dims.factor_a(),
        };
        if self.hermitian {
            Ok(Operator { dims, matrix: hermitize(m), hermitian: true })
        } else {
            Operator::new(dims, m)
        }
    }

    /// Transposes the indices of the selected party (system and ancilla
    /// together).
    pub fn partial_transpose(&self, side: Side) -> Result<Operator> {
        let (n_a, n_b) = (self.dims.local_a(), self.dims.local_b());
        let n = self.dims.total();
        let m = DMatrix::from_fn(n, n, |row, col| {
            let (x, y) = (row / n_b, row % n_b);
            let (xp, yp) = (col / n_b, col % n_b);
            match side {
                Side::A => self.matrix[(xp * n_b + y, x * n_b + yp)],
                Side::B => self.matrix[(x * n_b + yp, xp * n_b + y)],
            }
        });
        debug_assert_eq!(n, n_a * n_b);
        Ok(Operator { dims: self.dims, matrix: m, hermitian: self.hermitian })
    }
}

fn check_square(dims: &Dims, m: &DMatrix<C64>) -> Result<()> {
    let n = dims.total();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::dims(format!(
            "matrix is {}x{} but dims {dims} need {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub(crate) fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(M + M†)/2`, which is exactly Hermitian in floating point.
pub(crate) fn hermitize(m: DMatrix<C64>) -> DMatrix<C64> {
    let adj = m.adjoint();
    (m + adj) * C64::from(0.5)
}

/// `⟨e|M|e⟩` contracted over one party of an `n_a x n_b` split.
pub(crate) fn partial_expectation_matrix(
    m: &DMatrix<C64>,
    n_a: usize,
    n_b: usize,
    e: &DVector<C64>,
    side: Side,
) -> DMatrix<C64> {
    match side {
        Side::A => {
            let mut out = DMatrix::zeros(n_b, n_b);
            for x in 0..n_a {
                let ex = e[x].conj();
                if ex == ZERO {
                    continue;
                }
                for xp in 0..n_a {
                    let w = ex * e[xp];
                    if w == ZERO {
                        continue;
                    }
                    for y in 0..n_b {
                        let row = x * n_b + y;
                        for yp in 0..n_b {
                            out[(y, yp)] += w * m[(row, xp * n_b + yp)];
                        }
                    }
                }
            }
            out
        }
        Side::B => {
            let mut out = DMatrix::zeros(n_a, n_a);
            for y in 0..n_b {
                let fy = e[y].conj();
                if fy == ZERO {
                    continue;
                }
                for yp in 0..n_b {
                    let w = fy * e[yp];
                    if w == ZERO {
                        continue;
                    }
                    for x in 0..n_a {
                        let row = x * n_b + y;
                        for xp in 0..n_a {
                            out[(x, xp)] += w * m[(row, xp * n_b + yp)];
                        }
                    }
                }
            }
            out
        }
    }
}

/// Smallest eigenvalue and unit eigenvector of a Hermitian matrix. The
/// eigenvector's first significant entry is made real and positive so the
/// output is a deterministic function of the input.
pub(crate) fn min_eigenpair_of(m: &DMatrix<C64>) -> Result<(f64, DVector<C64>)> {
    let (values, vectors) = linalg::eigh(m)?;
    let value = values[0];
    let mut v = linalg::column(&vectors, 0);
    let n = v.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::Numerical("degenerate eigenvector".into()));
    }
    v.unscale_mut(n);
    fix_phase(&mut v);
    Ok((value, v))
}

pub(crate) fn fix_phase(v: &mut DVector<C64>) {
    if let Some(lead) = v.iter().find(|z| z.norm() > PHASE_TOL).copied() {
        *v *= (lead / lead.norm()).conj();
    }
}

#[cfg(test)]
#[allow(clippy::identity_op)]
mod tests {
    use super::*;
    use crate::random::{random_unit_vector, rng_for};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn bell(d: usize) -> PureState {
        let dims = Dims::new(d, d).unwrap();
        let mut v = vec![ZERO; d * d];
        for i in 0..d {
            v[i * d + i] = c(1.0 / (d as f64).sqrt());
        }
        PureState::new(dims, v).unwrap()
    }

    fn random_state(dims: Dims, seed: u64) -> PureState {
        let mut rng = rng_for(seed, 0);
        PureState::from_vector(dims, random_unit_vector(&mut rng, dims.total())).unwrap()
    }

    fn random_herm(dims: Dims, seed: u64) -> Operator {
        let mut rng = rng_for(seed, 1);
        let n = dims.total();
        let cols: Vec<DVector<C64>> = (0..n).map(|_| random_unit_vector(&mut rng, n)).collect();
        Operator::hermitian(dims, hermitize(DMatrix::from_columns(&cols))).unwrap()
    }

    /// Reduced operator `Tr_B |ψ⟩⟨ψ|` built directly from amplitudes.
    fn reduced_a(psi: &PureState) -> DMatrix<C64> {
        let (n_a, n_b) = (psi.dims().local_a(), psi.dims().local_b());
        let a = psi.amplitudes();
        DMatrix::from_fn(n_a, n_a, |x, xp| {
            (0..n_b).map(|y| a[x * n_b + y] * a[xp * n_b + y].conj()).sum()
        })
    }

    #[test]
    fn dims_reject_zero() {
        assert!(matches!(Dims::new(0, 2), Err(Error::Dimension(_))));
        assert!(Dims::with_ancillas(2, 2, 0, 1).is_err());
        let d = Dims::with_ancillas(3, 2, 2, 4).unwrap();
        assert_eq!(d.total(), 3 * 2 * 2 * 4);
    }

    #[test]
    fn dims_json_field_names() {
        let d: Dims = serde_json::from_str(r#"{"dA":3,"dB":3,"kA":2,"kB":2}"#).unwrap();
        assert_eq!(d, Dims::with_ancillas(3, 3, 2, 2).unwrap());
        let base: Dims = serde_json::from_str(r#"{"dA":2,"dB":3}"#).unwrap();
        assert!(base.is_base());
        assert!(serde_json::from_str::<Dims>(r#"{"dA":0,"dB":3}"#).is_err());
    }

    #[test]
    fn index_convention_matches_tensor_order() {
        let dims = Dims::with_ancillas(2, 3, 2, 2).unwrap();
        // |iA=1, sA=0, jB=2, tB=1⟩
        let a = PureState::on_party_a(2, 2, DVector::from_fn(4, |r, _| if r == 2 { ONE } else { ZERO })).unwrap();
        let b = PureState::on_party_b(3, 2, DVector::from_fn(6, |r, _| if r == 5 { ONE } else { ZERO })).unwrap();
        let ab = PureState::product(&a, &b).unwrap();
        assert_eq!(ab.dims(), dims);
        let idx = ((1 * 2 + 0) * 3 + 2) * 2 + 1;
        assert_eq!(ab.amplitudes()[idx], ONE);
        assert_abs_diff_eq!(ab.norm_sqr(), 1.0);
    }

    #[test]
    fn schmidt_of_product_state() {
        let dims = Dims::new(2, 2).unwrap();
        let psi = PureState::basis(dims, 0).unwrap();
        let sf = psi.schmidt_decompose(Split::Parties).unwrap();
        assert_eq!(sf.rank, 1);
        assert_abs_diff_eq!(sf.coefficients[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn schmidt_of_maximally_entangled() {
        let sf = bell(3).schmidt_decompose(Split::Parties).unwrap();
        assert_eq!(sf.rank, 3);
        for l in &sf.coefficients {
            assert_abs_diff_eq!(*l, 1.0 / 3f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn schmidt_zero_vector_is_degenerate() {
        let z = PureState::zeros(Dims::new(2, 3).unwrap());
        assert!(matches!(z.schmidt_decompose(Split::Parties), Err(Error::DegenerateState(_))));
        assert!(matches!(z.schmidt_rank(1e-8), Err(Error::DegenerateState(_))));
    }

    #[test]
    fn schmidt_internal_split_needs_single_party() {
        let psi = bell(2);
        assert!(matches!(psi.schmidt_decompose(Split::InternalA), Err(Error::Dimension(_))));
        let a = PureState::on_party_a(3, 2, DVector::from_element(6, c(1.0))).unwrap();
        let sf = a.schmidt_decompose(Split::InternalA).unwrap();
        assert_eq!(sf.rank, 1);
        assert_abs_diff_eq!(sf.norm_sqr(), 6.0, epsilon = 1e-12);
    }

    #[test]
    fn schmidt_squares_match_reduced_spectrum() {
        let dims = Dims::new(3, 3).unwrap();
        for seed in 0..50 {
            let psi = random_state(dims, seed);
            let sf = psi.schmidt_decompose(Split::Parties).unwrap();
            let mut oracle: Vec<f64> =
                nalgebra::SymmetricEigen::new(reduced_a(&psi)).eigenvalues.iter().copied().collect();
            oracle.sort_by(|a, b| b.total_cmp(a));
            for (l, ev) in sf.coefficients.iter().zip(&oracle) {
                assert_abs_diff_eq!(l * l, *ev, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn schmidt_rank_examples() {
        let dims = Dims::new(2, 2).unwrap();
        assert_eq!(PureState::basis(dims, 1).unwrap().schmidt_rank(1e-8).unwrap(), 1);
        assert_eq!(bell(2).schmidt_rank(1e-8).unwrap(), 2);
        let tiny = PureState::new(dims, vec![c(1.0), ZERO, ZERO, c(1e-9)]).unwrap();
        assert_eq!(tiny.schmidt_rank(1e-6).unwrap(), 1);
        assert!(matches!(tiny.schmidt_rank(0.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn schmidt_phase_convention() {
        let dims = Dims::new(3, 2).unwrap();
        let sf = random_state(dims, 9).schmidt_decompose(Split::Parties).unwrap();
        for a in &sf.basis_a {
            let lead = a.iter().find(|z| z.norm() > 1e-12).unwrap();
            assert!(lead.im.abs() < 1e-15 && lead.re > 0.0);
        }
    }

    #[test]
    fn partial_expectation_of_identity() {
        let dims = Dims::new(3, 3).unwrap();
        let w = Operator::identity(dims).scaled(1.0 / 9.0);
        let mut rng = rng_for(3, 0);
        let e = PureState::on_party_a(3, 1, random_unit_vector(&mut rng, 3)).unwrap();
        let r = w.partial_expectation(&e, Side::A).unwrap();
        let expect = Operator::identity(dims.factor_b()).scaled(1.0 / 9.0);
        assert!(r.max_abs_diff(&expect).unwrap() < 1e-14);
        assert_eq!(r.dims().local_b(), 3);
    }

    #[test]
    fn partial_expectation_dimension_mismatch() {
        let w = Operator::identity(Dims::new(3, 3).unwrap());
        let e = PureState::on_party_a(2, 1, DVector::from_element(2, ONE)).unwrap();
        assert!(matches!(w.partial_expectation(&e, Side::A), Err(Error::Dimension(_))));
    }

    #[test]
    fn partial_expectation_both_sides_agree_with_full() {
        let dims = Dims::with_ancillas(2, 3, 2, 1).unwrap();
        let w = random_herm(dims, 5);
        let mut rng = rng_for(5, 7);
        let a = PureState::on_party_a(2, 2, random_unit_vector(&mut rng, 4)).unwrap();
        let b = PureState::on_party_b(3, 1, random_unit_vector(&mut rng, 3)).unwrap();
        let full = w.expectation(&PureState::product(&a, &b).unwrap()).unwrap();
        let via_a = w.partial_expectation(&a, Side::A).unwrap().expectation(&b).unwrap();
        let via_b = w.partial_expectation(&b, Side::B).unwrap().expectation(&a).unwrap();
        assert_abs_diff_eq!(full, via_a, epsilon = 1e-13);
        assert_abs_diff_eq!(full, via_b, epsilon = 1e-13);
    }

    #[test]
    fn min_eigenpair_examples() {
        let dims = Dims::new(3, 1).unwrap();
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![c(3.0), c(-2.0), c(5.0)]));
        let (v, e) = Operator::hermitian(dims, m).unwrap().min_eigenpair().unwrap();
        assert_abs_diff_eq!(v, -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.amplitudes()[1].norm(), 1.0, epsilon = 1e-14);

        let (v, e) = Operator::identity(Dims::new(2, 3).unwrap()).min_eigenpair().unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn min_eigenpair_rejects_non_hermitian() {
        let dims = Dims::new(2, 1).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        let op = Operator::new(dims, m.clone()).unwrap();
        assert!(!op.is_hermitian());
        assert!(matches!(op.min_eigenpair(), Err(Error::NotHermitian { .. })));
        assert!(matches!(Operator::hermitian(dims, m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn min_eigenpair_residual_and_variational_bound() {
        for seed in 0..20 {
            let dims = Dims::with_ancillas(2, 3, 1, 2).unwrap();
            let h = random_herm(dims, seed);
            let (lambda, v) = h.min_eigenpair().unwrap();
            let residual = (h.matrix() * v.amplitudes() - v.amplitudes() * C64::from(lambda)).norm();
            assert!(residual < 1e-9, "residual {residual}");
            let mut rng = rng_for(seed, 99);
            for _ in 0..100 {
                let u = PureState::from_vector(dims, random_unit_vector(&mut rng, dims.total())).unwrap();
                assert!(lambda <= h.expectation(&u).unwrap() + 1e-12);
            }
        }
    }

    #[test]
    fn expectation_scales_quadratically() {
        let dims = Dims::new(2, 2).unwrap();
        let w = random_herm(dims, 11);
        let psi = random_state(dims, 12);
        let c = C64::new(0.3, -1.7);
        let base = w.expectation(&psi).unwrap();
        assert_abs_diff_eq!(w.expectation(&psi.scaled(c)).unwrap(), c.norm_sqr() * base, epsilon = 1e-12);
        let flat = Operator::identity(dims).scaled(0.25);
        assert_abs_diff_eq!(flat.expectation(&psi).unwrap(), 0.25, epsilon = 1e-14);
    }

    #[test]
    fn expectation_flags_non_hermitian() {
        let dims = Dims::new(2, 1).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        let op = Operator::new(dims, m).unwrap();
        let psi = PureState::normalized(dims, vec![ONE, C64::new(0.0, 1.0)]).unwrap();
        assert!(matches!(op.expectation(&psi), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn trace_pair_is_linear_over_ensembles() {
        let dims = Dims::new(3, 3).unwrap();
        let w = random_herm(dims, 21);
        let probs = [0.5, 0.3, 0.2];
        let states: Vec<PureState> = (0..3).map(|i| random_state(dims, 100 + i)).collect();
        let mut rho = Operator::zeros(dims);
        let mut direct = 0.0;
        for (p, s) in probs.iter().zip(&states) {
            rho = rho.combine(1.0, &s.projector(), *p).unwrap();
            direct += p * w.expectation(s).unwrap();
        }
        assert_abs_diff_eq!(w.trace_pair(&rho).unwrap(), direct, epsilon = 1e-10);
        let mixed = Operator::identity(dims).scaled(1.0 / 9.0);
        assert_abs_diff_eq!(w.trace_pair(&mixed).unwrap(), w.trace().re / 9.0, epsilon = 1e-14);
    }

    #[test]
    fn partial_transpose_of_bell_projector() {
        let p = bell(2).projector();
        let pt = p.partial_transpose(Side::B).unwrap();
        let (min, _) = pt.min_eigenpair().unwrap();
        assert_abs_diff_eq!(min, -0.5, epsilon = 1e-12);
        let pt_a = p.partial_transpose(Side::A).unwrap();
        assert_abs_diff_eq!(pt_a.eigenvalues().unwrap()[0], -0.5, epsilon = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn partial_transpose_is_trace_preserving_involution(seed in any::<u64>(), side_a in any::<bool>()) {
            let dims = Dims::with_ancillas(2, 3, 1, 2).unwrap();
            let w = random_herm(dims, seed);
            let side = if side_a { Side::A } else { Side::B };
            let once = w.partial_transpose(side).unwrap();
            prop_assert_eq!(once.partial_transpose(side).unwrap(), w.clone());
            prop_assert!((once.trace() - w.trace()).norm() < 1e-12);
        }

        #[test]
        fn schmidt_reconstructs_source(seed in any::<u64>(), da in 1usize..5, db in 1usize..5) {
            let dims = Dims::new(da, db).unwrap();
            let psi = random_state(dims, seed);
            let sf = psi.schmidt_decompose(Split::Parties).unwrap();
            prop_assert!((sf.reconstruct() - psi.amplitudes()).norm() < 1e-10);
            prop_assert!((sf.norm_sqr() - psi.norm_sqr()).abs() < 1e-10);
            for w in sf.coefficients.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
            for (i, a) in sf.basis_a.iter().enumerate() {
                for (j, b) in sf.basis_a.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((a.dotc(b) - C64::from(want)).norm() < 1e-10);
                }
            }
            for (i, a) in sf.basis_b.iter().enumerate() {
                for (j, b) in sf.basis_b.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((a.dotc(b) - C64::from(want)).norm() < 1e-10);
                }
            }
        }

        #[test]
        fn partial_expectation_is_linear(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let dims = Dims::new(3, 2).unwrap();
            let w1 = random_herm(dims, seed);
            let w2 = random_herm(dims, seed.wrapping_add(1));
            let mut rng = rng_for(seed, 3);
            let e = PureState::on_party_a(3, 1, random_unit_vector(&mut rng, 3)).unwrap();
            let lhs = w1.combine(alpha, &w2, beta).unwrap().partial_expectation(&e, Side::A).unwrap();
            let rhs = w1.partial_expectation(&e, Side::A).unwrap()
                .combine(alpha, &w2.partial_expectation(&e, Side::A).unwrap(), beta).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-10);
        }

        #[test]
        fn psd_expectation_non_negative(seed in any::<u64>()) {
            let dims = Dims::new(2, 3).unwrap();
            let h = random_herm(dims, seed);
            let psd = Operator::hermitian(dims, h.matrix() * h.matrix()).unwrap();
            let psi = random_state(dims, seed ^ 0xabcdef);
            prop_assert!(psd.expectation(&psi).unwrap() >= -1e-10);
        }
    }
}
