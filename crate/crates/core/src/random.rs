//! Seeded randomness. Every random object is a function of `(seed, stream)`
//! so parallel workers never share generator state.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hilbert::C64;

pub type SeededRng = ChaCha8Rng;

/// Generator for one independent stream of a seed.
pub fn rng_for(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Uniformly distributed unit vector in `C^n`.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<C64> {
    loop {
        let v = DVector::from_fn(n, |_, _| complex_gaussian(rng));
        let norm = v.norm();
        if norm > 1e-12 {
            return v.unscale(norm);
        }
    }
}

/// `n x m` matrix (`m ≤ n`) with orthonormal columns, from the QR
/// factorization of a complex Gaussian matrix.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> DMatrix<C64> {
    assert!(m <= n, "isometry needs m <= n");
    let g = DMatrix::from_fn(n, m, |_, _| complex_gaussian(rng));
    let q = g.qr().q();
    q.columns(0, m).into_owned()
}
