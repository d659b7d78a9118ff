//! Schmidt-number witnesses via ancilla embeddings.
//!
//! An operator `S` on `H_A ⊗ H_B` is non-negative on all states of Schmidt
//! rank at most `k` exactly when its lift `𝕊_k` to
//! `(H_A ⊗ C^k) ⊗ (H_B ⊗ C^k)` is non-negative on product states. The crate
//! builds those lifts, the matching state maps, and a see-saw optimizer that
//! answers the product-state question numerically.

pub mod embedding;
pub mod error;
pub mod families;
pub mod hilbert;
mod linalg;
pub mod random;
pub mod verify;
pub mod witness;

pub use embedding::{lift_ensemble, lift_operator, lift_state, lower_ensemble, lower_product_state, lower_state, LiftedOperator, LiftedState};
pub use error::{Error, Result};
pub use families::{
    make_isotropic_witness, maximally_entangled_state, random_hermitian, random_pure_state, threshold_scan,
    IsotropicWitnessSpec, ScanOptions, ScanTable,
};
pub use hilbert::{Dims, Operator, PureState, SchmidtForm, Side, Split, C64};
pub use witness::{
    classify_schmidt_witness, detects, finer_certificate, is_entanglement_witness, lambda_max_subtraction,
    min_product_expectation, optimality_certificate, refine_witness, subtract, FinerOutcome, OptimizerConfig,
    ProductMinResult, Verdict, WitnessClassification,
};
