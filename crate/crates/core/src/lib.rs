//! Global symbols of left-invariant vector fields on tori and SU(2), with
//! singular-value gates for directional Poincaré inequalities, global
//! solvability and tube-type fields on T¹×G.
//!
//! Everything works Fourier-side: a function is a finite family of matrix
//! coefficients and an operator is a family of symbol blocks.

pub mod diophantine;
pub mod envelope;
pub mod error;
pub mod fourier;
pub mod linalg;
pub mod poincare;
pub mod report;
pub mod rng;
pub mod solvability;
pub mod spectral;
pub mod su2;
pub mod tube;

pub use error::{Error, Result};
pub use fourier::{DualIndex, FourierData, Group, SymbolBlock, SymbolMap};
pub use linalg::CMatrix;
pub use spectral::{spectral_record, SpectralRecord};

/// Caps the global rayon pool from `LIE_POINCARE_THREADS` when set.
///
/// Safe to call more than once; only the first successful call has effect.
pub fn init_thread_pool_from_env() {
    if let Some(n) = std::env::var("LIE_POINCARE_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}
