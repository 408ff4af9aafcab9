//! SU(2)-averaged bipartite entanglement of pure symmetric spin-S states.
//!
//! A symmetric state of `2S` excitations shared between two modes is the same
//! object as a spin-S pure state. Its entanglement across the two modes
//! depends on which pair of modes one picks; averaging the linear entropy over
//! every SU(2) mode transformation gives a basis-independent quantumness
//! measure. This crate evaluates that average in closed form from the state
//! multipoles, searches for the extremal states, and describes them through
//! their Majorana constellations and point-group symmetries. A Monte Carlo
//! Haar average is provided as an independent check.
//!
//! ```
//! use quantumness::{multipole, states::SpinState};
//!
//! // |S = 1, m = 0>
//! let state = SpinState::basis(2, 1).unwrap();
//! let value = multipole::averaged_entanglement(&state);
//! assert!((value - 8.0 / 15.0).abs() < 1e-12);
//! ```

pub mod angular;
pub mod error;
pub mod majorana;
pub mod multipole;
pub mod numeric;
pub mod optimize;
pub mod oracle;
pub mod states;
pub mod symmetry;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
