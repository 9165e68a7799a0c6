//! Dressed-state and steady-state toolkit for a mechanical probe driven by the
//! virtual photons of an ultrastrongly coupled light-matter ground state.

pub mod analytics;
pub mod effective;
pub mod eigen;
pub mod error;
pub mod hilbert;
pub mod lindblad;
pub mod oracle;
pub mod rabi;
pub mod sparse;
pub mod validation;

pub use error::{Error, Result};
