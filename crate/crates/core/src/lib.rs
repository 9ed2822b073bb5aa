pub mod ansatz;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod fermion;
pub mod model;
pub mod oracle;
pub mod pauli;
pub mod statevector;

pub use error::{Error, Result};
