//! Discrete weak KAM and Aubry–Mather computations for time-periodic Tonelli
//! Hamiltonians on the circle.

pub mod error;
pub mod hamiltonian;

pub use error::{Result, WkamError};
pub mod barriers;
pub mod critical_value;
pub mod experiments;
pub mod flow;
pub mod grid;
pub mod lax_oleinik;
pub mod minplus;
pub mod weak_kam;
