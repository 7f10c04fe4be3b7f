//! Biorthogonal wavelet filter banks as operator systems, and Fock spaces
//! over positive block matrices with explicit creation operators.

pub mod acceptance;
pub mod anchor;
pub mod builtin;
pub mod error;
pub mod filterbank;
pub mod fock;
pub mod laurent;
pub mod linalg;
pub mod polyphase;
pub mod subdivision;
pub mod wavelet_fock;

pub use error::{Error, Result};
pub use filterbank::FilterBank;
pub use laurent::{LaurentPoly, TorusPoint};
pub use polyphase::LoopMatrix;
