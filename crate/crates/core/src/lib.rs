//! Nonclassicality and entanglement criteria for bipartite photon-counting
//! data, with a twin-beam simulator and photon-number reconstruction.

pub mod analysis;
pub mod criteria;
pub mod data;
pub mod error;
pub mod expr;
pub mod moments;
pub mod ncd;
pub mod numeric;
pub mod reconstruct;
pub mod report;
pub mod selftest;
pub mod sim;
pub mod uncertainty;

pub use error::{Error, Result};
