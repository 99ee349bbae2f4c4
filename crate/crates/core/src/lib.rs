pub mod attestation;
pub mod bidder;
pub mod chain;
pub mod cli;
pub mod contract;
pub mod crypto;
pub mod enclave;
pub mod encoding;
mod hex_serde;
pub mod relay;
pub mod scenario;
pub mod value;
pub mod vectors;

pub use value::BidValue;
