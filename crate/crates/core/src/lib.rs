pub mod adversary;
pub mod error;
pub mod harness;
pub mod netsim;
pub mod protocol;
pub mod qudit;
pub mod rng;
pub mod stats;

pub use error::{QsdcError, Result};
pub use rng::RandomStream;
