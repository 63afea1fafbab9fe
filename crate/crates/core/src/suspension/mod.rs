//! Truncated Poisson suspensions: sampled configurations, the pushforward
//! `T_*`, the rank-permutation cocycle and the marked skew products.

mod config;
mod flow;
mod perm;

pub use config::*;
pub use flow::*;
pub use perm::*;
