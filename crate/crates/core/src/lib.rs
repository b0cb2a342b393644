//! Maximum-weight perfect f-factors by scaling primal-dual search on the
//! blowup graph.

pub mod blowup;
pub mod duals;
pub mod error;
pub mod graph;
pub mod oracle;
pub mod pq;
pub mod scaling;
pub mod search;

pub use error::{Error, Result};
