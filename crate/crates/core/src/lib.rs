//! Sort-order selection for merge joins and sort-based grouping, and an
//! external sort that exploits partially sorted input.
//!
//! - [`order`]: sort orders, attribute sets and their algebra.
//! - [`catalog`]: relation statistics, query trees and attribute equivalence.
//! - [`cost`]: block-I/O and CPU cost estimates, including partial sorts.
//! - [`prefix`]: choosing permutations that share long common prefixes
//!   along a tree of operators.
//! - [`favorable`]: orders an expression can produce cheaply, and the
//!   candidate orders derived from them.
//! - [`optimizer`]: plan generation and refinement.
//! - [`extsort`]: replacement-selection external sort, with and without a
//!   known sorted prefix.
//!
//! Cost and benefit arithmetic is generic over the scalar type; the
//! aliases below fix it to `f64`, which the optimizer uses throughout.

pub mod catalog;
pub mod cost;
pub mod error;
pub mod extsort;
pub mod favorable;
pub mod optimizer;
pub mod order;
pub mod prefix;

pub use error::Error;

/// Cost estimate in `f64`.
pub type Cost = cost::CostEstimate<f64>;
/// Cost parameters in `f64`.
pub type Params = cost::CostParams<f64>;
