//! Block-I/O cost arithmetic for full sorts, partial sorts and merge joins.
//!
//! All functions are generic over the scalar type; CPU work is converted
//! into I/O units through [`CostParams::cpu_unit`].

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::Add;

use num_traits::{Float, FromPrimitive};
use serde::{Deserialize, Serialize};

use crate::order::SortOrder;

/// Floating-point scalar usable by the cost model.
pub trait CostScalar: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {}

impl<T> CostScalar for T where T: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {}

fn lit<T: CostScalar>(v: f64) -> T {
    T::from_f64(v).expect("literal representable in scalar type")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostParams<T> {
    /// Memory blocks available to a sort (`M`, at least 3).
    pub memory_blocks: T,
    pub block_size: T,
    /// Cost, in block I/Os, of one tuple comparison.
    pub cpu_unit: T,
    /// Block transfers per merge pass per block (2: one write, one read).
    pub merge_pass_constant: T,
}

impl<T: CostScalar> CostParams<T> {
    pub fn new(memory_blocks: T, block_size: T, cpu_unit: T) -> Self {
        Self {
            memory_blocks,
            block_size,
            cpu_unit,
            merge_pass_constant: lit(2.0),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.memory_blocks >= lit(3.0)) {
            return Err(format!("memory_blocks must be >= 3, got {:?}", self.memory_blocks));
        }
        if !(self.block_size > T::zero()) {
            return Err("block_size must be positive".into());
        }
        if !(self.cpu_unit >= T::zero()) || !(self.merge_pass_constant >= T::zero()) {
            return Err("cost constants must be non-negative".into());
        }
        Ok(())
    }
}

impl<T: CostScalar> Default for CostParams<T> {
    fn default() -> Self {
        Self::new(lit(10_000.0), lit(4096.0), lit(1e-6))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate<T> {
    pub io_blocks: T,
    pub cpu_units: T,
    pub total: T,
}

impl<T: CostScalar> CostEstimate<T> {
    pub fn new(io_blocks: T, cpu_units: T) -> Self {
        Self {
            io_blocks,
            cpu_units,
            total: io_blocks + cpu_units,
        }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.total == T::zero()
    }
}

impl<T: CostScalar> Add for CostEstimate<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::new(self.io_blocks + rhs.io_blocks, self.cpu_units + rhs.cpu_units)
    }
}

impl<T: CostScalar> Sum for CostEstimate<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}

/// `⌈log_{M−1}(B/M)⌉`, by repeated multiplication: the smallest `k ≥ 0`
/// with `M·(M−1)^k ≥ B`.
pub fn merge_passes<T: CostScalar>(blocks: T, memory_blocks: T) -> u32 {
    let fan_in = memory_blocks - T::one();
    let mut reach = memory_blocks;
    let mut k = 0;
    while reach < blocks {
        reach = reach * fan_in;
        k += 1;
    }
    k
}

/// CPU cost of sorting `n` tuples: `cpu_unit · n · log2(max(n, 2))`.
///
/// Depends only on the tuple count, so every permutation of a fixed
/// attribute set costs the same.
pub fn cpu_sort_cost<T: CostScalar>(n: T, params: &CostParams<T>) -> T {
    if n <= T::zero() {
        return T::zero();
    }
    params.cpu_unit * n * n.max(lit(2.0)).log2()
}

/// Cost of sorting unordered input of `n` tuples in `b` blocks.
pub fn sort_cost_full<T: CostScalar>(n: T, b: T, params: &CostParams<T>) -> CostEstimate<T> {
    segmented_sort_cost(n, b, T::one(), params)
}

/// Cost of producing `target` from input already ordered on `existing`.
///
/// `d_prefix` is the number of distinct values of the common prefix
/// `target ∧ existing`, i.e. the number of partial sort segments. Each
/// segment holds `⌈N/D⌉` tuples and `⌈B/D⌉` blocks; a segment that fits in
/// memory is sorted without I/O. The per-segment cost is multiplied by `D`
/// with the product `D·⌈B/D⌉` taken as `B` (and likewise for `N`), so a
/// longer known prefix never costs more than a shorter one.
pub fn sort_cost_partial<T: CostScalar>(
    n: T,
    b: T,
    d_prefix: T,
    existing: &SortOrder,
    target: &SortOrder,
    params: &CostParams<T>,
) -> CostEstimate<T> {
    if existing.subsumes(target) {
        return CostEstimate::zero();
    }
    let d = if existing.lcp_len(target) == 0 {
        T::one()
    } else {
        d_prefix.max(T::one())
    };
    segmented_sort_cost(n, b, d, params)
}

/// Cost of sorting `n` tuples in `b` blocks that fall into `d` independent
/// segments of equal size.
pub fn segmented_sort_cost<T: CostScalar>(n: T, b: T, d: T, params: &CostParams<T>) -> CostEstimate<T> {
    if n <= T::zero() {
        return CostEstimate::zero();
    }
    let seg_blocks = (b / d).ceil();
    let seg_tuples = (n / d).ceil();
    let io = if seg_blocks <= params.memory_blocks {
        T::zero()
    } else {
        let passes = T::from_u32(merge_passes(seg_blocks, params.memory_blocks)).unwrap();
        b * (params.merge_pass_constant * passes + T::one())
    };
    let cpu = params.cpu_unit * n * seg_tuples.max(lit(2.0)).log2();
    CostEstimate::new(io, cpu)
}

/// Cost of merging two sorted inputs. Independent of the join order.
pub fn merge_join_cost<T: CostScalar>(
    left_blocks: T,
    right_blocks: T,
    left_rows: T,
    right_rows: T,
    params: &CostParams<T>,
) -> CostEstimate<T> {
    CostEstimate::new(
        left_blocks + right_blocks,
        params.cpu_unit * (left_rows + right_rows),
    )
}

/// Cost of a sort-based aggregation over sorted input.
pub fn group_by_cost<T: CostScalar>(input_rows: T, params: &CostParams<T>) -> CostEstimate<T> {
    CostEstimate::new(T::zero(), params.cpu_unit * input_rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(names: &[&str]) -> SortOrder {
        SortOrder::parse(names).unwrap()
    }

    fn params(m: f64) -> CostParams<f64> {
        CostParams::new(m, 4096.0, 1e-6)
    }

    #[test]
    fn full_sort_in_memory_has_no_io() {
        let c = sort_cost_full(500.0, 5.0, &params(10.0));
        assert_eq!(c.io_blocks, 0.0);
        assert!(c.cpu_units > 0.0);
    }

    #[test]
    fn full_sort_external_matches_formula() {
        // 100 blocks, M = 10: ⌈log_9(10)⌉ = 2 passes -> 100 * (2*2 + 1)
        let c = sort_cost_full(10_000.0, 100.0, &params(10.0));
        assert_eq!(c.io_blocks, 500.0);
    }

    #[test]
    fn exact_power_boundary() {
        // B = M * (M-1)^2 exactly: log_{M-1}(B/M) = 2, not 3.
        assert_eq!(merge_passes(810.0_f64, 10.0), 2);
        assert_eq!(merge_passes(811.0_f64, 10.0), 3);
        assert_eq!(merge_passes(10.0_f64, 10.0), 0);
        assert_eq!(merge_passes(11.0_f64, 10.0), 1);
    }

    #[test]
    fn zero_tuples_cost_nothing() {
        assert!(sort_cost_full(0.0, 0.0, &params(10.0)).is_zero());
        assert!(sort_cost_partial(0.0, 0.0, 5.0, &o(&["a"]), &o(&["a", "b"]), &params(10.0)).is_zero());
    }

    #[test]
    fn partial_sort_of_subsumed_order_is_free() {
        let c = sort_cost_partial(1e6, 1e4, 10.0, &o(&["a", "b"]), &o(&["a"]), &params(10.0));
        assert!(c.is_zero());
    }

    #[test]
    fn partial_sort_segments_fit_in_memory() {
        let p = CostParams::new(1000.0, 4096.0, 1.0);
        let c = sort_cost_partial(1e6, 1e4, 100.0, &o(&["a"]), &o(&["a", "b"]), &p);
        assert_eq!(c.io_blocks, 0.0);
        let expected = 100.0 * cpu_sort_cost(1e4, &p);
        assert!((c.cpu_units - expected).abs() < 1e-6 * expected);
    }

    #[test]
    fn partial_with_single_segment_equals_full() {
        let p = params(10.0);
        let full = sort_cost_full(123_456.0, 789.0, &p);
        let part = sort_cost_partial(123_456.0, 789.0, 1.0, &o(&["a"]), &o(&["a", "b"]), &p);
        assert_eq!(full, part);
        let from_empty = sort_cost_partial(123_456.0, 789.0, 1.0, &SortOrder::empty(), &o(&["a"]), &p);
        assert_eq!(full, from_empty);
    }

    #[test]
    fn cpu_cost_examples() {
        let p = CostParams::new(10.0, 4096.0, 1.0);
        assert_eq!(cpu_sort_cost(0.0, &p), 0.0);
        assert_eq!(cpu_sort_cost(1024.0, &p), 10240.0);
    }

    #[test]
    fn merge_join_cost_examples() {
        let p = params(10.0);
        assert_eq!(merge_join_cost(10.0, 20.0, 0.0, 0.0, &p).io_blocks, 30.0);
        assert_eq!(merge_join_cost(10.0, 0.0, 100.0, 0.0, &p).io_blocks, 10.0);
    }

    #[test]
    fn works_for_f32() {
        let p: CostParams<f32> = CostParams::new(10.0, 4096.0, 1e-3);
        let c = sort_cost_full(10_000.0_f32, 100.0, &p);
        assert_eq!(c.io_blocks, 500.0);
    }

    #[test]
    fn params_validation() {
        assert!(params(2.0).validate().is_err());
        assert!(params(3.0).validate().is_ok());
    }
}
