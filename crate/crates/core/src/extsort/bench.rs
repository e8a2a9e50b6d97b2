//! Side-by-side runs of both algorithms on generated data.

use serde::{Deserialize, Serialize};

use super::gen::{generate, DatasetSpec};
use super::record::Record;
use super::{sort_mrs_vec, sort_srs_vec, SortMetrics, SortSpec};
use crate::error::SortError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub rows: u64,
    pub segments: u64,
    pub segment_size: u64,
    pub memory_records: usize,
    pub alg: String,
    pub comparisons: u64,
    pub blocks_written: u64,
    pub blocks_read: u64,
    pub runs_generated: u64,
    pub first_output_index: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub mrs: SortMetrics,
    pub srs: SortMetrics,
    /// Both outputs are ordered, have equal key sequences, and are
    /// permutations of the input.
    pub consistent: bool,
    pub rows: Vec<MetricsRow>,
}

fn sorted_on_key(out: &[Record]) -> bool {
    out.windows(2).all(|w| w[0].key <= w[1].key)
}

fn same_multiset(a: &[Record], b: &[Record]) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort();
    b.sort();
    a == b
}

/// Generates `data`, sorts it on `(c1, c2)` with both algorithms (MRS told
/// that `c1` is already sorted) and checks the outputs agree.
pub fn compare_sorts(data: &DatasetSpec, spec: &SortSpec) -> Result<CompareReport, SortError> {
    let input = generate(data);
    let mrs_spec = SortSpec {
        key_len: 2,
        known_prefix: 1,
        ..spec.clone()
    };
    let srs_spec = SortSpec {
        key_len: 2,
        known_prefix: 0,
        ..spec.clone()
    };
    let (mrs_out, mrs) = sort_mrs_vec(input.iter().cloned(), &mrs_spec)?;
    let (srs_out, srs) = sort_srs_vec(input.iter().cloned(), &srs_spec)?;
    let keys = |v: &[Record]| v.iter().map(|r| r.key.clone()).collect::<Vec<_>>();
    let consistent = sorted_on_key(&mrs_out)
        && sorted_on_key(&srs_out)
        && keys(&mrs_out) == keys(&srs_out)
        && same_multiset(&mrs_out, &input)
        && same_multiset(&srs_out, &input);
    let row = |alg: &str, m: &SortMetrics| MetricsRow {
        rows: data.rows,
        segments: data.segments,
        segment_size: data.max_segment_size(),
        memory_records: spec.memory_records,
        alg: alg.to_owned(),
        comparisons: m.comparisons,
        blocks_written: m.blocks_written,
        blocks_read: m.blocks_read,
        runs_generated: m.runs_generated,
        first_output_index: m.first_output_index,
    };
    let rows = vec![row("mrs", &mrs), row("srs", &srs)];
    Ok(CompareReport {
        mrs,
        srs,
        consistent,
        rows,
    })
}
