//! External sorting by replacement selection, with a variant that exploits
//! a known sorted prefix of the input.
//!
//! [`sort_srs`] is classic replacement selection followed by a k-way merge.
//! [`sort_mrs`] treats each maximal group of records sharing the known
//! prefix (a *segment*) as an independent sort on the remaining key
//! columns and emits it as soon as the next segment starts.

mod bench;
mod gen;
mod heap;
mod loser_tree;
mod record;
mod spill;

use std::collections::VecDeque;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::SortError;
use heap::{Entry, RunHeap};
use loser_tree::LoserTree;
use spill::{Run, RunWriter};

pub use bench::{compare_sorts, CompareReport, MetricsRow};
pub use gen::{generate, DatasetSpec};
pub use record::{KeyType, Record, Value};

/// Parameters of one sort. Records carry their key columns in target order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SortSpec {
    /// Number of key columns in the target order.
    pub key_len: usize,
    /// Number of leading key columns the input is already sorted on.
    pub known_prefix: usize,
    /// Records held in memory during run formation.
    pub memory_records: usize,
    /// Memory blocks for merging; the merge fan-in is one less.
    pub memory_blocks: usize,
    pub block_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spill_dir: Option<PathBuf>,
}

impl SortSpec {
    pub fn new(key_len: usize, known_prefix: usize, memory_records: usize) -> Self {
        Self {
            key_len,
            known_prefix,
            memory_records,
            memory_blocks: 64,
            block_size: 4096,
            spill_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), SortError> {
        if self.known_prefix > self.key_len {
            return Err(SortError::InvalidSpec(format!(
                "known prefix length {} exceeds key length {}",
                self.known_prefix, self.key_len
            )));
        }
        if self.memory_records == 0 {
            return Err(SortError::InvalidSpec("memory_records must be positive".into()));
        }
        if self.memory_blocks < 3 {
            return Err(SortError::InvalidSpec("memory_blocks must be at least 3".into()));
        }
        if self.block_size == 0 {
            return Err(SortError::InvalidSpec("block_size must be positive".into()));
        }
        Ok(())
    }

    fn fan_in(&self) -> usize {
        self.memory_blocks - 1
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortMetrics {
    /// Key comparisons, including prefix checks between consecutive inputs.
    pub comparisons: u64,
    pub blocks_written: u64,
    pub blocks_read: u64,
    /// Runs produced by run formation (intermediate merge runs excluded).
    pub runs_generated: u64,
    /// Input records consumed when the first output record was emitted.
    pub first_output_index: u64,
    pub segments_seen: u64,
    pub records: u64,
}

/// Run formation by replacement selection over records that agree on
/// key columns `..from`.
struct RunGen<'s> {
    spec: &'s SortSpec,
    heap: RunHeap,
    from: usize,
    spilling: bool,
    run: u64,
    writer: Option<RunWriter>,
    runs: Vec<Run>,
}

impl<'s> RunGen<'s> {
    fn new(spec: &'s SortSpec, from: usize) -> Self {
        Self {
            spec,
            heap: RunHeap::with_capacity(spec.memory_records, from),
            from,
            spilling: false,
            run: 0,
            writer: None,
            runs: Vec::new(),
        }
    }

    fn push(&mut self, rec: Record, m: &mut SortMetrics) -> Result<(), SortError> {
        if !self.spilling {
            if self.heap.len() < self.spec.memory_records {
                self.heap.push_unordered(Entry { run: 0, rec });
                return Ok(());
            }
            self.spilling = true;
            self.heap.heapify();
        }
        let top_run = self.heap.top().expect("full heap").run;
        self.switch_run(top_run, m)?;
        let from = self.from;
        let lt = rec.cmp_from(&self.heap.top().expect("full heap").rec, from).is_lt();
        self.heap.comparisons += 1;
        let tag = if lt { self.run + 1 } else { self.run };
        let out = self.heap.replace_top(Entry { run: tag, rec });
        self.writer.as_mut().expect("open run").write(&out.rec)
    }

    fn switch_run(&mut self, run: u64, m: &mut SortMetrics) -> Result<(), SortError> {
        if self.writer.is_some() && run == self.run {
            return Ok(());
        }
        self.close_run(m)?;
        self.run = run;
        self.writer = Some(RunWriter::create(self.spec.spill_dir.as_deref())?);
        Ok(())
    }

    fn close_run(&mut self, m: &mut SortMetrics) -> Result<(), SortError> {
        if let Some(w) = self.writer.take() {
            let run = w.finish()?;
            m.blocks_written += run.blocks(self.spec.block_size);
            m.runs_generated += 1;
            self.runs.push(run);
        }
        Ok(())
    }

    /// Emits everything pushed so far in sorted order.
    fn finish<F>(mut self, m: &mut SortMetrics, sink: &mut F) -> Result<(), SortError>
    where
        F: FnMut(Record) -> Result<(), SortError>,
    {
        let from = self.from;
        if !self.spilling {
            self.heap.heapify();
            while let Some(e) = self.heap.pop() {
                sink(e.rec)?;
            }
            m.comparisons += self.heap.comparisons;
            return Ok(());
        }
        while let Some(e) = self.heap.pop() {
            self.switch_run(e.run, m)?;
            self.writer.as_mut().expect("open run").write(&e.rec)?;
        }
        self.close_run(m)?;
        m.comparisons += self.heap.comparisons;
        merge_runs(self.runs, from, self.spec, m, sink)
    }
}

/// Merges `runs` in passes of at most `fan_in` runs until one final merge
/// streams into `sink`.
fn merge_runs<F>(
    runs: Vec<Run>,
    from: usize,
    spec: &SortSpec,
    m: &mut SortMetrics,
    sink: &mut F,
) -> Result<(), SortError>
where
    F: FnMut(Record) -> Result<(), SortError>,
{
    let mut queue: VecDeque<Run> = runs.into();
    while queue.len() > spec.fan_in() {
        let group: Vec<Run> = queue.drain(..spec.fan_in()).collect();
        let mut w = RunWriter::create(spec.spill_dir.as_deref())?;
        merge_into(group, from, spec, m, &mut |r| w.write(&r))?;
        let run = w.finish()?;
        m.blocks_written += run.blocks(spec.block_size);
        queue.push_back(run);
    }
    merge_into(queue.into(), from, spec, m, sink)
}

fn merge_into<F>(runs: Vec<Run>, from: usize, spec: &SortSpec, m: &mut SortMetrics, sink: &mut F) -> Result<(), SortError>
where
    F: FnMut(Record) -> Result<(), SortError>,
{
    let mut readers = Vec::with_capacity(runs.len());
    for run in runs {
        m.blocks_read += run.blocks(spec.block_size);
        readers.push(run.into_reader()?);
    }
    let mut heads = Vec::with_capacity(readers.len());
    for r in &mut readers {
        heads.push(r.next_record()?);
    }
    let mut tree = LoserTree::new(heads, from);
    while let Some(w) = tree.winner() {
        let next = readers[w].next_record()?;
        let rec = tree.pop_and_refill(next).expect("winner has a record");
        sink(rec)?;
    }
    m.comparisons += tree.comparisons;
    Ok(())
}

fn check_arity(rec: &Record, position: u64, spec: &SortSpec) -> Result<(), SortError> {
    if rec.key.len() != spec.key_len {
        return Err(SortError::KeyArity {
            position,
            expected: spec.key_len,
            found: rec.key.len(),
        });
    }
    Ok(())
}

/// Emission wrapper that records when the first output appears.
struct Emitter<F> {
    sink: F,
    consumed: u64,
    emitted: u64,
    first: Option<u64>,
}

impl<F: FnMut(Record) -> Result<(), SortError>> Emitter<F> {
    fn emit(&mut self, rec: Record) -> Result<(), SortError> {
        if self.first.is_none() {
            self.first = Some(self.consumed);
        }
        self.emitted += 1;
        (self.sink)(rec)
    }
}

/// Standard replacement selection: ignores any known prefix.
pub fn sort_srs<I, F>(input: I, spec: &SortSpec, sink: F) -> Result<SortMetrics, SortError>
where
    I: IntoIterator<Item = Record>,
    F: FnMut(Record) -> Result<(), SortError>,
{
    spec.validate()?;
    let mut m = SortMetrics::default();
    let mut out = Emitter {
        sink,
        consumed: 0,
        emitted: 0,
        first: None,
    };
    let mut gen = RunGen::new(spec, 0);
    for rec in input {
        check_arity(&rec, out.consumed, spec)?;
        out.consumed += 1;
        gen.push(rec, &mut m)?;
    }
    gen.finish(&mut m, &mut |r| out.emit(r))?;
    m.records = out.consumed;
    m.first_output_index = out.first.unwrap_or(0);
    Ok(m)
}

/// Modified replacement selection: sorts each segment of records sharing
/// the first `known_prefix` key columns independently on the rest.
///
/// Fails with [`SortError::InputNotSorted`] if the input is not ordered on
/// the known prefix.
pub fn sort_mrs<I, F>(input: I, spec: &SortSpec, sink: F) -> Result<SortMetrics, SortError>
where
    I: IntoIterator<Item = Record>,
    F: FnMut(Record) -> Result<(), SortError>,
{
    spec.validate()?;
    let k = spec.known_prefix;
    let mut m = SortMetrics::default();
    let mut out = Emitter {
        sink,
        consumed: 0,
        emitted: 0,
        first: None,
    };
    let mut gen: Option<RunGen<'_>> = None;
    let mut last_prefix: Option<Vec<Value>> = None;
    for rec in input {
        check_arity(&rec, out.consumed, spec)?;
        let position = out.consumed;
        if let Some(prev) = &last_prefix {
            m.comparisons += 1;
            match rec.key[..k].cmp(&prev[..]) {
                std::cmp::Ordering::Less => return Err(SortError::InputNotSorted { position }),
                std::cmp::Ordering::Greater => {
                    if let Some(g) = gen.take() {
                        g.finish(&mut m, &mut |r| out.emit(r))?;
                    }
                    last_prefix = Some(rec.key[..k].to_vec());
                    m.segments_seen += 1;
                }
                std::cmp::Ordering::Equal => {}
            }
        } else {
            last_prefix = Some(rec.key[..k].to_vec());
            m.segments_seen += 1;
        }
        out.consumed += 1;
        if k == spec.key_len {
            out.emit(rec)?;
            continue;
        }
        gen.get_or_insert_with(|| RunGen::new(spec, k)).push(rec, &mut m)?;
    }
    if let Some(g) = gen.take() {
        g.finish(&mut m, &mut |r| out.emit(r))?;
    }
    m.records = out.consumed;
    m.first_output_index = out.first.unwrap_or(0);
    Ok(m)
}

/// [`sort_mrs`] collecting the output.
pub fn sort_mrs_vec<I: IntoIterator<Item = Record>>(
    input: I,
    spec: &SortSpec,
) -> Result<(Vec<Record>, SortMetrics), SortError> {
    let mut out = Vec::new();
    let m = sort_mrs(input, spec, |r| {
        out.push(r);
        Ok(())
    })?;
    Ok((out, m))
}

/// [`sort_srs`] collecting the output.
pub fn sort_srs_vec<I: IntoIterator<Item = Record>>(
    input: I,
    spec: &SortSpec,
) -> Result<(Vec<Record>, SortMetrics), SortError> {
    let mut out = Vec::new();
    let m = sort_srs(input, spec, |r| {
        out.push(r);
        Ok(())
    })?;
    Ok((out, m))
}
