//! Seeded synthetic data with a known sorted prefix.

use rand::distributions::Alphanumeric;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::record::{Record, Value};

/// `rows` records in `segments` equal-sized groups. Column `c1` is the
/// segment number (ascending), `c2` a uniform random integer, and the
/// payload `c3` a random alphanumeric string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub rows: u64,
    pub segments: u64,
    pub seed: u64,
    pub payload_bytes: usize,
}

impl DatasetSpec {
    pub fn new(rows: u64, segments: u64, seed: u64) -> Self {
        Self {
            rows,
            segments,
            seed,
            payload_bytes: 16,
        }
    }

    /// Size of segment `i`; the first `rows % segments` get one extra row.
    pub fn segment_size(&self, i: u64) -> u64 {
        let base = self.rows / self.segments;
        base + u64::from(i < self.rows % self.segments)
    }

    pub fn max_segment_size(&self) -> u64 {
        self.segment_size(0)
    }
}

/// Key is `[c1, c2]`, payload is `c3`.
pub fn generate(spec: &DatasetSpec) -> Vec<Record> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.rows as usize);
    for seg in 0..spec.segments.max(1) {
        let n = if spec.segments == 0 { spec.rows } else { spec.segment_size(seg) };
        for _ in 0..n {
            let v: i64 = rng.gen_range(0..1_000_000_000);
            let payload: Vec<u8> = (&mut rng).sample_iter(Alphanumeric).take(spec.payload_bytes).collect();
            out.push(Record::new(vec![Value::Int(seg as i64), Value::Int(v)], payload));
        }
    }
    out
}
