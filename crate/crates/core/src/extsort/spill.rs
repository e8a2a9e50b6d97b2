//! Sorted runs spilled to anonymous temporary files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Seek, SeekFrom};
use std::path::Path;

use super::record::Record;
use crate::error::SortError;

pub(crate) struct RunWriter {
    out: BufWriter<File>,
    bytes: u64,
}

/// A finished run on disk.
pub(crate) struct Run {
    file: File,
    pub bytes: u64,
}

impl RunWriter {
    pub fn create(dir: Option<&Path>) -> Result<Self, SortError> {
        let file = match dir {
            Some(d) => tempfile::tempfile_in(d)?,
            None => tempfile::tempfile()?,
        };
        Ok(Self {
            out: BufWriter::new(file),
            bytes: 0,
        })
    }

    pub fn write(&mut self, rec: &Record) -> Result<(), SortError> {
        self.bytes += rec.encode(&mut self.out)?;
        Ok(())
    }

    pub fn finish(self) -> Result<Run, SortError> {
        let file = self.out.into_inner().map_err(|e| e.into_error())?;
        Ok(Run {
            file,
            bytes: self.bytes,
        })
    }
}

impl Run {
    /// Blocks the run occupies at `block_size` bytes per block.
    pub fn blocks(&self, block_size: usize) -> u64 {
        self.bytes.div_ceil(block_size as u64)
    }

    pub fn into_reader(mut self) -> Result<RunReader, SortError> {
        self.file.seek(SeekFrom::Start(0))?;
        Ok(RunReader {
            input: BufReader::new(self.file),
        })
    }
}

pub(crate) struct RunReader {
    input: BufReader<File>,
}

impl RunReader {
    pub fn next_record(&mut self) -> Result<Option<Record>, SortError> {
        Ok(Record::decode(&mut self.input)?)
    }
}
