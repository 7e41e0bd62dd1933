//! Dataset readers and parameter file formats.

mod tabular;
mod idx;
mod params;

pub use self::tabular::{read_csv_labeled, split_train_test, CsvSchema, Normalizer};
pub use self::idx::{load_mnist, parse_idx, read_idx_images, read_idx_labels, IdxArray, MNIST_DIR_ENV};
pub use self::params::{
    decode_params, decode_quant, encode_params, encode_quant, read_params, read_quant, write_params, write_quant,
};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("byte {offset}: {msg}")]
    Format { offset: usize, msg: String },
    #[error("truncated input: need {expected} bytes, have {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("row {row}, column {column}: {msg}")]
    Csv { row: usize, column: usize, msg: String },
    #[error(transparent)]
    Bnn(#[from] crate::bnn::BnnError),
}

impl IoError {
    fn format(offset: usize, msg: impl Into<String>) -> Self {
        IoError::Format {
            offset,
            msg: msg.into(),
        }
    }
}

fn read_file(path: &std::path::Path) -> Result<Vec<u8>, IoError> {
    std::fs::read(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<(), IoError> {
    std::fs::write(path, bytes).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

/// Bounds-checked little/big-endian cursor over a byte slice.
struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], IoError> {
        let end = self.pos.checked_add(n).ok_or(IoError::Truncated {
            expected: usize::MAX,
            actual: self.buf.len(),
        })?;
        if end > self.buf.len() {
            return Err(IoError::Truncated {
                expected: end,
                actual: self.buf.len(),
            });
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, IoError> {
        Ok(self.take(1)?[0])
    }

    fn u16_le(&mut self) -> Result<u16, IoError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32_le(&mut self) -> Result<u32, IoError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u32_be(&mut self) -> Result<u32, IoError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}
