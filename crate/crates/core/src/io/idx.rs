use std::path::Path;

use ndarray::Array2;

use super::{read_file, IoError, Reader};
use crate::data::Dataset;

/// Environment variable naming the directory with the four MNIST files.
pub const MNIST_DIR_ENV: &str = "MNIST_DIR";

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Unsigned-byte IDX tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

/// Parses an IDX buffer whose magic must equal `expected_magic`.
pub fn parse_idx(bytes: &[u8], expected_magic: u32) -> Result<IdxArray, IoError> {
    let mut r = Reader::new(bytes);
    let magic = r.u32_be()?;
    if magic != expected_magic {
        return Err(IoError::format(0, format!("magic {magic:#010x}, expected {expected_magic:#010x}")));
    }
    let ndims = (magic & 0xff) as usize;
    let mut dims = Vec::with_capacity(ndims);
    for _ in 0..ndims {
        dims.push(r.u32_be()? as usize);
    }
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| IoError::format(4, "dimension product overflows"))?;
    let header = r.pos;
    if r.remaining() < len {
        return Err(IoError::Truncated {
            expected: header.saturating_add(len),
            actual: bytes.len(),
        });
    }
    let data = r.take(len)?.to_vec();
    if r.remaining() != 0 {
        return Err(IoError::format(
            header + len,
            format!("{} trailing bytes after payload", r.remaining()),
        ));
    }
    Ok(IdxArray { dims, data })
}

/// Images as rows of `rows * cols` pixels scaled to `[0, 1]`.
pub fn read_idx_images(path: &Path) -> Result<Array2<f64>, IoError> {
    let a = parse_idx(&read_file(path)?, IMAGES_MAGIC)?;
    let (n, pixels) = (a.dims[0], a.dims[1] * a.dims[2]);
    Ok(Array2::from_shape_vec((n, pixels), a.data.iter().map(|&b| b as f64 / 255.0).collect())
        .expect("length checked by parser"))
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<usize>, IoError> {
    let a = parse_idx(&read_file(path)?, LABELS_MAGIC)?;
    Ok(a.data.iter().map(|&b| b as usize).collect())
}

fn load_split(dir: &Path, images: &str, labels: &str) -> Result<Dataset, IoError> {
    let x = read_idx_images(&dir.join(images))?;
    let y = read_idx_labels(&dir.join(labels))?;
    if x.nrows() != y.len() {
        return Err(IoError::format(0, format!("{} images but {} labels", x.nrows(), y.len())));
    }
    if let Some(&bad) = y.iter().find(|&&c| c > 9) {
        return Err(IoError::format(8, format!("label {bad} outside 0..=9")));
    }
    Ok(Dataset::new(x, y, 10))
}

/// `(train, test)` from the standard file names inside `dir`.
pub fn load_mnist(dir: &Path) -> Result<(Dataset, Dataset), IoError> {
    Ok((
        load_split(dir, "train-images-idx3-ubyte", "train-labels-idx1-ubyte")?,
        load_split(dir, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")?,
    ))
}
