use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::IoError;
use crate::data::Dataset;

/// Which CSV columns hold the label and the features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub has_header: bool,
    pub label_column: usize,
    /// `None` takes every column except the label.
    pub feature_columns: Option<Vec<usize>>,
}

impl CsvSchema {
    pub fn label_last(has_header: bool, columns: usize) -> Self {
        CsvSchema {
            has_header,
            label_column: columns - 1,
            feature_columns: None,
        }
    }
}

/// Reads a numeric CSV. Labels are arbitrary strings mapped to class
/// indices in sorted order; the names are returned alongside.
pub fn read_csv_labeled(path: &Path, schema: &CsvSchema) -> Result<(Dataset, Vec<String>), IoError> {
    let file = std::fs::File::open(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv_from(file, schema)
}

pub(crate) fn read_csv_from<R: std::io::Read>(input: R, schema: &CsvSchema) -> Result<(Dataset, Vec<String>), IoError> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .trim(::csv::Trim::All)
        .from_reader(input);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let row = i + 1 + schema.has_header as usize;
        let record = record.map_err(|e| IoError::Csv {
            row,
            column: 0,
            msg: e.to_string(),
        })?;
        let cols: Vec<usize> = match &schema.feature_columns {
            Some(c) => c.clone(),
            None => (0..record.len()).filter(|&c| c != schema.label_column).collect(),
        };
        if *width.get_or_insert(cols.len()) != cols.len() {
            return Err(IoError::Csv {
                row,
                column: record.len(),
                msg: "row length differs from the first row".into(),
            });
        }
        let label = record.get(schema.label_column).ok_or_else(|| IoError::Csv {
            row,
            column: schema.label_column,
            msg: "missing label column".into(),
        })?;
        labels.push(label.to_string());
        for c in cols {
            let cell = record.get(c).ok_or_else(|| IoError::Csv {
                row,
                column: c,
                msg: "missing column".into(),
            })?;
            let v: f64 = cell.parse().map_err(|_| IoError::Csv {
                row,
                column: c,
                msg: format!("'{cell}' is not a number"),
            })?;
            features.push(v);
        }
    }
    let width = width.unwrap_or(0);
    let mut names: Vec<String> = labels.clone();
    names.sort();
    names.dedup();
    let y = labels
        .iter()
        .map(|l| names.binary_search(l).expect("label present"))
        .collect();
    let x = Array2::from_shape_vec((labels.len(), width), features).expect("rows have equal width");
    Ok((Dataset::new(x, y, names.len().max(1)), names))
}

/// Per-feature z-score statistics from a training split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    /// Constant columns get `std = 0` and normalize to zero.
    pub fn fit(x: &Array2<f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mean = x.sum_axis(Axis(0)) / n;
        let std: Array1<f64> = x
            .columns()
            .into_iter()
            .zip(&mean)
            .map(|(c, m)| (c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt())
            .collect();
        for (j, &s) in std.iter().enumerate() {
            if s == 0.0 {
                log::warn!("feature {j} has zero variance; it normalizes to 0");
            }
        }
        Normalizer {
            mean: mean.to_vec(),
            std: std.to_vec(),
        }
    }

    pub fn apply(&self, x: &mut Array2<f64>) {
        for mut row in x.outer_iter_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = if *s == 0.0 { 0.0 } else { (*v - m) / s };
            }
        }
    }
}

/// Shuffled split; returns `(train, test, test_indices)` with the test
/// indices in ascending order so the split can be recorded.
pub fn split_train_test(data: &Dataset, test_fraction: f64, seed: u64) -> (Dataset, Dataset, Vec<usize>) {
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((data.len() as f64) * test_fraction).round() as usize;
    let mut test_idx = idx[..n_test].to_vec();
    let mut train_idx = idx[n_test..].to_vec();
    test_idx.sort_unstable();
    train_idx.sort_unstable();
    (data.subset(&train_idx), data.subset(&test_idx), test_idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn toy_csv_shapes() {
        let text = "a,b,label\n1,2,yes\n3,4,no\n5,6,yes\n";
        let (d, names) = read_csv_from(text.as_bytes(), &CsvSchema::label_last(true, 3)).unwrap();
        assert_eq!(d.x.dim(), (3, 2));
        assert_eq!(names, vec!["no", "yes"]);
        assert_eq!(d.y, vec![1, 0, 1]);
    }

    #[test]
    fn non_numeric_cell_is_located() {
        let text = "1,2,0\n3,x,1\n";
        match read_csv_from(text.as_bytes(), &CsvSchema::label_last(false, 3)) {
            Err(IoError::Csv { row, column, .. }) => assert_eq!((row, column), (2, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constant_column_normalizes_to_zero() {
        let mut x = array![[1.0, 5.0], [3.0, 5.0]];
        let n = Normalizer::fit(&x);
        n.apply(&mut x);
        assert_eq!(x, array![[-1.0, 0.0], [1.0, 0.0]]);
    }

    #[test]
    fn test_split_uses_train_statistics() {
        let train = array![[0.0], [2.0], [4.0], [6.0]];
        let n = Normalizer::fit(&train);
        assert_eq!(n.mean, vec![3.0]);
        assert!((n.std[0] - 5f64.sqrt()).abs() < 1e-12);
        let mut test = array![[3.0], [8.0]];
        n.apply(&mut test);
        assert_eq!(test[[0, 0]], 0.0);
        assert!((test[[1, 0]] - 5.0 / 5f64.sqrt()).abs() < 1e-12);
    }
}
