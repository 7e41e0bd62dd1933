use std::io::Write;
use std::path::Path;

/// Three Gaussian blobs in four dimensions, label in the last column.
pub fn write_blobs_csv(path: &Path, rows: usize) {
    let mut f = std::fs::File::create(path).unwrap();
    writeln!(f, "a,b,c,d,label").unwrap();
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut unit = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    for i in 0..rows {
        let class = i % 3;
        let centre = [class as f64 * 2.0, -(class as f64), 1.0, class as f64];
        let vals: Vec<String> = centre.iter().map(|c| format!("{:.5}", c + unit())).collect();
        writeln!(f, "{},c{class}", vals.join(",")).unwrap();
    }
}
