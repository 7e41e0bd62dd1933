//! RAM-based LFSR Gaussian generator: bank schedule, raw popcounts and
//! standardized samples.
//!
//! cargo run --example rlf_stream

use vibnn::rlf::{standardize, RlfArray, RlfGrng, SeedVector, TapConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let taps = TapConfig::n255();
    println!("n = {}, taps {:?}", taps.n(), taps.taps());
    for t in taps.fused().terms() {
        println!("  x(h+{}) ^= {}{}", t.offset, if t.from_head0 { "x(h) " } else { "" }, if t.from_head1 { "x(h+1)" } else { "" });
    }

    // Four lanes in one banked memory, checked against the flat register.
    let mut array = RlfArray::from_seed(7, 4, &taps)?;
    let mut flat: Vec<SeedVector> = (0..4)
        .map(|l| SeedVector::new(&array.engine().lane_bits(l), &taps))
        .collect::<Result<_, _>>()?;
    for cycle in 0..3 {
        let sums = array.step()?;
        for f in &mut flat {
            f.step();
        }
        println!("cycle {cycle}: rotated sums {sums:?}, flat popcounts {:?}", flat.iter().map(|f| f.popcount()).collect::<Vec<_>>());
        for a in array.engine().access_log() {
            println!("    {:?} bank {} port {} position {}", a.kind, a.bank, a.port, a.position);
        }
    }

    let mut g = RlfGrng::new(2024);
    let sums: Vec<u32> = (0..8).map(|_| g.next_sum()).collect();
    println!("raw sums {sums:?}");
    let z: Vec<String> = sums.iter().map(|&s| format!("{:+.3}", standardize(s, 255).unwrap())).collect();
    println!("standardized {}", z.join(" "));

    let n = 100_000;
    let xs: Vec<f64> = (0..n).map(|_| g.next_standard()).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    println!("mean {mean:+.4}, std {:.4} over {n} samples", var.sqrt());
    Ok(())
}
