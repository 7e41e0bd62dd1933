//! Stability and runs-test pass rates of every generator, plus the binomial
//! fit of the RLF popcounts.
//!
//! cargo run --release --example grng_quality -- [trials]

use vibnn::grng::{GaussianSource, GrngConfig, GrngKind};
use vibnn::rlf::RlfGrng;
use vibnn::stats::{binomial_gof, pass_rate, stability};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials: usize = std::env::args().nth(1).map_or(Ok(20), |s| s.parse())?;
    let samples = 100_000;
    println!("{:<10} {:>8} {:>8} {:>10}", "generator", "mu err", "sd err", "pass rate");
    for kind in GrngKind::ALL {
        let cfg = GrngConfig::new(kind);
        let mut g = cfg.build(1)?;
        let xs: Vec<f64> = (0..samples).map(|_| g.next_gaussian()).collect();
        let s = stability(&xs)?;
        let p = pass_rate(|seed| cfg.build(seed).unwrap(), trials, samples, 0.05, 1)?;
        println!("{:<10} {:>8.4} {:>8.4} {:>10.3}", kind.name(), s.mu_error, s.sigma_error, p.rate);
    }

    for pool in [256, 1024, 4096] {
        let mut cfg = GrngConfig::new(GrngKind::Software);
        cfg.pool = pool;
        let mut g = cfg.build(1)?;
        let xs: Vec<f64> = (0..samples).map(|_| g.next_gaussian()).collect();
        println!("software pool {pool:>4}: sd err {:.4}", stability(&xs)?.sigma_error);
    }

    let mut rlf = RlfGrng::new(1);
    let sums: Vec<u32> = (0..samples).map(|_| rlf.next_sum()).collect();
    let gof = binomial_gof(&sums, 255, 0.5)?;
    println!("RLF sums vs B(255, 1/2): chi2 {:.1} on {} dof, p = {:.3}", gof.chi2, gof.dof, gof.p_value);
    Ok(())
}
