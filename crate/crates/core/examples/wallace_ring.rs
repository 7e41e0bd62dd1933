//! Wallace generators: the sharing/shifting ring, the unshared NSS unit and
//! the software reference with a large pool.
//!
//! cargo run --example wallace_ring

use vibnn::fxp::FixedSpec;
use vibnn::grng::GaussianSource;
use vibnn::stats::{runs_test, stability};
use vibnn::wallace::{hadamard4, RingMode, SoftwareWallace, WallaceNss, WallaceRing};

fn summary(name: &str, g: &mut dyn GaussianSource) {
    let xs: Vec<f64> = (0..100_000).map(|_| g.next_gaussian()).collect();
    let s = stability(&xs).unwrap();
    let r = runs_test(&xs, 0.05).unwrap();
    println!(
        "{name:<22} mu err {:.4}  sigma err {:.4}  runs z {:+7.2} {}",
        s.mu_error,
        s.sigma_error,
        r.z_stat,
        if r.passed { "pass" } else { "fail" }
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = [0.3, -1.2, 0.8, 2.0];
    let y = hadamard4(x);
    println!("hadamard4 {x:?} -> {y:?}");
    println!("energy {:.6} -> {:.6}", x.iter().map(|v| v * v).sum::<f64>(), y.iter().map(|v| v * v).sum::<f64>());

    let mut ring = WallaceRing::new(8, 256, 1, RingMode::Real)?;
    let e0 = ring.energy();
    println!("ring cycle 0: frame {:?} -> next unit at {:?}", ring.read_frame(), ring.write_positions());
    for _ in 0..10_000 {
        ring.step();
    }
    println!("ring energy after 10^4 cycles: {e0:.6} -> {:.6}", ring.energy());

    summary("ring U=8 K=256", &mut WallaceRing::new(8, 256, 1, RingMode::Real)?);
    summary("ring U=8 K=256 (s8.5)", &mut WallaceRing::new(8, 256, 1, RingMode::Fixed(FixedSpec::Q8_5))?);
    summary("NSS K=256 (s8.5)", &mut WallaceNss::new(256, 1)?);
    summary("software K=4096", &mut SoftwareWallace::new(4096, 2, 1)?);
    Ok(())
}
