//! PE sizing constraints and the analytic cycle count.
//!
//! cargo run --example validate_config

use vibnn::bnn::{cycle_estimate, validate_config, NetworkTopology, PEConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let topo = NetworkTopology::mnist();
    for cfg in [
        PEConfig::reference(),
        PEConfig { max_ws: 256, ..PEConfig::reference() },
        PEConfig { s: 4, ..PEConfig::reference() },
        PEConfig { t: 32, ..PEConfig::reference() },
    ] {
        let r = validate_config(&cfg, &topo)?;
        let e = cycle_estimate(&cfg, &topo, 200e6)?;
        println!(
            "T={} S={} N={} B={} MaxWS={}: {} warning(s), {} failure(s), {} cycles/image",
            cfg.t, cfg.s, cfg.n, cfg.b, cfg.max_ws, r.warnings, r.failures, e.cycles_per_image
        );
        for c in &r.checks {
            println!("    {} {:<22} {:>4} vs {:<4} {:?}", c.id, c.constraint, c.lhs, c.rhs, c.status);
        }
    }
    Ok(())
}
