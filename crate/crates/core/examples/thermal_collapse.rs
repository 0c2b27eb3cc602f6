//! Thermal sweep of ∂r23/∂T at λ = 0 for N = 200..500. Each size is
//! diagonalized once; every temperature reuses the spectrum.
//!
//! cargo run --release --example thermal_collapse [-- --smoke]

use lmg_rdm::scaling::CollapseOptions;
use lmg_rdm::sweep::{reproduce, FigureSpec};

fn main() -> lmg_rdm::Result<()> {
    let mut spec = FigureSpec::fig2();
    if std::env::args().any(|a| a == "--smoke") {
        spec = spec.smoke();
    }
    let start = std::time::Instant::now();
    let report = reproduce(&spec, &CollapseOptions::default())?;

    for p in &report.peaks {
        if let Some(q) = p.peak {
            println!(
                "N={:4}  T_m={:.5}  -dr23/dT={:.5}",
                p.spins, q.location, q.height
            );
        }
    }
    for c in &report.crossings {
        println!(
            "crossing N={} vs N={}: {:.5}",
            c.sizes.0, c.sizes.1, c.location
        );
    }
    if let Some(fit) = &report.fit {
        println!(
            "nu = {:.4}  quality = {:.3e}  local minimum: {}",
            fit.nu, fit.quality, fit.locally_minimal
        );
    }
    for c in &report.checks {
        println!("{c}");
    }
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
