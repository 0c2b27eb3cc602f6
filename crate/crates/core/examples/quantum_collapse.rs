//! Ground-state field sweep of ∂r11/∂λ for N = 500..2000, crossing points
//! and the fitted correlation-length exponent.
//!
//! cargo run --release --example quantum_collapse [-- --smoke]

use lmg_rdm::scaling::CollapseOptions;
use lmg_rdm::sweep::{reproduce, FigureSpec};

fn main() -> lmg_rdm::Result<()> {
    let mut spec = FigureSpec::fig1();
    if std::env::args().any(|a| a == "--smoke") {
        spec = spec.smoke();
    }
    let start = std::time::Instant::now();
    let report = reproduce(&spec, &CollapseOptions::default())?;

    for p in &report.peaks {
        match p.peak {
            Some(q) => println!(
                "N={:5}  lambda_m={:.5}  height={:.5}",
                p.spins, q.location, q.height
            ),
            None => println!("N={:5}  peak on boundary", p.spins),
        }
    }
    for c in &report.crossings {
        println!(
            "crossing N={} vs N={}: {:.5}",
            c.sizes.0, c.sizes.1, c.location
        );
    }
    if let Some(fit) = &report.fit {
        println!("nu = {:.4}  quality = {:.3e}", fit.nu, fit.quality);
    }
    for c in &report.checks {
        println!("{c}");
    }
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
