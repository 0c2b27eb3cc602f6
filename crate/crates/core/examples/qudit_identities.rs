//! Free energy from pair reduced density matrices, and finite-difference
//! checks of the four derivative identities on random qudit models.
//!
//! cargo run --release --example qudit_identities

use lmg_rdm::qudit::{
    free_energy_decomposition, random_family, verify_identities, ParameterizedQudit,
};

fn main() -> lmg_rdm::Result<()> {
    let family = random_family(3, 3, 11)?;
    let h = family.hamiltonian(0.4)?;
    let d = free_energy_decomposition(&h, 0.8)?;
    println!("3 qutrits, T = 0.8");
    println!("  F            {:+.12}", d.free_energy);
    println!("  E - TS       {:+.12}", d.free_energy_from_parts());
    println!("  E (pairs)    {:+.12}", d.energy);
    println!("  E (trace)    {:+.12}", d.energy_full_trace);
    for ((i, j), e) in &d.pair_energies {
        println!("  <U^{i}{j}>      {e:+.12}");
    }

    println!("\nidentity residuals (seed, r1, r2, r3, r4):");
    for seed in 0..5 {
        let fam = random_family(4, 2, seed)?;
        let r = verify_identities(&fam, 0.7, 1.0, None)?;
        println!(
            "  {seed}  {:.2e}  {:.2e}  {:.2e}  {:.2e}  within bounds: {}",
            r.r1,
            r.r2,
            r.r3,
            r.r4,
            r.within(1e-6, 1e-4)
        );
    }
    Ok(())
}
