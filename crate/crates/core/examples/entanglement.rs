//! Rényi entropy and concurrence of the ground-state spin pair across the
//! quantum critical point.
//!
//! cargo run --release --example entanglement

use lmg_rdm::entanglement::{concurrence_x, entropy_derivative_sweep, renyi, von_neumann};
use lmg_rdm::lmg::RdmElement;
use lmg_rdm::scaling::{find_peak, uniform_grid, Control};
use lmg_rdm::sweep::{run_sweep, FixedParams, Observable};

fn main() -> lmg_rdm::Result<()> {
    let grid = uniform_grid(0.8, 1.2, 401)?;
    let fixed = FixedParams::default();
    for n in [500, 1000, 2000] {
        let s = run_sweep(n, Control::Field, &grid, &fixed)?;
        let rdms: Vec<_> = s.points.iter().map(|p| p.rdm).collect();
        let ds2 = entropy_derivative_sweep(n, Control::Field, &grid, &rdms, 2.0)?;
        let dr11 = s.derivative(Observable::Rdm(RdmElement::R11))?;
        let p_s = find_peak(&ds2.oriented().0)?;
        let p_r = find_peak(&dr11.oriented().0)?;
        println!(
            "N={n:5}: |dS2/dlambda| peak {:.5} (height {:.3}), dr11/dlambda peak {:.5}",
            p_s.location, p_s.height, p_r.location
        );
    }

    let s = run_sweep(1000, Control::Field, &[0.5, 0.9, 1.0, 1.1, 1.5], &fixed)?;
    println!("\nN = 1000 ground state:");
    println!("  lambda    S1        S2        C");
    for p in &s.points {
        println!(
            "  {:4.2}   {:.6}  {:.6}  {:.6}",
            p.control,
            von_neumann(&p.rdm)?.value,
            renyi(&p.rdm, 2.0)?.value,
            concurrence_x(&p.rdm)
        );
    }
    Ok(())
}
