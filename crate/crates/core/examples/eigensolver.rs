//! Dense and tridiagonal symmetric eigensolvers.
//!
//! cargo run --release --example eigensolver

use lmg_rdm::spectra::{eigh, SymmetricMatrix, Tridiagonal};

fn main() -> lmg_rdm::Result<()> {
    // 1D tight-binding chain: eigenvalues 2cos(kπ/(n+1)).
    let n = 8;
    let mut chain = SymmetricMatrix::zeros(n);
    for i in 0..n - 1 {
        chain.set(i, i + 1, 1.0);
    }
    let s = eigh(&chain)?;
    println!("chain eigenvalues vs 2cos(k pi/(n+1)):");
    for (k, e) in s.eigenvalues.iter().enumerate() {
        let exact = -2.0 * (((k + 1) as f64) * std::f64::consts::PI / (n + 1) as f64).cos();
        println!("  {e:+.12}  {exact:+.12}");
    }
    println!(
        "residual {:.2e}, orthonormality {:.2e}",
        s.residual(&chain).unwrap(),
        s.orthonormality_error().unwrap()
    );

    // Lowest state of a long tridiagonal matrix by bisection and inverse iteration.
    let m = 2001;
    let diag: Vec<f64> = (0..m)
        .map(|k| ((k as f64) - 1000.0).powi(2) * 1e-3)
        .collect();
    let t = Tridiagonal::new(diag, vec![-1.0; m - 1])?;
    let (e0, v) = t.lowest()?;
    let hv = t.matvec(&v);
    let res = hv
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - e0 * b).powi(2))
        .sum::<f64>()
        .sqrt();
    println!("dim {m}: lowest eigenvalue {e0:.12}, |Hv - ev| = {res:.2e}");
    println!("states below 0: {}", t.count_below(0.0));
    Ok(())
}
