//! Entanglement measures on two-spin reduced density matrices.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lmg::TwoBodyRdm;
use crate::qudit::PairRdm;
use crate::scaling::{derivative_curve, Control, SweepCurve};
use crate::spectra::{self, SymmetricMatrix};

/// Eigenvalues below this are treated as zero before taking logs.
pub const CLIP: f64 = 1e-14;

/// Entropy in natural-log units. `order == 1` is von Neumann.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyValue {
    pub order: f64,
    pub value: f64,
}

/// Anything whose eigenvalues form a probability distribution.
pub trait DensitySpectrum {
    fn probabilities(&self) -> Result<Vec<f64>>;
}

impl DensitySpectrum for TwoBodyRdm {
    fn probabilities(&self) -> Result<Vec<f64>> {
        Ok(self.eigenvalues().to_vec())
    }
}

impl DensitySpectrum for PairRdm {
    fn probabilities(&self) -> Result<Vec<f64>> {
        self.matrix.probabilities()
    }
}

impl DensitySpectrum for SymmetricMatrix {
    fn probabilities(&self) -> Result<Vec<f64>> {
        Ok(spectra::eigvalsh(self)?.eigenvalues)
    }
}

impl DensitySpectrum for [f64] {
    fn probabilities(&self) -> Result<Vec<f64>> {
        Ok(self.to_vec())
    }
}

/// `S_n = ln(Σ p^n) / (1 - n)` from a spectrum.
pub fn renyi_from_probabilities(p: &[f64], order: f64) -> Result<EntropyValue> {
    if !(order > 0.0) || !order.is_finite() {
        return Err(Error::InvalidOrder(order));
    }
    let kept = p.iter().copied().filter(|&x| x > CLIP);
    let value = if order == 1.0 {
        -kept.map(|x| x * x.ln()).sum::<f64>()
    } else {
        kept.map(|x| x.powf(order)).sum::<f64>().ln() / (1.0 - order)
    };
    Ok(EntropyValue {
        order,
        value: value.max(0.0),
    })
}

pub fn renyi<R: DensitySpectrum + ?Sized>(rdm: &R, order: f64) -> Result<EntropyValue> {
    renyi_from_probabilities(&rdm.probabilities()?, order)
}

pub fn von_neumann<R: DensitySpectrum + ?Sized>(rdm: &R) -> Result<EntropyValue> {
    renyi(rdm, 1.0)
}

/// Closed-form concurrence of an X state,
/// `2 max(0, |r23| - sqrt(r11 r44), |r14| - r22)`.
pub fn concurrence_x(rdm: &TwoBodyRdm) -> f64 {
    let a = rdm.r23.abs() - (rdm.r11 * rdm.r44).max(0.0).sqrt();
    let b = rdm.r14.abs() - rdm.r22;
    2.0 * a.max(b).max(0.0)
}

/// `∂S_n/∂(control)` on a grid of pair RDMs, by central differences.
pub fn entropy_derivative_sweep(
    spins: usize,
    control: Control,
    grid: &[f64],
    rdms: &[TwoBodyRdm],
    order: f64,
) -> Result<SweepCurve> {
    if grid.len() < 5 {
        return Err(Error::GridTooCoarse(grid.len()));
    }
    if grid.len() != rdms.len() {
        return Err(Error::Dimension(format!(
            "{} grid points but {} RDMs",
            grid.len(),
            rdms.len()
        )));
    }
    let values = rdms
        .iter()
        .map(|r| renyi(r, order).map(|s| s.value))
        .collect::<Result<Vec<_>>>()?;
    let curve = SweepCurve::new(spins, control, grid.to_vec(), values, format!("S{order}"))?;
    derivative_curve(&curve)
}
