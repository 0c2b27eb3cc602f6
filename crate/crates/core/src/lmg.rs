//! Exact LMG thermodynamics through the collective-spin decomposition.
//!
//! With `J_α = Σ_i σ^α_i / 2` the Hamiltonian
//! `H = -(J/N) Σ_{i<j} (σ^x_i σ^x_j + γ σ^y_i σ^y_j) - λ Σ_i σ^z_i`
//! becomes `-(J/N) [(2J_x² - N/2) + γ (2J_y² - N/2)] - 2λ J_z`, which is
//! block diagonal in total spin `j`. Each block of dimension `2j + 1` appears
//! `d(N, j)` times and couples only `m` to `m ± 2`, so it splits further into
//! two tridiagonal parity blocks.
//!
//! Sector bases run `m = j, j-1, ..., -j`. Spin sectors are labelled by
//! `two_j = 2j` so odd `N` needs no half-integers.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::qudit::QuditHamiltonian;
use crate::spectra::{self, DiffOrder, Spectrum, SymmetricMatrix, Tridiagonal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LmgParams {
    /// Ferromagnetic coupling `J`.
    pub coupling: f64,
    /// Anisotropy `γ ∈ [0, 1]`.
    pub gamma: f64,
    /// Transverse field `λ`.
    pub field: f64,
    pub spins: usize,
}

impl LmgParams {
    pub fn new(spins: usize, coupling: f64, gamma: f64, field: f64) -> Result<Self> {
        let p = Self {
            coupling,
            gamma,
            field,
            spins,
        };
        p.validate()?;
        Ok(p)
    }

    /// `J = 1`, `γ = 0`.
    pub fn isotropic_x(spins: usize, field: f64) -> Result<Self> {
        Self::new(spins, 1.0, 0.0, field)
    }

    /// `J = 0` is accepted for the free-spin limit; negative `λ` is accepted
    /// so finite differences can straddle `λ = 0`.
    pub fn validate(&self) -> Result<()> {
        if self.spins < 2 {
            return Err(Error::InvalidParams(format!("N = {} < 2", self.spins)));
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "J = {} must be >= 0",
                self.coupling
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidParams(format!(
                "gamma = {} outside [0, 1]",
                self.gamma
            )));
        }
        if !self.field.is_finite() {
            return Err(Error::InvalidParams(format!(
                "lambda = {} is not finite",
                self.field
            )));
        }
        Ok(())
    }

    pub fn with_field(self, field: f64) -> Self {
        Self { field, ..self }
    }

    /// Allowed `2j` values, largest first.
    pub fn sector_labels(&self) -> impl Iterator<Item = usize> {
        (self.spins % 2..=self.spins).rev().step_by(2)
    }
}

/// `ln C(n, k)`.
fn ln_binomial(n: usize, k: usize) -> f64 {
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `ln[C(N, N/2 - j) - C(N, N/2 - j - 1)]`, the multiplicity of spin `j`.
///
/// Uses `C(N, k-1) = C(N, k) k / (N - k + 1)`, so the difference equals
/// `C(N, k) (2j + 1) / (N - k + 1)` with no cancellation.
pub fn sector_log_degeneracy(spins: usize, two_j: usize) -> Result<f64> {
    if two_j > spins || (spins - two_j) % 2 != 0 {
        return Err(Error::InvalidSector { spins, two_j });
    }
    let k = (spins - two_j) / 2;
    Ok(ln_binomial(spins, k) + ((two_j + 1) as f64).ln() - ((spins - k + 1) as f64).ln())
}

/// Expectation values of collective operators in one state or ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CollectiveMoments {
    pub jz: f64,
    pub jz2: f64,
    pub jx2: f64,
    pub jy2: f64,
    /// `⟨J²⟩ = ⟨j(j+1)⟩`.
    pub j_squared: f64,
}

/// One eigenstate of a sector block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub energy: f64,
    pub moments: CollectiveMoments,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSector {
    spins: usize,
    two_j: usize,
    log_degeneracy: f64,
    /// `H[k][k]`.
    diag: Vec<f64>,
    /// `H[k][k+2]`.
    skip: Vec<f64>,
    /// `⟨m_k | J_+² | m_{k+2}⟩`.
    raise2: Vec<f64>,
}

pub fn build_sector(params: &LmgParams, two_j: usize) -> Result<SpinSector> {
    params.validate()?;
    let n = params.spins;
    let log_degeneracy = sector_log_degeneracy(n, two_j)?;
    let j = two_j as f64 / 2.0;
    let jj = j * (j + 1.0);
    let dim = two_j + 1;
    let scale = params.coupling / n as f64;
    let m_of = |k: usize| (two_j as f64 - 2.0 * k as f64) / 2.0;
    let diag = (0..dim)
        .map(|k| {
            let m = m_of(k);
            -scale * (1.0 + params.gamma) * (jj - m * m - n as f64 / 2.0) - 2.0 * params.field * m
        })
        .collect();
    let raise2: Vec<f64> = (0..dim.saturating_sub(2))
        .map(|k| {
            let lower = m_of(k + 2);
            ((jj - lower * (lower + 1.0)) * (jj - (lower + 1.0) * (lower + 2.0))).sqrt()
        })
        .collect();
    let skip = raise2
        .iter()
        .map(|c| -scale * (1.0 - params.gamma) / 2.0 * c)
        .collect();
    Ok(SpinSector {
        spins: n,
        two_j,
        log_degeneracy,
        diag,
        skip,
        raise2,
    })
}

impl SpinSector {
    pub fn two_j(&self) -> usize {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.two_j + 1
    }

    pub fn spins(&self) -> usize {
        self.spins
    }

    pub fn log_degeneracy(&self) -> f64 {
        self.log_degeneracy
    }

    pub fn m(&self, k: usize) -> f64 {
        (self.two_j as f64 - 2.0 * k as f64) / 2.0
    }

    /// Dense sector matrix with half-bandwidth 2.
    pub fn hamiltonian(&self) -> SymmetricMatrix {
        let mut h = SymmetricMatrix::with_bandwidth(self.dim(), 2);
        for (k, &d) in self.diag.iter().enumerate() {
            h.set(k, k, d);
        }
        for (k, &s) in self.skip.iter().enumerate() {
            h.set(k, k + 2, s);
        }
        h
    }

    /// Parity block `p` holds sector indices `p, p + 2, ...`.
    fn block(&self, parity: usize) -> Option<Tridiagonal> {
        if parity >= self.dim() {
            return None;
        }
        let diag: Vec<f64> = self.diag.iter().skip(parity).step_by(2).copied().collect();
        let off: Vec<f64> = self.skip.iter().skip(parity).step_by(2).copied().collect();
        Some(Tridiagonal::new(diag, off).expect("sector blocks are well formed"))
    }

    fn block_indices(&self, parity: usize) -> impl Iterator<Item = usize> {
        (parity..self.dim()).step_by(2)
    }

    /// Moments of a block eigenvector `v` living on parity `p`.
    fn moments_of(&self, parity: usize, v: &[f64]) -> CollectiveMoments {
        let j = self.j();
        let jj = j * (j + 1.0);
        let mut jz = 0.0;
        let mut jz2 = 0.0;
        for (&x, k) in v.iter().zip(self.block_indices(parity)) {
            let m = self.m(k);
            jz += x * x * m;
            jz2 += x * x * m * m;
        }
        let mut raise = 0.0;
        for (w, k) in v.windows(2).zip(self.block_indices(parity)) {
            raise += w[0] * w[1] * self.raise2[k];
        }
        // ⟨J+² + J-²⟩ = 2 Σ v_k v_{k+2} ⟨m_k|J+²|m_{k+2}⟩
        let pair_term = 2.0 * raise;
        let transverse = jj - jz2;
        CollectiveMoments {
            jz,
            jz2,
            jx2: pair_term / 4.0 + transverse / 2.0,
            jy2: -pair_term / 4.0 + transverse / 2.0,
            j_squared: jj,
        }
    }

    /// Every eigenstate with its energy and moments, ascending in energy.
    pub fn levels(&self) -> Result<Vec<Level>> {
        let mut out = Vec::with_capacity(self.dim());
        for parity in 0..2 {
            let Some(block) = self.block(parity) else {
                continue;
            };
            let spec = block.eigh(true)?;
            for (k, v) in spec.vectors().enumerate() {
                out.push(Level {
                    energy: spec.eigenvalues[k],
                    moments: self.moments_of(parity, v),
                });
            }
        }
        out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        Ok(out)
    }

    /// Full sector spectrum with eigenvectors in the `m = j..-j` basis.
    pub fn spectrum(&self) -> Result<Spectrum> {
        let dim = self.dim();
        let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(dim);
        for parity in 0..2 {
            let Some(block) = self.block(parity) else {
                continue;
            };
            let spec = block.eigh(true)?;
            for (k, v) in spec.vectors().enumerate() {
                let mut full = vec![0.0; dim];
                for (&x, idx) in v.iter().zip(self.block_indices(parity)) {
                    full[idx] = x;
                }
                pairs.push((spec.eigenvalues[k], full));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let values = pairs.iter().map(|p| p.0).collect();
        let vectors = pairs.into_iter().flat_map(|p| p.1).collect();
        Ok(Spectrum::new(dim, values, Some(vectors)))
    }

    /// Lowest level. Between the parity blocks ties go to the block
    /// containing `m = j`.
    pub fn ground_state(&self) -> Result<Level> {
        let mut best: Option<Level> = None;
        for parity in 0..2 {
            let Some(block) = self.block(parity) else {
                continue;
            };
            let (energy, v) = block.lowest()?;
            let level = Level {
                energy,
                moments: self.moments_of(parity, &v),
            };
            if best.map_or(true, |b| level.energy < b.energy) {
                best = Some(level);
            }
        }
        Ok(best.expect("sector has at least one state"))
    }
}

/// All levels of one sector, kept without eigenvectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorLevels {
    pub two_j: usize,
    pub log_degeneracy: f64,
    pub levels: Vec<Level>,
}

/// Every sector of the model diagonalized once; thermal averages at any
/// temperature are then cheap reductions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LmgSpectrum {
    pub params: LmgParams,
    pub sectors: Vec<SectorLevels>,
}

/// Thermal averages over the degeneracy-weighted ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalMoments {
    pub temperature: f64,
    pub moments: CollectiveMoments,
    pub log_z: f64,
    pub free_energy: f64,
    /// Internal energy `⟨H⟩`.
    pub energy: f64,
}

impl ThermalMoments {
    /// `S = (E - F) / T`.
    pub fn entropy(&self) -> f64 {
        (self.energy - self.free_energy) / self.temperature
    }
}

impl LmgSpectrum {
    pub fn solve(params: &LmgParams) -> Result<Self> {
        params.validate()?;
        let labels: Vec<usize> = params.sector_labels().collect();
        let sectors = labels
            .par_iter()
            .map(|&two_j| {
                let sector = build_sector(params, two_j)?;
                Ok(SectorLevels {
                    two_j,
                    log_degeneracy: sector.log_degeneracy(),
                    levels: sector.levels()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params: *params,
            sectors,
        })
    }

    pub fn thermal(&self, temperature: f64) -> Result<ThermalMoments> {
        if !(temperature > 0.0) {
            return Err(Error::NonPositiveTemperature(temperature));
        }
        let mut shift = f64::NEG_INFINITY;
        for s in &self.sectors {
            for l in &s.levels {
                shift = shift.max(s.log_degeneracy - l.energy / temperature);
            }
        }
        let mut z = 0.0;
        let mut acc = CollectiveMoments::default();
        let mut energy = 0.0;
        for s in &self.sectors {
            for l in &s.levels {
                let w = (s.log_degeneracy - l.energy / temperature - shift).exp();
                z += w;
                energy += w * l.energy;
                acc.jz += w * l.moments.jz;
                acc.jz2 += w * l.moments.jz2;
                acc.jx2 += w * l.moments.jx2;
                acc.jy2 += w * l.moments.jy2;
                acc.j_squared += w * l.moments.j_squared;
            }
        }
        let moments = CollectiveMoments {
            jz: acc.jz / z,
            jz2: acc.jz2 / z,
            jx2: acc.jx2 / z,
            jy2: acc.jy2 / z,
            j_squared: acc.j_squared / z,
        };
        let log_z = shift + z.ln();
        Ok(ThermalMoments {
            temperature,
            moments,
            log_z,
            free_energy: -temperature * log_z,
            energy: energy / z,
        })
    }

    /// Every eigenvalue repeated by its sector multiplicity (small `N` only).
    pub fn replicated_energies(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for s in &self.sectors {
            let copies = s.log_degeneracy.exp().round() as usize;
            for l in &s.levels {
                out.extend(std::iter::repeat(l.energy).take(copies));
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

pub fn thermal_moments(params: &LmgParams, temperature: f64) -> Result<ThermalMoments> {
    if !(temperature > 0.0) {
        return Err(Error::NonPositiveTemperature(temperature));
    }
    LmgSpectrum::solve(params)?.thermal(temperature)
}

/// Ground state of the maximal-spin sector, where it lives for `J > 0`.
pub fn ground_state(params: &LmgParams) -> Result<Level> {
    build_sector(params, params.spins)?.ground_state()
}

pub fn ground_state_moments(params: &LmgParams) -> Result<CollectiveMoments> {
    Ok(ground_state(params)?.moments)
}

/// Single-site and nearest-pair Pauli correlators of a permutation-symmetric
/// state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairCorrelators {
    pub sz: f64,
    pub szz: f64,
    pub sxx: f64,
    pub syy: f64,
}

/// Uses `Σ_{i<j} σ^α_i σ^α_j = 2J_α² - N/2`.
pub fn pair_correlators(m: &CollectiveMoments, spins: usize) -> PairCorrelators {
    let n = spins as f64;
    let pair = |j2: f64| (4.0 * j2 - n) / (n * (n - 1.0));
    PairCorrelators {
        sz: 2.0 * m.jz / n,
        szz: pair(m.jz2),
        sxx: pair(m.jx2),
        syy: pair(m.jy2),
    }
}

/// X-form two-spin RDM in the basis `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩`, with
/// `ρ22 = ρ33` and `ρ12 = ρ34 = 0` fixed by symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoBodyRdm {
    pub r11: f64,
    pub r22: f64,
    pub r44: f64,
    pub r14: f64,
    pub r23: f64,
}

const PSD_TOLERANCE: f64 = 1e-9;

pub fn rdm_from_correlators(c: &PairCorrelators) -> Result<TwoBodyRdm> {
    let rdm = TwoBodyRdm {
        r11: (c.szz + 2.0 * c.sz + 1.0) / 4.0,
        r44: (c.szz - 2.0 * c.sz + 1.0) / 4.0,
        r22: (1.0 - c.szz) / 4.0,
        r23: (c.sxx + c.syy) / 4.0,
        r14: (c.sxx - c.syy) / 4.0,
    };
    rdm.check_psd(PSD_TOLERANCE)?;
    Ok(rdm)
}

impl TwoBodyRdm {
    pub fn trace(&self) -> f64 {
        self.r11 + 2.0 * self.r22 + self.r44
    }

    pub fn check_psd(&self, tol: f64) -> Result<()> {
        let ev = self.eigenvalues();
        if let Some(min) = ev.iter().copied().reduce(f64::min) {
            if min < -tol {
                return Err(Error::NotPositiveSemidefinite(format!(
                    "eigenvalue {min:e} of {self:?}"
                )));
            }
        }
        Ok(())
    }

    /// Closed-form spectrum `r22 ± r23` and
    /// `(r11 + r44)/2 ± sqrt((r11 - r44)²/4 + r14²)`.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let mean = 0.5 * (self.r11 + self.r44);
        let radius = (0.25 * (self.r11 - self.r44).powi(2) + self.r14 * self.r14).sqrt();
        [
            self.r22 + self.r23,
            self.r22 - self.r23,
            mean + radius,
            mean - radius,
        ]
    }

    pub fn to_matrix(&self) -> SymmetricMatrix {
        let mut m = SymmetricMatrix::zeros(4);
        m.set(0, 0, self.r11);
        m.set(1, 1, self.r22);
        m.set(2, 2, self.r22);
        m.set(3, 3, self.r44);
        m.set(0, 3, self.r14);
        m.set(1, 2, self.r23);
        m
    }

    /// Reduced state of one spin, `diag(r11 + r22, r22 + r44)`.
    pub fn single_site(&self) -> [f64; 2] {
        [self.r11 + self.r22, self.r22 + self.r44]
    }

    pub fn element(&self, which: RdmElement) -> f64 {
        match which {
            RdmElement::R11 => self.r11,
            RdmElement::R22 => self.r22,
            RdmElement::R44 => self.r44,
            RdmElement::R14 => self.r14,
            RdmElement::R23 => self.r23,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RdmElement {
    R11,
    R22,
    R44,
    R14,
    R23,
}

impl RdmElement {
    pub const ALL: [RdmElement; 5] = [
        RdmElement::R11,
        RdmElement::R22,
        RdmElement::R44,
        RdmElement::R14,
        RdmElement::R23,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RdmElement::R11 => "r11",
            RdmElement::R22 => "r22",
            RdmElement::R44 => "r44",
            RdmElement::R14 => "r14",
            RdmElement::R23 => "r23",
        }
    }
}

impl ThermalMoments {
    pub fn rdm(&self, spins: usize) -> Result<TwoBodyRdm> {
        rdm_from_correlators(&pair_correlators(&self.moments, spins))
    }
}

/// The LMG Hamiltonian written as a qudit model (`d = 2`, `|↑⟩ = 0`).
pub fn to_qudit(params: &LmgParams) -> Result<QuditHamiltonian> {
    params.validate()?;
    let n = params.spins;
    let mut h = QuditHamiltonian::new(n, 2)?;
    let onsite = SymmetricMatrix::diagonal(&[-params.field, params.field]);
    let scale = params.coupling / n as f64;
    let mut v = SymmetricMatrix::zeros(4);
    // σx⊗σx + γ σy⊗σy
    v.set(0, 3, -scale * (1.0 - params.gamma));
    v.set(1, 2, -scale * (1.0 + params.gamma));
    for i in 0..n {
        h.set_onebody(i, onsite.clone())?;
        for j in i + 1..n {
            h.set_twobody(i, j, v.clone())?;
        }
    }
    Ok(h)
}

/// Both sides of the LMG free-energy identities at one `(λ, T)` point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LmgIdentityReport {
    pub params: LmgParams,
    pub temperature: f64,
    /// `∂F/∂λ` by central difference.
    pub df_dlambda: f64,
    /// `-N (r11 - r44)`.
    pub df_dlambda_rdm: f64,
    pub d2f_dlambda2: f64,
    /// `-N (∂_λ r11 - ∂_λ r44)`.
    pub d2f_dlambda2_rdm: f64,
    /// `F - T ∂F/∂T`.
    pub energy_from_f: f64,
    /// `-(N-1) J [(1-γ) r14 + (1+γ) r23] - λ N (r11 - r44)`.
    pub energy_rdm: f64,
    pub d2f_dt2: f64,
    /// `(N-1)J/T [(1-γ) ∂_T r14 + (1+γ) ∂_T r23] + λN/T [∂_T r11 - ∂_T r44]`.
    pub d2f_dt2_rdm: f64,
}

impl LmgIdentityReport {
    pub fn residuals(&self) -> [f64; 4] {
        [
            (self.df_dlambda - self.df_dlambda_rdm).abs(),
            (self.d2f_dlambda2 - self.d2f_dlambda2_rdm).abs(),
            (self.energy_from_f - self.energy_rdm).abs(),
            (self.d2f_dt2 - self.d2f_dt2_rdm).abs(),
        ]
    }
}

fn pair_energy(params: &LmgParams, rdm: &TwoBodyRdm) -> f64 {
    let n = params.spins as f64;
    -(n - 1.0) * params.coupling * ((1.0 - params.gamma) * rdm.r14 + (1.0 + params.gamma) * rdm.r23)
        - params.field * n * (rdm.r11 - rdm.r44)
}

pub fn lmg_free_energy_derivatives(
    params: &LmgParams,
    temperature: f64,
) -> Result<LmgIdentityReport> {
    if !(temperature > 0.0) {
        return Err(Error::NonPositiveTemperature(temperature));
    }
    let n = params.spins as f64;
    let h_l = 1e-4 * params.field.abs().max(1.0);
    let h_t = 1e-4 * temperature;

    let at_field = |l: f64| LmgSpectrum::solve(&params.with_field(l));
    let center = at_field(params.field)?;
    let plus = at_field(params.field + h_l)?;
    let minus = at_field(params.field - h_l)?;

    let t0 = center.thermal(temperature)?;
    let rdm = t0.rdm(params.spins)?;
    let f = |s: &LmgSpectrum, t: f64| -> Result<f64> { Ok(s.thermal(t)?.free_energy) };

    let df_dlambda = (f(&plus, temperature)? - f(&minus, temperature)?) / (2.0 * h_l);
    let d2f_dlambda2 =
        (f(&plus, temperature)? - 2.0 * t0.free_energy + f(&minus, temperature)?) / (h_l * h_l);
    let rdm_lp = plus.thermal(temperature)?.rdm(params.spins)?;
    let rdm_lm = minus.thermal(temperature)?.rdm(params.spins)?;
    let dr11 = (rdm_lp.r11 - rdm_lm.r11) / (2.0 * h_l);
    let dr44 = (rdm_lp.r44 - rdm_lm.r44) / (2.0 * h_l);

    let df_dt = spectra::try_central_diff(|t| f(&center, t), temperature, h_t, DiffOrder::First)?;
    let d2f_dt2 =
        spectra::try_central_diff(|t| f(&center, t), temperature, h_t, DiffOrder::Second)?;
    let rdm_tp = center.thermal(temperature + h_t)?.rdm(params.spins)?;
    let rdm_tm = center.thermal(temperature - h_t)?.rdm(params.spins)?;
    let dt = |a: f64, b: f64| (a - b) / (2.0 * h_t);
    let d2f_dt2_rdm = (n - 1.0) * params.coupling / temperature
        * ((1.0 - params.gamma) * dt(rdm_tp.r14, rdm_tm.r14)
            + (1.0 + params.gamma) * dt(rdm_tp.r23, rdm_tm.r23))
        + params.field * n / temperature
            * (dt(rdm_tp.r11, rdm_tm.r11) - dt(rdm_tp.r44, rdm_tm.r44));

    Ok(LmgIdentityReport {
        params: *params,
        temperature,
        df_dlambda,
        df_dlambda_rdm: -n * (rdm.r11 - rdm.r44),
        d2f_dlambda2,
        d2f_dlambda2_rdm: -n * (dr11 - dr44),
        energy_from_f: t0.free_energy - temperature * df_dt,
        energy_rdm: pair_energy(params, &rdm),
        d2f_dt2,
        d2f_dt2_rdm,
    })
}

/// Ground-state version of `∂E0/∂λ = -N (r11 - r44)`: `(finite difference, RDM side)`.
pub fn ground_state_field_derivative(params: &LmgParams) -> Result<(f64, f64)> {
    let h = 1e-4 * params.field.abs().max(1.0);
    let e = |l: f64| -> Result<f64> { Ok(ground_state(&params.with_field(l))?.energy) };
    let fd = (e(params.field + h)? - e(params.field - h)?) / (2.0 * h);
    let m = ground_state_moments(params)?;
    let rdm = rdm_from_correlators(&pair_correlators(&m, params.spins))?;
    Ok((fd, -(params.spins as f64) * (rdm.r11 - rdm.r44)))
}
