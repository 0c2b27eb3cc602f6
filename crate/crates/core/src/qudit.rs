//! Brute-force engine for general one- and two-body qudit Hamiltonians.
//!
//! Basis convention: the tensor-product basis index of `N` sites with local
//! dimension `d` is `Σ_k a_k d^(N-1-k)`, so site 0 varies slowest. Pair
//! operators and pair RDMs on `(i, j)` use the local index `a_i * d + a_j`.
//!
//! Pairs are unordered (`i < j`) and each registered pair carries its full
//! `V^{ij}`. The pair coupling `U^{ij}` splits every one-body term evenly
//! over the pairs its site belongs to: `U^{ij} = E^i ⊗ 1 / N_i + 1 ⊗ E^j / N_j
//! + V^{ij}`, so `Σ_{i<j} Tr[U^{ij} ρ^{ij}] = Tr[ρ H]` holds exactly.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectra::{self, try_central_diff, DiffOrder, Spectrum, SymmetricMatrix};

/// Default cap on `d^N` for full-space assembly.
pub const DEFAULT_STATE_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct QuditHamiltonian {
    sites: usize,
    local_dim: usize,
    onebody: BTreeMap<usize, SymmetricMatrix>,
    twobody: BTreeMap<(usize, usize), SymmetricMatrix>,
}

/// A `d² × d²` operator acting on the site pair `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOperator {
    pub pair: (usize, usize),
    pub matrix: SymmetricMatrix,
}

/// Two-site reduced density matrix in the `(i, j)` local basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRdm {
    pub pair: (usize, usize),
    pub matrix: SymmetricMatrix,
}

impl QuditHamiltonian {
    pub fn new(sites: usize, local_dim: usize) -> Result<Self> {
        if sites == 0 || local_dim < 2 {
            return Err(Error::InvalidParams(format!(
                "need at least one site and d >= 2, got N = {sites}, d = {local_dim}"
            )));
        }
        Ok(Self {
            sites,
            local_dim,
            onebody: BTreeMap::new(),
            twobody: BTreeMap::new(),
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn states(&self) -> u128 {
        (self.local_dim as u128).saturating_pow(self.sites as u32)
    }

    pub fn set_onebody(&mut self, site: usize, matrix: SymmetricMatrix) -> Result<()> {
        self.check_site(site)?;
        if matrix.dim() != self.local_dim {
            return Err(Error::Dimension(format!(
                "one-body term on site {site} is {0}x{0}, expected {1}x{1}",
                matrix.dim(),
                self.local_dim
            )));
        }
        matrix.validate()?;
        self.onebody.insert(site, matrix);
        Ok(())
    }

    /// Registers the pair `(i, j)`, `i < j`, with coupling `V^{ij}`. A pair
    /// registered with a zero matrix still counts toward `N_i`.
    pub fn set_twobody(&mut self, i: usize, j: usize, matrix: SymmetricMatrix) -> Result<()> {
        self.check_site(i)?;
        self.check_site(j)?;
        if i >= j {
            return Err(Error::InvalidPair(i, j));
        }
        let d2 = self.local_dim * self.local_dim;
        if matrix.dim() != d2 {
            return Err(Error::Dimension(format!(
                "two-body term on ({i}, {j}) is {0}x{0}, expected {d2}x{d2}",
                matrix.dim()
            )));
        }
        matrix.validate()?;
        self.twobody.insert((i, j), matrix);
        Ok(())
    }

    /// Registers every pair `i < j` with a zero coupling if not yet present.
    pub fn register_all_pairs(&mut self) {
        let d2 = self.local_dim * self.local_dim;
        for i in 0..self.sites {
            for j in i + 1..self.sites {
                self.twobody
                    .entry((i, j))
                    .or_insert_with(|| SymmetricMatrix::zeros(d2));
            }
        }
    }

    pub fn onebody(&self, site: usize) -> Option<&SymmetricMatrix> {
        self.onebody.get(&site)
    }

    pub fn twobody(&self, i: usize, j: usize) -> Option<&SymmetricMatrix> {
        self.twobody.get(&(i, j))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.twobody.keys().copied()
    }

    /// Number of registered pairs containing `site`.
    pub fn neighbor_count(&self, site: usize) -> usize {
        self.twobody
            .keys()
            .filter(|&&(i, j)| i == site || j == site)
            .count()
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.sites {
            return Err(Error::InvalidSite {
                site,
                sites: self.sites,
            });
        }
        Ok(())
    }

    /// `Σ_k c_k H_k` over Hamiltonians sharing `N`, `d` and the pair set.
    pub fn linear_combination(terms: &[(f64, &QuditHamiltonian)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidParams("empty combination".into()))?;
        let mut out = QuditHamiltonian::new(first.sites, first.local_dim)?;
        for (c, h) in terms {
            if h.sites != first.sites || h.local_dim != first.local_dim {
                return Err(Error::Dimension(
                    "combined Hamiltonians differ in N or d".into(),
                ));
            }
            if !h.twobody.keys().eq(first.twobody.keys()) {
                return Err(Error::InvalidParams(
                    "combined Hamiltonians have different pair sets".into(),
                ));
            }
            for (&site, e) in &h.onebody {
                out.onebody
                    .entry(site)
                    .or_insert_with(|| SymmetricMatrix::zeros(first.local_dim))
                    .add_scaled(e, *c)?;
            }
            for (&pair, v) in &h.twobody {
                out.twobody
                    .entry(pair)
                    .or_insert_with(|| SymmetricMatrix::zeros(v.dim()))
                    .add_scaled(v, *c)?;
            }
        }
        Ok(out)
    }

    pub fn assemble_full(&self) -> Result<SymmetricMatrix> {
        self.assemble_full_with_cap(DEFAULT_STATE_CAP)
    }

    /// Full `d^N × d^N` matrix `Σ_i E^i + Σ_{i<j} V^{ij}` in the product basis.
    pub fn assemble_full_with_cap(&self, cap: usize) -> Result<SymmetricMatrix> {
        let states = self.states();
        if states > cap as u128 {
            return Err(Error::StateCapExceeded { states, cap });
        }
        let dim = states as usize;
        let mut h = SymmetricMatrix::zeros(dim);
        for (&site, e) in &self.onebody {
            embed_onebody(&mut h, self.sites, self.local_dim, site, e);
        }
        for (&(i, j), v) in &self.twobody {
            embed_pair(&mut h, self.sites, self.local_dim, i, j, v);
        }
        Ok(h)
    }

    /// The pair couplings `U^{ij}` for every registered pair.
    pub fn pair_couplings(&self) -> Result<Vec<PairOperator>> {
        for (&site, e) in &self.onebody {
            if self.neighbor_count(site) == 0 && e.as_slice().iter().any(|&x| x != 0.0) {
                return Err(Error::UncoveredSite(site));
            }
        }
        let d = self.local_dim;
        let mut out = Vec::with_capacity(self.twobody.len());
        for (&(i, j), v) in &self.twobody {
            let mut u = v.clone();
            if let Some(ei) = self.onebody.get(&i) {
                let ni = self.neighbor_count(i) as f64;
                for a in 0..d {
                    for c in 0..d {
                        for b in 0..d {
                            let (row, col) = (a * d + b, c * d + b);
                            if row <= col {
                                u.add(row, col, ei.get(a, c) / ni);
                            }
                        }
                    }
                }
            }
            if let Some(ej) = self.onebody.get(&j) {
                let nj = self.neighbor_count(j) as f64;
                for a in 0..d {
                    for b in 0..d {
                        for c in 0..d {
                            let (row, col) = (a * d + b, a * d + c);
                            if row <= col {
                                u.add(row, col, ej.get(b, c) / nj);
                            }
                        }
                    }
                }
            }
            out.push(PairOperator {
                pair: (i, j),
                matrix: u,
            });
        }
        Ok(out)
    }
}

fn strides(sites: usize, d: usize) -> Vec<usize> {
    let mut s = vec![1; sites];
    for k in (0..sites.saturating_sub(1)).rev() {
        s[k] = s[k + 1] * d;
    }
    s
}

fn embed_onebody(
    h: &mut SymmetricMatrix,
    sites: usize,
    d: usize,
    site: usize,
    e: &SymmetricMatrix,
) {
    let stride = strides(sites, d)[site];
    for s in 0..h.dim() {
        let a = (s / stride) % d;
        for b in a..d {
            let t = s + (b - a) * stride;
            let v = e.get(b, a);
            if v != 0.0 {
                h.add(s, t, v);
            }
        }
    }
}

/// Adds a pair operator on `(i, j)` into a full-space matrix.
pub fn embed_pair(
    h: &mut SymmetricMatrix,
    sites: usize,
    d: usize,
    i: usize,
    j: usize,
    v: &SymmetricMatrix,
) {
    let st = strides(sites, d);
    let (si, sj) = (st[i], st[j]);
    for s in 0..h.dim() {
        let (ai, aj) = ((s / si) % d, (s / sj) % d);
        let base = s - ai * si - aj * sj;
        for bi in 0..d {
            for bj in 0..d {
                let t = base + bi * si + bj * sj;
                if t < s {
                    continue;
                }
                let val = v.get(bi * d + bj, ai * d + aj);
                if val != 0.0 {
                    h.add(s, t, val);
                }
            }
        }
    }
}

/// Canonical state `ρ = e^{-H/T} / Z` with its spectral data.
#[derive(Debug, Clone)]
pub struct ThermalState {
    pub temperature: f64,
    pub log_z: f64,
    pub density: SymmetricMatrix,
    pub spectrum: Spectrum,
    /// `ln w_k = -E_k / T - ln Z` per eigenstate.
    pub log_weights: Vec<f64>,
}

impl ThermalState {
    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    pub fn free_energy(&self) -> f64 {
        -self.temperature * self.log_z
    }

    pub fn energy(&self) -> f64 {
        self.log_weights
            .iter()
            .zip(&self.spectrum.eigenvalues)
            .map(|(lw, e)| lw.exp() * e)
            .sum()
    }

    /// Von Neumann entropy `-Tr ρ ln ρ`.
    pub fn entropy(&self) -> f64 {
        -self
            .log_weights
            .iter()
            .map(|&lw| if lw.is_finite() { lw.exp() * lw } else { 0.0 })
            .sum::<f64>()
    }
}

fn log_partition(energies: &[f64], temperature: f64) -> Result<f64> {
    let terms: Vec<f64> = energies.iter().map(|e| -e / temperature).collect();
    spectra::log_sum_exp(&terms)
}

pub fn thermal_state(h: &SymmetricMatrix, temperature: f64) -> Result<ThermalState> {
    if !(temperature > 0.0) {
        return Err(Error::NonPositiveTemperature(temperature));
    }
    let spectrum = spectra::eigh(h)?;
    let log_z = log_partition(&spectrum.eigenvalues, temperature)?;
    let log_weights: Vec<f64> = spectrum
        .eigenvalues
        .iter()
        .map(|e| -e / temperature - log_z)
        .collect();
    let n = h.dim();
    let mut density = SymmetricMatrix::zeros(n);
    let weights: Vec<f64> = log_weights.iter().map(|lw| lw.exp()).collect();
    for a in 0..n {
        for b in a..n {
            let mut acc = 0.0;
            for (k, v) in spectrum.vectors().enumerate() {
                acc += weights[k] * v[a] * v[b];
            }
            density.set(a, b, acc);
        }
    }
    Ok(ThermalState {
        temperature,
        log_z,
        density,
        spectrum,
        log_weights,
    })
}

/// `F = -T ln Z` from eigenvalues only.
pub fn free_energy(h: &QuditHamiltonian, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(Error::NonPositiveTemperature(temperature));
    }
    let spectrum = spectra::eigvalsh(&h.assemble_full()?)?;
    Ok(-temperature * log_partition(&spectrum.eigenvalues, temperature)?)
}

/// Traces out every site except `i` and `j`. The result is indexed
/// `a_i * d + a_j`, in the order the pair is given.
pub fn partial_trace_pair(
    rho: &SymmetricMatrix,
    sites: usize,
    local_dim: usize,
    i: usize,
    j: usize,
) -> Result<PairRdm> {
    if i == j {
        return Err(Error::InvalidPair(i, j));
    }
    for site in [i, j] {
        if site >= sites {
            return Err(Error::InvalidSite { site, sites });
        }
    }
    let d = local_dim;
    let expected = (d as u128).pow(sites as u32);
    if rho.dim() as u128 != expected {
        return Err(Error::Dimension(format!(
            "density matrix is {0}x{0}, expected {expected} states",
            rho.dim()
        )));
    }
    let st = strides(sites, d);
    let (si, sj) = (st[i], st[j]);
    let rest: Vec<usize> = (0..rho.dim())
        .filter(|s| (s / si) % d == 0 && (s / sj) % d == 0)
        .collect();
    let d2 = d * d;
    let mut out = SymmetricMatrix::zeros(d2);
    for p in 0..d2 {
        let (pi, pj) = (p / d, p % d);
        for q in p..d2 {
            let (qi, qj) = (q / d, q % d);
            let acc: f64 = rest
                .iter()
                .map(|&r| rho.get(r + pi * si + pj * sj, r + qi * si + qj * sj))
                .sum();
            out.set(p, q, acc);
        }
    }
    Ok(PairRdm {
        pair: (i, j),
        matrix: out,
    })
}

/// Pair RDMs of a full-space state for every registered pair of `h`.
pub fn pair_rdms(h: &QuditHamiltonian, rho: &SymmetricMatrix) -> Result<Vec<PairRdm>> {
    h.pairs()
        .map(|(i, j)| partial_trace_pair(rho, h.sites, h.local_dim, i, j))
        .collect()
}

/// `Σ_{ij} Tr[ρ^{ij} M^{ij}]`; every operator must find an RDM on its pair.
pub fn two_body_expectation(rdms: &[PairRdm], operators: &[PairOperator]) -> Result<f64> {
    let mut total = 0.0;
    for op in operators {
        let rdm = rdms
            .iter()
            .find(|r| r.pair == op.pair)
            .ok_or(Error::InvalidPair(op.pair.0, op.pair.1))?;
        total += rdm.matrix.trace_product(&op.matrix)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Serialize)]
pub struct FreeEnergyDecomposition {
    pub temperature: f64,
    /// `-T ln Z`.
    pub free_energy: f64,
    /// `Σ_{i<j} Tr[U^{ij} ρ^{ij}]`.
    pub energy: f64,
    /// `Tr[ρ H]` on the full space.
    pub energy_full_trace: f64,
    pub entropy: f64,
    pub pair_energies: Vec<((usize, usize), f64)>,
}

impl FreeEnergyDecomposition {
    /// `E - T S` through the pair-RDM energy.
    pub fn free_energy_from_parts(&self) -> f64 {
        self.energy - self.temperature * self.entropy
    }
}

pub fn free_energy_decomposition(
    h: &QuditHamiltonian,
    temperature: f64,
) -> Result<FreeEnergyDecomposition> {
    let full = h.assemble_full()?;
    let state = thermal_state(&full, temperature)?;
    let rdms = pair_rdms(h, &state.density)?;
    let couplings = h.pair_couplings()?;
    let mut pair_energies = Vec::with_capacity(couplings.len());
    for u in &couplings {
        let e = two_body_expectation(&rdms, std::slice::from_ref(u))?;
        pair_energies.push((u.pair, e));
    }
    Ok(FreeEnergyDecomposition {
        temperature,
        free_energy: state.free_energy(),
        energy: pair_energies.iter().map(|(_, e)| e).sum(),
        energy_full_trace: state.density.trace_product(&full)?,
        entropy: state.entropy(),
        pair_energies,
    })
}

/// A Hamiltonian depending smoothly on a control parameter, with the
/// analytic λ-derivatives of its pair couplings.
pub trait ParameterizedQudit {
    fn hamiltonian(&self, lambda: f64) -> Result<QuditHamiltonian>;

    /// `(∂_λ U^{ij}, ∂²_λ U^{ij})` for every pair.
    fn coupling_derivatives(&self, lambda: f64) -> Result<(Vec<PairOperator>, Vec<PairOperator>)>;
}

/// `H(λ) = H0 + λ H1 + λ² H2`.
#[derive(Debug, Clone)]
pub struct PolynomialFamily {
    pub constant: QuditHamiltonian,
    pub linear: QuditHamiltonian,
    pub quadratic: QuditHamiltonian,
}

impl PolynomialFamily {
    pub fn new(
        constant: QuditHamiltonian,
        linear: QuditHamiltonian,
        quadratic: QuditHamiltonian,
    ) -> Result<Self> {
        // Validates the shared topology once.
        QuditHamiltonian::linear_combination(&[
            (1.0, &constant),
            (1.0, &linear),
            (1.0, &quadratic),
        ])?;
        Ok(Self {
            constant,
            linear,
            quadratic,
        })
    }

    pub fn sites(&self) -> usize {
        self.constant.sites
    }
}

fn combine_couplings(
    a: &[PairOperator],
    ca: f64,
    b: &[PairOperator],
    cb: f64,
) -> Result<Vec<PairOperator>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut m = x.matrix.scaled(ca);
            m.add_scaled(&y.matrix, cb)?;
            Ok(PairOperator {
                pair: x.pair,
                matrix: m,
            })
        })
        .collect()
}

impl ParameterizedQudit for PolynomialFamily {
    fn hamiltonian(&self, lambda: f64) -> Result<QuditHamiltonian> {
        QuditHamiltonian::linear_combination(&[
            (1.0, &self.constant),
            (lambda, &self.linear),
            (lambda * lambda, &self.quadratic),
        ])
    }

    fn coupling_derivatives(&self, lambda: f64) -> Result<(Vec<PairOperator>, Vec<PairOperator>)> {
        let u1 = self.linear.pair_couplings()?;
        let u2 = self.quadratic.pair_couplings()?;
        let first = combine_couplings(&u1, 1.0, &u2, 2.0 * lambda)?;
        let second = combine_couplings(&u1, 0.0, &u2, 2.0)?;
        Ok((first, second))
    }
}

fn random_symmetric(rng: &mut ChaCha8Rng, dim: usize, amplitude: f64) -> SymmetricMatrix {
    let mut m = SymmetricMatrix::zeros(dim);
    for a in 0..dim {
        for b in a..dim {
            m.set(a, b, amplitude * rng.gen_range(-1.0..1.0));
        }
    }
    m
}

fn random_hamiltonian(
    rng: &mut ChaCha8Rng,
    sites: usize,
    d: usize,
    amplitude: f64,
) -> Result<QuditHamiltonian> {
    let mut h = QuditHamiltonian::new(sites, d)?;
    for i in 0..sites {
        h.set_onebody(i, random_symmetric(rng, d, amplitude))?;
    }
    for i in 0..sites {
        for j in i + 1..sites {
            h.set_twobody(i, j, random_symmetric(rng, d * d, amplitude))?;
        }
    }
    Ok(h)
}

/// Fully connected instance with uniform `[-1, 1)` couplings.
pub fn random_instance(sites: usize, local_dim: usize, seed: u64) -> Result<QuditHamiltonian> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_hamiltonian(&mut rng, sites, local_dim, 1.0)
}

/// Random quadratic family `H0 + λ H1 + λ² H2` with shrinking amplitudes.
pub fn random_family(sites: usize, local_dim: usize, seed: u64) -> Result<PolynomialFamily> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h0 = random_hamiltonian(&mut rng, sites, local_dim, 1.0)?;
    let h1 = random_hamiltonian(&mut rng, sites, local_dim, 0.5)?;
    let h2 = random_hamiltonian(&mut rng, sites, local_dim, 0.25)?;
    PolynomialFamily::new(h0, h1, h2)
}

pub fn pauli_z() -> SymmetricMatrix {
    SymmetricMatrix::diagonal(&[1.0, -1.0])
}

pub fn pauli_x() -> SymmetricMatrix {
    let mut m = SymmetricMatrix::zeros(2);
    m.set(0, 1, 1.0);
    m
}

/// Spin-1/2 sites in a field, `H = -λ Σ σ^z`, with every pair registered
/// at zero coupling so the one-body terms can be carried by pairs.
pub fn decoupled_spins(sites: usize) -> Result<PolynomialFamily> {
    let mut zero = QuditHamiltonian::new(sites, 2)?;
    zero.register_all_pairs();
    let mut field = zero.clone();
    for i in 0..sites {
        field.set_onebody(i, pauli_z().scaled(-1.0))?;
    }
    PolynomialFamily::new(zero.clone(), field, zero)
}

/// Finite-difference steps; defaults `h_λ = 1e-4 max(1, |λ0|)`, `h_T = 1e-4 T0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FdSteps {
    pub lambda: f64,
    pub temperature: f64,
}

impl FdSteps {
    pub fn default_for(lambda: f64, temperature: f64) -> Self {
        Self {
            lambda: 1e-4 * lambda.abs().max(1.0),
            temperature: 1e-4 * temperature,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityResiduals {
    pub lambda: f64,
    pub temperature: f64,
    pub steps: FdSteps,
    /// `|∂F/∂λ - Σ Tr[∂U ρ]|`
    pub r1: f64,
    /// `|∂²F/∂λ² - Σ Tr[∂²U ρ] - Σ Tr[∂U ∂ρ]|`
    pub r2: f64,
    /// `|F - T ∂F/∂T - Σ Tr[U ρ]|`
    pub r3: f64,
    /// `|∂²F/∂T² + (1/T) Σ Tr[U ∂_T ρ]|`
    pub r4: f64,
}

impl IdentityResiduals {
    pub fn within(&self, first: f64, second: f64) -> bool {
        self.r1 <= first && self.r3 <= first && self.r2 <= second && self.r4 <= second
    }
}

fn rdm_derivative(plus: &[PairRdm], minus: &[PairRdm], step: f64) -> Result<Vec<PairRdm>> {
    plus.iter()
        .zip(minus)
        .map(|(p, m)| {
            let mut d = p.matrix.scaled(1.0 / (2.0 * step));
            d.add_scaled(&m.matrix, -1.0 / (2.0 * step))?;
            Ok(PairRdm {
                pair: p.pair,
                matrix: d,
            })
        })
        .collect()
}

/// Numerically checks the four free-energy/pair-RDM identities at `(λ0, T0)`.
///
/// Free-energy derivatives and RDM derivatives both come from central
/// differences; the coupling derivatives come from the family analytically.
pub fn verify_identities<P: ParameterizedQudit + ?Sized>(
    family: &P,
    lambda: f64,
    temperature: f64,
    steps: Option<FdSteps>,
) -> Result<IdentityResiduals> {
    if !(temperature > 0.0) {
        return Err(Error::NonPositiveTemperature(temperature));
    }
    let steps = steps.unwrap_or_else(|| FdSteps::default_for(lambda, temperature));
    let f_at = |l: f64, t: f64| -> Result<f64> { free_energy(&family.hamiltonian(l)?, t) };
    let rdms_at = |l: f64, t: f64| -> Result<Vec<PairRdm>> {
        let h = family.hamiltonian(l)?;
        let state = thermal_state(&h.assemble_full()?, t)?;
        pair_rdms(&h, &state.density)
    };

    let h0 = family.hamiltonian(lambda)?;
    let couplings = h0.pair_couplings()?;
    let (d_u, d2_u) = family.coupling_derivatives(lambda)?;
    let rdms = rdms_at(lambda, temperature)?;

    let df_dl = try_central_diff(
        |l| f_at(l, temperature),
        lambda,
        steps.lambda,
        DiffOrder::First,
    )?;
    let d2f_dl2 = try_central_diff(
        |l| f_at(l, temperature),
        lambda,
        steps.lambda,
        DiffOrder::Second,
    )?;
    let df_dt = try_central_diff(
        |t| f_at(lambda, t),
        temperature,
        steps.temperature,
        DiffOrder::First,
    )?;
    let d2f_dt2 = try_central_diff(
        |t| f_at(lambda, t),
        temperature,
        steps.temperature,
        DiffOrder::Second,
    )?;
    let f0 = f_at(lambda, temperature)?;

    let drho_dl = rdm_derivative(
        &rdms_at(lambda + steps.lambda, temperature)?,
        &rdms_at(lambda - steps.lambda, temperature)?,
        steps.lambda,
    )?;
    let drho_dt = rdm_derivative(
        &rdms_at(lambda, temperature + steps.temperature)?,
        &rdms_at(lambda, temperature - steps.temperature)?,
        steps.temperature,
    )?;

    let r1 = (df_dl - two_body_expectation(&rdms, &d_u)?).abs();
    let r2 =
        (d2f_dl2 - two_body_expectation(&rdms, &d2_u)? - two_body_expectation(&drho_dl, &d_u)?)
            .abs();
    let r3 = (f0 - temperature * df_dt - two_body_expectation(&rdms, &couplings)?).abs();
    let r4 = (d2f_dt2 + two_body_expectation(&drho_dt, &couplings)? / temperature).abs();
    Ok(IdentityResiduals {
        lambda,
        temperature,
        steps,
        r1,
        r2,
        r3,
        r4,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lmg_pair(coupling: f64) -> QuditHamiltonian {
        // -(J/2) σx⊗σx on two sites
        let mut v = SymmetricMatrix::zeros(4);
        v.set(0, 3, -coupling / 2.0);
        v.set(1, 2, -coupling / 2.0);
        let mut h = QuditHamiltonian::new(2, 2).unwrap();
        h.set_twobody(0, 1, v).unwrap();
        h
    }

    #[test]
    fn single_site_field() {
        let mut h = QuditHamiltonian::new(1, 2).unwrap();
        h.set_onebody(0, SymmetricMatrix::diagonal(&[-0.3, 0.3]))
            .unwrap();
        let m = h.assemble_full().unwrap();
        assert_eq!(m, SymmetricMatrix::diagonal(&[-0.3, 0.3]));
    }

    #[test]
    fn two_site_xx_spectrum() {
        let s = spectra::eigh(&lmg_pair(1.0).assemble_full().unwrap()).unwrap();
        let expected = [-0.5, -0.5, 0.5, 0.5];
        for (e, x) in s.eigenvalues.iter().zip(expected) {
            assert!((e - x).abs() < 1e-14);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let h = QuditHamiltonian::new(13, 2).unwrap();
        match h.assemble_full() {
            Err(Error::StateCapExceeded { states, cap }) => {
                assert_eq!(states, 8192);
                assert_eq!(cap, DEFAULT_STATE_CAP);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_pairs() {
        let mut h = QuditHamiltonian::new(3, 2).unwrap();
        assert!(h.set_twobody(1, 1, SymmetricMatrix::zeros(4)).is_err());
        assert!(h.set_twobody(2, 1, SymmetricMatrix::zeros(4)).is_err());
        assert!(h.set_twobody(0, 3, SymmetricMatrix::zeros(4)).is_err());
        assert!(h.set_twobody(0, 1, SymmetricMatrix::zeros(3)).is_err());
        let rho = SymmetricMatrix::identity(8);
        assert!(matches!(
            partial_trace_pair(&rho, 3, 2, 1, 1),
            Err(Error::InvalidPair(1, 1))
        ));
    }

    #[test]
    fn uncovered_site_is_reported() {
        let mut h = QuditHamiltonian::new(2, 2).unwrap();
        h.set_onebody(0, pauli_z()).unwrap();
        assert!(matches!(h.pair_couplings(), Err(Error::UncoveredSite(0))));
    }

    #[test]
    fn thermal_state_rejects_zero_temperature() {
        let m = lmg_pair(1.0).assemble_full().unwrap();
        assert!(matches!(
            thermal_state(&m, 0.0),
            Err(Error::NonPositiveTemperature(_))
        ));
    }

    #[test]
    fn high_temperature_is_maximally_mixed() {
        let h = random_instance(3, 2, 1).unwrap();
        let state = thermal_state(&h.assemble_full().unwrap(), 1e8).unwrap();
        let target = SymmetricMatrix::identity(8).scaled(1.0 / 8.0);
        assert!(state.density.max_abs_diff(&target) <= 1e-7);
    }

    #[test]
    fn free_spins_closed_form() {
        let h = decoupled_spins(3).unwrap().hamiltonian(1.0).unwrap();
        let dec = free_energy_decomposition(&h, 1.0).unwrap();
        let exact = -3.0 * (2.0 * 1f64.cosh()).ln();
        assert!((dec.free_energy - exact).abs() < 1e-12);
        assert!((exact + 3.380_784_033).abs() < 1e-9);
        // per-pair energies add up to -λ Σ<σz> = -3 tanh(1)
        assert!((dec.energy + 3.0 * 1f64.tanh()).abs() < 1e-12);
    }

    #[test]
    fn lmg_pair_free_energy_is_spectral_sum() {
        let h = lmg_pair(1.0);
        let f = free_energy(&h, 1.0).unwrap();
        let exact = -(2.0 * (0.5f64).exp() + 2.0 * (-0.5f64).exp()).ln();
        assert!((f - exact).abs() < 1e-14);
    }

    #[test]
    fn decomposition_routes_agree() {
        let h = random_instance(4, 2, 9).unwrap();
        let dec = free_energy_decomposition(&h, 0.7).unwrap();
        assert!((dec.energy - dec.energy_full_trace).abs() <= 1e-10);
        assert!((dec.free_energy - dec.free_energy_from_parts()).abs() <= 1e-9);
    }

    #[test]
    fn identity_pair_operator_counts_pairs() {
        let h = random_instance(3, 2, 4).unwrap();
        let state = thermal_state(&h.assemble_full().unwrap(), 0.5).unwrap();
        let rdms = pair_rdms(&h, &state.density).unwrap();
        let ops: Vec<PairOperator> = h
            .pairs()
            .map(|pair| PairOperator {
                pair,
                matrix: SymmetricMatrix::identity(4),
            })
            .collect();
        assert!((two_body_expectation(&rdms, &ops).unwrap() - 3.0).abs() < 1e-12);
        let bad = [PairOperator {
            pair: (0, 1),
            matrix: SymmetricMatrix::identity(3),
        }];
        assert!(matches!(
            two_body_expectation(&rdms, &bad),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn free_spin_identity_residual() {
        let fam = decoupled_spins(3).unwrap();
        let res = verify_identities(&fam, 0.6, 0.9, None).unwrap();
        assert!(res.r1 <= 1e-7, "{res:?}");
        assert!(res.within(1e-6, 1e-4));
        let rdms = {
            let h = fam.hamiltonian(0.6).unwrap();
            let s = thermal_state(&h.assemble_full().unwrap(), 0.9).unwrap();
            pair_rdms(&h, &s.density).unwrap()
        };
        let (du, _) = fam.coupling_derivatives(0.6).unwrap();
        let closed = -3.0 * (0.6f64 / 0.9).tanh();
        assert!((two_body_expectation(&rdms, &du).unwrap() - closed).abs() < 1e-12);
    }

    #[test]
    fn verify_rejects_zero_temperature() {
        let fam = decoupled_spins(2).unwrap();
        assert!(verify_identities(&fam, 0.0, 0.0, None).is_err());
    }
}
