#![allow(dead_code)]

use lmg_rdm::lmg::{pair_correlators, thermal_moments, LmgParams};
use lmg_rdm::qudit::{pair_rdms, thermal_state, QuditHamiltonian};
use lmg_rdm::spectra::SymmetricMatrix;

pub type Dense = Vec<Vec<f64>>;

pub fn kron(a: &Dense, b: &Dense) -> Dense {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![0.0; ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn sx() -> Dense {
    vec![vec![0.0, 1.0], vec![1.0, 0.0]]
}

pub fn sz() -> Dense {
    vec![vec![1.0, 0.0], vec![0.0, -1.0]]
}

/// `σy ⊗ σy`, which is real.
pub fn sysy() -> Dense {
    vec![
        vec![0.0, 0.0, 0.0, -1.0],
        vec![0.0, 0.0, 1.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0],
        vec![-1.0, 0.0, 0.0, 0.0],
    ]
}

pub fn identity(n: usize) -> Dense {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn sym(m: &Dense) -> SymmetricMatrix {
    SymmetricMatrix::from_rows(m).unwrap()
}

/// LMG model assembled site by site from Pauli products.
pub fn lmg_by_sites(n: usize, coupling: f64, gamma: f64, field: f64) -> QuditHamiltonian {
    let mut h = QuditHamiltonian::new(n, 2).unwrap();
    let z = sym(&sz());
    let xx = kron(&sx(), &sx());
    let yy = sysy();
    let mut v = vec![vec![0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            v[a][b] = -(coupling / n as f64) * (xx[a][b] + gamma * yy[a][b]);
        }
    }
    let v = sym(&v);
    for i in 0..n {
        h.set_onebody(i, z.scaled(-field)).unwrap();
        for j in i + 1..n {
            h.set_twobody(i, j, v.clone()).unwrap();
        }
    }
    h
}

/// F, E, correlators and RDM elements of one spin pair.
#[derive(Debug, Clone, Copy)]
pub struct PairQuantities {
    pub f: f64,
    pub e: f64,
    pub sz: f64,
    pub szz: f64,
    pub sxx: f64,
    pub syy: f64,
    pub r: [f64; 5],
}

impl PairQuantities {
    pub fn as_array(&self) -> [f64; 11] {
        [
            self.f, self.e, self.sz, self.szz, self.sxx, self.syy, self.r[0], self.r[1], self.r[2],
            self.r[3], self.r[4],
        ]
    }
}

pub const QUANTITY_NAMES: [&str; 11] = [
    "F", "E", "sz", "szz", "sxx", "syy", "r11", "r22", "r44", "r14", "r23",
];

pub fn brute_force(n: usize, coupling: f64, gamma: f64, field: f64, t: f64) -> PairQuantities {
    let h = lmg_by_sites(n, coupling, gamma, field);
    let state = thermal_state(&h.assemble_full().unwrap(), t).unwrap();
    let rdms = pair_rdms(&h, &state.density).unwrap();
    let rho = &rdms.iter().find(|r| r.pair == (0, 1)).unwrap().matrix;
    let tr = |op: &Dense| rho.trace_product(&sym(op)).unwrap();
    PairQuantities {
        f: state.free_energy(),
        e: state.energy(),
        sz: tr(&kron(&sz(), &identity(2))),
        szz: tr(&kron(&sz(), &sz())),
        sxx: tr(&kron(&sx(), &sx())),
        syy: tr(&sysy()),
        r: [
            rho.get(0, 0),
            rho.get(1, 1),
            rho.get(3, 3),
            rho.get(0, 3),
            rho.get(1, 2),
        ],
    }
}

pub fn collective(n: usize, coupling: f64, gamma: f64, field: f64, t: f64) -> PairQuantities {
    let p = LmgParams::new(n, coupling, gamma, field).unwrap();
    let th = thermal_moments(&p, t).unwrap();
    let c = pair_correlators(&th.moments, n);
    let r = th.rdm(n).unwrap();
    PairQuantities {
        f: th.free_energy,
        e: th.energy,
        sz: c.sz,
        szz: c.szz,
        sxx: c.sxx,
        syy: c.syy,
        r: [r.r11, r.r22, r.r44, r.r14, r.r23],
    }
}

use lmg_rdm::scaling::{Control, SweepCurve};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Curves `A_N g(N^{1/ν}(x - x_m(N)))` with a Lorentzian `g`, drifting peak
/// `x_m = 1 - 0.8 N^{-1/ν}`, heights `N^{1/4}`, and multiplicative uniform
/// noise of relative size `noise`. Each size gets its own grid covering
/// `u ∈ [-6, 6]` in steps of 0.1, offset so the peak falls between nodes.
pub fn planted_family(nu: f64, noise: f64, seed: u64) -> Vec<SweepCurve> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    [64usize, 128, 256, 512]
        .iter()
        .map(|&n| {
            let w = (n as f64).powf(-1.0 / nu);
            let xm = 1.0 - 0.8 * w;
            let amp = (n as f64).powf(0.25);
            let grid: Vec<f64> = (0..=120)
                .map(|k| xm + (0.037 + (k as f64 - 60.0) * 0.1) * w)
                .collect();
            let values = grid
                .iter()
                .map(|&x| {
                    let u = (x - xm) / w;
                    amp / (1.0 + u * u) * (1.0 + noise * rng.gen_range(-1.0..1.0))
                })
                .collect();
            SweepCurve::new(n, Control::Field, grid, values, "planted").unwrap()
        })
        .collect()
}
