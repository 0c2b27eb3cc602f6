//! Parameter sweeps of the LMG pair RDM and the two figure pipelines built
//! on them.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::entanglement::{concurrence_x, renyi};
use crate::error::{Error, Result};
use crate::lmg::{
    ground_state_moments, pair_correlators, rdm_from_correlators, LmgParams, LmgSpectrum,
    RdmElement, TwoBodyRdm,
};
use crate::scaling::{
    derivative_curve, find_crossing, find_peak, fit_nu, uniform_grid, CollapseFit, CollapseOptions,
    Control, CrossingEstimate, Peak, SweepCurve,
};

/// Model parameters held fixed during a sweep. `temperature == 0` means the
/// ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedParams {
    pub coupling: f64,
    pub gamma: f64,
    pub field: f64,
    pub temperature: f64,
}

impl Default for FixedParams {
    fn default() -> Self {
        Self {
            coupling: 1.0,
            gamma: 0.0,
            field: 0.0,
            temperature: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub control: f64,
    pub rdm: TwoBodyRdm,
    pub free_energy: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeSweep {
    pub spins: usize,
    pub control: Control,
    pub fixed: FixedParams,
    pub points: Vec<SweepPoint>,
}

fn ground_point(params: &LmgParams, control: f64) -> Result<SweepPoint> {
    let m = ground_state_moments(params)?;
    let energy = crate::lmg::ground_state(params)?.energy;
    Ok(SweepPoint {
        control,
        rdm: rdm_from_correlators(&pair_correlators(&m, params.spins))?,
        free_energy: energy,
        energy,
    })
}

fn thermal_point(spectrum: &LmgSpectrum, temperature: f64, control: f64) -> Result<SweepPoint> {
    let t = spectrum.thermal(temperature)?;
    Ok(SweepPoint {
        control,
        rdm: t.rdm(spectrum.params.spins)?,
        free_energy: t.free_energy,
        energy: t.energy,
    })
}

/// Evaluates the pair RDM, `F` and `E` for one `N` at every grid point.
///
/// A temperature sweep diagonalizes once and reuses the spectrum; a field
/// sweep diagonalizes per point, in parallel.
pub fn run_sweep(
    spins: usize,
    control: Control,
    grid: &[f64],
    fixed: &FixedParams,
) -> Result<SizeSweep> {
    let base = LmgParams::new(spins, fixed.coupling, fixed.gamma, fixed.field)?;
    let points = match control {
        Control::Field => grid
            .par_iter()
            .map(|&l| {
                let params = base.with_field(l);
                params.validate()?;
                if fixed.temperature == 0.0 {
                    ground_point(&params, l)
                } else {
                    thermal_point(&LmgSpectrum::solve(&params)?, fixed.temperature, l)
                }
            })
            .collect::<Result<Vec<_>>>()?,
        Control::Temperature => {
            if let Some(&t) = grid.iter().find(|&&t| !(t > 0.0)) {
                return Err(Error::NonPositiveTemperature(t));
            }
            let spectrum = LmgSpectrum::solve(&base)?;
            grid.par_iter()
                .map(|&t| thermal_point(&spectrum, t, t))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(SizeSweep {
        spins,
        control,
        fixed: *fixed,
        points,
    })
}

/// Quantities that can be read off a sweep as a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    Rdm(RdmElement),
    FreeEnergy,
    Energy,
    Renyi(f64),
    Concurrence,
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::Rdm(e) => e.name().to_string(),
            Observable::FreeEnergy => "F".into(),
            Observable::Energy => "E".into(),
            Observable::Renyi(n) => format!("S_renyi({n})"),
            Observable::Concurrence => "concurrence".into(),
        }
    }

    pub fn evaluate(&self, p: &SweepPoint) -> Result<f64> {
        Ok(match self {
            Observable::Rdm(e) => p.rdm.element(*e),
            Observable::FreeEnergy => p.free_energy,
            Observable::Energy => p.energy,
            Observable::Renyi(n) => renyi(&p.rdm, *n)?.value,
            Observable::Concurrence => concurrence_x(&p.rdm),
        })
    }

    /// The fixed columns written by every sweep.
    pub fn standard() -> Vec<Observable> {
        let mut v: Vec<Observable> = RdmElement::ALL
            .iter()
            .map(|&e| Observable::Rdm(e))
            .collect();
        v.push(Observable::FreeEnergy);
        v.push(Observable::Energy);
        v
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl Serialize for Observable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Some(e) = RdmElement::ALL.iter().find(|e| e.name() == t) {
            return Ok(Observable::Rdm(*e));
        }
        let order = |x: &str| -> Result<Observable> {
            let n: f64 = x
                .parse()
                .map_err(|_| Error::Config(format!("bad Renyi order in '{s}'")))?;
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::InvalidOrder(n));
            }
            Ok(Observable::Renyi(n))
        };
        match t {
            "F" => Ok(Observable::FreeEnergy),
            "E" => Ok(Observable::Energy),
            "concurrence" | "C" => Ok(Observable::Concurrence),
            _ => {
                if let Some(inner) = t.strip_prefix("S_renyi(").and_then(|x| x.strip_suffix(')')) {
                    order(inner)
                } else if let Some(n) = t.strip_prefix('S') {
                    order(n)
                } else {
                    Err(Error::Config(format!("unknown observable '{s}'")))
                }
            }
        }
    }
}

impl SizeSweep {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.control).collect()
    }

    pub fn curve(&self, observable: Observable) -> Result<SweepCurve> {
        let values = self
            .points
            .iter()
            .map(|p| observable.evaluate(p))
            .collect::<Result<Vec<_>>>()?;
        SweepCurve::new(
            self.spins,
            self.control,
            self.grid(),
            values,
            observable.name(),
        )
    }

    pub fn derivative(&self, observable: Observable) -> Result<SweepCurve> {
        derivative_curve(&self.curve(observable)?)
    }
}

/// A pass/fail line with the measured value and the band it was held to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: String,
    pub expected: String,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        passed: bool,
        measured: impl Into<String>,
        expected: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            passed,
            measured: measured.into(),
            expected: expected.into(),
        }
    }

    pub fn band(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self::new(
            name,
            value >= lo && value <= hi,
            format!("{value:.6}"),
            format!("[{lo}, {hi}]"),
        )
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: measured {} expected {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.expected
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Figure {
    #[serde(rename = "fig1")]
    Fig1,
    #[serde(rename = "fig2")]
    Fig2,
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(Figure::Fig1),
            "fig2" => Ok(Figure::Fig2),
            _ => Err(Error::Config(format!("unknown figure '{s}' (fig1|fig2)"))),
        }
    }
}

/// Everything needed to regenerate one figure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureSpec {
    pub figure: Figure,
    pub control: Control,
    pub sizes: Vec<usize>,
    pub range: (f64, f64, usize),
    pub observable: Observable,
    pub fixed: FixedParams,
    /// Critical point the crossings and peaks should approach.
    pub critical: f64,
    pub crossing_band: (f64, f64),
    pub nu_band: (f64, f64),
    pub nu_window: (f64, f64),
    /// Smoke runs skip the acceptance checks.
    pub smoke: bool,
}

impl FigureSpec {
    /// Ground-state field sweep of `∂r11/∂λ`, `γ = 0`.
    pub fn fig1() -> Self {
        Self {
            figure: Figure::Fig1,
            control: Control::Field,
            sizes: vec![500, 1000, 1500, 2000],
            range: (0.8, 1.2, 401),
            observable: Observable::Rdm(RdmElement::R11),
            fixed: FixedParams::default(),
            critical: 1.0,
            crossing_band: (0.98, 1.02),
            nu_band: (1.40, 1.60),
            nu_window: (0.5, 4.0),
            smoke: false,
        }
    }

    /// Thermal sweep of `∂r23/∂T` at `γ = 0`, `λ = 0`.
    pub fn fig2() -> Self {
        Self {
            figure: Figure::Fig2,
            control: Control::Temperature,
            sizes: vec![200, 300, 400, 500],
            range: (0.7, 1.3, 301),
            observable: Observable::Rdm(RdmElement::R23),
            fixed: FixedParams::default(),
            critical: 1.0,
            crossing_band: (0.93, 1.07),
            nu_band: (1.85, 2.15),
            nu_window: (0.5, 4.0),
            smoke: false,
        }
    }

    pub fn for_figure(figure: Figure) -> Self {
        match figure {
            Figure::Fig1 => Self::fig1(),
            Figure::Fig2 => Self::fig2(),
        }
    }

    /// Small sizes on a wider grid so the peaks stay interior.
    pub fn smoke(mut self) -> Self {
        self.sizes = vec![50, 100];
        self.range = (0.5, 1.5, 201);
        self.smoke = true;
        self
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        uniform_grid(self.range.0, self.range.1, self.range.2)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SizePeak {
    pub spins: usize,
    pub peak: Option<Peak>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FigureReport {
    pub spec: FigureSpec,
    pub peaks: Vec<SizePeak>,
    pub crossings: Vec<CrossingEstimate>,
    pub fit: Option<CollapseFit>,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub sweeps: Vec<SizeSweep>,
    #[serde(skip)]
    pub curves: Vec<SweepCurve>,
}

impl FigureReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `|x_m(N) - target|` per size; `None` if any peak sat on the boundary.
fn peak_distances(peaks: &[SizePeak], target: f64) -> Option<Vec<f64>> {
    peaks
        .iter()
        .map(|p| p.peak.map(|q| (q.location - target).abs()))
        .collect()
}

/// Runs the sweeps, derivative curves, crossings, collapse and checks.
pub fn reproduce(spec: &FigureSpec, opts: &CollapseOptions) -> Result<FigureReport> {
    let grid = spec.grid()?;
    let sweeps = spec
        .sizes
        .iter()
        .map(|&n| run_sweep(n, spec.control, &grid, &spec.fixed))
        .collect::<Result<Vec<_>>>()?;
    let curves = sweeps
        .iter()
        .map(|s| s.derivative(spec.observable))
        .collect::<Result<Vec<_>>>()?;
    analyse(spec, sweeps, curves, opts)
}

/// The analysis half of [`reproduce`] on precomputed derivative curves.
pub fn analyse(
    spec: &FigureSpec,
    sweeps: Vec<SizeSweep>,
    curves: Vec<SweepCurve>,
    opts: &CollapseOptions,
) -> Result<FigureReport> {
    let peaks: Vec<SizePeak> = curves
        .iter()
        .map(|c| SizePeak {
            spins: c.spins,
            peak: find_peak(&c.oriented().0).ok(),
        })
        .collect();
    let mut crossings = Vec::new();
    for a in 0..curves.len() {
        for b in a + 1..curves.len() {
            crossings.push(find_crossing(&curves[a], &curves[b])?);
        }
    }
    let fit = if curves.len() >= 3 {
        Some(fit_nu(&curves, spec.nu_window, opts)?)
    } else {
        None
    };

    let mut checks = Vec::new();
    if !spec.smoke {
        let (lo, hi) = spec.crossing_band;
        let locs: Vec<String> = crossings
            .iter()
            .map(|c| format!("{:.5}", c.location))
            .collect();
        checks.push(Check::new(
            format!("{:?} pairwise crossings", spec.figure).to_lowercase(),
            !crossings.is_empty()
                && crossings
                    .iter()
                    .all(|c| c.location >= lo && c.location <= hi),
            locs.join(","),
            format!("all in [{lo}, {hi}]"),
        ));
        match &fit {
            Some(f) => checks.push(Check::band(
                format!("{:?} fitted nu", spec.figure).to_lowercase(),
                f.nu,
                spec.nu_band.0,
                spec.nu_band.1,
            )),
            None => checks.push(Check::new(
                format!("{:?} fitted nu", spec.figure).to_lowercase(),
                false,
                "no fit",
                "at least 3 sizes",
            )),
        }
        let target = match spec.figure {
            Figure::Fig1 => spec.critical,
            Figure::Fig2 => {
                crossings.iter().map(|c| c.location).sum::<f64>() / crossings.len().max(1) as f64
            }
        };
        let dist = peak_distances(&peaks, target);
        let passed = dist
            .as_ref()
            .is_some_and(|d| d.windows(2).all(|w| w[1] < w[0]));
        let locs: Vec<String> = peaks
            .iter()
            .map(|p| {
                p.peak
                    .map_or("boundary".into(), |q| format!("{:.5}", q.location))
            })
            .collect();
        checks.push(Check::new(
            format!("{:?} peak locations approach {target:.4}", spec.figure).to_lowercase(),
            passed,
            locs.join(","),
            "distance strictly decreasing in N",
        ));
    }
    Ok(FigureReport {
        spec: spec.clone(),
        peaks,
        crossings,
        fit,
        checks,
        sweeps,
        curves,
    })
}
