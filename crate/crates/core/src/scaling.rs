//! Finite-size scaling: derivative curves, peak and crossing detection, and
//! one-parameter data collapse.
//!
//! The collapse transform maps a curve `y(x)` of size `N` with peak
//! `(x_m, y_m)` to `x' = N^{1/ν} (x - x_m)` and `y' = (y_m - y) / y`. The
//! ordinate is scale free, so curves whose heights differ by an
//! `N`-dependent factor still fall onto one master curve.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Control {
    #[serde(rename = "lambda")]
    Field,
    #[serde(rename = "T")]
    Temperature,
}

impl Control {
    pub fn name(self) -> &'static str {
        match self {
            Control::Field => "lambda",
            Control::Temperature => "T",
        }
    }
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An observable sampled on a strictly increasing control grid for one `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCurve {
    pub spins: usize,
    pub control: Control,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub label: String,
}

impl SweepCurve {
    pub fn new(
        spins: usize,
        control: Control,
        grid: Vec<f64>,
        values: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{} grid points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.len() < 5 {
            return Err(Error::GridTooCoarse(grid.len()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::BadGrid("strictly increasing"));
        }
        Ok(Self {
            spins,
            control,
            grid,
            values,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Grid spacing, or an error if the grid is not uniform to `1e-9`
    /// relative.
    pub fn uniform_step(&self) -> Result<f64> {
        let n = self.grid.len();
        let step = (self.grid[n - 1] - self.grid[0]) / (n - 1) as f64;
        let tol = 1e-9
            * step
                .abs()
                .max(self.grid[0].abs().max(self.grid[n - 1].abs()) * 1e-3);
        for w in self.grid.windows(2) {
            if ((w[1] - w[0]) - step).abs() > tol.max(1e-6 * step) {
                return Err(Error::BadGrid("uniform"));
            }
        }
        Ok(step)
    }

    /// The curve flipped in sign when its dominant extremum is a minimum,
    /// together with the sign applied.
    pub fn oriented(&self) -> (SweepCurve, f64) {
        let max = self
            .values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        if -min > max {
            let mut flipped = self.clone();
            flipped.values.iter_mut().for_each(|v| *v = -*v);
            flipped.label = format!("-({})", self.label);
            (flipped, -1.0)
        } else {
            (self.clone(), 1.0)
        }
    }

    /// Piecewise-linear interpolation; `None` outside the grid.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        interpolate(&self.grid, &self.values, x)
    }
}

/// `points` values from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 5 {
        return Err(Error::GridTooCoarse(points));
    }
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::BadGrid("increasing (need lo < hi)"));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|k| {
            if k + 1 == points {
                hi
            } else {
                lo + step * k as f64
            }
        })
        .collect())
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let n = xs.len();
    if n == 0 || x < xs[0] || x > xs[n - 1] {
        return None;
    }
    let k = xs.partition_point(|&v| v <= x);
    if k == 0 {
        return Some(ys[0]);
    }
    if k >= n {
        return Some(ys[n - 1]);
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    let t = (x - x0) / (x1 - x0);
    Some(ys[k - 1] + t * (ys[k] - ys[k - 1]))
}

/// First derivative on a uniform grid: central differences inside,
/// second-order one-sided stencils at the ends.
pub fn derivative_curve(base: &SweepCurve) -> Result<SweepCurve> {
    let h = base.uniform_step()?;
    let y = &base.values;
    let n = y.len();
    let mut d = Vec::with_capacity(n);
    d.push((-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h));
    for k in 1..n - 1 {
        d.push((y[k + 1] - y[k - 1]) / (2.0 * h));
    }
    d.push((3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * h));
    SweepCurve::new(
        base.spins,
        base.control,
        base.grid.clone(),
        d,
        format!("d {} / d {}", base.label, base.control),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub location: f64,
    pub height: f64,
}

/// Interior maximum refined by a parabola through the three points around
/// the discrete argmax.
pub fn find_peak(curve: &SweepCurve) -> Result<Peak> {
    let y = &curve.values;
    let k = y
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > y[best] { i } else { best });
    if k == 0 || k + 1 == y.len() {
        return Err(Error::BoundaryPeak {
            location: curve.grid[k],
        });
    }
    let (ym, y0, yp) = (y[k - 1], y[k], y[k + 1]);
    let (xm, x0, xp) = (curve.grid[k - 1], curve.grid[k], curve.grid[k + 1]);
    // Vertex of the interpolating parabola (grid need not be uniform).
    let num = (x0 - xm).powi(2) * (y0 - yp) - (x0 - xp).powi(2) * (y0 - ym);
    let den = (x0 - xm) * (y0 - yp) - (x0 - xp) * (y0 - ym);
    if den == 0.0 {
        return Ok(Peak {
            location: x0,
            height: y0,
        });
    }
    let location = x0 - 0.5 * num / den;
    let l0 = (location - xp) * (location - xm) / ((x0 - xp) * (x0 - xm));
    let l1 = (location - x0) * (location - xm) / ((xp - x0) * (xp - xm));
    let l2 = (location - x0) * (location - xp) / ((xm - x0) * (xm - xp));
    Ok(Peak {
        location,
        height: y0 * l0 + yp * l1 + ym * l2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingEstimate {
    pub sizes: (usize, usize),
    pub location: f64,
    /// Grid interval containing the sign change.
    pub bracket: (f64, f64),
    pub bracket_width: f64,
    /// Number of sign changes found in the window.
    pub sign_changes: usize,
}

/// Crossing of two curves on a shared grid. With several sign changes the one
/// nearest the window center is returned.
pub fn find_crossing(a: &SweepCurve, b: &SweepCurve) -> Result<CrossingEstimate> {
    if a.grid.len() != b.grid.len()
        || a.grid
            .iter()
            .zip(&b.grid)
            .any(|(x, y)| (x - y).abs() > 1e-12 * x.abs().max(1.0))
    {
        return Err(Error::Dimension("curves must share a grid".into()));
    }
    let diff: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
    let xs = &a.grid;
    let n = diff.len();
    // (left index, right index) of each bracket
    let mut brackets: Vec<(usize, usize)> = Vec::new();
    let mut k = 0;
    while k + 1 < n {
        if diff[k] == 0.0 {
            k += 1;
            continue;
        }
        let mut next = k + 1;
        while next < n && diff[next] == 0.0 {
            next += 1;
        }
        if next < n && diff[k].signum() != diff[next].signum() {
            brackets.push((k, next));
        }
        k = next;
    }
    let center = 0.5 * (xs[0] + xs[n - 1]);
    let root = |&(l, r): &(usize, usize)| -> f64 {
        if r == l + 1 {
            xs[l] + (xs[r] - xs[l]) * diff[l] / (diff[l] - diff[r])
        } else {
            // a run of exact zeros between opposite signs
            0.5 * (xs[l + 1] + xs[r - 1])
        }
    };
    let best = brackets
        .iter()
        .min_by(|p, q| {
            (root(p) - center)
                .abs()
                .total_cmp(&(root(q) - center).abs())
        })
        .ok_or(Error::NoCrossing(a.spins, b.spins))?;
    let (l, r) = *best;
    Ok(CrossingEstimate {
        sizes: (a.spins, b.spins),
        location: root(best),
        bracket: (xs[l], xs[r]),
        bracket_width: xs[r] - xs[l],
        sign_changes: brackets.len(),
    })
}

/// One curve after the collapse transform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledCurve {
    pub spins: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Applies `x' = N^{1/ν}(x - x_m)`, `y' = (y_m - y)/y`, keeping only points
/// with `|y| >= min_relative_height * |y_m|`.
pub fn collapse_transform(
    curve: &SweepCurve,
    nu: f64,
    peak: &Peak,
    min_relative_height: f64,
) -> Result<ScaledCurve> {
    if peak.height == 0.0 {
        return Err(Error::ZeroPeak);
    }
    let stretch = (curve.spins as f64).powf(1.0 / nu);
    let floor = min_relative_height * peak.height.abs();
    let (x, y) = curve
        .grid
        .iter()
        .zip(&curve.values)
        .filter(|(_, &v)| v.abs() >= floor && v != 0.0)
        .map(|(&g, &v)| (stretch * (g - peak.location), (peak.height - v) / v))
        .unzip();
    Ok(ScaledCurve {
        spins: curve.spins,
        x,
        y,
    })
}

/// Mean squared deviation of every point from the piecewise-linear
/// interpolation of each other curve, over the overlapping abscissa range.
/// `+∞` when no point overlaps.
pub fn collapse_quality(curves: &[ScaledCurve]) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for (a, ca) in curves.iter().enumerate() {
        for (b, cb) in curves.iter().enumerate() {
            if a == b || cb.x.len() < 2 {
                continue;
            }
            for (&x, &y) in ca.x.iter().zip(&ca.y) {
                if let Some(v) = interpolate(&cb.x, &cb.y, x) {
                    total += (y - v).powi(2);
                    count += 1;
                }
            }
        }
    }
    if count == 0 {
        f64::INFINITY
    } else {
        total / count as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollapseOptions {
    /// Points with `|y| < min_relative_height * |y_m|` are dropped.
    pub min_relative_height: f64,
    /// Uniform scan used to bracket the minimum before golden section.
    pub scan_points: usize,
    pub tolerance: f64,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        Self {
            min_relative_height: 1e-2,
            scan_points: 71,
            tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseFit {
    pub nu: f64,
    pub quality: f64,
    /// `N -> x_m`.
    pub peak_locations: BTreeMap<usize, f64>,
    pub peak_heights: BTreeMap<usize, f64>,
    /// `+1` or `-1`; curves dominated by a minimum are flipped before fitting.
    pub orientation: BTreeMap<usize, f64>,
    pub scaled: Vec<ScaledCurve>,
    pub window: (f64, f64),
    /// Whether `quality(ν) <= quality(ν ± 0.2)` inside the window.
    pub locally_minimal: bool,
}

fn prepared(curves: &[SweepCurve]) -> Result<Vec<(SweepCurve, Peak, f64)>> {
    let mut sorted: Vec<&SweepCurve> = curves.iter().collect();
    sorted.sort_by_key(|c| c.spins);
    if sorted.windows(2).any(|w| w[0].spins == w[1].spins) {
        return Err(Error::Config("duplicate system size in collapse".into()));
    }
    sorted
        .into_iter()
        .map(|c| {
            let (oriented, sign) = c.oriented();
            let peak = find_peak(&oriented)?;
            Ok((oriented, peak, sign))
        })
        .collect()
}

fn quality_at(prep: &[(SweepCurve, Peak, f64)], nu: f64, opts: &CollapseOptions) -> Result<f64> {
    let scaled = prep
        .iter()
        .map(|(c, p, _)| collapse_transform(c, nu, p, opts.min_relative_height))
        .collect::<Result<Vec<_>>>()?;
    Ok(collapse_quality(&scaled))
}

/// Golden-section minimization of `f` on `[lo, hi]`.
pub fn golden_section<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (hi - lo).abs() > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Fits `ν` by minimizing [`collapse_quality`] over `window`.
///
/// A uniform scan brackets the global minimum, golden section narrows it to
/// `opts.tolerance`, and one parabolic step through neighbouring points
/// refines it when that lowers the score.
pub fn fit_nu(
    curves: &[SweepCurve],
    window: (f64, f64),
    opts: &CollapseOptions,
) -> Result<CollapseFit> {
    if curves.len() < 3 {
        return Err(Error::TooFewSizes {
            needed: 3,
            got: curves.len(),
        });
    }
    let (lo, hi) = window;
    if !(hi > lo && lo > 0.0) {
        return Err(Error::Config(format!("invalid nu window {lo}:{hi}")));
    }
    let prep = prepared(curves)?;
    let q = |nu: f64| quality_at(&prep, nu, opts);

    let scan = opts.scan_points.max(3);
    let nus: Vec<f64> = (0..scan)
        .map(|k| lo + (hi - lo) * k as f64 / (scan - 1) as f64)
        .collect();
    let scores = nus.iter().map(|&v| q(v)).collect::<Result<Vec<_>>>()?;
    let best = scores
        .iter()
        .enumerate()
        .fold(0, |b, (i, s)| if *s < scores[b] { i } else { b });
    if !scores[best].is_finite() {
        return Err(Error::NoOverlap);
    }
    let a = nus[best.saturating_sub(1)];
    let b = nus[(best + 1).min(scan - 1)];
    let (mut nu, mut quality) = golden_section(q, a, b, opts.tolerance)?;

    let h = opts.tolerance;
    if nu - h >= lo && nu + h <= hi {
        let (qm, qp) = (q(nu - h)?, q(nu + h)?);
        let den = qm - 2.0 * quality + qp;
        if den > 0.0 {
            let cand = nu + 0.5 * h * (qm - qp) / den;
            if (cand - nu).abs() <= h {
                let qc = q(cand)?;
                if qc < quality {
                    nu = cand;
                    quality = qc;
                }
            }
        }
    }

    let locally_minimal = [nu - 0.2, nu + 0.2]
        .iter()
        .filter(|&&v| v >= lo && v <= hi)
        .map(|&v| q(v))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .all(|&other| quality <= other);

    let scaled = prep
        .iter()
        .map(|(c, p, _)| collapse_transform(c, nu, p, opts.min_relative_height))
        .collect::<Result<Vec<_>>>()?;
    Ok(CollapseFit {
        nu,
        quality,
        peak_locations: prep.iter().map(|(c, p, _)| (c.spins, p.location)).collect(),
        peak_heights: prep
            .iter()
            .map(|(c, p, s)| (c.spins, s * p.height))
            .collect(),
        orientation: prep.iter().map(|(c, _, s)| (c.spins, *s)).collect(),
        scaled,
        window,
        locally_minimal,
    })
}

/// Collapse quality of a fixed `ν` using the same peak handling as [`fit_nu`].
pub fn quality_for_nu(curves: &[SweepCurve], nu: f64, opts: &CollapseOptions) -> Result<f64> {
    quality_at(&prepared(curves)?, nu, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(spins: usize, grid: Vec<f64>, f: impl Fn(f64) -> f64) -> SweepCurve {
        let values = grid.iter().map(|&x| f(x)).collect();
        SweepCurve::new(spins, Control::Field, grid, values, "y").unwrap()
    }

    #[test]
    fn derivative_of_identity_and_square() {
        let grid = uniform_grid(0.0, 1.0, 11).unwrap();
        let d = derivative_curve(&curve(1, grid.clone(), |x| x)).unwrap();
        assert!(d.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let d2 = derivative_curve(&curve(1, grid.clone(), |x| x * x)).unwrap();
        for (x, v) in grid.iter().zip(&d2.values) {
            assert!((v - 2.0 * x).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_rejects_nonuniform_grid() {
        let c = curve(1, vec![0.0, 0.1, 0.3, 0.4, 0.5], |x| x);
        assert!(matches!(derivative_curve(&c), Err(Error::BadGrid(_))));
    }

    #[test]
    fn curve_validation() {
        assert!(SweepCurve::new(1, Control::Field, vec![0.0; 4], vec![0.0; 4], "y").is_err());
        assert!(SweepCurve::new(
            1,
            Control::Field,
            vec![0.0, 1.0, 1.0, 2.0, 3.0],
            vec![0.0; 5],
            "y"
        )
        .is_err());
        assert!(uniform_grid(1.0, 0.0, 10).is_err());
    }

    #[test]
    fn parabola_peak() {
        let c = curve(1, uniform_grid(0.0, 1.0, 101).unwrap(), |x| {
            -(x - 0.7f64).powi(2)
        });
        let p = find_peak(&c).unwrap();
        assert!((p.location - 0.7).abs() < 1e-10);
        assert!(p.height.abs() < 1e-12);
        let off = curve(1, uniform_grid(0.0, 1.0, 101).unwrap(), |x| {
            2.0 - (x - 0.7234f64).powi(2)
        });
        let p = find_peak(&off).unwrap();
        assert!((p.location - 0.7234).abs() < 1e-10);
        assert!((p.height - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_peak() {
        let g = |c: f64| move |x: f64| (-(x - c).powi(2) / (2.0 * 0.05f64.powi(2))).exp();
        let grid = uniform_grid(0.8, 1.2, 401).unwrap();
        let p = find_peak(&curve(1, grid.clone(), g(1.0))).unwrap();
        assert!((p.location - 1.0).abs() < 1e-5);
        let p = find_peak(&curve(1, grid, g(1.00037))).unwrap();
        assert!((p.location - 1.00037).abs() < 1e-5);
    }

    #[test]
    fn boundary_peak_is_an_error() {
        let c = curve(1, uniform_grid(0.0, 1.0, 11).unwrap(), |x| x);
        assert!(matches!(find_peak(&c), Err(Error::BoundaryPeak { .. })));
    }

    #[test]
    fn crossing_of_lines() {
        let grid = uniform_grid(0.0, 2.0, 21).unwrap();
        let a = curve(1, grid.clone(), |x| x);
        let b = curve(2, grid, |x| 2.0 - x);
        let c = find_crossing(&a, &b).unwrap();
        assert!((c.location - 1.0).abs() < 1e-14);
        assert_eq!(c.sign_changes, 1);
        assert!(c.bracket.0 <= c.location && c.location <= c.bracket.1);
        assert!(matches!(
            find_crossing(&a, &a),
            Err(Error::NoCrossing(1, 1))
        ));
    }

    #[test]
    fn crossing_prefers_window_center() {
        let grid = uniform_grid(0.0, 4.0, 401).unwrap();
        let a = curve(1, grid.clone(), |x| (x - 0.5) * (x - 2.1));
        let b = curve(2, grid, |_| 0.0);
        let c = find_crossing(&a, &b).unwrap();
        assert_eq!(c.sign_changes, 2);
        assert!((c.location - 2.1).abs() < 1e-3);
    }

    #[test]
    fn peak_maps_to_origin() {
        let grid = uniform_grid(0.0, 2.0, 201).unwrap();
        let c = curve(100, grid, |x| 1.0 / (1.0 + (x - 1.0f64).powi(2)));
        let p = find_peak(&c).unwrap();
        let s = collapse_transform(&c, 1.5, &p, 1e-3).unwrap();
        let k = s.x.iter().position(|x| x.abs() < 1e-12).unwrap();
        assert!(s.y[k].abs() < 1e-12);
        let zero = Peak {
            location: 1.0,
            height: 0.0,
        };
        assert!(matches!(
            collapse_transform(&c, 1.5, &zero, 1e-3),
            Err(Error::ZeroPeak)
        ));
    }

    #[test]
    fn single_spin_is_unscaled() {
        let grid = uniform_grid(0.0, 2.0, 21).unwrap();
        let c = curve(1, grid.clone(), |x| 1.0 / (1.0 + (x - 1.0f64).powi(2)));
        let p = find_peak(&c).unwrap();
        let s = collapse_transform(&c, 1e12, &p, 0.0).unwrap();
        for (x, g) in s.x.iter().zip(&grid) {
            assert!((x - (g - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section(|x| Ok((x - 1.3f64).powi(2) + 0.5), 0.0, 4.0, 1e-8).unwrap();
        assert!((x - 1.3).abs() < 1e-7);
        assert!((fx - 0.5).abs() < 1e-12);
    }

    #[test]
    fn too_few_sizes() {
        let grid = uniform_grid(0.0, 2.0, 21).unwrap();
        let c = curve(10, grid, |x| 1.0 / (1.0 + (x - 1.0f64).powi(2)));
        let err = fit_nu(&[c.clone(), c], (0.5, 4.0), &CollapseOptions::default());
        assert!(matches!(err, Err(Error::TooFewSizes { .. })));
    }
}
