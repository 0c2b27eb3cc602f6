//! Numerical kernels shared by the physics modules: dense and tridiagonal
//! symmetric eigensolvers, log-domain accumulation, and central differences.
//!
//! The dense solver is Householder tridiagonalization followed by implicit QL
//! with Wilkinson-style shifts. Both passes are sequential with a fixed loop
//! order, so identical input always yields bit-identical output.

use crate::error::{Error, Result};

/// Real symmetric matrix stored densely in row-major order.
///
/// Writes go through [`SymmetricMatrix::set`] and [`SymmetricMatrix::add`],
/// which touch `(a, b)` and `(b, a)` together, so the storage stays exactly
/// symmetric. The optional half-bandwidth is a hint; solvers never rely on it.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
    bandwidth: Option<usize>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
            bandwidth: None,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for a in 0..dim {
            m.data[a * dim + a] = 1.0;
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (a, &v) in values.iter().enumerate() {
            m.set(a, a, v);
        }
        m
    }

    pub fn with_bandwidth(dim: usize, bandwidth: usize) -> Self {
        Self {
            bandwidth: Some(bandwidth),
            ..Self::zeros(dim)
        }
    }

    /// Builds from explicit rows, rejecting anything that is not exactly
    /// symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for (a, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Dimension(format!(
                    "row {a} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        let m = Self {
            dim,
            data,
            bandwidth: None,
        };
        for a in 0..dim {
            for b in 0..a {
                if m.get(a, b) != m.get(b, a) {
                    return Err(Error::NotSymmetric { row: a, col: b });
                }
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> Option<usize> {
        self.bandwidth
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.dim + b]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, value: f64) {
        self.data[a * self.dim + b] = value;
        self.data[b * self.dim + a] = value;
    }

    #[inline]
    pub fn add(&mut self, a: usize, b: usize, value: f64) {
        self.data[a * self.dim + b] += value;
        if a != b {
            self.data[b * self.dim + a] += value;
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.data[a * self.dim..(a + 1) * self.dim]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|a| self.get(a, a)).sum()
    }

    /// `Tr[A B]` for two symmetric matrices of equal size.
    pub fn trace_product(&self, other: &SymmetricMatrix) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "trace of {}x{} times {}x{}",
                self.dim, self.dim, other.dim, other.dim
            )));
        }
        Ok(self.data.iter().zip(&other.data).map(|(x, y)| x * y).sum())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * factor).collect(),
            bandwidth: self.bandwidth,
        }
    }

    /// Elementwise `self + factor * other`.
    pub fn add_scaled(&mut self, other: &SymmetricMatrix, factor: f64) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "cannot add {}x{} to {}x{}",
                other.dim, other.dim, self.dim, self.dim
            )));
        }
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += factor * y;
        }
        if self.bandwidth != other.bandwidth {
            self.bandwidth = None;
        }
        Ok(())
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|a| self.row(a).iter().zip(v).map(|(x, y)| x * y).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &SymmetricMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Checks finiteness and the declared band.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        for a in 0..self.dim {
            for b in 0..self.dim {
                let v = self.get(a, b);
                if !v.is_finite() {
                    return Err(Error::NonFiniteEntry { row: a, col: b });
                }
                if let Some(w) = self.bandwidth {
                    if a.abs_diff(b) > w && v != 0.0 {
                        return Err(Error::OutsideBand {
                            row: a,
                            col: b,
                            bandwidth: w,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Eigenvalues in ascending order, optionally with orthonormal eigenvectors.
///
/// Eigenvectors are stored vector-major: vector `k` occupies
/// `vectors[k * dim..(k + 1) * dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    dim: usize,
    pub eigenvalues: Vec<f64>,
    eigenvectors: Option<Vec<f64>>,
}

impl Spectrum {
    pub fn new(dim: usize, eigenvalues: Vec<f64>, eigenvectors: Option<Vec<f64>>) -> Self {
        debug_assert_eq!(eigenvalues.len(), dim);
        if let Some(v) = &eigenvectors {
            debug_assert_eq!(v.len(), dim * dim);
        }
        Self {
            dim,
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_vectors(&self) -> bool {
        self.eigenvectors.is_some()
    }

    pub fn vector(&self, k: usize) -> Option<&[f64]> {
        self.eigenvectors
            .as_deref()
            .map(|v| &v[k * self.dim..(k + 1) * self.dim])
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.eigenvectors
            .as_deref()
            .unwrap_or(&[])
            .chunks_exact(self.dim.max(1))
    }

    /// `max |V^T V - I|`, or `None` without vectors.
    pub fn orthonormality_error(&self) -> Option<f64> {
        self.eigenvectors.as_ref()?;
        let mut worst: f64 = 0.0;
        for k in 0..self.dim {
            let vk = self.vector(k)?;
            for l in 0..=k {
                let vl = self.vector(l)?;
                let dot: f64 = vk.iter().zip(vl).map(|(x, y)| x * y).sum();
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        Some(worst)
    }

    /// Largest `|A v_k - e_k v_k| / max(1, |e_k|)` over all pairs.
    pub fn residual(&self, a: &SymmetricMatrix) -> Option<f64> {
        let mut worst: f64 = 0.0;
        for (k, &e) in self.eigenvalues.iter().enumerate() {
            let v = self.vector(k)?;
            let av = a.matvec(v);
            let r = av
                .iter()
                .zip(v)
                .map(|(x, y)| (x - e * y).abs())
                .fold(0.0, f64::max);
            worst = worst.max(r / e.abs().max(1.0));
        }
        Some(worst)
    }
}

/// Full symmetric eigendecomposition with eigenvectors.
pub fn eigh(a: &SymmetricMatrix) -> Result<Spectrum> {
    a.validate()?;
    let n = a.dim();
    let mut v = a.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    householder_tridiagonalize(&mut v, &mut d, &mut e, n);
    // tql works on vector-major storage; tred2 leaves V row-major.
    let mut z = transpose(&v, n);
    e.rotate_left(1);
    e[n - 1] = 0.0;
    implicit_ql(&mut d, &mut e, Some(&mut z), n)?;
    Ok(sorted_spectrum(d, Some(z), n))
}

/// Eigenvalues only.
pub fn eigvalsh(a: &SymmetricMatrix) -> Result<Spectrum> {
    a.validate()?;
    let n = a.dim();
    let mut v = a.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    householder_tridiagonalize(&mut v, &mut d, &mut e, n);
    e.rotate_left(1);
    e[n - 1] = 0.0;
    implicit_ql(&mut d, &mut e, None, n)?;
    Ok(sorted_spectrum(d, None, n))
}

/// Symmetric tridiagonal matrix: `diag[i]` on the diagonal and `off[i]`
/// coupling rows `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::Dimension(format!(
                "{} off-diagonal entries for dimension {}",
                off.len(),
                diag.len()
            )));
        }
        if let Some(i) = diag.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteEntry { row: i, col: i });
        }
        if let Some(i) = off.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteEntry { row: i + 1, col: i });
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    pub fn to_dense(&self) -> SymmetricMatrix {
        let n = self.dim();
        let mut m = SymmetricMatrix::with_bandwidth(n, 1);
        for i in 0..n {
            m.set(i, i, self.diag[i]);
        }
        for (i, &x) in self.off.iter().enumerate() {
            m.set(i, i + 1, x);
        }
        m
    }

    pub fn eigh(&self, with_vectors: bool) -> Result<Spectrum> {
        let n = self.dim();
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(0.0);
        if with_vectors {
            let mut z = vec![0.0; n * n];
            for i in 0..n {
                z[i * n + i] = 1.0;
            }
            implicit_ql(&mut d, &mut e, Some(&mut z), n)?;
            Ok(sorted_spectrum(d, Some(z), n))
        } else {
            implicit_ql(&mut d, &mut e, None, n)?;
            Ok(sorted_spectrum(d, None, n))
        }
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            let denom = if q == 0.0 {
                f64::EPSILON * self.norm_bound()
            } else {
                q
            };
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    }

    /// Lowest eigenpair via Sturm bisection and shifted inverse iteration.
    ///
    /// The eigenvector is normalized with its largest-magnitude component
    /// positive. Assumes the lowest eigenvalue is simple, which holds for
    /// unreduced tridiagonal matrices.
    pub fn lowest(&self) -> Result<(f64, Vec<f64>)> {
        let n = self.dim();
        if n == 1 {
            return Ok((self.diag[0], vec![1.0]));
        }
        let (mut lo, mut hi) = self.gershgorin();
        let scale = self.norm_bound();
        for _ in 0..256 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let estimate = 0.5 * (lo + hi);

        let mut shift_gap = 1e-10 * scale;
        'retry: for _ in 0..8 {
            let shift = estimate - shift_gap;
            let mut x = vec![1.0; n];
            for _ in 0..4 {
                match self.solve_shifted_spd(shift, &x) {
                    Some(y) => {
                        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                        x = y.into_iter().map(|v| v / norm).collect();
                    }
                    None => {
                        shift_gap *= 10.0;
                        continue 'retry;
                    }
                }
            }
            let pivot = x
                .iter()
                .enumerate()
                .fold((0, 0.0_f64), |best, (i, v)| {
                    if v.abs() > best.1 {
                        (i, v.abs())
                    } else {
                        best
                    }
                })
                .0;
            if x[pivot] < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            let tx = self.matvec(&x);
            let value = tx.iter().zip(&x).map(|(a, b)| a * b).sum();
            return Ok((value, x));
        }
        Err(Error::NoConvergence { index: 0 })
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Solves `(T - shift) y = b` by LDL^T without pivoting. Returns `None`
    /// when a pivot is not positive, i.e. the shift is not below the spectrum.
    fn solve_shifted_spd(&self, shift: f64, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.dim();
        let mut pivots = vec![0.0; n];
        let mut y = b.to_vec();
        pivots[0] = self.diag[0] - shift;
        if pivots[0] <= 0.0 {
            return None;
        }
        for i in 1..n {
            let l = self.off[i - 1] / pivots[i - 1];
            pivots[i] = self.diag[i] - shift - l * self.off[i - 1];
            if pivots[i] <= 0.0 {
                return None;
            }
            y[i] -= l * y[i - 1];
        }
        y[n - 1] /= pivots[n - 1];
        for i in (0..n - 1).rev() {
            y[i] = (y[i] - self.off[i] * y[i + 1]) / pivots[i];
        }
        Some(y)
    }
}

fn transpose(v: &[f64], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            t[c * n + r] = v[r * n + c];
        }
    }
    t
}

fn sorted_spectrum(d: Vec<f64>, z: Option<Vec<f64>>, n: usize) -> Spectrum {
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the QL output order inside exact ties.
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = z.map(|z| {
        let mut out = Vec::with_capacity(n * n);
        for &k in &order {
            out.extend_from_slice(&z[k * n..(k + 1) * n]);
        }
        out
    });
    Spectrum::new(n, values, vectors)
}

/// Householder reduction of a symmetric matrix (row-major in `v`) to
/// tridiagonal form. On return `d` holds the diagonal, `e[1..]` the
/// subdiagonal, and `v` the accumulated orthogonal transform.
fn householder_tridiagonalize(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) {
    let at = |r: usize, c: usize| r * n + c;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
                v[at(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in j + 1..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = 0.0;
    }
    v[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

const MAX_QL_SWEEPS: usize = 64;

/// Implicit QL on a symmetric tridiagonal matrix. `e[i]` couples `i` and
/// `i + 1`, with `e[n - 1] == 0`. Rotations are applied to the rows of the
/// vector-major `z` when given.
fn implicit_ql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>, n: usize) -> Result<()> {
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_QL_SWEEPS {
                    return Err(Error::NoConvergence { index: l });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        let (head, tail) = z.split_at_mut((i + 1) * n);
                        let zi = &mut head[i * n..];
                        let zi1 = &mut tail[..n];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let hk = *b;
                            *b = s * *a + c * hk;
                            *a = c * *a - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Running `ln Σ exp(x_k)` with a moving max-shift.
#[derive(Debug, Clone, Copy)]
pub struct LogAccumulator {
    shift: f64,
    scaled_sum: f64,
}

impl Default for LogAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl LogAccumulator {
    pub fn new() -> Self {
        Self {
            shift: f64::NEG_INFINITY,
            scaled_sum: 0.0,
        }
    }

    pub fn push(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term > self.shift {
            self.scaled_sum = self.scaled_sum * (self.shift - log_term).exp() + 1.0;
            self.shift = log_term;
        } else {
            self.scaled_sum += (log_term - self.shift).exp();
        }
    }

    pub fn is_empty(&self) -> bool {
        self.scaled_sum == 0.0
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn value(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyAccumulation);
        }
        Ok(self.shift + self.scaled_sum.ln())
    }
}

/// `ln Σ exp(terms[k])`, shifted by the maximum term.
pub fn log_sum_exp(terms: &[f64]) -> Result<f64> {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if terms.is_empty() {
        return Err(Error::EmptyAccumulation);
    }
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return Ok(max);
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    Ok(max + sum.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffOrder {
    First,
    Second,
}

/// Central difference of a fallible function.
pub fn try_central_diff<F, E>(mut f: F, x: f64, h: f64, order: DiffOrder) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<Error>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidStep(h).into());
    }
    let mut eval = |at: f64| -> Result<f64, E> {
        let v = f(at)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteEvaluation { x: at }.into())
        }
    };
    match order {
        DiffOrder::First => {
            let fp = eval(x + h)?;
            let fm = eval(x - h)?;
            Ok((fp - fm) / (2.0 * h))
        }
        DiffOrder::Second => {
            let fp = eval(x + h)?;
            let f0 = eval(x)?;
            let fm = eval(x - h)?;
            Ok((fp - 2.0 * f0 + fm) / (h * h))
        }
    }
}

/// `(f(x+h) - f(x-h)) / 2h` or `(f(x+h) - 2f(x) + f(x-h)) / h^2`.
pub fn central_diff<F>(mut f: F, x: f64, h: f64, order: DiffOrder) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    try_central_diff(|t| Ok::<_, Error>(f(t)), x, h, order)
}
