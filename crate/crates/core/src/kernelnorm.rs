//! Operator-norm experiments for the kernels
//! `k(x, y) = |x|^{-a} |x−y|^{-(d−a−b)} |y|^{-b}` and for the weighted
//! conjugates `⟨x⟩^{-t-1} A ⟨x⟩^{t}` of the inverse free operator.
//!
//! Boundedness is tested empirically: the norm estimate at fixed spacing
//! should settle as the box grows when the kernel is bounded, and keep
//! growing when it is not.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::field::{bracket, make_grid, norm3, random_field, GridSpec, SpinorField};
use crate::fourier::{fft3, Direction};
use crate::freeop::{apply_a_spectral, DEFAULT_QUADRATURE_LIMIT};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NwKernelSpec {
    pub a: Rational,
    pub b: Rational,
    pub d: u32,
    pub p: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundedness {
    Bounded,
    Unbounded,
}

impl NwKernelSpec {
    pub fn new(a: Rational, b: Rational, d: u32, p: Rational) -> Result<Self> {
        if a + b <= Rational::ZERO {
            return Err(LabError::InvalidSpec(format!("a + b must be positive, got a = {a}, b = {b}")));
        }
        if p <= Rational::ONE {
            return Err(LabError::InvalidSpec(format!("p must exceed 1, got {p}")));
        }
        if d == 0 {
            return Err(LabError::InvalidSpec("dimension must be at least 1".into()));
        }
        Ok(NwKernelSpec { a, b, d, p })
    }

    /// Three-dimensional, `p = 2`.
    pub fn l2(a: Rational, b: Rational) -> Result<Self> {
        Self::new(a, b, 3, Rational::integer(2))
    }

    /// Dual exponent `p/(p−1)`.
    pub fn q(&self) -> Rational {
        self.p / (self.p - Rational::ONE)
    }

    /// Exponent of `|x−y|`.
    pub fn distance_exponent(&self) -> Rational {
        Rational::integer(self.d as i128) - self.a - self.b
    }

    fn dim(&self) -> Rational {
        Rational::integer(self.d as i128)
    }

    /// `a p < d` and `b p < d (p − 1)`, i.e. `a < d/p` and `b < d/q`.
    fn margins(&self) -> (std::cmp::Ordering, std::cmp::Ordering) {
        let d = self.dim();
        ((self.a * self.p).cmp(&d), (self.b * self.p).cmp(&(d * (self.p - Rational::ONE))))
    }

    /// Unbounded with equality in one constraint and no strict violation.
    pub fn is_boundary(&self) -> bool {
        use std::cmp::Ordering::*;
        matches!(self.margins(), (Equal, Less) | (Less, Equal) | (Equal, Equal))
    }

    pub fn label(&self) -> String {
        format!("({},{},{},{})", self.a, self.b, self.d, self.p)
    }
}

pub fn nw_classify(spec: &NwKernelSpec) -> Boundedness {
    use std::cmp::Ordering::Less;
    match spec.margins() {
        (Less, Less) => Boundedness::Bounded,
        _ => Boundedness::Unbounded,
    }
}

fn require_3d(spec: &NwKernelSpec) -> Result<()> {
    if spec.d != 3 {
        return Err(LabError::InvalidSpec(format!("grid experiments are three-dimensional, spec has d = {}", spec.d)));
    }
    Ok(())
}

/// `max(|x|, h/2)` so that the lattice origin gets a finite weight.
#[inline]
fn regularized_radius(x: &[f64; 3], h: f64) -> f64 {
    norm3(x).max(h / 2.0)
}

fn weight(grid: &GridSpec, power: f64) -> Vec<f64> {
    let h = grid.spacing();
    (0..grid.len()).into_par_iter().map(|i| regularized_radius(&grid.position(i), h).powf(-power)).collect()
}

/// Direct sum `h³ Σ_{y≠x} k(x, y) φ(y)` over the box.
pub fn nw_apply(spec: &NwKernelSpec, phi: &[f64], grid: &GridSpec, limit: Option<usize>) -> Result<Vec<f64>> {
    require_3d(spec)?;
    let limit = limit.unwrap_or(DEFAULT_QUADRATURE_LIMIT);
    if grid.points > limit {
        return Err(LabError::CostGuard { points: grid.points, limit });
    }
    if phi.len() != grid.len() {
        return Err(LabError::GridMismatch);
    }
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(LabError::NonFinite("kernel input".into()));
    }
    let h = grid.spacing();
    let h3 = h.powi(3);
    let c = spec.distance_exponent().to_f64();
    let wx = weight(grid, spec.a.to_f64());
    let wy = weight(grid, spec.b.to_f64());
    let src: Vec<f64> = phi.iter().zip(&wy).map(|(p, w)| p * w).collect();
    let pts: Vec<[i64; 3]> = (0..grid.len()).map(|i| grid.lattice_point(i)).collect();
    let n = grid.points as i64;
    let w = (2 * n - 1) as usize;
    let table: Vec<f64> = (0..w * w * w)
        .into_par_iter()
        .map(|t| {
            let d = [(t / (w * w)) as i64, ((t / w) % w) as i64, (t % w) as i64].map(|v| v - (n - 1));
            if d == [0, 0, 0] {
                0.0
            } else {
                norm3(&d.map(|v| v as f64 * h)).powf(-c)
            }
        })
        .collect();
    let out = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = pts[i];
            let mut acc = 0.0;
            for (j, y) in pts.iter().enumerate() {
                let t = (((x[0] - y[0] + n - 1) as usize * w) + (x[1] - y[1] + n - 1) as usize) * w + (x[2] - y[2] + n - 1) as usize;
                acc += table[t] * src[j];
            }
            h3 * wx[i] * acc
        })
        .collect();
    Ok(out)
}

/// FFT-backed version of [`nw_apply`] for repeated application. The
/// aperiodic convolution runs on a zero-padded `2N` lattice.
pub struct NwOperator {
    grid: GridSpec,
    wx: Vec<f64>,
    wy: Vec<f64>,
    kernel_hat: Vec<Complex64>,
}

impl NwOperator {
    pub fn new(spec: &NwKernelSpec, grid: &GridSpec) -> Result<Self> {
        require_3d(spec)?;
        let n = grid.points;
        let m = 2 * n;
        let h = grid.spacing();
        let c = spec.distance_exponent().to_f64();
        let h3 = h.powi(3);
        let mut kernel_hat: Vec<Complex64> = (0..m * m * m)
            .into_par_iter()
            .map(|t| {
                let d = [t / (m * m), (t / m) % m, t % m].map(|v| if v < n { v as i64 } else { v as i64 - m as i64 });
                // |d| = N along an axis never pairs two box points
                if d == [0, 0, 0] || d.iter().any(|&v| v == -(n as i64)) {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(h3 * norm3(&d.map(|v| v as f64 * h)).powf(-c), 0.0)
                }
            })
            .collect();
        fft3(&mut kernel_hat, m, Direction::Forward);
        let scale = 1.0 / (m * m * m) as f64;
        kernel_hat.par_iter_mut().for_each(|z| *z *= scale);
        Ok(NwOperator { grid: *grid, wx: weight(grid, spec.a.to_f64()), wy: weight(grid, spec.b.to_f64()), kernel_hat })
    }

    fn convolve(&self, v: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let n = g.points;
        let m = 2 * n;
        let pad = |p: [i64; 3]| -> usize {
            let w = p.map(|a| a.rem_euclid(m as i64) as usize);
            (w[0] * m + w[1]) * m + w[2]
        };
        let mut buf = vec![Complex64::new(0.0, 0.0); m * m * m];
        for (i, val) in v.iter().enumerate() {
            buf[pad(g.lattice_point(i))] = Complex64::new(*val, 0.0);
        }
        fft3(&mut buf, m, Direction::Forward);
        buf.par_iter_mut().zip(self.kernel_hat.par_iter()).for_each(|(b, k)| *b *= k);
        fft3(&mut buf, m, Direction::Inverse);
        (0..g.len()).map(|i| buf[pad(g.lattice_point(i))].re).collect()
    }

    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let src: Vec<f64> = phi.iter().zip(&self.wy).map(|(p, w)| p * w).collect();
        self.convolve(&src).iter().zip(&self.wx).map(|(v, w)| v * w).collect()
    }

    /// The transposed kernel `k(y, x)`.
    pub fn apply_transpose(&self, phi: &[f64]) -> Vec<f64> {
        let src: Vec<f64> = phi.iter().zip(&self.wx).map(|(p, w)| p * w).collect();
        self.convolve(&src).iter().zip(&self.wy).map(|(v, w)| v * w).collect()
    }
}

fn lp_norm(v: &[f64], p: f64, dv: f64) -> f64 {
    if p == 2.0 {
        (v.iter().map(|x| x * x).sum::<f64>() * dv).sqrt()
    } else {
        (v.iter().map(|x| x.abs().powf(p)).sum::<f64>() * dv).powf(1.0 / p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    PowerIteration,
    /// Best ratio over random trial functions; a lower bound only.
    RandomizedLowerBound,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    pub method: EstimateMethod,
    /// Running estimate after each iteration.
    pub history: Vec<f64>,
}

/// Relative change below which power iteration counts as converged.
pub const POWER_TOL: f64 = 1e-6;

/// Power iteration on `B^T B` given `B` and `B^T`; returns the running
/// maximum of `‖B v‖/‖v‖`, which never decreases.
fn power_iteration<V, F, G, N>(start: V, iterations: usize, apply: F, apply_t: G, norm: N) -> (f64, usize, bool, Vec<f64>)
where
    F: Fn(&V) -> V,
    G: Fn(&V) -> V,
    N: Fn(&V) -> f64,
    V: Scalable,
{
    let mut v = start.scaled(1.0 / norm(&start));
    let mut best = 0.0f64;
    let mut history = Vec::with_capacity(iterations);
    let mut converged = false;
    let mut used = 0;
    for it in 0..iterations {
        used = it + 1;
        let w = apply(&v);
        let est = norm(&w);
        let prev = best;
        best = best.max(est);
        history.push(best);
        if est == 0.0 {
            converged = true;
            break;
        }
        if it > 0 && (best - prev).abs() <= POWER_TOL * best {
            converged = true;
            break;
        }
        let u = apply_t(&w);
        let nu = norm(&u);
        if nu == 0.0 {
            converged = true;
            break;
        }
        v = u.scaled(1.0 / nu);
    }
    (best, used, converged, history)
}

trait Scalable {
    fn scaled(&self, c: f64) -> Self;
}

impl Scalable for Vec<f64> {
    fn scaled(&self, c: f64) -> Self {
        self.iter().map(|x| x * c).collect()
    }
}

impl Scalable for SpinorField {
    fn scaled(&self, c: f64) -> Self {
        self.scale_real(c)
    }
}

/// Norm estimate of the kernel operator on the given grid. For `p = 2`
/// this is power iteration on `K^T K` from a seeded positive start; for
/// other `p` it is the best `‖Kφ‖_p/‖φ‖_p` over `iterations` seeded
/// positive trial functions, a lower bound.
pub fn estimate_norm(spec: &NwKernelSpec, grid: &GridSpec, iterations: usize, seed: u64) -> Result<NormEstimate> {
    let op = NwOperator::new(spec, grid)?;
    let dv = grid.measure(crate::field::Space::Position);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if spec.p == Rational::integer(2) {
        let start: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(0.5..1.5)).collect();
        let (value, used, converged, history) =
            power_iteration(start, iterations, |v| op.apply(v), |v| op.apply_transpose(v), |v| lp_norm(v, 2.0, dv));
        return Ok(NormEstimate { value, iterations: used, converged, seed, method: EstimateMethod::PowerIteration, history });
    }
    let p = spec.p.to_f64();
    let mut best = 0.0f64;
    let mut history = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        // Gaussian bump at a random center and width, times a positive jitter
        let center = [0; 3].map(|_| rng.gen_range(-0.5..0.5) * grid.half_width);
        let width = rng.gen_range(0.05..1.0) * grid.half_width;
        let trial: Vec<f64> = (0..grid.len())
            .map(|i| {
                let x = grid.position(i);
                let r2 = (0..3).map(|k| (x[k] - center[k]).powi(2)).sum::<f64>();
                (-r2 / (2.0 * width * width)).exp()
            })
            .collect();
        let den = lp_norm(&trial, p, dv);
        if den > 0.0 {
            best = best.max(lp_norm(&op.apply(&trial), p, dv) / den);
        }
        history.push(best);
    }
    Ok(NormEstimate {
        value: best,
        iterations,
        converged: false,
        seed,
        method: EstimateMethod::RandomizedLowerBound,
        history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthClass {
    Stable,
    Growing,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Agreement {
    Agree,
    Disagree,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepThresholds {
    /// Largest relative change between the last two scales for "stable".
    pub stable_drift: f64,
    /// Smallest overall relative increase for "growing".
    pub growth: f64,
    /// Relative dip tolerated inside a growing sequence.
    pub monotone_noise: f64,
}

impl Default for SweepThresholds {
    fn default() -> Self {
        SweepThresholds { stable_drift: 0.10, growth: 0.50, monotone_noise: 0.01 }
    }
}

pub fn classify_growth(estimates: &[f64], th: &SweepThresholds) -> GrowthClass {
    let k = estimates.len();
    if k < 2 {
        return GrowthClass::Inconclusive;
    }
    let first = estimates[0];
    let last = estimates[k - 1];
    let monotone = estimates.windows(2).all(|w| w[1] >= w[0] * (1.0 - th.monotone_noise));
    let growing = first > 0.0 && last >= first * (1.0 + th.growth) && monotone;
    let prev = estimates[k - 2];
    let drift = if prev == 0.0 && last == 0.0 { 0.0 } else { (last - prev).abs() / prev.abs().max(last.abs()) };
    if growing {
        GrowthClass::Growing
    } else if drift <= th.stable_drift {
        GrowthClass::Stable
    } else {
        GrowthClass::Inconclusive
    }
}

fn agreement(growth: GrowthClass, expected: Boundedness) -> Agreement {
    match (growth, expected) {
        (GrowthClass::Inconclusive, _) => Agreement::Inconclusive,
        (GrowthClass::Stable, Boundedness::Bounded) | (GrowthClass::Growing, Boundedness::Unbounded) => Agreement::Agree,
        _ => Agreement::Disagree,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepConfig {
    /// Fixed grid spacing across scales.
    pub spacing: f64,
    pub iterations: usize,
    pub seed: u64,
    pub thresholds: SweepThresholds,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { spacing: 1.0, iterations: 40, seed: 20240301, thresholds: SweepThresholds::default() }
    }
}

/// Grid of half-width `l` with the configured spacing.
pub fn sweep_grid(l: f64, spacing: f64) -> Result<GridSpec> {
    let n = (2.0 * l / spacing).round() as usize;
    if ((2.0 * l / n as f64) - spacing).abs() > 1e-9 * spacing {
        return Err(LabError::InvalidGrid(format!("half-width {l} is not a multiple of spacing {spacing}")));
    }
    make_grid(l, n)
}

#[derive(Debug, Clone, Serialize)]
pub struct NormSweepReport {
    pub spec: NwKernelSpec,
    pub scales: Vec<f64>,
    pub points: Vec<usize>,
    pub norm_estimates: Vec<f64>,
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
    pub seed: u64,
    pub growth_class: GrowthClass,
    pub criterion_class: Boundedness,
    pub boundary: bool,
    pub agreement: Agreement,
}

impl NormSweepReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("spec,L,N,estimate,iterations,converged,seed\n");
        for k in 0..self.scales.len() {
            let _ = writeln!(
                s,
                "\"{}\",{},{},{:.10e},{},{},{}",
                self.spec.label(),
                self.scales[k],
                self.points[k],
                self.norm_estimates[k],
                self.iterations[k],
                self.converged[k],
                self.seed
            );
        }
        s
    }
}

fn check_scales(scales: &[f64]) -> Result<()> {
    if scales.len() < 3 || scales.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::Precondition(format!("need at least 3 increasing scales, got {scales:?}")));
    }
    Ok(())
}

pub fn scale_sweep(spec: &NwKernelSpec, scales: &[f64], cfg: &SweepConfig) -> Result<NormSweepReport> {
    check_scales(scales)?;
    let mut points = vec![];
    let mut estimates = vec![];
    let mut iterations = vec![];
    let mut converged = vec![];
    for &l in scales {
        let grid = sweep_grid(l, cfg.spacing)?;
        let e = estimate_norm(spec, &grid, cfg.iterations, cfg.seed)?;
        points.push(grid.points);
        estimates.push(e.value);
        iterations.push(e.iterations);
        converged.push(e.converged);
    }
    let growth_class = classify_growth(&estimates, &cfg.thresholds);
    let criterion_class = nw_classify(spec);
    Ok(NormSweepReport {
        spec: *spec,
        scales: scales.to_vec(),
        points,
        norm_estimates: estimates,
        iterations,
        converged,
        seed: cfg.seed,
        growth_class,
        criterion_class,
        boundary: spec.is_boundary(),
        agreement: agreement(growth_class, criterion_class),
    })
}

/// Exponents of the kernel dominating `⟨x⟩^{-t-1} A ⟨x⟩^{t}`, up to the
/// factor `1/(4π)`.
pub fn lemma_dominating_spec(t: Rational) -> Result<NwKernelSpec> {
    NwKernelSpec::l2(t + Rational::ONE, -t)
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaEstimate {
    pub t: Rational,
    pub half_width: f64,
    pub points: usize,
    pub a_estimate: NormEstimate,
    /// `1/(4π)` times the estimate for the dominating kernel.
    pub nw_bound: f64,
}

impl LemmaEstimate {
    pub fn dominated(&self, tolerance: f64) -> bool {
        self.a_estimate.value <= self.nw_bound * (1.0 + tolerance)
    }
}

/// Power-iteration estimate of `‖⟨x⟩^{-t-1} A ⟨x⟩^{t}‖` on L² spinor
/// fields, with `A` applied spectrally, next to the dominating kernel bound.
pub fn lemma_a_conjugated_norm(t: Rational, grid: &GridSpec, iterations: usize, seed: u64) -> Result<LemmaEstimate> {
    let tf = t.to_f64();
    let g = *grid;
    let outer: Vec<f64> = (0..g.len()).map(|i| bracket(&g.position(i)).powf(-tf - 1.0)).collect();
    let inner: Vec<f64> = (0..g.len()).map(|i| bracket(&g.position(i)).powf(tf)).collect();
    let mul = |f: &SpinorField, w: &[f64]| f.map(|i, s| s.map(|z| z * w[i]));
    // A is self-adjoint, so the adjoint of W₁ A W₂ is W₂ A W₁
    let apply = |f: &SpinorField| mul(&apply_a_spectral(&mul(f, &inner)).expect("position field").field, &outer);
    let apply_t = |f: &SpinorField| mul(&apply_a_spectral(&mul(f, &outer)).expect("position field").field, &inner);
    let start = random_field(&g, seed);
    let (value, used, converged, history) = power_iteration(start, iterations, apply, apply_t, |f| f.norm());
    let a_estimate = NormEstimate { value, iterations: used, converged, seed, method: EstimateMethod::PowerIteration, history };
    let nw = estimate_norm(&lemma_dominating_spec(t)?, grid, iterations, seed)?;
    Ok(LemmaEstimate { t, half_width: g.half_width, points: g.points, a_estimate, nw_bound: nw.value / (4.0 * PI) })
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaSweepReport {
    pub t: Rational,
    pub estimates: Vec<LemmaEstimate>,
    pub growth_class: GrowthClass,
    /// Stable is expected inside `(-3/2, 1/2)`, growth outside.
    pub expected: Boundedness,
    pub agreement: Agreement,
}

pub fn lemma_sweep(t: Rational, scales: &[f64], cfg: &SweepConfig) -> Result<LemmaSweepReport> {
    check_scales(scales)?;
    let estimates = scales
        .iter()
        .map(|&l| lemma_a_conjugated_norm(t, &sweep_grid(l, cfg.spacing)?, cfg.iterations, cfg.seed))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = estimates.iter().map(|e| e.a_estimate.value).collect();
    let growth_class = classify_growth(&values, &cfg.thresholds);
    let inside = t > Rational::frac(-3, 2) && t < Rational::frac(1, 2);
    let expected = if inside { Boundedness::Bounded } else { Boundedness::Unbounded };
    Ok(LemmaSweepReport { t, estimates, growth_class, expected, agreement: agreement(growth_class, expected) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::frac(n, d)
    }

    #[test]
    fn classification_examples() {
        let s = NwKernelSpec::new(r(1, 1), r(1, 2), 3, r(2, 1)).unwrap();
        assert_eq!(nw_classify(&s), Boundedness::Bounded);
        assert!(!s.is_boundary());
        let s = NwKernelSpec::new(r(3, 2), r(0, 1), 3, r(2, 1)).unwrap();
        assert_eq!(nw_classify(&s), Boundedness::Unbounded);
        assert!(s.is_boundary());
        let s = lemma_dominating_spec(r(0, 1)).unwrap();
        assert_eq!((s.a, s.b), (r(1, 1), r(0, 1)));
        assert_eq!(nw_classify(&s), Boundedness::Bounded);
        let s = NwKernelSpec::new(r(2, 1), r(1, 1), 3, r(2, 1)).unwrap();
        assert_eq!(nw_classify(&s), Boundedness::Unbounded);
        assert!(!s.is_boundary());
        // p = 3: d/p = 1, d/q = 2
        let s = NwKernelSpec::new(r(9, 10), r(19, 10), 3, r(3, 1)).unwrap();
        assert_eq!(s.q(), r(3, 2));
        assert_eq!(nw_classify(&s), Boundedness::Bounded);
        assert!(NwKernelSpec::new(r(1, 1), r(-2, 1), 3, r(2, 1)).is_err());
        assert!(NwKernelSpec::new(r(1, 1), r(0, 1), 3, r(1, 1)).is_err());
    }

    #[test]
    fn direct_and_fft_application_agree() {
        let g = make_grid(3.0, 8).unwrap();
        let spec = NwKernelSpec::l2(r(1, 1), r(1, 2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let direct = nw_apply(&spec, &phi, &g, None).unwrap();
        let fast = NwOperator::new(&spec, &g).unwrap().apply(&phi);
        let err: f64 = direct.iter().zip(&fast).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = direct.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(err <= 1e-12 * scale, "{err}");
    }

    #[test]
    fn nw_apply_examples() {
        let g = make_grid(3.0, 8).unwrap();
        let spec = NwKernelSpec::l2(r(0, 1), r(1, 100)).unwrap();
        let zero = vec![0.0; g.len()];
        assert!(nw_apply(&spec, &zero, &g, None).unwrap().iter().all(|v| *v == 0.0));
        let ball: Vec<f64> = (0..g.len()).map(|i| if norm3(&g.position(i)) < 1.5 { 1.0 } else { 0.0 }).collect();
        let out = nw_apply(&spec, &ball, &g, None).unwrap();
        assert!(out.iter().all(|v| *v > 0.0));
        let big = make_grid(3.0, 34).unwrap();
        assert!(matches!(nw_apply(&spec, &vec![0.0; big.len()], &big, None), Err(LabError::CostGuard { .. })));
    }

    #[test]
    fn symmetric_spec_gives_symmetric_operator() {
        let g = make_grid(3.0, 8).unwrap();
        let spec = NwKernelSpec::l2(r(1, 2), r(1, 2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let psi: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let kphi = nw_apply(&spec, &phi, &g, None).unwrap();
        let kpsi = nw_apply(&spec, &psi, &g, None).unwrap();
        let a: f64 = kphi.iter().zip(&psi).map(|(x, y)| x * y).sum();
        let b: f64 = phi.iter().zip(&kpsi).map(|(x, y)| x * y).sum();
        assert!((a - b).abs() <= 1e-8 * a.abs().max(b.abs()));
    }

    #[test]
    fn transpose_is_the_adjoint() {
        let g = make_grid(3.0, 8).unwrap();
        let spec = NwKernelSpec::l2(r(2, 1), r(-1, 2)).unwrap();
        let op = NwOperator::new(&spec, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let psi: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a: f64 = op.apply(&phi).iter().zip(&psi).map(|(x, y)| x * y).sum();
        let b: f64 = phi.iter().zip(&op.apply_transpose(&psi)).map(|(x, y)| x * y).sum();
        assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()));
    }

    #[test]
    fn estimate_is_monotone_and_reproducible() {
        let g = make_grid(4.0, 8).unwrap();
        let spec = NwKernelSpec::l2(r(1, 1), r(1, 2)).unwrap();
        let e = estimate_norm(&spec, &g, 30, 5).unwrap();
        assert!(e.history.windows(2).all(|w| w[1] >= w[0]));
        let again = estimate_norm(&spec, &g, 30, 5).unwrap();
        assert_eq!(e.value, again.value);
        let other = estimate_norm(&spec, &g, 200, 6).unwrap();
        let e_long = estimate_norm(&spec, &g, 200, 5).unwrap();
        assert!(e_long.converged && other.converged);
        assert!((other.value - e_long.value).abs() <= 0.05 * e_long.value);
    }

    #[test]
    fn power_iteration_matches_dense_singular_value() {
        // assemble the whole matrix from unit vectors and take its SVD
        let g = make_grid(2.0, 4).unwrap();
        let spec = NwKernelSpec::l2(r(1, 1), r(1, 2)).unwrap();
        let n = g.len();
        let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = nw_apply(&spec, &e, &g, None).unwrap();
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        let top = m.singular_values().max();
        let e = estimate_norm(&spec, &g, 500, 9).unwrap();
        assert!(e.converged);
        assert!((e.value - top).abs() <= 1e-4 * top, "{} vs {top}", e.value);
    }

    #[test]
    fn growth_classifier() {
        let th = SweepThresholds::default();
        assert_eq!(classify_growth(&[21.1, 24.0, 26.2], &th), GrowthClass::Stable);
        assert_eq!(classify_growth(&[59.7, 86.9, 124.7], &th), GrowthClass::Growing);
        assert_eq!(classify_growth(&[29.2, 35.4, 41.5], &th), GrowthClass::Inconclusive);
        assert_eq!(classify_growth(&[10.0, 20.0, 15.0], &th), GrowthClass::Inconclusive);
        assert_eq!(classify_growth(&[0.0, 0.0, 0.0], &th), GrowthClass::Stable);
    }

    #[test]
    fn p_not_two_gives_lower_bound_proxy() {
        let g = make_grid(3.0, 8).unwrap();
        let spec = NwKernelSpec::new(r(1, 2), r(1, 2), 3, r(3, 1)).unwrap();
        let e = estimate_norm(&spec, &g, 10, 1).unwrap();
        assert_eq!(e.method, EstimateMethod::RandomizedLowerBound);
        assert!(e.value > 0.0 && !e.converged);
        assert!(e.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn csv_has_one_row_per_scale() {
        let spec = NwKernelSpec::l2(r(1, 1), r(1, 2)).unwrap();
        let cfg = SweepConfig { iterations: 5, ..Default::default() };
        let rep = scale_sweep(&spec, &[2.0, 3.0, 4.0], &cfg).unwrap();
        let csv = rep.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(1).unwrap().starts_with("\"(1,1/2,3,2)\",2,4,"));
        assert!(scale_sweep(&spec, &[2.0, 3.0], &cfg).is_err());
    }

    #[test]
    fn lemma_estimate_is_dominated() {
        let g = make_grid(4.0, 8).unwrap();
        let e = lemma_a_conjugated_norm(r(0, 1), &g, 30, 3).unwrap();
        assert!(e.a_estimate.value > 0.0);
        assert!(e.dominated(0.1), "{} vs {}", e.a_estimate.value, e.nw_bound);
    }
}
