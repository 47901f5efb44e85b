//! Periodic grids, spinor fields, the unitary Fourier convention and the
//! weighted norms built on top of it.
//!
//! Storage is in FFT order along each axis: array index `i` holds the lattice
//! point `m = i` for `i < N/2` and `m = i - N` otherwise. Position `x = m h`,
//! frequency `ξ = m π/L`. With this layout the plain DFT of the stored array
//! is exactly the lattice sum `Σ f(x) e^{-i x·ξ}`, no shifts needed.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::Spinor;
use crate::error::{LabError, Result};
use crate::fourier::{fft3, Direction};

const CZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sum of `f(i)` over `0..n` with a fixed reduction order, so parallel
/// results are bit-for-bit reproducible.
pub fn ordered_sum<T, F>(n: usize, f: F) -> T
where
    T: Send + std::iter::Sum<T>,
    F: Fn(usize) -> T + Sync,
{
    const CHUNK: usize = 4096;
    let parts: Vec<T> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&f).sum())
        .collect();
    parts.into_iter().sum()
}

/// `⟨x⟩ = (1 + |x|²)^{1/2}`.
#[inline]
pub fn bracket(v: &[f64; 3]) -> f64 {
    (1.0 + norm3(v).powi(2)).sqrt()
}

#[inline]
pub fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Position,
    Frequency,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Space::Position => "position",
            Space::Frequency => "frequency",
        })
    }
}

impl FromStr for Space {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "position" => Ok(Space::Position),
            "frequency" => Ok(Space::Frequency),
            other => Err(LabError::Parse(format!("unknown space tag `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub points: usize,
}

pub fn make_grid(half_width: f64, points: usize) -> Result<GridSpec> {
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(LabError::InvalidGrid(format!("half-width must be positive, got {half_width}")));
    }
    if points < 4 || points % 2 != 0 {
        return Err(LabError::InvalidGrid(format!("points per axis must be even and >= 4, got {points}")));
    }
    Ok(GridSpec { half_width, points })
}

impl GridSpec {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn freq_step(&self) -> f64 {
        PI / self.half_width
    }

    pub fn len(&self) -> usize {
        self.points.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        self.points == 0
    }

    /// Signed lattice coordinate of array index `i` along one axis.
    #[inline]
    pub fn lattice(&self, i: usize) -> i64 {
        let n = self.points;
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Array index of a signed lattice coordinate (taken modulo N).
    #[inline]
    pub fn wrap(&self, m: i64) -> usize {
        m.rem_euclid(self.points as i64) as usize
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.points;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.points + iy) * self.points + iz
    }

    #[inline]
    pub fn lattice_point(&self, idx: usize) -> [i64; 3] {
        self.coords(idx).map(|i| self.lattice(i))
    }

    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        self.lattice_point(idx).map(|m| m as f64 * h)
    }

    #[inline]
    pub fn frequency(&self, idx: usize) -> [f64; 3] {
        let k = self.freq_step();
        self.lattice_point(idx).map(|m| m as f64 * k)
    }

    /// Coordinate of `idx` in the given space.
    #[inline]
    pub fn point(&self, space: Space, idx: usize) -> [f64; 3] {
        match space {
            Space::Position => self.position(idx),
            Space::Frequency => self.frequency(idx),
        }
    }

    /// Cell volume: `h³` in position space, `(π/L)³` in frequency space.
    pub fn measure(&self, space: Space) -> f64 {
        match space {
            Space::Position => self.spacing().powi(3),
            Space::Frequency => self.freq_step().powi(3),
        }
    }

    /// True when some axis coordinate of `idx` is the unpaired `-N/2` entry.
    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let half = self.points / 2;
        self.coords(idx).iter().any(|&i| i == half)
    }

    pub fn positions(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.position(i)).collect()
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.points == other.points && self.half_width == other.half_width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    pub grid: GridSpec,
    pub space: Space,
    pub data: Vec<Spinor>,
}

impl SpinorField {
    pub fn zeros(grid: GridSpec, space: Space) -> Self {
        SpinorField { grid, space, data: vec![[CZERO; 4]; grid.len()] }
    }

    pub fn from_data(grid: GridSpec, space: Space, data: Vec<Spinor>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(LabError::InvalidGrid(format!(
                "field has {} points, grid expects {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(SpinorField { grid, space, data })
    }

    /// Same-grid, same-space check.
    pub fn compatible(&self, other: &SpinorField) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(LabError::GridMismatch);
        }
        if self.space != other.space {
            return Err(LabError::SpaceMismatch { expected: self.space, found: other.space });
        }
        Ok(())
    }

    pub fn require_space(&self, space: Space) -> Result<()> {
        if self.space != space {
            return Err(LabError::SpaceMismatch { expected: space, found: self.space });
        }
        Ok(())
    }

    /// `Σ |f|²` without the cell measure.
    pub fn sum_sq(&self) -> f64 {
        ordered_sum(self.data.len(), |i| self.data[i].iter().map(|z| z.norm_sqr()).sum::<f64>())
    }

    /// L² norm with the measure of the field's space.
    pub fn norm(&self) -> f64 {
        (self.sum_sq() * self.grid.measure(self.space)).sqrt()
    }

    /// `Σ ⟨f(x), g(x)⟩ dV`, linear in `self`, antilinear in `other`.
    pub fn inner(&self, other: &SpinorField) -> Result<Complex64> {
        self.compatible(other)?;
        let s: Complex64 = ordered_sum(self.data.len(), |i| {
            let (a, b) = (&self.data[i], &other.data[i]);
            (0..4).map(|j| a[j] * b[j].conj()).sum::<Complex64>()
        });
        Ok(s * self.grid.measure(self.space))
    }

    pub fn scale(&self, c: Complex64) -> SpinorField {
        self.map(|_, s| s.map(|z| z * c))
    }

    pub fn scale_real(&self, c: f64) -> SpinorField {
        self.map(|_, s| s.map(|z| z * c))
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: Complex64, other: &SpinorField) -> Result<SpinorField> {
        self.compatible(other)?;
        let data = self
            .data
            .par_iter()
            .zip(other.data.par_iter())
            .map(|(a, b)| [0, 1, 2, 3].map(|j| a[j] + c * b[j]))
            .collect();
        Ok(SpinorField { grid: self.grid, space: self.space, data })
    }

    pub fn sub(&self, other: &SpinorField) -> Result<SpinorField> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    pub fn add(&self, other: &SpinorField) -> Result<SpinorField> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    /// Pointwise map with the flat index.
    pub fn map<F>(&self, f: F) -> SpinorField
    where
        F: Fn(usize, &Spinor) -> Spinor + Sync,
    {
        let data = self.data.par_iter().enumerate().map(|(i, s)| f(i, s)).collect();
        SpinorField { grid: self.grid, space: self.space, data }
    }

    /// Multiplication by `⟨p⟩^s` where `p` is the coordinate of the field's space.
    pub fn weighted(&self, s: f64) -> SpinorField {
        let g = self.grid;
        let space = self.space;
        self.map(|i, v| {
            let w = bracket(&g.point(space, i)).powf(s);
            v.map(|z| z * w)
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.par_iter().map(|s| spinor_norm(s)).reduce(|| 0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.par_iter().all(|s| s.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    pub fn write_dzl1<W: Write>(&self, w: W) -> Result<()> {
        let flat: Vec<Complex64> = self.data.iter().flatten().copied().collect();
        write_dzl1(w, &self.grid, self.space, 4, &flat)
    }

    pub fn read_dzl1<R: BufRead>(r: R) -> Result<SpinorField> {
        let raw = read_dzl1(r)?;
        if raw.components != 4 {
            return Err(LabError::Format(format!("expected 4 components, found {}", raw.components)));
        }
        let data = raw.values.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]).collect();
        SpinorField::from_data(raw.grid, raw.space, data)
    }
}

#[inline]
pub fn spinor_norm(s: &Spinor) -> f64 {
    s.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Pointwise evaluation on the position lattice.
pub fn sample<F>(f: F, grid: &GridSpec) -> Result<SpinorField>
where
    F: Fn([f64; 3]) -> Spinor + Sync,
{
    let g = *grid;
    let data: Vec<Spinor> = (0..g.len()).into_par_iter().map(|i| f(g.position(i))).collect();
    if let Some(i) = data.iter().position(|s| s.iter().any(|z| !(z.re.is_finite() && z.im.is_finite()))) {
        return Err(LabError::NonFinite(format!("sampled value at x = {:?}", g.position(i))));
    }
    Ok(SpinorField { grid: g, space: Space::Position, data })
}

fn transform(f: &SpinorField, direction: Direction, factor: f64) -> Vec<Spinor> {
    let n = f.grid.points;
    let mut out = vec![[CZERO; 4]; f.grid.len()];
    let mut buf = vec![CZERO; f.grid.len()];
    for c in 0..4 {
        buf.par_iter_mut().zip(f.data.par_iter()).for_each(|(b, s)| *b = s[c]);
        fft3(&mut buf, n, direction);
        out.par_iter_mut().zip(buf.par_iter()).for_each(|(o, b)| o[c] = b * factor);
    }
    out
}

/// `f̂(ξ) = (2π)^{-3/2} h³ Σ_x f(x) e^{-i x·ξ}`.
pub fn forward_fourier(f: &SpinorField) -> Result<SpinorField> {
    f.require_space(Space::Position)?;
    let factor = f.grid.measure(Space::Position) / (2.0 * PI).powf(1.5);
    Ok(SpinorField { grid: f.grid, space: Space::Frequency, data: transform(f, Direction::Forward, factor) })
}

/// `f(x) = (2π)^{-3/2} (π/L)³ Σ_ξ f̂(ξ) e^{i x·ξ}`.
pub fn inverse_fourier(f: &SpinorField) -> Result<SpinorField> {
    f.require_space(Space::Frequency)?;
    let factor = f.grid.measure(Space::Frequency) / (2.0 * PI).powf(1.5);
    Ok(SpinorField { grid: f.grid, space: Space::Position, data: transform(f, Direction::Inverse, factor) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    WeightedL2,
    Sobolev,
    PlainL2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormReport {
    pub value: f64,
    pub weight_exponent: f64,
    pub kind: NormKind,
}

/// `‖⟨p⟩^s f‖₂` with `p = x` for position fields and `p = ξ` for frequency fields.
pub fn weighted_l2_norm(f: &SpinorField, s: f64) -> NormReport {
    let g = f.grid;
    let space = f.space;
    let sum: f64 = ordered_sum(f.data.len(), |i| {
        let b2 = 1.0 + norm3(&g.point(space, i)).powi(2);
        b2.powf(s) * f.data[i].iter().map(|z| z.norm_sqr()).sum::<f64>()
    });
    let kind = if s == 0.0 { NormKind::PlainL2 } else { NormKind::WeightedL2 };
    NormReport { value: (sum * g.measure(space)).sqrt(), weight_exponent: s, kind }
}

/// `‖⟨ξ⟩^s f̂‖₂`.
pub fn sobolev_norm(f: &SpinorField, s: f64) -> Result<NormReport> {
    let fh = forward_fourier(f)?;
    let r = weighted_l2_norm(&fh, s);
    Ok(NormReport { kind: NormKind::Sobolev, ..r })
}

/// `Σ_j ∫ f̂_j conj(ĝ_j) dξ`, evaluated on the frequency side.
pub fn pairing(f: &SpinorField, g: &SpinorField) -> Result<Complex64> {
    f.require_space(Space::Position)?;
    g.require_space(Space::Position)?;
    if !f.grid.same_as(&g.grid) {
        return Err(LabError::GridMismatch);
    }
    forward_fourier(f)?.inner(&forward_fourier(g)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct Shell {
    pub inner: f64,
    pub outer: f64,
    pub mass: f64,
    pub points: usize,
    /// Mean of `ln⟨x⟩` over the lattice points in the shell.
    pub mean_log_bracket: f64,
}

/// L² mass of `f` in each shell `edges[k] <= |x| < edges[k+1]`.
pub fn shell_profile(f: &SpinorField, edges: &[f64]) -> Result<Vec<Shell>> {
    f.require_space(Space::Position)?;
    if edges.len() < 2 {
        return Err(LabError::Precondition("need at least two shell edges".into()));
    }
    if edges.windows(2).any(|w| !(w[0] < w[1])) || edges[0] < 0.0 {
        return Err(LabError::Precondition(format!("shell edges must be nonnegative and strictly increasing: {edges:?}")));
    }
    let reach = f.grid.half_width * 3f64.sqrt();
    if *edges.last().unwrap() > reach + f.grid.spacing() {
        return Err(LabError::Precondition(format!("outer shell edge {} exceeds the box", edges.last().unwrap())));
    }
    let k = edges.len() - 1;
    let g = f.grid;
    let (mut mass, mut count, mut logs) = (vec![0.0; k], vec![0usize; k], vec![0.0; k]);
    for (i, v) in f.data.iter().enumerate() {
        let x = g.position(i);
        let r = norm3(&x);
        if r >= edges[0] && r < edges[k] {
            let s = edges.partition_point(|&e| e <= r) - 1;
            mass[s] += v.iter().map(|z| z.norm_sqr()).sum::<f64>();
            count[s] += 1;
            logs[s] += bracket(&x).ln();
        }
    }
    let dv = g.measure(Space::Position);
    let mut shells = Vec::with_capacity(k);
    for s in 0..k {
        if count[s] == 0 {
            return Err(LabError::Precondition(format!(
                "shell [{}, {}) contains no lattice points",
                edges[s],
                edges[s + 1]
            )));
        }
        shells.push(Shell {
            inner: edges[s],
            outer: edges[s + 1],
            mass: mass[s] * dv,
            points: count[s],
            mean_log_bracket: logs[s] / count[s] as f64,
        });
    }
    Ok(shells)
}

/// Seeded random field whose Fourier modes are confined to `|m_j| <= max_mode`
/// on every axis. With `mean_zero` the `ξ = 0` mode is empty.
pub fn random_band_limited(grid: &GridSpec, seed: u64, max_mode: usize, mean_zero: bool) -> Result<SpinorField> {
    let n = grid.points;
    if max_mode >= n / 2 {
        return Err(LabError::InvalidGrid(format!("band limit {max_mode} must be below N/2 = {}", n / 2)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hat = SpinorField::zeros(*grid, Space::Frequency);
    let m = max_mode as i64;
    for a in -m..=m {
        for b in -m..=m {
            for c in -m..=m {
                if mean_zero && a == 0 && b == 0 && c == 0 {
                    continue;
                }
                let idx = grid.index(grid.wrap(a), grid.wrap(b), grid.wrap(c));
                for z in hat.data[idx].iter_mut() {
                    *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
        }
    }
    inverse_fourier(&hat)
}

/// Seeded field with independent uniform entries at every lattice point.
pub fn random_field(grid: &GridSpec, seed: u64) -> SpinorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..grid.len())
        .map(|_| [(); 4].map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    SpinorField { grid: *grid, space: Space::Position, data }
}

/// Raw contents of a DZL1 file, values point-major in storage order.
#[derive(Debug, Clone)]
pub struct Dzl1Data {
    pub grid: GridSpec,
    pub space: Space,
    pub components: usize,
    pub values: Vec<Complex64>,
}

/// Natural lattice order position (`m` ascending from `-N/2`) of storage index `i`.
fn natural_of(grid: &GridSpec, i: usize) -> usize {
    (grid.lattice(i) + grid.points as i64 / 2) as usize
}

/// Writes a header line `DZL1 <L> <N> <space> <components>` followed by
/// little-endian `(re, im)` f64 pairs. Points run in ascending lattice order,
/// x slowest, components fastest.
pub fn write_dzl1<W: Write>(mut w: W, grid: &GridSpec, space: Space, components: usize, values: &[Complex64]) -> Result<()> {
    if values.len() != grid.len() * components {
        return Err(LabError::Format(format!(
            "value count {} does not match {} points x {} components",
            values.len(),
            grid.len(),
            components
        )));
    }
    writeln!(w, "DZL1 {} {} {} {}", grid.half_width, grid.points, space, components)?;
    let n = grid.points;
    let mut order = vec![0usize; grid.len()];
    for (i, slot) in order.iter_mut().enumerate() {
        let [x, y, z] = grid.coords(i);
        let nat = (natural_of(grid, x) * n + natural_of(grid, y)) * n + natural_of(grid, z);
        *slot = nat;
    }
    let mut inv = vec![0usize; grid.len()];
    for (i, &nat) in order.iter().enumerate() {
        inv[nat] = i;
    }
    let mut bytes = Vec::with_capacity(values.len() * 16);
    for &i in &inv {
        for z in &values[i * components..(i + 1) * components] {
            bytes.extend_from_slice(&z.re.to_le_bytes());
            bytes.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read_dzl1<R: BufRead>(mut r: R) -> Result<Dzl1Data> {
    let mut header = Vec::new();
    r.read_until(b'\n', &mut header)?;
    let header = String::from_utf8(header).map_err(|_| LabError::Format("header is not UTF-8".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "DZL1" {
        return Err(LabError::Format(format!("bad header `{}`", header.trim_end())));
    }
    let half_width: f64 = parts[1].parse().map_err(|_| LabError::Format(format!("bad half-width `{}`", parts[1])))?;
    let points: usize = parts[2].parse().map_err(|_| LabError::Format(format!("bad point count `{}`", parts[2])))?;
    let space: Space = parts[3].parse().map_err(|_| LabError::Format(format!("bad space tag `{}`", parts[3])))?;
    let components: usize = parts[4].parse().map_err(|_| LabError::Format(format!("bad component count `{}`", parts[4])))?;
    let grid = make_grid(half_width, points).map_err(|e| LabError::Format(e.to_string()))?;
    if components == 0 {
        return Err(LabError::Format("component count must be positive".into()));
    }
    let expected = grid.len() * components * 16;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != expected {
        return Err(LabError::Format(format!("payload is {} bytes, expected {expected}", payload.len())));
    }
    let n = grid.points;
    let mut values = vec![CZERO; grid.len() * components];
    for i in 0..grid.len() {
        let [x, y, z] = grid.coords(i);
        let nat = (natural_of(&grid, x) * n + natural_of(&grid, y)) * n + natural_of(&grid, z);
        for c in 0..components {
            let off = (nat * components + c) * 16;
            let re = f64::from_le_bytes(payload[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(payload[off + 8..off + 16].try_into().unwrap());
            if !(re.is_finite() && im.is_finite()) {
                return Err(LabError::Format("payload contains non-finite values".into()));
            }
            values[i * components + c] = Complex64::new(re, im);
        }
    }
    Ok(Dzl1Data { grid, space, components, values })
}

/// Common radial profiles used by experiments and tests.
pub mod profiles {
    use super::*;

    pub fn e(j: usize) -> Spinor {
        let mut s = [CZERO; 4];
        s[j] = Complex64::new(1.0, 0.0);
        s
    }

    /// `⟨x⟩^{-σ} e_j`.
    pub fn bracket_power(sigma: f64, j: usize) -> impl Fn([f64; 3]) -> Spinor + Sync {
        move |x| e(j).map(|z| z * bracket(&x).powf(-sigma))
    }

    /// `e^{-|x|²/(2w²)} e_j`.
    pub fn gaussian(width: f64, j: usize) -> impl Fn([f64; 3]) -> Spinor + Sync {
        move |x| e(j).map(|z| z * (-norm3(&x).powi(2) / (2.0 * width * width)).exp())
    }

    /// Difference of two Gaussians with widths `w` and `w√2`, scaled so the
    /// integral vanishes. Smooth, rapidly decaying and mean-zero.
    pub fn mean_zero_bump(width: f64, j: usize) -> impl Fn([f64; 3]) -> Spinor + Sync {
        move |x| {
            let r2 = norm3(&x).powi(2);
            let w2 = width * width;
            let v = (-r2 / (2.0 * w2)).exp() - 2f64.powf(-1.5) * (-r2 / (4.0 * w2)).exp();
            e(j).map(|z| z * v)
        }
    }

    /// Smooth bump supported in `r0 < |x| < r1`.
    pub fn annulus_bump(r0: f64, r1: f64) -> impl Fn([f64; 3]) -> f64 + Sync {
        move |x| {
            let r = norm3(&x);
            if r <= r0 || r >= r1 {
                return 0.0;
            }
            let t = (2.0 * r - r0 - r1) / (r1 - r0);
            (-1.0 / (1.0 - t * t)).exp() * std::f64::consts::E
        }
    }
}

#[cfg(test)]
mod tests {
    use super::profiles::*;
    use super::*;

    #[test]
    fn make_grid_examples() {
        let g = make_grid(8.0, 16).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.len(), 4096);
        assert_eq!(g.freq_step(), PI / 8.0);
        assert!(make_grid(8.0, 15).is_err());
        assert!(make_grid(0.0, 16).is_err());
        assert!(make_grid(-1.0, 16).is_err());
        assert!(make_grid(1.0, 2).is_err());
    }

    #[test]
    fn lattice_contains_origin_and_is_symmetric_range() {
        let g = make_grid(2.0, 8).unwrap();
        assert_eq!(g.position(0), [0.0, 0.0, 0.0]);
        let ms: Vec<i64> = (0..8).map(|i| g.lattice(i)).collect();
        assert_eq!(ms, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        for m in -4..4 {
            assert_eq!(g.lattice(g.wrap(m)), m);
        }
    }

    #[test]
    fn sample_examples() {
        let g = make_grid(4.0, 8).unwrap();
        let c = sample(|_| e(0), &g).unwrap();
        assert!(c.data.iter().all(|s| *s == e(0)));
        let gauss = sample(gaussian(1.0 / 2f64.sqrt(), 0), &g).unwrap();
        let (imax, _) = gauss
            .data
            .iter()
            .enumerate()
            .max_by(|a, b| a.1[0].re.partial_cmp(&b.1[0].re).unwrap())
            .unwrap();
        assert_eq!(g.position(imax), [0.0; 3]);
        let err = sample(|x| e(0).map(|z| z / norm3(&x)), &g);
        assert!(matches!(err, Err(LabError::NonFinite(_))));
    }

    #[test]
    fn gaussian_transform_matches_analytic() {
        // e^{-|x|²/2} is its own transform under the unitary convention
        let g = make_grid(12.0, 64).unwrap();
        let f = sample(gaussian(1.0, 0), &g).unwrap();
        let fh = forward_fourier(&f).unwrap();
        let mut err = 0.0f64;
        let mut peak = 0.0f64;
        for (i, v) in fh.data.iter().enumerate() {
            let k = g.frequency(i);
            let exact = (-norm3(&k).powi(2) / 2.0).exp();
            err = err.max((v[0] - exact).norm());
            peak = peak.max(exact);
            assert!(v[1].norm() == 0.0);
        }
        assert!(err / peak <= 1e-6, "{err}");
    }

    #[test]
    fn round_trip_and_parseval() {
        let g = make_grid(3.0, 12).unwrap();
        let f = random_field(&g, 11);
        let fh = forward_fourier(&f).unwrap();
        assert_eq!(fh.space, Space::Frequency);
        let back = inverse_fourier(&fh).unwrap();
        assert!(back.sub(&f).unwrap().norm() <= 1e-12 * f.norm());
        assert!((fh.norm() - f.norm()).abs() <= 1e-12 * f.norm());
        assert!(matches!(inverse_fourier(&f), Err(LabError::SpaceMismatch { .. })));
        assert!(forward_fourier(&fh).is_err());
    }

    #[test]
    fn weighted_norm_at_zero_weight_is_l2() {
        let g = make_grid(3.0, 8).unwrap();
        let f = random_field(&g, 5);
        let r = weighted_l2_norm(&f, 0.0);
        assert_eq!(r.kind, NormKind::PlainL2);
        assert!((r.value - f.norm()).abs() <= 1e-13 * f.norm());
        let s = sobolev_norm(&f, 0.0).unwrap();
        assert!((s.value - r.value).abs() <= 1e-12 * r.value);
    }

    #[test]
    fn log_shell_mass_of_critical_weight() {
        // ⟨x⟩^{2s}|⟨x⟩^{-2}|² with s = 1/2 is ⟨x⟩^{-3}; over [R, 2R] its integral
        // is 4π(ln 2 + O(R^{-2})) ~ 8.71.
        let g = make_grid(32.0, 64).unwrap();
        let f = sample(bracket_power(2.0, 0), &g).unwrap().weighted(0.5);
        let shells = shell_profile(&f, &[15.0, 30.0]).unwrap();
        let oracle = 4.0 * PI * 2f64.ln();
        assert!((shells[0].mass - oracle).abs() / oracle < 0.05, "{}", shells[0].mass);
    }

    fn radial_oracle(power: f64, r: f64) -> f64 {
        // 4π ∫_0^r t² ⟨t⟩^{-power} dt by composite Simpson
        let n = 20_000;
        let dt = r / n as f64;
        let f = |t: f64| t * t * (1.0 + t * t).powf(-power / 2.0);
        let mut acc = f(0.0) + f(r);
        for i in 1..n {
            acc += f(i as f64 * dt) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        4.0 * PI * acc * dt / 3.0
    }

    #[test]
    fn weighted_ball_sums_below_critical_weight_settle() {
        // |⟨x⟩^{0.4}⟨x⟩^{-2}|² = ⟨x⟩^{-3.2}, integrable: ball sums follow the
        // radial oracle and their dyadic increments shrink geometrically
        let g = make_grid(32.0, 64).unwrap();
        let f = sample(bracket_power(2.0, 0), &g).unwrap().weighted(0.4);
        let radii = [0.0, 7.5, 15.0, 30.0];
        let shells = shell_profile(&f, &radii).unwrap();
        let mut partial = 0.0;
        let mut increments = vec![];
        for (k, s) in shells.iter().enumerate() {
            partial += s.mass;
            let oracle = radial_oracle(3.2, radii[k + 1]);
            assert!((partial - oracle).abs() / oracle < 0.02, "R={} grid {partial} oracle {oracle}", radii[k + 1]);
            increments.push(s.mass);
        }
        assert!(increments[2] < increments[1]);
        let total = radial_oracle(3.2, 3000.0);
        assert!(total.is_finite() && total < 4.0 * PI * 4.8);
    }

    #[test]
    fn sobolev_of_gaussian() {
        // f̂ ∝ e^{-|ξ|²/2}: the ratio squared is ∫⟨ξ⟩²e^{-|ξ|²}/∫e^{-|ξ|²} = 1 + 3/2
        let g = make_grid(12.0, 48).unwrap();
        let f = sample(gaussian(1.0, 2), &g).unwrap();
        let ratio = sobolev_norm(&f, 1.0).unwrap().value / f.norm();
        assert!((ratio - 2.5f64.sqrt()).abs() < 1e-8, "{ratio}");
    }

    #[test]
    fn sobolev_of_band_limited_field() {
        let g = make_grid(8.0, 16).unwrap();
        let f = random_band_limited(&g, 3, 2, false).unwrap();
        // |ξ| ≤ 2√3 π/8 < 1.4, ⟨ξ⟩ < 1.72
        let max_xi = 2.0 * 3f64.sqrt() * PI / 8.0;
        let s = sobolev_norm(&f, 1.0).unwrap().value;
        assert!(s <= (1.0 + max_xi * max_xi).sqrt() * f.norm() * (1.0 + 1e-12));
        // band on |ξ| ≤ 1 only: mode 1 has |ξ| ≤ √3 π/8 < 1
        let f1 = random_band_limited(&g, 4, 1, false).unwrap();
        assert!(sobolev_norm(&f1, 1.0).unwrap().value <= 2f64.sqrt() * f1.norm());
    }

    #[test]
    fn pairing_examples() {
        let g = make_grid(3.0, 8).unwrap();
        let f = random_field(&g, 1);
        let h = random_field(&g, 2);
        let ff = pairing(&f, &f).unwrap();
        assert!((ff.re - f.norm().powi(2)).abs() <= 1e-12 * ff.re && ff.im.abs() <= 1e-12 * ff.re);
        let fh = pairing(&f, &h).unwrap();
        let hf = pairing(&h, &f).unwrap();
        assert!((fh - hf.conj()).norm() <= 1e-12 * f.norm() * h.norm());
        let a = sample(|_| e(0), &g).unwrap();
        let b = sample(|_| e(1), &g).unwrap();
        assert_eq!(pairing(&a, &b).unwrap(), CZERO);
        let other = random_field(&make_grid(3.0, 10).unwrap(), 1);
        assert!(matches!(pairing(&f, &other), Err(LabError::GridMismatch)));
    }

    #[test]
    fn shell_profile_examples() {
        let g = make_grid(8.0, 64).unwrap();
        let ones = sample(|_| e(0), &g).unwrap();
        // equal-volume shells: r^3 spaced evenly
        let edges: Vec<f64> = (1..=4).map(|k| 7.3 * (k as f64 / 4.0).cbrt()).collect();
        let shells = shell_profile(&ones, &edges).unwrap();
        let m0 = shells[0].mass;
        for s in &shells {
            assert!((s.mass - m0).abs() / m0 < 0.05, "{:?}", shells);
        }
        let inner = sample(|x| if norm3(&x) < 1.0 { e(0) } else { [CZERO; 4] }, &g).unwrap();
        assert_eq!(shell_profile(&inner, &[2.0, 3.0]).unwrap()[0].mass, 0.0);
        let total: f64 = shell_profile(&ones, &[0.0, 2.0, 5.0]).unwrap().iter().map(|s| s.mass).sum();
        assert!(total <= ones.norm().powi(2));
        assert!(shell_profile(&ones, &[0.1, 0.2]).is_err(), "empty shell must be flagged");
        assert!(shell_profile(&ones, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn dyadic_shells_of_inverse_square_profile() {
        // ∫_{R}^{2R} 4π r² ⟨r⟩^{-4} dr ≈ 2π/R halves per dyadic step
        let g = make_grid(32.0, 64).unwrap();
        let f = sample(bracket_power(2.0, 0), &g).unwrap();
        let shells = shell_profile(&f, &[4.0, 8.0, 16.0, 32.0]).unwrap();
        for w in shells.windows(2) {
            let ratio = w[1].mass / w[0].mass;
            assert!((ratio - 0.5).abs() < 0.08, "{ratio}");
        }
    }

    #[test]
    fn dzl1_round_trip_and_rejection() {
        let g = make_grid(2.5, 6).unwrap();
        let f = random_field(&g, 9);
        let mut buf = Vec::new();
        f.write_dzl1(&mut buf).unwrap();
        assert!(buf.starts_with(b"DZL1 2.5 6 position 4\n"));
        let back = SpinorField::read_dzl1(&buf[..]).unwrap();
        assert_eq!(back, f);
        // first payload record is the corner point m = (-3,-3,-3)
        let header_len = buf.iter().position(|&b| b == b'\n').unwrap() + 1;
        let re = f64::from_le_bytes(buf[header_len..header_len + 8].try_into().unwrap());
        assert_eq!(re, f.data[g.index(3, 3, 3)][0].re);
        let truncated = &buf[..buf.len() - 8];
        assert!(matches!(SpinorField::read_dzl1(truncated), Err(LabError::Format(_))));
        assert!(SpinorField::read_dzl1(&b"DZL2 1 4 position 4\n"[..]).is_err());
    }

    #[test]
    fn annulus_bump_support() {
        let b = annulus_bump(2.0, 4.0);
        assert_eq!(b([0.0; 3]), 0.0);
        assert_eq!(b([2.0, 0.0, 0.0]), 0.0);
        assert!((b([3.0, 0.0, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(b([4.5, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn mean_zero_bump_has_small_mean_on_a_finite_box() {
        let g = make_grid(12.0, 24).unwrap();
        let f = sample(mean_zero_bump(2.5, 0), &g).unwrap();
        let fh = forward_fourier(&f).unwrap();
        let ratio = fh.data[0][0].norm() / fh.norm();
        assert!(ratio < 1e-2, "{ratio}");
    }
}
