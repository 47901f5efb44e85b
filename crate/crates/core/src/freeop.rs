//! The free operator `H₀ = α·D` and its inverse `A`, as Fourier multipliers
//! and as a direct convolution with the kernel `(i/4π) α·(x−y)/|x−y|³`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::clifford::{alpha_dot, apply_alpha_dot, invert_alpha_dot, Matrix4, Spinor};
use crate::error::{LabError, Result};
use crate::field::{forward_fourier, inverse_fourier, norm3, GridSpec, Space, SpinorField};
use crate::fourier::{fft3, Direction};

const CZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default cap on points per axis for the direct `O(N⁶)` sums.
pub const DEFAULT_QUADRATURE_LIMIT: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Symbol {
    /// `α·ξ`
    H0,
    /// `α·ξ/|ξ|²`, zero at `ξ = 0`
    A,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroModePolicy {
    Annihilate,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MultiplierOp {
    pub symbol: Symbol,
    pub zero_mode_policy: ZeroModePolicy,
}

impl MultiplierOp {
    pub const H0: MultiplierOp = MultiplierOp { symbol: Symbol::H0, zero_mode_policy: ZeroModePolicy::Annihilate };
    pub const A: MultiplierOp = MultiplierOp { symbol: Symbol::A, zero_mode_policy: ZeroModePolicy::Annihilate };

    pub fn matrix(&self, xi: &[f64; 3]) -> Matrix4 {
        match self.symbol {
            Symbol::H0 => alpha_dot(xi).expect("lattice frequencies are finite"),
            Symbol::A => invert_alpha_dot(xi).unwrap_or_else(|_| Matrix4::zero()),
        }
    }

    /// Pointwise action of the symbol on one spinor.
    #[inline]
    pub fn act(&self, xi: &[f64; 3], s: &Spinor) -> Spinor {
        match self.symbol {
            Symbol::H0 => apply_alpha_dot(xi, s),
            Symbol::A => {
                let n2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
                if n2 == 0.0 {
                    [CZERO; 4]
                } else {
                    apply_alpha_dot(xi, s).map(|z| z / n2)
                }
            }
        }
    }

    /// Multiplies a frequency-space field by the symbol.
    pub fn apply_frequency(&self, fh: &SpinorField) -> Result<SpinorField> {
        fh.require_space(Space::Frequency)?;
        let g = fh.grid;
        Ok(fh.map(|i, s| self.act(&g.frequency(i), s)))
    }

    pub fn apply(&self, f: &SpinorField) -> Result<SpinorField> {
        inverse_fourier(&self.apply_frequency(&forward_fourier(f)?)?)
    }
}

/// Largest `‖S_{H₀}(ξ) S_A(ξ) − I‖_max` over the nonzero lattice frequencies.
pub fn symbol_product_deviation(grid: &GridSpec) -> f64 {
    (1..grid.len())
        .into_par_iter()
        .map(|i| {
            let xi = grid.frequency(i);
            let p = MultiplierOp::H0.matrix(&xi) * MultiplierOp::A.matrix(&xi);
            (p - Matrix4::identity()).max_abs()
        })
        .reduce(|| 0.0, f64::max)
}

pub fn apply_h0(f: &SpinorField) -> Result<SpinorField> {
    MultiplierOp::H0.apply(f)
}

#[derive(Debug, Clone)]
pub struct SpectralOutput {
    pub field: SpinorField,
    /// L² norm of the constant mode that the zero-mode policy discarded.
    pub zero_mode_norm: f64,
}

pub fn apply_a_spectral(f: &SpinorField) -> Result<SpectralOutput> {
    let fh = forward_fourier(f)?;
    let zero = fh.data[0].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let zero_mode_norm = zero * fh.grid.measure(Space::Frequency).sqrt();
    let field = inverse_fourier(&MultiplierOp::A.apply_frequency(&fh)?)?;
    Ok(SpectralOutput { field, zero_mode_norm })
}

fn check_cost(grid: &GridSpec, limit: usize) -> Result<()> {
    if grid.points > limit {
        return Err(LabError::CostGuard { points: grid.points, limit });
    }
    Ok(())
}

/// `h³ c(d)` with `c(d) = d h / (4π |d h|³)` for every lattice difference
/// `d ∈ [-(N-1), N-1]³`, zero at `d = 0`. Indexed by `d + (N-1)`.
fn kernel_table(grid: &GridSpec) -> Vec<[f64; 3]> {
    let n = grid.points as i64;
    let w = (2 * n - 1) as usize;
    let h = grid.spacing();
    let h3 = h.powi(3);
    let mut table = vec![[0.0; 3]; w * w * w];
    table.par_iter_mut().enumerate().for_each(|(t, c)| {
        let d = [(t / (w * w)) as i64, ((t / w) % w) as i64, (t % w) as i64].map(|v| v - (n - 1));
        if d != [0, 0, 0] {
            let r = d.map(|v| v as f64 * h);
            let r3 = norm3(&r).powi(3);
            *c = r.map(|v| h3 * v / (4.0 * PI * r3));
        }
    });
    table
}

/// Direct sum `(Af)(x) = h³ Σ_{y≠x} (i/4π) α·(x−y)/|x−y|³ f(y)` over the
/// primary box, without periodic images. `limit` caps N (None: default).
pub fn apply_a_quadrature(f: &SpinorField, limit: Option<usize>) -> Result<SpinorField> {
    f.require_space(Space::Position)?;
    let g = f.grid;
    check_cost(&g, limit.unwrap_or(DEFAULT_QUADRATURE_LIMIT))?;
    let n = g.points;
    let w = 2 * n - 1;
    let table = kernel_table(&g);
    // lattice-ordered copy so that x − y is a plain index difference
    let mut ordered = vec![[CZERO; 4]; g.len()];
    let nat = |i: usize| (g.lattice(i) + n as i64 / 2) as usize;
    for (i, s) in f.data.iter().enumerate() {
        let [a, b, c] = g.coords(i);
        ordered[(nat(a) * n + nat(b)) * n + nat(c)] = *s;
    }
    let data: Vec<Spinor> = (0..g.len())
        .into_par_iter()
        .map(|out| {
            let [a, b, c] = g.coords(out);
            let (xa, xb, xc) = (nat(a), nat(b), nat(c));
            let mut acc = [[CZERO; 4]; 3];
            for ya in 0..n {
                let ta = (xa + n - 1 - ya) * w * w;
                for yb in 0..n {
                    let tb = ta + (xb + n - 1 - yb) * w;
                    let row = &ordered[(ya * n + yb) * n..(ya * n + yb + 1) * n];
                    for (yc, s) in row.iter().enumerate() {
                        let k = &table[tb + xc + n - 1 - yc];
                        for j in 0..3 {
                            for q in 0..4 {
                                acc[j][q] += s[q] * k[j];
                            }
                        }
                    }
                }
            }
            combine(&acc)
        })
        .collect();
    Ok(SpinorField { grid: g, space: Space::Position, data })
}

/// `i Σ_j α_j s_j` for three spinors `s_j`.
#[inline]
fn combine(s: &[Spinor; 3]) -> Spinor {
    let mut out = [CZERO; 4];
    for (j, e) in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]].iter().enumerate() {
        let t = apply_alpha_dot(e, &s[j]);
        for q in 0..4 {
            out[q] += I * t[q];
        }
    }
    out
}

/// Same aperiodic sum as [`apply_a_quadrature`], evaluated as a linear
/// convolution on a zero-padded `2N` grid.
pub fn apply_a_quadrature_padded(f: &SpinorField) -> Result<SpinorField> {
    f.require_space(Space::Position)?;
    let g = f.grid;
    let n = g.points;
    let m = 2 * n;
    let len = m * m * m;
    let pad = |a: i64| a.rem_euclid(m as i64) as usize;
    let table = kernel_table(&g);
    let w = 2 * n - 1;
    let mut kernels = vec![vec![CZERO; len]; 3];
    for (t, c) in table.iter().enumerate() {
        let d = [(t / (w * w)) as i64, ((t / w) % w) as i64, (t % w) as i64].map(|v| v - (n as i64 - 1));
        let idx = (pad(d[0]) * m + pad(d[1])) * m + pad(d[2]);
        for j in 0..3 {
            kernels[j][idx] = Complex64::new(c[j], 0.0);
        }
    }
    kernels.par_iter_mut().for_each(|k| fft3(k, m, Direction::Forward));
    let mut comps = vec![vec![CZERO; len]; 4];
    for (i, s) in f.data.iter().enumerate() {
        let p = g.lattice_point(i);
        let idx = (pad(p[0]) * m + pad(p[1])) * m + pad(p[2]);
        for q in 0..4 {
            comps[q][idx] = s[q];
        }
    }
    comps.par_iter_mut().for_each(|c| fft3(c, m, Direction::Forward));
    let mut out = vec![vec![CZERO; len]; 4];
    for k in 0..len {
        let wv = [kernels[0][k], kernels[1][k], kernels[2][k]];
        let s = [comps[0][k], comps[1][k], comps[2][k], comps[3][k]];
        let r = complex_alpha_dot(&wv, &s);
        for q in 0..4 {
            out[q][k] = I * r[q] / len as f64;
        }
    }
    out.par_iter_mut().for_each(|c| fft3(c, m, Direction::Inverse));
    let data = (0..g.len())
        .map(|i| {
            let p = g.lattice_point(i);
            let idx = (pad(p[0]) * m + pad(p[1])) * m + pad(p[2]);
            [out[0][idx], out[1][idx], out[2][idx], out[3][idx]]
        })
        .collect();
    Ok(SpinorField { grid: g, space: Space::Position, data })
}

/// `(α·w) s` for a complex 3-vector `w`.
#[inline]
fn complex_alpha_dot(w: &[Complex64; 3], s: &Spinor) -> Spinor {
    let sig = |u: Complex64, v: Complex64| -> [Complex64; 2] {
        [w[2] * u + (w[0] - I * w[1]) * v, (w[0] + I * w[1]) * u - w[2] * v]
    };
    let up = sig(s[2], s[3]);
    let lo = sig(s[0], s[1]);
    [up[0], up[1], lo[0], lo[1]]
}

/// Removes the `ξ = 0` Fourier mode.
pub fn remove_mean(f: &SpinorField) -> Result<SpinorField> {
    let mut fh = forward_fourier(f)?;
    fh.data[0] = [CZERO; 4];
    inverse_fourier(&fh)
}

/// `‖A H₀ f − f⁰‖ / ‖f⁰‖`, `f⁰` being `f` without its mean.
pub fn verify_ah0_identity(f: &SpinorField) -> Result<f64> {
    let f0 = remove_mean(f)?;
    let n0 = f0.norm();
    if n0 <= 1e-12 * f.norm() || n0 == 0.0 {
        return Err(LabError::Degenerate("field has no non-constant Fourier content".into()));
    }
    let back = apply_a_spectral(&apply_h0(f)?)?.field;
    Ok(back.sub(&f0)?.norm() / n0)
}

/// `‖H₀ A f − f⁰‖ / ‖f⁰‖`.
pub fn verify_h0a_identity(f: &SpinorField) -> Result<f64> {
    let f0 = remove_mean(f)?;
    let n0 = f0.norm();
    if n0 <= 1e-12 * f.norm() || n0 == 0.0 {
        return Err(LabError::Degenerate("field has no non-constant Fourier content".into()));
    }
    let back = apply_h0(&apply_a_spectral(f)?.field)?;
    Ok(back.sub(&f0)?.norm() / n0)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairingCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    /// `|lhs| + |rhs| + ‖g‖‖φ‖`
    pub scale: f64,
}

impl PairingCheck {
    pub fn relative_gap(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            (self.lhs - self.rhs).norm() / self.scale
        }
    }

    pub fn agrees(&self, tol: f64) -> bool {
        self.relative_gap() <= tol
    }
}

/// Both sides of the duality identity for `A`. The test field `phi` is
/// frequency-tagged and must vanish on the 27 lattice points around `ξ = 0`;
/// the left side routes `g` through [`apply_a_spectral`] and a forward
/// transform, the right side multiplies `phi` pointwise by `α·ξ/|ξ|²`.
pub fn verify_pairing_identity(g: &SpinorField, phi: &SpinorField) -> Result<PairingCheck> {
    g.require_space(Space::Position)?;
    phi.require_space(Space::Frequency)?;
    if !g.grid.same_as(&phi.grid) {
        return Err(LabError::GridMismatch);
    }
    let grid = phi.grid;
    for a in -1..=1 {
        for b in -1..=1 {
            for c in -1..=1 {
                let idx = grid.index(grid.wrap(a), grid.wrap(b), grid.wrap(c));
                if phi.data[idx].iter().any(|z| *z != CZERO) {
                    return Err(LabError::Precondition(
                        "test field must vanish on a neighborhood of the origin".into(),
                    ));
                }
            }
        }
    }
    let lhs = forward_fourier(&apply_a_spectral(g)?.field)?.inner(phi)?;
    let weighted = phi.map(|i, s| {
        let xi = grid.frequency(i);
        let m = invert_alpha_dot(&xi).unwrap_or_else(|_| Matrix4::zero());
        m.mul_vec(s)
    });
    let rhs = forward_fourier(g)?.inner(&weighted)?;
    let scale = lhs.norm() + rhs.norm() + g.norm() * phi.norm();
    Ok(PairingCheck { lhs, rhs, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_grid, random_band_limited, random_field, sample};

    fn plane_wave(grid: &GridSpec, m: [i64; 3], v: Spinor) -> SpinorField {
        let k = grid.freq_step();
        sample(
            |x| {
                let ph = k * (m[0] as f64 * x[0] + m[1] as f64 * x[1] + m[2] as f64 * x[2]);
                v.map(|z| z * Complex64::from_polar(1.0, ph))
            },
            grid,
        )
        .unwrap()
    }

    fn v0() -> Spinor {
        [Complex64::new(1.0, 0.5), Complex64::new(-0.3, 0.0), Complex64::new(0.0, 2.0), Complex64::new(0.7, -0.1)]
    }

    #[test]
    fn h0_on_plane_wave() {
        let g = make_grid(4.0, 8).unwrap();
        let m = [1, -2, 3];
        let xi = m.map(|v| v as f64 * g.freq_step());
        let f = plane_wave(&g, m, v0());
        let out = apply_h0(&f).unwrap();
        let expect = plane_wave(&g, m, alpha_dot(&xi).unwrap().mul_vec(&v0()));
        assert!(out.sub(&expect).unwrap().norm() < 1e-12 * f.norm());
    }

    #[test]
    fn h0_kills_constants_and_squares_to_laplacian() {
        let g = make_grid(4.0, 8).unwrap();
        let c = sample(|_| v0(), &g).unwrap();
        assert!(apply_h0(&c).unwrap().norm() < 1e-13);
        let f = random_band_limited(&g, 8, 3, false).unwrap();
        let hh = apply_h0(&apply_h0(&f).unwrap()).unwrap();
        let fh = forward_fourier(&f).unwrap();
        let lap = inverse_fourier(&fh.map(|i, s| {
            let k = norm3(&g.frequency(i)).powi(2);
            s.map(|z| z * k)
        }))
        .unwrap();
        assert!(hh.sub(&lap).unwrap().norm() <= 1e-10 * lap.norm());
    }

    #[test]
    fn h0_is_symmetric() {
        let g = make_grid(3.0, 8).unwrap();
        let f = random_field(&g, 1);
        let h = random_field(&g, 2);
        let a = apply_h0(&f).unwrap().inner(&h).unwrap();
        let b = f.inner(&apply_h0(&h).unwrap()).unwrap();
        assert!((a - b).norm() <= 1e-10 * a.norm());
    }

    #[test]
    fn a_spectral_single_mode_and_constants() {
        let g = make_grid(4.0, 8).unwrap();
        let m = [2, 0, -1];
        let xi = m.map(|v| v as f64 * g.freq_step());
        let f = plane_wave(&g, m, v0());
        let out = apply_a_spectral(&f).unwrap();
        let expect = plane_wave(&g, m, invert_alpha_dot(&xi).unwrap().mul_vec(&v0()));
        assert!(out.field.sub(&expect).unwrap().norm() < 1e-12 * f.norm());
        assert!(out.zero_mode_norm < 1e-12 * f.norm());
        let c = sample(|_| v0(), &g).unwrap();
        let out = apply_a_spectral(&c).unwrap();
        assert!(out.field.norm() < 1e-12);
        assert!((out.zero_mode_norm - c.norm()).abs() < 1e-12 * c.norm());
    }

    #[test]
    fn symbol_products_are_identity() {
        let g = make_grid(5.0, 10).unwrap();
        assert!(symbol_product_deviation(&g) <= 1e-14);
    }

    #[test]
    fn a_and_h0_invert_each_other_on_mean_zero_fields() {
        let g = make_grid(6.0, 12).unwrap();
        for seed in 0..3 {
            let f = random_band_limited(&g, seed, 4, true).unwrap();
            assert!(verify_ah0_identity(&f).unwrap() <= 1e-10);
            assert!(verify_h0a_identity(&f).unwrap() <= 1e-10);
            let back = apply_h0(&apply_a_spectral(&f).unwrap().field).unwrap();
            assert!(back.sub(&f).unwrap().norm() <= 1e-10 * f.norm());
        }
        let c = sample(|_| v0(), &g).unwrap();
        assert!(matches!(verify_ah0_identity(&c), Err(LabError::Degenerate(_))));
    }

    #[test]
    fn quadrature_of_zero_and_cost_guard() {
        let g = make_grid(2.0, 6).unwrap();
        let z = SpinorField::zeros(g, Space::Position);
        assert_eq!(apply_a_quadrature(&z, None).unwrap().norm(), 0.0);
        let big = SpinorField::zeros(make_grid(2.0, 34).unwrap(), Space::Position);
        assert!(matches!(apply_a_quadrature(&big, None), Err(LabError::CostGuard { points: 34, limit: 32 })));
    }

    #[test]
    fn quadrature_kernel_is_odd_about_the_source() {
        let g = make_grid(4.0, 8).unwrap();
        let mut f = SpinorField::zeros(g, Space::Position);
        let src = [1i64, -1, 0];
        f.data[g.index(g.wrap(src[0]), g.wrap(src[1]), g.wrap(src[2]))] = v0();
        let out = apply_a_quadrature(&f, None).unwrap();
        let at = |d: [i64; 3]| out.data[g.index(g.wrap(src[0] + d[0]), g.wrap(src[1] + d[1]), g.wrap(src[2] + d[2]))];
        for d in [[1, 0, 0], [2, 1, -1], [0, -2, 3], [-2, 1, 1]] {
            let plus = at(d);
            let minus = at(d.map(|v| -v));
            for q in 0..4 {
                assert!((plus[q] + minus[q]).norm() < 1e-15, "{d:?}");
            }
            // value is (i/4π) α·r/|r|³ h³ v
            let r = d.map(|v| v as f64 * g.spacing());
            let expect = apply_alpha_dot(&r, &v0()).map(|z| z * I / (4.0 * PI * norm3(&r).powi(3)));
            for q in 0..4 {
                assert!((plus[q] - expect[q]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn padded_convolution_matches_direct_sum() {
        let g = make_grid(3.0, 8).unwrap();
        let f = random_field(&g, 21);
        let direct = apply_a_quadrature(&f, None).unwrap();
        let padded = apply_a_quadrature_padded(&f).unwrap();
        assert!(direct.sub(&padded).unwrap().norm() <= 1e-12 * direct.norm());
    }

    #[test]
    fn pairing_identity() {
        let g = make_grid(6.0, 12).unwrap();
        let phi_of = |seed| {
            let bump = crate::field::profiles::annulus_bump(1.5, 4.0);
            let r = random_field(&g, seed);
            let mut phi = SpinorField::zeros(g, Space::Frequency);
            for (i, s) in phi.data.iter_mut().enumerate() {
                let w = bump(g.frequency(i));
                *s = r.data[i].map(|z| z * w);
            }
            phi
        };
        let zero = SpinorField::zeros(g, Space::Position);
        let c = verify_pairing_identity(&zero, &phi_of(1)).unwrap();
        assert_eq!((c.lhs, c.rhs), (CZERO, CZERO));
        let gfield = random_field(&g, 2);
        let c = verify_pairing_identity(&gfield, &phi_of(3)).unwrap();
        assert!(c.lhs.norm() > 0.0);
        assert!(c.agrees(1e-8), "{}", c.relative_gap());
        let mut bad = phi_of(4);
        bad.data[0] = v0();
        assert!(matches!(verify_pairing_identity(&gfield, &bad), Err(LabError::Precondition(_))));
    }
}
