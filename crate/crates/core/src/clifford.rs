//! Pauli and Dirac matrices in the chiral-block representation.
//!
//! `alpha(j)` carries `pauli(j)` on both off-diagonal 2x2 blocks. All entries
//! are 0, ±1 or ±i, so products and anticommutators are exact in `f64`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub type Spinor = [Complex64; 4];
pub type Weyl = [Complex64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2(pub [[Complex64; 2]; 2]);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix4(pub [[Complex64; 4]; 4]);

macro_rules! square_matrix {
    ($name:ident, $n:expr, $vec:ty) => {
        impl $name {
            pub fn zero() -> Self {
                $name([[ZERO; $n]; $n])
            }

            pub fn identity() -> Self {
                let mut m = Self::zero();
                for i in 0..$n {
                    m.0[i][i] = ONE;
                }
                m
            }

            pub fn adjoint(&self) -> Self {
                let mut m = Self::zero();
                for i in 0..$n {
                    for j in 0..$n {
                        m.0[i][j] = self.0[j][i].conj();
                    }
                }
                m
            }

            pub fn trace(&self) -> Complex64 {
                (0..$n).map(|i| self.0[i][i]).sum()
            }

            pub fn scale(&self, s: f64) -> Self {
                let mut m = *self;
                m.0.iter_mut().flatten().for_each(|z| *z *= s);
                m
            }

            pub fn scale_complex(&self, s: Complex64) -> Self {
                let mut m = *self;
                m.0.iter_mut().flatten().for_each(|z| *z *= s);
                m
            }

            /// Largest entry modulus.
            pub fn max_abs(&self) -> f64 {
                self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
            }

            /// Largest entrywise deviation from the adjoint.
            pub fn hermiticity_defect(&self) -> f64 {
                (*self - self.adjoint()).max_abs()
            }

            pub fn mul_vec(&self, v: &$vec) -> $vec {
                let mut out = [ZERO; $n];
                for i in 0..$n {
                    let mut acc = ZERO;
                    for j in 0..$n {
                        acc += self.0[i][j] * v[j];
                    }
                    out[i] = acc;
                }
                out
            }
        }

        impl Add for $name {
            type Output = $name;
            fn add(self, rhs: $name) -> $name {
                let mut m = self;
                for i in 0..$n {
                    for j in 0..$n {
                        m.0[i][j] += rhs.0[i][j];
                    }
                }
                m
            }
        }

        impl Sub for $name {
            type Output = $name;
            fn sub(self, rhs: $name) -> $name {
                let mut m = self;
                for i in 0..$n {
                    for j in 0..$n {
                        m.0[i][j] -= rhs.0[i][j];
                    }
                }
                m
            }
        }

        impl Neg for $name {
            type Output = $name;
            fn neg(self) -> $name {
                self.scale(-1.0)
            }
        }

        impl Mul for $name {
            type Output = $name;
            fn mul(self, rhs: $name) -> $name {
                let mut m = Self::zero();
                for i in 0..$n {
                    for j in 0..$n {
                        let mut acc = ZERO;
                        for k in 0..$n {
                            acc += self.0[i][k] * rhs.0[k][j];
                        }
                        m.0[i][j] = acc;
                    }
                }
                m
            }
        }
    };
}

square_matrix!(Matrix2, 2, Weyl);
square_matrix!(Matrix4, 4, Spinor);

impl Matrix4 {
    /// Block matrix `[[upper_left, upper_right], [lower_left, lower_right]]`.
    pub fn from_blocks(ul: &Matrix2, ur: &Matrix2, ll: &Matrix2, lr: &Matrix2) -> Self {
        let mut m = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] = ul.0[i][j];
                m.0[i][j + 2] = ur.0[i][j];
                m.0[i + 2][j] = ll.0[i][j];
                m.0[i + 2][j + 2] = lr.0[i][j];
            }
        }
        m
    }

    pub fn block(&self, row: usize, col: usize) -> Matrix2 {
        let mut b = Matrix2::zero();
        for i in 0..2 {
            for j in 0..2 {
                b.0[i][j] = self.0[2 * row + i][2 * col + j];
            }
        }
        b
    }
}

pub fn pauli(j: usize) -> Result<Matrix2> {
    let m = match j {
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, -I], [I, ZERO]],
        3 => [[ONE, ZERO], [ZERO, -ONE]],
        _ => return Err(LabError::IndexOutOfRange(j)),
    };
    Ok(Matrix2(m))
}

pub fn alpha(j: usize) -> Result<Matrix4> {
    let s = pauli(j)?;
    let z = Matrix2::zero();
    Ok(Matrix4::from_blocks(&z, &s, &s, &z))
}

/// The three Dirac matrices, indexed from zero.
pub fn alphas() -> [Matrix4; 3] {
    [1, 2, 3].map(|j| alpha(j).expect("index in range"))
}

fn check_finite(v: &[f64; 3]) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(LabError::NonFinite(format!("vector {v:?}")))
    }
}

/// `σ·v` for a real 3-vector, built entrywise.
pub fn sigma_dot(v: &[f64; 3]) -> Matrix2 {
    let [x, y, z] = *v;
    Matrix2([
        [Complex64::new(z, 0.0), Complex64::new(x, -y)],
        [Complex64::new(x, y), Complex64::new(-z, 0.0)],
    ])
}

pub fn alpha_dot(v: &[f64; 3]) -> Result<Matrix4> {
    check_finite(v)?;
    let a = alphas();
    Ok(a[0].scale(v[0]) + a[1].scale(v[1]) + a[2].scale(v[2]))
}

/// `(α·v)^{-1} = α·v / |v|²`.
pub fn invert_alpha_dot(v: &[f64; 3]) -> Result<Matrix4> {
    check_finite(v)?;
    let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    if n2 == 0.0 {
        return Err(LabError::Singular("alpha_dot of the zero vector has no inverse"));
    }
    Ok(alpha_dot(v)?.scale(1.0 / n2))
}

/// Applies `α·v` to a spinor through the block structure:
/// `(α·v)(u, l) = (σ·v l, σ·v u)`.
#[inline]
pub fn apply_alpha_dot(v: &[f64; 3], s: &Spinor) -> Spinor {
    let [upper_a, upper_b] = apply_sigma_dot(v, &[s[2], s[3]]);
    let [lower_a, lower_b] = apply_sigma_dot(v, &[s[0], s[1]]);
    [upper_a, upper_b, lower_a, lower_b]
}

#[inline]
pub fn apply_sigma_dot(v: &[f64; 3], w: &Weyl) -> Weyl {
    let [x, y, z] = *v;
    let m01 = Complex64::new(x, -y);
    let m10 = Complex64::new(x, y);
    [w[0] * z + m01 * w[1], m10 * w[0] - w[1] * z]
}

#[derive(Debug, Clone, Serialize)]
pub struct AnticommutatorEntry {
    pub j: usize,
    pub k: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CliffordReport {
    pub pairs: Vec<AnticommutatorEntry>,
    pub max_deviation: f64,
}

impl CliffordReport {
    pub fn passed(&self) -> bool {
        self.max_deviation == 0.0
    }
}

pub fn check_clifford() -> CliffordReport {
    check_clifford_with(&alphas())
}

/// Max-norm of `α_j α_k + α_k α_j − 2δ_jk I` over all nine ordered pairs of
/// the supplied triple.
pub fn check_clifford_with(a: &[Matrix4; 3]) -> CliffordReport {
    let mut pairs = Vec::with_capacity(9);
    for j in 0..3 {
        for k in 0..3 {
            let mut target = Matrix4::zero();
            if j == k {
                target = Matrix4::identity().scale(2.0);
            }
            let deviation = (a[j] * a[k] + a[k] * a[j] - target).max_abs();
            pairs.push(AnticommutatorEntry { j: j + 1, k: k + 1, deviation });
        }
    }
    let max_deviation = pairs.iter().map(|p| p.deviation).fold(0.0, f64::max);
    CliffordReport { pairs, max_deviation }
}
