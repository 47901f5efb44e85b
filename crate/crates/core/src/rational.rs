//! Exact rationals over `i128`, always stored reduced with a positive
//! denominator.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{LabError, Result};

/// Parsed numerators and denominators are capped at this magnitude so that
/// a handful of products cannot overflow `i128`.
pub const PARSE_LIMIT: i128 = 1_000_000_000_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Rational {
    num: i128,
    den: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };
    pub const ONE: Rational = Rational { num: 1, den: 1 };

    pub fn new(num: i128, den: i128) -> Result<Rational> {
        if den == 0 {
            return Err(LabError::Parse("zero denominator".into()));
        }
        let g = gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Ok(Rational { num: s * num / g, den: s * den / g })
    }

    /// Panics on a zero denominator; for literals.
    pub fn frac(num: i128, den: i128) -> Rational {
        Rational::new(num, den).expect("nonzero denominator")
    }

    pub fn integer(n: i128) -> Rational {
        Rational { num: n, den: 1 }
    }

    pub fn numer(&self) -> i128 {
        self.num
    }

    pub fn denom(&self) -> i128 {
        self.den
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn floor(&self) -> i128 {
        self.num.div_euclid(self.den)
    }

    pub fn ceil(&self) -> i128 {
        -(-self.num).div_euclid(self.den)
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn abs(&self) -> Rational {
        Rational { num: self.num.abs(), den: self.den }
    }

    pub fn recip(&self) -> Result<Rational> {
        Rational::new(self.den, self.num)
    }

    pub fn checked_add(self, o: Rational) -> Option<Rational> {
        let g = gcd(self.den, o.den);
        let l = (self.den / g).checked_mul(o.den)?;
        let a = self.num.checked_mul(l / self.den)?;
        let b = o.num.checked_mul(l / o.den)?;
        Rational::new(a.checked_add(b)?, l).ok()
    }

    pub fn checked_mul(self, o: Rational) -> Option<Rational> {
        let g1 = gcd(self.num, o.den).max(1);
        let g2 = gcd(o.num, self.den).max(1);
        let n = (self.num / g1).checked_mul(o.num / g2)?;
        let d = (self.den / g2).checked_mul(o.den / g1)?;
        Rational::new(n, d).ok()
    }
}

impl Add for Rational {
    type Output = Rational;
    fn add(self, o: Rational) -> Rational {
        self.checked_add(o).expect("rational overflow in addition")
    }
}

impl Sub for Rational {
    type Output = Rational;
    fn sub(self, o: Rational) -> Rational {
        self + (-o)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational { num: -self.num, den: self.den }
    }
}

impl Mul for Rational {
    type Output = Rational;
    fn mul(self, o: Rational) -> Rational {
        self.checked_mul(o).expect("rational overflow in multiplication")
    }
}

impl Div for Rational {
    type Output = Rational;
    fn div(self, o: Rational) -> Rational {
        self * o.recip().expect("division by zero rational")
    }
}

impl Ord for Rational {
    fn cmp(&self, o: &Rational) -> Ordering {
        // denominators are positive, so cross multiplication keeps the order
        match (self.num.checked_mul(o.den), o.num.checked_mul(self.den)) {
            (Some(a), Some(b)) => a.cmp(&b),
            _ => (*self - *o).num.cmp(&0),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, o: &Rational) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Rational {
        Rational::integer(n as i128)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

fn parse_int(s: &str) -> Result<i128> {
    let v: i128 = s.parse().map_err(|_| LabError::Parse(format!("`{s}` is not an integer")))?;
    if v.abs() > PARSE_LIMIT {
        return Err(LabError::Parse(format!("`{s}` exceeds the supported magnitude")));
    }
    Ok(v)
}

/// Accepts `P/Q`, integers and finite decimals such as `-1.25`.
impl FromStr for Rational {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Rational> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            return Rational::new(parse_int(p.trim())?, parse_int(q.trim())?);
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 18 {
                return Err(LabError::Parse(format!("`{s}` is not a decimal number")));
            }
            let negative = int.starts_with('-');
            let whole = match int {
                "" | "-" | "+" => 0,
                _ => parse_int(int)?.abs(),
            };
            let scale = 10i128.pow(frac.len() as u32);
            let digits = parse_int(frac)?;
            let n = whole.checked_mul(scale).and_then(|w| w.checked_add(digits));
            let n = n.filter(|v| v.abs() <= PARSE_LIMIT * scale).ok_or_else(|| LabError::Parse(format!("`{s}` is too large")))?;
            return Rational::new(if negative { -n } else { n }, scale);
        }
        Ok(Rational::integer(parse_int(s)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::frac(n, d)
    }

    #[test]
    fn canonical_form() {
        assert_eq!(r(6, -4), r(-3, 2));
        assert_eq!(r(-6, -4).denom(), 2);
        assert_eq!(r(0, -5), Rational::ZERO);
        assert!(Rational::new(1, 0).is_err());
    }

    #[test]
    fn arithmetic_and_order() {
        assert_eq!(r(1, 2) + r(1, 3), r(5, 6));
        assert_eq!(r(1, 2) - r(3, 4), r(-1, 4));
        assert_eq!(r(2, 3) * r(9, 4), r(3, 2));
        assert_eq!(r(2, 3) / r(4, 9), r(3, 2));
        assert!(r(-3, 2) < r(-1, 2));
        assert!(r(7, 5) > r(4, 3));
        assert_eq!(r(7, 2).floor(), 3);
        assert_eq!(r(-7, 2).floor(), -4);
        assert_eq!(r(7, 2).ceil(), 4);
        assert_eq!(r(-7, 2).ceil(), -3);
        assert_eq!(r(4, 1).ceil(), 4);
    }

    #[test]
    fn parsing_and_display() {
        assert_eq!("8/5".parse::<Rational>().unwrap(), r(8, 5));
        assert_eq!(" -3 / 6 ".parse::<Rational>().unwrap(), r(-1, 2));
        assert_eq!("2".parse::<Rational>().unwrap(), r(2, 1));
        assert_eq!("0.5".parse::<Rational>().unwrap(), r(1, 2));
        assert_eq!("-1.25".parse::<Rational>().unwrap(), r(-5, 4));
        assert_eq!("-0.25".parse::<Rational>().unwrap(), r(-1, 4));
        assert_eq!(".5".parse::<Rational>().unwrap(), r(1, 2));
        for bad in ["", "a/b", "1/0", "1.", "1.2.3", "1e3", "99999999999999999999999"] {
            assert!(bad.parse::<Rational>().is_err(), "{bad}");
        }
        assert_eq!(r(-9, 10).to_string(), "-9/10");
        assert_eq!(r(4, 2).to_string(), "2");
    }

    #[test]
    fn serializes_as_pair() {
        let j = serde_json::to_string(&r(-9, 10)).unwrap();
        assert_eq!(j, r#"{"num":-9,"den":10}"#);
    }
}
