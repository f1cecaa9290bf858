//! Small exact positive rationals for inequality parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A positive rational `num/den`, kept reduced. Used for the growth
/// parameters α and β; all inequality verdicts are computed with integer
/// arithmetic, never floats.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Result<Ratio> {
        if num == 0 || den == 0 {
            return Err(Error::Config(format!("ratio must be positive, got {num}/{den}")));
        }
        let g = gcd(num, den);
        Ok(Ratio { num: num / g, den: den / g })
    }

    /// Divide by a positive integer (e.g. the α/|ker ρ| rescaling).
    pub fn div_int(self, k: u64) -> Result<Ratio> {
        Ratio::new(self.num, self.den.checked_mul(k).ok_or_else(|| {
            Error::ResourceLimit("ratio denominator overflow".into())
        })?)
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl FromStr for Ratio {
    type Err = Error;

    /// Parse `"p/q"` or a bare integer `"p"`.
    fn from_str(s: &str) -> Result<Ratio> {
        let s = s.trim();
        let (num, den) = match s.split_once('/') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (s, "1"),
        };
        let num: u64 =
            num.parse().map_err(|_| Error::Config(format!("bad rational {s:?}")))?;
        let den: u64 =
            den.parse().map_err(|_| Error::Config(format!("bad rational {s:?}")))?;
        Ratio::new(num, den)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_reduce() {
        let r: Ratio = "2/8".parse().unwrap();
        assert_eq!(r, Ratio { num: 1, den: 4 });
        let r: Ratio = "3".parse().unwrap();
        assert_eq!(r, Ratio { num: 3, den: 1 });
        assert!("0/5".parse::<Ratio>().is_err());
        assert!("x/2".parse::<Ratio>().is_err());
        assert_eq!(Ratio::new(1, 4).unwrap().div_int(2).unwrap(), Ratio { num: 1, den: 8 });
    }
}
