use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed-point format `<s, n, m>`: `n` total bits, `m` of them fractional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FxFormat {
    pub signed: bool,
    pub n: u32,
    pub m: u32,
}

impl FxFormat {
    pub fn new(signed: bool, n: u32, m: u32) -> Result<Self> {
        let sign_bit = u32::from(signed);
        if !(1..=64).contains(&n) || m + sign_bit > n {
            return Err(Error::Config(format!(
                "invalid fixed-point format <{},{n},{m}>",
                sign_bit
            )));
        }
        Ok(FxFormat { signed, n, m })
    }

    pub fn min_int(&self) -> i128 {
        if self.signed {
            -(1i128 << (self.n - 1))
        } else {
            0
        }
    }

    pub fn max_int(&self) -> i128 {
        if self.signed {
            (1i128 << (self.n - 1)) - 1
        } else {
            (1i128 << self.n) - 1
        }
    }

    pub fn fits(&self, v: i128) -> bool {
        (self.min_int()..=self.max_int()).contains(&v)
    }

    /// Weight of the least significant bit, `2^-m`.
    pub fn lsb(&self) -> f64 {
        2f64.powi(-(self.m as i32))
    }

    pub fn to_real(&self, v: i128) -> f64 {
        v as f64 * self.lsb()
    }

    /// Representation of `x` with truncation toward zero, if it fits.
    pub fn quantize(&self, x: f64) -> Option<i128> {
        let scaled = (x * 2f64.powi(self.m as i32)).trunc();
        if !scaled.is_finite() || scaled.abs() > 1.7e38 {
            return None;
        }
        let v = scaled as i128;
        self.fits(v).then_some(v)
    }

    pub fn holds(&self, x: f64) -> bool {
        self.quantize(x).is_some()
    }

    pub fn min_real(&self) -> f64 {
        self.to_real(self.min_int())
    }

    pub fn max_real(&self) -> f64 {
        self.to_real(self.max_int())
    }
}

impl fmt::Display for FxFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fixdt({},{},{})", u8::from(self.signed), self.n, self.m)
    }
}

/// Closed real interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidInterval(lo, hi));
        }
        Ok(Interval { lo, hi })
    }

    pub fn symmetric(r: f64) -> Self {
        Interval::new(-r.abs(), r.abs()).expect("finite radius")
    }

    pub fn point(v: f64) -> Self {
        Interval::new(v, v).expect("finite point")
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn magnitude(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }
}

/// Format with the most fraction bits whose representable range holds every
/// value of `range` after truncation toward zero.
pub fn allocate_format(range: Interval, signed: bool, n: u32) -> Result<FxFormat> {
    if !(1..=64).contains(&n) || (signed && n < 2) {
        return Err(Error::Config(format!("bit budget {n} out of range")));
    }
    if !signed && range.lo < 0.0 {
        return Err(Error::Config("negative range for an unsigned format".into()));
    }
    let max_m = n - u32::from(signed);
    for m in (0..=max_m).rev() {
        let f = FxFormat { signed, n, m };
        if f.holds(range.lo) && f.holds(range.hi) {
            return Ok(f);
        }
    }
    let needed = range.magnitude().log2().floor().max(0.0) as u32 + 1;
    Err(Error::BudgetExceeded {
        lo: range.lo,
        hi: range.hi,
        needed,
        available: max_m,
        bits: n,
    })
}

/// Shift right by `k` with truncation toward zero (sign-magnitude); negative
/// `k` shifts left.
pub fn shr_toward_zero(v: i128, k: i32) -> i128 {
    if k <= 0 {
        v << (-k) as u32
    } else if v < 0 {
        -((-v) >> k as u32)
    } else {
        v >> k as u32
    }
}
