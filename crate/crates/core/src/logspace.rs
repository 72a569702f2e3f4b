//! Signed log-space arithmetic.
//!
//! `λ M` routinely reaches several hundred, so quantities like `e^{λM}` and
//! the integrals built from them can never be materialized in linear space.
//! A [`LogValue`] stores `ln |x|` together with the sign of `x`, represents
//! zero exactly, and sums through a sorted log-sum-exp so that parallel
//! reductions stay bit-for-bit reproducible.

/// Sign of a log-space value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

/// A real number `sign * exp(log_abs)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogValue {
    log_abs: f64,
    sign: Sign,
}

impl LogValue {
    pub const fn zero() -> Self {
        Self {
            log_abs: f64::NEG_INFINITY,
            sign: Sign::Zero,
        }
    }

    pub const fn one() -> Self {
        Self {
            log_abs: 0.0,
            sign: Sign::Pos,
        }
    }

    /// Positive value given its natural logarithm (`-inf` maps to zero).
    pub fn from_log(log: f64) -> Self {
        if log == f64::NEG_INFINITY {
            Self::zero()
        } else {
            Self {
                log_abs: log,
                sign: Sign::Pos,
            }
        }
    }

    pub fn from_linear(x: f64) -> Self {
        if x == 0.0 {
            Self::zero()
        } else if x > 0.0 {
            Self {
                log_abs: x.ln(),
                sign: Sign::Pos,
            }
        } else {
            Self {
                log_abs: (-x).ln(),
                sign: Sign::Neg,
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == Sign::Zero
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// `ln |x|`; `-inf` for zero.
    pub fn log_abs(&self) -> f64 {
        self.log_abs
    }

    /// Natural log of a value known to be nonnegative.
    pub fn ln(&self) -> f64 {
        debug_assert!(self.sign != Sign::Neg, "ln of a negative value");
        self.log_abs
    }

    /// Back to linear space; may overflow to `±inf`.
    pub fn to_linear(&self) -> f64 {
        match self.sign {
            Sign::Zero => 0.0,
            Sign::Pos => self.log_abs.exp(),
            Sign::Neg => -self.log_abs.exp(),
        }
    }

    pub fn neg(&self) -> Self {
        let sign = match self.sign {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
            Sign::Zero => Sign::Zero,
        };
        Self {
            log_abs: self.log_abs,
            sign,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let sign = if self.sign == other.sign {
            Sign::Pos
        } else {
            Sign::Neg
        };
        Self {
            log_abs: self.log_abs + other.log_abs,
            sign,
        }
    }

    pub fn div(&self, other: &Self) -> Self {
        debug_assert!(!other.is_zero(), "division by log-space zero");
        if self.is_zero() {
            return Self::zero();
        }
        let sign = if self.sign == other.sign {
            Sign::Pos
        } else {
            Sign::Neg
        };
        Self {
            log_abs: self.log_abs - other.log_abs,
            sign,
        }
    }

    /// Multiply by `exp(shift)`.
    pub fn scale_log(&self, shift: f64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Self {
            log_abs: self.log_abs + shift,
            sign: self.sign,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        match (self.sign, other.sign) {
            (Sign::Zero, _) => *other,
            (_, Sign::Zero) => *self,
            (a, b) if a == b => {
                let (hi, lo) = if self.log_abs >= other.log_abs {
                    (self.log_abs, other.log_abs)
                } else {
                    (other.log_abs, self.log_abs)
                };
                Self {
                    log_abs: hi + (lo - hi).exp().ln_1p(),
                    sign: a,
                }
            }
            _ => {
                // Opposite signs: subtract the smaller magnitude.
                if self.log_abs == other.log_abs {
                    return Self::zero();
                }
                let (hi, lo, sign) = if self.log_abs > other.log_abs {
                    (self.log_abs, other.log_abs, self.sign)
                } else {
                    (other.log_abs, self.log_abs, other.sign)
                };
                Self {
                    log_abs: hi + (-((lo - hi).exp())).ln_1p(),
                    sign,
                }
            }
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Sum with a deterministic reduction: terms are bucketed by sign and
    /// accumulated smallest-magnitude first, independent of input order.
    pub fn sum(values: &[LogValue]) -> Self {
        fn lse_sorted(mut logs: Vec<f64>) -> f64 {
            logs.sort_by(|a, b| a.partial_cmp(b).expect("NaN in log-sum"));
            match logs.last() {
                None => f64::NEG_INFINITY,
                Some(&m) if m == f64::NEG_INFINITY => f64::NEG_INFINITY,
                Some(&m) => {
                    let s: f64 = logs.iter().map(|l| (l - m).exp()).sum();
                    m + s.ln()
                }
            }
        }
        let pos: Vec<f64> = values
            .iter()
            .filter(|v| v.sign == Sign::Pos)
            .map(|v| v.log_abs)
            .collect();
        let neg: Vec<f64> = values
            .iter()
            .filter(|v| v.sign == Sign::Neg)
            .map(|v| v.log_abs)
            .collect();
        let p = LogValue::from_log(lse_sorted(pos));
        let n = LogValue::from_log(lse_sorted(neg));
        p.sub(&n)
    }

    /// Arithmetic mean of `n` values already summed.
    pub fn mean_of(sum: &Self, n: usize) -> Self {
        sum.scale_log(-(n as f64).ln())
    }
}
