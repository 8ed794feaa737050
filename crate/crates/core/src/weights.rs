//! Branching-weight families and log-domain arithmetic.

use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgError};

/// Natural logarithm of a nonnegative real. `-inf` encodes an exact zero.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogNonNeg(f64);

impl LogNonNeg {
    pub const ZERO: LogNonNeg = LogNonNeg(f64::NEG_INFINITY);
    pub const ONE: LogNonNeg = LogNonNeg(0.0);

    /// Wraps a log value. NaN and `+inf` are rejected.
    pub fn from_ln(ln: f64) -> Result<Self> {
        if ln.is_nan() || ln == f64::INFINITY {
            return Err(SgError::Domain(format!("{ln} is not the log of a finite nonnegative number")));
        }
        Ok(LogNonNeg(ln))
    }

    pub fn from_value(x: f64) -> Result<Self> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(SgError::Domain(format!("{x} is not a finite nonnegative number")));
        }
        Ok(LogNonNeg(x.ln()))
    }

    #[inline]
    pub fn ln(self) -> f64 {
        self.0
    }

    /// The underlying value; overflows to `inf` for large logs.
    #[inline]
    pub fn value(self) -> f64 {
        self.0.exp()
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

impl Add for LogNonNeg {
    type Output = LogNonNeg;

    #[inline]
    fn add(self, rhs: LogNonNeg) -> LogNonNeg {
        LogNonNeg(log_add(self.0, rhs.0))
    }
}

impl Mul for LogNonNeg {
    type Output = LogNonNeg;

    #[inline]
    fn mul(self, rhs: LogNonNeg) -> LogNonNeg {
        if self.is_zero() || rhs.is_zero() {
            LogNonNeg::ZERO
        } else {
            LogNonNeg(self.0 + rhs.0)
        }
    }
}

impl fmt::Display for LogNonNeg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exp({})", self.0)
    }
}

/// `ln(e^a + e^b)` with max shifting.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(sum e^x_i)`; empty or all `-inf` input gives `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}

/// `ln k!` for `k = 0..=upto`, by compensated cumulative summation of `ln j`.
pub fn log_factorials(upto: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(upto + 1);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    out.push(0.0);
    for j in 1..=upto {
        // Neumaier summation
        let x = (j as f64).ln();
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    out
}

/// Branching-weight family, as written in harness configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WeightFamily {
    /// `w_n = 1` for all `n`.
    Uniform,
    /// `w_2 = lambda`, `w_n = (n-1)!` otherwise.
    Theorem2 { lambda: f64 },
    /// `w_n = ((n-1)!)^alpha`.
    FactorialAlpha { alpha: f64 },
    /// `w_1, w_2, ...` as decimal or `p/q` strings; zero beyond the table.
    Custom { weights: Vec<String> },
}

impl fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFamily::Uniform => write!(f, "uniform"),
            WeightFamily::Theorem2 { lambda } => write!(f, "theorem2(lambda={lambda})"),
            WeightFamily::FactorialAlpha { alpha } => write!(f, "factorial_alpha(alpha={alpha})"),
            WeightFamily::Custom { weights } => write!(f, "custom({} entries)", weights.len()),
        }
    }
}

/// A validated, immutable branching-weight sequence `(w_n)_{n >= 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSequence {
    family: WeightFamily,
    custom_exact: Vec<BigRational>,
    custom_ln: Vec<f64>,
}

impl WeightSequence {
    pub fn new(family: WeightFamily) -> Result<Self> {
        let mut custom_exact = Vec::new();
        let mut custom_ln = Vec::new();
        match &family {
            WeightFamily::Uniform => {}
            WeightFamily::Theorem2 { lambda } => {
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return Err(SgError::InvalidWeights(format!("lambda must be positive, got {lambda}")));
                }
            }
            WeightFamily::FactorialAlpha { alpha } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(SgError::InvalidWeights(format!("alpha must be positive, got {alpha}")));
                }
            }
            WeightFamily::Custom { weights } => {
                for (i, s) in weights.iter().enumerate() {
                    let q = parse_rational(s).map_err(|e| {
                        SgError::InvalidWeights(format!("entry w_{}: {e}", i + 1))
                    })?;
                    custom_ln.push(ln_rational(&q));
                    custom_exact.push(q);
                }
                let w1_positive = custom_exact.first().is_some_and(|w| w.is_positive());
                if !w1_positive {
                    return Err(SgError::InvalidWeights("w_1 must be positive".into()));
                }
                if !custom_exact.iter().skip(2).any(|w| w.is_positive()) {
                    return Err(SgError::InvalidWeights(
                        "w_n must be positive for at least one n > 2".into(),
                    ));
                }
            }
        }
        Ok(WeightSequence {
            family,
            custom_exact,
            custom_ln,
        })
    }

    pub fn uniform() -> Self {
        Self::new(WeightFamily::Uniform).expect("uniform weights are valid")
    }

    pub fn theorem2(lambda: f64) -> Result<Self> {
        Self::new(WeightFamily::Theorem2 { lambda })
    }

    pub fn factorial_alpha(alpha: f64) -> Result<Self> {
        Self::new(WeightFamily::FactorialAlpha { alpha })
    }

    pub fn custom<S: Into<String>>(weights: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::new(WeightFamily::Custom {
            weights: weights.into_iter().map(Into::into).collect(),
        })
    }

    pub fn family(&self) -> &WeightFamily {
        &self.family
    }

    /// `ln w_n`. `n = 0` is a domain error.
    pub fn log_weight(&self, n: usize) -> Result<LogNonNeg> {
        if n == 0 {
            return Err(SgError::Domain("branching weights are indexed from n = 1".into()));
        }
        Ok(LogNonNeg(self.log_weights(n)[n]))
    }

    /// `ln w_n` for `n = 0..=upto`; entry 0 is `-inf` and unused.
    ///
    /// Every entry is bit-identical to the corresponding `log_weight` call.
    pub fn log_weights(&self, upto: usize) -> Vec<f64> {
        let mut out = vec![f64::NEG_INFINITY; upto + 1];
        match &self.family {
            WeightFamily::Uniform => out[1..].fill(0.0),
            WeightFamily::Theorem2 { lambda } => {
                let lf = log_factorials(upto.saturating_sub(1));
                for n in 1..=upto {
                    out[n] = if n == 2 { lambda.ln() } else { lf[n - 1] };
                }
            }
            WeightFamily::FactorialAlpha { alpha } => {
                let lf = log_factorials(upto.saturating_sub(1));
                for n in 1..=upto {
                    out[n] = alpha * lf[n - 1];
                }
            }
            WeightFamily::Custom { .. } => {
                for n in 1..=upto.min(self.custom_ln.len()) {
                    out[n] = self.custom_ln[n - 1];
                }
            }
        }
        out
    }

    /// True when every weight has an exact rational value.
    pub fn has_exact(&self) -> bool {
        match &self.family {
            WeightFamily::FactorialAlpha { alpha } => alpha.fract() == 0.0 && *alpha <= 64.0,
            _ => true,
        }
    }

    /// Exact `w_n`, or `None` when the family is irrational (non-integer alpha).
    pub fn exact_weight(&self, n: usize) -> Option<BigRational> {
        if n == 0 || !self.has_exact() {
            return None;
        }
        Some(match &self.family {
            WeightFamily::Uniform => BigRational::one(),
            WeightFamily::Theorem2 { lambda } => {
                if n == 2 {
                    BigRational::from_float(*lambda)?
                } else {
                    BigRational::from_integer(factorial(n - 1))
                }
            }
            WeightFamily::FactorialAlpha { alpha } => {
                BigRational::from_integer(num_traits::pow(factorial(n - 1), *alpha as usize))
            }
            WeightFamily::Custom { .. } => self
                .custom_exact
                .get(n - 1)
                .cloned()
                .unwrap_or_else(BigRational::zero),
        })
    }

    /// Exact `w_n` for `n = 0..=upto` (entry 0 is zero), if available.
    pub fn exact_weights(&self, upto: usize) -> Option<Vec<BigRational>> {
        if !self.has_exact() {
            return None;
        }
        let mut out = vec![BigRational::zero()];
        for n in 1..=upto {
            out.push(self.exact_weight(n)?);
        }
        Some(out)
    }
}

/// Ratio diagnostics for the growth condition `w_{n+1}/w_n -> inf`.
#[derive(Clone, Debug, Serialize)]
pub struct SuperexpReport {
    /// `ratios[k]` is `w_{k+2}/w_{k+1}`, i.e. the ratio at `n = k + 1`; `None` when `w_n = 0`.
    pub ratios: Vec<Option<f64>>,
    pub eventually_increasing: bool,
    pub exceeds_threshold: bool,
    pub threshold: f64,
    pub warning: Option<String>,
}

/// Default ratio level the last checked ratio must exceed.
pub const SUPEREXP_DEFAULT_THRESHOLD: f64 = 2.0;

/// Advisory check of the superexponential growth condition on `n <= n_max`.
///
/// The tail (second half) of the ratio sequence must be strictly increasing
/// and its last entry must exceed `threshold`; otherwise a warning is set.
pub fn check_superexponential(ws: &WeightSequence, n_max: usize, threshold: f64) -> SuperexpReport {
    let n_max = n_max.max(3);
    let lw = ws.log_weights(n_max + 1);
    let ratios: Vec<Option<f64>> = (1..=n_max)
        .map(|n| {
            if lw[n] == f64::NEG_INFINITY {
                None
            } else {
                Some((lw[n + 1] - lw[n]).exp())
            }
        })
        .collect();
    let tail = &ratios[ratios.len() / 2..];
    let eventually_increasing = tail
        .windows(2)
        .all(|p| matches!((p[0], p[1]), (Some(a), Some(b)) if b > a));
    let exceeds_threshold = matches!(ratios.last(), Some(Some(r)) if *r > threshold);
    let warning = if eventually_increasing && exceeds_threshold {
        None
    } else {
        Some(format!(
            "{} does not look superexponential on n <= {n_max} (tail increasing: {eventually_increasing}, last ratio above {threshold}: {exceeds_threshold})",
            ws.family()
        ))
    };
    SuperexpReport {
        ratios,
        eventually_increasing,
        exceeds_threshold,
        threshold,
        warning,
    }
}

pub(crate) fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, j| acc * BigInt::from(j))
}

/// Parses `"12"`, `"0.25"`, `".5"` or `"3/4"` into an exact nonnegative rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || SgError::Format(format!("'{s}' is not a nonnegative decimal or fraction"));
    if let Some((p, q)) = s.split_once('/') {
        let num = parse_decimal(p.trim()).ok_or_else(bad)?;
        let den = parse_decimal(q.trim()).ok_or_else(bad)?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(num / den);
    }
    parse_decimal(s).ok_or_else(bad)
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = digits.parse().ok()?;
    let den = num_traits::pow(BigInt::from(10u32), frac_part.len());
    Some(BigRational::new(num, den))
}

/// `ln` of a big unsigned integer, accurate to double precision.
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln` of a nonnegative rational (`-inf` for zero).
pub fn ln_rational(q: &BigRational) -> f64 {
    if q.is_zero() {
        return f64::NEG_INFINITY;
    }
    let num = q.numer().magnitude();
    let den = q.denom().magnitude();
    ln_biguint(num) - ln_biguint(den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_weight_examples() {
        let fa = WeightSequence::factorial_alpha(0.5).unwrap();
        assert_eq!(fa.log_weight(1).unwrap().ln(), 0.0);
        assert!((fa.log_weight(4).unwrap().ln() - 0.5 * 6f64.ln()).abs() < 1e-15);
        assert!((fa.log_weight(4).unwrap().ln() - 0.895880).abs() < 1e-6);
        let t2 = WeightSequence::theorem2(2.0).unwrap();
        assert_eq!(t2.log_weight(2).unwrap().ln(), 2f64.ln());
        assert!(matches!(fa.log_weight(0), Err(SgError::Domain(_))));
    }

    #[test]
    fn repeated_calls_identical() {
        let fa = WeightSequence::factorial_alpha(0.37).unwrap();
        let all = fa.log_weights(300);
        for n in [1, 2, 17, 299, 300] {
            assert_eq!(fa.log_weight(n).unwrap().ln().to_bits(), all[n].to_bits());
        }
    }

    #[test]
    fn alpha_one_matches_theorem2_lambda_one() {
        let a = WeightSequence::factorial_alpha(1.0).unwrap().log_weights(2000);
        let b = WeightSequence::theorem2(1.0).unwrap().log_weights(2000);
        assert_eq!(a, b);
    }

    #[test]
    fn exact_and_log_modes_agree() {
        // Relative error of the value is the absolute error of its log. The
        // log of w_n itself is only representable to about one ulp, so the
        // bound is taken relative to max(1, |ln w_n|).
        let families = [
            WeightSequence::uniform(),
            WeightSequence::theorem2(2.0).unwrap(),
            WeightSequence::theorem2(0.3).unwrap(),
            WeightSequence::factorial_alpha(1.0).unwrap(),
            WeightSequence::factorial_alpha(2.0).unwrap(),
        ];
        let upto = 10_000;
        for ws in &families {
            let lw = ws.log_weights(upto);
            let mut fact = BigInt::one();
            for n in 1..=upto {
                if n >= 2 {
                    fact *= BigInt::from(n - 1);
                }
                let exact = match ws.family() {
                    WeightFamily::Uniform => BigRational::one(),
                    WeightFamily::Theorem2 { lambda } if n == 2 => {
                        BigRational::from_float(*lambda).unwrap()
                    }
                    WeightFamily::Theorem2 { .. } => BigRational::from_integer(fact.clone()),
                    WeightFamily::FactorialAlpha { alpha } => {
                        BigRational::from_integer(num_traits::pow(fact.clone(), *alpha as usize))
                    }
                    WeightFamily::Custom { .. } => unreachable!(),
                };
                let err = (ln_rational(&exact) - lw[n]).abs();
                assert!(err < 1e-12 * lw[n].abs().max(1.0), "{} n={n} err={err}", ws.family());
                if n <= 30 {
                    assert_eq!(ws.exact_weight(n).unwrap(), exact);
                }
            }
        }
    }

    #[test]
    fn custom_weights_are_validated() {
        assert!(WeightSequence::custom(["1", "0", "2"]).is_ok());
        assert!(WeightSequence::custom(["0", "1", "2"]).is_err());
        assert!(WeightSequence::custom(["1", "1"]).is_err());
        assert!(WeightSequence::custom(["1", "1", "0"]).is_err());
        assert!(WeightSequence::custom(["1", "x", "1"]).is_err());
        let ws = WeightSequence::custom(["1", "0.5", "3/4"]).unwrap();
        assert_eq!(ws.exact_weight(3).unwrap(), BigRational::new(3.into(), 4.into()));
        assert_eq!(ws.exact_weight(4).unwrap(), BigRational::zero());
        assert!(ws.log_weight(4).unwrap().is_zero());
        assert!((ws.log_weight(2).unwrap().ln() - 0.5f64.ln()).abs() < 1e-15);
        assert!(WeightSequence::factorial_alpha(-1.0).is_err());
        assert!(WeightSequence::theorem2(0.0).is_err());
    }

    #[test]
    fn family_json_shape() {
        let f: WeightFamily = serde_json::from_str(r#"{"family":"factorial_alpha","alpha":0.5}"#).unwrap();
        assert_eq!(f, WeightFamily::FactorialAlpha { alpha: 0.5 });
        let c: WeightFamily = serde_json::from_str(r#"{"family":"custom","weights":["1","2","1/3"]}"#).unwrap();
        assert!(WeightSequence::new(c).is_ok());
    }

    #[test]
    fn superexponential_diagnostics() {
        let fa = check_superexponential(&WeightSequence::factorial_alpha(0.5).unwrap(), 10, 2.0);
        for (k, r) in fa.ratios.iter().enumerate() {
            let n = (k + 1) as f64;
            assert!((r.unwrap() - n.sqrt()).abs() < 1e-12);
        }
        assert!(fa.eventually_increasing && fa.exceeds_threshold && fa.warning.is_none());

        let u = check_superexponential(&WeightSequence::uniform(), 10, 2.0);
        assert!(u.ratios.iter().all(|r| (r.unwrap() - 1.0).abs() < 1e-15));
        assert!(u.warning.is_some());

        let t = check_superexponential(&WeightSequence::theorem2(3.0).unwrap(), 10, 2.0);
        assert!((t.ratios[1].unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(t.eventually_increasing && t.warning.is_none());
    }

    #[test]
    fn log_arithmetic() {
        let a = LogNonNeg::from_value(2.0).unwrap();
        let b = LogNonNeg::from_value(3.0).unwrap();
        assert!(((a + b).value() - 5.0).abs() < 1e-14);
        assert!(((a * b).value() - 6.0).abs() < 1e-14);
        assert_eq!(a * LogNonNeg::ZERO, LogNonNeg::ZERO);
        assert_eq!(a + LogNonNeg::ZERO, a);
        assert_eq!((LogNonNeg::ZERO + LogNonNeg::ZERO).ln(), f64::NEG_INFINITY);
        let big = LogNonNeg::from_ln(1234.0).unwrap() + LogNonNeg::from_ln(1232.0).unwrap();
        assert!((big.ln() - 1234.126928011042972).abs() < 1e-12);
        assert!(LogNonNeg::from_ln(f64::NAN).is_err());
        assert!(LogNonNeg::from_value(-1.0).is_err());
    }

    #[test]
    fn log_factorials_are_accurate() {
        let lf = log_factorials(170);
        let mut f = 1.0f64;
        for k in 1..=170 {
            f *= k as f64;
            assert!((lf[k] - f.ln()).abs() < 1e-12 * f.ln().max(1.0));
        }
    }
}
