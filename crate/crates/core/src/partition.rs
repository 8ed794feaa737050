//! The composition partition function
//!
//! `Z(N, n) = sum_{d_1 + ... + d_N = n} prod_i w_{d_i + 1}`
//!
//! tabulated in log domain for `0 <= N, n <= N_max`, together with the tree
//! and forest partition functions and the laws of `sigma(s)` and
//! `(sigma(s), sigma(s_1))` that follow from it.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{check_range, Result, SgError};
use crate::weights::{log_sum_exp, LogNonNeg, WeightSequence};

/// Largest `N_max` accepted without an explicit override.
pub const DEFAULT_NMAX_LIMIT: usize = 1500;

/// Hard ceiling even with the override, about 1.3 GB of table.
pub const ABSOLUTE_NMAX_LIMIT: usize = 12_000;

/// Terms this many natural-log units below the row maximum are dropped when
/// truncation is enabled.
pub const TRUNCATION_WINDOW: f64 = 40.0;

/// Default bound for the exact rational mirror.
pub const DEFAULT_EXACT_UPTO: usize = 12;

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub n_max: usize,
    /// Exact mirror bound; `None` picks [`DEFAULT_EXACT_UPTO`] for rational
    /// families and skips the mirror otherwise.
    pub exact_upto: Option<usize>,
    pub truncate: bool,
    pub allow_large: bool,
}

impl BuildOptions {
    pub fn new(n_max: usize) -> Self {
        BuildOptions {
            n_max,
            exact_upto: None,
            truncate: false,
            allow_large: false,
        }
    }

    pub fn exact_upto(mut self, bound: usize) -> Self {
        self.exact_upto = Some(bound);
        self
    }

    pub fn truncate(mut self, on: bool) -> Self {
        self.truncate = on;
        self
    }

    pub fn allow_large(mut self, on: bool) -> Self {
        self.allow_large = on;
        self
    }
}

/// Immutable table of `ln Z(N, n)`, row-major with stride `N_max + 1`.
#[derive(Clone, Debug)]
pub struct ZTable {
    ws: WeightSequence,
    n_max: usize,
    truncated: bool,
    /// `ln w_k` for `k = 0..=N_max + 1`.
    log_w: Vec<f64>,
    entries: Vec<f64>,
    exact: Option<Vec<Vec<BigRational>>>,
}

impl ZTable {
    /// Builds the table row by row from `Z(N, n) = sum_d w_{d+1} Z(N-1, n-d)`.
    ///
    /// Entries within a row are filled in parallel.
    pub fn build(ws: &WeightSequence, opts: &BuildOptions) -> Result<ZTable> {
        let n_max = opts.n_max;
        if n_max == 0 {
            return Err(SgError::Domain("N_max must be at least 1".into()));
        }
        let limit = if opts.allow_large {
            ABSOLUTE_NMAX_LIMIT
        } else {
            DEFAULT_NMAX_LIMIT
        };
        if n_max > limit {
            return Err(SgError::ResourceLimit(format!(
                "N_max = {n_max} exceeds the table budget {limit}{}",
                if opts.allow_large { "" } else { " (pass the large-table override to raise it)" }
            )));
        }
        let stride = n_max + 1;
        let log_w = ws.log_weights(n_max + 1);
        let mut entries = vec![f64::NEG_INFINITY; stride * stride];
        entries[0] = 0.0;
        for big_n in 1..=n_max {
            let (done, rest) = entries.split_at_mut(big_n * stride);
            let prev = &done[(big_n - 1) * stride..];
            let row = &mut rest[..stride];
            row.par_iter_mut().enumerate().for_each(|(n, out)| {
                *out = convolve_entry(&log_w, prev, n, opts.truncate);
            });
        }
        let exact = build_exact(ws, n_max, opts.exact_upto)?;
        Ok(ZTable {
            ws: ws.clone(),
            n_max,
            truncated: opts.truncate,
            log_w,
            entries,
            exact,
        })
    }

    /// Reassembles a table from persisted log values (see [`crate::io`]).
    pub fn from_log_entries(ws: &WeightSequence, n_max: usize, entries: Vec<f64>) -> Result<ZTable> {
        let stride = n_max + 1;
        if entries.len() != stride * stride {
            return Err(SgError::Format(format!(
                "expected {} entries for N_max = {n_max}, found {}",
                stride * stride,
                entries.len()
            )));
        }
        Ok(ZTable {
            ws: ws.clone(),
            n_max,
            truncated: false,
            log_w: ws.log_weights(n_max + 1),
            entries,
            exact: None,
        })
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.ws
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// `ln w_k` for `k = 0..=N_max + 1`.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_w
    }

    pub fn log_entries(&self) -> &[f64] {
        &self.entries
    }

    /// Bound of the exact rational mirror, if one was built.
    pub fn exact_bound(&self) -> Option<usize> {
        self.exact.as_ref().map(|rows| rows.len() - 1)
    }

    /// Raw `ln Z(N, n)` without range checks beyond the debug assertion.
    #[inline]
    pub(crate) fn ln_z(&self, big_n: usize, n: usize) -> f64 {
        debug_assert!(big_n <= self.n_max && n <= self.n_max);
        self.entries[big_n * (self.n_max + 1) + n]
    }

    pub fn log_z(&self, big_n: usize, n: usize) -> Result<LogNonNeg> {
        check_range("N", big_n, 0, self.n_max)?;
        check_range("n", n, 0, self.n_max)?;
        Ok(LogNonNeg::from_ln(self.ln_z(big_n, n)).expect("table entries are valid logs"))
    }

    pub fn exact_z(&self, big_n: usize, n: usize) -> Result<&BigRational> {
        let rows = self
            .exact
            .as_ref()
            .ok_or_else(|| SgError::NotExact("table has no exact mirror".into()))?;
        let bound = rows.len() - 1;
        check_range("N", big_n, 0, bound)?;
        check_range("n", n, 0, bound)?;
        Ok(&rows[big_n][n])
    }

    /// `Z_N = Z(N, N-1) / N`, the total weight of trees with `N` edges.
    pub fn z_n(&self, big_n: usize) -> Result<LogNonNeg> {
        self.forest_z(big_n, 1)
    }

    /// Partition function `(m/N) Z(N, N-m)` of ordered forests of `m` trees
    /// with `N` edges in total.
    pub fn forest_z(&self, big_n: usize, m: usize) -> Result<LogNonNeg> {
        check_range("N", big_n, 1, self.n_max)?;
        check_range("m", m, 1, big_n)?;
        let z = self.ln_z(big_n, big_n - m);
        Ok(LogNonNeg::from_ln(z + (m as f64).ln() - (big_n as f64).ln()).expect("finite"))
    }

    pub fn z_n_exact(&self, big_n: usize) -> Result<BigRational> {
        self.forest_z_exact(big_n, 1)
    }

    pub fn forest_z_exact(&self, big_n: usize, m: usize) -> Result<BigRational> {
        check_range("N", big_n, 1, self.n_max)?;
        check_range("m", m, 1, big_n)?;
        let z = self.exact_z(big_n, big_n - m)?;
        Ok(z * BigRational::new(m.into(), big_n.into()))
    }

    /// Unnormalised `ln nu_N(sigma(s) = k+1)` for `k = 0..N` straight from
    /// the closed form; entry 0 is `-inf`. Their exponentials sum to one up to
    /// table rounding.
    pub fn root_degree_log_terms(&self, big_n: usize) -> Result<Vec<f64>> {
        check_range("N", big_n, 2, self.n_max)?;
        let nf = big_n as f64;
        let log_total = self.ln_z(big_n, big_n - 1);
        let mut out = vec![f64::NEG_INFINITY; big_n];
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            *slot = (nf / (nf - 1.0)).ln() + (k as f64).ln() + self.log_w[k + 1]
                + self.ln_z(big_n - 1, big_n - k - 1)
                - log_total;
        }
        Ok(out)
    }

    /// Law of the root child degree: entry `k` is `nu_N(sigma(s) = k+1)`.
    pub fn root_degree_pmf(&self, big_n: usize) -> Result<Vec<f64>> {
        Ok(normalise_log(&self.root_degree_log_terms(big_n)?))
    }

    pub fn root_degree_pmf_exact(&self, big_n: usize) -> Result<Vec<BigRational>> {
        check_range("N", big_n, 2, self.n_max)?;
        let w = self.exact_weights(big_n + 1)?;
        let total = self.exact_z(big_n, big_n - 1)?.clone();
        let factor = BigRational::new(big_n.into(), (big_n - 1).into());
        let mut out = vec![BigRational::zero(); big_n];
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            *slot = &factor * BigRational::from_integer(k.into()) * &w[k + 1]
                * self.exact_z(big_n - 1, big_n - k - 1)?
                / &total;
        }
        Ok(out)
    }

    /// Joint law of `(sigma(s), sigma(s_1))`: entry `[k][l]` is
    /// `nu_N(sigma(s) = k+1, sigma(s_1) = l+1)` for `1 <= k < N`, `0 <= l < N`.
    /// Row `k = 0` is zero.
    pub fn joint_s_s1_pmf(&self, big_n: usize) -> Result<Vec<Vec<f64>>> {
        check_range("N", big_n, 3, self.n_max)?;
        let nf = big_n as f64;
        let log_total = self.ln_z(big_n, big_n - 1);
        let mut logs = vec![vec![f64::NEG_INFINITY; big_n]; big_n];
        for (k, row) in logs.iter_mut().enumerate().skip(1) {
            for (l, slot) in row.iter_mut().enumerate() {
                let forest = k + l - 1;
                if forest == 0 || k + l > big_n - 1 {
                    continue;
                }
                *slot = (nf / (nf - 2.0)).ln() + (forest as f64).ln()
                    + self.log_w[k + 1]
                    + self.log_w[l + 1]
                    + self.ln_z(big_n - 2, big_n - 1 - k - l)
                    - log_total;
            }
        }
        let flat: Vec<f64> = logs.iter().flatten().copied().collect();
        let probs = normalise_log(&flat);
        Ok(probs.chunks(big_n).map(<[f64]>::to_vec).collect())
    }

    pub fn joint_s_s1_pmf_exact(&self, big_n: usize) -> Result<Vec<Vec<BigRational>>> {
        check_range("N", big_n, 3, self.n_max)?;
        let w = self.exact_weights(big_n + 1)?;
        let total = self.exact_z(big_n, big_n - 1)?.clone();
        let factor = BigRational::new(big_n.into(), (big_n - 2).into());
        let mut out = vec![vec![BigRational::zero(); big_n]; big_n];
        for (k, row) in out.iter_mut().enumerate().skip(1) {
            for (l, slot) in row.iter_mut().enumerate() {
                let forest = k + l - 1;
                if forest == 0 || k + l > big_n - 1 {
                    continue;
                }
                *slot = &factor * BigRational::from_integer(forest.into()) * &w[k + 1] * &w[l + 1]
                    * self.exact_z(big_n - 2, big_n - 1 - k - l)?
                    / &total;
            }
        }
        Ok(out)
    }

    /// Relative discrepancy between `sum_l l w_{l+1} Z(N-1, n-l)` and
    /// `(n/N) Z(N, n)`.
    pub fn check_lemma_lsum(&self, big_n: usize, n: usize) -> Result<f64> {
        check_range("N", big_n, 1, self.n_max)?;
        check_range("n", n, 0, self.n_max)?;
        let terms: Vec<f64> = (1..=n)
            .map(|l| (l as f64).ln() + self.log_w[l + 1] + self.ln_z(big_n - 1, n - l))
            .collect();
        let lhs = log_sum_exp(&terms);
        let rhs = if n == 0 {
            f64::NEG_INFINITY
        } else {
            (n as f64 / big_n as f64).ln() + self.ln_z(big_n, n)
        };
        Ok(relative_log_gap(lhs, rhs))
    }

    /// Exact difference of the two sides (zero when the identity holds).
    pub fn check_lemma_lsum_exact(&self, big_n: usize, n: usize) -> Result<BigRational> {
        let bound = self
            .exact_bound()
            .ok_or_else(|| SgError::NotExact("table has no exact mirror".into()))?;
        check_range("N", big_n, 1, bound)?;
        check_range("n", n, 0, bound)?;
        let w = self.exact_weights(n + 1)?;
        let mut lhs = BigRational::zero();
        for l in 1..=n {
            lhs += BigRational::from_integer(l.into()) * &w[l + 1] * self.exact_z(big_n - 1, n - l)?;
        }
        let rhs = BigRational::new(n.into(), big_n.into()) * self.exact_z(big_n, n)?;
        Ok(lhs - rhs)
    }

    /// Constants of the domination inequality for a given `epsilon`: the least
    /// `A` with `w_i / w_{i+1} < epsilon` for every checked `i >= A`, and
    /// `ln C` with `C = sum_{i=0}^{A} w_{i+1}`. Ratios are checked up to
    /// `i = N_max`.
    pub fn l1_constants(&self, epsilon: f64) -> Result<(usize, f64)> {
        if !(epsilon > 0.0) {
            return Err(SgError::Domain(format!("epsilon must be positive, got {epsilon}")));
        }
        let ln_eps = epsilon.ln();
        // a ratio equal to epsilon up to rounding does not count as below it
        let margin = 1e-12 * ln_eps.abs().max(1.0);
        let mut a = 1;
        for i in (1..=self.n_max).rev() {
            let (wi, wi1) = (self.log_w[i], self.log_w[i + 1]);
            let ok = if wi1 == f64::NEG_INFINITY {
                false
            } else {
                wi - wi1 < ln_eps - margin
            };
            if !ok {
                a = i + 1;
                break;
            }
        }
        if a > self.n_max {
            return Err(SgError::NoAdmissible(format!(
                "no index A <= {} with w_i/w_(i+1) < {epsilon} for all checked i >= A",
                self.n_max
            )));
        }
        let ln_c = log_sum_exp(&self.log_w[1..=a + 1]);
        Ok((a, ln_c))
    }

    /// Checks `Z(N, n) <= eps Z(N, n+1) + C_eps^N` in log domain.
    pub fn check_lemma_l1(&self, epsilon: f64, big_n: usize, n: usize) -> Result<L1Check> {
        check_range("N", big_n, 1, self.n_max)?;
        check_range("n", n, 0, self.n_max)?;
        let (a_eps, ln_c_eps) = self.l1_constants(epsilon)?;
        let verdict = if n >= self.n_max {
            L1Verdict::NotApplicable
        } else {
            let lhs = self.ln_z(big_n, n);
            let rhs = crate::weights::log_add(
                epsilon.ln() + self.ln_z(big_n, n + 1),
                big_n as f64 * ln_c_eps,
            );
            if lhs <= rhs + 1e-12 * rhs.abs().max(1.0) {
                L1Verdict::Holds
            } else {
                L1Verdict::Violated
            }
        };
        Ok(L1Check {
            a_eps,
            ln_c_eps,
            verdict,
        })
    }

    fn exact_weights(&self, upto: usize) -> Result<Vec<BigRational>> {
        self.ws
            .exact_weights(upto)
            .ok_or_else(|| SgError::NotExact(format!("{} has irrational weights", self.ws.family())))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum L1Verdict {
    Holds,
    Violated,
    /// `n = N_max`: `Z(N, n+1)` is not tabulated.
    NotApplicable,
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct L1Check {
    pub a_eps: usize,
    pub ln_c_eps: f64,
    pub verdict: L1Verdict,
}

#[inline]
fn convolve_entry(log_w: &[f64], prev: &[f64], n: usize, truncate: bool) -> f64 {
    // terms d = 0..=n: ln w_{d+1} + ln Z(N-1, n-d)
    let w = &log_w[1..=n + 1];
    let z = &prev[..=n];
    let mut max = f64::NEG_INFINITY;
    for (a, b) in w.iter().zip(z.iter().rev()) {
        let t = a + b;
        if t > max {
            max = t;
        }
    }
    if max == f64::NEG_INFINITY {
        return max;
    }
    let floor = if truncate {
        max - TRUNCATION_WINDOW
    } else {
        f64::NEG_INFINITY
    };
    let mut sum = 0.0;
    for (a, b) in w.iter().zip(z.iter().rev()) {
        let t = a + b;
        if t >= floor {
            sum += (t - max).exp();
        }
    }
    max + sum.ln()
}

fn build_exact(
    ws: &WeightSequence,
    n_max: usize,
    exact_upto: Option<usize>,
) -> Result<Option<Vec<Vec<BigRational>>>> {
    let bound = match exact_upto {
        Some(0) => return Ok(None),
        Some(b) => {
            if !ws.has_exact() {
                return Err(SgError::NotExact(format!("{} has irrational weights", ws.family())));
            }
            b.min(n_max)
        }
        None if ws.has_exact() => DEFAULT_EXACT_UPTO.min(n_max),
        None => return Ok(None),
    };
    let w = ws.exact_weights(bound + 1).expect("checked above");
    let mut rows = vec![vec![BigRational::zero(); bound + 1]; bound + 1];
    rows[0][0] = BigRational::one();
    for big_n in 1..=bound {
        for n in 0..=bound {
            let mut acc = BigRational::zero();
            for d in 0..=n {
                let prev = &rows[big_n - 1][n - d];
                if !prev.is_zero() && w[d + 1].is_positive() {
                    acc += &w[d + 1] * prev;
                }
            }
            rows[big_n][n] = acc;
        }
    }
    Ok(Some(rows))
}

/// Subtract the maximum, exponentiate, normalise.
pub(crate) fn normalise_log(logs: &[f64]) -> Vec<f64> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![0.0; logs.len()];
    }
    let lin: Vec<f64> = logs.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = lin.iter().sum();
    lin.into_iter().map(|x| x / total).collect()
}

fn relative_log_gap(lhs: f64, rhs: f64) -> f64 {
    match (lhs == f64::NEG_INFINITY, rhs == f64::NEG_INFINITY) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        (false, false) => (lhs - rhs).exp_m1().abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    fn uniform(n_max: usize) -> ZTable {
        ZTable::build(&WeightSequence::uniform(), &BuildOptions::new(n_max)).unwrap()
    }

    fn theorem2(lambda: f64, n_max: usize) -> ZTable {
        ZTable::build(&WeightSequence::theorem2(lambda).unwrap(), &BuildOptions::new(n_max)).unwrap()
    }

    #[test]
    fn boundary_rows() {
        let t = theorem2(2.0, 10);
        assert_eq!(t.log_z(0, 0).unwrap().ln(), 0.0);
        for n in 1..=10 {
            assert!(t.log_z(0, n).unwrap().is_zero());
        }
        let lw = t.ws.log_weights(12);
        for big_n in 0..=10 {
            assert!(close(t.log_z(big_n, 0).unwrap().ln(), big_n as f64 * lw[1], 1e-15));
        }
        for n in 0..=10 {
            assert!(close(t.log_z(1, n).unwrap().ln(), lw[n + 1], 1e-15));
        }
    }

    #[test]
    fn small_values() {
        assert!(close(uniform(5).log_z(3, 2).unwrap().value(), 6.0, 1e-14));
        let t = theorem2(1.7, 5);
        assert!(close(t.log_z(3, 2).unwrap().value(), 6.0 + 3.0 * 1.7 * 1.7, 1e-14));
        let l = BigRational::from_float(1.7).unwrap();
        assert_eq!(*t.exact_z(3, 2).unwrap(), q(6, 1) + q(3, 1) * &l * &l);
    }

    #[test]
    fn tree_and_forest_partition_functions() {
        let u = uniform(6);
        assert!(close(u.z_n(1).unwrap().value(), 1.0, 1e-15));
        assert!(close(u.z_n(3).unwrap().value(), 2.0, 1e-14));
        assert_eq!(u.z_n_exact(3).unwrap(), q(2, 1));
        assert_eq!(u.forest_z_exact(2, 2).unwrap(), q(1, 1));
        assert_eq!(u.forest_z_exact(3, 2).unwrap(), q(2, 1));
        for big_n in 1..=6 {
            assert_eq!(u.z_n(big_n).unwrap(), u.forest_z(big_n, 1).unwrap());
        }
        let t = theorem2(1.0, 6);
        assert!(close(t.z_n(3).unwrap().value(), 3.0, 1e-14));
        assert_eq!(t.z_n_exact(3).unwrap(), q(3, 1));
        let w1 = t.ws.log_weight(1).unwrap();
        assert_eq!(t.z_n(1).unwrap(), w1);
        assert!(t.forest_z(3, 4).is_err());
        assert!(t.z_n(0).is_err());
        assert!(t.z_n(7).is_err());
    }

    #[test]
    fn root_degree_examples() {
        let u = uniform(6);
        let p = u.root_degree_pmf(3).unwrap();
        assert!(close(p[1], 0.5, 1e-14) && close(p[2], 0.5, 1e-14));
        assert_eq!(u.root_degree_pmf_exact(3).unwrap()[1..], [q(1, 2), q(1, 2)]);
        let t = theorem2(1.0, 6);
        assert_eq!(t.root_degree_pmf_exact(3).unwrap()[1..], [q(1, 3), q(2, 3)]);
        let p2 = t.root_degree_pmf(2).unwrap();
        assert_eq!(p2.len(), 2);
        assert!(close(p2[1], 1.0, 1e-15));
        assert!(t.root_degree_pmf(1).is_err());
    }

    #[test]
    fn joint_examples() {
        let u = uniform(6);
        let j = u.joint_s_s1_pmf_exact(3).unwrap();
        assert_eq!(j[1][1], q(1, 2));
        let t = theorem2(1.0, 6);
        let j = t.joint_s_s1_pmf_exact(3).unwrap();
        assert_eq!(j[2][0], q(2, 3));
        let marginal = t.root_degree_pmf_exact(3).unwrap();
        let rest: BigRational = j[2][1..].iter().sum();
        assert_eq!(&marginal[2] - rest, q(2, 3));
        assert!(t.joint_s_s1_pmf(2).is_err());
    }

    #[test]
    fn joint_symmetry_and_marginal() {
        let t = ZTable::build(&WeightSequence::custom(["1", "2/3", "5", "1/7", "3"]).unwrap(), &BuildOptions::new(12))
            .unwrap();
        for big_n in 3..=12 {
            let j = t.joint_s_s1_pmf_exact(big_n).unwrap();
            for k in 1..big_n {
                for l in 1..big_n {
                    assert_eq!(j[k][l], j[l][k]);
                }
            }
            let marg = t.root_degree_pmf_exact(big_n).unwrap();
            for k in 1..big_n {
                let s: BigRational = j[k].iter().sum();
                assert_eq!(s, marg[k]);
            }
            let jf = t.joint_s_s1_pmf(big_n).unwrap();
            let mf = t.root_degree_pmf(big_n).unwrap();
            for k in 1..big_n {
                let s: f64 = jf[k].iter().sum();
                assert!((s - mf[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lemma_lsum_examples() {
        let u = uniform(6);
        assert!(u.check_lemma_lsum(3, 2).unwrap() < 1e-14);
        assert_eq!(u.check_lemma_lsum(3, 0).unwrap(), 0.0);
        assert!(u.check_lemma_lsum_exact(3, 2).unwrap().is_zero());
        let t = theorem2(2.0, 12);
        for k in 0..=12 {
            assert!(t.check_lemma_lsum(1, k).unwrap() < 1e-14);
            for big_n in 1..=12 {
                assert!(t.check_lemma_lsum_exact(big_n, k).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn lemma_l1_constants_and_verdicts() {
        let t = ZTable::build(&WeightSequence::factorial_alpha(0.5).unwrap(), &BuildOptions::new(50)).unwrap();
        let (a, ln_c) = t.l1_constants(0.5).unwrap();
        assert_eq!(a, 5);
        let lw = t.ws.log_weights(6);
        assert!(close(ln_c, log_sum_exp(&lw[1..=6]), 1e-15));
        for big_n in 1..=50 {
            for n in 0..50 {
                assert_eq!(t.check_lemma_l1(0.5, big_n, n).unwrap().verdict, L1Verdict::Holds);
            }
            assert_eq!(t.check_lemma_l1(0.5, big_n, 50).unwrap().verdict, L1Verdict::NotApplicable);
        }
        // i^(-1/2) < 0.1 first holds at i = 101, beyond this table
        assert!(matches!(t.l1_constants(0.1), Err(SgError::NoAdmissible(_))));
        assert!(t.l1_constants(0.0).is_err());
        assert!(uniform(20).l1_constants(0.5).is_err());
    }

    #[test]
    fn resource_limit() {
        let ws = WeightSequence::uniform();
        assert!(matches!(
            ZTable::build(&ws, &BuildOptions::new(DEFAULT_NMAX_LIMIT + 1)),
            Err(SgError::ResourceLimit(_))
        ));
        assert!(ZTable::build(&ws, &BuildOptions::new(0)).is_err());
        assert!(ZTable::build(&WeightSequence::factorial_alpha(0.5).unwrap(), &BuildOptions::new(5).exact_upto(5)).is_err());
    }

    #[test]
    fn truncation_error_is_small() {
        let ws = WeightSequence::factorial_alpha(0.5).unwrap();
        let full = ZTable::build(&ws, &BuildOptions::new(200)).unwrap();
        let cut = ZTable::build(&ws, &BuildOptions::new(200).truncate(true)).unwrap();
        assert!(cut.is_truncated());
        for (a, b) in full.log_entries().iter().zip(cut.log_entries()) {
            if a.is_finite() {
                // each dropped term is below e^-40 of the row maximum
                assert!((a - b).abs() < 200.0 * 200.0 * (-TRUNCATION_WINDOW).exp());
            }
        }
    }
}
