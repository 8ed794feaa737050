//! Brute-force ground truth for small `N`: every plane tree with `N` edges
//! and its exact weight under `nu_N`.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Result, SgError};
use crate::partition::{BuildOptions, ZTable};
use crate::trees::PlaneTree;
use crate::weights::{ln_biguint, ln_rational, WeightFamily, WeightSequence};

/// Largest `N` accepted by [`enumerate_trees`] (`C_11 = 58786` trees).
pub const ENUMERATION_CAP: usize = 12;

/// All Lukasiewicz words of length `N`, in lexicographic order.
pub fn enumerate_trees(big_n: usize) -> Result<Vec<PlaneTree>> {
    enumerate_trees_capped(big_n, ENUMERATION_CAP)
}

pub fn enumerate_trees_capped(big_n: usize, cap: usize) -> Result<Vec<PlaneTree>> {
    if big_n == 0 || big_n > cap {
        return Err(SgError::OutOfRange {
            what: "N",
            value: big_n,
            min: 1,
            max: cap,
        });
    }
    let mut out = Vec::new();
    let mut word = Vec::with_capacity(big_n);
    extend(&mut word, 1, big_n, &mut out);
    Ok(out)
}

// `open` is the number of vertices still owed to the word.
fn extend(word: &mut Vec<usize>, open: usize, len: usize, out: &mut Vec<PlaneTree>) {
    let remaining = len - word.len();
    if remaining == 0 {
        if open == 0 {
            out.push(PlaneTree::from_outdeg_unchecked(word.clone()));
        }
        return;
    }
    if open == 0 || open > remaining {
        return;
    }
    for d in 0..=(remaining - open) {
        word.push(d);
        extend(word, open - 1 + d, len, out);
        word.pop();
    }
}

/// The `n`-th Catalan number.
pub fn catalan(n: usize) -> BigUint {
    let mut c = BigUint::one();
    for k in 0..n {
        c = c * BigUint::from(2 * (2 * k + 1)) / BigUint::from(k + 2);
    }
    c
}

/// `nu_N` by enumeration. Weights are exact rationals when the family allows
/// it; otherwise each tree carries a double-precision log weight computed from
/// the exact integer `prod d_i!` and the measure has no exact view.
#[derive(Clone, Debug)]
pub struct EnumeratedMeasure {
    pub n: usize,
    pub trees: Vec<PlaneTree>,
    pub exact_weights: Option<Vec<BigRational>>,
    pub exact_total: Option<BigRational>,
    pub log_weights: Vec<f64>,
    /// `ln` of the sum of all tree weights, i.e. `ln Z_N`.
    pub log_total: f64,
}

pub fn exact_nu(big_n: usize, ws: &WeightSequence) -> Result<EnumeratedMeasure> {
    let trees = enumerate_trees(big_n)?;
    let (exact_weights, exact_total, log_weights) = match ws.exact_weights(big_n + 1) {
        Some(w) => {
            let weights: Vec<BigRational> = trees
                .iter()
                .map(|t| t.outdeg().iter().fold(BigRational::one(), |acc, &d| acc * &w[d + 1]))
                .collect();
            let total = weights.iter().fold(BigRational::zero(), |acc, x| acc + x);
            let logs: Vec<f64> = weights.iter().map(ln_rational).collect();
            (Some(weights), Some(total), logs)
        }
        None => {
            let logs: Vec<f64> = match ws.family() {
                WeightFamily::FactorialAlpha { alpha } => trees
                    .iter()
                    .map(|t| {
                        let p = t.outdeg().iter().fold(BigUint::one(), |acc, &d| {
                            acc * (1..=d).fold(BigUint::one(), |f, j| f * BigUint::from(j))
                        });
                        alpha * ln_biguint(&p)
                    })
                    .collect(),
                _ => {
                    let lw = ws.log_weights(big_n + 1);
                    trees
                        .iter()
                        .map(|t| t.outdeg().iter().map(|&d| lw[d + 1]).sum())
                        .collect()
                }
            };
            (None, None, logs)
        }
    };
    let log_total = match &exact_total {
        Some(total) => ln_rational(total),
        None => compensated_log_sum(&log_weights),
    };
    Ok(EnumeratedMeasure {
        n: big_n,
        trees,
        exact_weights,
        exact_total,
        log_weights,
        log_total,
    })
}

/// `ln sum e^x_i`, summing the shifted terms in increasing order with
/// Neumaier compensation.
pub fn compensated_log_sum(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let mut terms: Vec<f64> = logs.iter().map(|&x| (x - max).exp()).collect();
    terms.sort_by(f64::total_cmp);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    max + (sum + comp).ln()
}

impl EnumeratedMeasure {
    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.exact_weights.is_some()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        match (&self.exact_weights, &self.exact_total) {
            (Some(w), Some(total)) if !total.is_zero() => {
                w.iter().map(|x| (x / total).to_f64().unwrap_or(0.0)).collect()
            }
            _ => self.log_weights.iter().map(|&l| (l - self.log_total).exp()).collect(),
        }
    }

    pub fn exact_probabilities(&self) -> Option<Vec<BigRational>> {
        let (w, total) = (self.exact_weights.as_ref()?, self.exact_total.as_ref()?);
        if total.is_zero() {
            return None;
        }
        Some(w.iter().map(|x| x / total).collect())
    }

    pub fn probability_map(&self) -> HashMap<PlaneTree, f64> {
        self.trees.iter().cloned().zip(self.probabilities()).collect()
    }

    /// Exact law of `sigma(s)`, indexed so that entry `k` is `P(sigma(s) = k + 1)`.
    pub fn sigma_s_marginal_exact(&self) -> Option<Vec<BigRational>> {
        let probs = self.exact_probabilities()?;
        let mut out = vec![BigRational::zero(); self.n];
        for (t, p) in self.trees.iter().zip(probs) {
            out[t.outdeg()[0]] += p;
        }
        Some(out)
    }

    /// Exact joint law of `(sigma(s), sigma(s_1))`: entry `[k][l]` is
    /// `P(sigma(s) = k + 1, sigma(s_1) = l + 1)`.
    pub fn joint_s_s1_exact(&self) -> Option<Vec<Vec<BigRational>>> {
        let probs = self.exact_probabilities()?;
        let mut out = vec![vec![BigRational::zero(); self.n]; self.n];
        for (t, p) in self.trees.iter().zip(probs) {
            let d = t.outdeg();
            if d.len() >= 2 {
                out[d[0]][d[1]] += p;
            }
        }
        Some(out)
    }
}

/// Total variation distance between an empirical frequency map and `nu_N`.
/// Trees missing from either side count as probability zero.
pub fn tv_distance(empirical: &HashMap<PlaneTree, f64>, exact: &EnumeratedMeasure) -> f64 {
    let exact_map = exact.probability_map();
    tv_between(empirical, &exact_map)
}

pub fn tv_between(p: &HashMap<PlaneTree, f64>, q: &HashMap<PlaneTree, f64>) -> f64 {
    let mut total = 0.0;
    for (t, &a) in p {
        total += (a - q.get(t).copied().unwrap_or(0.0)).abs();
    }
    for (t, &b) in q {
        if !p.contains_key(t) {
            total += b.abs();
        }
    }
    0.5 * total
}

/// Relative frequencies of a sample of trees.
pub fn empirical_frequencies(trees: &[PlaneTree]) -> HashMap<PlaneTree, f64> {
    let mut counts: HashMap<PlaneTree, f64> = HashMap::new();
    for t in trees {
        *counts.entry(t.clone()).or_default() += 1.0;
    }
    let n = trees.len() as f64;
    counts.values_mut().for_each(|c| *c /= n);
    counts
}

/// Agreement between the partition table and the enumeration at one `N`.
#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub family: WeightFamily,
    pub n: usize,
    pub tree_count: usize,
    pub catalan: String,
    pub exact: bool,
    /// `Z_N` from the table equals the enumerated total as rationals.
    pub z_exact_equal: Option<bool>,
    pub log_z_table: f64,
    pub log_z_oracle: f64,
    /// `|ln Z_table - ln Z_oracle|`, the relative error of `Z_N` to first order.
    pub z_relative_error: f64,
    pub root_degree_exact_equal: Option<bool>,
    pub root_degree_max_abs_error: f64,
    pub joint_exact_equal: Option<bool>,
    pub joint_max_abs_error: Option<f64>,
    pub agrees: bool,
}

/// Tolerance on log-mode comparisons in [`oracle_check`].
pub const LOG_MODE_TOLERANCE: f64 = 1e-12;

pub fn oracle_check(ws: &WeightSequence, big_n: usize) -> Result<OracleReport> {
    let measure = exact_nu(big_n, ws)?;
    let exact = measure.is_exact();
    let mut opts = BuildOptions::new(big_n.max(2));
    if exact {
        opts = opts.exact_upto(big_n.max(2));
    }
    let table = ZTable::build(ws, &opts)?;
    let log_z_table = table.z_n(big_n)?.ln();
    let z_relative_error = if log_z_table == measure.log_total {
        0.0
    } else {
        (log_z_table - measure.log_total).abs()
    };
    let z_exact_equal = if exact {
        Some(table.z_n_exact(big_n)? == *measure.exact_total.as_ref().expect("exact total"))
    } else {
        None
    };

    let probs = measure.probabilities();
    let mut marginal = vec![0.0; big_n];
    for (t, p) in measure.trees.iter().zip(&probs) {
        if big_n >= 2 {
            marginal[t.outdeg()[0]] += p;
        }
    }
    let (root_degree_exact_equal, root_degree_max_abs_error) = if big_n >= 2 {
        let pmf = table.root_degree_pmf(big_n)?;
        let err = pmf
            .iter()
            .zip(&marginal)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let eq = if exact {
            Some(table.root_degree_pmf_exact(big_n)? == measure.sigma_s_marginal_exact().expect("exact"))
        } else {
            None
        };
        (eq, err)
    } else {
        (None, 0.0)
    };

    let (joint_exact_equal, joint_max_abs_error) = if big_n >= 3 {
        let joint = table.joint_s_s1_pmf(big_n)?;
        let mut emp = vec![vec![0.0; big_n]; big_n];
        for (t, p) in measure.trees.iter().zip(&probs) {
            let d = t.outdeg();
            emp[d[0]][d[1]] += p;
        }
        let mut err = 0.0f64;
        for k in 0..big_n {
            for l in 0..big_n {
                err = err.max((joint[k][l] - emp[k][l]).abs());
            }
        }
        let eq = if exact {
            Some(table.joint_s_s1_pmf_exact(big_n)? == measure.joint_s_s1_exact().expect("exact"))
        } else {
            None
        };
        (eq, Some(err))
    } else {
        (None, None)
    };

    let agrees = z_exact_equal.unwrap_or(true)
        && root_degree_exact_equal.unwrap_or(true)
        && joint_exact_equal.unwrap_or(true)
        && z_relative_error < LOG_MODE_TOLERANCE
        && root_degree_max_abs_error < 1e-10
        && joint_max_abs_error.unwrap_or(0.0) < 1e-10;
    Ok(OracleReport {
        family: ws.family().clone(),
        n: big_n,
        tree_count: measure.len(),
        catalan: catalan(big_n - 1).to_string(),
        exact,
        z_exact_equal,
        log_z_table,
        log_z_oracle: measure.log_total,
        z_relative_error,
        root_degree_exact_equal,
        root_degree_max_abs_error,
        joint_exact_equal,
        joint_max_abs_error,
        agrees,
    })
}
