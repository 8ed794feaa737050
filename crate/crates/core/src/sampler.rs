//! Exact sampling from `nu_N`.
//!
//! A composition `(d_1, ..., d_N)` of `N - 1` is drawn with probability
//! proportional to `prod w_{d_i + 1}` by sequential conditioning on the
//! `Z(N, n)` table, and then rotated into the unique cyclic shift that is a
//! Lukasiewicz word. Every tree arises from exactly `N` weighted rotations,
//! so the rotated word has law `nu_N`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Result, SgError};
use crate::partition::ZTable;
use crate::trees::PlaneTree;

/// Identifier recorded in reports for the generator and its seeding scheme.
pub const RNG_ID: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64(seed), set_stream(stream)";

/// A reproducible position in the random stream family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

impl RandomSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        RandomSource { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Draws `(d_1, ..., d_N)` with `sum d_i = n` and probability
/// `prod w_{d_i+1} / Z(N, n)`.
pub fn sample_composition<R: Rng + ?Sized>(
    table: &ZTable,
    big_n: usize,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_range("N", big_n, 1, table.n_max())?;
    check_range("n", n, 0, table.n_max())?;
    if table.ln_z(big_n, n) == f64::NEG_INFINITY {
        return Err(SgError::NoAdmissible(format!("Z({big_n}, {n}) = 0")));
    }
    let log_w = table.log_weights();
    let mut out = Vec::with_capacity(big_n);
    let mut rest = n;
    for slots in (1..=big_n).rev() {
        let d = if slots == 1 {
            rest
        } else {
            draw_first_part(table, log_w, slots, rest, rng)
        };
        out.push(d);
        rest -= d;
    }
    Ok(out)
}

/// `P(d_1 = d) = w_{d+1} Z(slots-1, rest-d) / Z(slots, rest)`, scanned from
/// `d = 0` against the tabulated normaliser. If rounding leaves the uniform
/// draw above the accumulated mass, the draw is redone with an explicitly
/// normalised CDF.
fn draw_first_part<R: Rng + ?Sized>(
    table: &ZTable,
    log_w: &[f64],
    slots: usize,
    rest: usize,
    rng: &mut R,
) -> usize {
    let log_total = table.ln_z(slots, rest);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for d in 0..=rest {
        acc += (log_w[d + 1] + table.ln_z(slots - 1, rest - d) - log_total).exp();
        if u < acc {
            return d;
        }
    }
    let logs: Vec<f64> = (0..=rest)
        .map(|d| log_w[d + 1] + table.ln_z(slots - 1, rest - d))
        .collect();
    inverse_cdf(&crate::partition::normalise_log(&logs), u)
}

fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last
}

/// Rotates a composition of `len - 1` into its unique Lukasiewicz rotation,
/// starting right after the first minimum of the prefix sums of `d_i - 1`.
pub fn rotate_to_tree(word: &[usize]) -> Result<PlaneTree> {
    let total: usize = word.iter().sum();
    if word.is_empty() || total + 1 != word.len() {
        return Err(SgError::Domain(format!(
            "a word of length {} must sum to {}, got {total}",
            word.len(),
            word.len().saturating_sub(1)
        )));
    }
    let mut height: i64 = 0;
    let mut min = i64::MAX;
    let mut argmin = 0;
    for (i, &d) in word.iter().enumerate() {
        height += d as i64 - 1;
        if height < min {
            min = height;
            argmin = i;
        }
    }
    let start = (argmin + 1) % word.len();
    let rotated: Vec<usize> = word[start..].iter().chain(&word[..start]).copied().collect();
    Ok(PlaneTree::from_outdeg_unchecked(rotated))
}

pub fn sample_tree<R: Rng + ?Sized>(table: &ZTable, big_n: usize, rng: &mut R) -> Result<PlaneTree> {
    check_range("N", big_n, 1, table.n_max())?;
    let word = sample_composition(table, big_n, big_n - 1, rng)?;
    rotate_to_tree(&word)
}

/// Draws `sigma(s)` from its exact law without building a tree.
pub fn sample_sigma_s<R: Rng + ?Sized>(table: &ZTable, big_n: usize, rng: &mut R) -> Result<usize> {
    let pmf = table.root_degree_pmf(big_n)?;
    let u: f64 = rng.random();
    Ok(inverse_cdf(&pmf, u) + 1)
}

/// Draws `count` trees, sample `i` on stream `i`, and maps each through `f`.
/// The output order and values do not depend on the thread count.
pub fn sample_map<T, F>(table: &ZTable, big_n: usize, count: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(PlaneTree) -> T + Sync + Send,
{
    sample_map_streams(table, big_n, count, seed, 0, f)
}

/// As [`sample_map`], with sample `i` on stream `first_stream + i`.
pub fn sample_map_streams<T, F>(
    table: &ZTable,
    big_n: usize,
    count: usize,
    seed: u64,
    first_stream: u64,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(PlaneTree) -> T + Sync + Send,
{
    check_range("N", big_n, 1, table.n_max())?;
    if table.ln_z(big_n, big_n - 1) == f64::NEG_INFINITY {
        return Err(SgError::NoAdmissible(format!("Z_{big_n} = 0")));
    }
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = RandomSource::new(seed, first_stream + i).rng();
            sample_tree(table, big_n, &mut rng).map(&f)
        })
        .collect()
}

pub fn sample_trees(table: &ZTable, big_n: usize, count: usize, seed: u64) -> Result<Vec<PlaneTree>> {
    sample_map(table, big_n, count, seed, |t| t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::BuildOptions;
    use crate::weights::WeightSequence;
    use std::collections::HashMap;

    fn table(ws: WeightSequence, n_max: usize) -> ZTable {
        ZTable::build(&ws, &BuildOptions::new(n_max)).unwrap()
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotate_to_tree(&[0, 2, 0]).unwrap().outdeg(), &[2, 0, 0]);
        assert_eq!(rotate_to_tree(&[1, 1, 0]).unwrap().outdeg(), &[1, 1, 0]);
        assert_eq!(rotate_to_tree(&[0, 1, 1]).unwrap().outdeg(), &[1, 1, 0]);
        assert_eq!(rotate_to_tree(&[2, 0, 1, 0]).unwrap().outdeg(), &[2, 0, 1, 0]);
        assert_eq!(rotate_to_tree(&[0]).unwrap().outdeg(), &[0]);
        assert!(rotate_to_tree(&[1, 1]).is_err());
        assert!(rotate_to_tree(&[]).is_err());
    }

    #[test]
    fn single_slot_composition() {
        let t = table(WeightSequence::uniform(), 8);
        let mut rng = RandomSource::new(1, 0).rng();
        for n in 0..=8 {
            assert_eq!(sample_composition(&t, 1, n, &mut rng).unwrap(), vec![n]);
        }
        let one = sample_tree(&t, 1, &mut rng).unwrap();
        assert_eq!(one, PlaneTree::star(1));
    }

    #[test]
    fn composition_frequencies() {
        let draws = 100_000;
        for (ws, expect) in [
            (WeightSequence::uniform(), [1.0 / 6.0, 1.0 / 6.0]),
            (WeightSequence::theorem2(1.0).unwrap(), [2.0 / 9.0, 1.0 / 9.0]),
        ] {
            let t = table(ws, 4);
            let mut rng = RandomSource::new(42, 7).rng();
            let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
            for _ in 0..draws {
                *counts.entry(sample_composition(&t, 3, 2, &mut rng).unwrap()).or_default() += 1;
            }
            assert_eq!(counts.len(), 6);
            for (comp, c) in counts {
                let p = if comp.contains(&2) { expect[0] } else { expect[1] };
                let se = (p * (1.0 - p) / draws as f64).sqrt();
                let f = c as f64 / draws as f64;
                assert!((f - p).abs() < 4.0 * se, "{comp:?}: {f} vs {p}");
            }
        }
    }

    #[test]
    fn tree_and_sigma_frequencies() {
        let draws = 40_000;
        for (ws, p_star) in [
            (WeightSequence::uniform(), 0.5),
            (WeightSequence::theorem2(1.0).unwrap(), 2.0 / 3.0),
        ] {
            let t = table(ws, 4);
            let trees = sample_trees(&t, 3, draws, 3).unwrap();
            let stars = trees.iter().filter(|x| **x == PlaneTree::star(3)).count();
            assert!(trees.iter().all(|x| *x == PlaneTree::star(3) || *x == PlaneTree::path(3)));
            let se = (p_star * (1.0 - p_star) / draws as f64).sqrt();
            assert!((stars as f64 / draws as f64 - p_star).abs() < 4.0 * se);

            let mut rng = RandomSource::new(5, 0).rng();
            let sig3 = (0..draws)
                .filter(|_| sample_sigma_s(&t, 3, &mut rng).unwrap() == 3)
                .count();
            assert!((sig3 as f64 / draws as f64 - p_star).abs() < 4.0 * se);
            assert_eq!(sample_sigma_s(&t, 2, &mut rng).unwrap(), 2);
            assert!(sample_sigma_s(&t, 1, &mut rng).is_err());
        }
    }

    #[test]
    fn determinism() {
        let t = table(WeightSequence::factorial_alpha(0.5).unwrap(), 60);
        let a = sample_trees(&t, 60, 50, 99).unwrap();
        let b = sample_trees(&t, 60, 50, 99).unwrap();
        let c = sample_trees(&t, 60, 50, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let mut r1 = RandomSource::new(1, 0).rng();
        let mut r2 = RandomSource::new(1, 1).rng();
        assert_ne!(r1.random::<u64>(), r2.random::<u64>());
    }

    #[test]
    fn zero_weight_compositions_are_rejected() {
        // w_2 = 0: Z(1, 1) = 0
        let t = table(WeightSequence::custom(["1", "0", "1"]).unwrap(), 6);
        let mut rng = RandomSource::new(0, 0).rng();
        assert!(matches!(sample_composition(&t, 1, 1, &mut rng), Err(SgError::NoAdmissible(_))));
        // N = 2 needs a vertex of degree 2
        assert!(sample_tree(&t, 2, &mut rng).is_err());
        let ok = sample_tree(&t, 3, &mut rng).unwrap();
        assert_eq!(ok, PlaneTree::star(3));
    }
}
