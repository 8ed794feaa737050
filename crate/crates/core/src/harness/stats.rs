//! Summary statistics and goodness-of-fit distances used by the experiments.

use serde::Serialize;
use statrs::function::erf::erfc;

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
    pub max: f64,
}

/// Sample quantile by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two points.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn summarize(xs: &[f64]) -> Summary {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    Summary {
        count: xs.len(),
        mean: mean(xs),
        sd: variance(xs).sqrt(),
        min: sorted.first().copied().unwrap_or(f64::NAN),
        q05: quantile(&sorted, 0.05),
        median: quantile(&sorted, 0.5),
        q95: quantile(&sorted, 0.95),
        max: sorted.last().copied().unwrap_or(f64::NAN),
    }
}

/// Pearson correlation; `NaN` when either sample is constant.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Kolmogorov-Smirnov distance `sup_x |F_n(x) - Phi(x)|` between the
/// empirical distribution of `xs` and the standard normal, with ties handled
/// by checking both one-sided limits at every atom.
pub fn ks_normal(xs: &[f64]) -> f64 {
    ks_against(xs, |v| (normal_cdf(v), normal_cdf(v)))
}

/// KS distance for data living on a lattice of spacing `h`, compared with the
/// normal law discretised to the same lattice: the empirical CDF at an atom
/// `v` is matched with `Phi(v + h/2)` and its left limit with `Phi(v - h/2)`.
pub fn ks_normal_lattice(xs: &[f64], h: f64) -> f64 {
    ks_against(xs, |v| (normal_cdf(v - h / 2.0), normal_cdf(v + h / 2.0)))
}

fn ks_against(xs: &[f64], cdf: impl Fn(f64) -> (f64, f64)) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        let (left, right) = cdf(v);
        d = d.max((i as f64 / n - left).abs()).max((j as f64 / n - right).abs());
        i = j;
    }
    d
}

/// `P(Pois(mu) = k)` for `k = 0..=upto`.
pub fn poisson_pmf(mu: f64, upto: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(upto + 1);
    let mut p = (-mu).exp();
    for k in 0..=upto {
        if k > 0 {
            p *= mu / k as f64;
        }
        out.push(p);
    }
    out
}

/// Total variation distance between the empirical law of nonnegative integer
/// data and `Pois(mu)`, including the Poisson mass beyond the largest value.
pub fn tv_poisson(data: &[usize], mu: f64) -> f64 {
    let max = data.iter().copied().max().unwrap_or(0);
    let freq = frequencies(data, max);
    let pmf = poisson_pmf(mu, max);
    let covered: f64 = pmf.iter().sum();
    let body: f64 = freq.iter().zip(&pmf).map(|(f, p)| (f - p).abs()).sum();
    0.5 * (body + (1.0 - covered).max(0.0))
}

/// Relative frequencies of `0..=upto` in `data`.
pub fn frequencies(data: &[usize], upto: usize) -> Vec<f64> {
    let mut counts = vec![0.0; upto + 1];
    for &x in data {
        if x <= upto {
            counts[x] += 1.0;
        }
    }
    let n = data.len() as f64;
    counts.iter_mut().for_each(|c| *c /= n);
    counts
}

/// Least-squares slope of `ln |y|` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// Largest drop between consecutive entries (zero for a nondecreasing sequence).
pub fn max_decrease(xs: &[f64]) -> f64 {
    xs.windows(2).map(|p| p[0] - p[1]).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.96) - 0.975_002_104_851_779_6).abs() < 1e-10);
        assert!((normal_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-10);
    }

    #[test]
    fn summaries() {
        let s = summarize(&[4.0, 1.0, 3.0, 2.0, 5.0]);
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.median, 3.0);
        assert!((s.sd - 2.5f64.sqrt()).abs() < 1e-15);
        assert_eq!((s.min, s.max), (1.0, 5.0));
        assert!((s.q05 - 1.2).abs() < 1e-12);
        assert!((correlation(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
        assert!((correlation(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn ks_cases() {
        assert!((ks_normal(&[0.0]) - 0.5).abs() < 1e-15);
        let grid: Vec<f64> = (1..10_000)
            .map(|i| {
                // inverse CDF by bisection
                let p = i as f64 / 10_000.0;
                let (mut a, mut b) = (-10.0, 10.0);
                for _ in 0..100 {
                    let m = 0.5 * (a + b);
                    if normal_cdf(m) < p {
                        a = m
                    } else {
                        b = m
                    }
                }
                0.5 * (a + b)
            })
            .collect();
        assert!(ks_normal(&grid) < 2e-4);
        // all mass on the atom at 0 against a lattice of spacing 1
        let ks = ks_normal_lattice(&[0.0, 0.0], 1.0);
        assert!((ks - normal_cdf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn poisson_and_tv() {
        let p = poisson_pmf(2.0, 3);
        assert!((p[0] - (-2f64).exp()).abs() < 1e-16);
        assert!((p[3] - 8.0 / 6.0 * (-2f64).exp()).abs() < 1e-15);
        let tv = tv_poisson(&[0, 0, 0], 1e-12);
        assert!(tv < 1e-11);
        let tv = tv_poisson(&[5], 1e-9);
        assert!((tv - 1.0).abs() < 1e-8);
        assert_eq!(frequencies(&[1, 1, 0, 3], 3), vec![0.25, 0.5, 0.0, 0.25]);
    }

    #[test]
    fn slopes_and_trends() {
        let xs = [100.0, 1000.0, 10_000.0];
        let ys = [-5.0, -15.811, -50.0];
        assert!((log_log_slope(&xs, &ys) - 0.5).abs() < 1e-3);
        assert_eq!(max_decrease(&[0.1, 0.2, 0.2, 0.5]), 0.0);
        assert!((max_decrease(&[0.5, 0.4, 0.45]) - 0.1).abs() < 1e-15);
    }
}
