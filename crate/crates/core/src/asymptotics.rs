//! Predictions for `w_n = ((n-1)!)^alpha`: the scales `n_i`, the Gaussian
//! centres `mhat_i` as the maximiser of the variational function `f`, and the
//! expansions of `ln Z_N` in the three weight regimes.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgError};
use crate::weights::log_factorials;

const INTEGRALITY_EPS: f64 = 1e-9;

/// `K = floor(1/alpha)`, robust to `1/alpha` landing a rounding error below
/// an integer.
pub fn k_value(alpha: f64) -> usize {
    let inv = 1.0 / alpha;
    let r = inv.round();
    if (inv - r).abs() < INTEGRALITY_EPS {
        r as usize
    } else {
        inv.floor() as usize
    }
}

/// True when `1/alpha` is an integer, the case with a Poisson boundary count.
pub fn inverse_is_integral(alpha: f64) -> bool {
    let inv = 1.0 / alpha;
    (inv - inv.round()).abs() < INTEGRALITY_EPS
}

/// Number of Gaussian coordinates: the `i >= 1` with `i < 1/alpha`.
pub fn gaussian_dim(alpha: f64) -> usize {
    let k = k_value(alpha);
    if inverse_is_integral(alpha) {
        k - 1
    } else {
        k
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(SgError::Domain(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn ln_fact(i: usize) -> f64 {
    log_factorials(i)[i]
}

/// `n_i = i!^alpha N^(1 - i alpha)`.
pub fn n_i_value(alpha: f64, big_n: usize, i: usize) -> Result<f64> {
    check_alpha(alpha)?;
    let k = k_value(alpha);
    if i == 0 || i > k {
        return Err(SgError::Domain(format!("i = {i} outside 1..={k} for alpha = {alpha}")));
    }
    Ok((alpha * ln_fact(i) + (1.0 - i as f64 * alpha) * (big_n as f64).ln()).exp())
}

/// `n_i (1 - (1 - i alpha) N^-alpha)`, the first-order centre.
pub fn mhat_first_order(alpha: f64, big_n: usize, i: usize) -> Result<f64> {
    if i as f64 * alpha >= 1.0 - INTEGRALITY_EPS {
        return Err(SgError::Domain(format!("need i < 1/alpha, got i = {i}, alpha = {alpha}")));
    }
    let n_i = n_i_value(alpha, big_n, i)?;
    Ok(n_i * (1.0 - (1.0 - i as f64 * alpha) * (big_n as f64).powf(-alpha)))
}

struct FTerms {
    alpha: f64,
    ln_n: f64,
    nf: f64,
    k: usize,
}

impl FTerms {
    fn new(alpha: f64, big_n: usize) -> Self {
        FTerms {
            alpha,
            ln_n: (big_n as f64).ln(),
            nf: big_n as f64,
            k: k_value(alpha),
        }
    }

    fn sums(m: &[f64]) -> (f64, f64) {
        m.iter()
            .enumerate()
            .fold((0.0, 0.0), |(a, b), (idx, &mi)| (a + mi, b + (idx + 1) as f64 * mi))
    }

    fn value(&self, m: &[f64]) -> f64 {
        let mut total = 0.0;
        for (idx, &mi) in m.iter().enumerate() {
            let i = (idx + 1) as f64;
            total += (1.0 - self.alpha * i) * mi * self.ln_n + self.alpha * mi * ln_fact(idx + 1)
                - mi * mi.ln()
                + mi
                - 0.5 * (2.0 * std::f64::consts::PI * mi).ln();
        }
        let (a, b) = Self::sums(m);
        for j in 2..=self.k {
            let jf = j as f64;
            total += (self.alpha * b.powi(j as i32) - a.powi(j as i32))
                / (jf * (jf - 1.0) * self.nf.powi(j as i32 - 1));
        }
        total
    }

    fn gradient(&self, m: &[f64]) -> Vec<f64> {
        let (a, b) = Self::sums(m);
        m.iter()
            .enumerate()
            .map(|(idx, &mi)| {
                let i = (idx + 1) as f64;
                let mut g = (1.0 - self.alpha * i) * self.ln_n + self.alpha * ln_fact(idx + 1)
                    - mi.ln()
                    - 0.5 / mi;
                for j in 2..=self.k {
                    let p = j as i32 - 1;
                    g += (self.alpha * i * b.powi(p) - a.powi(p)) / ((j as f64 - 1.0) * self.nf.powi(p));
                }
                g
            })
            .collect()
    }

    fn hessian(&self, m: &[f64]) -> DMatrix<f64> {
        let (a, b) = Self::sums(m);
        let dim = m.len();
        DMatrix::from_fn(dim, dim, |r, c| {
            let (i, l) = ((r + 1) as f64, (c + 1) as f64);
            let mut h = 0.0;
            if r == c {
                h += -1.0 / m[r] + 0.5 / (m[r] * m[r]);
            }
            for j in 2..=self.k {
                let p = j as i32 - 2;
                h += (self.alpha * i * l * b.powi(p) - a.powi(p)) / self.nf.powi(j as i32 - 1);
            }
            h
        })
    }
}

fn check_m(m: &[f64]) -> Result<()> {
    match m.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        Some(i) => Err(SgError::Domain(format!("m_{} = {} must be positive", i + 1, m[i]))),
        None => Ok(()),
    }
}

/// The variational function `f(m_1, ..., m_L)`, with the `j`-sum running to
/// `K = floor(1/alpha)`. `L` may be smaller than `K` (the Poisson coordinate
/// is dropped when `1/alpha` is an integer).
pub fn f_value(alpha: f64, big_n: usize, m: &[f64]) -> Result<f64> {
    check_alpha(alpha)?;
    check_m(m)?;
    Ok(FTerms::new(alpha, big_n).value(m))
}

/// Analytic partial derivatives of [`f_value`].
pub fn f_gradient(alpha: f64, big_n: usize, m: &[f64]) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    check_m(m)?;
    Ok(FTerms::new(alpha, big_n).gradient(m))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    /// Half-width of the box `V = prod [(1-eta) n_i, (1+eta) n_i]`.
    pub eta: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            eta: 0.5,
            max_iter: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Newton,
    Bisection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MhatSolution {
    pub mhat: Vec<f64>,
    pub n_i: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub method: SolveMethod,
    pub f_max: f64,
}

/// Stationary point of `f` inside `V`, by damped Newton from `m = n` with a
/// coordinate-bisection fallback.
pub fn solve_mhat(alpha: f64, big_n: usize, opts: &SolveOptions) -> Result<MhatSolution> {
    check_alpha(alpha)?;
    let dim = gaussian_dim(alpha);
    let n_i: Vec<f64> = (1..=dim)
        .map(|i| n_i_value(alpha, big_n, i))
        .collect::<Result<_>>()?;
    if let Some(i) = n_i.iter().position(|&x| x < 1.0) {
        return Err(SgError::Domain(format!(
            "N = {big_n} too small: n_{} = {} < 1",
            i + 1,
            n_i[i]
        )));
    }
    let lo: Vec<f64> = n_i.iter().map(|x| (1.0 - opts.eta) * x).collect();
    let hi: Vec<f64> = n_i.iter().map(|x| (1.0 + opts.eta) * x).collect();
    let terms = FTerms::new(alpha, big_n);
    let inside = |m: &[f64]| m.iter().zip(lo.iter().zip(&hi)).all(|(x, (l, h))| x > l && x < h);
    let norm = |g: &[f64]| g.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));

    let mut m = n_i.clone();
    let mut g = terms.gradient(&m);
    let mut iterations = 0;
    let mut newton_ok = true;
    while norm(&g) >= opts.tol {
        if iterations >= opts.max_iter {
            newton_ok = false;
            break;
        }
        iterations += 1;
        let h = terms.hessian(&m);
        let step = h.lu().solve(&(-DVector::from_vec(g.clone())));
        let Some(step) = step else {
            newton_ok = false;
            break;
        };
        let ascent: f64 = step.iter().zip(&g).map(|(s, gi)| s * gi).sum();
        if !(ascent > 0.0) {
            newton_ok = false;
            break;
        }
        let mut t = 1.0;
        let current = norm(&g);
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = m.iter().zip(step.iter()).map(|(x, s)| x + t * s).collect();
            if inside(&trial) {
                let gt = terms.gradient(&trial);
                if norm(&gt) < current {
                    m = trial;
                    g = gt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            newton_ok = false;
            break;
        }
    }
    let method = if newton_ok {
        SolveMethod::Newton
    } else {
        m = n_i.clone();
        iterations = coordinate_bisection(&terms, &mut m, &lo, &hi, opts)?;
        g = terms.gradient(&m);
        if norm(&g) >= opts.tol {
            return Err(SgError::NoConvergence {
                iterations,
                grad_norm: norm(&g),
            });
        }
        SolveMethod::Bisection
    };
    if let Some(idx) = (0..dim).find(|&i| !(m[i] > lo[i] && m[i] < hi[i])) {
        return Err(SgError::BoundaryHit {
            index: idx + 1,
            value: m[idx],
            lo: lo[idx],
            hi: hi[idx],
        });
    }
    Ok(MhatSolution {
        f_max: terms.value(&m),
        grad_norm: norm(&g),
        mhat: m,
        n_i,
        iterations,
        method,
    })
}

fn coordinate_bisection(terms: &FTerms, m: &mut [f64], lo: &[f64], hi: &[f64], opts: &SolveOptions) -> Result<usize> {
    let partial = |m: &[f64], i: usize| terms.gradient(m)[i];
    for sweep in 1..=opts.max_iter {
        for i in 0..m.len() {
            let mut probe = m.to_vec();
            probe[i] = lo[i];
            if partial(&probe, i) <= 0.0 {
                return Err(SgError::BoundaryHit { index: i + 1, value: lo[i], lo: lo[i], hi: hi[i] });
            }
            probe[i] = hi[i];
            if partial(&probe, i) >= 0.0 {
                return Err(SgError::BoundaryHit { index: i + 1, value: hi[i], lo: lo[i], hi: hi[i] });
            }
            let (mut a, mut b) = (lo[i], hi[i]);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                probe[i] = mid;
                if partial(&probe, i) > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a <= f64::EPSILON * b {
                    break;
                }
            }
            m[i] = 0.5 * (a + b);
        }
        let g = terms.gradient(m);
        if g.iter().all(|x| x.abs() < opts.tol) {
            return Ok(sweep);
        }
    }
    Ok(opts.max_iter)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// `w_2 = lambda`, `w_n = (n-1)!` otherwise.
    Theorem2 { lambda: f64 },
    AlphaLt1 { alpha: f64 },
    AlphaGt1 { alpha: f64 },
}

/// `ln Gamma(N) = ln (N-1)!` by cumulative summation.
pub fn ln_gamma_int(big_n: usize) -> f64 {
    assert!(big_n >= 1);
    log_factorials(big_n - 1)[big_n - 1]
}

/// Predicted `ln Z_N`, with the error terms of each expansion dropped.
pub fn predict_logzn(regime: Regime, big_n: usize) -> Result<f64> {
    if big_n == 0 {
        return Err(SgError::Domain("N must be positive".into()));
    }
    let nf = big_n as f64;
    let lg = ln_gamma_int(big_n);
    match regime {
        Regime::Theorem2 { lambda } if lambda > 0.0 => Ok(lambda + lg),
        Regime::AlphaLt1 { alpha } if alpha > 0.0 && alpha < 1.0 => Ok(alpha * lg
            + nf.powf(1.0 - alpha)
            + (2f64.powf(alpha) - (1.0 - alpha) / 2.0) * nf.powf(1.0 - 2.0 * alpha)),
        Regime::AlphaGt1 { alpha } if alpha > 1.0 => Ok(alpha * lg),
        other => Err(SgError::Domain(format!("unsupported regime parameters {other:?}"))),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaussianLaw {
    /// Vertex degree `i + 1` whose count is predicted.
    pub degree: usize,
    pub center: f64,
    pub scale: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoissonLaw {
    pub degree: usize,
    pub mean: f64,
}

/// Independent limit laws of the degree counts `X_{i+1,N}`, `i <= K`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReferenceLaws {
    pub alpha: f64,
    pub n: usize,
    pub k: usize,
    pub gaussian: Vec<GaussianLaw>,
    pub poisson: Option<PoissonLaw>,
}

pub fn reference_laws(alpha: f64, big_n: usize, opts: &SolveOptions) -> Result<ReferenceLaws> {
    check_alpha(alpha)?;
    let k = k_value(alpha);
    let gaussian = if gaussian_dim(alpha) == 0 {
        Vec::new()
    } else {
        let sol = solve_mhat(alpha, big_n, opts)?;
        sol.mhat
            .iter()
            .zip(&sol.n_i)
            .enumerate()
            .map(|(idx, (&c, &n))| GaussianLaw {
                degree: idx + 2,
                center: c,
                scale: n.sqrt(),
            })
            .collect()
    };
    let poisson = if inverse_is_integral(alpha) {
        Some(PoissonLaw {
            degree: k + 1,
            mean: (alpha * ln_fact(k)).exp(),
        })
    } else {
        None
    };
    Ok(ReferenceLaws {
        alpha,
        n: big_n,
        k,
        gaussian,
        poisson,
    })
}

/// Explicit centring and scale of `X_{i+1,N}` (`i = 1, 2, 3`) without solving
/// for `mhat`. `refined` adds the second term of the centre. Returns `None`
/// outside the alpha range where the closed form is valid.
pub fn explicit_centering(alpha: f64, big_n: usize, i: usize, refined: bool) -> Option<(f64, f64)> {
    if !(1..=3).contains(&i) {
        return None;
    }
    let fi = i as f64;
    let lower = if refined { 1.0 / (fi + 4.0) } else { 1.0 / (fi + 2.0) };
    if !(alpha > lower && alpha < 1.0 / fi) {
        return None;
    }
    let nf = big_n as f64;
    let c = (alpha * ln_fact(i)).exp();
    let mut center = c * nf.powf(1.0 - fi * alpha);
    if refined {
        center -= (1.0 - fi * alpha) * c * nf.powf(1.0 - (fi + 1.0) * alpha);
    }
    let scale = c.sqrt() * nf.powf((1.0 - fi * alpha) / 2.0);
    Some((center, scale))
}

/// Everything the `predict` command reports for one `(alpha, N)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticPrediction {
    pub alpha: f64,
    pub n: usize,
    pub k: usize,
    pub n_i: Vec<f64>,
    pub mhat: Option<Vec<f64>>,
    pub mhat_first_order: Vec<f64>,
    pub poisson_mean: Option<f64>,
    pub beta: Option<f64>,
    pub log_z_prediction: f64,
    pub solver_error: Option<String>,
}

pub fn predict(alpha: f64, big_n: usize, opts: &SolveOptions) -> Result<AsymptoticPrediction> {
    if alpha > 1.0 {
        return Ok(AsymptoticPrediction {
            alpha,
            n: big_n,
            k: 0,
            n_i: Vec::new(),
            mhat: None,
            mhat_first_order: Vec::new(),
            poisson_mean: None,
            beta: None,
            log_z_prediction: predict_logzn(Regime::AlphaGt1 { alpha }, big_n)?,
            solver_error: None,
        });
    }
    check_alpha(alpha)?;
    let k = k_value(alpha);
    let n_i = (1..=k).map(|i| n_i_value(alpha, big_n, i)).collect::<Result<Vec<_>>>()?;
    let mhat_first = (1..=gaussian_dim(alpha))
        .map(|i| mhat_first_order(alpha, big_n, i))
        .collect::<Result<Vec<_>>>()?;
    let (mhat, beta, solver_error) = match solve_mhat(alpha, big_n, opts) {
        Ok(sol) => (Some(sol.mhat), Some(sol.f_max), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    Ok(AsymptoticPrediction {
        alpha,
        n: big_n,
        k,
        poisson_mean: inverse_is_integral(alpha).then(|| (alpha * ln_fact(k)).exp()),
        n_i,
        mhat,
        mhat_first_order: mhat_first,
        beta,
        log_z_prediction: predict_logzn(Regime::AlphaLt1 { alpha }, big_n)?,
        solver_error,
    })
}
