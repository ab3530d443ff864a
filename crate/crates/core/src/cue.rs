//! Trace statistics of Haar-random unitaries and the concentration bounds
//! used to certify the spectral-diameter search.
//!
//! `<|Tr U|^{2r}>` over `U(d)` equals `I(d, r)`, the number of permutations
//! of `r` elements without an increasing subsequence longer than `d`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{coherence_factor, haar_unitary, hermitian_eigen, identity, Unitary, C64, I};
use crate::rng::StreamSeed;

/// Largest `r` accepted by [`lis_count`].
pub const LIS_LIMIT: usize = 9;

/// Length of the longest strictly increasing subsequence.
pub fn lis_length(seq: &[usize]) -> usize {
    let mut tails: Vec<usize> = Vec::new();
    for &x in seq {
        match tails.binary_search(&x) {
            Ok(_) => {}
            Err(pos) if pos == tails.len() => tails.push(x),
            Err(pos) => tails[pos] = x,
        }
    }
    tails.len()
}

/// `I(d, r)` by enumerating all `r!` permutations.
pub fn lis_count(d: usize, r: usize) -> Result<u64> {
    if r > LIS_LIMIT {
        return Err(Error::TooLarge {
            size: r,
            limit: LIS_LIMIT,
        });
    }
    let mut perm: Vec<usize> = (0..r).collect();
    let mut count = 0u64;
    // Heap's algorithm.
    let mut c = vec![0usize; r];
    if lis_length(&perm) <= d {
        count += 1;
    }
    let mut i = 0;
    while i < r {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            if lis_length(&perm) <= d {
                count += 1;
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(count)
}

fn factorial(r: usize) -> f64 {
    (1..=r).map(|k| k as f64).product()
}

/// Evaluates `f` on `trials` Haar unitaries, one child stream per trial.
pub fn map_haar<T, F>(d: usize, trials: usize, seed: StreamSeed, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&Unitary, &mut crate::rng::SimRng) -> T + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.child(i as u64).rng();
            let u = haar_unitary(d, &mut rng);
            f(&u, &mut rng)
        })
        .collect()
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub d: usize,
    pub r: usize,
    pub trials: usize,
    /// Sample mean of `a^{2r}`.
    pub empirical: f64,
    pub stderr: f64,
    /// `r! / d^{2r}`.
    pub analytic: f64,
    /// `I(d, r) / d^{2r}` when `r` is small enough to enumerate.
    pub exact: Option<f64>,
}

/// Monte-Carlo estimate of `<a_U^{2r}>` over `U(d)`.
pub fn cue_moment<R: Rng + ?Sized>(d: usize, r: usize, trials: usize, rng: &mut R) -> Result<MomentReport> {
    if trials < 1000 {
        return Err(Error::InvalidArgument(format!("need at least 1000 trials, got {trials}")));
    }
    if d == 0 || r == 0 {
        return Err(Error::InvalidArgument("d and r must be positive".into()));
    }
    let seed = StreamSeed::draw(rng);
    let samples = map_haar(d, trials, seed, |u, _| coherence_factor(u).powi(2 * r as i32));
    let (empirical, stderr) = mean_and_stderr(&samples);
    let scale = (d as f64).powi(2 * r as i32);
    Ok(MomentReport {
        d,
        r,
        trials,
        empirical,
        stderr,
        analytic: factorial(r) / scale,
        exact: lis_count(d, r).ok().map(|i| i as f64 / scale),
    })
}

/// `r! / (d^{2r} e)`.
pub fn central_moment_bound(d: usize, r: usize) -> Result<f64> {
    if r < 2 {
        return Err(Error::InvalidArgument(format!("need r >= 2, got {r}")));
    }
    Ok(factorial(r) / ((d as f64).powi(2 * r as i32) * std::f64::consts::E))
}

/// Exact `r`-th central moment of `a^2`, expanded binomially over the
/// permutation counts `I(d, k)`.
pub fn exact_central_moment(d: usize, r: usize) -> Result<f64> {
    let d2 = (d as f64).powi(2);
    let mut total = 0.0;
    let mut binom = 1.0;
    for k in 0..=r {
        let raw = lis_count(d, r - k)? as f64 / d2.powi((r - k) as i32);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * binom * raw / d2.powi(k as i32);
        binom = binom * (r - k) as f64 / (k + 1) as f64;
    }
    Ok(total)
}

/// Sample `r`-th central moment of `a^2` and its standard error.
pub fn empirical_central_moment<R: Rng + ?Sized>(
    d: usize,
    r: usize,
    trials: usize,
    rng: &mut R,
) -> (f64, f64) {
    let seed = StreamSeed::draw(rng);
    let a2 = map_haar(d, trials, seed, |u, _| coherence_factor(u).powi(2));
    let (mean, _) = mean_and_stderr(&a2);
    let dev: Vec<f64> = a2.iter().map(|x| (x - mean).powi(r as i32)).collect();
    mean_and_stderr(&dev)
}

/// Parameters of a Bernstein-type tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSpec {
    pub sigma2: f64,
    pub c: f64,
    pub t: f64,
    pub n: u64,
    /// Moment cutoff.
    pub d: u32,
}

impl BoundSpec {
    pub fn new(sigma2: f64, c: f64, t: f64, n: u64, d: u32) -> Result<Self> {
        if !(sigma2 > 0.0 && c > 0.0 && t > 0.0) || n == 0 {
            return Err(Error::InvalidArgument(format!(
                "need sigma2, c, t, n > 0 (got {sigma2}, {c}, {t}, {n})"
            )));
        }
        Ok(Self { sigma2, c, t, n, d })
    }

    /// `c log(1 + c t / sigma^2)`, which must stay below 1 for the
    /// extended forms.
    pub fn constraint(&self) -> f64 {
        self.c * (self.c * self.t / self.sigma2).ln_1p()
    }
}

/// `h(x) = (1 + x) log(1 + x) - x`.
pub fn bennett_h(x: f64) -> f64 {
    (1.0 + x) * x.ln_1p() - x
}

/// `exp(-3 n t^2 / (2 (3 sigma^2 + c t)))`.
pub fn bernstein_bound(spec: &BoundSpec) -> f64 {
    let n = spec.n as f64;
    (-3.0 * n * spec.t * spec.t / (2.0 * (3.0 * spec.sigma2 + spec.c * spec.t))).exp()
}

/// `[c log(1+ct/sigma^2)]^{d+1} / (1 - c log(1+ct/sigma^2)) / (1 + ct/sigma^2)`.
pub fn extended_tail(spec: &BoundSpec) -> Result<f64> {
    let g = spec.constraint();
    if g.is_nan() || g >= 1.0 {
        return Err(Error::ConstraintViolated(g));
    }
    let x = spec.c * spec.t / spec.sigma2;
    Ok(g.powi(spec.d as i32 + 1) / (1.0 - g) / (1.0 + x))
}

/// `exp(-(sigma^2/c^2) h(ct/sigma^2))` plus the extended tail.
pub fn extended_bennett_bound(spec: &BoundSpec) -> Result<f64> {
    let tail = extended_tail(spec)?;
    let x = spec.c * spec.t / spec.sigma2;
    Ok((-(spec.sigma2 / (spec.c * spec.c)) * bennett_h(x)).exp() + tail)
}

/// `exp(-3 t^2 / (2 (3 sigma^2 + c t)))` plus the extended tail.
pub fn extended_bernstein_bound(spec: &BoundSpec) -> Result<f64> {
    let tail = extended_tail(spec)?;
    let first = (-3.0 * spec.t * spec.t / (2.0 * (3.0 * spec.sigma2 + spec.c * spec.t))).exp();
    Ok(first + tail)
}

/// The extended-Bernstein specialisation for `P{a_U^2 >= 1/2}` under CUE:
/// `sigma^2 = 1/d^2`, `c = 1/d`, `t = 1/2 - 1/d`, cutoff `d`.
pub fn cue_bound_spec(d: usize) -> Result<BoundSpec> {
    let df = d as f64;
    BoundSpec::new(1.0 / (df * df), 1.0 / df, 0.5 - 1.0 / df, 1, d as u32)
}

/// `exp(-3/4 (d-2)^2/(d+4)) + (L/d)^d L/(d - L) (2/d)^{d/2 - 1}`, `L = ln(d/2)`.
pub fn full_time_bound(d: f64) -> f64 {
    let l = (d / 2.0).ln();
    (-0.75 * (d - 2.0).powi(2) / (d + 4.0)).exp()
        + (l / d).powf(d) * l / (d - l) * (2.0 / d).powf(d / 2.0 - 1.0)
}

/// `exp(-(34 - 23 sqrt 2) d / 24) + exp(-(74 + 27 sqrt 2) d / 328)`.
pub fn half_time_bound(d: f64) -> f64 {
    let s = std::f64::consts::SQRT_2;
    (-(34.0 - 23.0 * s) * d / 24.0).exp() + (-(74.0 + 27.0 * s) * d / 328.0).exp()
}

/// Half eigenphases `theta_i / 2` in `(-pi/2, pi/2)` of a unitary, via the
/// Hermitian Cayley transform `-i (U - I)(U + I)^{-1}` whose eigenvalues
/// are `tan(theta_i / 2)`.
pub fn half_eigenphases(u: &Unitary) -> Result<Vec<f64>> {
    let d = u.dim();
    let id = identity(d);
    let inv = (u.matrix() + &id)
        .try_inverse()
        .ok_or_else(|| Error::Numerical("U + I is singular".into()))?;
    let h = (u.matrix() - &id) * inv * (-I);
    let (vals, _) = hermitian_eigen(&h);
    Ok(vals.into_iter().map(f64::atan).collect())
}

/// Exceedance frequencies compared against the analytic bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub d: usize,
    pub trials: usize,
    /// `P{a_U^2 >= 1/2}` over CUE.
    pub full_time_exceedance: f64,
    pub full_time_stderr: f64,
    pub full_time_bound: f64,
    /// `P{a^2 >= 1/2}` for `a = |sum_i s_i e^{i theta_i/2}| / d`, `s_i = +1`
    /// with probability 2/3.
    pub half_time_exceedance: f64,
    pub half_time_stderr: f64,
    /// `P{|X| >= 1/sqrt 2}` for `X = sum_i s_i / d`.
    pub parity_exceedance: f64,
    pub parity_stderr: f64,
    pub half_time_bound: f64,
}

impl ConcentrationReport {
    /// Whether every empirical frequency is below its bound plus three
    /// binomial standard errors (vacuous bounds `>= 1` always pass).
    pub fn within_bounds(&self) -> bool {
        let ok = |p: f64, bound: f64| {
            let se = (bound.min(1.0) * (1.0 - bound.min(1.0)) / self.trials as f64).sqrt();
            bound >= 1.0 || p <= bound + 3.0 * se
        };
        ok(self.full_time_exceedance, self.full_time_bound)
            && ok(self.half_time_exceedance, self.half_time_bound)
            && ok(self.parity_exceedance, self.half_time_bound)
    }
}

pub fn concentration_experiment<R: Rng + ?Sized>(
    d: usize,
    trials: usize,
    rng: &mut R,
) -> Result<ConcentrationReport> {
    if trials < 1000 {
        return Err(Error::InvalidArgument(format!("need at least 1000 trials, got {trials}")));
    }
    let seed = StreamSeed::draw(rng);
    let threshold = std::f64::consts::FRAC_1_SQRT_2;
    let rows = map_haar(d, trials, seed, |u, rng| -> Result<(bool, bool, bool)> {
        let full = coherence_factor(u).powi(2) >= 0.5;
        let halves = half_eigenphases(u)?;
        let mut sum = C64::new(0.0, 0.0);
        let mut parity = 0.0;
        for &h in &halves {
            let s = if rng.random::<f64>() < 2.0 / 3.0 { 1.0 } else { -1.0 };
            sum += C64::from_polar(s, h);
            let s2 = if rng.random::<f64>() < 2.0 / 3.0 { 1.0 } else { -1.0 };
            parity += s2;
        }
        let a = sum.norm() / d as f64;
        let x = parity / d as f64;
        Ok((full, a * a >= 0.5, x.abs() >= threshold))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let n = trials as f64;
    let freq = |sel: fn(&(bool, bool, bool)) -> bool| -> (f64, f64) {
        let p = rows.iter().filter(|r| sel(r)).count() as f64 / n;
        (p, (p * (1.0 - p) / n).sqrt())
    };
    let (full_p, full_se) = freq(|r| r.0);
    let (half_p, half_se) = freq(|r| r.1);
    let (par_p, par_se) = freq(|r| r.2);
    Ok(ConcentrationReport {
        d,
        trials,
        full_time_exceedance: full_p,
        full_time_stderr: full_se,
        full_time_bound: full_time_bound(d as f64),
        half_time_exceedance: half_p,
        half_time_stderr: half_se,
        parity_exceedance: par_p,
        parity_stderr: par_se,
        half_time_bound: half_time_bound(d as f64),
    })
}
