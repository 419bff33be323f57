//! Exact finite-sample laws of the stratified estimators for step-function
//! integrands.
//!
//! Everything here is generic over [`Scalar`]; with `BigRational` the results
//! are exact, which is what the order tests in [`crate::orders`] rely on.

mod censored;
mod discrete;

pub use censored::{CensoredSupCdf, Coefficient, Segment};
pub use discrete::DiscreteDist;

use crate::error::{Error, Result};
use crate::function_model::{NoiseSpec, PiecewiseConstantFn};
use crate::measure_space::{Partition, Stratum};
use crate::scalar::Scalar;

/// Default bound on the support size of convolved laws.
pub const DEFAULT_SUPPORT_CAP: usize = 1_000_000;

/// Law of the stratified supremum estimator:
/// `P(W <= t) = ∏_B P(f(U) <= t | U in B)^{k_B}`.
pub fn dist_sup<S: Scalar>(f: &PiecewiseConstantFn<S>, p: &Partition<S>) -> Result<DiscreteDist<S>> {
    let laws = stratum_laws(f, p)?;
    let parts: Vec<(&DiscreteDist<S>, usize)> = laws.iter().zip(p.strata()).map(|(d, s)| (d, s.allocation())).collect();
    Ok(DiscreteDist::max_of_independent(&parts))
}

/// `q^B(t) = E[(t ∧ f(V)) + 1 - f(V)]`, `V` uniform on the stratum.
pub fn q_coefficient<S: Scalar>(f: &PiecewiseConstantFn<S>, stratum: &Stratum<S>, t: &S) -> Result<S> {
    f.require_unit_range()?;
    if t.is_negative() || *t > S::one() {
        return Err(Error::Range(format!("threshold {t} outside [0,1]")));
    }
    let law = f.stratum_value_dist(stratum)?;
    Ok(law.expect_with(|v| S::min_of(t.clone(), v.clone()) + S::one() - v.clone()))
}

/// Exact CDF of the censored supremum estimator.
pub fn cdf_sup_censored<S: Scalar>(f: &PiecewiseConstantFn<S>, p: &Partition<S>) -> Result<CensoredSupCdf<S>> {
    f.require_unit_range()?;
    let mut breakpoints = f.values();
    breakpoints.push(S::zero());
    breakpoints.push(S::one());
    breakpoints.sort_by(|a, b| a.partial_cmp(b).expect("ordered scalars"));
    breakpoints.dedup_by(|a, b| a.eq_tol(b));
    let factors = p
        .strata()
        .iter()
        .map(|s| Ok((Coefficient::from_values(&f.stratum_value_dist(s)?, &breakpoints)?, s.allocation())))
        .collect::<Result<Vec<_>>>()?;
    Ok(CensoredSupCdf::new(breakpoints, factors))
}

/// Law of the noiseless stratified integral estimator.
pub fn dist_integral<S: Scalar>(f: &PiecewiseConstantFn<S>, p: &Partition<S>) -> Result<DiscreteDist<S>> {
    dist_integral_capped(f, p, DEFAULT_SUPPORT_CAP)
}

pub fn dist_integral_capped<S: Scalar>(f: &PiecewiseConstantFn<S>, p: &Partition<S>, cap: usize) -> Result<DiscreteDist<S>> {
    let mut total = DiscreteDist::point_mass(S::zero());
    for (law, s) in stratum_laws(f, p)?.iter().zip(p.strata()) {
        total = total.convolve(&law.convolve_power(s.allocation(), cap)?, cap)?;
    }
    Ok(total.scale(&(S::one() / S::from_count(p.n()))))
}

/// Law of the noisy integral estimator when the noise has finite support.
pub fn dist_integral_noisy<S: Scalar>(f: &PiecewiseConstantFn<S>, p: &Partition<S>, noise: &NoiseSpec<S>) -> Result<DiscreteDist<S>> {
    let clean = dist_integral(f, p)?;
    match noise {
        NoiseSpec::None => Ok(clean),
        NoiseSpec::Gaussian(v) if v.is_zero() => Ok(clean),
        NoiseSpec::Gaussian(_) => Err(Error::Precondition("Gaussian noise has no finite-support law".into())),
        NoiseSpec::SymmetricTwoPoint(c) => {
            let n = S::from_count(p.n());
            let step = c.clone() / n;
            let half = S::from_ratio(1, 2);
            let one = DiscreteDist::collect(vec![(-step.clone(), half.clone()), (step, half)]);
            clean.convolve(&one.convolve_power(p.n(), DEFAULT_SUPPORT_CAP)?, DEFAULT_SUPPORT_CAP)
        }
    }
}

/// Law of the censored integral estimator: `1/n` times a Poisson-binomial
/// count with `k_B` trials of success probability `E[f | B]`.
pub fn dist_integral_censored<S: Scalar>(f: &PiecewiseConstantFn<S>, p: &Partition<S>) -> Result<DiscreteDist<S>> {
    f.require_unit_range()?;
    let mut probs = Vec::with_capacity(p.n());
    for s in p.strata() {
        let m = f.stratum_mean(s)?;
        probs.extend(std::iter::repeat_n(m, s.allocation()));
    }
    poisson_binomial_average(&probs)
}

/// Law of `(1/n) Σ ξ_i` for independent `ξ_i ~ Bernoulli(probs[i])`.
pub fn poisson_binomial_average<S: Scalar>(probs: &[S]) -> Result<DiscreteDist<S>> {
    if probs.is_empty() {
        return Err(Error::Precondition("no Bernoulli parameters".into()));
    }
    if let Some(bad) = probs.iter().find(|p| p.is_negative() || **p > S::one()) {
        return Err(Error::Range(format!("Bernoulli parameter {bad}")));
    }
    // counts[j] = P(j successes so far)
    let mut counts = vec![S::one()];
    for p in probs {
        let fail = S::one() - p.clone();
        let mut next = vec![S::zero(); counts.len() + 1];
        for (j, c) in counts.iter().enumerate() {
            next[j] = next[j].clone() + c.clone() * fail.clone();
            next[j + 1] = next[j + 1].clone() + c.clone() * p.clone();
        }
        counts = next;
    }
    let n = S::from_count(probs.len());
    DiscreteDist::from_pairs(counts.into_iter().enumerate().map(|(j, c)| (S::from_count(j) / n.clone(), c)).collect())
}

/// `Var[W_IE] = (1/n) (Σ_B (k_B/n) Var[f | B] + σ²)`.
pub fn variance_integral_noisy<S: Scalar>(f: &PiecewiseConstantFn<S>, p: &Partition<S>, noise_variance: &S) -> Result<S> {
    if noise_variance.is_negative() {
        return Err(Error::Precondition(format!("negative noise variance {noise_variance}")));
    }
    let n = S::from_count(p.n());
    let mut within = S::zero();
    for s in p.strata() {
        within = within + s.mass().clone() * f.stratum_variance(s)?;
    }
    Ok((within + noise_variance.clone()) / n)
}

/// `E|X - center|^power` for an integer power, exactly.
pub fn lp_loss_exact<S: Scalar>(dist: &DiscreteDist<S>, center: &S, power: usize) -> S {
    dist.expect_with(|x| (x.clone() - center.clone()).abs().powu(power))
}

/// `E|X - center|^power` for any real `power >= 1`.
pub fn lp_loss<S: Scalar>(dist: &DiscreteDist<S>, center: &S, power: f64) -> f64 {
    let c = center.to_f64_lossy();
    dist.iter().map(|(x, p)| p.to_f64_lossy() * (x.to_f64_lossy() - c).abs().powf(power)).sum()
}

fn stratum_laws<S: Scalar>(f: &PiecewiseConstantFn<S>, p: &Partition<S>) -> Result<Vec<DiscreteDist<S>>> {
    if f.dim() != p.dim() {
        return Err(Error::Dimension { expected: p.dim(), got: f.dim() });
    }
    p.strata()
        .iter()
        .enumerate()
        .map(|(i, s)| f.stratum_value_dist(s).map_err(|e| if matches!(e, Error::ZeroMass(_)) { Error::ZeroMass(i) } else { e }))
        .collect()
}
