use std::cmp::Ordering;
use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Finite distribution: strictly increasing support, positive probabilities
/// summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDist<S: Scalar> {
    support: Vec<S>,
    probs: Vec<S>,
}

fn cmp<S: Scalar>(a: &S, b: &S) -> Ordering {
    a.partial_cmp(b).expect("scalars must be totally ordered (no NaN)")
}

impl<S: Scalar> DiscreteDist<S> {
    /// Builds a distribution from arbitrary `(value, probability)` pairs:
    /// equal values merge, zero-probability values are dropped.
    pub fn from_pairs(pairs: Vec<(S, S)>) -> Result<Self> {
        let dist = Self::collect(pairs);
        if dist.probs.iter().any(|p| p.is_negative()) {
            return Err(Error::InvalidDistribution("negative probability".into()));
        }
        let total = dist.probs.iter().fold(S::zero(), |acc, p| acc + p.clone());
        if !total.eq_tol(&S::one()) {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        if dist.support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        Ok(dist)
    }

    /// Merges and sorts without validating the total.
    pub(crate) fn collect(mut pairs: Vec<(S, S)>) -> Self {
        pairs.sort_by(|a, b| cmp(&a.0, &b.0));
        let mut support: Vec<S> = Vec::with_capacity(pairs.len());
        let mut probs: Vec<S> = Vec::with_capacity(pairs.len());
        for (x, p) in pairs {
            match support.last() {
                Some(last) if last.eq_tol(&x) => {
                    let merged = probs.pop().expect("parallel vectors") + p;
                    probs.push(merged);
                }
                _ => {
                    support.push(x);
                    probs.push(p);
                }
            }
        }
        let (support, probs) = support.into_iter().zip(probs).filter(|(_, p)| !p.is_zero()).unzip();
        Self { support, probs }
    }

    pub fn point_mass(x: S) -> Self {
        Self { support: vec![x], probs: vec![S::one()] }
    }

    /// Bernoulli(p) on `{0, 1}`.
    pub fn bernoulli(p: S) -> Self {
        Self::collect(vec![(S::zero(), S::one() - p.clone()), (S::one(), p)])
    }

    pub fn support(&self) -> &[S] {
        &self.support
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&S, &S)> {
        self.support.iter().zip(&self.probs)
    }

    pub fn min(&self) -> &S {
        self.support.first().expect("non-empty support")
    }

    pub fn max(&self) -> &S {
        self.support.last().expect("non-empty support")
    }

    pub fn expect_with(&self, mut g: impl FnMut(&S) -> S) -> S {
        self.iter().fold(S::zero(), |acc, (x, p)| acc + p.clone() * g(x))
    }

    pub fn mean(&self) -> S {
        self.expect_with(|x| x.clone())
    }

    pub fn variance(&self) -> S {
        let m = self.mean();
        self.expect_with(|x| {
            let d = x.clone() - m.clone();
            d.clone() * d
        })
    }

    /// `P(X <= t)`.
    pub fn cdf(&self, t: &S) -> S {
        self.iter().take_while(|(x, _)| *x <= t).fold(S::zero(), |acc, (_, p)| acc + p.clone())
    }

    /// `P(X < t)`.
    pub fn cdf_left(&self, t: &S) -> S {
        self.iter().take_while(|(x, _)| *x < t).fold(S::zero(), |acc, (_, p)| acc + p.clone())
    }

    /// Stop-loss transform `E[(X - t)_+]`.
    pub fn stop_loss(&self, t: &S) -> S {
        self.iter()
            .filter(|(x, _)| *x > t)
            .fold(S::zero(), |acc, (x, p)| acc + p.clone() * (x.clone() - t.clone()))
    }

    /// Law of `c * X`.
    pub fn scale(&self, c: &S) -> Self {
        Self::collect(self.iter().map(|(x, p)| (x.clone() * c.clone(), p.clone())).collect())
    }

    /// Law of `X + Y` for independent `X ~ self`, `Y ~ other`.
    pub fn convolve(&self, other: &Self, cap: usize) -> Result<Self> {
        let mut pairs = Vec::with_capacity(self.len() * other.len());
        for (x, p) in self.iter() {
            for (y, q) in other.iter() {
                pairs.push((x.clone() + y.clone(), p.clone() * q.clone()));
            }
        }
        let out = Self::collect(pairs);
        if out.len() > cap {
            return Err(Error::SupportCap { size: out.len(), cap });
        }
        Ok(out)
    }

    /// Law of the sum of `k` independent copies (`k = 0` gives a point mass at 0).
    pub fn convolve_power(&self, k: usize, cap: usize) -> Result<Self> {
        let mut acc = Self::point_mass(S::zero());
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.convolve(&base, cap)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.convolve(&base, cap)?;
            }
        }
        Ok(acc)
    }

    /// Weighted mixture; weights must sum to one.
    pub fn mixture(components: &[(&Self, S)]) -> Result<Self> {
        let pairs = components
            .iter()
            .flat_map(|(d, w)| d.iter().map(move |(x, p)| (x.clone(), p.clone() * w.clone())))
            .collect();
        Self::from_pairs(pairs)
    }

    /// Law of the maximum of independent draws, `k_i` copies of each component.
    pub fn max_of_independent(components: &[(&Self, usize)]) -> Self {
        let mut points: Vec<S> = components.iter().flat_map(|(d, _)| d.support.iter().cloned()).collect();
        points.sort_by(cmp);
        points.dedup_by(|a, b| a.eq_tol(b));
        let mut prev = S::zero();
        let mut pairs = Vec::with_capacity(points.len());
        for t in points {
            let c = components.iter().fold(S::one(), |acc, (d, k)| acc * d.cdf(&t).powu(*k));
            pairs.push((t, c.clone() - prev));
            prev = c;
        }
        Self::collect(pairs)
    }

    pub fn to_f64(&self) -> DiscreteDist<f64> {
        DiscreteDist {
            support: self.support.iter().map(S::to_f64_lossy).collect(),
            probs: self.probs.iter().map(S::to_f64_lossy).collect(),
        }
    }

    /// CSV with columns `value,probability,probability_decimal`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["value", "probability", "probability_decimal"])?;
        for (x, p) in self.iter() {
            w.write_record([x.to_string(), p.to_string(), format!("{}", p.to_f64_lossy())])?;
        }
        w.flush()?;
        Ok(())
    }
}
