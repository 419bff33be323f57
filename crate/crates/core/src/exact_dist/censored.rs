use crate::error::{Error, Result};
use crate::exact_dist::DiscreteDist;
use crate::scalar::Scalar;

/// Linear piece `intercept + slope * t` on `[start, end]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment<S: Scalar> {
    pub start: S,
    pub end: S,
    pub intercept: S,
    pub slope: S,
}

/// Piecewise-linear coefficient `q(t) = E[(t ∧ f(V)) + 1 - f(V)]` of one stratum.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficient<S: Scalar> {
    segments: Vec<Segment<S>>,
}

impl<S: Scalar> Coefficient<S> {
    /// Builds `q` for a stratum value law supported in `[0,1]`, split at `breakpoints`.
    pub fn from_values(values: &DiscreteDist<S>, breakpoints: &[S]) -> Result<Self> {
        if values.min().is_negative() || *values.max() > S::one() {
            return Err(Error::Range(format!("values span [{}, {}]", values.min(), values.max())));
        }
        let constant = values.expect_with(|v| S::one() - v.clone());
        let segments = breakpoints
            .windows(2)
            .map(|w| {
                let (start, end) = (w[0].clone(), w[1].clone());
                let mut intercept = constant.clone();
                let mut slope = S::zero();
                for (v, p) in values.iter() {
                    if *v <= start {
                        intercept = intercept + p.clone() * v.clone();
                    } else {
                        slope = slope + p.clone();
                    }
                }
                Segment { start, end, intercept, slope }
            })
            .collect();
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment<S>] {
        &self.segments
    }

    pub fn to_f64(&self) -> Coefficient<f64> {
        let segments = self
            .segments
            .iter()
            .map(|s| Segment {
                start: s.start.to_f64_lossy(),
                end: s.end.to_f64_lossy(),
                intercept: s.intercept.to_f64_lossy(),
                slope: s.slope.to_f64_lossy(),
            })
            .collect();
        Coefficient { segments }
    }

    /// `q(t)` for `t` in `[0,1]`; clamped outside.
    pub fn eval(&self, t: &S) -> S {
        let seg = self
            .segments
            .iter()
            .find(|s| *t <= s.end)
            .unwrap_or_else(|| self.segments.last().expect("at least one segment"));
        let t = S::max_of(S::min_of(t.clone(), seg.end.clone()), seg.start.clone());
        seg.intercept.clone() + seg.slope.clone() * t
    }
}

/// Exact CDF `t ↦ ∏_B q^B(t)^{k_B}` of the censored supremum estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct CensoredSupCdf<S: Scalar> {
    breakpoints: Vec<S>,
    factors: Vec<(Coefficient<S>, usize)>,
}

impl<S: Scalar> CensoredSupCdf<S> {
    pub(crate) fn new(breakpoints: Vec<S>, factors: Vec<(Coefficient<S>, usize)>) -> Self {
        Self { breakpoints, factors }
    }

    /// `{0, 1}` together with every value of the integrand, increasing.
    pub fn breakpoints(&self) -> &[S] {
        &self.breakpoints
    }

    /// Per-stratum coefficients and their exponents `k_B`.
    pub fn factors(&self) -> &[(Coefficient<S>, usize)] {
        &self.factors
    }

    /// `P(W <= t)`.
    pub fn eval(&self, t: &S) -> S {
        if t.is_negative() {
            return S::zero();
        }
        if *t >= S::one() {
            return S::one();
        }
        self.factors.iter().fold(S::one(), |acc, (q, k)| acc * q.eval(t).powu(*k))
    }

    pub fn to_f64(&self) -> CensoredSupCdf<f64> {
        CensoredSupCdf {
            breakpoints: self.breakpoints.iter().map(S::to_f64_lossy).collect(),
            factors: self.factors.iter().map(|(q, k)| (q.to_f64(), *k)).collect(),
        }
    }

    /// Probability that no threshold is accepted (the estimator returns 0).
    pub fn atom_at_zero(&self) -> S {
        self.eval(&S::zero())
    }

    /// Breakpoints plus `per_segment` evenly spaced interior points per segment.
    pub fn grid(&self, per_segment: usize) -> Vec<S> {
        let mut out = Vec::with_capacity(self.breakpoints.len() * (per_segment + 1));
        let denom = S::from_count(per_segment + 1);
        for w in self.breakpoints.windows(2) {
            out.push(w[0].clone());
            let width = w[1].clone() - w[0].clone();
            for i in 1..=per_segment {
                out.push(w[0].clone() + width.clone() * S::from_count(i) / denom.clone());
            }
        }
        out.extend(self.breakpoints.last().cloned());
        out
    }
}
