//! Seeded Monte Carlo realizations of the five stratified estimators.
//!
//! Sample `j` of stratum `B` is drawn uniformly from the stratum (in
//! probability coordinates) and handed to the integrand, which applies the
//! base measure's quantile maps if it models a physical function. Draws run
//! stratum by stratum in index order, so one RNG stream fixes a realization.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_model::{Integrand, NoiseSpec};
use crate::measure_space::{BaseMeasure, FloatBox, Partition};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    /// Largest observed value.
    #[serde(rename = "SUP")]
    Sup,
    /// Largest accepted threshold under censored observation.
    #[serde(rename = "CSUP")]
    CensoredSup,
    #[serde(rename = "INT")]
    Integral,
    /// Integral from values observed with additive noise.
    #[serde(rename = "INT_NOISY")]
    IntegralNoisy,
    /// Fraction of accepted thresholds.
    #[serde(rename = "CINT")]
    CensoredIntegral,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::Sup,
        EstimatorKind::CensoredSup,
        EstimatorKind::Integral,
        EstimatorKind::IntegralNoisy,
        EstimatorKind::CensoredIntegral,
    ];

    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Sup => "SUP",
            EstimatorKind::CensoredSup => "CSUP",
            EstimatorKind::Integral => "INT",
            EstimatorKind::IntegralNoisy => "INT_NOISY",
            EstimatorKind::CensoredIntegral => "CINT",
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, EstimatorKind::CensoredSup | EstimatorKind::CensoredIntegral)
    }

    pub fn targets_sup(self) -> bool {
        matches!(self, EstimatorKind::Sup | EstimatorKind::CensoredSup)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown estimator `{s}`")))
    }
}

/// What a draw revealed about `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observation {
    Value { value: f64 },
    /// Only the threshold and whether `threshold <= f(V)`.
    Censored { threshold: f64, accepted: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawRecord {
    pub stratum: usize,
    pub sample_index: usize,
    pub point: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    pub observation: Observation,
}

/// Floating-point sampler for the strata of a partition.
#[derive(Clone, Debug)]
pub struct PartitionSampler {
    dim: usize,
    n: usize,
    strata: Vec<SamplerStratum>,
}

#[derive(Clone, Debug)]
struct SamplerStratum {
    boxes: Vec<FloatBox>,
    /// Cumulative box volumes normalized to end at 1.
    cumulative: Vec<f64>,
    indices: Vec<usize>,
}

impl PartitionSampler {
    pub fn new<S: Scalar>(p: &Partition<S>) -> Self {
        let strata = p
            .strata()
            .iter()
            .zip(p.index_partition())
            .map(|(s, idx)| {
                let boxes: Vec<FloatBox> = s.boxes().iter().map(|b| b.to_f64()).collect();
                let total = s.mass().to_f64_lossy();
                let mut acc = 0.0;
                let mut cumulative: Vec<f64> = s
                    .boxes()
                    .iter()
                    .map(|b| {
                        acc += b.volume().to_f64_lossy() / total;
                        acc
                    })
                    .collect();
                if let Some(last) = cumulative.last_mut() {
                    *last = 1.0;
                }
                SamplerStratum { boxes, cumulative, indices: idx.clone() }
            })
            .collect();
        Self { dim: p.dim(), n: p.n(), strata }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.strata.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strata.is_empty()
    }

    /// Uniform point of stratum `i`: a box picked by volume, then each
    /// coordinate uniform on `(lo, hi]`.
    pub fn sample<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Vec<f64> {
        let s = &self.strata[i];
        let pick: f64 = rng.random();
        let b = s.cumulative.iter().position(|&c| pick < c).unwrap_or(s.boxes.len() - 1);
        let b = &s.boxes[b];
        (0..self.dim)
            .map(|j| {
                let u: f64 = rng.random();
                b.upper[j] - (b.upper[j] - b.lower[j]) * u
            })
            .collect()
    }

    /// Uniform point of stratum `i` by rejection from the whole cube.
    pub fn sample_rejection<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Vec<f64> {
        loop {
            let u: Vec<f64> = (0..self.dim).map(|_| 1.0 - rng.random::<f64>()).collect();
            if self.strata[i].boxes.iter().any(|b| b.contains(&u)) {
                return u;
            }
        }
    }

    pub fn contains(&self, i: usize, u: &[f64]) -> bool {
        self.strata[i].boxes.iter().any(|b| b.contains(u))
    }
}

/// Indicator access to an integrand: the censored estimators see `f` only
/// through this type.
struct Censored<'a, F: Integrand + ?Sized> {
    f: &'a F,
    base: &'a BaseMeasure,
}

impl<F: Integrand + ?Sized> Censored<'_, F> {
    fn accepts(&self, u: &[f64], threshold: f64) -> bool {
        threshold <= self.f.value(u, self.base)
    }
}

/// Running mean; exact when every term is equal.
#[derive(Default)]
struct Mean {
    value: f64,
    count: usize,
}

impl Mean {
    fn push(&mut self, x: f64) {
        self.count += 1;
        self.value += (x - self.value) / self.count as f64;
    }
}

fn check_dims<F: Integrand + ?Sized>(f: &F, sampler: &PartitionSampler, base: &BaseMeasure) -> Result<()> {
    if f.dim() != sampler.dim() {
        return Err(Error::Dimension { expected: sampler.dim(), got: f.dim() });
    }
    if base.dim() != sampler.dim() {
        return Err(Error::Dimension { expected: sampler.dim(), got: base.dim() });
    }
    Ok(())
}

fn check_kind<F: Integrand + ?Sized>(kind: EstimatorKind, f: &F) -> Result<()> {
    if kind.is_censored() && !f.unit_range() {
        return Err(Error::Range("censored estimators need an integrand declared in [0,1]".into()));
    }
    Ok(())
}

/// One realization of `kind`; the caller has validated dimensions and range.
fn realize<F, S, R>(
    kind: EstimatorKind,
    f: &F,
    sampler: &PartitionSampler,
    base: &BaseMeasure,
    noise: &NoiseSpec<S>,
    rng: &mut R,
    mut trace: Option<&mut Vec<DrawRecord>>,
) -> f64
where
    F: Integrand + ?Sized,
    S: Scalar,
    R: Rng + ?Sized,
{
    let censored = Censored { f, base };
    let mut sup = f64::NEG_INFINITY;
    let mut accepted_max = 0.0f64;
    let mut mean = Mean::default();
    for (i, stratum) in sampler.strata.iter().enumerate() {
        for &j in &stratum.indices {
            let u = sampler.sample(i, rng);
            let (observation, eps) = match kind {
                EstimatorKind::Sup | EstimatorKind::Integral => {
                    let v = f.value(&u, base);
                    sup = sup.max(v);
                    mean.push(v);
                    (Observation::Value { value: v }, None)
                }
                EstimatorKind::IntegralNoisy => {
                    let v = f.value(&u, base);
                    let e = noise.sample(rng);
                    mean.push(v + e);
                    (Observation::Value { value: v }, Some(e))
                }
                EstimatorKind::CensoredSup | EstimatorKind::CensoredIntegral => {
                    let t: f64 = 1.0 - rng.random::<f64>();
                    let accepted = censored.accepts(&u, t);
                    if accepted {
                        accepted_max = accepted_max.max(t);
                    }
                    mean.push(if accepted { 1.0 } else { 0.0 });
                    (Observation::Censored { threshold: t, accepted }, None)
                }
            };
            if let Some(records) = trace.as_deref_mut() {
                records.push(DrawRecord { stratum: i, sample_index: j, point: u, noise: eps, observation });
            }
        }
    }
    let w = match kind {
        EstimatorKind::Sup => sup,
        EstimatorKind::CensoredSup => accepted_max,
        _ => mean.value,
    };
    if kind.targets_sup() {
        if let Some(bound) = f.ess_sup_hint() {
            assert!(w <= bound, "{kind} realization {w} exceeds the essential supremum {bound}");
        }
    }
    w
}

/// One realization of `kind` together with every draw it made.
pub fn estimate_traced<F, S, R>(
    kind: EstimatorKind,
    f: &F,
    p: &Partition<S>,
    base: &BaseMeasure,
    noise: &NoiseSpec<S>,
    rng: &mut R,
) -> Result<(f64, Vec<DrawRecord>)>
where
    F: Integrand + ?Sized,
    S: Scalar,
    R: Rng + ?Sized,
{
    let sampler = PartitionSampler::new(p);
    check_dims(f, &sampler, base)?;
    check_kind(kind, f)?;
    let mut records = Vec::with_capacity(p.n());
    let w = realize(kind, f, &sampler, base, noise, rng, Some(&mut records));
    Ok((w, records))
}

fn estimate<F, S, R>(kind: EstimatorKind, f: &F, p: &Partition<S>, base: &BaseMeasure, noise: &NoiseSpec<S>, rng: &mut R) -> Result<f64>
where
    F: Integrand + ?Sized,
    S: Scalar,
    R: Rng + ?Sized,
{
    let sampler = PartitionSampler::new(p);
    check_dims(f, &sampler, base)?;
    check_kind(kind, f)?;
    Ok(realize(kind, f, &sampler, base, noise, rng, None))
}

/// `max_B max_{j in B*} f(V_j)`.
pub fn estimate_sup<F, S, R>(f: &F, p: &Partition<S>, base: &BaseMeasure, rng: &mut R) -> Result<f64>
where
    F: Integrand + ?Sized,
    S: Scalar,
    R: Rng + ?Sized,
{
    estimate(EstimatorKind::Sup, f, p, base, &NoiseSpec::None, rng)
}

/// Largest threshold `T_j` with `T_j <= f(V_j)`, or 0 when none is accepted.
pub fn estimate_sup_censored<F, S, R>(f: &F, p: &Partition<S>, base: &BaseMeasure, rng: &mut R) -> Result<f64>
where
    F: Integrand + ?Sized,
    S: Scalar,
    R: Rng + ?Sized,
{
    estimate(EstimatorKind::CensoredSup, f, p, base, &NoiseSpec::None, rng)
}

/// `(1/n) Σ_j (f(V_j) + ε_j)`; noiseless when `noise` is `None`.
pub fn estimate_integral<F, S, R>(f: &F, p: &Partition<S>, base: &BaseMeasure, noise: &NoiseSpec<S>, rng: &mut R) -> Result<f64>
where
    F: Integrand + ?Sized,
    S: Scalar,
    R: Rng + ?Sized,
{
    let kind = if noise.is_none() { EstimatorKind::Integral } else { EstimatorKind::IntegralNoisy };
    estimate(kind, f, p, base, noise, rng)
}

/// `(1/n) Σ_j 1{T_j <= f(V_j)}`.
pub fn estimate_integral_censored<F, S, R>(f: &F, p: &Partition<S>, base: &BaseMeasure, rng: &mut R) -> Result<f64>
where
    F: Integrand + ?Sized,
    S: Scalar,
    R: Rng + ?Sized,
{
    estimate(EstimatorKind::CensoredIntegral, f, p, base, &NoiseSpec::None, rng)
}

/// RNG for replicate `r`: the seed picks the key, `r` the stream.
pub fn replicate_rng(seed: u64, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    rng
}

/// `R` independent realizations, identical for any thread count.
#[derive(Clone, Debug, PartialEq)]
pub struct Replication {
    pub kind: EstimatorKind,
    pub partition_id: String,
    pub n: usize,
    pub seed: u64,
    pub noise: serde_json::Value,
    pub values: Vec<f64>,
    pub draws: Option<Vec<Vec<DrawRecord>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReplicationMeta {
    pub kind: EstimatorKind,
    pub seed: u64,
    pub n: usize,
    pub partition_id: String,
    pub noise: serde_json::Value,
    pub replicates: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn replicate<F, S>(
    kind: EstimatorKind,
    f: &F,
    p: &Partition<S>,
    base: &BaseMeasure,
    noise: &NoiseSpec<S>,
    seed: u64,
    replicates: usize,
    keep_draws: bool,
) -> Result<Replication>
where
    F: Integrand + ?Sized,
    S: Scalar,
{
    if replicates == 0 {
        return Err(Error::Precondition("at least one replicate is required".into()));
    }
    let sampler = PartitionSampler::new(p);
    check_dims(f, &sampler, base)?;
    check_kind(kind, f)?;
    let noise_used = if kind == EstimatorKind::IntegralNoisy { noise.clone() } else { NoiseSpec::None };
    let runs: Vec<(f64, Option<Vec<DrawRecord>>)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r);
            if keep_draws {
                let mut records = Vec::with_capacity(sampler.n());
                let w = realize(kind, f, &sampler, base, &noise_used, &mut rng, Some(&mut records));
                (w, Some(records))
            } else {
                (realize(kind, f, &sampler, base, &noise_used, &mut rng, None), None)
            }
        })
        .collect();
    let (values, draws): (Vec<f64>, Vec<Option<Vec<DrawRecord>>>) = runs.into_iter().unzip();
    Ok(Replication {
        kind,
        partition_id: p.id(),
        n: p.n(),
        seed,
        noise: serde_json::to_value(&noise_used)?,
        values,
        draws: if keep_draws { draws.into_iter().collect() } else { None },
    })
}

impl Replication {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sample variance with divisor `R`.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / self.values.len() as f64
    }

    /// `mean |W - center|^power`.
    pub fn lp_loss(&self, center: f64, power: f64) -> f64 {
        self.values.iter().map(|x| (x - center).abs().powf(power)).sum::<f64>() / self.values.len() as f64
    }

    /// Fraction of realizations `<= t`.
    pub fn empirical_cdf(&self, t: f64) -> f64 {
        self.values.iter().filter(|&&x| x <= t).count() as f64 / self.values.len() as f64
    }

    pub fn metadata(&self) -> ReplicationMeta {
        ReplicationMeta {
            kind: self.kind,
            seed: self.seed,
            n: self.n,
            partition_id: self.partition_id.clone(),
            noise: self.noise.clone(),
            replicates: self.values.len(),
        }
    }

    /// CSV with columns `replicate,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["replicate", "value"])?;
        for (r, v) in self.values.iter().enumerate() {
            w.write_record([r.to_string(), format!("{v:?}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_metadata_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.metadata())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_model::{FunctionOracle, PiecewiseConstantFn};
    use crate::measure_space::{coarsest_partition, finest_partition, AxisBox, Marginal};
    use crate::scalar::ratio;
    use num_rational::BigRational as Q;

    fn q(n: i64, d: i64) -> Q {
        ratio(n, d)
    }

    fn example_f() -> PiecewiseConstantFn<Q> {
        PiecewiseConstantFn::step_1d(&[q(1, 2), q(3, 4)], vec![q(4, 1), q(2, 1), q(6, 1)]).unwrap()
    }

    fn halves() -> Partition<Q> {
        finest_partition(2, &[vec![q(1, 2)]]).unwrap()
    }

    fn base1() -> BaseMeasure {
        BaseMeasure::uniform(1)
    }

    #[test]
    fn constant_integrand_is_reproduced_exactly() {
        let f = PiecewiseConstantFn::constant(2, q(1, 10));
        let p = coarsest_partition::<Q>(7, 2);
        let base = BaseMeasure::uniform(2);
        for seed in 0..20 {
            let mut rng = replicate_rng(seed, 0);
            assert_eq!(estimate_sup(&f, &p, &base, &mut rng).unwrap(), 0.1);
            assert_eq!(estimate_integral(&f, &p, &base, &NoiseSpec::None, &mut rng).unwrap(), 0.1);
        }
    }

    #[test]
    fn sup_on_halves_takes_values_four_or_six() {
        let f = example_f();
        let mut seen = std::collections::BTreeSet::new();
        let mut rng = replicate_rng(3, 0);
        for _ in 0..400 {
            let w = estimate_sup(&f, &halves(), &base1(), &mut rng).unwrap();
            assert!(w == 4.0 || w == 6.0, "{w}");
            seen.insert(w as i64);
        }
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn integral_on_halves_takes_values_three_or_five() {
        let f = example_f();
        let rep = replicate(EstimatorKind::Integral, &f, &halves(), &base1(), &NoiseSpec::None, 11, 2000, false).unwrap();
        assert!(rep.values.iter().all(|&w| w == 3.0 || w == 5.0));
        let fives = rep.values.iter().filter(|&&w| w == 5.0).count() as f64 / 2000.0;
        assert!((fives - 0.5).abs() < 0.05);
    }

    #[test]
    fn integral_on_coarsest_takes_values_two_to_six() {
        let f = example_f();
        let p = coarsest_partition::<Q>(2, 1);
        let rep = replicate(EstimatorKind::Integral, &f, &p, &base1(), &NoiseSpec::None, 5, 4000, false).unwrap();
        let mut seen: Vec<i64> = rep.values.iter().map(|&w| {
            assert_eq!(w.fract(), 0.0);
            w as i64
        }).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen, vec![2, 3, 4, 5, 6]);
    }

    #[test]
    fn censored_sup_degenerate_integrands() {
        let p = coarsest_partition::<Q>(4, 1);
        let zero = PiecewiseConstantFn::constant(1, q(0, 1)).with_unit_range().unwrap();
        let one = PiecewiseConstantFn::constant(1, q(1, 1)).with_unit_range().unwrap();
        let mut rng = replicate_rng(1, 0);
        for _ in 0..50 {
            assert_eq!(estimate_sup_censored(&zero, &p, &base1(), &mut rng).unwrap(), 0.0);
            let (w, draws) = estimate_traced(EstimatorKind::CensoredSup, &one, &p, &base1(), &NoiseSpec::None, &mut rng).unwrap();
            let max_t = draws
                .iter()
                .map(|d| match d.observation {
                    Observation::Censored { threshold, accepted } => {
                        assert!(accepted);
                        threshold
                    }
                    Observation::Value { .. } => panic!("censored draw exposed a value"),
                })
                .fold(0.0, f64::max);
            assert_eq!(w, max_t);
        }
    }

    #[test]
    fn censored_estimators_require_unit_range() {
        let f = example_f();
        let mut rng = replicate_rng(0, 0);
        assert!(matches!(estimate_sup_censored(&f, &halves(), &base1(), &mut rng), Err(Error::Range(_))));
        assert!(matches!(estimate_integral_censored(&f, &halves(), &base1(), &mut rng), Err(Error::Range(_))));
    }

    #[test]
    fn censored_integral_extremes_and_grid() {
        let p = coarsest_partition::<Q>(2, 1);
        let one = PiecewiseConstantFn::constant(1, q(1, 1)).with_unit_range().unwrap();
        let zero = PiecewiseConstantFn::constant(1, q(0, 1)).with_unit_range().unwrap();
        let half = PiecewiseConstantFn::constant(1, q(1, 2)).with_unit_range().unwrap();
        let mut rng = replicate_rng(2, 0);
        assert_eq!(estimate_integral_censored(&one, &p, &base1(), &mut rng).unwrap(), 1.0);
        assert_eq!(estimate_integral_censored(&zero, &p, &base1(), &mut rng).unwrap(), 0.0);
        let rep = replicate(EstimatorKind::CensoredIntegral, &half, &p, &base1(), &NoiseSpec::None, 9, 4000, false).unwrap();
        let freq = |v: f64| rep.values.iter().filter(|&&w| w == v).count() as f64 / 4000.0;
        assert!((freq(0.0) - 0.25).abs() < 0.03);
        assert!((freq(0.5) - 0.5).abs() < 0.03);
        assert!((freq(1.0) - 0.25).abs() < 0.03);
    }

    #[test]
    fn draws_stay_inside_their_stratum() {
        let bx = |a: (i64, i64), b: (i64, i64)| AxisBox::new(vec![q(a.0, a.1), q(0, 1)], vec![q(b.0, b.1), q(1, 1)]).unwrap();
        let p = Partition::new(2, 4, vec![(vec![bx((0, 1), (1, 4)), bx((3, 4), (1, 1))], 2), (vec![bx((1, 4), (3, 4))], 2)]).unwrap();
        let f = PiecewiseConstantFn::constant(2, q(1, 2)).with_unit_range().unwrap();
        let sampler = PartitionSampler::new(&p);
        let mut rng = replicate_rng(4, 0);
        for kind in EstimatorKind::ALL {
            let (_, draws) = estimate_traced(kind, &f, &p, &BaseMeasure::uniform(2), &NoiseSpec::SymmetricTwoPoint(q(1, 2)), &mut rng).unwrap();
            assert_eq!(draws.len(), p.n());
            let idx: Vec<usize> = draws.iter().map(|d| d.sample_index).collect();
            assert_eq!(idx, (0..p.n()).collect::<Vec<_>>());
            for d in &draws {
                assert!(sampler.contains(d.stratum, &d.point));
                assert!(p.index_partition()[d.stratum].contains(&d.sample_index));
                assert_eq!(d.noise.is_some(), kind == EstimatorKind::IntegralNoisy);
            }
        }
    }

    #[test]
    fn rejection_path_agrees_with_direct_sampling() {
        let p = finest_partition::<Q>(4, &[vec![q(1, 4), q(1, 2), q(3, 4)]]).unwrap();
        let sampler = PartitionSampler::new(&p);
        let mut rng = replicate_rng(8, 0);
        for i in 0..4 {
            let direct: f64 = (0..2000).map(|_| sampler.sample(i, &mut rng)[0]).sum::<f64>() / 2000.0;
            let rejected: f64 = (0..2000).map(|_| sampler.sample_rejection(i, &mut rng)[0]).sum::<f64>() / 2000.0;
            assert!((direct - rejected).abs() < 0.02);
            assert!(sampler.contains(i, &sampler.sample_rejection(i, &mut rng)));
        }
    }

    #[test]
    fn replication_is_deterministic_across_thread_counts() {
        let f = example_f();
        let run = || replicate(EstimatorKind::Sup, &f, &halves(), &base1(), &NoiseSpec::None, 42, 500, true).unwrap();
        let a = run();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(run);
        assert_eq!(a, b);
        let c = replicate(EstimatorKind::Sup, &f, &halves(), &base1(), &NoiseSpec::None, 43, 500, false).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn constant_replication_and_exports() {
        let f = PiecewiseConstantFn::constant(1, q(3, 1));
        let rep = replicate(EstimatorKind::Sup, &f, &halves(), &base1(), &NoiseSpec::None, 1, 100, false).unwrap();
        assert_eq!(rep.values, vec![3.0; 100]);
        assert_eq!(rep.variance(), 0.0);
        let mut csv = Vec::new();
        rep.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("replicate,value\n0,3.0\n"));
        let mut meta = Vec::new();
        rep.write_metadata_json(&mut meta).unwrap();
        let meta: serde_json::Value = serde_json::from_slice(&meta).unwrap();
        assert_eq!(meta["kind"], "SUP");
        assert_eq!(meta["n"], 2);
        assert!(replicate(EstimatorKind::Sup, &f, &halves(), &base1(), &NoiseSpec::None, 1, 0, false).is_err());
    }

    #[test]
    fn noisy_integral_has_the_right_spread() {
        let f = PiecewiseConstantFn::constant(1, q(1, 1));
        let noise = NoiseSpec::gaussian(q(1, 1)).unwrap();
        let rep = replicate(EstimatorKind::IntegralNoisy, &f, &halves(), &base1(), &noise, 6, 20_000, false).unwrap();
        assert!((rep.mean() - 1.0).abs() < 0.03);
        assert!((rep.variance() - 0.5).abs() < 0.03);
        assert_eq!(rep.noise["kind"], "gaussian");
    }

    #[test]
    fn oracle_sees_transformed_points() {
        let oracle = FunctionOracle::new(1, |x: &[f64]| x[0]);
        let base = BaseMeasure::with_marginals(vec![Marginal::quantile("exp", |u: f64| -(1.0 - u).ln())]).unwrap();
        let p = coarsest_partition::<Q>(1, 1);
        let rep = replicate(EstimatorKind::Integral, &oracle, &p, &base, &NoiseSpec::None, 0, 20_000, false).unwrap();
        assert!((rep.mean() - 1.0).abs() < 0.05);
        assert_eq!(oracle.cost(), 20_000);
    }

    #[test]
    fn kind_labels_round_trip() {
        for k in EstimatorKind::ALL {
            assert_eq!(k.label().parse::<EstimatorKind>().unwrap(), k);
            assert_eq!(serde_json::to_value(k).unwrap(), k.label());
        }
    }
}
