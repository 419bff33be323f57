//! Integrands: exact piecewise-constant step functions, black-box oracles,
//! and observation noise.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_dist::DiscreteDist;
use crate::measure_space::{grid_boxes, AxisBox, BaseMeasure, FloatBox, Partition, Stratum};
use crate::scalar::{serde_scalar, Scalar};

/// What the Monte Carlo estimators need from an integrand.
///
/// `u` is a point in probability coordinates inside `[0,1]^d`; implementors
/// that model a physical function map it through `base` first.
pub trait Integrand: Sync {
    fn dim(&self) -> usize;

    fn value(&self, u: &[f64], base: &BaseMeasure) -> f64;

    /// Whether the integrand is declared to take values in `[0,1]`.
    fn unit_range(&self) -> bool;

    /// Essential supremum when known.
    fn ess_sup_hint(&self) -> Option<f64> {
        None
    }
}

/// Step function on a box tiling of `[0,1]^d` with one value per cell.
///
/// Cells live in probability coordinates, so the exact engine reads cell
/// masses as volumes.
#[derive(Clone, Debug)]
pub struct PiecewiseConstantFn<S: Scalar> {
    dim: usize,
    cells: Vec<(AxisBox<S>, S)>,
    unit_range: bool,
    float_cells: Vec<(FloatBox, f64)>,
}

impl<S: Scalar> PartialEq for PiecewiseConstantFn<S> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.cells == other.cells && self.unit_range == other.unit_range
    }
}

impl<S: Scalar> PiecewiseConstantFn<S> {
    pub fn new(dim: usize, cells: Vec<(AxisBox<S>, S)>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::NotATiling("no cells".into()));
        }
        for (b, _) in &cells {
            if b.dim() != dim {
                return Err(Error::Dimension { expected: dim, got: b.dim() });
            }
        }
        for a in 0..cells.len() {
            for b in a + 1..cells.len() {
                if cells[a].0.intersect(&cells[b].0).is_some() {
                    return Err(Error::NotATiling(format!("cells {} and {} overlap", cells[a].0, cells[b].0)));
                }
            }
        }
        let volume = cells.iter().fold(S::zero(), |acc, (b, _)| acc + b.volume());
        if !volume.eq_tol(&S::one()) {
            return Err(Error::NotATiling(format!("cells cover volume {volume}")));
        }
        let float_cells = cells.iter().map(|(b, v)| (b.to_f64(), v.to_f64_lossy())).collect();
        Ok(Self { dim, cells, unit_range: false, float_cells })
    }

    pub fn constant(dim: usize, value: S) -> Self {
        Self::new(dim, vec![(AxisBox::unit(dim), value)]).expect("unit cube tiles itself")
    }

    /// One-dimensional step function: `values[i]` on `(cuts[i-1], cuts[i]]`.
    pub fn step_1d(cuts: &[S], values: Vec<S>) -> Result<Self> {
        Self::grid(&[cuts.to_vec()], values)
    }

    /// Product-grid step function; `values` run first axis slowest.
    pub fn grid(cuts: &[Vec<S>], values: Vec<S>) -> Result<Self> {
        let mut edges = Vec::with_capacity(cuts.len());
        for (j, axis) in cuts.iter().enumerate() {
            let mut e = vec![S::zero()];
            for c in axis {
                if c <= e.last().expect("non-empty") || *c >= S::one() {
                    return Err(Error::InvalidBox(format!("axis {j}: cuts must be increasing inside (0,1)")));
                }
                e.push(c.clone());
            }
            e.push(S::one());
            edges.push(e);
        }
        let boxes = grid_boxes(&edges)?;
        if boxes.len() != values.len() {
            return Err(Error::LengthMismatch(boxes.len(), values.len()));
        }
        Self::new(cuts.len(), boxes.into_iter().zip(values).collect())
    }

    /// Declares the range `[0,1]`, required by the censored estimators.
    pub fn with_unit_range(mut self) -> Result<Self> {
        if let Some((b, v)) = self.cells.iter().find(|(_, v)| *v < S::zero() || *v > S::one()) {
            return Err(Error::Range(format!("value {v} on cell {b}")));
        }
        self.unit_range = true;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[(AxisBox<S>, S)] {
        &self.cells
    }

    pub fn has_unit_range(&self) -> bool {
        self.unit_range
    }

    pub(crate) fn require_unit_range(&self) -> Result<()> {
        if self.unit_range {
            Ok(())
        } else {
            Err(Error::Range("function is not declared to take values in [0,1]".into()))
        }
    }

    pub fn eval(&self, u: &[S]) -> Result<S> {
        if u.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: u.len() });
        }
        if u.iter().any(|x| *x < S::zero() || *x > S::one()) {
            let coords: Vec<String> = u.iter().map(ToString::to_string).collect();
            return Err(Error::OutOfDomain(format!("({})", coords.join(", "))));
        }
        self.cells
            .iter()
            .find(|(b, _)| b.contains(u))
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::OutOfDomain("no cell owns the point".into()))
    }

    pub fn eval_f64(&self, u: &[f64]) -> f64 {
        self.float_cells
            .iter()
            .find(|(b, _)| b.contains(u))
            .map(|(_, v)| *v)
            .expect("points inside [0,1]^d always fall in a cell")
    }

    /// Law of `f(V)` with `V` uniform on the stratum.
    pub fn stratum_value_dist(&self, stratum: &Stratum<S>) -> Result<DiscreteDist<S>> {
        self.region_value_dist(stratum.boxes())
    }

    pub(crate) fn region_value_dist(&self, region: &[AxisBox<S>]) -> Result<DiscreteDist<S>> {
        let mass = region.iter().fold(S::zero(), |acc, b| acc + b.volume());
        if mass.is_zero() {
            return Err(Error::ZeroMass(0));
        }
        let pairs = self
            .cells
            .iter()
            .map(|(cell, v)| {
                let overlap = region.iter().fold(S::zero(), |acc, b| acc + b.overlap_volume(cell));
                (v.clone(), overlap / mass.clone())
            })
            .collect();
        DiscreteDist::from_pairs(pairs)
    }

    /// `E[f(U) | U in stratum]`.
    pub fn stratum_mean(&self, stratum: &Stratum<S>) -> Result<S> {
        Ok(self.stratum_value_dist(stratum)?.mean())
    }

    /// `Var[f(U) | U in stratum]`.
    pub fn stratum_variance(&self, stratum: &Stratum<S>) -> Result<S> {
        Ok(self.stratum_value_dist(stratum)?.variance())
    }

    /// `E[f(U)]`.
    pub fn global_mean(&self) -> S {
        self.cells.iter().fold(S::zero(), |acc, (b, v)| acc + b.volume() * v.clone())
    }

    pub fn global_value_dist(&self) -> DiscreteDist<S> {
        self.region_value_dist(&[AxisBox::unit(self.dim)]).expect("unit cube has mass one")
    }

    /// Largest value taken on a cell of positive mass.
    pub fn ess_sup(&self) -> S {
        self.cells
            .iter()
            .filter(|(b, _)| !b.volume().is_zero())
            .map(|(_, v)| v.clone())
            .reduce(S::max_of)
            .expect("cells cover the cube")
    }

    /// Distinct values on positive-mass cells, increasing.
    pub fn values(&self) -> Vec<S> {
        self.global_value_dist().support().to_vec()
    }

    /// Non-decreasing along every axis across face-adjacent cells.
    pub fn is_monotone(&self) -> bool {
        for (a, va) in &self.cells {
            for (b, vb) in &self.cells {
                for axis in 0..self.dim {
                    if a.upper()[axis] != b.lower()[axis] {
                        continue;
                    }
                    let faces_touch = (0..self.dim).filter(|&j| j != axis).all(|j| {
                        S::max_of(a.lower()[j].clone(), b.lower()[j].clone())
                            < S::min_of(a.upper()[j].clone(), b.upper()[j].clone())
                    });
                    if faces_touch && !va.le_tol(vb) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Stratum means for a partition, in stratum order.
    pub fn stratum_means(&self, p: &Partition<S>) -> Result<Vec<S>> {
        p.strata().iter().map(|s| self.stratum_mean(s)).collect()
    }

    pub fn to_spec(&self) -> FunctionSpec<S> {
        FunctionSpec {
            d: self.dim,
            cells: self
                .cells
                .iter()
                .map(|(b, v)| CellSpec { bounds: [b.lower().to_vec(), b.upper().to_vec()], value: v.clone() })
                .collect(),
            unit_range: self.unit_range,
        }
    }

    pub fn from_spec(spec: FunctionSpec<S>) -> Result<Self> {
        let cells = spec
            .cells
            .into_iter()
            .map(|c| {
                let [lo, hi] = c.bounds;
                Ok((AxisBox::new(lo, hi)?, c.value))
            })
            .collect::<Result<Vec<_>>>()?;
        let f = Self::new(spec.d, cells)?;
        if spec.unit_range {
            f.with_unit_range()
        } else {
            Ok(f)
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_spec())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(serde_json::from_str(text)?)
    }
}

impl<S: Scalar> Integrand for PiecewiseConstantFn<S> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, u: &[f64], _base: &BaseMeasure) -> f64 {
        self.eval_f64(u)
    }

    fn unit_range(&self) -> bool {
        self.unit_range
    }

    fn ess_sup_hint(&self) -> Option<f64> {
        Some(self.ess_sup().to_f64_lossy())
    }
}

/// JSON form: `{"d": 1, "cells": [{"box": [["0"], ["1/2"]], "value": "4"}], "unit_range": false}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct FunctionSpec<S: Scalar> {
    pub d: usize,
    pub cells: Vec<CellSpec<S>>,
    #[serde(default)]
    pub unit_range: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct CellSpec<S: Scalar> {
    #[serde(rename = "box", with = "corners")]
    pub bounds: [Vec<S>; 2],
    #[serde(with = "serde_scalar")]
    pub value: S,
}

mod corners {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(bound = "S: Scalar")]
    struct Pair<S: Scalar>(
        #[serde(with = "serde_scalar::vec")] Vec<S>,
        #[serde(with = "serde_scalar::vec")] Vec<S>,
    );

    pub fn serialize<S: Scalar, Ser: Serializer>(b: &[Vec<S>; 2], ser: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        Pair(b[0].clone(), b[1].clone()).serialize(ser)
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(de: D) -> std::result::Result<[Vec<S>; 2], D::Error> {
        let Pair(lo, hi) = Pair::deserialize(de)?;
        Ok([lo, hi])
    }
}

type Evaluator = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Black-box integrand with an evaluation counter.
pub struct FunctionOracle {
    dim: usize,
    unit_range: bool,
    evaluator: Arc<Evaluator>,
    evaluations: AtomicU64,
}

impl FunctionOracle {
    pub fn new(dim: usize, evaluator: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { dim, unit_range: false, evaluator: Arc::new(evaluator), evaluations: AtomicU64::new(0) }
    }

    /// Declares values in `[0,1]`; the caller vouches for it.
    pub fn with_unit_range(mut self) -> Self {
        self.unit_range = true;
        self
    }

    /// Evaluates at a physical point.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        (self.evaluator)(x)
    }

    /// Number of evaluations so far.
    pub fn cost(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }
}

impl std::fmt::Debug for FunctionOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionOracle").field("dim", &self.dim).field("cost", &self.cost()).finish()
    }
}

impl Integrand for FunctionOracle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, u: &[f64], base: &BaseMeasure) -> f64 {
        self.evaluate(&base.transform(u))
    }

    fn unit_range(&self) -> bool {
        self.unit_range
    }
}

/// Additive mean-zero observation error.
///
/// JSON form: `{"kind": "none" | "gaussian" | "symmetric-two-point", "param": x}`.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseSpec<S: Scalar> {
    None,
    /// Normal with the given variance.
    Gaussian(S),
    /// `+c` or `-c` with probability one half each.
    SymmetricTwoPoint(S),
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
struct NoiseRepr<S: Scalar> {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "optional_scalar")]
    param: Option<S>,
}

mod optional_scalar {
    use super::{serde_scalar, Scalar};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(transparent, bound = "S: Scalar")]
    struct Wrap<S: Scalar>(#[serde(with = "serde_scalar")] S);

    pub fn serialize<S: Scalar, Ser: Serializer>(v: &Option<S>, ser: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        v.clone().map(Wrap).serialize(ser)
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(de: D) -> std::result::Result<Option<S>, D::Error> {
        Ok(Option::<Wrap<S>>::deserialize(de)?.map(|w| w.0))
    }
}

impl<S: Scalar> Serialize for NoiseSpec<S> {
    fn serialize<Ser: serde::Serializer>(&self, ser: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        let (kind, param) = match self {
            NoiseSpec::None => ("none", None),
            NoiseSpec::Gaussian(v) => ("gaussian", Some(v.clone())),
            NoiseSpec::SymmetricTwoPoint(c) => ("symmetric-two-point", Some(c.clone())),
        };
        NoiseRepr { kind: kind.to_string(), param }.serialize(ser)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for NoiseSpec<S> {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = NoiseRepr::<S>::deserialize(de)?;
        let param = || repr.param.clone().ok_or_else(|| D::Error::custom(format!("noise kind `{}` needs a param", repr.kind)));
        match repr.kind.as_str() {
            "none" => Ok(NoiseSpec::None),
            "gaussian" => NoiseSpec::gaussian(param()?).map_err(D::Error::custom),
            "symmetric-two-point" => Ok(NoiseSpec::SymmetricTwoPoint(param()?)),
            other => Err(D::Error::unknown_variant(other, &["none", "gaussian", "symmetric-two-point"])),
        }
    }
}

impl<S: Scalar> NoiseSpec<S> {
    pub fn gaussian(variance: S) -> Result<Self> {
        if variance.is_negative() {
            return Err(Error::Config(format!("negative noise variance {variance}")));
        }
        Ok(NoiseSpec::Gaussian(variance))
    }

    pub fn variance(&self) -> S {
        match self {
            NoiseSpec::None => S::zero(),
            NoiseSpec::Gaussian(v) => v.clone(),
            NoiseSpec::SymmetricTwoPoint(c) => c.clone() * c.clone(),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, NoiseSpec::None)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSpec::None => 0.0,
            NoiseSpec::Gaussian(v) => {
                let sd = v.to_f64_lossy().sqrt();
                if sd == 0.0 {
                    0.0
                } else {
                    Normal::new(0.0, sd).expect("finite standard deviation").sample(rng)
                }
            }
            NoiseSpec::SymmetricTwoPoint(c) => {
                let c = c.to_f64_lossy();
                if rng.random::<bool>() {
                    c
                } else {
                    -c
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_space::{coarsest_partition, finest_partition};
    use crate::scalar::ratio;
    use num_rational::BigRational as Q;

    fn q(n: i64, d: i64) -> Q {
        ratio(n, d)
    }

    /// 4 on [0,1/2], 2 on (1/2,3/4], 6 on (3/4,1].
    fn example_f() -> PiecewiseConstantFn<Q> {
        PiecewiseConstantFn::step_1d(&[q(1, 2), q(3, 4)], vec![q(4, 1), q(2, 1), q(6, 1)]).unwrap()
    }

    #[test]
    fn eval_example_points() {
        let f = example_f();
        assert_eq!(f.eval(&[q(3, 10)]).unwrap(), q(4, 1));
        assert_eq!(f.eval(&[q(8, 10)]).unwrap(), q(6, 1));
        assert_eq!(f.eval(&[q(1, 2)]).unwrap(), q(4, 1));
        assert_eq!(f.eval(&[q(0, 1)]).unwrap(), q(4, 1));
        assert!(matches!(f.eval(&[q(3, 2)]), Err(Error::OutOfDomain(_))));
        let c = PiecewiseConstantFn::constant(2, q(7, 3));
        assert_eq!(c.eval(&[q(1, 5), q(9, 10)]).unwrap(), q(7, 3));
        assert_eq!(f.eval_f64(&[0.8]), 6.0);
    }

    #[test]
    fn value_distributions() {
        let f = example_f();
        let whole = coarsest_partition::<Q>(2, 1);
        let d = f.stratum_value_dist(&whole.strata()[0]).unwrap();
        assert_eq!(d.support(), &[q(2, 1), q(4, 1), q(6, 1)]);
        assert_eq!(d.probs(), &[q(1, 4), q(1, 2), q(1, 4)]);
        let halves = finest_partition::<Q>(2, &[vec![q(1, 2)]]).unwrap();
        let right = f.stratum_value_dist(&halves.strata()[1]).unwrap();
        assert_eq!(right.support(), &[q(2, 1), q(6, 1)]);
        assert_eq!(right.probs(), &[q(1, 2), q(1, 2)]);
        let c = PiecewiseConstantFn::constant(1, q(5, 1));
        assert_eq!(c.stratum_value_dist(&halves.strata()[0]).unwrap(), DiscreteDist::point_mass(q(5, 1)));
    }

    #[test]
    fn means_and_sup() {
        let f = example_f();
        assert_eq!(f.global_mean(), q(4, 1));
        assert_eq!(f.ess_sup(), q(6, 1));
        let halves = finest_partition::<Q>(2, &[vec![q(1, 2)]]).unwrap();
        assert_eq!(f.stratum_means(&halves).unwrap(), vec![q(4, 1), q(4, 1)]);
        assert_eq!(f.stratum_variance(&halves.strata()[1]).unwrap(), q(4, 1));
    }

    #[test]
    fn alternating_sign_function_has_zero_stratum_means() {
        let n = 4;
        let f = PiecewiseConstantFn::step_1d(&[q(1, 2 * n), q(1, n)], vec![q(1, 1), q(-1, 1), q(0, 1)]).unwrap();
        let cuts: Vec<Q> = (1..n).map(|i| q(i, n)).collect();
        let a = finest_partition(n as usize, &[cuts]).unwrap();
        assert!(f.stratum_means(&a).unwrap().iter().all(|m| *m == q(0, 1)));
        assert_eq!(f.stratum_variance(&a.strata()[0]).unwrap(), q(1, 1));
    }

    #[test]
    fn monotonicity() {
        assert!(!example_f().is_monotone());
        let step = PiecewiseConstantFn::step_1d(&[q(1, 2)], vec![q(0, 1), q(1, 1)]).unwrap();
        assert!(step.is_monotone());
        let half = q(1, 2);
        let plane = PiecewiseConstantFn::grid(&[vec![half.clone()], vec![half]], vec![q(0, 1), q(1, 1), q(1, 1), q(2, 1)]).unwrap();
        assert!(plane.is_monotone());
        let bad = PiecewiseConstantFn::grid(&[vec![q(1, 2)], vec![q(1, 2)]], vec![q(0, 1), q(1, 1), q(2, 1), q(1, 1)]).unwrap();
        assert!(!bad.is_monotone());
    }

    #[test]
    fn unit_range_declaration() {
        assert!(matches!(example_f().with_unit_range(), Err(Error::Range(_))));
        let g = PiecewiseConstantFn::step_1d(&[q(1, 2)], vec![q(0, 1), q(1, 3)]).unwrap().with_unit_range().unwrap();
        assert!(g.has_unit_range());
    }

    #[test]
    fn rejects_bad_tilings() {
        let gap = PiecewiseConstantFn::new(1, vec![(AxisBox::interval(q(0, 1), q(1, 2)).unwrap(), q(1, 1))]);
        assert!(matches!(gap, Err(Error::NotATiling(_))));
    }

    #[test]
    fn json_round_trip() {
        let f = example_f();
        assert_eq!(PiecewiseConstantFn::<Q>::from_json(&f.to_json().unwrap()).unwrap(), f);
        let noise: NoiseSpec<Q> = serde_json::from_str(r#"{"kind":"gaussian","param":"1/4"}"#).unwrap();
        assert_eq!(noise.variance(), q(1, 4));
        let two: NoiseSpec<Q> = serde_json::from_str(r#"{"kind":"symmetric-two-point","param":0.5}"#).unwrap();
        assert_eq!(two.variance(), q(1, 4));
        let none: NoiseSpec<Q> = serde_json::from_str(r#"{"kind":"none"}"#).unwrap();
        assert!(none.is_none());
    }

    #[test]
    fn oracle_counts_evaluations_across_threads() {
        let oracle = FunctionOracle::new(1, |x| x[0] * 2.0);
        let base = BaseMeasure::uniform(1);
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| {
                    for _ in 0..250 {
                        assert_eq!(oracle.value(&[0.25], &base), 0.5);
                    }
                });
            }
        });
        assert_eq!(oracle.cost(), 1000);
    }
}
