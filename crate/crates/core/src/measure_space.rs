//! Sample space `[0,1]^d`, strata and ordered partitions with integer allocations.
//!
//! All geometry lives in probability coordinates: the base law restricted to
//! these coordinates is uniform, so the mass of a box is its volume. A
//! [`BaseMeasure`] maps those coordinates through per-axis quantile transforms
//! only when a point is handed to a black-box integrand.
//!
//! Boxes own their faces half-open: a box contains `u` when
//! `lower[j] < u[j] <= upper[j]` on every axis, except that a lower face at
//! `0` is closed. Boxes that tile the cube therefore partition it exactly.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{serde_scalar, Scalar};

/// A one-dimensional quantile transform `[0,1] -> [0,1]`.
#[derive(Clone)]
pub enum Marginal {
    Identity,
    Quantile { name: String, map: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl Marginal {
    pub fn quantile(name: impl Into<String>, map: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Marginal::Quantile { name: name.into(), map: Arc::new(map) }
    }

    pub fn apply(&self, u: f64) -> f64 {
        match self {
            Marginal::Identity => u,
            Marginal::Quantile { map, .. } => map(u),
        }
    }
}

impl fmt::Debug for Marginal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marginal::Identity => f.write_str("Identity"),
            Marginal::Quantile { name, .. } => write!(f, "Quantile({name})"),
        }
    }
}

/// Product law on `[0,1]^d`: independent coordinates, each the image of a
/// uniform variable under its quantile transform.
#[derive(Clone, Debug)]
pub struct BaseMeasure {
    marginals: Vec<Marginal>,
}

impl BaseMeasure {
    /// Uniform law on `[0,1]^dim`.
    pub fn uniform(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Self { marginals: vec![Marginal::Identity; dim] }
    }

    pub fn with_marginals(marginals: Vec<Marginal>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::Dimension { expected: 1, got: 0 });
        }
        Ok(Self { marginals })
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn is_uniform(&self) -> bool {
        self.marginals.iter().all(|m| matches!(m, Marginal::Identity))
    }

    /// Maps probability coordinates to the physical point.
    pub fn transform(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.marginals).map(|(&x, m)| m.apply(x)).collect()
    }
}

/// Axis-aligned box `[lower, upper]` inside the unit cube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct AxisBox<S: Scalar> {
    #[serde(with = "serde_scalar::vec")]
    lower: Vec<S>,
    #[serde(with = "serde_scalar::vec")]
    upper: Vec<S>,
}

impl<S: Scalar> AxisBox<S> {
    pub fn new(lower: Vec<S>, upper: Vec<S>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension { expected: lower.len(), got: upper.len() });
        }
        if lower.is_empty() {
            return Err(Error::InvalidBox("zero-dimensional box".into()));
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if *lo < S::zero() || *hi > S::one() || lo > hi {
                return Err(Error::InvalidBox(format!("axis {j}: [{lo}, {hi}] not inside [0,1]")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn unit(dim: usize) -> Self {
        Self { lower: vec![S::zero(); dim], upper: vec![S::one(); dim] }
    }

    /// One-dimensional interval helper.
    pub fn interval(lo: S, hi: S) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[S] {
        &self.lower
    }

    pub fn upper(&self) -> &[S] {
        &self.upper
    }

    pub fn volume(&self) -> S {
        self.lower
            .iter()
            .zip(&self.upper)
            .fold(S::one(), |acc, (lo, hi)| acc * (hi.clone() - lo.clone()))
    }

    /// Intersection with positive volume, if any.
    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let mut lower = Vec::with_capacity(self.dim());
        let mut upper = Vec::with_capacity(self.dim());
        for j in 0..self.dim() {
            let lo = S::max_of(self.lower[j].clone(), other.lower[j].clone());
            let hi = S::min_of(self.upper[j].clone(), other.upper[j].clone());
            if lo >= hi {
                return None;
            }
            lower.push(lo);
            upper.push(hi);
        }
        Some(Self { lower, upper })
    }

    pub fn overlap_volume(&self, other: &Self) -> S {
        self.intersect(other).map_or_else(S::zero, |b| b.volume())
    }

    pub fn contains(&self, u: &[S]) -> bool {
        u.len() == self.dim()
            && u.iter().enumerate().all(|(j, x)| {
                let lo = &self.lower[j];
                let above_lower = x > lo || (lo.is_zero() && x.is_zero());
                above_lower && x <= &self.upper[j]
            })
    }

    /// Pieces `{x_axis < threshold}` and `{x_axis >= threshold}`; either may be empty.
    pub fn split(&self, axis: usize, threshold: &S) -> (Option<Self>, Option<Self>) {
        let lo = &self.lower[axis];
        let hi = &self.upper[axis];
        if threshold <= lo {
            return (None, Some(self.clone()));
        }
        if threshold >= hi {
            return (Some(self.clone()), None);
        }
        let mut below = self.clone();
        below.upper[axis] = threshold.clone();
        let mut above = self.clone();
        above.lower[axis] = threshold.clone();
        (Some(below), Some(above))
    }

    pub fn to_f64(&self) -> FloatBox {
        FloatBox {
            lower: self.lower.iter().map(S::to_f64_lossy).collect(),
            upper: self.upper.iter().map(S::to_f64_lossy).collect(),
        }
    }
}

impl<S: Scalar> fmt::Display for AxisBox<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let axes: Vec<String> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| format!("[{lo},{hi}]"))
            .collect();
        f.write_str(&axes.join("x"))
    }
}

/// Floating-point copy of a box for sampling.
#[derive(Clone, Debug)]
pub struct FloatBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl FloatBox {
    pub fn contains(&self, u: &[f64]) -> bool {
        u.iter().enumerate().all(|(j, &x)| {
            let lo = self.lower[j];
            (x > lo || (lo == 0.0 && x == 0.0)) && x <= self.upper[j]
        })
    }
}

/// One stratum: a disjoint union of boxes, its mass, and its allocation.
#[derive(Clone, Debug, PartialEq)]
pub struct Stratum<S: Scalar> {
    boxes: Vec<AxisBox<S>>,
    mass: S,
    allocation: usize,
}

impl<S: Scalar> Stratum<S> {
    pub fn boxes(&self) -> &[AxisBox<S>] {
        &self.boxes
    }

    pub fn mass(&self) -> &S {
        &self.mass
    }

    pub fn allocation(&self) -> usize {
        self.allocation
    }

    pub fn contains(&self, u: &[S]) -> bool {
        self.boxes.iter().any(|b| b.contains(u))
    }

    /// Mass of the intersection with a box.
    pub fn overlap_with(&self, other: &AxisBox<S>) -> S {
        self.boxes.iter().fold(S::zero(), |acc, b| acc + b.overlap_volume(other))
    }

    pub fn overlap_with_stratum(&self, other: &Stratum<S>) -> S {
        other.boxes.iter().fold(S::zero(), |acc, b| acc + self.overlap_with(b))
    }

    /// `Some(box)` when the stratum is a single box.
    pub fn as_box(&self) -> Option<&AxisBox<S>> {
        match self.boxes.as_slice() {
            [b] => Some(b),
            _ => None,
        }
    }
}

/// Ordered partition of `[0,1]^d` with allocations `k_i`, `sum k_i = n`, and
/// `mass_i = k_i / n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition<S: Scalar> {
    dim: usize,
    n: usize,
    strata: Vec<Stratum<S>>,
    index_partition: Vec<Vec<usize>>,
}

impl<S: Scalar> Partition<S> {
    /// Validates and builds a partition from `(boxes, k)` pairs.
    pub fn new(dim: usize, n: usize, strata: Vec<(Vec<AxisBox<S>>, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::MassMismatch("sample size must be positive".into()));
        }
        if strata.is_empty() {
            return Err(Error::NotATiling("no strata".into()));
        }
        let total: usize = strata.iter().map(|(_, k)| *k).sum();
        if total != n {
            return Err(Error::MassMismatch(format!("allocations sum to {total}, expected {n}")));
        }
        let n_s = S::from_count(n);
        let mut built = Vec::with_capacity(strata.len());
        for (i, (boxes, k)) in strata.into_iter().enumerate() {
            if k == 0 {
                return Err(Error::MassMismatch(format!("stratum {i} has allocation 0")));
            }
            if boxes.is_empty() {
                return Err(Error::ZeroMass(i));
            }
            for b in &boxes {
                if b.dim() != dim {
                    return Err(Error::Dimension { expected: dim, got: b.dim() });
                }
                if b.volume().is_zero() {
                    return Err(Error::ZeroMass(i));
                }
            }
            let mass = boxes.iter().fold(S::zero(), |acc, b| acc + b.volume());
            let expected = S::from_count(k) / n_s.clone();
            if !mass.eq_tol(&expected) {
                return Err(Error::MassMismatch(format!("stratum {i} has mass {mass}, expected {k}/{n}")));
            }
            built.push(Stratum { boxes, mass: expected, allocation: k });
        }
        let all: Vec<(usize, &AxisBox<S>)> =
            built.iter().enumerate().flat_map(|(i, s)| s.boxes.iter().map(move |b| (i, b))).collect();
        for a in 0..all.len() {
            for b in a + 1..all.len() {
                if all[a].1.intersect(all[b].1).is_some() {
                    return Err(Error::NotATiling(format!(
                        "box {} of stratum {} overlaps box {} of stratum {}",
                        all[a].1, all[a].0, all[b].1, all[b].0
                    )));
                }
            }
        }
        let mut index_partition = Vec::with_capacity(built.len());
        let mut next = 0;
        for s in &built {
            index_partition.push((next..next + s.allocation).collect());
            next += s.allocation;
        }
        Ok(Self { dim, n, strata: built, index_partition })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total sample size.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn strata(&self) -> &[Stratum<S>] {
        &self.strata
    }

    pub fn len(&self) -> usize {
        self.strata.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strata.is_empty()
    }

    pub fn allocations(&self) -> Vec<usize> {
        self.strata.iter().map(|s| s.allocation).collect()
    }

    /// Sample indices owned by each stratum (consecutive blocks of `0..n`).
    pub fn index_partition(&self) -> &[Vec<usize>] {
        &self.index_partition
    }

    /// Index of the stratum containing `u`.
    pub fn locate(&self, u: &[S]) -> Option<usize> {
        self.strata.iter().position(|s| s.contains(u))
    }

    /// Short stable identifier used in exported metadata.
    pub fn id(&self) -> String {
        let body: Vec<String> = self
            .strata
            .iter()
            .map(|s| {
                let boxes: Vec<String> = s.boxes.iter().map(ToString::to_string).collect();
                format!("{}:{}", boxes.join("+"), s.allocation)
            })
            .collect();
        format!("d{}n{}[{}]", self.dim, self.n, body.join(";"))
    }

    pub fn to_spec(&self) -> PartitionSpec<S> {
        PartitionSpec {
            d: self.dim,
            n: self.n,
            strata: self
                .strata
                .iter()
                .map(|s| StratumSpec {
                    boxes: s.boxes.iter().map(|b| [b.lower.clone(), b.upper.clone()]).collect(),
                    k: s.allocation,
                })
                .collect(),
        }
    }

    pub fn from_spec(spec: PartitionSpec<S>) -> Result<Self> {
        let strata = spec
            .strata
            .into_iter()
            .map(|st| {
                let boxes = st
                    .boxes
                    .into_iter()
                    .map(|[lo, hi]| AxisBox::new(lo, hi))
                    .collect::<Result<Vec<_>>>()?;
                Ok((boxes, st.k))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(spec.d, spec.n, strata)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_spec())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(serde_json::from_str(text)?)
    }
}

/// JSON form of a partition:
/// `{"d": 1, "n": 2, "strata": [{"boxes": [[["0"], ["1/2"]]], "k": 1}, ...]}`.
/// Each box is `[lower, upper]`; coordinates are strings (`"1/2"`) or numbers.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct PartitionSpec<S: Scalar> {
    pub d: usize,
    pub n: usize,
    pub strata: Vec<StratumSpec<S>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct StratumSpec<S: Scalar> {
    #[serde(with = "box_list")]
    pub boxes: Vec<[Vec<S>; 2]>,
    pub k: usize,
}

mod box_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(bound = "S: Scalar")]
    struct Corners<S: Scalar>(
        #[serde(with = "serde_scalar::vec")] Vec<S>,
        #[serde(with = "serde_scalar::vec")] Vec<S>,
    );

    pub fn serialize<S: Scalar, Ser: Serializer>(boxes: &[[Vec<S>; 2]], ser: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        let v: Vec<Corners<S>> = boxes.iter().map(|[lo, hi]| Corners(lo.clone(), hi.clone())).collect();
        v.serialize(ser)
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<[Vec<S>; 2]>, D::Error> {
        let v: Vec<Corners<S>> = Vec::deserialize(de)?;
        Ok(v.into_iter().map(|Corners(lo, hi)| [lo, hi]).collect())
    }
}

/// For each coarse stratum, the fine strata whose union it is.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefinementWitness {
    pub map: Vec<Vec<usize>>,
}

impl RefinementWitness {
    pub fn identity(len: usize) -> Self {
        Self { map: (0..len).map(|i| vec![i]).collect() }
    }

    /// Chains `coarse -> mid` (self) with `mid -> fine` (next).
    pub fn compose(&self, next: &RefinementWitness) -> RefinementWitness {
        let map = self
            .map
            .iter()
            .map(|mids| {
                let mut fine: Vec<usize> = mids.iter().flat_map(|&m| next.map[m].iter().copied()).collect();
                fine.sort_unstable();
                fine
            })
            .collect();
        RefinementWitness { map }
    }

    /// Exact check that this witness proves `coarse <=_ref fine`.
    pub fn check<S: Scalar>(&self, coarse: &Partition<S>, fine: &Partition<S>) -> bool {
        if self.map.len() != coarse.len() || coarse.n() != fine.n() {
            return false;
        }
        let mut seen = vec![false; fine.len()];
        for (c, fines) in self.map.iter().enumerate() {
            let cs = &coarse.strata()[c];
            let mut mass = S::zero();
            let mut alloc = 0;
            for &f in fines {
                if f >= fine.len() || seen[f] {
                    return false;
                }
                seen[f] = true;
                let fs = &fine.strata()[f];
                if !cs.overlap_with_stratum(fs).eq_tol(fs.mass()) {
                    return false;
                }
                mass = mass + fs.mass().clone();
                alloc += fs.allocation();
            }
            if alloc != cs.allocation() || !mass.eq_tol(cs.mass()) {
                return false;
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Partition of `[0,1]^d` into the product grid defined by per-axis cut
/// points; each of the `n` cells must have mass `1/n`.
pub fn finest_partition<S: Scalar>(n: usize, cuts: &[Vec<S>]) -> Result<Partition<S>> {
    let dim = cuts.len();
    if dim == 0 {
        return Err(Error::Dimension { expected: 1, got: 0 });
    }
    let mut edges = Vec::with_capacity(dim);
    for (j, axis_cuts) in cuts.iter().enumerate() {
        let mut e = vec![S::zero()];
        for c in axis_cuts {
            if c <= e.last().expect("non-empty") || *c >= S::one() {
                return Err(Error::InvalidBox(format!("axis {j}: cuts must be increasing inside (0,1)")));
            }
            e.push(c.clone());
        }
        e.push(S::one());
        edges.push(e);
    }
    let cells: usize = edges.iter().map(|e| e.len() - 1).product();
    if cells != n {
        return Err(Error::MassMismatch(format!("{cells} cells for n = {n}")));
    }
    let strata = grid_boxes(&edges)?.into_iter().map(|b| (vec![b], 1)).collect();
    Partition::new(dim, n, strata)
}

/// All boxes of the product grid, first axis slowest.
pub(crate) fn grid_boxes<S: Scalar>(edges: &[Vec<S>]) -> Result<Vec<AxisBox<S>>> {
    let dim = edges.len();
    let sizes: Vec<usize> = edges.iter().map(|e| e.len() - 1).collect();
    let total: usize = sizes.iter().product();
    let mut boxes = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let lower = (0..dim).map(|j| edges[j][idx[j]].clone()).collect();
        let upper = (0..dim).map(|j| edges[j][idx[j] + 1].clone()).collect();
        boxes.push(AxisBox::new(lower, upper)?);
        for j in (0..dim).rev() {
            idx[j] += 1;
            if idx[j] < sizes[j] {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(boxes)
}

/// The single-stratum partition `([0,1]^d)` with allocation `n`.
pub fn coarsest_partition<S: Scalar>(n: usize, dim: usize) -> Partition<S> {
    assert!(n >= 1 && dim >= 1, "coarsest partition needs n >= 1 and d >= 1");
    Partition::new(dim, n, vec![(vec![AxisBox::unit(dim)], n)]).expect("unit cube is a valid stratum")
}

/// Proves `coarse <=_ref fine` or names the first coarse stratum without an
/// exact cover.
pub fn refinement_witness<S: Scalar>(coarse: &Partition<S>, fine: &Partition<S>) -> Result<RefinementWitness> {
    if coarse.dim() != fine.dim() {
        return Err(Error::Dimension { expected: coarse.dim(), got: fine.dim() });
    }
    if coarse.n() != fine.n() {
        return Err(Error::Precondition(format!("sample sizes differ: {} vs {}", coarse.n(), fine.n())));
    }
    let mut map = Vec::with_capacity(coarse.len());
    for (c, cs) in coarse.strata().iter().enumerate() {
        let mut fines = Vec::new();
        let mut alloc = 0;
        for (f, fs) in fine.strata().iter().enumerate() {
            let overlap = cs.overlap_with_stratum(fs);
            if overlap.is_zero() {
                continue;
            }
            if !overlap.eq_tol(fs.mass()) {
                return Err(Error::NotARefinement { coarse: c });
            }
            fines.push(f);
            alloc += fs.allocation();
        }
        if alloc != cs.allocation() {
            return Err(Error::NotARefinement { coarse: c });
        }
        map.push(fines);
    }
    Ok(RefinementWitness { map })
}

/// Splits stratum `index` by the increasing set `{x : threshold <= x[axis]}`.
///
/// The lower piece takes the stratum's slot and the upper piece follows it.
pub fn split_stratum<S: Scalar>(
    p: &Partition<S>,
    index: usize,
    axis: usize,
    threshold: &S,
) -> Result<(Partition<S>, RefinementWitness)> {
    if index >= p.len() {
        return Err(Error::StratumIndex { index, len: p.len() });
    }
    if axis >= p.dim() {
        return Err(Error::Dimension { expected: p.dim(), got: axis + 1 });
    }
    let target = &p.strata()[index];
    let mut below = Vec::new();
    let mut above = Vec::new();
    for b in target.boxes() {
        let (lo, hi) = b.split(axis, threshold);
        below.extend(lo);
        above.extend(hi);
    }
    if below.is_empty() || above.is_empty() {
        return Err(Error::EmptyPiece { stratum: index });
    }
    let n_s = S::from_count(p.n());
    let alloc_of = |boxes: &[AxisBox<S>]| -> Result<usize> {
        let mass = boxes.iter().fold(S::zero(), |acc, b| acc + b.volume());
        let scaled = mass.clone() * n_s.clone();
        let k = scaled.to_f64_lossy().round();
        if k < 1.0 || !S::from_count(k as usize).eq_tol(&scaled) {
            return Err(Error::NonIntegerAllocation { stratum: index, mass: mass.to_string(), n: p.n() });
        }
        Ok(k as usize)
    };
    let k_below = alloc_of(&below)?;
    let k_above = alloc_of(&above)?;
    let mut strata = Vec::with_capacity(p.len() + 1);
    for (i, s) in p.strata().iter().enumerate() {
        if i == index {
            strata.push((below.clone(), k_below));
            strata.push((above.clone(), k_above));
        } else {
            strata.push((s.boxes().to_vec(), s.allocation()));
        }
    }
    let refined = Partition::new(p.dim(), p.n(), strata)?;
    let map = (0..p.len())
        .map(|i| match i.cmp(&index) {
            std::cmp::Ordering::Less => vec![i],
            std::cmp::Ordering::Equal => vec![i, i + 1],
            std::cmp::Ordering::Greater => vec![i + 1],
        })
        .collect();
    Ok((refined, RefinementWitness { map }))
}

/// Merges each group of strata into one stratum; group `g` becomes stratum `g`.
pub fn coarsen<S: Scalar>(p: &Partition<S>, groups: &[Vec<usize>]) -> Result<(Partition<S>, RefinementWitness)> {
    let mut seen = vec![false; p.len()];
    for &i in groups.iter().flatten() {
        if i >= p.len() {
            return Err(Error::StratumIndex { index: i, len: p.len() });
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidGrouping(format!("stratum {i} appears twice")));
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidGrouping(format!("stratum {i} is not covered")));
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::InvalidGrouping("empty group".into()));
    }
    let strata = groups
        .iter()
        .map(|g| {
            let boxes = g.iter().flat_map(|&i| p.strata()[i].boxes().iter().cloned()).collect();
            (boxes, g.iter().map(|&i| p.strata()[i].allocation()).sum())
        })
        .collect();
    let coarse = Partition::new(p.dim(), p.n(), strata)?;
    let map = groups
        .iter()
        .map(|g| {
            let mut g = g.clone();
            g.sort_unstable();
            g
        })
        .collect();
    Ok((coarse, RefinementWitness { map }))
}

/// One-dimensional partitions only: every stratum is an interval and the
/// intervals appear left to right in list order.
pub fn is_monotone_partition<S: Scalar>(p: &Partition<S>) -> Result<bool> {
    if p.dim() != 1 {
        return Err(Error::Dimension { expected: 1, got: p.dim() });
    }
    let mut prev_upper: Option<S> = None;
    for s in p.strata() {
        let mut pieces: Vec<(S, S)> = s.boxes().iter().map(|b| (b.lower()[0].clone(), b.upper()[0].clone())).collect();
        pieces.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("ordered scalars"));
        if pieces.windows(2).any(|w| !w[0].1.eq_tol(&w[1].0)) {
            return Ok(false);
        }
        let lo = pieces.first().expect("non-empty stratum").0.clone();
        let hi = pieces.last().expect("non-empty stratum").1.clone();
        if let Some(prev) = &prev_upper {
            if !prev.le_tol(&lo) {
                return Ok(false);
            }
        }
        prev_upper = Some(hi);
    }
    Ok(true)
}
