//! Decision procedures for majorization and the stochastic, convex and
//! increasing convex orders, plus small exhaustive oracles for the
//! dependence properties behind them.
//!
//! Verdicts are exact for rational scalars and carry the scalar's tolerance
//! for floats.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimators::Replication;
use crate::exact_dist::{poisson_binomial_average, CensoredSupCdf, DiscreteDist};
use crate::scalar::Scalar;

/// Largest grid dimension accepted by [`is_mtp2`].
pub const MTP2_MAX_DIM: usize = 3;
/// Largest side length accepted by [`is_mtp2`].
pub const MTP2_MAX_SIDE: usize = 16;
/// Largest number of cells accepted by [`conditional_split_st`].
pub const SPLIT_MAX_CELLS: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct MajorizationVector<S: Scalar> {
    entries: Vec<S>,
}

impl<S: Scalar> MajorizationVector<S> {
    pub fn new(entries: Vec<S>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Precondition("majorization vectors need at least one entry".into()));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> S {
        self.entries.iter().fold(S::zero(), |acc, x| acc + x.clone())
    }

    pub fn decreasing(&self) -> Vec<S> {
        let mut v = self.entries.clone();
        v.sort_by(|a, b| b.partial_cmp(a).expect("ordered scalars"));
        v
    }

    /// Replaces each block of `groups` by its average (a doubly stochastic map).
    pub fn block_average(&self, groups: &[Vec<usize>]) -> Result<Self> {
        check_grouping(groups, self.len())?;
        let mut out = self.entries.clone();
        for g in groups {
            let avg = g.iter().fold(S::zero(), |acc, &i| acc + self.entries[i].clone()) / S::from_count(g.len());
            for &i in g {
                out[i] = avg.clone();
            }
        }
        Ok(Self { entries: out })
    }
}

/// `true` iff `y ≺ x`: equal totals and every partial sum of the decreasing
/// rearrangement of `y` is at most that of `x`.
pub fn majorizes<S: Scalar>(x: &MajorizationVector<S>, y: &MajorizationVector<S>) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if !x.total().eq_tol(&y.total()) {
        return Ok(false);
    }
    let (xs, ys) = (x.decreasing(), y.decreasing());
    let (mut sx, mut sy) = (S::zero(), S::zero());
    for (a, b) in xs.into_iter().zip(ys) {
        sx = sx + a;
        sy = sy + b;
        if !sy.le_tol(&sx) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// Usual stochastic order.
    St,
    /// Stochastic order checked on a grid of a censored-supremum CDF.
    StGrid,
    /// Convex order.
    Cx,
    /// Increasing convex order.
    Icx,
}

/// Outcome of an order test on `lo ≤ hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict<S: Scalar> {
    pub relation: Relation,
    pub holds: bool,
    /// A point where the defining inequality fails.
    pub witness: Option<S>,
    /// `false` only for convex-order tests whose means differ.
    pub means_equal: bool,
}

impl<S: Scalar> Verdict<S> {
    fn pass(relation: Relation) -> Self {
        Self { relation, holds: true, witness: None, means_equal: true }
    }

    fn fail_at(relation: Relation, t: S) -> Self {
        Self { relation, holds: false, witness: Some(t), means_equal: true }
    }

    /// Report with a SHA-256 digest of `inputs`.
    pub fn report(&self, inputs: &str) -> VerdictReport {
        VerdictReport {
            relation: self.relation,
            result: self.holds,
            witness_point: self.witness.as_ref().map(ToString::to_string),
            means_equal: self.means_equal,
            inputs_digest: digest(inputs),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub relation: Relation,
    pub result: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_point: Option<String>,
    pub means_equal: bool,
    pub inputs_digest: String,
}

/// Hex SHA-256 of a string.
pub fn digest(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Canonical text of a law, for digests.
pub fn describe<S: Scalar>(d: &DiscreteDist<S>) -> String {
    let cells: Vec<String> = d.iter().map(|(x, p)| format!("{x}:{p}")).collect();
    cells.join(",")
}

fn union_support<S: Scalar>(a: &DiscreteDist<S>, b: &DiscreteDist<S>) -> Vec<S> {
    let mut pts: Vec<S> = a.support().iter().chain(b.support()).cloned().collect();
    pts.sort_by(|x, y| x.partial_cmp(y).expect("ordered scalars"));
    pts.dedup_by(|x, y| x.eq_tol(y));
    pts
}

/// `lo ≤_st hi`: `P(lo <= t) >= P(hi <= t)` at every support point.
pub fn check_st<S: Scalar>(lo: &DiscreteDist<S>, hi: &DiscreteDist<S>) -> Verdict<S> {
    union_support(lo, hi)
        .into_iter()
        .find(|t| !hi.cdf(t).le_tol(&lo.cdf(t)))
        .map_or_else(|| Verdict::pass(Relation::St), |t| Verdict::fail_at(Relation::St, t))
}

pub fn dominates_st<S: Scalar>(lo: &DiscreteDist<S>, hi: &DiscreteDist<S>) -> bool {
    check_st(lo, hi).holds
}

/// Stop-loss dominance `E[(lo - t)_+] <= E[(hi - t)_+]` at every support
/// point; the witness is the largest failing point.
fn stop_loss_failure<S: Scalar>(lo: &DiscreteDist<S>, hi: &DiscreteDist<S>) -> Option<S> {
    union_support(lo, hi).into_iter().rev().find(|t| !lo.stop_loss(t).le_tol(&hi.stop_loss(t)))
}

/// `lo ≤_cx hi`: equal means and stop-loss dominance.
pub fn check_cx<S: Scalar>(lo: &DiscreteDist<S>, hi: &DiscreteDist<S>) -> Verdict<S> {
    let means_equal = lo.mean().eq_tol(&hi.mean());
    let witness = stop_loss_failure(lo, hi);
    Verdict { relation: Relation::Cx, holds: means_equal && witness.is_none(), witness, means_equal }
}

pub fn dominates_cx<S: Scalar>(lo: &DiscreteDist<S>, hi: &DiscreteDist<S>) -> bool {
    check_cx(lo, hi).holds
}

/// `lo ≤_icx hi`: stop-loss dominance alone.
pub fn check_icx<S: Scalar>(lo: &DiscreteDist<S>, hi: &DiscreteDist<S>) -> Verdict<S> {
    stop_loss_failure(lo, hi).map_or_else(|| Verdict::pass(Relation::Icx), |t| Verdict::fail_at(Relation::Icx, t))
}

pub fn dominates_icx<S: Scalar>(lo: &DiscreteDist<S>, hi: &DiscreteDist<S>) -> bool {
    check_icx(lo, hi).holds
}

/// `lo ≤_st hi` for censored-supremum CDFs, checked at the breakpoints and at
/// `per_segment` interior points of every segment. A falsification net, not
/// a proof.
pub fn check_st_cdf<S: Scalar>(lo: &CensoredSupCdf<S>, hi: &CensoredSupCdf<S>, per_segment: usize) -> Result<Verdict<S>> {
    if lo.breakpoints().len() != hi.breakpoints().len() || lo.breakpoints().iter().zip(hi.breakpoints()).any(|(a, b)| !a.eq_tol(b)) {
        return Err(Error::Precondition("CDFs come from integrands with different values".into()));
    }
    Ok(lo
        .grid(per_segment)
        .into_iter()
        .find(|t| !hi.eval(t).le_tol(&lo.eval(t)))
        .map_or_else(|| Verdict::pass(Relation::StGrid), |t| Verdict::fail_at(Relation::StGrid, t)))
}

pub fn dominates_st_cdf<S: Scalar>(lo: &CensoredSupCdf<S>, hi: &CensoredSupCdf<S>, per_segment: usize) -> Result<bool> {
    Ok(check_st_cdf(lo, hi, per_segment)?.holds)
}

/// Non-negative weights on a product grid, stored first axis slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDensity<S: Scalar> {
    shape: Vec<usize>,
    data: Vec<S>,
}

impl<S: Scalar> GridDensity<S> {
    pub fn new(shape: Vec<usize>, data: Vec<S>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Precondition(format!("grid shape {shape:?}")));
        }
        let cells: usize = shape.iter().product();
        if cells != data.len() {
            return Err(Error::LengthMismatch(cells, data.len()));
        }
        if let Some(w) = data.iter().find(|w| w.is_negative()) {
            return Err(Error::InvalidDistribution(format!("negative grid weight {w}")));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.data.iter().fold(S::zero(), |acc, w| acc + w.clone()).eq_tol(&S::one())
    }

    pub fn normalized(&self) -> Result<Self> {
        let total = self.data.iter().fold(S::zero(), |acc, w| acc + w.clone());
        if total.is_zero() {
            return Err(Error::ZeroMass(0));
        }
        Ok(Self { shape: self.shape.clone(), data: self.data.iter().map(|w| w.clone() / total.clone()).collect() })
    }

    pub fn index_of(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.shape).fold(0, |acc, (&c, &s)| acc * s + c)
    }

    pub fn coords_of(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.shape.len()];
        for (slot, &s) in out.iter_mut().zip(&self.shape).rev() {
            *slot = index % s;
            index /= s;
        }
        out
    }

    pub fn get(&self, coords: &[usize]) -> &S {
        &self.data[self.index_of(coords)]
    }
}

/// `g(s) g(t) <= g(s ∨ t) g(s ∧ t)` for every pair of grid points.
pub fn is_mtp2<S: Scalar>(g: &GridDensity<S>) -> Result<bool> {
    if g.shape.len() > MTP2_MAX_DIM || g.shape.iter().any(|&s| s > MTP2_MAX_SIDE) {
        return Err(Error::SizeGuard(format!("grid {:?} exceeds {MTP2_MAX_DIM} axes of side {MTP2_MAX_SIDE}", g.shape)));
    }
    let coords: Vec<Vec<usize>> = (0..g.len()).map(|i| g.coords_of(i)).collect();
    for a in 0..g.len() {
        for b in a + 1..g.len() {
            let join: Vec<usize> = coords[a].iter().zip(&coords[b]).map(|(x, y)| *x.max(y)).collect();
            let meet: Vec<usize> = coords[a].iter().zip(&coords[b]).map(|(x, y)| *x.min(y)).collect();
            let lhs = g.data[a].clone() * g.data[b].clone();
            let rhs = g.get(&join).clone() * g.get(&meet).clone();
            if !lhs.le_tol(&rhs) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn is_up_set<S: Scalar>(g: &GridDensity<S>, member: impl Fn(usize) -> bool) -> bool {
    (0..g.len()).filter(|&i| member(i)).all(|i| {
        let c = g.coords_of(i);
        (0..c.len()).all(|axis| {
            let mut up = c.clone();
            up[axis] += 1;
            up[axis] >= g.shape[axis] || member(g.index_of(&up))
        })
    })
}

/// Checks `L(U | U ∈ G^c) ≤_st L(U | U ∈ G)` for an increasing set `G` by
/// enumerating every increasing subset of the grid.
pub fn conditional_split_st<S: Scalar>(g: &GridDensity<S>, upper: &[bool]) -> Result<bool> {
    if g.len() > SPLIT_MAX_CELLS {
        return Err(Error::SizeGuard(format!("{} cells exceed the limit of {SPLIT_MAX_CELLS}", g.len())));
    }
    if upper.len() != g.len() {
        return Err(Error::LengthMismatch(g.len(), upper.len()));
    }
    if !upper.iter().any(|&x| x) || upper.iter().all(|&x| x) {
        return Err(Error::Precondition("both the set and its complement must be non-empty".into()));
    }
    if !is_up_set(g, |i| upper[i]) {
        return Err(Error::Precondition("the conditioning set is not increasing".into()));
    }
    let mass = |inside: bool| (0..g.len()).filter(|&i| upper[i] == inside).fold(S::zero(), |acc, i| acc + g.data[i].clone());
    let (m_in, m_out) = (mass(true), mass(false));
    if m_in.is_zero() || m_out.is_zero() {
        return Err(Error::ZeroMass(usize::from(m_in.is_zero())));
    }
    for bits in 0u32..(1 << g.len()) {
        let in_u = |i: usize| bits >> i & 1 == 1;
        if !is_up_set(g, in_u) {
            continue;
        }
        let p = |inside: bool| (0..g.len()).filter(|&i| upper[i] == inside && in_u(i)).fold(S::zero(), |acc, i| acc + g.data[i].clone());
        if !(p(false) / m_out.clone()).le_tol(&(p(true) / m_in.clone())) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// For `p ≺ q` with entries in `[0,1]`, checks that the average of
/// independent Bernoulli(q_i) is below the average of Bernoulli(p_i) in the
/// convex order.
pub fn karlin_novikoff_check<S: Scalar>(p: &MajorizationVector<S>, q: &MajorizationVector<S>) -> Result<bool> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    if !majorizes(q, p)? {
        return Err(Error::Precondition("p is not majorized by q".into()));
    }
    let xq = poisson_binomial_average(q.entries())?;
    let xp = poisson_binomial_average(p.entries())?;
    Ok(dominates_cx(&xq, &xp))
}

fn check_grouping(groups: &[Vec<usize>], len: usize) -> Result<()> {
    let mut seen = vec![false; len];
    for &i in groups.iter().flatten() {
        if i >= len {
            return Err(Error::InvalidGrouping(format!("index {i} out of range ({len} blocks)")));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidGrouping(format!("index {i} appears twice")));
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidGrouping(format!("index {i} is not covered")));
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::InvalidGrouping("empty group".into()));
    }
    Ok(())
}

/// Merging blocks into size-weighted mixtures makes the maximum of all draws
/// stochastically smaller: `∏_C F_C(t)^{|C|} >= ∏_B F_B(t)^{|B|}` at every
/// support point, where `F_C` is the mixture of the blocks grouped into `C`.
pub fn mixture_max_check<S: Scalar>(block_laws: &[(DiscreteDist<S>, usize)], groups: &[Vec<usize>]) -> Result<bool> {
    check_grouping(groups, block_laws.len())?;
    if block_laws.iter().any(|(_, k)| *k == 0) {
        return Err(Error::InvalidGrouping("blocks must have positive size".into()));
    }
    let mut merged = Vec::with_capacity(groups.len());
    for g in groups {
        let size: usize = g.iter().map(|&i| block_laws[i].1).sum();
        let total = S::from_count(size);
        let parts: Vec<(&DiscreteDist<S>, S)> = g.iter().map(|&i| (&block_laws[i].0, S::from_count(block_laws[i].1) / total.clone())).collect();
        merged.push((DiscreteDist::mixture(&parts)?, size));
    }
    let fine: Vec<(&DiscreteDist<S>, usize)> = block_laws.iter().map(|(d, k)| (d, *k)).collect();
    let coarse: Vec<(&DiscreteDist<S>, usize)> = merged.iter().map(|(d, k)| (d, *k)).collect();
    let fine_max = DiscreteDist::max_of_independent(&fine);
    let coarse_max = DiscreteDist::max_of_independent(&coarse);
    Ok(dominates_st(&coarse_max, &fine_max))
}

/// A CDF in floating point, for comparison against simulations.
pub trait ExactCdf {
    /// `P(X <= t)`.
    fn cdf(&self, t: f64) -> f64;
    /// `P(X < t)`.
    fn cdf_left(&self, t: f64) -> f64;
    /// Points carrying positive mass.
    fn atoms(&self) -> Vec<f64>;
}

impl ExactCdf for DiscreteDist<f64> {
    fn cdf(&self, t: f64) -> f64 {
        DiscreteDist::cdf(self, &t)
    }

    fn cdf_left(&self, t: f64) -> f64 {
        DiscreteDist::cdf_left(self, &t)
    }

    fn atoms(&self) -> Vec<f64> {
        self.support().to_vec()
    }
}

/// Continuous on `(0, 1]` with a single atom at 0.
impl ExactCdf for CensoredSupCdf<f64> {
    fn cdf(&self, t: f64) -> f64 {
        self.eval(&t)
    }

    fn cdf_left(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            self.eval(&t)
        }
    }

    fn atoms(&self) -> Vec<f64> {
        vec![0.0]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DkwResult {
    pub replicates: usize,
    pub alpha: f64,
    pub discrepancy: f64,
    pub band: f64,
    pub pass: bool,
}

/// `sqrt(ln(2/α) / (2R))`.
pub fn dkw_band(replicates: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * replicates as f64)).sqrt()
}

/// Sup-distance between the empirical CDF of `values` and `exact`, against
/// the DKW band at level `alpha`. Samples within `1e-9` of an atom count as
/// the atom.
pub fn dkw_validate_values<C: ExactCdf + ?Sized>(values: &[f64], exact: &C, alpha: f64) -> Result<DkwResult> {
    if values.len() < 30 {
        return Err(Error::Precondition(format!("{} replicates; DKW validation needs at least 30", values.len())));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Precondition(format!("alpha {alpha} outside (0,1)")));
    }
    let atoms = exact.atoms();
    let snap = |x: f64| {
        atoms
            .iter()
            .copied()
            .min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()))
            .filter(|a| (a - x).abs() <= 1e-9)
            .unwrap_or(x)
    };
    let mut xs: Vec<f64> = values.iter().map(|&x| snap(x)).collect();
    xs.sort_by(f64::total_cmp);
    let mut points: Vec<f64> = xs.iter().copied().chain(atoms).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let r = xs.len() as f64;
    let mut discrepancy = 0.0f64;
    for t in points {
        let below = xs.partition_point(|&x| x < t) as f64 / r;
        let at_or_below = xs.partition_point(|&x| x <= t) as f64 / r;
        discrepancy = discrepancy.max((at_or_below - exact.cdf(t)).abs()).max((below - exact.cdf_left(t)).abs());
    }
    let band = dkw_band(xs.len(), alpha);
    Ok(DkwResult { replicates: xs.len(), alpha, discrepancy, band, pass: discrepancy <= band })
}

pub fn dkw_validate<C: ExactCdf + ?Sized>(rep: &Replication, exact: &C, alpha: f64) -> Result<DkwResult> {
    dkw_validate_values(&rep.values, exact, alpha)
}
