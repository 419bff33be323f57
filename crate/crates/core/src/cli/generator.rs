//! Random `(f, C, B)` instances with `C ≤_ref B`, in exact arithmetic.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_model::{FunctionSpec, PiecewiseConstantFn};
use crate::measure_space::{coarsen, coarsest_partition, split_stratum, PartitionSpec, RefinementWitness};
use crate::{ExactFn, ExactPartition, Rational, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorParams {
    pub d: usize,
    pub n_min: usize,
    pub n_max: usize,
    /// Number of distinct candidate values of `f`.
    pub values: usize,
    pub cells_per_axis: usize,
    pub max_denominator: i64,
    pub max_splits: usize,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self { d: 1, n_min: 2, n_max: 6, values: 5, cells_per_axis: 8, max_denominator: 64, max_splits: 6 }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if self.d == 0 {
            return bad("d must be at least 1");
        }
        if self.n_min < 2 || self.n_min > self.n_max {
            return bad("need 2 <= n_min <= n_max");
        }
        if self.values == 0 || self.cells_per_axis == 0 || self.max_splits == 0 {
            return bad("values, cells_per_axis and max_splits must be positive");
        }
        if self.max_denominator < 1 {
            return bad("max_denominator must be positive");
        }
        if self.cells_per_axis as i64 > self.max_denominator {
            return Err(Error::GeneratorInfeasible(format!(
                "{} cells per axis need cut denominators above {}",
                self.cells_per_axis, self.max_denominator
            )));
        }
        Ok(())
    }
}

/// How the coarse partition relates to the fine one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefinementShape {
    /// Fine from axis splits of the coarsest partition; coarse merges an
    /// arbitrary grouping of fine strata.
    Grouped,
    /// One dimension; coarse merges runs of consecutive fine intervals.
    Consecutive,
    /// Coarse and fine are two points of one axis-threshold split chain.
    SplitChain,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub f: ExactFn,
    pub coarse: ExactPartition,
    pub fine: ExactPartition,
    pub witness: RefinementWitness,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceDump {
    pub f: FunctionSpec<Rational>,
    pub coarse: PartitionSpec<Rational>,
    pub fine: PartitionSpec<Rational>,
}

impl Instance {
    pub fn dump(&self) -> InstanceDump {
        InstanceDump { f: self.f.to_spec(), coarse: self.coarse.to_spec(), fine: self.fine.to_spec() }
    }
}

fn rational_in_unit<R: Rng + ?Sized>(rng: &mut R, max_den: i64) -> Rational {
    let den = rng.random_range(1..=max_den);
    Rational::from_ratio(rng.random_range(0..=den), den)
}

/// `count` distinct increasing points of `(0,1)` sharing a denominator `<= max_den`.
fn random_cuts<R: Rng + ?Sized>(rng: &mut R, count: usize, max_den: i64) -> Result<Vec<Rational>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let min_den = count as i64 + 1;
    if min_den > max_den {
        return Err(Error::GeneratorInfeasible(format!("{count} cuts need a denominator above {max_den}")));
    }
    let den = rng.random_range(min_den..=max_den);
    let mut nums: Vec<usize> = sample(rng, den as usize - 1, count).into_vec();
    nums.sort_unstable();
    Ok(nums.into_iter().map(|k| Rational::from_ratio(k as i64 + 1, den)).collect())
}

/// Step function on a random product grid with values in `[0,1]`; monotone
/// along every axis when requested.
pub fn random_function<R: Rng + ?Sized>(rng: &mut R, params: &GeneratorParams, monotone: bool) -> Result<ExactFn> {
    let pool: Vec<Rational> = (0..params.values).map(|_| rational_in_unit(rng, params.max_denominator)).collect();
    let mut cuts = Vec::with_capacity(params.d);
    let mut sides = Vec::with_capacity(params.d);
    for _ in 0..params.d {
        let cells = rng.random_range(1..=params.cells_per_axis);
        cuts.push(random_cuts(rng, cells - 1, params.max_denominator)?);
        sides.push(cells);
    }
    let total: usize = sides.iter().product();
    let mut values: Vec<Rational> = (0..total).map(|_| pool[rng.random_range(0..pool.len())].clone()).collect();
    if monotone {
        // Running maximum over the lower neighbours; the grid runs first axis slowest.
        let strides: Vec<usize> = (0..sides.len()).map(|j| sides[j + 1..].iter().product()).collect();
        for i in 0..total {
            for (j, &stride) in strides.iter().enumerate() {
                if (i / stride) % sides[j] > 0 {
                    let below = values[i - stride].clone();
                    if below > values[i] {
                        values[i] = below;
                    }
                }
            }
        }
    }
    PiecewiseConstantFn::grid(&cuts, values)?.with_unit_range()
}

/// Splits the coarsest partition at up to `splits` random axis thresholds
/// that keep allocations integral; returns every partition of the chain.
pub fn random_split_chain<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: usize,
    splits: usize,
) -> Result<Vec<(ExactPartition, RefinementWitness)>> {
    let start = coarsest_partition::<Rational>(n, d);
    let mut chain = vec![(start, RefinementWitness::identity(1))];
    for _ in 0..splits {
        let current = &chain.last().expect("chain starts non-empty").0;
        let candidates: Vec<usize> = (0..current.len()).filter(|&i| current.strata()[i].allocation() >= 2).collect();
        if candidates.is_empty() {
            break;
        }
        let index = candidates[rng.random_range(0..candidates.len())];
        let stratum = &current.strata()[index];
        let k = stratum.allocation();
        let b = stratum.as_box().expect("split chains keep single-box strata");
        let axis = rng.random_range(0..d);
        let m = rng.random_range(1..k);
        let (lo, hi) = (b.lower()[axis].clone(), b.upper()[axis].clone());
        let threshold = lo.clone() + (hi - lo) * Rational::from_ratio(m as i64, k as i64);
        let next = split_stratum(current, index, axis, &threshold)?;
        chain.push(next);
    }
    if chain.len() < 2 {
        return Err(Error::GeneratorInfeasible(format!("n = {n} admits no split")));
    }
    Ok(chain)
}

/// Random instance: `f` on a grid, the fine partition from a split chain and
/// the coarse one according to `shape`.
pub fn random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    params: &GeneratorParams,
    shape: RefinementShape,
    monotone_f: bool,
) -> Result<Instance> {
    params.validate()?;
    let d = if shape == RefinementShape::Consecutive { 1 } else { params.d };
    if shape == RefinementShape::Consecutive && params.d != 1 {
        return Err(Error::GeneratorInfeasible("consecutive merges need d = 1".into()));
    }
    let f = random_function(rng, &GeneratorParams { d, ..params.clone() }, monotone_f)?;
    let n = rng.random_range(params.n_min..=params.n_max);
    let splits = rng.random_range(1..=params.max_splits.min(n - 1));
    let mut chain = random_split_chain(rng, n, d, splits)?;
    let (fine, last_step) = chain.pop().expect("chain has at least two partitions");
    let (coarse, witness) = match shape {
        RefinementShape::Grouped => {
            let groups = random_grouping(rng, fine.len());
            coarsen(&fine, &groups)?
        }
        RefinementShape::Consecutive => {
            let groups = random_runs(rng, fine.len());
            coarsen(&fine, &groups)?
        }
        RefinementShape::SplitChain => {
            let start = rng.random_range(0..chain.len());
            let mut witness = RefinementWitness::identity(chain[start].0.len());
            for (_, step) in chain.iter().skip(start + 1) {
                witness = witness.compose(step);
            }
            (chain.swap_remove(start).0, witness.compose(&last_step))
        }
    };
    Ok(Instance { f, coarse, fine, witness })
}

/// Every index in some group; groups non-empty.
fn random_grouping<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<Vec<usize>> {
    let count = rng.random_range(1..=len);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); count];
    let mut order: Vec<usize> = (0..len).collect();
    for i in (1..len).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    for (slot, &i) in order.iter().enumerate() {
        let g = if slot < count { slot } else { rng.random_range(0..count) };
        groups[g].push(i);
    }
    groups
}

/// Consecutive runs covering `0..len`.
fn random_runs<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![vec![0]];
    for i in 1..len {
        if rng.random_bool(0.5) {
            groups.push(vec![i]);
        } else {
            groups.last_mut().expect("non-empty").push(i);
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::replicate_rng;
    use crate::measure_space::is_monotone_partition;

    #[test]
    fn instances_are_valid_refinements() {
        let params = GeneratorParams::default();
        for shape in [RefinementShape::Grouped, RefinementShape::Consecutive, RefinementShape::SplitChain] {
            for trial in 0..40 {
                let mut rng = replicate_rng(3, trial);
                let inst = random_instance(&mut rng, &params, shape, trial % 2 == 0).unwrap();
                assert!(inst.witness.check(&inst.coarse, &inst.fine), "{shape:?} trial {trial}");
                assert!(inst.f.has_unit_range());
                assert!(inst.f.values().len() <= params.values);
                if trial % 2 == 0 {
                    assert!(inst.f.is_monotone());
                }
                if shape == RefinementShape::Consecutive {
                    assert!(is_monotone_partition(&inst.coarse).unwrap());
                    assert!(is_monotone_partition(&inst.fine).unwrap());
                }
            }
        }
    }

    #[test]
    fn two_dimensional_monotone_functions() {
        let params = GeneratorParams { d: 2, n_max: 8, max_splits: 4, ..GeneratorParams::default() };
        for trial in 0..30 {
            let mut rng = replicate_rng(5, trial);
            let inst = random_instance(&mut rng, &params, RefinementShape::SplitChain, true).unwrap();
            assert!(inst.f.is_monotone());
            assert_eq!(inst.f.dim(), 2);
            assert!(inst.witness.check(&inst.coarse, &inst.fine));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let params = GeneratorParams::default();
        let a = random_instance(&mut replicate_rng(9, 4), &params, RefinementShape::Grouped, false).unwrap();
        let b = random_instance(&mut replicate_rng(9, 4), &params, RefinementShape::Grouped, false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_requests_are_reported() {
        let tight = GeneratorParams { cells_per_axis: 8, max_denominator: 4, ..GeneratorParams::default() };
        assert!(matches!(tight.validate(), Err(Error::GeneratorInfeasible(_))));
        assert!(matches!(random_split_chain(&mut replicate_rng(0, 0), 1, 1, 3), Err(Error::GeneratorInfeasible(_))));
        let bad = GeneratorParams { n_min: 1, ..GeneratorParams::default() };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
    }
}
