use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generator::{random_instance, GeneratorParams, Instance, InstanceDump, RefinementShape};
use super::reproduce::example_function;
use crate::error::{Error, Result};
use crate::estimators::replicate_rng;
use crate::exact_dist::{cdf_sup_censored, dist_integral, dist_integral_censored, dist_sup, variance_integral_noisy};
use crate::function_model::{NoiseSpec, PiecewiseConstantFn};
use crate::measure_space::{coarsest_partition, is_monotone_partition, split_stratum};
use crate::orders::{check_cx, check_st, check_st_cdf, Verdict};
use crate::{ExactNoise, Rational, Scalar};

/// Interior points per segment when comparing censored-supremum CDFs.
pub const CDF_GRID_POINTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Theorem {
    /// Refining the partition makes the supremum estimator stochastically larger.
    #[serde(rename = "3.1")]
    T3_1,
    /// Same for the censored supremum estimator.
    #[serde(rename = "3.2")]
    T3_2,
    /// Refining never increases the variance of the (noisy) integral estimator.
    #[serde(rename = "4.1")]
    T4_1,
    /// Refining lowers the censored integral estimator in the convex order.
    #[serde(rename = "4.3")]
    T4_3,
    /// Same for the integral estimator, monotone `f` and interval partitions.
    #[serde(rename = "4.5")]
    T4_5,
    /// Same for monotone `f` on `[0,1]^d` and axis-threshold split chains.
    #[serde(rename = "4.7")]
    T4_7,
}

impl Theorem {
    pub const ALL: [Theorem; 6] = [Theorem::T3_1, Theorem::T3_2, Theorem::T4_1, Theorem::T4_3, Theorem::T4_5, Theorem::T4_7];

    pub fn label(self) -> &'static str {
        match self {
            Theorem::T3_1 => "3.1",
            Theorem::T3_2 => "3.2",
            Theorem::T4_1 => "4.1",
            Theorem::T4_3 => "4.3",
            Theorem::T4_5 => "4.5",
            Theorem::T4_7 => "4.7",
        }
    }

    pub fn relation(self) -> &'static str {
        match self {
            Theorem::T3_1 => "W_S(C) <=st W_S(B)",
            Theorem::T3_2 => "W_CS(C) <=st W_CS(B)",
            Theorem::T4_1 => "Var W_IE(B) <= Var W_IE(C)",
            Theorem::T4_3 => "W_CI(B) <=cx W_CI(C)",
            Theorem::T4_5 | Theorem::T4_7 => "W_I(B) <=cx W_I(C)",
        }
    }

    /// Generator defaults matching the theorem's hypotheses.
    pub fn default_generator(self) -> GeneratorParams {
        match self {
            Theorem::T4_7 => GeneratorParams { d: 2, n_max: 8, max_splits: 4, ..GeneratorParams::default() },
            _ => GeneratorParams::default(),
        }
    }

    fn shape(self) -> RefinementShape {
        match self {
            Theorem::T4_5 => RefinementShape::Consecutive,
            Theorem::T4_7 => RefinementShape::SplitChain,
            _ => RefinementShape::Grouped,
        }
    }

    fn needs_monotone_f(self) -> bool {
        matches!(self, Theorem::T4_5 | Theorem::T4_7)
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.label() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown theorem `{s}`; expected one of 3.1, 3.2, 4.1, 4.3, 4.5, 4.7")))
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub theorem: Theorem,
    pub trials: usize,
    pub seed: u64,
    pub generator: GeneratorParams,
    /// Observation noise for the variance comparison; when absent trial `i`
    /// uses variance `[0, 1/4, 1][i % 3]`.
    pub noise: Option<ExactNoise>,
    /// Replace trial 0 by the two-stratum counterexample.
    pub inject_counterexample: bool,
}

impl VerifyOptions {
    pub fn new(theorem: Theorem, trials: usize, seed: u64) -> Self {
        Self { theorem, trials, seed, generator: theorem.default_generator(), noise: None, inject_counterexample: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    /// The instance does not satisfy the theorem's hypotheses.
    PreconditionViolated,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub outcome: Outcome,
    /// Whether the asserted relation held, hypotheses aside.
    pub relation_holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_point: Option<String>,
    /// Exact quantities compared, keyed by name.
    pub quantities: BTreeMap<String, String>,
    /// The full instance, kept whenever the relation failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceDump>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub theorem: Theorem,
    pub relation: String,
    pub seed: u64,
    pub trials: usize,
    pub passes: usize,
    pub failures: usize,
    pub precondition_violations: usize,
    pub records: Vec<TrialRecord>,
}

impl VerifyReport {
    /// `true` iff no trial satisfying the hypotheses failed.
    pub fn success(&self) -> bool {
        self.failures == 0
    }

    pub fn counterexamples(&self) -> impl Iterator<Item = &TrialRecord> {
        self.records.iter().filter(|r| !r.relation_holds)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            out,
            "theorem {} ({}): {}/{} pass, {} fail, {} precondition violations (seed {})",
            self.theorem, self.relation, self.passes, self.trials, self.failures, self.precondition_violations, self.seed
        )?;
        for r in self.counterexamples() {
            let kind = if r.outcome == Outcome::Fail { "COUNTEREXAMPLE" } else { "precondition violated" };
            writeln!(out, "  trial {}: {kind}, witness {}", r.trial, r.witness_point.as_deref().unwrap_or("-"))?;
            if let Some(inst) = &r.instance {
                writeln!(out, "    {}", serde_json::to_string(inst).map_err(|_| fmt::Error)?)?;
            }
        }
        Ok(())
    }
}

/// The two-stratum counterexample, adapted to the theorem's dimension and range.
fn injected_instance(theorem: Theorem) -> Result<Instance> {
    let q = Rational::from_ratio;
    let (f, coarse) = match theorem {
        Theorem::T4_5 => (example_function(), coarsest_partition(2, 1)),
        Theorem::T4_7 => {
            let f = PiecewiseConstantFn::grid(&[vec![q(1, 2), q(3, 4)], vec![]], vec![q(4, 6), q(2, 6), q(6, 6)])?.with_unit_range()?;
            (f, coarsest_partition(2, 2))
        }
        _ => {
            let f = PiecewiseConstantFn::step_1d(&[q(1, 2), q(3, 4)], vec![q(4, 6), q(2, 6), q(6, 6)])?.with_unit_range()?;
            (f, coarsest_partition(2, 1))
        }
    };
    let (fine, witness) = split_stratum(&coarse, 0, 0, &q(1, 2))?;
    Ok(Instance { f, coarse, fine, witness })
}

fn noise_for(options: &VerifyOptions, trial: usize) -> Rational {
    match &options.noise {
        Some(n) => n.variance(),
        None => [Rational::from_ratio(0, 1), Rational::from_ratio(1, 4), Rational::from_ratio(1, 1)][trial % 3].clone(),
    }
}

struct Check {
    holds: bool,
    witness: Option<String>,
    quantities: BTreeMap<String, String>,
}

impl Check {
    fn from_verdict(v: Verdict<Rational>) -> Self {
        Self { holds: v.holds, witness: v.witness.map(|t| t.to_string()), quantities: BTreeMap::new() }
    }
}

fn run_check(theorem: Theorem, inst: &Instance, noise_variance: &Rational) -> Result<Check> {
    let Instance { f, coarse, fine, .. } = inst;
    Ok(match theorem {
        Theorem::T3_1 => Check::from_verdict(check_st(&dist_sup(f, coarse)?, &dist_sup(f, fine)?)),
        Theorem::T3_2 => Check::from_verdict(check_st_cdf(&cdf_sup_censored(f, coarse)?, &cdf_sup_censored(f, fine)?, CDF_GRID_POINTS)?),
        Theorem::T4_1 => {
            let mut quantities = BTreeMap::new();
            let vc = variance_integral_noisy(f, coarse, noise_variance)?;
            let vb = variance_integral_noisy(f, fine, noise_variance)?;
            quantities.insert("noise_variance".into(), noise_variance.to_string());
            quantities.insert("variance_coarse".into(), vc.to_string());
            quantities.insert("variance_fine".into(), vb.to_string());
            let mut holds = vb <= vc;
            if noise_variance.is_zero() {
                let direct_c = dist_integral(f, coarse)?.variance();
                let direct_b = dist_integral(f, fine)?.variance();
                let agree = direct_c == vc && direct_b == vb;
                quantities.insert("decomposition_matches_convolution".into(), agree.to_string());
                holds &= agree;
            }
            Check { holds, witness: None, quantities }
        }
        Theorem::T4_3 => Check::from_verdict(check_cx(&dist_integral_censored(f, fine)?, &dist_integral_censored(f, coarse)?)),
        Theorem::T4_5 | Theorem::T4_7 => Check::from_verdict(check_cx(&dist_integral(f, fine)?, &dist_integral(f, coarse)?)),
    })
}

fn hypotheses_hold(theorem: Theorem, inst: &Instance) -> Result<bool> {
    Ok(match theorem {
        Theorem::T4_5 => inst.f.is_monotone() && is_monotone_partition(&inst.coarse)? && is_monotone_partition(&inst.fine)?,
        Theorem::T4_7 => inst.f.is_monotone(),
        _ => true,
    })
}

fn run_trial(options: &VerifyOptions, trial: usize) -> Result<TrialRecord> {
    let theorem = options.theorem;
    let inst = if options.inject_counterexample && trial == 0 {
        injected_instance(theorem)?
    } else {
        let mut rng = replicate_rng(options.seed, trial);
        random_instance(&mut rng, &options.generator, theorem.shape(), theorem.needs_monotone_f())?
    };
    if !inst.witness.check(&inst.coarse, &inst.fine) {
        return Err(Error::Precondition(format!("trial {trial}: coarse partition is not refined by the fine one")));
    }
    let check = run_check(theorem, &inst, &noise_for(options, trial))?;
    let relation_holds = check.holds;
    let outcome = match (relation_holds, hypotheses_hold(theorem, &inst)?) {
        (_, false) => Outcome::PreconditionViolated,
        (true, true) => Outcome::Pass,
        (false, true) => Outcome::Fail,
    };
    Ok(TrialRecord {
        trial,
        outcome,
        relation_holds,
        witness_point: check.witness,
        quantities: check.quantities,
        instance: (!relation_holds).then(|| inst.dump()),
    })
}

/// Runs `options.trials` independent trials; trial `i` draws its instance
/// from stream `i` of the seed, so the report is deterministic.
pub fn verify(options: &VerifyOptions) -> Result<VerifyReport> {
    if options.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if let Some(NoiseSpec::Gaussian(v)) = &options.noise {
        if v.is_negative() {
            return Err(Error::Config("negative noise variance".into()));
        }
    }
    options.generator.validate()?;
    let records: Vec<TrialRecord> = (0..options.trials).into_par_iter().map(|t| run_trial(options, t)).collect::<Result<_>>()?;
    let count = |o: Outcome| records.iter().filter(|r| r.outcome == o).count();
    Ok(VerifyReport {
        theorem: options.theorem,
        relation: options.theorem.relation().to_string(),
        seed: options.seed,
        trials: options.trials,
        passes: count(Outcome::Pass),
        failures: count(Outcome::Fail),
        precondition_violations: count(Outcome::PreconditionViolated),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem_labels_parse() {
        for t in Theorem::ALL {
            assert_eq!(t.label().parse::<Theorem>().unwrap(), t);
            assert_eq!(serde_json::to_value(t).unwrap(), t.label());
        }
        assert!("2.9".parse::<Theorem>().is_err());
    }

    #[test]
    fn small_sweeps_pass() {
        for t in Theorem::ALL {
            let report = verify(&VerifyOptions::new(t, 12, 7)).unwrap();
            assert_eq!(report.passes, 12, "{report}");
        }
    }

    #[test]
    fn sweeps_are_deterministic() {
        let a = verify(&VerifyOptions::new(Theorem::T4_1, 9, 3)).unwrap();
        let b = verify(&VerifyOptions::new(Theorem::T4_1, 9, 3)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn injected_counterexample_is_flagged_as_precondition_violation() {
        for t in [Theorem::T4_5, Theorem::T4_7] {
            let mut options = VerifyOptions::new(t, 5, 1);
            options.inject_counterexample = true;
            let report = verify(&options).unwrap();
            assert!(report.success());
            assert_eq!(report.precondition_violations, 1);
            let first = &report.records[0];
            assert_eq!(first.outcome, Outcome::PreconditionViolated);
            assert!(!first.relation_holds);
            assert!(first.instance.is_some());
        }
        let mut options = VerifyOptions::new(Theorem::T3_1, 3, 1);
        options.inject_counterexample = true;
        assert_eq!(verify(&options).unwrap().passes, 3);
    }

    #[test]
    fn fixed_noise_variance_is_reported() {
        let mut options = VerifyOptions::new(Theorem::T4_1, 4, 2);
        options.noise = Some(NoiseSpec::gaussian(Rational::from_ratio(1, 4)).unwrap());
        let report = verify(&options).unwrap();
        assert!(report.records.iter().all(|r| r.quantities["noise_variance"] == "1/4"));
    }
}
