use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_dist::{dist_integral, lp_loss_exact, DiscreteDist};
use crate::function_model::PiecewiseConstantFn;
use crate::measure_space::{coarsest_partition, finest_partition};
use crate::orders::{check_cx, describe, VerdictReport};
use crate::{ExactDist, ExactFn, ExactPartition, Rational, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawReport {
    pub support: Vec<String>,
    pub probabilities: Vec<String>,
    pub mean: String,
    pub variance: String,
}

impl LawReport {
    fn of(d: &ExactDist) -> Self {
        Self {
            support: d.support().iter().map(ToString::to_string).collect(),
            probabilities: d.probs().iter().map(ToString::to_string).collect(),
            mean: d.mean().to_string(),
            variance: d.variance().to_string(),
        }
    }
}

/// Exact comparison of the integral estimator under the coarsest
/// partition `D` and the two-interval partition `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproduceReport {
    pub coarse: LawReport,
    pub fine: LawReport,
    pub center: String,
    pub l1_coarse: String,
    pub l1_fine: String,
    pub fine_below_coarse: VerdictReport,
    pub coarse_below_fine: VerdictReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generalized: Option<GeneralizedReport>,
}

/// The `±1` construction on `n` equal strata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedReport {
    pub n: usize,
    pub variance_fine: String,
    pub variance_coarse: String,
    pub l1_fine: String,
    pub l1_coarse: String,
    pub inverse_n: String,
    pub inverse_n_squared: String,
    /// `E|W^D| < E|W^A|`; equality when `n = 1`.
    pub coarse_strictly_smaller: bool,
}

/// 4 on `[0,1/2]`, 2 on `(1/2,3/4]`, 6 on `(3/4,1]`.
pub fn example_function() -> ExactFn {
    let q = Rational::from_ratio;
    PiecewiseConstantFn::step_1d(&[q(1, 2), q(3, 4)], vec![q(4, 1), q(2, 1), q(6, 1)]).expect("valid step function")
}

/// `f = 1` on `[0, 1/(2n)]`, `-1` on `(1/(2n), 1/n]`, 0 elsewhere; with the
/// finest partition into `n` equal intervals and the coarsest partition.
pub fn generalized_example(n: usize) -> Result<(ExactFn, ExactPartition, ExactPartition)> {
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    let q = |a: usize, b: usize| Rational::from_ratio(a as i64, b as i64);
    let (cuts, values) = if n == 1 {
        (vec![q(1, 2)], vec![q(1, 1), -q(1, 1)])
    } else {
        (vec![q(1, 2 * n), q(1, n)], vec![q(1, 1), -q(1, 1), q(0, 1)])
    };
    let f = PiecewiseConstantFn::step_1d(&cuts, values)?;
    let fine_cuts: Vec<Rational> = (1..n).map(|i| q(i, n)).collect();
    let fine = finest_partition(n, &[fine_cuts])?;
    Ok((f, fine, coarsest_partition(n, 1)))
}

/// Every number comes from the exact engine.
pub fn reproduce_example(n_general: Option<usize>) -> Result<ReproduceReport> {
    let f = example_function();
    let coarse_p = coarsest_partition::<Rational>(2, 1);
    let fine_p = finest_partition(2, &[vec![Rational::from_ratio(1, 2)]])?;
    let coarse = dist_integral(&f, &coarse_p)?;
    let fine = dist_integral(&f, &fine_p)?;
    let center = f.global_mean();
    let digest = |a: &ExactDist, b: &ExactDist| format!("{}|{}", describe(a), describe(b));
    let generalized = n_general.map(generalized_report).transpose()?;
    Ok(ReproduceReport {
        coarse: LawReport::of(&coarse),
        fine: LawReport::of(&fine),
        l1_coarse: lp_loss_exact(&coarse, &center, 1).to_string(),
        l1_fine: lp_loss_exact(&fine, &center, 1).to_string(),
        center: center.to_string(),
        fine_below_coarse: check_cx(&fine, &coarse).report(&digest(&fine, &coarse)),
        coarse_below_fine: check_cx(&coarse, &fine).report(&digest(&coarse, &fine)),
        generalized,
    })
}

fn generalized_report(n: usize) -> Result<GeneralizedReport> {
    let (f, fine_p, coarse_p) = generalized_example(n)?;
    let fine: DiscreteDist<Rational> = dist_integral(&f, &fine_p)?;
    let coarse = dist_integral(&f, &coarse_p)?;
    let zero = Rational::from_count(0);
    let l1_fine = lp_loss_exact(&fine, &zero, 1);
    let l1_coarse = lp_loss_exact(&coarse, &zero, 1);
    let inverse_n = Rational::from_ratio(1, n as i64);
    Ok(GeneralizedReport {
        n,
        variance_fine: fine.variance().to_string(),
        variance_coarse: coarse.variance().to_string(),
        coarse_strictly_smaller: l1_coarse < l1_fine,
        l1_fine: l1_fine.to_string(),
        l1_coarse: l1_coarse.to_string(),
        inverse_n_squared: (inverse_n.clone() * inverse_n.clone()).to_string(),
        inverse_n: inverse_n.to_string(),
    })
}

fn law_line(d: &LawReport) -> String {
    let cells: Vec<String> = d.support.iter().zip(&d.probabilities).map(|(x, p)| format!("{x}: {p}")).collect();
    cells.join(", ")
}

fn verdict_line(v: &VerdictReport) -> String {
    match (&v.witness_point, v.result) {
        (_, true) => "holds".to_string(),
        (Some(t), false) => format!("fails (stop-loss witness t = {t})"),
        (None, false) => "fails (means differ)".to_string(),
    }
}

impl fmt::Display for ReproduceReport {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(out, "integral estimator, f = 4 on [0,1/2], 2 on (1/2,3/4], 6 on (3/4,1], n = 2")?;
        writeln!(out, "  coarsest D: {}", law_line(&self.coarse))?;
        writeln!(out, "  halves   A: {}", law_line(&self.fine))?;
        writeln!(out, "  means: D {}  A {}", self.coarse.mean, self.fine.mean)?;
        writeln!(out, "  variances: D {}  A {}", self.coarse.variance, self.fine.variance)?;
        writeln!(out, "  E|W - {}|: D {}  A {}", self.center, self.l1_coarse, self.l1_fine)?;
        writeln!(out, "  A <=cx D: {}", verdict_line(&self.fine_below_coarse))?;
        writeln!(out, "  D <=cx A: {}", verdict_line(&self.coarse_below_fine))?;
        if let Some(g) = &self.generalized {
            writeln!(out, "+-1 construction, n = {}", g.n)?;
            writeln!(out, "  variances: A {}  D {}  (1/n^2 = {})", g.variance_fine, g.variance_coarse, g.inverse_n_squared)?;
            writeln!(out, "  E|W|: A {}  D {}  (1/n = {})", g.l1_fine, g.l1_coarse, g.inverse_n)?;
            let relation = if g.coarse_strictly_smaller { "<" } else { "=" };
            writeln!(out, "  E|W^D| {relation} E|W^A|")?;
        }
        Ok(())
    }
}
