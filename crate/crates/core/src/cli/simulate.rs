use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::estimators::{replicate, EstimatorKind, Replication};
use crate::exact_dist::{
    cdf_sup_censored, dist_integral, dist_integral_censored, dist_integral_noisy, dist_sup, lp_loss_exact, variance_integral_noisy,
};
use crate::function_model::{FunctionSpec, NoiseSpec, PiecewiseConstantFn};
use crate::measure_space::{BaseMeasure, Partition, PartitionSpec};
use crate::orders::{dkw_validate, DkwResult, ExactCdf};
use crate::{ExactCensoredCdf, ExactDist, ExactFn, ExactPartition, Rational};

fn default_alpha() -> f64 {
    0.01
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedPartition {
    pub name: String,
    pub partition: PartitionSpec<Rational>,
}

/// Which estimators to run on which partitions of one step function.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub function: FunctionSpec<Rational>,
    pub partitions: Vec<NamedPartition>,
    pub estimators: Vec<EstimatorKind>,
    pub replicates: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// DKW failures tolerated before the run counts as failed.
    #[serde(default)]
    pub flake_budget: usize,
    #[serde(default)]
    pub emit_plot_data: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub partition: String,
    pub estimator: EstimatorKind,
    pub replicates: usize,
    /// `f*` for supremum estimators, the integral otherwise.
    pub center: String,
    pub empirical_mean: f64,
    pub empirical_variance: f64,
    pub empirical_l1: f64,
    pub empirical_l2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_mean: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_variance: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_l1: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dkw: Option<DkwResult>,
    pub csv: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub seed: u64,
    pub runs: Vec<RunSummary>,
    pub dkw_failures: usize,
    pub flake_budget: usize,
    pub pass: bool,
}

enum ExactLaw {
    Discrete(ExactDist),
    Censored(ExactCensoredCdf),
    Unavailable,
}

fn exact_law(kind: EstimatorKind, f: &ExactFn, p: &ExactPartition, noise: &NoiseSpec<Rational>) -> Result<ExactLaw> {
    Ok(match kind {
        EstimatorKind::Sup => ExactLaw::Discrete(dist_sup(f, p)?),
        EstimatorKind::CensoredSup => ExactLaw::Censored(cdf_sup_censored(f, p)?),
        EstimatorKind::Integral => ExactLaw::Discrete(dist_integral(f, p)?),
        EstimatorKind::IntegralNoisy => match dist_integral_noisy(f, p, noise) {
            Ok(d) => ExactLaw::Discrete(d),
            Err(Error::Precondition(_)) => ExactLaw::Unavailable,
            Err(e) => return Err(e),
        },
        EstimatorKind::CensoredIntegral => ExactLaw::Discrete(dist_integral_censored(f, p)?),
    })
}

fn file_stem(partition: &str, kind: EstimatorKind) -> String {
    let clean: String = partition.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
    format!("{clean}_{}", kind.label())
}

fn write_plot_data(path: &Path, rep: &Replication, exact: &dyn ExactCdf, points: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "exact_cdf", "empirical_cdf"])?;
    for &t in points {
        w.write_record([format!("{t:?}"), format!("{:?}", exact.cdf(t)), format!("{:?}", rep.empirical_cdf(t))])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every (partition, estimator) pair of the config; all runs share the
/// seed. Writes per-replicate CSVs, metadata, optional CDF tables and
/// `summary.json` under the output directory.
pub fn simulate(config: &ExperimentConfig) -> Result<SimulationSummary> {
    config.validate()?;
    let spec = config.simulation.as_ref().ok_or_else(|| Error::Config("simulate mode needs a simulation block".into()))?;
    let seed = config.seed.ok_or_else(|| Error::Config("simulate mode needs a seed".into()))?;
    if spec.replicates == 0 {
        return Err(Error::Config("replicates must be at least 1".into()));
    }
    let out_dir = config.output_dir.clone().unwrap_or_else(|| PathBuf::from("simulation-output"));
    std::fs::create_dir_all(&out_dir)?;
    let f = PiecewiseConstantFn::from_spec(spec.function.clone())?;
    let noise = config.noise.clone().unwrap_or(NoiseSpec::None);
    let base = BaseMeasure::uniform(f.dim());
    let mut runs = Vec::new();
    for named in &spec.partitions {
        let p = Partition::from_spec(named.partition.clone())?;
        for &kind in &spec.estimators {
            let rep = replicate(kind, &f, &p, &base, &noise, seed, spec.replicates, false)?;
            let stem = file_stem(&named.name, kind);
            let csv_path = out_dir.join(format!("{stem}.csv"));
            rep.write_csv(BufWriter::new(File::create(&csv_path)?))?;
            rep.write_metadata_json(BufWriter::new(File::create(out_dir.join(format!("{stem}.meta.json")))?))?;
            let center = if kind.targets_sup() { f.ess_sup() } else { f.global_mean() };
            let c = crate::Scalar::to_f64_lossy(&center);
            let mut summary = RunSummary {
                partition: named.name.clone(),
                estimator: kind,
                replicates: rep.len(),
                center: center.to_string(),
                empirical_mean: rep.mean(),
                empirical_variance: rep.variance(),
                empirical_l1: rep.lp_loss(c, 1.0),
                empirical_l2: rep.lp_loss(c, 2.0),
                exact_mean: None,
                exact_variance: None,
                exact_l1: None,
                dkw: None,
                csv: csv_path,
            };
            let plot_path = out_dir.join(format!("{stem}.cdf.csv"));
            let law = exact_law(kind, &f, &p, &noise)?;
            let ready = spec.replicates >= 30;
            match &law {
                ExactLaw::Discrete(d) => {
                    summary.exact_mean = Some(d.mean().to_string());
                    summary.exact_variance = Some(d.variance().to_string());
                    summary.exact_l1 = Some(lp_loss_exact(d, &center, 1).to_string());
                    let fd = d.to_f64();
                    if ready {
                        summary.dkw = Some(dkw_validate(&rep, &fd, spec.alpha)?);
                    }
                    if spec.emit_plot_data {
                        write_plot_data(&plot_path, &rep, &fd, fd.support())?;
                    }
                }
                ExactLaw::Censored(cdf) => {
                    let fc = cdf.to_f64();
                    if ready {
                        summary.dkw = Some(dkw_validate(&rep, &fc, spec.alpha)?);
                    }
                    if spec.emit_plot_data {
                        let points: Vec<f64> = cdf.grid(16).iter().map(crate::Scalar::to_f64_lossy).collect();
                        write_plot_data(&plot_path, &rep, &fc, &points)?;
                    }
                }
                ExactLaw::Unavailable => {
                    summary.exact_variance = Some(variance_integral_noisy(&f, &p, &noise.variance())?.to_string());
                }
            }
            runs.push(summary);
        }
    }
    let dkw_failures = runs.iter().filter(|r| r.dkw.as_ref().is_some_and(|d| !d.pass)).count();
    let summary = SimulationSummary { seed, runs, dkw_failures, flake_budget: spec.flake_budget, pass: dkw_failures <= spec.flake_budget };
    serde_json::to_writer_pretty(BufWriter::new(File::create(out_dir.join("summary.json"))?), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::reproduce::example_function;
    use crate::cli::Mode;
    use crate::measure_space::{coarsest_partition, finest_partition};

    fn config(dir: &Path, estimators: Vec<EstimatorKind>, f: ExactFn, noise: Option<NoiseSpec<Rational>>) -> ExperimentConfig {
        let coarse = coarsest_partition::<Rational>(2, 1);
        let fine = finest_partition(2, &[vec![Rational::new(1.into(), 2.into())]]).unwrap();
        ExperimentConfig {
            mode: Mode::Simulate,
            seed: Some(17),
            theorem: None,
            trials: None,
            generator: None,
            noise,
            inject_counterexample: false,
            n: None,
            simulation: Some(SimulationSpec {
                function: f.to_spec(),
                partitions: vec![
                    NamedPartition { name: "D".into(), partition: coarse.to_spec() },
                    NamedPartition { name: "A".into(), partition: fine.to_spec() },
                ],
                estimators,
                replicates: 5000,
                alpha: 0.01,
                flake_budget: 0,
                emit_plot_data: true,
            }),
            output_dir: Some(dir.to_path_buf()),
        }
    }

    #[test]
    fn counterexample_simulation() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), vec![EstimatorKind::Integral, EstimatorKind::Sup], example_function(), None);
        let s = simulate(&cfg).unwrap();
        assert_eq!(s.runs.len(), 4);
        let l1 = |name: &str| s.runs.iter().find(|r| r.partition == name && r.estimator == EstimatorKind::Integral).unwrap().empirical_l1;
        assert!((l1("D") - 0.75).abs() < 0.05);
        assert!((l1("A") - 1.0).abs() < 0.05);
        assert!(dir.path().join("summary.json").exists());
        assert!(dir.path().join("D_INT.cdf.csv").exists());
        assert!(dir.path().join("A_SUP.meta.json").exists());
        let again = simulate(&cfg).unwrap();
        assert_eq!(s.runs[0].empirical_mean, again.runs[0].empirical_mean);
    }

    #[test]
    fn censored_and_noisy_runs() {
        let dir = tempfile::tempdir().unwrap();
        let half = PiecewiseConstantFn::constant(1, Rational::new(1.into(), 2.into())).with_unit_range().unwrap();
        let kinds = vec![EstimatorKind::CensoredSup, EstimatorKind::CensoredIntegral, EstimatorKind::IntegralNoisy, EstimatorKind::Integral];
        let noise = NoiseSpec::gaussian(Rational::new(1.into(), 4.into())).unwrap();
        let s = simulate(&config(dir.path(), kinds, half, Some(noise))).unwrap();
        let int = s.runs.iter().find(|r| r.estimator == EstimatorKind::Integral).unwrap();
        assert_eq!(int.empirical_variance, 0.0);
        let noisy = s.runs.iter().find(|r| r.estimator == EstimatorKind::IntegralNoisy).unwrap();
        assert!(noisy.dkw.is_none());
        assert_eq!(noisy.exact_variance.as_deref(), Some("1/8"));
        assert!(s.runs.iter().filter(|r| r.estimator.is_censored()).all(|r| r.dkw.is_some()));
    }
}
