//! The `simulate` command: Monte Carlo runs of the estimators on a design.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pds_core::montecarlo::{design_plan, replication_sample, run_monte_carlo_with, sample_table, McReport, McSettings};

use crate::config::SimulateConfig;

#[derive(Debug)]
pub struct SimulateOutput {
    pub report: Option<McReport>,
    /// Aligned table followed by the configuration echo, as written to
    /// `<out>.txt`.
    pub text: String,
}

/// `<out>.txt` next to the CSV.
pub fn text_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".txt");
    PathBuf::from(s)
}

/// Writes the sample of replication 0 as `y, x, z1..zd`. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn dump_sample(cfg: &SimulateConfig, path: &Path) -> Result<()> {
    let (sample, _) = replication_sample(&cfg.dgp, 0);
    let (names, table) = sample_table(&sample);
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(&names)?;
    for row in table.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn run_simulate(cfg: &SimulateConfig) -> Result<SimulateOutput> {
    if let Some(path) = &cfg.dump_sample {
        dump_sample(cfg, path)?;
    }
    let plan = design_plan(&cfg.dgp, cfg.k, &cfg.lasso);
    let echo = cfg.echo(plan.k, plan.q_spec.n_terms());
    let Some(out) = cfg.out.as_ref().filter(|_| cfg.reps > 0) else {
        return Ok(SimulateOutput {
            report: None,
            text: echo,
        });
    };
    let settings = McSettings {
        k_override: cfg.k,
        tuning: cfg.lasso.clone(),
        ..McSettings::new(cfg.estimators.clone(), cfg.reps)
    };
    let report = run_monte_carlo_with(&cfg.dgp, &settings)?;
    let file = fs::File::create(out).with_context(|| format!("cannot write {}", out.display()))?;
    report.write_csv(file)?;
    let text = format!("{}\n# resolved configuration\n{echo}", report.to_table());
    let txt = text_path(out);
    fs::write(&txt, &text).with_context(|| format!("cannot write {}", txt.display()))?;
    Ok(SimulateOutput {
        report: Some(report),
        text,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_path_appends() {
        assert_eq!(text_path(Path::new("out/mc.csv")), PathBuf::from("out/mc.csv.txt"));
    }
}
