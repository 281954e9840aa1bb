//! Monte Carlo summaries as CSV and as an aligned text table.

use std::io::Write;

use super::dgp::DgpConfig;
use super::harness::Metrics;
use crate::inference::FunctionalKind;
use crate::selection::Estimator;

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 11] = [
    "design",
    "n",
    "sigma_v",
    "sigma_eps",
    "functional",
    "estimator",
    "med_bias",
    "mad",
    "rp5",
    "n_reps",
    "failures",
];

#[derive(Debug, Clone)]
pub struct McRow {
    pub functional: FunctionalKind,
    pub estimator: Estimator,
    pub theta_true: f64,
    /// Over the replications that did not fail.
    pub metrics: Metrics,
    pub n_reps: usize,
    pub failures: usize,
}

#[derive(Debug, Clone)]
pub struct McReport {
    pub config: DgpConfig,
    /// Grouped by functional, estimators in run order within each group.
    pub rows: Vec<McRow>,
}

fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

impl McReport {
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        let c = &self.config;
        for row in &self.rows {
            w.write_record([
                c.design.id().to_string(),
                c.n.to_string(),
                c.sigma_v.to_string(),
                c.sigma_eps.to_string(),
                row.functional.name(),
                row.estimator.id().to_string(),
                fixed(row.metrics.median_bias),
                fixed(row.metrics.mad),
                fixed(row.metrics.rp5),
                row.n_reps.to_string(),
                row.failures.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    pub fn row(&self, functional: FunctionalKind, estimator: Estimator) -> Option<&McRow> {
        self.rows
            .iter()
            .find(|r| r.functional == functional && r.estimator == estimator)
    }

    /// Estimators down the side, one `Med. Bias / MAD / RP 5%` block per
    /// functional across the top.
    pub fn to_table(&self) -> String {
        let mut functionals: Vec<FunctionalKind> = Vec::new();
        let mut estimators: Vec<Estimator> = Vec::new();
        for r in &self.rows {
            if !functionals.contains(&r.functional) {
                functionals.push(r.functional);
            }
            if !estimators.contains(&r.estimator) {
                estimators.push(r.estimator);
            }
        }
        let label_w = estimators.iter().map(|e| e.label().len()).max().unwrap_or(0).max(9);
        let cell = 9;
        let block = 3 * cell + 2;
        let c = &self.config;
        let mut out = format!(
            "design={} n={} sigma_v={} sigma_eps={} dim_z={}\n",
            c.design, c.n, c.sigma_v, c.sigma_eps, c.dim_z
        );
        out.push_str(&format!("{:label_w$}", ""));
        for f in &functionals {
            let truth = self.rows.iter().find(|r| r.functional == *f).map(|r| r.theta_true).unwrap_or(f64::NAN);
            out.push_str(&format!(" | {:^block$}", format!("{} (true {:.4})", f.name(), truth)));
        }
        out.push('\n');
        out.push_str(&format!("{:label_w$}", "Estimator"));
        for _ in &functionals {
            out.push_str(&format!(" | {:>cell$} {:>cell$} {:>cell$}", "Med. Bias", "MAD", "RP 5%"));
        }
        out.push('\n');
        out.push_str(&"-".repeat(label_w + functionals.len() * (block + 3)));
        out.push('\n');
        for e in &estimators {
            out.push_str(&format!("{:label_w$}", e.label()));
            for f in &functionals {
                match self.row(*f, *e) {
                    Some(r) => out.push_str(&format!(
                        " | {:>cell$.3} {:>cell$.3} {:>cell$.3}",
                        r.metrics.median_bias, r.metrics.mad, r.metrics.rp5
                    )),
                    None => out.push_str(&format!(" | {:>cell$} {:>cell$} {:>cell$}", "-", "-", "-")),
                }
            }
            out.push('\n');
        }
        let failures: usize = self.rows.iter().map(|r| r.failures).sum();
        let reps = self.rows.first().map(|r| r.n_reps).unwrap_or(0);
        out.push_str(&format!("{reps} replications; {failures} failed estimator fits\n"));
        out
    }
}
