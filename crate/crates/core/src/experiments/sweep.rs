use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{run_experiment_with_threads, ExperimentConfig, ExperimentReport};
use crate::error::{Error, Result};

/// Values to sweep; absent axes keep the base config's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<u32>>,
}

impl Grid {
    pub fn is_empty(&self) -> bool {
        [
            self.n.is_none(),
            self.d.is_none(),
            self.t.is_none(),
            self.s.is_none(),
        ]
        .iter()
        .all(|x| *x)
    }

    /// Grid points in row-major order over `n`, `d`, `t`, `s`.
    pub fn points(&self, base: &ExperimentConfig) -> Vec<GridPoint> {
        if self.is_empty() {
            return Vec::new();
        }
        let ns = self.n.clone().unwrap_or_else(|| vec![base.n]);
        let ds = self.d.clone().unwrap_or_else(|| vec![base.family.dim()]);
        let ts = self.t.clone().unwrap_or_else(|| vec![base.t]);
        let ss = self.s.clone().unwrap_or_else(|| vec![base.s]);
        let mut out = Vec::new();
        for &n in &ns {
            for &d in &ds {
                for &t in &ts {
                    for &s in &ss {
                        out.push(GridPoint { n, d, t, s });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n: usize,
    pub d: usize,
    pub t: f64,
    pub s: u32,
}

impl GridPoint {
    pub fn apply(&self, base: &ExperimentConfig) -> Result<ExperimentConfig> {
        let mut cfg = base.clone();
        cfg.n = self.n;
        cfg.t = self.t;
        cfg.s = self.s;
        cfg.family.sigma = base.family.sigma.with_dim(self.d)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub point: GridPoint,
    pub report: Result<ExperimentReport>,
}

/// Runs one experiment per grid point; a failing point does not stop the sweep.
pub fn sweep(base: &ExperimentConfig, grid: &Grid, threads: Option<usize>) -> Vec<SweepOutcome> {
    grid.points(base)
        .into_iter()
        .map(|point| {
            let report = point
                .apply(base)
                .and_then(|cfg| run_experiment_with_threads(&cfg, threads));
            if let Err(e) = &report {
                log::warn!(
                    "sweep point n={} d={} t={} s={} failed: {e}",
                    point.n,
                    point.d,
                    point.t,
                    point.s
                );
            }
            SweepOutcome { point, report }
        })
        .collect()
}

/// Long-form rate table: `n,d,t,s,statistic_median,bound_value,violation_rate`.
/// Failed points are left out.
pub fn write_sweep_csv<W: Write>(outcomes: &[SweepOutcome], writer: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "n",
        "d",
        "t",
        "s",
        "statistic_median",
        "bound_value",
        "violation_rate",
    ])
    .map_err(io)?;
    for o in outcomes {
        if let Ok(r) = &o.report {
            w.write_record([
                o.point.n.to_string(),
                o.point.d.to_string(),
                o.point.t.to_string(),
                o.point.s.to_string(),
                r.statistic_median.to_string(),
                r.bound_value.to_string(),
                r.violation_rate.to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A gnuplot script drawing the median statistic and the bound against `n`
/// on log-log axes.
pub fn write_plot_script<W: Write>(csv_name: &str, mut writer: W) -> Result<()> {
    write!(
        writer,
        "set datafile separator ','\n\
         set key top right\n\
         set logscale xy\n\
         set xlabel 'n'\n\
         set ylabel 'deviation'\n\
         set terminal pngcairo size 800,600\n\
         set output 'sweep.png'\n\
         plot '{csv_name}' using 1:5 skip 1 with linespoints title 'median statistic', \\\n\
         \x20    '{csv_name}' using 1:6 skip 1 with lines title 'bound'\n"
    )?;
    Ok(())
}

/// A config file: one experiment, optionally with a sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub experiment: ExperimentConfig,
    pub grid: Option<Grid>,
}

pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
    let grid = match value.as_object_mut().and_then(|o| o.remove("grid")) {
        Some(g) => {
            Some(serde_json::from_value(g).map_err(|e| Error::Config(format!("grid: {e}")))?)
        }
        None => None,
    };
    let experiment: ExperimentConfig =
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
    experiment.validate()?;
    Ok(ConfigFile { experiment, grid })
}
