use std::path::{Path, PathBuf};

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::oracle::seeds::{derive_seed, hash_str};
use crate::oracle::{p_max, NamedSchedule};
use crate::schedules::{generate_schedule, simple_schedule, OrderSchedule, SchedulerParams};
use crate::strategies::{StrategyKind, StrategyParams};
use crate::SimRng;

/// Where experiment schedules come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSource {
    /// `schedule_count` schedules drawn by the generator.
    Random,
    /// One fixed, evenly stepped schedule with identical supply and demand.
    Simple { low: i64, high: i64 },
    /// Schedules written earlier by `gen-schedules`.
    Dir { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub scheduler: SchedulerParams,
    pub strategies: Vec<StrategyKind>,
    pub strategy_params: StrategyParams,
    pub n_per_side: u32,
    /// Noise levels for experiment 2. Empty means 0 to p_max in steps of 0.05.
    pub p_grid: Vec<f64>,
    /// Prediction and real subtrials per cell.
    pub k: u32,
    pub schedule_count: u32,
    pub schedules: ScheduleSource,
    pub out_dir: PathBuf,
    pub landscape_resolution: u32,
    /// Fraction of failed cells tolerated before the run counts as failed.
    pub max_failure_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            scheduler: SchedulerParams::default(),
            strategies: vec![StrategyKind::AA, StrategyKind::GDX, StrategyKind::ZIP],
            strategy_params: StrategyParams::default(),
            n_per_side: 12,
            p_grid: Vec::new(),
            k: 1,
            schedule_count: 1,
            schedules: ScheduleSource::Random,
            out_dir: PathBuf::from("out"),
            landscape_resolution: 6,
            max_failure_fraction: 0.0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.scheduler
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.strategies.is_empty() {
            return bad("strategy set is empty".into());
        }
        let mut sorted = self.strategies.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.strategies.len() {
            return bad("strategy set lists a kind twice".into());
        }
        if self.n_per_side < self.strategies.len() as u32 {
            return bad(format!(
                "n_per_side {} is below the number of kinds {}",
                self.n_per_side,
                self.strategies.len()
            ));
        }
        let max = p_max(&self.strategies).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(p) = self
            .p_grid
            .iter()
            .find(|&&p| !(0.0..=max + 1e-12).contains(&p))
        {
            return bad(format!("noise level {p} outside [0, {max}]"));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.max_failure_fraction) {
            return bad("max_failure_fraction must lie in [0, 1]".into());
        }
        Ok(())
    }

    pub fn noise_grid(&self) -> Vec<f64> {
        if !self.p_grid.is_empty() {
            return self.p_grid.clone();
        }
        let max = p_max(&self.strategies).unwrap_or(0.0);
        (0..)
            .map(|i| i as f64 * 0.05)
            .map(|p| (p * 100.0).round() / 100.0)
            .take_while(|&p| p <= max + 1e-12)
            .collect()
    }

    pub fn duration(&self) -> u32 {
        self.scheduler.duration
    }

    /// Generated schedule `index`, seeded independently of the others.
    pub fn random_schedule(&self, index: u32) -> Result<NamedSchedule, CliError> {
        let mut rng = SimRng::seed_from_u64(derive_seed(&[
            self.seed,
            hash_str("schedule"),
            index as u64,
        ]));
        let schedule = generate_schedule(&self.scheduler, &mut rng)
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(NamedSchedule {
            id: format!("s{index:03}"),
            schedule,
        })
    }

    pub fn load_schedules(&self) -> Result<Vec<NamedSchedule>, CliError> {
        let schedules = match &self.schedules {
            ScheduleSource::Random => (0..self.schedule_count)
                .map(|i| self.random_schedule(i))
                .collect::<Result<_, _>>()?,
            ScheduleSource::Simple { low, high } => vec![NamedSchedule {
                id: "simple".into(),
                schedule: simple_schedule(*low, *high, self.duration(), self.scheduler.interval),
            }],
            ScheduleSource::Dir { path } => read_schedule_dir(path)?,
        };
        for s in &schedules {
            s.schedule
                .validate()
                .map_err(|e| CliError::Config(format!("schedule {}: {e}", s.id)))?;
            if s.schedule.duration() != self.duration() {
                return Err(CliError::Config(format!(
                    "schedule {} lasts {} timesteps but the session lasts {}",
                    s.id,
                    s.schedule.duration(),
                    self.duration()
                )));
            }
        }
        Ok(schedules)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScheduleManifest {
    pub schedules: Vec<String>,
}

pub fn read_schedule_file(path: &Path) -> Result<OrderSchedule, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    OrderSchedule::from_json(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn read_schedule_dir(dir: &Path) -> Result<Vec<NamedSchedule>, CliError> {
    let manifest_path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| CliError::Config(format!("{}: {e}", manifest_path.display())))?;
    let manifest: ScheduleManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", manifest_path.display())))?;
    manifest
        .schedules
        .into_iter()
        .map(|id| {
            let schedule = read_schedule_file(&dir.join(format!("{id}.json")))?;
            Ok(NamedSchedule { id, schedule })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_stops_at_p_max() {
        let c = RunConfig::default();
        let g = c.noise_grid();
        assert_eq!(g.len(), 14);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 0.65);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c: RunConfig = serde_json::from_str(
            r#"{"seed": 9, "schedules": {"kind": "simple", "low": 50, "high": 150}}"#,
        )
        .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.n_per_side, 12);
        assert!(c.validate().is_ok());
        assert_eq!(c.load_schedules().unwrap()[0].id, "simple");
    }

    #[test]
    fn invalid_configs() {
        let mut c = RunConfig {
            p_grid: vec![0.9],
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
        c.p_grid.clear();
        c.n_per_side = 2;
        assert!(c.validate().is_err());
        c.n_per_side = 12;
        c.scheduler.duration = 250;
        assert!(c.validate().is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"sede": 1}"#).is_err());
    }
}
