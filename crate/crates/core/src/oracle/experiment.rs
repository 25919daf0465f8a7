use std::collections::{BTreeMap, BTreeSet};
use std::io;

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::seeds::{derive_seed, hash_str, phase};
use super::{distort_population, NoiseSpec, OracleError, TraderPopulation};
use crate::exchange::{run_session, KindProfit, SessionResult};
use crate::schedules::OrderSchedule;
use crate::strategies::{StrategyKind, StrategyParams};
use crate::SimRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedSchedule {
    pub id: String,
    pub schedule: OrderSchedule,
}

/// Pooled result of K sessions run on one population.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseOutcome {
    pub kinds: BTreeMap<StrategyKind, KindProfit>,
    pub total_surplus: i64,
    pub trader_slots: u64,
    pub trades: u64,
    pub sessions: u32,
}

impl PhaseOutcome {
    pub fn add(&mut self, session: &SessionResult) {
        for (&kind, p) in &session.kinds {
            let e = self.kinds.entry(kind).or_default();
            e.total += p.total;
            e.traders += p.traders;
        }
        self.total_surplus += session.total_surplus;
        self.trader_slots += session.traders.len() as u64;
        self.trades += session.trade_count;
        self.sessions += 1;
    }

    pub fn averages(&self) -> BTreeMap<StrategyKind, f64> {
        self.kinds
            .iter()
            .filter_map(|(&k, p)| p.average().map(|a| (k, a)))
            .collect()
    }

    pub fn market_average(&self) -> f64 {
        if self.trader_slots == 0 {
            0.0
        } else {
            self.total_surplus as f64 / self.trader_slots as f64
        }
    }

    /// Kind with the highest pooled average; exact ties go to the
    /// lexicographically first kind name. The flag reports whether a tie
    /// decided it.
    pub fn dominant(&self) -> Option<(StrategyKind, bool)> {
        let mut best: Option<(StrategyKind, f64)> = None;
        let mut tie = false;
        for (kind, avg) in self.averages() {
            match best {
                Some((_, b)) if avg > b => {
                    best = Some((kind, avg));
                    tie = false;
                }
                Some((_, b)) if avg == b => tie = true,
                Some(_) => {}
                None => best = Some((kind, avg)),
            }
        }
        best.map(|(k, _)| (k, tie))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub kind: StrategyKind,
    /// Set when an exact profit tie (typically all zero) decided the kind.
    pub tie: bool,
    pub outcome: PhaseOutcome,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub schedule_id: String,
    pub population_index: usize,
    pub population: TraderPopulation,
    pub p_index: usize,
    pub p: f64,
    pub predicted_population: TraderPopulation,
    pub predicted: StrategyKind,
    pub prediction_tie: bool,
    pub prediction_avg: BTreeMap<StrategyKind, f64>,
    pub real_avg: BTreeMap<StrategyKind, f64>,
    pub market_avg: f64,
    pub multiplier: Option<f64>,
    pub correct: bool,
    pub k: u32,
    pub seed: u64,
    pub real_trades: u64,
}

impl ExperimentRecord {
    pub fn zero_trade(&self) -> bool {
        self.real_trades == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellFailure {
    pub schedule_id: String,
    pub population_index: usize,
    pub p_index: usize,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<ExperimentRecord>,
    pub failures: Vec<CellFailure>,
}

impl ExperimentOutput {
    pub fn cells(&self) -> usize {
        self.records.len() + self.failures.len()
    }
}

/// Shared experiment settings. Every session seed is derived from
/// `seed` and the cell's key, so results do not depend on how cells are
/// scheduled across threads.
#[derive(Clone, Debug)]
pub struct Harness {
    pub kinds: Vec<StrategyKind>,
    pub n_per_side: u32,
    pub duration: u32,
    pub params: StrategyParams,
    pub seed: u64,
}

impl Harness {
    pub fn new(kinds: &[StrategyKind], n_per_side: u32, duration: u32, seed: u64) -> Self {
        Harness {
            kinds: kinds.to_vec(),
            n_per_side,
            duration,
            params: StrategyParams::default(),
            seed,
        }
    }

    pub fn subtrial_seed(phase_seed: u64, subtrial: u32) -> u64 {
        derive_seed(&[phase_seed, subtrial as u64])
    }

    pub fn cell_seed(&self, schedule_id: &str, population_index: usize, p_index: usize) -> u64 {
        derive_seed(&[
            self.seed,
            hash_str(schedule_id),
            population_index as u64,
            p_index as u64,
        ])
    }

    /// Runs `k` sessions on `population` with seeds derived from `seed`.
    pub fn run_phase(
        &self,
        schedule: &OrderSchedule,
        population: &TraderPopulation,
        k: u32,
        seed: u64,
    ) -> Result<PhaseOutcome, OracleError> {
        if k == 0 {
            return Err(OracleError::ZeroSubtrials);
        }
        let mut outcome = PhaseOutcome::default();
        for i in 0..k {
            let s = run_session(
                schedule,
                population,
                self.duration,
                &self.params,
                Self::subtrial_seed(seed, i),
            )?;
            outcome.add(&s);
        }
        Ok(outcome)
    }

    /// Names the kind with the highest average profit pooled over `k`
    /// sessions of the same population.
    pub fn predict_dominant(
        &self,
        schedule: &OrderSchedule,
        population: &TraderPopulation,
        k: u32,
        seed: u64,
    ) -> Result<Prediction, OracleError> {
        let outcome = self.run_phase(schedule, population, k, seed)?;
        let (kind, tie) = outcome
            .dominant()
            .ok_or(OracleError::BadPopulation(population.to_string()))?;
        Ok(Prediction { kind, tie, outcome })
    }

    /// One (schedule, population, p) cell: distort once, predict on the
    /// distorted population, then measure on the true population plus one
    /// buyer and one seller of the predicted kind.
    pub fn run_cell(
        &self,
        schedule: &NamedSchedule,
        population_index: usize,
        population: &TraderPopulation,
        p_index: usize,
        p: f64,
        k: u32,
    ) -> Result<ExperimentRecord, OracleError> {
        let cell_seed = self.cell_seed(&schedule.id, population_index, p_index);
        let noise = NoiseSpec::new(p, &self.kinds)?;
        let mut noise_rng = SimRng::seed_from_u64(derive_seed(&[cell_seed, phase::NOISE]));
        let distorted = distort_population(population, &noise, &mut noise_rng)?;

        let prediction = self.predict_dominant(
            &schedule.schedule,
            &distorted,
            k,
            derive_seed(&[cell_seed, phase::PREDICT]),
        )?;
        let real_population = population.with_extra_pair(prediction.kind);
        let real = self.run_phase(
            &schedule.schedule,
            &real_population,
            k,
            derive_seed(&[cell_seed, phase::REAL]),
        )?;

        let real_avg = real.averages();
        let market_avg = real.market_average();
        let predicted_avg = real_avg[&prediction.kind];
        let best = real_avg.values().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(ExperimentRecord {
            schedule_id: schedule.id.clone(),
            population_index,
            population: population.clone(),
            p_index,
            p,
            predicted_population: distorted,
            predicted: prediction.kind,
            prediction_tie: prediction.tie,
            prediction_avg: prediction.outcome.averages(),
            real_avg,
            market_avg,
            multiplier: (market_avg != 0.0).then(|| predicted_avg / market_avg),
            correct: predicted_avg >= best,
            k,
            seed: cell_seed,
            real_trades: real.trades,
        })
    }

    fn run_cells(
        &self,
        schedules: &[NamedSchedule],
        populations: &[TraderPopulation],
        p_grid: &[f64],
        k: u32,
    ) -> Result<ExperimentOutput, OracleError> {
        if k == 0 {
            return Err(OracleError::ZeroSubtrials);
        }
        for &p in p_grid {
            NoiseSpec::new(p, &self.kinds)?;
        }
        let cells: Vec<(usize, usize, usize)> = (0..schedules.len())
            .flat_map(|s| {
                (0..populations.len()).flat_map(move |i| (0..p_grid.len()).map(move |j| (s, i, j)))
            })
            .collect();
        let results: Vec<_> = cells
            .par_iter()
            .map(|&(s, i, j)| {
                let r = self.run_cell(&schedules[s], i, &populations[i], j, p_grid[j], k);
                ((s, i, j), r)
            })
            .collect();

        let mut out = ExperimentOutput::default();
        for ((s, i, j), r) in results {
            match r {
                Ok(rec) => out.records.push(rec),
                Err(e) => {
                    log::warn!("cell ({}, {i}, {j}) failed: {e}", schedules[s].id);
                    out.failures.push(CellFailure {
                        schedule_id: schedules[s].id.clone(),
                        population_index: i,
                        p_index: j,
                        error: e.to_string(),
                    });
                }
            }
        }
        Ok(out)
    }

    /// Perfect oracle: predict on the true population with `k` subtrials
    /// (one in the baseline design), then measure.
    pub fn experiment1(
        &self,
        schedules: &[NamedSchedule],
        populations: &[TraderPopulation],
        k: u32,
    ) -> Result<ExperimentOutput, OracleError> {
        self.run_cells(schedules, populations, &[0.0], k)
    }

    /// Noisy oracle over a grid of misreport probabilities.
    pub fn experiment2(
        &self,
        schedules: &[NamedSchedule],
        populations: &[TraderPopulation],
        p_grid: &[f64],
        k: u32,
    ) -> Result<ExperimentOutput, OracleError> {
        self.run_cells(schedules, populations, p_grid, k)
    }
}

/// Schedules where more than half of the cells traded nothing.
pub fn discarded_schedules<'a, I>(records: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = &'a RecordRow>,
{
    let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in records {
        let e = tally.entry(&r.schedule_id).or_default();
        e.0 += 1;
        if r.trades == 0 {
            e.1 += 1;
        }
    }
    tally
        .into_iter()
        .filter(|(_, (cells, empty))| 2 * empty > *cells)
        .map(|(id, _)| id.to_string())
        .collect()
}

/// The columns every records file must carry.
pub const REQUIRED_COLUMNS: [&str; 11] = [
    "schedule_id",
    "population",
    "p",
    "predicted_kind",
    "market_avg",
    "multiplier",
    "correct",
    "K",
    "seed",
    "trades",
    "tie",
];

/// Flat form of a record, as stored in and read back from CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordRow {
    pub schedule_id: String,
    pub population: String,
    pub p: f64,
    pub predicted: StrategyKind,
    pub prediction_avg: BTreeMap<StrategyKind, Option<f64>>,
    pub real_avg: BTreeMap<StrategyKind, Option<f64>>,
    pub market_avg: f64,
    pub multiplier: Option<f64>,
    pub correct: bool,
    pub k: u32,
    pub seed: u64,
    pub trades: u64,
    pub tie: bool,
}

impl RecordRow {
    pub fn from_record(r: &ExperimentRecord, kinds: &[StrategyKind]) -> Self {
        RecordRow {
            schedule_id: r.schedule_id.clone(),
            population: r.population.label(kinds),
            p: r.p,
            predicted: r.predicted,
            prediction_avg: kinds
                .iter()
                .map(|&k| (k, r.prediction_avg.get(&k).copied()))
                .collect(),
            real_avg: kinds
                .iter()
                .map(|&k| (k, r.real_avg.get(&k).copied()))
                .collect(),
            market_avg: r.market_avg,
            multiplier: r.multiplier,
            correct: r.correct,
            k: r.k,
            seed: r.seed,
            trades: r.real_trades,
            tie: r.prediction_tie,
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes one row per record, sorted by (schedule, population, p).
pub fn write_records_csv<W: io::Write>(
    records: &[ExperimentRecord],
    kinds: &[StrategyKind],
    out: W,
) -> Result<(), OracleError> {
    let mut sorted: Vec<&ExperimentRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.schedule_id, a.population_index, a.p_index).cmp(&(
            &b.schedule_id,
            b.population_index,
            b.p_index,
        ))
    });
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = REQUIRED_COLUMNS[..4]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(kinds.iter().map(|k| format!("pred_avg_{k}")));
    header.extend(kinds.iter().map(|k| format!("real_avg_{k}")));
    header.extend(REQUIRED_COLUMNS[4..].iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for r in sorted {
        let row = RecordRow::from_record(r, kinds);
        let mut fields = vec![
            row.schedule_id,
            row.population,
            row.p.to_string(),
            row.predicted.to_string(),
        ];
        fields.extend(row.prediction_avg.values().map(|v| opt(*v)));
        fields.extend(row.real_avg.values().map(|v| opt(*v)));
        fields.extend([
            row.market_avg.to_string(),
            opt(row.multiplier),
            row.correct.to_string(),
            row.k.to_string(),
            row.seed.to_string(),
            row.trades.to_string(),
            row.tie.to_string(),
        ]);
        w.write_record(&fields)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a records file, checking the schema first.
pub fn read_records_csv<R: io::Read>(input: R) -> Result<Vec<RecordRow>, OracleError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let missing: Vec<&str> = REQUIRED_COLUMNS
        .iter()
        .copied()
        .filter(|c| !headers.iter().any(|h| h == *c))
        .collect();
    if !missing.is_empty() {
        return Err(OracleError::Schema(missing.join(", ")));
    }
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .expect("checked above")
    };
    let kind_columns = |prefix: &str| -> Result<Vec<(StrategyKind, usize)>, OracleError> {
        headers
            .iter()
            .enumerate()
            .filter_map(|(i, h)| h.strip_prefix(prefix).map(|k| (k, i)))
            .map(|(k, i)| Ok((k.parse::<StrategyKind>()?, i)))
            .collect()
    };
    let pred_cols = kind_columns("pred_avg_")?;
    let real_cols = kind_columns("real_avg_")?;

    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = n + 2;
        let bad = |message: String| OracleError::BadRow { row, message };
        let field = |name: &str| rec.get(col(name)).unwrap_or("");
        let float = |s: &str| -> Result<Option<f64>, OracleError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| bad(format!("`{s}` is not a number")))
            }
        };
        let int = |name: &str| -> Result<u64, OracleError> {
            field(name)
                .parse()
                .map_err(|_| bad(format!("{name} `{}` is not an integer", field(name))))
        };
        let boolean = |name: &str| -> Result<bool, OracleError> {
            field(name)
                .parse()
                .map_err(|_| bad(format!("{name} `{}` is not a boolean", field(name))))
        };
        let avgs = |cols: &[(StrategyKind, usize)]| -> Result<BTreeMap<StrategyKind, Option<f64>>, OracleError> {
            cols.iter()
                .map(|&(k, i)| Ok((k, float(rec.get(i).unwrap_or(""))?)))
                .collect()
        };
        rows.push(RecordRow {
            schedule_id: field("schedule_id").to_string(),
            population: field("population").to_string(),
            p: float(field("p"))?.ok_or_else(|| bad("missing p".into()))?,
            predicted: field("predicted_kind").parse()?,
            prediction_avg: avgs(&pred_cols)?,
            real_avg: avgs(&real_cols)?,
            market_avg: float(field("market_avg"))?.unwrap_or(0.0),
            multiplier: float(field("multiplier"))?,
            correct: boolean("correct")?,
            k: int("K")? as u32,
            seed: int("seed")?,
            trades: int("trades")?,
            tie: boolean("tie")?,
        });
    }
    Ok(rows)
}
