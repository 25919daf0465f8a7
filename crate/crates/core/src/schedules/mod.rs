//! Randomized supply/demand schedules, limit-price layout, order arrival
//! timing and the competitive-equilibrium reference point.
//!
//! A schedule is a list of sub-schedules tiling `[0, duration)`. Supply and
//! demand always share sub-schedule boundaries; only their price ranges and
//! step modes differ.

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exchange::{Price, MAX_PRICE, MIN_PRICE};

mod equilibrium;

pub use equilibrium::{equilibrium, Equilibrium};

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("interval must be positive")]
    ZeroInterval,
    #[error("duration {duration} is not a positive multiple of interval {interval}")]
    DurationNotMultiple { duration: u32, interval: u32 },
    #[error("max_schedules {max} must lie in 1..={intervals}")]
    BadMaxSchedules { max: u32, intervals: u32 },
    #[error("midprice {0} outside the price domain")]
    BadMidprice(i64),
    #[error("supply and demand sub-schedules do not share boundaries")]
    MisalignedSides,
    #[error("sub-schedules do not tile [0, {0})")]
    NotTiling(u32),
    #[error("sub-schedule [{from}, {to}) is not a whole number of intervals")]
    RaggedSubSchedule { from: u32, to: u32 },
    #[error("sub-schedule price range [{low}, {high}] is inverted")]
    InvertedRange { low: i64, high: i64 },
    #[error("unknown {what} `{value}`")]
    UnknownMode { what: &'static str, value: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    Fixed,
    Jittered,
    Random,
}

impl StepMode {
    pub const ALL: [StepMode; 3] = [StepMode::Fixed, StepMode::Random, StepMode::Jittered];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMode {
    Periodic,
    DripFixed,
    DripJittered,
    DripPoisson,
}

impl TimeMode {
    pub const ALL: [TimeMode; 4] = [
        TimeMode::Periodic,
        TimeMode::DripPoisson,
        TimeMode::DripJittered,
        TimeMode::DripFixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TimeMode::Periodic => "periodic",
            TimeMode::DripFixed => "drip_fixed",
            TimeMode::DripJittered => "drip_jittered",
            TimeMode::DripPoisson => "drip_poisson",
        }
    }
}

impl fmt::Display for TimeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TimeMode {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TimeMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ScheduleError::UnknownMode {
                what: "timemode",
                value: s.to_string(),
            })
    }
}

/// One time slice of a schedule, for one side of the market.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubSchedule {
    pub from: u32,
    pub to: u32,
    pub low: Price,
    pub high: Price,
    pub stepmode: StepMode,
}

impl SubSchedule {
    pub fn contains(&self, t: u32) -> bool {
        (self.from..self.to).contains(&t)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderSchedule {
    pub timemode: TimeMode,
    pub interval: u32,
    pub supply: Vec<SubSchedule>,
    pub demand: Vec<SubSchedule>,
}

impl OrderSchedule {
    /// End of the last sub-schedule.
    pub fn duration(&self) -> u32 {
        self.supply.last().map_or(0, |s| s.to)
    }

    pub fn num_intervals(&self) -> u32 {
        self.duration() / self.interval.max(1)
    }

    /// Supply and demand sub-schedules active at timestep `t`.
    pub fn active_at(&self, t: u32) -> Option<(&SubSchedule, &SubSchedule)> {
        let idx = self.supply.iter().position(|s| s.contains(t))?;
        Some((&self.supply[idx], &self.demand[idx]))
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.interval == 0 {
            return Err(ScheduleError::ZeroInterval);
        }
        if self.supply.len() != self.demand.len()
            || self
                .supply
                .iter()
                .zip(&self.demand)
                .any(|(s, d)| s.from != d.from || s.to != d.to)
        {
            return Err(ScheduleError::MisalignedSides);
        }
        let mut cursor = 0;
        for sub in self.supply.iter().chain(&self.demand) {
            if sub.low > sub.high {
                return Err(ScheduleError::InvertedRange {
                    low: sub.low.ticks(),
                    high: sub.high.ticks(),
                });
            }
        }
        for sub in &self.supply {
            if sub.from != cursor || sub.to <= sub.from {
                return Err(ScheduleError::NotTiling(self.duration()));
            }
            if (sub.to - sub.from) % self.interval != 0 {
                return Err(ScheduleError::RaggedSubSchedule {
                    from: sub.from,
                    to: sub.to,
                });
            }
            cursor = sub.to;
        }
        if self.supply.is_empty() {
            return Err(ScheduleError::NotTiling(0));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Generator parameters. Defaults are the baseline experiment's values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedulerParams {
    pub duration: u32,
    pub interval: u32,
    pub max_schedules: u32,
    pub midprice: i64,
    pub max_volatility: i64,
    pub max_change: i64,
}

impl Default for SchedulerParams {
    fn default() -> Self {
        SchedulerParams {
            duration: 240,
            interval: 30,
            max_schedules: 8,
            midprice: 100,
            max_volatility: 60,
            max_change: 40,
        }
    }
}

impl SchedulerParams {
    pub fn num_intervals(&self) -> u32 {
        self.duration / self.interval.max(1)
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.interval == 0 {
            return Err(ScheduleError::ZeroInterval);
        }
        if self.duration == 0 || !self.duration.is_multiple_of(self.interval) {
            return Err(ScheduleError::DurationNotMultiple {
                duration: self.duration,
                interval: self.interval,
            });
        }
        let intervals = self.num_intervals();
        if self.max_schedules == 0 || self.max_schedules > intervals {
            return Err(ScheduleError::BadMaxSchedules {
                max: self.max_schedules,
                intervals,
            });
        }
        if !(MIN_PRICE..=MAX_PRICE).contains(&self.midprice) {
            return Err(ScheduleError::BadMidprice(self.midprice));
        }
        Ok(())
    }
}

/// Draws a random schedule: time mode, sub-schedule count and lengths once
/// per schedule; volatility, midprice shift and step mode once per
/// sub-schedule and side.
pub fn generate_schedule<R: Rng + ?Sized>(
    params: &SchedulerParams,
    rng: &mut R,
) -> Result<OrderSchedule, ScheduleError> {
    params.validate()?;
    let timemode = *TimeMode::ALL.choose(rng).unwrap();
    let count = rng.random_range(1..=params.max_schedules) as usize;

    let mut lengths = vec![1u32; count];
    for _ in 0..(params.num_intervals() as usize - count) {
        let pick = rng.random_range(0..count);
        lengths[pick] += 1;
    }

    let mut supply = Vec::with_capacity(count);
    let mut demand = Vec::with_capacity(count);
    let mut from = 0;
    for len in lengths {
        let to = from + len * params.interval;
        for list in [&mut supply, &mut demand] {
            let volatility = rng.random_range(0..=params.max_volatility.max(0));
            let change = rng.random_range(-params.max_change.abs()..=params.max_change.abs());
            let stepmode = *StepMode::ALL.choose(rng).unwrap();
            let centre = params.midprice + change;
            list.push(SubSchedule {
                from,
                to,
                low: Price::clamped(centre - volatility),
                high: Price::clamped(centre + volatility),
                stepmode,
            });
        }
        from = to;
    }

    Ok(OrderSchedule {
        timemode,
        interval: params.interval,
        supply,
        demand,
    })
}

/// The deterministic baseline market: one sub-schedule, identical supply and
/// demand ranges, evenly stepped prices, periodic replenishment.
pub fn simple_schedule(low: i64, high: i64, duration: u32, interval: u32) -> OrderSchedule {
    let sub = SubSchedule {
        from: 0,
        to: duration,
        low: Price::clamped(low.min(high)),
        high: Price::clamped(low.max(high)),
        stepmode: StepMode::Fixed,
    };
    OrderSchedule {
        timemode: TimeMode::Periodic,
        interval,
        supply: vec![sub],
        demand: vec![sub],
    }
}

/// Limit prices for `n` orders drawn from one sub-schedule's range.
pub fn order_prices<R: Rng + ?Sized>(sub: &SubSchedule, n: usize, rng: &mut R) -> Vec<Price> {
    let low = sub.low.ticks();
    let high = sub.high.ticks();
    let span = (high - low) as f64;
    let step = if n > 1 { span / (n - 1) as f64 } else { 0.0 };
    let even = |i: usize| {
        if n > 1 {
            low as f64 + i as f64 * step
        } else {
            low as f64 + span / 2.0
        }
    };
    let clamp = |x: f64| Price::clamped((x.round() as i64).clamp(low, high));

    match sub.stepmode {
        StepMode::Fixed => (0..n).map(|i| clamp(even(i))).collect(),
        StepMode::Jittered => {
            let half = if n > 1 { step / 2.0 } else { span / 2.0 };
            (0..n)
                .map(|i| {
                    let jitter = if half > 0.0 {
                        rng.random_range(-half..=half)
                    } else {
                        0.0
                    };
                    clamp(even(i) + jitter)
                })
                .collect()
        }
        StepMode::Random => (0..n)
            .map(|_| Price::clamped(rng.random_range(low..=high)))
            .collect(),
    }
}

/// Arrival timestep of each of `n` orders issued in the interval starting
/// at `start`. Every time lies in `[start, start + interval)`.
pub fn deployment_times<R: Rng + ?Sized>(
    timemode: TimeMode,
    start: u32,
    interval: u32,
    n: usize,
    rng: &mut R,
) -> Vec<u32> {
    let last = start + interval.max(1) - 1;
    let spacing = interval as f64 / n.max(1) as f64;
    match timemode {
        TimeMode::Periodic => vec![start; n],
        TimeMode::DripFixed => (0..n)
            .map(|i| (start + (i as f64 * spacing).floor() as u32).min(last))
            .collect(),
        TimeMode::DripJittered => (0..n)
            .map(|i| {
                let base = i as f64 * spacing;
                let jitter = if spacing > 0.0 {
                    rng.random_range(-spacing / 2.0..=spacing / 2.0)
                } else {
                    0.0
                };
                let offset = (base + jitter).max(0.0).floor() as u32;
                (start + offset).min(last)
            })
            .collect(),
        TimeMode::DripPoisson => {
            let exp = Exp::new(1.0 / spacing.max(f64::MIN_POSITIVE)).expect("positive rate");
            let mut t = 0.0;
            (0..n)
                .map(|_| {
                    t += exp.sample(rng);
                    (start + t.floor().min(interval as f64) as u32).min(last)
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SimRng;
    use rand::SeedableRng;

    fn sub(low: i64, high: i64, stepmode: StepMode) -> SubSchedule {
        SubSchedule {
            from: 0,
            to: 30,
            low: Price::new(low).unwrap(),
            high: Price::new(high).unwrap(),
            stepmode,
        }
    }

    fn ticks(v: Vec<Price>) -> Vec<i64> {
        v.into_iter().map(Price::ticks).collect()
    }

    #[test]
    fn baseline_params_tile_duration() {
        let mut rng = SimRng::seed_from_u64(3);
        let s = generate_schedule(&SchedulerParams::default(), &mut rng).unwrap();
        s.validate().unwrap();
        assert_eq!(s.duration(), 240);
        assert!(s.supply.len() <= 8);
    }

    #[test]
    fn zero_volatility_and_change_is_degenerate() {
        let params = SchedulerParams {
            max_volatility: 0,
            max_change: 0,
            ..Default::default()
        };
        let mut rng = SimRng::seed_from_u64(11);
        for _ in 0..50 {
            let s = generate_schedule(&params, &mut rng).unwrap();
            for sub in s.supply.iter().chain(&s.demand) {
                assert_eq!((sub.low.ticks(), sub.high.ticks()), (100, 100));
            }
        }
    }

    #[test]
    fn rejects_invalid_params() {
        let bad = SchedulerParams {
            duration: 250,
            ..Default::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(ScheduleError::DurationNotMultiple { .. })
        ));
        let bad = SchedulerParams {
            max_schedules: 9,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn fixed_prices_are_evenly_spaced() {
        let mut rng = SimRng::seed_from_u64(0);
        assert_eq!(
            ticks(order_prices(&sub(50, 150, StepMode::Fixed), 2, &mut rng)),
            vec![50, 150]
        );
        assert_eq!(
            ticks(order_prices(&sub(60, 140, StepMode::Fixed), 5, &mut rng)),
            vec![60, 80, 100, 120, 140]
        );
    }

    #[test]
    fn degenerate_random_range() {
        let mut rng = SimRng::seed_from_u64(0);
        assert!(order_prices(&sub(100, 100, StepMode::Random), 17, &mut rng)
            .iter()
            .all(|p| p.ticks() == 100));
    }

    #[test]
    fn jittered_prices_stay_in_range() {
        let mut rng = SimRng::seed_from_u64(5);
        for n in 1..20 {
            for p in order_prices(&sub(70, 90, StepMode::Jittered), n, &mut rng) {
                assert!((70..=90).contains(&p.ticks()));
            }
        }
    }

    #[test]
    fn deployment_examples() {
        let mut rng = SimRng::seed_from_u64(1);
        assert_eq!(
            deployment_times(TimeMode::Periodic, 30, 30, 4, &mut rng),
            vec![30; 4]
        );
        assert_eq!(
            deployment_times(TimeMode::DripFixed, 0, 30, 3, &mut rng),
            vec![0, 10, 20]
        );
        for mode in TimeMode::ALL {
            for n in [1, 3, 16, 100] {
                for t in deployment_times(mode, 60, 30, n, &mut rng) {
                    assert!((60..90).contains(&t), "{mode} {n} {t}");
                }
            }
        }
    }

    #[test]
    fn timemode_names_round_trip() {
        for mode in TimeMode::ALL {
            assert_eq!(mode.name().parse::<TimeMode>().unwrap(), mode);
        }
        assert!("weekly".parse::<TimeMode>().is_err());
    }

    #[test]
    fn validate_catches_misaligned_sides() {
        let mut s = simple_schedule(50, 150, 240, 30);
        s.validate().unwrap();
        s.demand[0].to = 210;
        assert_eq!(s.validate(), Err(ScheduleError::MisalignedSides));
    }
}
