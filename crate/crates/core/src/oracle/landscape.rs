use std::collections::BTreeMap;

use rayon::prelude::*;

use super::experiment::{Harness, Prediction};
use super::seeds::{derive_seed, phase};
use super::{OracleError, TraderPopulation};
use crate::schedules::OrderSchedule;
use crate::strategies::StrategyKind;

/// Integer points `(a, b, c)` with `a + b + c = resolution`.
pub fn simplex_grid(resolution: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for a in (0..=resolution).rev() {
        for b in (0..=resolution - a).rev() {
            out.push([a, b, resolution - a - b]);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct LandscapePoint {
    /// Grid weights, aligned with the harness kinds.
    pub weights: [u32; 3],
    pub population: TraderPopulation,
    pub prediction: Prediction,
}

impl LandscapePoint {
    pub fn dominant(&self) -> StrategyKind {
        self.prediction.kind
    }
}

/// Splits `n` traders across kinds in proportion to `weights` using
/// largest remainders. Remainder ties go to the earlier kind in canonical
/// order, so the result does not depend on how kinds are listed.
fn apportion(n: u32, kinds: &[StrategyKind], weights: &[u32]) -> BTreeMap<StrategyKind, u32> {
    let total: u32 = weights.iter().sum();
    let mut rows: Vec<(StrategyKind, u32, u64)> = kinds
        .iter()
        .zip(weights)
        .map(|(&k, &w)| {
            let exact = n as u64 * w as u64;
            (k, (exact / total as u64) as u32, exact % total as u64)
        })
        .collect();
    let assigned: u32 = rows.iter().map(|r| r.1).sum();
    rows.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));
    for r in rows.iter_mut().take((n - assigned) as usize) {
        r.1 += 1;
    }
    rows.into_iter().map(|(k, c, _)| (k, c)).collect()
}

impl Harness {
    /// Dominant kind at every point of a simplex grid over the three
    /// harness kinds. Points where a kind with positive weight rounds to
    /// zero traders are skipped.
    pub fn dominance_landscape(
        &self,
        schedule: &OrderSchedule,
        resolution: u32,
        k: u32,
    ) -> Result<Vec<LandscapePoint>, OracleError> {
        if self.kinds.len() != 3 {
            return Err(OracleError::NotThreeKinds(self.kinds.len()));
        }
        if k == 0 {
            return Err(OracleError::ZeroSubtrials);
        }
        if resolution == 0 {
            return Ok(Vec::new());
        }
        let points: Vec<([u32; 3], TraderPopulation)> = simplex_grid(resolution)
            .into_iter()
            .filter_map(|w| {
                let counts = apportion(self.n_per_side, &self.kinds, &w);
                let skipped = self
                    .kinds
                    .iter()
                    .zip(w)
                    .any(|(kind, wi)| wi > 0 && counts[kind] == 0);
                (!skipped).then(|| (w, TraderPopulation::symmetric(counts)))
            })
            .collect();

        points
            .into_par_iter()
            .map(|(weights, population)| {
                // seeded by content so relabelled kinds see the same draws
                let mut key = vec![self.seed, phase::LANDSCAPE];
                for (kind, c) in population.iter() {
                    key.push(kind as u64);
                    key.push(c.buyers as u64);
                }
                let prediction =
                    self.predict_dominant(schedule, &population, k, derive_seed(&key))?;
                Ok(LandscapePoint {
                    weights,
                    population,
                    prediction,
                })
            })
            .collect()
    }
}
