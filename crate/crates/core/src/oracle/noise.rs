use rand::Rng;

use super::{OracleError, TraderPopulation};
use crate::strategies::StrategyKind;
use crate::SimRng;

/// Largest meaningful misreport probability: at `1 − 1/|S|` every reported
/// kind is uniform over the strategy set regardless of the true kind.
pub fn p_max(kinds: &[StrategyKind]) -> Result<f64, OracleError> {
    if kinds.is_empty() {
        return Err(OracleError::EmptyStrategySet);
    }
    Ok(1.0 - 1.0 / kinds.len() as f64)
}

const P_TOLERANCE: f64 = 1e-12;

/// Misreport probability over a strategy set.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    p: f64,
    kinds: Vec<StrategyKind>,
}

impl NoiseSpec {
    pub fn new(p: f64, kinds: &[StrategyKind]) -> Result<Self, OracleError> {
        let max = p_max(kinds)?;
        if !(0.0..=max + P_TOLERANCE).contains(&p) {
            return Err(OracleError::NoiseOutOfRange { p, max });
        }
        let mut kinds = kinds.to_vec();
        kinds.sort();
        kinds.dedup();
        Ok(NoiseSpec {
            p: p.min(max),
            kinds,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn kinds(&self) -> &[StrategyKind] {
        &self.kinds
    }
}

/// Independently misreports each trader's kind with probability `p` as a
/// uniformly drawn different kind from the set. One uniform is consumed per
/// trader whatever `p` is, so the stream position does not depend on `p`.
pub fn apply_noise(
    traders: &[StrategyKind],
    noise: &NoiseSpec,
    rng: &mut SimRng,
) -> Result<Vec<StrategyKind>, OracleError> {
    traders
        .iter()
        .map(|&truth| {
            if !noise.kinds.contains(&truth) {
                return Err(OracleError::KindNotInSet(truth));
            }
            let u: f64 = rng.random();
            if u < noise.p && noise.kinds.len() > 1 {
                let pick = rng.random_range(0..noise.kinds.len() - 1);
                let others = noise.kinds.iter().filter(|&&k| k != truth);
                Ok(*others.clone().nth(pick).expect("pick in range"))
            } else {
                Ok(truth)
            }
        })
        .collect()
}

/// Distorts buyers and sellers independently and re-counts them. The result
/// need not be symmetric.
pub fn distort_population(
    population: &TraderPopulation,
    noise: &NoiseSpec,
    rng: &mut SimRng,
) -> Result<TraderPopulation, OracleError> {
    let (buyers, sellers) = population.to_kinds();
    let buyers = apply_noise(&buyers, noise, rng)?;
    let sellers = apply_noise(&sellers, noise, rng)?;
    Ok(TraderPopulation::from_kinds(&buyers, &sellers))
}
