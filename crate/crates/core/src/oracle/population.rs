use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::OracleError;
use crate::strategies::StrategyKind;

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct SideCounts {
    pub buyers: u32,
    pub sellers: u32,
}

/// Number of buyers and sellers following each strategy kind.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TraderPopulation {
    counts: BTreeMap<StrategyKind, SideCounts>,
}

impl TraderPopulation {
    /// Equal buyers and sellers per kind. Kinds with a zero count are dropped.
    pub fn symmetric<I: IntoIterator<Item = (StrategyKind, u32)>>(counts: I) -> Self {
        let mut pop = TraderPopulation::default();
        for (kind, n) in counts {
            if n > 0 {
                let c = pop.counts.entry(kind).or_default();
                c.buyers += n;
                c.sellers += n;
            }
        }
        pop
    }

    /// Re-counts explicit buyer and seller kind lists.
    pub fn from_kinds(buyers: &[StrategyKind], sellers: &[StrategyKind]) -> Self {
        let mut pop = TraderPopulation::default();
        for &k in buyers {
            pop.counts.entry(k).or_default().buyers += 1;
        }
        for &k in sellers {
            pop.counts.entry(k).or_default().sellers += 1;
        }
        pop
    }

    /// Buyer and seller kind lists in canonical (kind-sorted) order.
    pub fn to_kinds(&self) -> (Vec<StrategyKind>, Vec<StrategyKind>) {
        let mut buyers = Vec::new();
        let mut sellers = Vec::new();
        for (&k, c) in &self.counts {
            buyers.extend(std::iter::repeat_n(k, c.buyers as usize));
            sellers.extend(std::iter::repeat_n(k, c.sellers as usize));
        }
        (buyers, sellers)
    }

    /// A copy with one extra buyer and one extra seller of `kind`.
    pub fn with_extra_pair(&self, kind: StrategyKind) -> Self {
        let mut pop = self.clone();
        let c = pop.counts.entry(kind).or_default();
        c.buyers += 1;
        c.sellers += 1;
        pop
    }

    pub fn iter(&self) -> impl Iterator<Item = (StrategyKind, SideCounts)> + '_ {
        self.counts.iter().map(|(&k, &c)| (k, c))
    }

    pub fn kinds(&self) -> impl Iterator<Item = StrategyKind> + '_ {
        self.counts
            .iter()
            .filter(|(_, c)| c.buyers + c.sellers > 0)
            .map(|(&k, _)| k)
    }

    pub fn get(&self, kind: StrategyKind) -> SideCounts {
        self.counts.get(&kind).copied().unwrap_or_default()
    }

    pub fn total(&self) -> u32 {
        self.counts.values().map(|c| c.buyers + c.sellers).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        self.counts.values().all(|c| c.buyers == c.sellers)
    }

    /// Dash-joined buyer counts in the order of `kinds`, e.g. `4-6-2`.
    pub fn label(&self, kinds: &[StrategyKind]) -> String {
        kinds
            .iter()
            .map(|&k| self.get(k).buyers.to_string())
            .collect::<Vec<_>>()
            .join("-")
    }

    /// Parses `AA=4,GDX=4,ZIP=4` into a symmetric population.
    pub fn parse(spec: &str) -> Result<Self, OracleError> {
        let mut counts = Vec::new();
        for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (kind, n) = part
                .split_once('=')
                .ok_or_else(|| OracleError::BadPopulation(spec.to_string()))?;
            let kind: StrategyKind = kind.trim().parse()?;
            let n: u32 = n
                .trim()
                .parse()
                .map_err(|_| OracleError::BadPopulation(spec.to_string()))?;
            counts.push((kind, n));
        }
        let pop = TraderPopulation::symmetric(counts);
        if pop.total() == 0 {
            return Err(OracleError::BadPopulation(spec.to_string()));
        }
        Ok(pop)
    }
}

impl fmt::Display for TraderPopulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .counts
            .iter()
            .map(|(k, c)| {
                if c.buyers == c.sellers {
                    format!("{k}={}", c.buyers)
                } else {
                    format!("{k}={}/{}", c.buyers, c.sellers)
                }
            })
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// Every split of `n_per_side` traders per side into `kinds.len()` positive
/// parts, mirrored on buyers and sellers. There are C(n − 1, k − 1) of them.
pub fn enumerate_populations(
    n_per_side: u32,
    kinds: &[StrategyKind],
) -> Result<Vec<TraderPopulation>, OracleError> {
    let k = kinds.len() as u32;
    if k == 0 || n_per_side < k {
        return Err(OracleError::TooFewTraders {
            n_per_side,
            kinds: kinds.len(),
        });
    }
    let mut out = Vec::new();
    let mut parts = vec![0u32; kinds.len()];
    compositions(n_per_side, 0, &mut parts, &mut |parts| {
        out.push(TraderPopulation::symmetric(
            kinds.iter().copied().zip(parts.iter().copied()),
        ));
    });
    Ok(out)
}

fn compositions(remaining: u32, idx: usize, parts: &mut [u32], emit: &mut impl FnMut(&[u32])) {
    let left = (parts.len() - idx - 1) as u32;
    if left == 0 {
        parts[idx] = remaining;
        emit(parts);
        return;
    }
    for n in 1..=(remaining - left) {
        parts[idx] = n;
        compositions(remaining - n, idx + 1, parts, emit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use StrategyKind::*;

    fn binom(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn paper_scale_counts() {
        assert_eq!(
            enumerate_populations(16, &[AA, GDX, SNPR, ZIP])
                .unwrap()
                .len(),
            455
        );
        assert_eq!(
            enumerate_populations(12, &[AA, GDX, ZIP]).unwrap().len(),
            55
        );
        let two = enumerate_populations(2, &[AA, ZIP]).unwrap();
        assert_eq!(two, vec![TraderPopulation::symmetric([(AA, 1), (ZIP, 1)])]);
    }

    #[test]
    fn too_few_traders() {
        assert!(matches!(
            enumerate_populations(2, &[AA, GDX, ZIP]),
            Err(OracleError::TooFewTraders { .. })
        ));
    }

    #[test]
    fn counts_match_binomial_and_brute_force() {
        let all = [AA, GDX, SNPR, ZIC, ZIP];
        for k in 1..=5usize {
            for n in k as u32..=20 {
                let pops = enumerate_populations(n, &all[..k]).unwrap();
                assert_eq!(
                    pops.len() as u64,
                    binom(n as u64 - 1, k as u64 - 1),
                    "n={n} k={k}"
                );
                if n <= 10 {
                    // brute force: every vector in [1, n]^k summing to n
                    let mut count = 0;
                    let mut v = vec![1u32; k];
                    loop {
                        if v.iter().sum::<u32>() == n {
                            count += 1;
                        }
                        let mut i = 0;
                        while i < k && v[i] == n {
                            v[i] = 1;
                            i += 1;
                        }
                        if i == k {
                            break;
                        }
                        v[i] += 1;
                    }
                    assert_eq!(pops.len(), count);
                }
                for p in &pops {
                    assert!(p.is_symmetric());
                    assert_eq!(p.total(), 2 * n);
                    assert!(all[..k].iter().all(|&kind| p.get(kind).buyers >= 1));
                }
            }
        }
    }

    #[test]
    fn labels_and_parsing() {
        let p = TraderPopulation::parse("ZIP=2, AA=6,GDX=4").unwrap();
        assert_eq!(p.label(&[AA, GDX, ZIP]), "6-4-2");
        assert_eq!(p.to_string(), "AA=6,GDX=4,ZIP=2");
        assert!(TraderPopulation::parse("AA").is_err());
        assert!(TraderPopulation::parse("XX=3").is_err());
        assert_eq!(
            p.with_extra_pair(GDX).get(GDX),
            SideCounts {
                buyers: 5,
                sellers: 5
            }
        );
    }

    #[test]
    fn kinds_round_trip() {
        let p = TraderPopulation::symmetric([(ZIP, 2), (AA, 1)]);
        let (b, s) = p.to_kinds();
        assert_eq!(b, vec![AA, ZIP, ZIP]);
        assert_eq!(TraderPopulation::from_kinds(&b, &s), p);
    }
}
