use std::collections::{BTreeMap, BTreeSet};
use std::io;

use serde::Serialize;

use super::{fit_line, rank_sum_test, remove_outliers, FitResult};
use crate::oracle::{discarded_schedules, RecordRow};

/// Label used for rows pooling every kept schedule.
pub const ALL_SCHEDULES: &str = "all";

// Noise levels are non-negative, so their bit patterns sort numerically.
fn p_key(p: f64) -> u64 {
    (p + 0.0).to_bits()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyCurve {
    /// `(p, wrong predictions)` in ascending p.
    pub points: Vec<(f64, usize)>,
    pub fit: Option<FitResult>,
}

impl AccuracyCurve {
    pub fn wrong_at(&self, p: f64) -> Option<usize> {
        self.points
            .iter()
            .find(|(q, _)| p_key(*q) == p_key(p))
            .map(|x| x.1)
    }
}

/// Wrong-prediction counts per noise level, with a fitted trend when at
/// least two levels are present.
pub fn accuracy_curve<'a, I>(records: I) -> AccuracyCurve
where
    I: IntoIterator<Item = &'a RecordRow>,
{
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(p_key(r.p)).or_default() += usize::from(!r.correct);
    }
    let points: Vec<(f64, usize)> = counts
        .into_iter()
        .map(|(k, n)| (f64::from_bits(k), n))
        .collect();
    let xy: Vec<(f64, f64)> = points.iter().map(|&(p, n)| (p, n as f64)).collect();
    AccuracyCurve {
        fit: fit_line(&xy).ok(),
        points,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub schedule_id: String,
    pub p: f64,
    pub records: usize,
    /// Records with trades and a defined multiplier.
    pub usable: usize,
    /// Usable records left after outlier removal.
    pub kept: usize,
    pub multiplier_mean: Option<f64>,
    pub market_mean: Option<f64>,
    pub wrong: usize,
    pub above_breakeven: usize,
    /// Rank-sum p-value of this level's multipliers against p = 0.
    pub rank_p_vs_zero: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitRow {
    pub schedule_id: String,
    pub series: String,
    pub slope: f64,
    pub intercept: f64,
    pub residual_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotRow {
    pub schedule_id: String,
    pub series: String,
    pub p: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Analysis {
    pub discarded: BTreeSet<String>,
    pub summary: Vec<SummaryRow>,
    pub fits: Vec<FitRow>,
    pub plot: Vec<PlotRow>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

struct Level<'a> {
    rows: Vec<&'a RecordRow>,
    multipliers: Vec<f64>,
}

fn usable(r: &RecordRow) -> Option<f64> {
    r.multiplier.filter(|_| r.trades > 0)
}

/// Full analysis of a records table. Schedules failing the zero-trade
/// rule are reported and left out; the result does not depend on row
/// order.
pub fn analyze(rows: &[RecordRow]) -> Analysis {
    let mut sorted: Vec<&RecordRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.schedule_id, p_key(a.p), &a.population, a.seed).cmp(&(
            &b.schedule_id,
            p_key(b.p),
            &b.population,
            b.seed,
        ))
    });
    let discarded = discarded_schedules(sorted.iter().copied());
    let kept: Vec<&RecordRow> = sorted
        .into_iter()
        .filter(|r| !discarded.contains(&r.schedule_id))
        .collect();

    let mut groups: BTreeMap<&str, Vec<&RecordRow>> = BTreeMap::new();
    for &r in &kept {
        groups.entry(r.schedule_id.as_str()).or_default().push(r);
    }
    if groups.len() > 1 {
        groups.insert(ALL_SCHEDULES, kept.clone());
    }

    let mut out = Analysis {
        discarded,
        ..Analysis::default()
    };
    for (id, rows) in groups {
        analyze_group(id, &rows, &mut out);
    }
    out
}

fn analyze_group(id: &str, rows: &[&RecordRow], out: &mut Analysis) {
    let mut levels: BTreeMap<u64, Level> = BTreeMap::new();
    for &r in rows {
        let level = levels.entry(p_key(r.p)).or_insert_with(|| Level {
            rows: Vec::new(),
            multipliers: Vec::new(),
        });
        level.rows.push(r);
        if let Some(m) = usable(r) {
            level.multipliers.push(m);
        }
    }
    let baseline: Option<Vec<f64>> = levels.get(&p_key(0.0)).map(|l| l.multipliers.clone());

    let mut multiplier_points = Vec::new();
    let mut market_points = Vec::new();
    for (&key, level) in &levels {
        let p = f64::from_bits(key);
        let filtered = remove_outliers(&level.multipliers, 0.1, 0.9, 1.0);
        let markets: Vec<f64> = level
            .rows
            .iter()
            .filter(|r| usable(r).is_some())
            .map(|r| r.market_avg)
            .collect();
        multiplier_points.extend(filtered.iter().map(|&m| (p, m)));
        market_points.extend(markets.iter().map(|&m| (p, m)));

        let row = SummaryRow {
            schedule_id: id.to_string(),
            p,
            records: level.rows.len(),
            usable: level.multipliers.len(),
            kept: filtered.len(),
            multiplier_mean: mean(&filtered),
            market_mean: mean(&markets),
            wrong: level.rows.iter().filter(|r| !r.correct).count(),
            above_breakeven: level.multipliers.iter().filter(|&&m| m >= 1.0).count(),
            rank_p_vs_zero: baseline
                .as_ref()
                .filter(|b| !b.is_empty() && !level.multipliers.is_empty())
                .map(|b| rank_sum_test(&level.multipliers, b).p_value),
        };
        let mut plot = |series: &str, value: Option<f64>| {
            if let Some(value) = value {
                out.plot.push(PlotRow {
                    schedule_id: id.to_string(),
                    series: series.to_string(),
                    p,
                    value,
                });
            }
        };
        plot("multiplier_mean", row.multiplier_mean);
        plot("market_mean", row.market_mean);
        plot("wrong", Some(row.wrong as f64));
        out.summary.push(row);
    }

    let curve = accuracy_curve(rows.iter().copied());
    let fits = [
        ("multiplier", fit_line(&multiplier_points).ok()),
        ("market_avg", fit_line(&market_points).ok()),
        ("wrong", curve.fit),
    ];
    for (series, fit) in fits {
        if let Some(f) = fit {
            out.fits.push(FitRow {
                schedule_id: id.to_string(),
                series: series.to_string(),
                slope: f.slope,
                intercept: f.intercept,
                residual_sum: f.residual_sum,
            });
        }
    }
}

fn write_rows<W: io::Write, T: Serialize>(rows: &[T], header: &[&str], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(!rows.is_empty())
        .from_writer(out);
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

impl Analysis {
    pub fn write_summary_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let header = [
            "schedule_id",
            "p",
            "records",
            "usable",
            "kept",
            "multiplier_mean",
            "market_mean",
            "wrong",
            "above_breakeven",
            "rank_p_vs_zero",
        ];
        write_rows(&self.summary, &header, out)
    }

    pub fn write_fits_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        write_rows(
            &self.fits,
            &[
                "schedule_id",
                "series",
                "slope",
                "intercept",
                "residual_sum",
            ],
            out,
        )
    }

    pub fn write_plot_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        write_rows(&self.plot, &["schedule_id", "series", "p", "value"], out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::StrategyKind;

    fn row(id: &str, p: f64, m: f64, correct: bool, trades: u64) -> RecordRow {
        RecordRow {
            schedule_id: id.into(),
            population: format!("{}", (m * 1000.0) as i64),
            p,
            predicted: StrategyKind::AA,
            prediction_avg: BTreeMap::new(),
            real_avg: BTreeMap::new(),
            market_avg: 10.0,
            multiplier: Some(m),
            correct,
            k: 1,
            seed: 0,
            trades,
            tie: false,
        }
    }

    #[test]
    fn accuracy_curve_examples() {
        let all_right = [row("a", 0.0, 1.0, true, 1), row("a", 0.5, 1.0, true, 1)];
        let c = accuracy_curve(&all_right);
        assert!(c.points.iter().all(|&(_, n)| n == 0));

        let rows = [
            row("a", 0.0, 1.0, false, 1),
            row("a", 0.0, 1.1, true, 1),
            row("a", 0.0, 1.2, true, 1),
            row("a", 0.6, 1.0, false, 1),
            row("a", 0.6, 0.9, false, 1),
            row("a", 0.6, 1.3, true, 1),
        ];
        let c = accuracy_curve(&rows);
        assert_eq!(c.points, vec![(0.0, 1), (0.6, 2)]);
        assert_eq!(
            c.points.iter().map(|x| x.1).sum::<usize>(),
            rows.iter().filter(|r| !r.correct).count()
        );
        let mut reversed = rows.to_vec();
        reversed.reverse();
        assert_eq!(accuracy_curve(&reversed), c);
        assert_eq!(c.wrong_at(0.6), Some(2));
    }

    #[test]
    fn summary_means_and_breakeven() {
        let rows = [
            row("a", 0.0, 1.0, true, 3),
            row("a", 0.0, 1.2, true, 3),
            row("a", 0.0, 0.8, false, 3),
            row("a", 0.5, 2.0, true, 0),
        ];
        let a = analyze(&rows);
        assert!(a.discarded.is_empty());
        let zero = &a.summary[0];
        assert_eq!(
            (zero.records, zero.usable, zero.wrong, zero.above_breakeven),
            (3, 3, 1, 2)
        );
        assert!((zero.multiplier_mean.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(zero.rank_p_vs_zero, Some(1.0));
        // zero-trade record counted but not used
        let half = &a.summary[1];
        assert_eq!(
            (half.records, half.usable, half.multiplier_mean),
            (1, 0, None)
        );
    }

    #[test]
    fn zero_trade_schedules_are_discarded() {
        let rows = [
            row("a", 0.0, 1.0, true, 0),
            row("a", 0.0, 1.0, true, 0),
            row("b", 0.0, 1.0, true, 4),
        ];
        let a = analyze(&rows);
        assert_eq!(a.discarded, BTreeSet::from(["a".to_string()]));
        assert!(a.summary.iter().all(|s| s.schedule_id == "b"));
    }

    #[test]
    fn row_order_does_not_matter() {
        let mut rows: Vec<RecordRow> = (0..40)
            .map(|i| {
                row(
                    ["a", "b"][i % 2],
                    [0.0, 0.3, 0.6][i % 3],
                    0.5 + (i as f64 * 0.37) % 1.3,
                    i % 4 == 0,
                    5,
                )
            })
            .collect();
        let a = analyze(&rows);
        rows.reverse();
        assert_eq!(analyze(&rows), a);
        assert!(a.summary.iter().any(|s| s.schedule_id == ALL_SCHEDULES));
        assert!(a.fits.iter().any(|f| f.series == "wrong"));
    }

    #[test]
    fn empty_input_gives_headers_only() {
        let a = analyze(&[]);
        let mut buf = Vec::new();
        a.write_summary_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "schedule_id,p,records,usable,kept,multiplier_mean,market_mean,wrong,above_breakeven,rank_p_vs_zero\n"
        );
    }
}
