//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.
//! Run with `cargo test --test acceptance -- --nocapture` to see them.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use cda_oracle::exchange::{run_session, Session, Side};
use cda_oracle::oracle::seeds::{derive_seed, hash_str};
use cda_oracle::oracle::{
    apply_noise, enumerate_populations, p_max, Harness, NamedSchedule, NoiseSpec, RecordRow,
    TraderPopulation,
};
use cda_oracle::schedules::{generate_schedule, simple_schedule, SchedulerParams};
use cda_oracle::stats::{accuracy_curve, analyze, fit_line, rank_sum_test};
use cda_oracle::strategies::{StrategyKind, StrategyParams};
use cda_oracle::SimRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

use StrategyKind::*;

const THREE: [StrategyKind; 3] = [AA, GDX, ZIP];

fn report(n: u32, pass: bool, detail: String, started: Instant) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!(
        "criterion {n}: {verdict} [{:.1}s] {detail}",
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_1_population_counts() {
    let t = Instant::now();
    let four = enumerate_populations(16, &[AA, GDX, SNPR, ZIP])
        .unwrap()
        .len();
    let three = enumerate_populations(12, &THREE).unwrap().len();
    let pass = four == 455 && three == 55;
    report(
        1,
        pass,
        format!("(16, 4 kinds) -> {four}, (12, 3 kinds) -> {three}"),
        t,
    );
    assert!(pass);
}

#[test]
fn criterion_2_noise_model() {
    let t = Instant::now();
    let four = p_max(&[AA, GDX, SNPR, ZIP]).unwrap();
    let three = p_max(&THREE).unwrap();
    let mut pass = four == 0.75 && (three - 2.0 / 3.0).abs() < 1e-15;
    let mut detail = format!("p_max(4) = {four}, p_max(3) = {three:.6}");

    let mut rng = SimRng::seed_from_u64(2024);
    let traders: Vec<StrategyKind> = (0..100_000).map(|i| THREE[i % 3]).collect();
    for p in [0.1, 0.5] {
        let noise = NoiseSpec::new(p, &THREE).unwrap();
        let seen = apply_noise(&traders, &noise, &mut rng).unwrap();
        let flipped =
            traders.iter().zip(&seen).filter(|(a, b)| a != b).count() as f64 / traders.len() as f64;
        pass &= (flipped - p).abs() <= 0.01;
        detail.push_str(&format!(", flip rate at p={p}: {flipped:.4}"));
    }
    report(2, pass, detail, t);
    assert!(pass);
}

fn experiment2_rows(
    schedules: &[NamedSchedule],
    seed: u64,
    p_grid: &[f64],
    k: u32,
    duration: u32,
) -> Vec<RecordRow> {
    let h = Harness::new(&THREE, 12, duration, seed);
    let pops = enumerate_populations(12, &THREE).unwrap();
    let out = h.experiment2(schedules, &pops, p_grid, k).unwrap();
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    out.records
        .iter()
        .map(|r| RecordRow::from_record(r, &THREE))
        .collect()
}

#[test]
fn criterion_3_noise_lowers_the_multiplier() {
    let t = Instant::now();
    let params = SchedulerParams {
        duration: 330,
        ..SchedulerParams::default()
    };
    let schedules: Vec<NamedSchedule> = (0..3u64)
        .map(|i| {
            let mut rng = SimRng::seed_from_u64(derive_seed(&[hash_str("acceptance"), i]));
            NamedSchedule {
                id: format!("s{i:03}"),
                schedule: generate_schedule(&params, &mut rng).unwrap(),
            }
        })
        .collect();
    let pm = p_max(&THREE).unwrap();
    let mut rows = Vec::new();
    for rep in 1..=5 {
        rows.extend(experiment2_rows(&schedules, rep, &[0.0, pm], 10, 330));
    }
    let analysis = analyze(&rows);
    let mut lower = 0;
    let mut detail = Vec::new();
    let kept: Vec<&NamedSchedule> = schedules
        .iter()
        .filter(|s| !analysis.discarded.contains(&s.id))
        .collect();
    for s in &kept {
        let mean_at = |p: f64| {
            analysis
                .summary
                .iter()
                .find(|r| r.schedule_id == s.id && r.p == p)
                .and_then(|r| r.multiplier_mean)
        };
        let (clean, noisy) = (mean_at(0.0), mean_at(pm));
        if let (Some(c), Some(n)) = (clean, noisy) {
            lower += usize::from(c > n);
            detail.push(format!("{}: {c:.4} vs {n:.4}", s.id));
        }
    }
    let pass = !kept.is_empty() && 2 * lower > kept.len();
    report(
        3,
        pass,
        format!(
            "p=0 beats p_max on {lower}/{} kept schedules ({} discarded); {}",
            kept.len(),
            analysis.discarded.len(),
            detail.join(", ")
        ),
        t,
    );
    assert!(pass);
}

#[test]
fn criterion_4_majority_above_breakeven() {
    let t = Instant::now();
    let schedule = NamedSchedule {
        id: "simple".into(),
        schedule: simple_schedule(50, 150, 240, 30),
    };
    let h = Harness::new(&THREE, 12, 240, 4);
    let pops = enumerate_populations(12, &THREE).unwrap();
    let out = h.experiment1(&[schedule], &pops, 1).unwrap();
    let above = out
        .records
        .iter()
        .filter(|r| r.multiplier.is_some_and(|m| m >= 1.0))
        .count();
    let pass = out.records.len() == 55 && 2 * above > out.records.len();
    report(
        4,
        pass,
        format!(
            "{above}/{} records at or above breakeven",
            out.records.len()
        ),
        t,
    );
    assert!(pass);
}

#[test]
fn criterion_5_noise_raises_wrong_predictions() {
    let t = Instant::now();
    let schedule = NamedSchedule {
        id: "simple".into(),
        schedule: simple_schedule(50, 150, 330, 30),
    };
    let pm = p_max(&THREE).unwrap();
    let mut ok = 0;
    let mut detail = Vec::new();
    for rep in 1..=5 {
        let rows = experiment2_rows(std::slice::from_ref(&schedule), rep, &[0.0, pm], 10, 330);
        let curve = accuracy_curve(&rows);
        let (clean, noisy) = (curve.wrong_at(0.0).unwrap(), curve.wrong_at(pm).unwrap());
        ok += usize::from(noisy >= clean);
        detail.push(format!("{clean}->{noisy}"));
    }
    let pass = ok >= 4;
    report(
        5,
        pass,
        format!(
            "{ok}/5 repetitions non-decreasing (wrong at p=0 -> p_max: {})",
            detail.join(", ")
        ),
        t,
    );
    assert!(pass);
}

#[test]
fn criterion_6_zic_efficiency() {
    let t = Instant::now();
    let schedule = simple_schedule(50, 150, 240, 30);
    let pop = TraderPopulation::symmetric([(ZIC, 12)]);
    let params = StrategyParams::default();
    let effs: Vec<f64> = (0..50)
        .map(|seed| {
            run_session(&schedule, &pop, 240, &params, seed)
                .unwrap()
                .efficiency()
                .unwrap()
        })
        .collect();
    let mean = effs.iter().sum::<f64>() / effs.len() as f64;
    let pass = mean >= 0.9;
    report(
        6,
        pass,
        format!("mean allocative efficiency {mean:.4} over 50 sessions"),
        t,
    );
    assert!(pass);
}

/// Two-sided permutation p-value over all relabellings of the pooled values.
fn permutation_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let ranks: Vec<f64> = pooled
        .iter()
        .map(|&x| {
            let below = pooled.iter().filter(|&&y| y < x).count() as f64;
            let equal = pooled.iter().filter(|&&y| y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let centre = a.len() as f64 * (n as f64 + 1.0) / 2.0;
    let observed = (ranks[..a.len()].iter().sum::<f64>() - centre).abs();
    let (mut hits, mut total) = (0u32, 0u32);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == a.len() {
            total += 1;
            let s: f64 = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| ranks[i])
                .sum();
            hits += u32::from((s - centre).abs() >= observed - 1e-9);
        }
    }
    hits as f64 / total as f64
}

#[test]
fn criterion_7_statistics_oracles() {
    let t = Instant::now();
    let mut rng = SimRng::seed_from_u64(7);
    let mut rank_cases = 0;
    let mut rank_ok = true;
    for n1 in 1..=6 {
        for n2 in 1..=6 {
            for trial in 0..10 {
                let span = [3, 8, 1000][trial % 3];
                let a: Vec<f64> = (0..n1).map(|_| rng.random_range(0..span) as f64).collect();
                let b: Vec<f64> = (0..n2).map(|_| rng.random_range(0..span) as f64).collect();
                rank_ok &= rank_sum_test(&a, &b).p_value == permutation_p(&a, &b);
                rank_cases += 1;
            }
        }
    }

    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(2..50);
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                (
                    rng.random_range(-100.0..100.0),
                    rng.random_range(-100.0..100.0),
                )
            })
            .collect();
        let f = fit_line(&pts).unwrap();
        // Cramer's rule on the normal equations
        let m = n as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let det = m * sxx - sx * sx;
        let slope = (m * sxy - sx * sy) / det;
        let intercept = (sxx * sy - sx * sxy) / det;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
        worst = worst
            .max(rel(f.slope, slope))
            .max(rel(f.intercept, intercept));
    }
    let pass = rank_ok && worst <= 1e-9;
    report(
        7,
        pass,
        format!("rank test exact on {rank_cases} cases: {rank_ok}; worst fit relative error {worst:.2e}"),
        t,
    );
    assert!(pass);
}

#[test]
fn criterion_8_engine_invariants() {
    let t = Instant::now();
    let mut rng = SimRng::seed_from_u64(88);
    let params = StrategyParams::default();
    let (mut events, mut sessions, mut trades) = (0usize, 0, 0u64);
    let (mut crossed, mut negative, mut cash_breaks) = (0usize, 0usize, 0usize);
    while events < 100_000 {
        let duration = *[120, 240, 330].choose(&mut rng).unwrap();
        let sched_params = SchedulerParams {
            duration,
            max_schedules: rng.random_range(1..=duration / 30),
            ..SchedulerParams::default()
        };
        let schedule = generate_schedule(&sched_params, &mut rng).unwrap();
        // random, possibly lopsided population over all kinds
        let pick = |rng: &mut SimRng| -> Vec<StrategyKind> {
            (0..rng.random_range(1..12))
                .map(|_| *StrategyKind::ALL.choose(rng).unwrap())
                .collect()
        };
        let (buyers, sellers) = (pick(&mut rng), pick(&mut rng));
        let pop = TraderPopulation::from_kinds(&buyers, &sellers);
        let mut session = Session::new(&schedule, &pop, duration, &params, rng.random()).unwrap();
        for step in 0..duration {
            let before: Vec<i64> = session.traders().iter().map(|tr| tr.balance).collect();
            session.step(step).unwrap();
            crossed += usize::from(session.book().is_crossed());
            negative += session
                .traders()
                .iter()
                .zip(&before)
                .filter(|(tr, b)| tr.balance < **b)
                .count();
        }
        let mut paid = 0i64;
        let mut received = 0i64;
        for tr in session.traders() {
            let total: i64 = tr.blotter.iter().map(|x| x.price.ticks()).sum();
            match tr.side {
                Side::Bid => paid += total,
                Side::Ask => received += total,
            }
        }
        let tape_total: i64 = session.tape().trades().map(|e| e.price.unwrap()).sum();
        let balances: i64 = session.traders().iter().map(|tr| tr.balance).sum();
        let result = session.finish();
        cash_breaks +=
            usize::from(paid != received || paid != tape_total || balances != result.total_surplus);
        events += result.tape.len();
        trades += result.trade_count;
        sessions += 1;
    }
    let pass = crossed == 0 && negative == 0 && cash_breaks == 0;
    report(
        8,
        pass,
        format!(
            "{events} events, {trades} trades in {sessions} sessions: crossed books {crossed}, losing fills {negative}, cash mismatches {cash_breaks}"
        ),
        t,
    );
    assert!(pass);
}

fn run_cli(dir: &Path, config: &Path, jobs: usize) {
    let status = Command::new(env!("CARGO_BIN_EXE_cda-oracle"))
        .args([
            "--config",
            config.to_str().unwrap(),
            "--jobs",
            &jobs.to_string(),
            "--out",
        ])
        .arg(dir)
        .arg("experiment2")
        .env("RUST_LOG", "warn")
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn criterion_9_deterministic_outputs() {
    let t = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.json");
    std::fs::write(
        &config,
        r#"{
  "seed": 99,
  "scheduler": {"duration": 330, "interval": 30},
  "strategies": ["AA", "GDX", "ZIP"],
  "n_per_side": 12,
  "p_grid": [0.0, 0.3333333333333333, 0.6666666666666666],
  "k": 5,
  "schedule_count": 1,
  "schedules": {"kind": "random"}
}"#,
    )
    .unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_cli(&a, &config, 1);
    run_cli(&b, &config, 3);
    let files = [
        "records.csv",
        "summary.csv",
        "fits.csv",
        "plot.csv",
        "discarded.json",
    ];
    let mut differing = Vec::new();
    let mut rows = 0;
    for f in files {
        let x = std::fs::read(a.join("experiment2").join(f)).unwrap();
        let y = std::fs::read(b.join("experiment2").join(f)).unwrap();
        if f == "records.csv" {
            rows = x.iter().filter(|&&c| c == b'\n').count() - 1;
        }
        if x != y {
            differing.push(f);
        }
    }
    let pass = differing.is_empty() && rows == 55 * 3;
    report(
        9,
        pass,
        format!("{rows} record rows; --jobs 1 vs --jobs 3 differing files: {differing:?}"),
        t,
    );
    assert!(pass);
}

#[test]
fn cell_seeds_do_not_collide() {
    // guards the determinism contract: every cell draws its own stream
    let h = Harness::new(&THREE, 12, 330, 1);
    let mut seen = BTreeMap::new();
    for pop in 0..55 {
        for p in 0..14 {
            assert!(seen.insert(h.cell_seed("s000", pop, p), (pop, p)).is_none());
        }
    }
}
