//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
//!
//! The grid-training criteria share one set of trained models (desk corpus,
//! five conditions, five seeds), so the whole run takes several minutes.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Display;
use std::sync::Arc;
use std::time::{Duration, Instant};

use pemnet_core::experiments::{
    classify_dynamics, pem_reconstruction, run_imitation_benchmark, run_rri, summarize_rri,
    AgentSetup, ClassifierConfig, ConditionGrid, DataLength, DynamicsLabel, ImitationSetup,
    ImitationTable, RriConfig, RriTrial,
};
use pemnet_core::experiments::train_grid;
use pemnet_core::gestures::{build_corpus, load_corpus, save_corpus, CorpusOptions};
use pemnet_core::inference::PemConfig;
use pemnet_core::model::{
    bptt_gradients, init_parameters, kl_unit_gaussian, sequence_loss, Checkpoint, LatentNoise,
    LatentPosterior, ModelConfig, Parameters, Sequence, TrainSchedule,
};
use pemnet_core::numerics::{derive_stream, finite_diff_gradient};

const CORPUS_SEED: u64 = 7;
const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const RRI_SEED: u64 = 1;
/// Central differences with h = 1e-6 carry round-off near 1e-16 * |f| / h, about
/// 1e-10 here, so relative error is measured against at least this magnitude.
const GRAD_FLOOR: f64 = 1e-5;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, n: u32, name: &str, pass: bool, detail: impl Display) {
        if !pass {
            self.failures += 1;
        }
        println!("criterion {n} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1} s", d.as_secs_f64())
}

fn gradient_check(report: &mut Report) {
    let start = Instant::now();
    let mut rng = derive_stream(2024, 0);
    let mut worst: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    let mut coords = 0;
    let configs = 12;
    for k in 0..configs {
        let mut c = ModelConfig::default().with_weights(rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0));
        c.low.n_units = 2 + rng.below(4);
        c.high.n_units = 1 + rng.below(3);
        c.low.n_latent = 1 + rng.below(3);
        c.high.n_latent = 1 + rng.below(2);
        c.low.tau = rng.uniform(1.0, 3.0);
        c.high.tau = c.low.tau + rng.uniform(0.5, 8.0);
        c.dof = 1 + rng.below(3);
        let steps = 2 + rng.below(5);
        let p: Parameters<f64> = init_parameters(&c, &mut derive_stream(k, 1)).unwrap();
        let mut q = LatentPosterior::prior(&c, steps);
        let draws: Vec<f64> = rng.standard_normal(q.len());
        q.assign_flat(&draws.iter().map(|v| 0.5 * v).collect::<Vec<_>>());
        let n = steps * c.dof;
        let squash = |v: Vec<f64>| v.into_iter().map(|x| 0.8 * x.tanh()).collect::<Vec<_>>();
        let target = Sequence::from_streams(c.dof, squash(rng.standard_normal(n)), squash(rng.standard_normal(n)));
        let eps = LatentNoise::draw(&c, steps, &mut rng);
        let g = bptt_gradients(&p, &q, &target, &eps).unwrap();
        let num_p = finite_diff_gradient(
            |theta: &[f64]| {
                let mut pp = p.clone();
                pp.assign_flat(theta);
                sequence_loss(&pp, &q, &target, &eps).unwrap().total
            },
            &p.flatten(),
            1e-6,
        );
        let num_q = finite_diff_gradient(
            |theta: &[f64]| {
                let mut qq = q.clone();
                qq.assign_flat(theta);
                sequence_loss(&p, &qq, &target, &eps).unwrap().total
            },
            &q.flatten(),
            1e-6,
        );
        let analytic = g.params.flatten().into_iter().chain(g.posterior.flatten());
        for (a, n) in analytic.zip(num_p.into_iter().chain(num_q)) {
            worst = worst.max((a - n).abs() / a.abs().max(n.abs()).max(GRAD_FLOOR));
            worst_abs = worst_abs.max((a - n).abs());
            coords += 1;
        }
    }
    let elapsed = start.elapsed();
    report.line(
        1,
        "gradient check",
        worst <= 1e-5 && elapsed < Duration::from_secs(60),
        format!(
            "{configs} configs, {coords} coordinates, max relative error {worst:.2e} (denominator floor {GRAD_FLOOR:e}), max absolute error {worst_abs:.2e}, {}",
            secs(elapsed)
        ),
    );
}

fn kl_check(report: &mut Report) {
    let mut rng = derive_stream(2024, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mu: f64 = rng.uniform(-2.0, 2.0);
        let sigma: f64 = rng.uniform(0.25, 2.0);
        // E_q[log q(z) - log p(z)] with z ~ N(mu, sigma^2).
        let n = 1_000_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let e: f64 = rng.normal();
            let z = mu + sigma * e;
            acc += -sigma.ln() - 0.5 * e * e + 0.5 * z * z;
        }
        let mc = acc / n as f64;
        worst = worst.max((kl_unit_gaussian(&[mu], &[sigma.ln()]) - mc).abs());
    }
    let zero = kl_unit_gaussian(&[0.0], &[0.0]);
    let half = kl_unit_gaussian(&[1.0], &[0.0]);
    report.line(
        2,
        "KL divergence",
        worst <= 1e-2 && zero == 0.0 && half == 0.5,
        format!("20 pairs, max |closed form - Monte Carlo| {worst:.2e}; KL(0,1) = {zero}; KL(1,1) = {half}"),
    );
}

fn classifier_suite(report: &mut Report) {
    let cfg = ClassifierConfig::default();
    let mut rng = derive_stream(2024, 5);
    let (mut total, mut correct) = (0, 0);
    let mut misses = Vec::new();
    let steps = 1000;
    for sigma in [0.0, 0.005] {
        let mut check = |traj: Vec<f64>, ok: &dyn Fn(DynamicsLabel) -> bool, what: &str| {
            let label = classify_dynamics(&traj, 6, &cfg).unwrap();
            total += 1;
            if ok(label) {
                correct += 1;
            } else {
                misses.push(format!("{what} -> {label}"));
            }
        };
        for _ in 0..30 {
            let level: Vec<f64> = (0..6).map(|_| rng.uniform(-0.9, 0.9)).collect();
            let traj = (0..steps * 6).map(|i| level[i % 6] + sigma * rng.normal::<f64>()).collect();
            check(traj, &|l| l == DynamicsLabel::FixedPoint, "constant");
        }
        for period in [10usize, 25, 60] {
            for _ in 0..30 {
                let amp: Vec<f64> = (0..6).map(|_| rng.uniform(0.2, 0.6)).collect();
                let phase: Vec<f64> = (0..6).map(|_| rng.uniform(0.0, 2.0 * PI)).collect();
                let offset: Vec<f64> = (0..6).map(|_| rng.uniform(-0.3, 0.3)).collect();
                let traj = (0..steps * 6)
                    .map(|i| {
                        let (t, j) = (i / 6, i % 6);
                        offset[j] + amp[j] * (2.0 * PI * t as f64 / period as f64 + phase[j]).sin()
                            + sigma * rng.normal::<f64>()
                    })
                    .collect();
                let ok = move |l: DynamicsLabel| matches!(l.period(), Some(p) if p.abs_diff(period) <= 2);
                check(traj, &ok, &format!("sinusoid period {period}"));
            }
        }
        for _ in 0..30 {
            let mut x: Vec<f64> = (0..6).map(|_| rng.uniform(0.05, 0.95)).collect();
            let traj = (0..steps * 6)
                .map(|i| {
                    let j = i % 6;
                    let v = 2.0 * x[j] - 1.0;
                    x[j] = 3.9 * x[j] * (1.0 - x[j]);
                    v + sigma * rng.normal::<f64>()
                })
                .collect();
            check(traj, &|l| l == DynamicsLabel::Emergent, "logistic map");
        }
    }
    misses.truncate(3);
    report.line(
        5,
        "classifier planted suite",
        correct == total,
        format!("{correct}/{total} correct{}", if misses.is_empty() { String::new() } else { format!(", e.g. {misses:?}") }),
    );
}

fn trajectory_files(trials: &[RriTrial]) -> Vec<Vec<u8>> {
    let mut files = Vec::new();
    for t in trials {
        for agent in 0..2 {
            let mut buf = Vec::new();
            t.write_trajectory(agent, &mut buf).unwrap();
            files.push(buf);
        }
    }
    files
}

fn imitation_orderings(table: &ImitationTable, grid: &ConditionGrid) -> (usize, Vec<usize>, usize) {
    let score = |c: usize, pem: bool, seed: u64| {
        let cells = [DataLength::Short, DataLength::Long].map(|l| table.cell(c, pem, l, seed).unwrap().score);
        cells.iter().sum::<f64>() / 2.0
    };
    let per_seed: Vec<usize> = SEEDS
        .iter()
        .map(|&s| grid.ids().into_iter().filter(|&c| score(c, true, s) >= score(c, false, s)).count())
        .collect();
    let seeds_ok = per_seed.iter().filter(|&&n| n >= 4).count();
    let id3_wins = SEEDS.iter().filter(|&&s| score(3, true, s) > score(1, true, s)).count();
    (seeds_ok, per_seed, id3_wins)
}

fn main() {
    let mut report = Report { failures: 0 };
    let suite = Instant::now();

    gradient_check(&mut report);
    kl_check(&mut report);

    let corpus = build_corpus(CORPUS_SEED, CorpusOptions::desk());
    let seqs: Vec<Sequence<f64>> = corpus.sequences();
    let grid = ConditionGrid::default();
    let schedule = TrainSchedule::default();
    let start = Instant::now();
    let checkpoints = train_grid(&seqs, &ModelConfig::default(), &grid, &SEEDS, &schedule).unwrap();
    let train_time = start.elapsed();

    let id3 = &checkpoints[&(3, SEEDS[0])];
    let models: BTreeMap<_, _> = checkpoints.iter().map(|(k, c)| (*k, Arc::new(c.params.clone()))).collect();
    let setup = ImitationSetup::default();
    {
        let curve_first: f64 = id3.meta["first_total"].parse().unwrap();
        let curve_last: f64 = id3.meta["final_total"].parse().unwrap();
        let ratio = curve_last / curve_first;
        let recon = pem_reconstruction(models[&(3, SEEDS[0])].clone(), &seqs[0], setup.pem).unwrap();
        report.line(
            3,
            "trainability",
            ratio <= 0.1 && recon >= 0.9 && schedule.epochs <= 2000,
            format!(
                "condition 3, {} epochs: final/first total {ratio:.3}; PEM reconstruction correlation {recon:.3}; {} per model",
                schedule.epochs,
                secs(train_time / checkpoints.len() as u32)
            ),
        );
    }

    let start = Instant::now();
    let table = run_imitation_benchmark(&corpus, &grid, &SEEDS, &models, &setup).unwrap();
    let (seeds_ok, per_seed, id3_wins) = imitation_orderings(&table, &grid);
    println!("{}", table.render(&grid, None));
    report.line(
        4,
        "imitation orderings",
        seeds_ok >= 4 && id3_wins >= 4,
        format!(
            "(a) PEM >= NoPEM conditions per seed {per_seed:?}, {seeds_ok}/5 seeds with >= 4; (b) ID 3 > ID 1 under PEM in {id3_wins}/5 seeds; {}",
            secs(start.elapsed())
        ),
    );

    let classifier = ClassifierConfig::default();
    classifier_suite(&mut report);

    let agents = |pem: Option<PemConfig>| {
        let params = models[&(3, SEEDS[0])].clone();
        RriConfig::new(
            AgentSetup { params: params.clone(), pem, stream: 0 },
            AgentSetup { params, pem, stream: 1 },
        )
    };
    let pem_cfg = agents(Some(setup.pem));
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let start = Instant::now();
    let pem_trials = pool(1).install(|| run_rri(&pem_cfg, RRI_SEED)).unwrap();
    let rri_time = start.elapsed();
    let again = pool(3).install(|| run_rri(&pem_cfg, RRI_SEED)).unwrap();
    let identical = trajectory_files(&pem_trials) == trajectory_files(&again);
    report.line(
        6,
        "RRI scale and determinism",
        rri_time < Duration::from_secs(600) && identical && pem_trials.len() == 10,
        format!(
            "{} trials x {} steps x 2 PEM agents in {}; 1-thread and 3-thread runs bit-identical: {identical}",
            pem_trials.len(),
            pem_cfg.steps,
            secs(rri_time)
        ),
    );

    let nopem_trials = run_rri(&agents(None), RRI_SEED).unwrap();
    let nopem = summarize_rri(&nopem_trials, &classifier).unwrap();
    let pem = summarize_rri(&pem_trials, &classifier).unwrap();
    let settled = nopem.joint.fixed_point + nopem.joint.limit_cycle;
    report.line(
        7,
        "RRI dynamics",
        settled >= 7 && pem.joint.emergent >= nopem.joint.emergent,
        format!(
            "NoPEM: {settled}/10 fixed point or limit cycle ({} emergent); PEM: {} emergent, {} limit cycle, {} fixed point",
            nopem.joint.emergent, pem.joint.emergent, pem.joint.limit_cycle, pem.joint.fixed_point
        ),
    );

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    id3.save(&path).unwrap();
    let back = Checkpoint::<f64>::load(&path).unwrap();
    let checkpoint_exact = back.params == id3.params
        && back.params.fingerprint() == id3.params.fingerprint()
        && back.posteriors == id3.posteriors
        && back.to_json() == id3.to_json();
    save_corpus(&corpus, &dir.path().join("corpus")).unwrap();
    let corpus_exact = load_corpus(&dir.path().join("corpus")).unwrap() == corpus;
    let identity_checked = cfg!(debug_assertions);
    report.line(
        8,
        "round trips and loss identity",
        checkpoint_exact && corpus_exact && identity_checked,
        format!(
            "checkpoint bit-exact: {checkpoint_exact}; corpus bit-exact: {corpus_exact}; identity asserted on every evaluation: {identity_checked}"
        ),
    );

    println!("acceptance suite finished in {}", secs(suite.elapsed()));
    if report.failures > 0 {
        eprintln!("{} criteria failed", report.failures);
        std::process::exit(1);
    }
}
