use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use pemnet_core::experiments::{
    run_imitation_benchmark, read_trajectory_csv, summarize_rri, train_condition_with_curve, AgentRun,
    AgentSetup, Condition, ExperimentError, ModelKey, RriConfig, RriTrial,
};
use pemnet_core::gestures::{build_corpus, load_corpus, save_corpus, Corpus, GestureError};
use pemnet_core::inference::write_pem_trace;
use pemnet_core::{Checkpoint, LossBreakdown};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::CliError;

const CORPUS_DIR: &str = "corpus";
const MODELS_DIR: &str = "models";
const IMITATION_DIR: &str = "imitation";
const RRI_DIR: &str = "rri";
const CLASSIFY_DIR: &str = "classify";
const REPORT_DIR: &str = "report";
const RESOLVED: &str = "resolved.config";

fn stage_dir(command: &str) -> &'static str {
    match command {
        "synth-data" => CORPUS_DIR,
        "train" => MODELS_DIR,
        "eval-imitation" => IMITATION_DIR,
        "run-rri" => RRI_DIR,
        "classify" => CLASSIFY_DIR,
        _ => REPORT_DIR,
    }
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Domain(format!("{}: {e}", path.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

fn read(path: &Path, what: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| {
        CliError::Domain(format!("cannot read {what} {}: {e}", path.display()))
    })
}

/// Writes the fully resolved config next to the outputs of `command`.
pub fn write_resolved(cfg: &RunConfig, command: &str) -> Result<(), CliError> {
    let path = cfg.out_dir().join(stage_dir(command)).join(RESOLVED);
    write(&path, format!("# resolved config for `{command}`\n{}", cfg.render()))
}

fn load_run_corpus(cfg: &RunConfig) -> Result<Corpus, CliError> {
    load_corpus(&cfg.out_dir().join(CORPUS_DIR)).map_err(|e| match e {
        GestureError::Io { path, source } => CliError::Domain(format!(
            "missing corpus file {} ({source}); run synth-data first",
            path.display()
        )),
        e => domain(e),
    })
}

fn model_path(cfg: &RunConfig, condition: usize, seed: u64) -> PathBuf {
    cfg.out_dir().join(MODELS_DIR).join(format!("cond{condition}_seed{seed}.json"))
}

fn load_model(cfg: &RunConfig, condition: usize, seed: u64) -> Result<Checkpoint, CliError> {
    let path = model_path(cfg, condition, seed);
    if !path.is_file() {
        return Err(CliError::Domain(format!(
            "missing checkpoint {} (condition {condition}, seed {seed}); run train first",
            path.display()
        )));
    }
    Checkpoint::load(&path).map_err(domain)
}

fn curve_csv(curve: &[LossBreakdown]) -> String {
    let mut s = String::from("epoch,pe_proprio,pe_extero,kl_high,kl_low,total\n");
    for (i, l) in curve.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{:e},{:e},{:e},{:e},{:e}",
            i + 1,
            l.pe_proprio,
            l.pe_extero,
            l.kl_high,
            l.kl_low,
            l.total
        );
    }
    s
}

pub fn synth_data(cfg: &RunConfig) -> Result<(), CliError> {
    let corpus = build_corpus(cfg.seed(), cfg.corpus_options()?);
    let dir = cfg.out_dir().join(CORPUS_DIR);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let files = save_corpus(&corpus, &dir).map_err(domain)?;
    eprintln!("[synth-data] {} gestures, {} files in {}", corpus.len(), files.len(), dir.display());
    Ok(())
}

pub fn train(cfg: &RunConfig) -> Result<(), CliError> {
    let base = cfg.model_config()?;
    let grid = cfg.grid()?;
    let schedule = cfg.schedule()?;
    let seeds = cfg.train_seeds();
    let corpus = load_run_corpus(cfg)?;
    let sequences = corpus.sequences::<f64>();
    let cells: Vec<(Condition, u64)> = grid
        .conditions
        .iter()
        .flat_map(|c| seeds.iter().map(move |&s| (*c, s)))
        .collect();
    eprintln!(
        "[train] {} cells x {} epochs on {} sequences",
        cells.len(),
        schedule.epochs,
        sequences.len()
    );
    let trained: Vec<_> = cells
        .par_iter()
        .map(|(c, s)| {
            train_condition_with_curve(&sequences, &base, c, &schedule, *s)
                .map(|r| (c.id, *s, r))
                .map_err(|e| CliError::Domain(format!("condition {} seed {s}: {e}", c.id)))
        })
        .collect::<Result<_, _>>()?;
    for (id, seed, (ck, curve)) in trained {
        let path = model_path(cfg, id, seed);
        write(&path, ck.to_json())?;
        write(&path.with_file_name(format!("cond{id}_seed{seed}_loss.csv")), curve_csv(&curve))?;
        eprintln!(
            "[train] cond {id} seed {seed}: total {} -> {}",
            ck.meta["first_total"], ck.meta["final_total"]
        );
    }
    Ok(())
}

pub fn eval_imitation(cfg: &RunConfig) -> Result<(), CliError> {
    let grid = cfg.grid()?;
    let setup = cfg.imitation()?;
    let seeds = cfg.train_seeds();
    let corpus = load_run_corpus(cfg)?;
    let mut models: BTreeMap<ModelKey, Arc<pemnet_core::Parameters>> = BTreeMap::new();
    for c in &grid.conditions {
        for &s in &seeds {
            models.insert((c.id, s), Arc::new(load_model(cfg, c.id, s)?.params));
        }
    }
    let table = run_imitation_benchmark(&corpus, &grid, &seeds, &models, &setup).map_err(domain)?;
    let dir = cfg.out_dir().join(IMITATION_DIR);
    write(&dir.join("imitation.csv"), table.to_csv())?;
    let mut text = table.render(&grid, None);
    for &s in &seeds {
        text.push('\n');
        text.push_str(&table.render(&grid, Some(s)));
    }
    let _ = write!(
        text,
        "\nProtocol: score = mean over DoFs of the zero-lag Pearson correlation between the observed\n\
         gesture and the agent's own actions, from step {w} to the end of the run.\n\
         Long = {long} steps, Short = the first {short} steps of the same run.\n\
         NO PEM rows infer only during a calibration prefix of {w} steps, then roll out from the\n\
         prior without further inference. PEM rows infer over a sliding {w}-step window throughout.\n",
        w = setup.pem.window,
        long = setup.long_len,
        short = setup.short_len,
    );
    write(&dir.join("imitation_table.txt"), &text)?;
    eprint!("{}", table.render(&grid, None));
    Ok(())
}

fn rri_config(cfg: &RunConfig) -> Result<RriConfig, CliError> {
    let condition = cfg.count("rri.condition");
    let seed = cfg.int("rri.train_seed");
    let params = Arc::new(load_model(cfg, condition, seed)?.params);
    let pem = cfg.pem()?;
    let agent = |flag: &str, stream| AgentSetup {
        params: params.clone(),
        pem: cfg.flag(flag).then_some(pem),
        stream,
    };
    let mut rc = RriConfig::new(agent("rri.agent_a.pem", 0), agent("rri.agent_b.pem", 1));
    rc.steps = cfg.count("rri.steps");
    rc.trials = cfg.count("rri.trials");
    rc.motor_noise_sigma = cfg.real("rri.motor_noise_sigma");
    rc.classifier = cfg.classifier();
    rc.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(rc)
}

pub fn run_rri(cfg: &RunConfig) -> Result<(), CliError> {
    let rc = rri_config(cfg)?;
    eprintln!("[run-rri] {} trials x {} steps", rc.trials, rc.steps);
    let trials = pemnet_core::experiments::run_rri(&rc, cfg.seed()).map_err(domain)?;
    let dir = cfg.out_dir().join(RRI_DIR);
    for t in &trials {
        for agent in 0..2 {
            let mut buf = Vec::new();
            t.write_trajectory(agent, &mut buf).map_err(domain)?;
            let name = RriTrial::file_name(t.trial, agent);
            write(&dir.join(&name), buf)?;
            let trace = &t.agents[agent].pe_trace;
            if !trace.is_empty() {
                let mut buf = Vec::new();
                write_pem_trace(&mut buf, trace).map_err(domain)?;
                write(&dir.join(name.replace(".csv", "_pem.csv")), buf)?;
            }
        }
    }
    Ok(())
}

pub fn classify(cfg: &RunConfig) -> Result<(), CliError> {
    let classifier = cfg.classifier();
    let dir = cfg.out_dir().join(RRI_DIR);
    let mut trials = Vec::new();
    for trial in 1..=cfg.count("rri.trials") {
        let mut runs = Vec::with_capacity(2);
        let mut dof = 0;
        for agent in 0..2 {
            let path = dir.join(RriTrial::file_name(trial, agent));
            let text = read(&path, "trajectory")?;
            let (actions, d) = read_trajectory_csv(&text, &path).map_err(domain)?;
            dof = d;
            runs.push(AgentRun { actions, pe_trace: Vec::new() });
        }
        let b = runs.pop().expect("two agents");
        let a = runs.pop().expect("two agents");
        trials.push(RriTrial { trial, dof, agents: [a, b] });
    }
    let summary = summarize_rri(&trials, &classifier).map_err(|e| match e {
        ExperimentError::TooShort { .. } => CliError::Config(e.to_string()),
        e => domain(e),
    })?;
    let out = cfg.out_dir().join(CLASSIFY_DIR);
    write(&out.join("rri_summary.csv"), summary.to_csv())?;
    write(&out.join("rri_summary.txt"), summary.render())?;
    eprint!("{}", summary.render());
    Ok(())
}

/// Collects the imitation table and the interaction summary; a stage that has
/// not been run is noted in the report, but at least one must be present.
pub fn report(cfg: &RunConfig) -> Result<(), CliError> {
    let root = cfg.out_dir();
    let section = |path: &Path| fs::read_to_string(path).ok();
    let imitation_path = root.join(IMITATION_DIR).join("imitation_table.txt");
    let rri_path = root.join(CLASSIFY_DIR).join("rri_summary.txt");
    let imitation = section(&imitation_path);
    let rri = section(&rri_path);
    if imitation.is_none() && rri.is_none() {
        return Err(CliError::Domain(format!(
            "nothing to report: neither {} nor {} exists",
            imitation_path.display(),
            rri_path.display()
        )));
    }
    let missing = |p: &Path, cmd: &str| format!("(not available: {} missing; run {cmd})\n", p.display());
    let mut text = String::new();
    let _ = writeln!(text, "master seed {}\n", cfg.seed());
    let _ = writeln!(
        text,
        "== Imitation benchmark ==\n{}",
        imitation.unwrap_or_else(|| missing(&imitation_path, "eval-imitation"))
    );
    let _ = writeln!(
        text,
        "== Two-agent interaction (condition {}, training seed {}, agent A PEM {}, agent B PEM {}) ==\n{}",
        cfg.count("rri.condition"),
        cfg.int("rri.train_seed"),
        cfg.flag("rri.agent_a.pem"),
        cfg.flag("rri.agent_b.pem"),
        rri.unwrap_or_else(|| missing(&rri_path, "run-rri and classify")),
    );
    write(&root.join(REPORT_DIR).join("report.txt"), text)
}
