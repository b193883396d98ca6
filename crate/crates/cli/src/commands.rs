//! Subcommand implementations.

use crate::runner;
use anyhow::{anyhow, bail, Context, Result};
use headsup_core::config::{RunConfig, TaskKind};
use headsup_core::domains::lander::PilotTask;
use headsup_core::domains::DomainId;
use headsup_core::eval::demo::demo_incremental;
use headsup_core::eval::report::{emit_report, render_csv, render_markdown, ReportFormat};
use headsup_core::eval::sweep::{robustness_sweep, RegimeSpec};
use headsup_core::eval::{compute_metrics_grouped, EpisodeLog, MetricsReport};
use headsup_core::human::ReactionDelayDist;
use headsup_core::policy::ppo::DiscreteTrainer;
use headsup_core::policy::{NotifierMode, PolicyNotifier};
use headsup_core::taxonomy::scorer::{RemoteScorer, StubScorer};
use headsup_core::taxonomy::{build_taxonomy, BuildConfig, TaxonomyDb};
use std::io::Write;
use std::path::{Path, PathBuf};

fn resolve_out(cfg_out: &Option<PathBuf>, flag: Option<&Path>, default: &str) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg_out.clone())
        .unwrap_or_else(|| PathBuf::from(default))
}

/// Every run directory gets the fully-resolved config for reproducibility.
fn write_resolved_config(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    cfg.save(&out_dir.join("resolved-config.toml"))?;
    Ok(())
}

pub fn taxonomy_build(config: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let out_dir = resolve_out(&cfg.out_dir, out, "runs/taxonomy");
    write_resolved_config(&cfg, &out_dir)?;
    let build = BuildConfig {
        quota: cfg.taxonomy.quota,
        max_iterations: cfg.taxonomy.max_iterations,
        seed: seed.unwrap_or(cfg.taxonomy.seed),
        ..BuildConfig::default()
    };
    let (db, summary) = match cfg.taxonomy.scorer.as_str() {
        "stub" => {
            let mut scorer = StubScorer::new(build.seed);
            build_taxonomy(&build, &mut scorer)?
        }
        "remote" => {
            let mut scorer = RemoteScorer::from_env()?;
            build_taxonomy(&build, &mut scorer)?
        }
        other => bail!(headsup_core::CoreError::Config(format!(
            "unknown scorer '{other}' (expected stub | remote)"
        ))),
    };
    let db_path = out_dir.join("taxonomy.jsonl");
    db.save_jsonl(&db_path)?;
    let summary_path = out_dir.join("build-summary.json");
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;
    println!(
        "taxonomy: {} records, {}/{} cells at quota -> {}",
        summary.records,
        summary.cells_filled,
        summary.cells_total,
        db_path.display()
    );
    for (domain, topic, k, l, n) in summary.cells_underfilled.iter().take(8) {
        eprintln!("  under quota: {domain}/{topic} ({k},{l}) has {n}");
    }
    if summary.cells_underfilled.len() > 8 {
        eprintln!("  ... {} more under-quota cells", summary.cells_underfilled.len() - 8);
    }
    Ok(())
}

pub fn taxonomy_inspect(db: &Path, domain: &str, topic: &str, k: u32, l: u32) -> Result<()> {
    let db = TaxonomyDb::load_jsonl(db)?;
    let domain = DomainId::parse(domain)
        .ok_or_else(|| headsupenforce_domain(domain))?;
    let cell = db.cell(domain, topic, k, l);
    if cell.is_empty() {
        let cells = db.cells_for_topic(domain, topic);
        if cells.is_empty() {
            bail!(headsup_core::CoreError::Retrieval(format!(
                "no records for topic {topic} in {domain}"
            )));
        }
        let nearest = db.nearest_cell(&cells, k, l).expect("cells non-empty");
        println!(
            "no records for ({domain}, {topic}, {k}, {l}); nearest cell is ({}, {})",
            nearest.0, nearest.1
        );
        for r in db.cell(domain, topic, nearest.0, nearest.1) {
            println!("  [{} {} {}] \"{}\"", r.topic, r.k, r.l, r.text);
        }
        return Ok(());
    }
    for r in cell {
        println!("[{} {} {}] \"{}\"", r.topic, r.k, r.l, r.text);
        let prog: Vec<String> = r.progression.iter().map(|p| format!("{p:.0}%")).collect();
        println!("  words: {}", r.words.join(" | "));
        println!("  comprehension: {}", prog.join(" | "));
    }
    Ok(())
}

fn headsupenforce_domain(s: &str) -> anyhow::Error {
    anyhow!(headsup_core::CoreError::Validation(format!(
        "unknown domain '{s}' (expected piloting | driving | cooking)"
    )))
}

pub fn train(config: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    let out_dir = resolve_out(&cfg.out_dir, out, "runs/train");
    write_resolved_config(&cfg, &out_dir)?;
    if cfg.task == TaskKind::Pilot {
        return train_pilot(&cfg, &out_dir);
    }
    if cfg.taxonomy_path.is_some() {
        // fail fast if the taxonomy the evaluation needs is unreadable
        runner::load_taxonomy(&cfg)?;
    } else {
        eprintln!("note: no taxonomy_path configured; training runs on raw (k, l) actions");
    }
    let checkpoints = runner::train_all_seeds(&cfg, &out_dir)?;
    println!("trained {} checkpoint(s) -> {}", checkpoints.len(), out_dir.display());
    Ok(())
}

fn train_pilot(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let ppo = cfg.resolved_ppo();
    for &seed in &cfg.seeds {
        let tasks: Vec<PilotTask> = (0..ppo.num_envs)
            .map(|_| PilotTask::new(cfg.lander_config()))
            .collect();
        let mut trainer = DiscreteTrainer::new(tasks, ppo.clone(), seed)?;
        let log_path = out_dir.join(format!("pilot-train-seed{seed}.jsonl"));
        let mut log = std::io::BufWriter::new(std::fs::File::create(&log_path)?);
        trainer.run(|update, stats| {
            let line = serde_json::json!({
                "update": update,
                "policy_loss": stats.policy_loss,
                "value_loss": stats.value_loss,
                "entropy": stats.entropy,
            });
            let _ = writeln!(log, "{line}");
        })?;
        println!(
            "pilot seed {seed}: mean episode return {:.1}",
            trainer.mean_return
        );
    }
    Ok(())
}

pub fn eval(config: &Path, checkpoints: &[PathBuf], out: Option<&Path>, format: &str) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let format = ReportFormat::parse(format).ok_or_else(|| {
        anyhow!(headsup_core::CoreError::Config(format!(
            "unknown format '{format}'"
        )))
    })?;
    let out_dir = resolve_out(&cfg.out_dir, out, "runs/eval");
    write_resolved_config(&cfg, &out_dir)?;
    let taxonomy = runner::load_taxonomy(&cfg)?;
    let mut reports: Vec<MetricsReport> = Vec::new();
    let mut all_logs: Vec<EpisodeLog> = Vec::new();
    for path in checkpoints {
        let (policy, mode) = runner::load_checkpoint(path, &cfg)?;
        repro_probe(&cfg, &policy, mode, taxonomy.as_ref())?;
        let mut groups: Vec<Vec<EpisodeLog>> = Vec::new();
        for &seed in &cfg.seeds {
            groups.push(runner::evaluate_policy(
                &cfg,
                &policy,
                mode,
                seed,
                None,
                taxonomy.as_ref(),
            )?);
        }
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "checkpoint".into());
        let refs: Vec<Vec<&EpisodeLog>> = groups.iter().map(|g| g.iter().collect()).collect();
        let report = compute_metrics_grouped(&label, &refs);
        println!(
            "{label}: success {:.3} ± {:.3} over {} episodes",
            report.success_rate.mean, report.success_rate.std, report.episodes
        );
        reports.push(report);
        let logs_path = out_dir.join(format!("logs-{label}.jsonl"));
        let mut w = std::io::BufWriter::new(std::fs::File::create(&logs_path)?);
        for log in groups.iter().flatten() {
            writeln!(w, "{}", serde_json::to_string(log)?)?;
        }
        all_logs.extend(groups.into_iter().flatten());
    }
    std::fs::write(
        out_dir.join("metrics.json"),
        serde_json::to_string_pretty(&reports)?,
    )?;
    let ext = match format {
        ReportFormat::Csv => "csv",
        ReportFormat::Markdown => "md",
        ReportFormat::PlotData => "csv",
    };
    let report_path = out_dir.join(format!("report.{ext}"));
    emit_report(&reports, &all_logs, format, &report_path)?;
    println!("report -> {}", report_path.display());
    Ok(())
}

/// Determinism guard run before every evaluation batch: the first episode,
/// replayed, must produce byte-identical logs.
fn repro_probe(
    cfg: &RunConfig,
    policy: &headsup_core::policy::PolicyNetwork,
    mode: NotifierMode,
    taxonomy: Option<&TaxonomyDb>,
) -> Result<()> {
    let params = cfg.human_params();
    let seed = cfg.seeds[0];
    match cfg.domain {
        DomainId::Piloting => {
            let mut sim = runner::lander_sim(cfg, &params)?;
            let mut notifier = PolicyNotifier::new(policy.clone(), mode);
            runner::reproducibility_check(&mut sim, &mut notifier, seed, taxonomy)
        }
        DomainId::Driving => {
            let mut sim = runner::highway_sim(cfg, &params)?;
            let mut notifier = PolicyNotifier::new(policy.clone(), mode);
            runner::reproducibility_check(&mut sim, &mut notifier, seed, taxonomy)
        }
        DomainId::Cooking => {
            let mut sim = runner::kitchen_sim(cfg, &params)?;
            let mut notifier = PolicyNotifier::new(policy.clone(), mode);
            runner::reproducibility_check(&mut sim, &mut notifier, seed, taxonomy)
        }
    }
}

pub fn sweep(config: &Path, out: Option<&Path>) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    if cfg.domain != DomainId::Piloting {
        bail!(headsup_core::CoreError::Config(
            "the robustness sweep is defined for the piloting domain".into()
        ));
    }
    let out_dir = resolve_out(&cfg.out_dir, out, "runs/sweep");
    write_resolved_config(&cfg, &out_dir)?;
    let cells_dir = out_dir.join("cells");
    std::fs::create_dir_all(&cells_dir)?;
    let mut regimes: Vec<RegimeSpec> = cfg
        .sweep
        .population_regimes
        .iter()
        .map(|(m, s)| RegimeSpec::population(&format!("gaussian({m},{s})"), ReactionDelayDist::gaussian(*m, *s)))
        .collect();
    regimes.push(RegimeSpec::matching());
    let taxonomy = runner::load_taxonomy(&cfg)?;

    // Policies are cached on disk per (delay-distribution, seed), so an
    // interrupted sweep resumes instead of retraining completed cells.
    let table = robustness_sweep(
        &regimes,
        &cfg.sweep.dr_grid,
        &cfg.seeds,
        |dist, seed| {
            let tag = match dist {
                ReactionDelayDist::Fixed { value } => format!("fixed{value}"),
                ReactionDelayDist::Gaussian { mean, std } => format!("g{mean}-{std}"),
            };
            let ck_path = cells_dir.join(format!("policy-{tag}-seed{seed}.json"));
            if ck_path.exists() {
                let (policy, _) = runner::load_checkpoint(&ck_path, &cfg).map_err(to_core_err)?;
                eprintln!("cell {tag} seed {seed}: reusing cached policy");
                return Ok(policy);
            }
            let mut train_cfg = cfg.clone();
            train_cfg.human.reaction_delay = *dist;
            let eval_params = train_cfg.human_params();
            let train_params = train_cfg.mode.training_human(&eval_params);
            let ppo = train_cfg.resolved_ppo();
            let sims = (0..ppo.num_envs)
                .map(|_| runner::lander_sim(&train_cfg, &train_params))
                .collect::<Result<Vec<_>>>()
                .map_err(to_core_err)?;
            let art = runner::train_one(sims, &train_cfg, train_cfg.mode, seed, &cells_dir)
                .map_err(to_core_err)?;
            std::fs::rename(&art.final_checkpoint, &ck_path)
                .map_err(headsup_core::CoreError::Io)?;
            let (policy, _) = runner::load_checkpoint(&ck_path, &cfg).map_err(to_core_err)?;
            Ok(policy)
        },
        |policy, d_r, seed| {
            runner::evaluate_policy(
                &cfg,
                policy,
                cfg.mode,
                seed,
                Some(ReactionDelayDist::fixed(d_r)),
                taxonomy.as_ref(),
            )
            .map_err(to_core_err)
        },
    )?;
    std::fs::write(
        out_dir.join("sweep.json"),
        serde_json::to_string_pretty(&table)?,
    )?;
    let md = table.render_markdown();
    std::fs::write(out_dir.join("sweep.md"), &md)?;
    println!("{md}");
    Ok(())
}

fn to_core_err(e: anyhow::Error) -> headsup_core::CoreError {
    match e.downcast::<headsup_core::CoreError>() {
        Ok(core) => core,
        Err(other) => headsup_core::CoreError::Training(other.to_string()),
    }
}

pub fn demo(
    config: Option<&Path>,
    reaction_delay: u32,
    preempt_at: Option<u32>,
    out: Option<&Path>,
) -> Result<()> {
    let taxonomy = match config {
        Some(path) => {
            let cfg = RunConfig::load(path)?;
            runner::load_taxonomy(&cfg)?
        }
        None => None,
    };
    let report = demo_incremental(taxonomy.as_ref(), reaction_delay, preempt_at)?;
    println!("{}", report.timeline);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("demo-timeline.txt"), &report.timeline)?;
    }
    Ok(())
}

pub fn report(inputs: &[PathBuf], format: &str, out: Option<&Path>) -> Result<()> {
    let format = ReportFormat::parse(format).ok_or_else(|| {
        anyhow!(headsup_core::CoreError::Config(format!(
            "unknown format '{format}'"
        )))
    })?;
    let mut reports: Vec<MetricsReport> = Vec::new();
    for input in inputs {
        let text = std::fs::read_to_string(input)
            .with_context(|| format!("reading {}", input.display()))?;
        let mut batch: Vec<MetricsReport> = serde_json::from_str(&text)
            .map_err(|e| headsup_core::CoreError::Validation(format!("{}: {e}", input.display())))?;
        reports.append(&mut batch);
    }
    let rendered = match format {
        ReportFormat::Csv => render_csv(&reports),
        ReportFormat::Markdown => render_markdown(&reports),
        ReportFormat::PlotData => bail!(headsup_core::CoreError::Config(
            "plot-data requires raw logs; use `eval --format plot-data`".into()
        )),
    };
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let ext = if format == ReportFormat::Csv { "csv" } else { "md" };
            let path = dir.join(format!("report.{ext}"));
            std::fs::write(&path, rendered)?;
            println!("report -> {}", path.display());
        }
        None => print!("{rendered}"),
    }
    Ok(())
}
