//! Domain-generic orchestration shared by the subcommands: simulation
//! construction, training with checkpoints and logs, and batch evaluation.

use anyhow::{anyhow, Context, Result};
use headsup_core::config::RunConfig;
use headsup_core::domains::highway::{Highway, RuleDriver};
use headsup_core::domains::kitchen::{Kitchen, MyopicCook};
use headsup_core::domains::lander::{Lander, ScriptedPilot};
use headsup_core::domains::{Domain, DomainId};
use headsup_core::eval::{run_episode, DangerFlag, EpisodeLog};
use headsup_core::human::{ReactionDelayDist, ReactionParams, ReactiveHuman};
use headsup_core::policy::checkpoint::Checkpoint;
use headsup_core::policy::ppo::Trainer;
use headsup_core::policy::{Notifier, NotifierMode, PolicyNetwork, PolicyNotifier};
use headsup_core::sim::Simulation;
use headsup_core::taxonomy::TaxonomyDb;
use headsup_core::derive_seed;
use std::io::Write;
use std::path::{Path, PathBuf};

pub fn make_human<D: Domain>(
    base: Box<dyn headsup_core::human::BasePolicy<D>>,
    params: &ReactionParams,
) -> ReactiveHuman<D> {
    ReactiveHuman::new(base, params.clone())
}

pub fn lander_sim(cfg: &RunConfig, params: &ReactionParams) -> Result<Simulation<Lander>> {
    let env = Lander::new(cfg.lander_config());
    Ok(Simulation::new(
        env,
        make_human(Box::new(ScriptedPilot), params),
        cfg.window,
    )?)
}

pub fn highway_sim(cfg: &RunConfig, params: &ReactionParams) -> Result<Simulation<Highway>> {
    let env = Highway::new(cfg.highway_config());
    Ok(Simulation::new(
        env,
        make_human(Box::new(RuleDriver), params),
        cfg.window,
    )?)
}

pub fn kitchen_sim(cfg: &RunConfig, params: &ReactionParams) -> Result<Simulation<Kitchen>> {
    let env = Kitchen::new(cfg.kitchen_config());
    Ok(Simulation::new(
        env,
        make_human(Box::new(MyopicCook::default()), params),
        cfg.window,
    )?)
}

pub struct TrainArtifacts {
    pub final_checkpoint: PathBuf,
    pub updates_run: usize,
}

/// Trains one notifier policy for one seed, writing periodic checkpoints
/// and a JSONL stats log; on a training abort the last good checkpoint
/// stays on disk.
pub fn train_one<D: Domain + 'static>(
    sims: Vec<Simulation<D>>,
    cfg: &RunConfig,
    mode: NotifierMode,
    seed: u64,
    out_dir: &Path,
) -> Result<TrainArtifacts> {
    let ppo = cfg.resolved_ppo();
    let domain = cfg.domain;
    let window = cfg.window;
    let obs_dim = sims[0].env().obs_dim();
    let mut trainer = Trainer::new(sims, mode, ppo.clone(), seed)?;
    std::fs::create_dir_all(out_dir)?;
    let log_path = out_dir.join(format!("train-seed{seed}.jsonl"));
    let mut log = std::io::BufWriter::new(std::fs::File::create(&log_path)?);
    let cadence = cfg.checkpoint_every.max(1);
    let result = trainer.run(|policy, progress| {
        let line = serde_json::to_string(progress).expect("progress serializes");
        let _ = writeln!(log, "{line}");
        if (progress.update + 1) % cadence == 0 {
            let ck = Checkpoint::from_policy(
                policy,
                domain,
                mode,
                window,
                obs_dim,
                None,
                serde_json::json!({"seed": seed, "update": progress.update}),
            );
            if let Err(e) = ck.save(&out_dir.join(format!("checkpoint-seed{seed}-latest.json"))) {
                eprintln!("warning: checkpoint write failed: {e}");
            }
        }
    });
    log.flush()?;
    if let Err(e) = result {
        return Err(anyhow!(
            "training aborted ({e}); last periodic checkpoint retained at {}",
            out_dir.display()
        ));
    }
    let final_path = out_dir.join(format!("checkpoint-seed{seed}.json"));
    let ck = Checkpoint::from_policy(
        &trainer.policy,
        domain,
        mode,
        window,
        obs_dim,
        trainer.obs_normalizer().cloned(),
        serde_json::json!({"seed": seed, "update": ppo.num_updates}),
    );
    ck.save(&final_path)?;
    Ok(TrainArtifacts {
        final_checkpoint: final_path,
        updates_run: ppo.num_updates,
    })
}

/// Trains one policy per configured seed for the configured domain.
pub fn train_all_seeds(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let eval_params = cfg.human_params();
    let train_params = cfg.mode.training_human(&eval_params);
    let ppo = cfg.resolved_ppo();
    let mut checkpoints = Vec::new();
    for &seed in &cfg.seeds {
        let art = match cfg.domain {
            DomainId::Piloting => {
                let sims = (0..ppo.num_envs)
                    .map(|_| lander_sim(cfg, &train_params))
                    .collect::<Result<Vec<_>>>()?;
                train_one(sims, cfg, cfg.mode, seed, out_dir)?
            }
            DomainId::Driving => {
                let sims = (0..ppo.num_envs)
                    .map(|_| highway_sim(cfg, &train_params))
                    .collect::<Result<Vec<_>>>()?;
                train_one(sims, cfg, cfg.mode, seed, out_dir)?
            }
            DomainId::Cooking => {
                let sims = (0..ppo.num_envs)
                    .map(|_| kitchen_sim(cfg, &train_params))
                    .collect::<Result<Vec<_>>>()?;
                train_one(sims, cfg, cfg.mode, seed, out_dir)?
            }
        };
        eprintln!(
            "seed {seed}: trained {} updates -> {}",
            art.updates_run,
            art.final_checkpoint.display()
        );
        checkpoints.push(art.final_checkpoint);
    }
    Ok(checkpoints)
}

/// Evaluates a policy notifier over the configured episode batch. Episode
/// seeds derive from the group seed; `delay_override` pins the evaluation
/// reaction delay (robustness sweeps).
pub fn evaluate_policy(
    cfg: &RunConfig,
    policy: &PolicyNetwork,
    mode: NotifierMode,
    group_seed: u64,
    delay_override: Option<ReactionDelayDist>,
    taxonomy: Option<&TaxonomyDb>,
) -> Result<Vec<EpisodeLog>> {
    let mut params = cfg.human_params();
    if let Some(d) = delay_override {
        params.delay = d;
    }
    let mut notifier = PolicyNotifier::new(policy.clone(), mode);
    match cfg.domain {
        DomainId::Piloting => {
            let mut sim = lander_sim(cfg, &params)?;
            evaluate_batch(&mut sim, &mut notifier, cfg, group_seed, taxonomy)
        }
        DomainId::Driving => {
            let mut sim = highway_sim(cfg, &params)?;
            evaluate_batch(&mut sim, &mut notifier, cfg, group_seed, taxonomy)
        }
        DomainId::Cooking => {
            let mut sim = kitchen_sim(cfg, &params)?;
            evaluate_batch(&mut sim, &mut notifier, cfg, group_seed, taxonomy)
        }
    }
}

pub fn evaluate_batch<D: Domain + DangerFlag>(
    sim: &mut Simulation<D>,
    notifier: &mut dyn Notifier<D>,
    cfg: &RunConfig,
    group_seed: u64,
    taxonomy: Option<&TaxonomyDb>,
) -> Result<Vec<EpisodeLog>> {
    let mut logs = Vec::with_capacity(cfg.episodes_per_seed);
    for ep in 0..cfg.episodes_per_seed as u64 {
        let seed = derive_seed(derive_seed(group_seed, 0xeba1), ep);
        logs.push(run_episode(sim, notifier, seed, taxonomy)?);
    }
    Ok(logs)
}

/// Reruns the first episode of a batch and checks byte-identical logs; a
/// mismatch is a reproducibility failure (exit code 3).
pub fn reproducibility_check<D: Domain + DangerFlag>(
    sim: &mut Simulation<D>,
    notifier: &mut dyn Notifier<D>,
    group_seed: u64,
    taxonomy: Option<&TaxonomyDb>,
) -> Result<()> {
    let seed = derive_seed(derive_seed(group_seed, 0xeba1), 0);
    let a = run_episode(sim, notifier, seed, taxonomy)?;
    let b = run_episode(sim, notifier, seed, taxonomy)?;
    let ja = serde_json::to_vec(&a).context("serialize log")?;
    let jb = serde_json::to_vec(&b).context("serialize log")?;
    if ja != jb {
        return Err(anyhow!(headsup_core::CoreError::Reproducibility(
            "episode replay diverged for identical seed".into()
        )));
    }
    Ok(())
}

/// Loads a checkpoint and checks it matches the configured domain and the
/// policy-input geometry (window length, observation width, topic count).
pub fn load_checkpoint(path: &Path, cfg: &RunConfig) -> Result<(PolicyNetwork, NotifierMode)> {
    let ck = Checkpoint::load(path)?;
    if ck.domain != cfg.domain {
        return Err(anyhow!(headsup_core::CoreError::Validation(format!(
            "checkpoint {} targets domain {}, config says {}",
            path.display(),
            ck.domain,
            cfg.domain
        ))));
    }
    let policy = ck.to_policy()?;
    let topic_count = headsup_core::domains::topic_names(cfg.domain).len();
    let expected = cfg.window * (ck.obs_dim + 1 + topic_count + 2);
    if policy.input_dim() != expected || policy.topic_count() != topic_count {
        return Err(anyhow!(headsup_core::CoreError::Validation(format!(
            "checkpoint {} expects input dim {} / {} topics; config implies {expected} / {topic_count}",
            path.display(),
            policy.input_dim(),
            policy.topic_count()
        ))));
    }
    Ok((policy, ck.mode))
}

pub fn load_taxonomy(cfg: &RunConfig) -> Result<Option<TaxonomyDb>> {
    match &cfg.taxonomy_path {
        Some(p) => {
            let db = TaxonomyDb::load_jsonl(p)?;
            db.validate()?;
            Ok(Some(db))
        }
        None => Ok(None),
    }
}
