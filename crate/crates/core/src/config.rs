//! Run configuration: a versioned, strictly-validated schema tying domain,
//! human model, notifier mode, training, and evaluation together. Every run
//! writes its fully-resolved configuration next to its outputs.

use crate::domains::highway::HighwayConfig;
use crate::domains::kitchen::KitchenConfig;
use crate::domains::lander::LanderConfig;
use crate::domains::DomainId;
use crate::error::{CoreError, Result};
use crate::human::{
    DfMap, InformativenessConfig, ReactionDelayDist, ReactionParams, ReactionRewardMap,
};
use crate::policy::ppo::PPOConfig;
use crate::policy::NotifierMode;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Train/evaluate the notification policy (the normal case).
    #[default]
    Notifier,
    /// Train a base pilot for the lander instead of using the scripted one.
    Pilot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HumanSection {
    pub reaction_delay: ReactionDelayDist,
    /// Follow-through mapping; defaults per domain when omitted.
    pub follow_through: Option<DfMap>,
    /// Comprehension-time reaction reward; defaults to none (the hard
    /// variant turns on `l_minus_2`).
    pub reaction_reward: Option<ReactionRewardMap>,
    pub informativeness_alpha: f64,
    pub informativeness_beta: f64,
}

impl Default for HumanSection {
    fn default() -> Self {
        HumanSection {
            reaction_delay: ReactionDelayDist::fixed(2),
            follow_through: None,
            reaction_reward: None,
            informativeness_alpha: 1.0,
            informativeness_beta: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainParams {
    pub lander: Option<LanderConfig>,
    pub highway: Option<HighwayConfig>,
    pub kitchen: Option<KitchenConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaxonomySection {
    pub quota: usize,
    pub max_iterations: u64,
    pub seed: u64,
    /// "stub" for the offline lexical scorer, "remote" for the HTTP service
    /// named by the scorer endpoint environment variable.
    pub scorer: String,
}

impl Default for TaxonomySection {
    fn default() -> Self {
        TaxonomySection {
            quota: crate::taxonomy::DEFAULT_CELL_QUOTA,
            max_iterations: crate::taxonomy::DEFAULT_MAX_ITERATIONS,
            seed: 0,
            scorer: "stub".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Gaussian population regimes as (mean, std) pairs; the matching
    /// regime is always included.
    pub population_regimes: Vec<(f64, f64)>,
    pub dr_grid: Vec<u32>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            population_regimes: vec![(2.0, 0.5), (2.0, 1.0)],
            dr_grid: vec![0, 1, 2, 3, 4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub domain: DomainId,
    pub task: TaskKind,
    pub mode: NotifierMode,
    /// Hard piloting variant: expanded top-left zone, constant follow-
    /// through with reaction reward, and the heavier PPO profile.
    pub hard_variant: bool,
    pub seeds: Vec<u64>,
    pub episodes_per_seed: usize,
    pub window: usize,
    pub taxonomy_path: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub checkpoint_every: usize,
    pub human: HumanSection,
    pub ppo: PPOConfig,
    pub domain_params: DomainParams,
    pub taxonomy: TaxonomySection,
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            domain: DomainId::Piloting,
            task: TaskKind::default(),
            mode: NotifierMode::ConveyReact,
            hard_variant: false,
            seeds: vec![1, 2, 3, 4, 5],
            episodes_per_seed: 100,
            window: 4,
            taxonomy_path: None,
            out_dir: None,
            checkpoint_every: 50,
            human: HumanSection::default(),
            ppo: PPOConfig::default(),
            domain_params: DomainParams::default(),
            taxonomy: TaxonomySection::default(),
            sweep: SweepSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| {
            // toml errors carry line/column context in their display
            CoreError::Config(format!("{}: {e}", path.display()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self).map_err(|e| CoreError::Config(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(CoreError::Config(format!(
                "schema_version {} unsupported (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.seeds.is_empty() {
            return Err(CoreError::Config("seeds must be non-empty".into()));
        }
        if self.window == 0 {
            return Err(CoreError::Config("window must be >= 1".into()));
        }
        if let ReactionDelayDist::Gaussian { std, .. } = self.human.reaction_delay {
            if std < 0.0 {
                return Err(CoreError::Config(
                    "human.reaction_delay std must be >= 0".into(),
                ));
            }
        }
        if self.hard_variant && self.domain != DomainId::Piloting {
            return Err(CoreError::Config(
                "hard_variant applies to the piloting domain only".into(),
            ));
        }
        if self.task == TaskKind::Pilot && self.domain != DomainId::Piloting {
            return Err(CoreError::Config(
                "task = pilot applies to the piloting domain only".into(),
            ));
        }
        self.resolved_ppo().validate()?;
        Ok(())
    }

    /// Domain-appropriate follow-through mapping when none is configured:
    /// identity for piloting and cooking, 2l-2 for driving, and the
    /// constant map in the hard variant.
    pub fn resolved_df_map(&self) -> DfMap {
        if let Some(m) = self.human.follow_through {
            return m;
        }
        if self.hard_variant {
            return DfMap::Constant3;
        }
        match self.domain {
            DomainId::Driving => DfMap::Affine2lMinus2,
            _ => DfMap::LinearIdentity,
        }
    }

    pub fn resolved_reward_map(&self) -> ReactionRewardMap {
        if let Some(m) = self.human.reaction_reward {
            return m;
        }
        if self.hard_variant {
            ReactionRewardMap::LMinus2
        } else {
            ReactionRewardMap::None
        }
    }

    /// Evaluation-time human reaction parameters.
    pub fn human_params(&self) -> ReactionParams {
        ReactionParams {
            delay: self.human.reaction_delay,
            df_map: self.resolved_df_map(),
            reward_map: self.resolved_reward_map(),
            informativeness: InformativenessConfig {
                alpha: self.human.informativeness_alpha,
                beta: self.human.informativeness_beta,
            },
            comprehension_override: None,
        }
    }

    pub fn resolved_ppo(&self) -> PPOConfig {
        if self.hard_variant && self.ppo == PPOConfig::default() {
            PPOConfig {
                num_updates: self.ppo.num_updates,
                ..PPOConfig::hard_lander()
            }
        } else {
            self.ppo.clone()
        }
    }

    pub fn lander_config(&self) -> LanderConfig {
        match &self.domain_params.lander {
            Some(cfg) => cfg.clone(),
            None if self.hard_variant => LanderConfig::hard(),
            None => LanderConfig::default(),
        }
    }

    pub fn highway_config(&self) -> HighwayConfig {
        self.domain_params.highway.clone().unwrap_or_default()
    }

    pub fn kitchen_config(&self) -> KitchenConfig {
        self.domain_params
            .kitchen
            .clone()
            .unwrap_or_else(KitchenConfig::preoccupied)
    }
}
