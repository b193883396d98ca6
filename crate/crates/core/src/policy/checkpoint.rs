//! Versioned JSON checkpoints: network parameters with shape metadata plus
//! frozen normalizer state.

use super::net::{MultiHeadNet, NetSpec};
use super::normalize::RunningMeanStd;
use super::{NotifierMode, PolicyNetwork};
use crate::domains::DomainId;
use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub kind: String,
    pub domain: DomainId,
    pub mode: NotifierMode,
    pub window: usize,
    pub obs_dim: usize,
    pub actor_spec: NetSpec,
    pub actor_params: Vec<f64>,
    pub critic_spec: NetSpec,
    pub critic_params: Vec<f64>,
    pub obs_norm: Option<RunningMeanStd>,
    pub meta: serde_json::Value,
}

impl Checkpoint {
    pub fn from_policy(
        policy: &PolicyNetwork,
        domain: DomainId,
        mode: NotifierMode,
        window: usize,
        obs_dim: usize,
        obs_norm: Option<RunningMeanStd>,
        meta: serde_json::Value,
    ) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            kind: "notifier".into(),
            domain,
            mode,
            window,
            obs_dim,
            actor_spec: policy.actor.spec.clone(),
            actor_params: policy.actor.params.clone(),
            critic_spec: policy.critic.spec.clone(),
            critic_params: policy.critic.params.clone(),
            obs_norm,
            meta,
        }
    }

    pub fn to_policy(&self) -> Result<PolicyNetwork> {
        if self.version != CHECKPOINT_VERSION {
            return Err(CoreError::Checkpoint(format!(
                "unsupported checkpoint version {}",
                self.version
            )));
        }
        let actor = MultiHeadNet::from_params(self.actor_spec.clone(), self.actor_params.clone())
            .ok_or_else(|| CoreError::Checkpoint("actor parameter count mismatch".into()))?;
        let critic =
            MultiHeadNet::from_params(self.critic_spec.clone(), self.critic_params.clone())
                .ok_or_else(|| CoreError::Checkpoint("critic parameter count mismatch".into()))?;
        Ok(PolicyNetwork { actor, critic })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let data = std::fs::read_to_string(path)
            .map_err(|e| CoreError::Checkpoint(format!("{}: {e}", path.display())))?;
        let ck: Checkpoint = serde_json::from_str(&data)
            .map_err(|e| CoreError::Checkpoint(format!("{}: {e}", path.display())))?;
        Ok(ck)
    }
}
