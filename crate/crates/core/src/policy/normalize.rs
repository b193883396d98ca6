//! Running observation and reward normalization for the hard training
//! profile. Statistics update during rollout collection and freeze for
//! evaluation (they ship inside checkpoints).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningMeanStd {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: f64,
}

impl RunningMeanStd {
    pub fn new(dim: usize) -> Self {
        RunningMeanStd {
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
            count: 1e-4,
        }
    }

    pub fn update(&mut self, x: &[f64]) {
        self.count += 1.0;
        for ((v, mean), var) in x.iter().zip(&mut self.mean).zip(&mut self.var) {
            let delta = v - *mean;
            *mean += delta / self.count;
            // Welford-style running variance.
            *var += (delta * (v - *mean) - *var) / self.count;
        }
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, v)| ((v - self.mean[i]) / (self.var[i] + 1e-8).sqrt()).clamp(-10.0, 10.0))
            .collect()
    }
}

/// Normalizes rewards by the running standard deviation of discounted
/// returns, one accumulator per parallel environment.
#[derive(Debug, Clone)]
pub struct ReturnNormalizer {
    rms: RunningMeanStd,
    returns: Vec<f64>,
    gamma: f64,
}

impl ReturnNormalizer {
    pub fn new(num_envs: usize, gamma: f64) -> Self {
        ReturnNormalizer {
            rms: RunningMeanStd::new(1),
            returns: vec![0.0; num_envs],
            gamma,
        }
    }

    pub fn normalize(&mut self, env_idx: usize, reward: f64, done: bool) -> f64 {
        self.returns[env_idx] = self.gamma * self.returns[env_idx] + reward;
        self.rms.update(&[self.returns[env_idx]]);
        if done {
            self.returns[env_idx] = 0.0;
        }
        (reward / (self.rms.var[0] + 1e-8).sqrt()).clamp(-10.0, 10.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_stats_converge_to_sample_moments() {
        let mut rms = RunningMeanStd::new(1);
        let xs: Vec<f64> = (0..1000).map(|i| (i % 10) as f64).collect();
        for x in &xs {
            rms.update(&[*x]);
        }
        let mean: f64 = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((rms.mean[0] - mean).abs() < 0.05);
        assert!((rms.var[0] - 8.25).abs() < 0.1);
    }

    #[test]
    fn normalized_obs_is_clamped() {
        let rms = RunningMeanStd::new(1);
        let z = rms.normalize(&[1e9]);
        assert_eq!(z[0], 10.0);
    }
}
