//! Highway merging (driving domain): an ego vehicle driven by IDM with the
//! MOBIL lane-change criterion, background traffic, and three scripted
//! merge events whose vehicles never react to the ego.

use super::{Domain, DomainId, EpisodeStatus, RewardItem, RewardTerm, StepEffect, TopicTable};
use crate::derive_seed;
use crate::human::BasePolicy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HighwayAction {
    Idle,
    Faster,
    Slower,
    LaneLeft,
    LaneRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdmParams {
    /// Maximum acceleration (m/s^2).
    pub a_max: f64,
    /// Comfortable braking deceleration (m/s^2).
    pub b: f64,
    /// Jam distance (m).
    pub s0: f64,
    /// Desired time headway (s).
    pub t_headway: f64,
    /// Emergency braking applied on non-positive gaps (m/s^2).
    pub b_max: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        IdmParams {
            a_max: 1.5,
            b: 2.0,
            s0: 2.0,
            t_headway: 1.5,
            b_max: 6.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilParams {
    pub politeness: f64,
    pub accel_threshold: f64,
    pub b_safe: f64,
}

impl Default for MobilParams {
    fn default() -> Self {
        MobilParams {
            politeness: 0.3,
            accel_threshold: 0.2,
            b_safe: 4.0,
        }
    }
}

/// Intelligent Driver Model acceleration.
///
/// `gap` is the bumper gap to the leader, `dv` the closing speed (ego speed
/// minus leader speed). Non-positive gaps brake at `-b_max`.
pub fn idm_acceleration(v: f64, v0: f64, gap: f64, dv: f64, p: &IdmParams) -> f64 {
    if gap <= 0.0 {
        return -p.b_max;
    }
    let s_star = p.s0 + v * p.t_headway + v * dv / (2.0 * (p.a_max * p.b).sqrt());
    p.a_max * (1.0 - (v / v0).powi(4) - (s_star / gap).powi(2))
}

/// Free-road IDM acceleration (no leader).
pub fn idm_free(v: f64, v0: f64, p: &IdmParams) -> f64 {
    p.a_max * (1.0 - (v / v0).powi(4))
}

/// Nearest leader/follower in one lane, as (gap, speed) pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LaneContext {
    pub leader: Option<(f64, f64)>,
    pub follower: Option<(f64, f64)>,
}

fn accel_against(v: f64, v0: f64, leader: Option<(f64, f64)>, p: &IdmParams) -> f64 {
    match leader {
        Some((gap, lv)) => idm_acceleration(v, v0, gap, v - lv, p),
        None => idm_free(v, v0, p),
    }
}

/// MOBIL lane-change criterion: change lanes iff the new follower is not
/// forced below `-b_safe` and own gain plus politeness-weighted follower
/// gains exceeds the acceleration threshold.
pub fn mobil_lane_change(
    ego_v: f64,
    ego_v0: f64,
    current: &LaneContext,
    candidate: &LaneContext,
    follower_v0: f64,
    idm: &IdmParams,
    mobil: &MobilParams,
) -> bool {
    let a_before = accel_against(ego_v, ego_v0, current.leader, idm);
    let a_after = accel_against(ego_v, ego_v0, candidate.leader, idm);

    // Candidate-lane follower, before and after the ego cuts in.
    let (nf_before, nf_after) = match candidate.follower {
        Some((gap_f, fv)) => {
            let before = match candidate.leader {
                Some((gap_l, lv)) => idm_acceleration(fv, follower_v0, gap_f + gap_l, fv - lv, idm),
                None => idm_free(fv, follower_v0, idm),
            };
            let after = idm_acceleration(fv, follower_v0, gap_f, fv - ego_v, idm);
            (before, after)
        }
        None => (0.0, 0.0),
    };
    if nf_after < -mobil.b_safe {
        return false;
    }
    // Old follower gains the ego's former slot.
    let (of_before, of_after) = match current.follower {
        Some((gap_f, fv)) => {
            let before = idm_acceleration(fv, follower_v0, gap_f, fv - ego_v, idm);
            let after = match current.leader {
                Some((gap_l, lv)) => idm_acceleration(fv, follower_v0, gap_f + gap_l, fv - lv, idm),
                None => idm_free(fv, follower_v0, idm),
            };
            (before, after)
        }
        None => (0.0, 0.0),
    };
    let own_gain = a_after - a_before;
    let others_gain = (nf_after - nf_before) + (of_after - of_before);
    own_gain + mobil.politeness * others_gain > mobil.accel_threshold
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub lane: usize,
    pub position: f64,
    pub speed: f64,
    pub is_merging: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighwayState {
    pub ego: Vehicle,
    pub others: Vec<Vehicle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HighwayConfig {
    pub lanes: usize,
    pub length: f64,
    /// Seconds per word-tick.
    pub dt: f64,
    pub idm: IdmParams,
    pub mobil: MobilParams,
    pub ego_start_speed: f64,
    pub ego_desired_speed: f64,
    pub other_desired_speed: f64,
    /// Ego-progress trigger positions of the three merge events; the third
    /// event's vehicle enters from the left side.
    pub merge_triggers: [f64; 3],
    pub merge_gap_ahead: f64,
    pub merge_speed: f64,
    pub background_per_lane: usize,
    pub car_length: f64,
    pub speed_reward_range: (f64, f64),
    pub collision_penalty: f64,
    pub initiation_penalty: f64,
    pub action_accel: f64,
    pub max_ticks: u32,
    pub nearest_k: usize,
}

impl Default for HighwayConfig {
    fn default() -> Self {
        HighwayConfig {
            lanes: 3,
            length: 1000.0,
            dt: 0.3,
            idm: IdmParams::default(),
            mobil: MobilParams::default(),
            ego_start_speed: 25.0,
            ego_desired_speed: 30.0,
            other_desired_speed: 24.0,
            merge_triggers: [150.0, 400.0, 650.0],
            merge_gap_ahead: 18.0,
            merge_speed: 18.0,
            background_per_lane: 2,
            car_length: 5.0,
            speed_reward_range: (15.0, 38.0),
            collision_penalty: -1.0,
            initiation_penalty: -0.3,
            action_accel: 1.5,
            max_ticks: 160,
            nearest_k: 5,
        }
    }
}

fn highway_topics() -> TopicTable<HighwayAction> {
    TopicTable::new(vec![
        ("slow_down", HighwayAction::Slower),
        ("speed_up", HighwayAction::Faster),
        ("merge_left", HighwayAction::LaneLeft),
        ("merge_right", HighwayAction::LaneRight),
    ])
}

/// Normalized speed reward, linear over the configured range.
pub fn speed_reward(v: f64, range: (f64, f64)) -> f64 {
    ((v - range.0) / (range.1 - range.0)).clamp(0.0, 1.0)
}

#[derive(Clone)]
pub struct Highway {
    pub cfg: HighwayConfig,
    state: HighwayState,
    tick: u32,
    status: EpisodeStatus,
    collided: bool,
    merges_spawned: usize,
    /// Scripted lane cut-ins for merging vehicles: (vehicle idx, tick, lane).
    pending_cuts: Vec<(usize, u32, usize)>,
    topics: TopicTable<HighwayAction>,
    rng: ChaCha8Rng,
}

impl Highway {
    pub fn new(cfg: HighwayConfig) -> Self {
        Highway {
            cfg,
            state: HighwayState {
                ego: Vehicle {
                    lane: 1,
                    position: 0.0,
                    speed: 0.0,
                    is_merging: false,
                },
                others: Vec::new(),
            },
            tick: 0,
            status: EpisodeStatus::Running,
            collided: false,
            merges_spawned: 0,
            pending_cuts: Vec::new(),
            topics: highway_topics(),
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    pub fn state(&self) -> &HighwayState {
        &self.state
    }

    pub fn collided(&self) -> bool {
        self.collided
    }

    pub fn tick(&self) -> u32 {
        self.tick
    }

    /// Leader/follower context around `position` in `lane`, excluding the
    /// vehicle at index `skip` (usize::MAX for none). Merging vehicles are
    /// blind to the ego, so callers computing their moves pass
    /// `see_ego = false`.
    fn lane_context(&self, lane: usize, position: f64, skip: usize, see_ego: bool) -> LaneContext {
        let mut ctx = LaneContext::default();
        let mut best_lead = f64::INFINITY;
        let mut best_follow = f64::INFINITY;
        let car = self.cfg.car_length;
        let mut consider = |pos: f64, speed: f64| {
            if pos > position {
                let gap = pos - position - car;
                if gap < best_lead {
                    best_lead = gap;
                    ctx.leader = Some((gap, speed));
                }
            } else {
                let gap = position - pos - car;
                if gap < best_follow {
                    best_follow = gap;
                    ctx.follower = Some((gap, speed));
                }
            }
        };
        for (i, v) in self.state.others.iter().enumerate() {
            if i == skip || v.lane != lane {
                continue;
            }
            consider(v.position, v.speed);
        }
        if see_ego && self.state.ego.lane == lane {
            consider(self.state.ego.position, self.state.ego.speed);
        }
        ctx
    }

    /// The base driving decision: MOBIL for lateral moves, IDM-following
    /// otherwise.
    pub fn base_decision(&self) -> HighwayAction {
        let ego = self.state.ego;
        let current = self.lane_context(ego.lane, ego.position, usize::MAX, false);
        for (target, action) in [
            (ego.lane.checked_sub(1), HighwayAction::LaneLeft),
            (
                (ego.lane + 1 < self.cfg.lanes).then_some(ego.lane + 1),
                HighwayAction::LaneRight,
            ),
        ] {
            let Some(target) = target else { continue };
            let candidate = self.lane_context(target, ego.position, usize::MAX, false);
            if mobil_lane_change(
                ego.speed,
                self.cfg.ego_desired_speed,
                &current,
                &candidate,
                self.cfg.other_desired_speed,
                &self.cfg.idm,
                &self.cfg.mobil,
            ) {
                return action;
            }
        }
        HighwayAction::Idle
    }
}

impl Domain for Highway {
    type Action = HighwayAction;

    fn id(&self) -> DomainId {
        DomainId::Driving
    }

    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x41c));
        self.tick = 0;
        self.status = EpisodeStatus::Running;
        self.collided = false;
        self.merges_spawned = 0;
        self.pending_cuts.clear();
        self.state.ego = Vehicle {
            lane: 1,
            position: 0.0,
            speed: self.cfg.ego_start_speed,
            is_merging: false,
        };
        self.state.others.clear();
        for lane in 0..self.cfg.lanes {
            for i in 0..self.cfg.background_per_lane {
                let jitter: f64 = self.rng.random_range(-15.0..15.0);
                self.state.others.push(Vehicle {
                    lane,
                    position: 60.0 + 90.0 * i as f64 + jitter,
                    speed: self.cfg.other_desired_speed + self.rng.random_range(-2.0..2.0),
                    is_merging: false,
                });
            }
        }
    }

    fn observation(&self) -> Vec<f64> {
        let ego = self.state.ego;
        let mut obs = vec![
            ego.lane as f64 / (self.cfg.lanes - 1).max(1) as f64,
            ego.position / self.cfg.length,
            ego.speed / 40.0,
        ];
        let mut nearest: Vec<&Vehicle> = self.state.others.iter().collect();
        nearest.sort_by(|a, b| {
            let da = (a.position - ego.position).abs();
            let db = (b.position - ego.position).abs();
            da.partial_cmp(&db).unwrap()
        });
        for i in 0..self.cfg.nearest_k {
            match nearest.get(i) {
                Some(v) => {
                    obs.push((v.lane as f64 - ego.lane as f64) / self.cfg.lanes as f64);
                    obs.push(((v.position - ego.position) / 100.0).clamp(-1.5, 1.5));
                    obs.push((v.speed - ego.speed) / 40.0);
                    obs.push(v.is_merging as u8 as f64);
                }
                None => obs.extend_from_slice(&[0.0, 1.5, 0.0, 0.0]),
            }
        }
        obs
    }

    fn obs_dim(&self) -> usize {
        3 + self.cfg.nearest_k * 4
    }

    fn apply(&mut self, action: HighwayAction) -> StepEffect {
        debug_assert_eq!(self.status, EpisodeStatus::Running);
        let cfg = self.cfg.clone();
        let dt = cfg.dt;

        let ego = self.state.ego;
        let mut ego_lane = ego.lane;
        let ego_accel = match action {
            HighwayAction::Idle => {
                let ctx = self.lane_context(ego.lane, ego.position, usize::MAX, false);
                accel_against(ego.speed, cfg.ego_desired_speed, ctx.leader, &cfg.idm)
            }
            HighwayAction::Faster => cfg.action_accel,
            HighwayAction::Slower => -cfg.action_accel * 2.0,
            HighwayAction::LaneLeft => {
                ego_lane = ego.lane.saturating_sub(1);
                0.0
            }
            HighwayAction::LaneRight => {
                ego_lane = (ego.lane + 1).min(cfg.lanes - 1);
                0.0
            }
        };

        // Other vehicles follow IDM; merging vehicles never see the ego.
        let updates: Vec<(f64, f64)> = self
            .state
            .others
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let ctx = self.lane_context(v.lane, v.position, i, !v.is_merging);
                let a = accel_against(v.speed, cfg.other_desired_speed, ctx.leader, &cfg.idm);
                let speed = (v.speed + a * dt).max(0.0);
                (v.position + speed * dt, speed)
            })
            .collect();
        for (v, (pos, speed)) in self.state.others.iter_mut().zip(updates) {
            v.position = pos;
            v.speed = speed;
        }

        let e = &mut self.state.ego;
        e.lane = ego_lane;
        e.speed = (e.speed + ego_accel * dt).max(0.0);
        e.position += e.speed * dt;
        self.tick += 1;

        // Merge events trigger on ego progress. The entering vehicle appears
        // in an adjacent lane (the third event comes from the left, the
        // others from the right) and cuts into the ego's lane two ticks
        // later, slower and oblivious.
        while self.merges_spawned < 3
            && self.state.ego.position >= cfg.merge_triggers[self.merges_spawned]
        {
            let ego_lane = self.state.ego.lane;
            let from_left = self.merges_spawned == 2;
            let spawn_lane = if from_left {
                ego_lane.saturating_sub(1)
            } else {
                (ego_lane + 1).min(cfg.lanes - 1)
            };
            self.state.others.push(Vehicle {
                lane: spawn_lane,
                position: self.state.ego.position + cfg.merge_gap_ahead,
                speed: cfg.merge_speed,
                is_merging: true,
            });
            self.pending_cuts
                .push((self.state.others.len() - 1, self.tick + 2, ego_lane));
            self.merges_spawned += 1;
        }
        let cuts: Vec<(usize, usize)> = self
            .pending_cuts
            .iter()
            .filter(|(_, at, _)| *at <= self.tick)
            .map(|(idx, _, lane)| (*idx, *lane))
            .collect();
        self.pending_cuts.retain(|(_, at, _)| *at > self.tick);
        for (idx, lane) in cuts {
            self.state.others[idx].lane = lane;
        }

        let ego = self.state.ego;
        let collided = self
            .state
            .others
            .iter()
            .any(|v| v.lane == ego.lane && (v.position - ego.position).abs() < cfg.car_length);

        let mut items = Vec::new();
        if collided {
            self.collided = true;
            self.status = EpisodeStatus::Failure;
            items.push(RewardItem::new(
                RewardTerm::Collision,
                cfg.collision_penalty,
            ));
        } else if ego.position >= cfg.length {
            self.status = EpisodeStatus::Success;
        } else if self.tick >= cfg.max_ticks {
            self.status = EpisodeStatus::Timeout;
        }
        items.push(RewardItem::new(
            RewardTerm::Speed,
            speed_reward(ego.speed, cfg.speed_reward_range),
        ));
        StepEffect {
            reward_items: items,
            status: self.status,
        }
    }

    fn status(&self) -> EpisodeStatus {
        self.status
    }

    fn topics(&self) -> &TopicTable<HighwayAction> {
        &self.topics
    }

    fn initiation_penalty(&self) -> f64 {
        self.cfg.initiation_penalty
    }

    fn action_name(&self, action: HighwayAction) -> &'static str {
        match action {
            HighwayAction::Idle => "idle",
            HighwayAction::Faster => "faster",
            HighwayAction::Slower => "slower",
            HighwayAction::LaneLeft => "lane_left",
            HighwayAction::LaneRight => "lane_right",
        }
    }

    fn plot_point(&self) -> (f64, f64) {
        (self.state.ego.position, self.state.ego.lane as f64)
    }
}

/// IDM/MOBIL rule-following driver.
#[derive(Debug, Clone, Default)]
pub struct RuleDriver;

impl BasePolicy<Highway> for RuleDriver {
    fn act(&mut self, env: &Highway, _rng: &mut ChaCha8Rng) -> HighwayAction {
        env.base_decision()
    }
}

#[cfg(test)]
mod tests;
