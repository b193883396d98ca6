//! Simplified kinematic 2D lander (piloting domain).
//!
//! A pad-seeking pilot descends from the upper left through airspace holding
//! three danger zones it cannot see. Zones never alter dynamics; they only
//! contribute penalties and disqualify the episode from counting as a
//! success. The geometry leaves a corridor between the top-left zone and the
//! overhead blockade, so guidance has to be timed, not just issued.

use super::{Domain, DomainId, EpisodeStatus, RewardItem, RewardTerm, StepEffect, TopicTable};
use crate::derive_seed;
use crate::human::BasePolicy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LanderAction {
    Noop,
    MainEngine,
    ThrustLeft,
    ThrustRight,
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Rect {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// Euclidean distance from a point to the rectangle (0 inside).
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let dx = (self.x_min - x).max(0.0).max(x - self.x_max);
        let dy = (self.y_min - y).max(0.0).max(y - self.y_max);
        (dx * dx + dy * dy).sqrt()
    }
}

/// The three hazard rectangles. Invariant: none of them overlaps the
/// landing pad strip at ground level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DangerZoneSet {
    pub top_left: Rect,
    pub overhead: Rect,
    pub right_side: Rect,
}

impl DangerZoneSet {
    pub fn standard() -> Self {
        DangerZoneSet {
            top_left: Rect::new(-1.2, -0.40, 0.95, 1.18),
            overhead: Rect::new(0.08, 0.60, 0.30, 0.85),
            right_side: Rect::new(0.70, 1.2, 0.0, 0.55),
        }
    }

    /// Hard variant: the top-left zone grows rightward, shrinking the safe
    /// gap between it and the overhead blockade to about two lander widths.
    pub fn hard() -> Self {
        DangerZoneSet {
            top_left: Rect::new(-1.2, -0.26, 0.88, 1.22),
            overhead: Rect::new(0.08, 0.60, 0.30, 0.85),
            right_side: Rect::new(0.55, 1.1, 0.0, 0.5),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Rect> {
        [&self.top_left, &self.overhead, &self.right_side].into_iter()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.iter().any(|z| z.contains(x, y))
    }

    pub fn min_distance(&self, x: f64, y: f64) -> f64 {
        self.iter()
            .map(|z| z.distance(x, y))
            .fold(f64::INFINITY, f64::min)
    }
}

/// 8-component lander state, mirroring the classic benchmark layout.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LanderState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub angle: f64,
    pub angular_velocity: f64,
    pub left_contact: bool,
    pub right_contact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LanderConfig {
    pub gravity: f64,
    pub main_thrust: f64,
    pub side_thrust: f64,
    pub side_torque: f64,
    pub angular_damping: f64,
    /// Restoring torque coefficient pulling the craft upright each tick.
    pub attitude_gain: f64,

    pub start_x: f64,
    pub start_y: f64,
    pub start_jitter_x: f64,
    pub start_jitter_y: f64,

    /// Ornstein-Uhlenbeck lateral wind: w <- decay * w + sigma * N(0,1),
    /// plus a constant per-episode bias and one gust window per episode.
    pub wind_sigma: f64,
    pub wind_decay: f64,
    pub wind_bias_max: f64,
    pub gust_accel: f64,
    pub gust_earliest: u32,
    pub gust_latest: u32,
    pub gust_duration: u32,

    pub pad_half_width: f64,
    pub max_land_vy: f64,
    pub max_land_vx: f64,
    pub max_land_angle: f64,
    pub bounds_x: f64,
    pub bounds_y: f64,
    pub max_ticks: u32,

    pub zones: DangerZoneSet,

    pub fuel_main: f64,
    pub fuel_side: f64,
    pub initiation_penalty: f64,
    pub near_zone_coef: f64,
    pub near_zone_radius: f64,
    pub in_zone_penalty: f64,
    pub crash_penalty: f64,
    pub success_reward: f64,
}

impl Default for LanderConfig {
    fn default() -> Self {
        LanderConfig {
            gravity: 0.0024,
            main_thrust: 0.0070,
            side_thrust: 0.0040,
            side_torque: 0.004,
            angular_damping: 0.25,
            attitude_gain: 0.08,

            start_x: -0.75,
            start_y: 1.42,
            start_jitter_x: 0.05,
            start_jitter_y: 0.03,

            wind_sigma: 0.0006,
            wind_decay: 0.88,
            wind_bias_max: 0.0005,
            gust_accel: 0.0010,
            gust_earliest: 5,
            gust_latest: 30,
            gust_duration: 6,

            pad_half_width: 0.20,
            max_land_vy: 0.030,
            max_land_vx: 0.025,
            max_land_angle: 0.30,
            bounds_x: 1.35,
            bounds_y: 1.70,
            max_ticks: 140,

            zones: DangerZoneSet::standard(),

            fuel_main: -0.3,
            fuel_side: -0.03,
            initiation_penalty: -1.0,
            near_zone_coef: -10.0,
            near_zone_radius: 0.2,
            in_zone_penalty: -20.0,
            crash_penalty: -300.0,
            success_reward: 300.0,
        }
    }
}

impl LanderConfig {
    pub fn hard() -> Self {
        LanderConfig {
            zones: DangerZoneSet::hard(),
            ..LanderConfig::default()
        }
    }

    /// Deterministic variant for oracle tests: no wind, no jitter.
    pub fn calm() -> Self {
        LanderConfig {
            wind_sigma: 0.0,
            wind_bias_max: 0.0,
            gust_accel: 0.0,
            start_jitter_x: 0.0,
            start_jitter_y: 0.0,
            ..LanderConfig::default()
        }
    }
}

fn lander_topics() -> TopicTable<LanderAction> {
    TopicTable::new(vec![
        ("ascend", LanderAction::MainEngine),
        ("shift_right", LanderAction::ThrustRight),
        ("shift_left", LanderAction::ThrustLeft),
        ("descend", LanderAction::Noop),
    ])
}

/// One integration step of the lander kinematics under a human action and a
/// lateral wind acceleration. Pure; zones play no part here.
pub fn lander_step(
    s: &LanderState,
    action: LanderAction,
    wind_ax: f64,
    cfg: &LanderConfig,
) -> LanderState {
    let mut ax = wind_ax;
    let mut ay = -cfg.gravity;
    let mut torque = 0.0;
    match action {
        LanderAction::Noop => {}
        LanderAction::MainEngine => {
            ax += -cfg.main_thrust * s.angle.sin();
            ay += cfg.main_thrust * s.angle.cos();
        }
        LanderAction::ThrustLeft => {
            ax -= cfg.side_thrust;
            torque = cfg.side_torque;
        }
        LanderAction::ThrustRight => {
            ax += cfg.side_thrust;
            torque = -cfg.side_torque;
        }
    }
    let vx = s.vx + ax;
    let vy = s.vy + ay;
    let angular_velocity =
        (s.angular_velocity + torque - cfg.attitude_gain * s.angle) * (1.0 - cfg.angular_damping);
    let angle = s.angle + angular_velocity;
    let x = s.x + vx;
    let y = s.y + vy;
    let grounded = y <= 0.0;
    LanderState {
        x,
        y: y.max(0.0),
        vx,
        vy,
        angle,
        angular_velocity,
        left_contact: grounded,
        right_contact: grounded,
    }
}

/// Itemized notifier reward for one transition, following the piloting
/// reward table: fuel per firing, initiation per new notification, proximity
/// shaping within `near_zone_radius` of a zone, a flat in-zone penalty, and
/// terminal crash/success rewards.
///
/// Proximity applies strictly outside a zone; inside, only the in-zone
/// penalty counts. Zone terms are evaluated on the post-step state and are
/// skipped once the episode has ended.
pub fn lander_reward_items(
    action: LanderAction,
    cur: &LanderState,
    new_notification: bool,
    outcome: EpisodeStatus,
    crashed: bool,
    cfg: &LanderConfig,
) -> Vec<RewardItem> {
    let mut items = Vec::new();
    match action {
        LanderAction::MainEngine => {
            items.push(RewardItem::new(RewardTerm::FuelMain, cfg.fuel_main))
        }
        LanderAction::ThrustLeft | LanderAction::ThrustRight => {
            items.push(RewardItem::new(RewardTerm::FuelSide, cfg.fuel_side))
        }
        LanderAction::Noop => {}
    }
    if new_notification {
        items.push(RewardItem::new(
            RewardTerm::NotifyInitiation,
            cfg.initiation_penalty,
        ));
    }
    if outcome == EpisodeStatus::Running {
        let mut near = 0.0;
        let mut inside = false;
        for zone in cfg.zones.iter() {
            let d = zone.distance(cur.x, cur.y);
            if zone.contains(cur.x, cur.y) {
                inside = true;
            } else if d < cfg.near_zone_radius {
                near += cfg.near_zone_radius - d;
            }
        }
        if near > 0.0 {
            items.push(RewardItem::new(
                RewardTerm::NearDanger,
                cfg.near_zone_coef * near,
            ));
        }
        if inside {
            items.push(RewardItem::new(RewardTerm::InDanger, cfg.in_zone_penalty));
        }
    } else if crashed {
        items.push(RewardItem::new(RewardTerm::Crash, cfg.crash_penalty));
    } else if outcome == EpisodeStatus::Success {
        items.push(RewardItem::new(
            RewardTerm::SuccessLanding,
            cfg.success_reward,
        ));
    }
    items
}

#[derive(Debug, Clone, Copy)]
struct Wind {
    ou: f64,
    bias: f64,
    gust_onset: u32,
    gust_dir: f64,
}

/// The piloting environment.
#[derive(Clone)]
pub struct Lander {
    pub cfg: LanderConfig,
    state: LanderState,
    tick: u32,
    status: EpisodeStatus,
    entered_danger: bool,
    crashed: bool,
    wind: Wind,
    rng: ChaCha8Rng,
    topics: TopicTable<LanderAction>,
}

impl Lander {
    pub fn new(cfg: LanderConfig) -> Self {
        Lander {
            cfg,
            state: LanderState::default(),
            tick: 0,
            status: EpisodeStatus::Running,
            entered_danger: false,
            crashed: false,
            wind: Wind {
                ou: 0.0,
                bias: 0.0,
                gust_onset: u32::MAX,
                gust_dir: 0.0,
            },
            rng: ChaCha8Rng::seed_from_u64(0),
            topics: lander_topics(),
        }
    }

    pub fn state(&self) -> &LanderState {
        &self.state
    }

    pub fn entered_danger(&self) -> bool {
        self.entered_danger
    }

    pub fn crashed(&self) -> bool {
        self.crashed
    }

    pub fn tick(&self) -> u32 {
        self.tick
    }

    /// Overwrites the physical state; scripted-trace and test hook.
    pub fn set_state(&mut self, state: LanderState) {
        self.state = state;
    }

    fn wind_accel(&mut self) -> f64 {
        if self.cfg.wind_sigma == 0.0 && self.wind.bias == 0.0 && self.cfg.gust_accel == 0.0 {
            return 0.0;
        }
        let noise: f64 = self.rng.sample(rand_distr::StandardNormal);
        self.wind.ou = self.cfg.wind_decay * self.wind.ou + self.cfg.wind_sigma * noise;
        let mut w = self.wind.ou + self.wind.bias;
        if self.tick >= self.wind.gust_onset
            && self.tick < self.wind.gust_onset + self.cfg.gust_duration
        {
            w += self.wind.gust_dir * self.cfg.gust_accel;
        }
        w
    }
}

impl Domain for Lander {
    type Action = LanderAction;

    fn id(&self) -> DomainId {
        DomainId::Piloting
    }

    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x1a9d));
        let jx = if self.cfg.start_jitter_x > 0.0 {
            self.rng
                .random_range(-self.cfg.start_jitter_x..=self.cfg.start_jitter_x)
        } else {
            0.0
        };
        let jy = if self.cfg.start_jitter_y > 0.0 {
            self.rng
                .random_range(-self.cfg.start_jitter_y..=self.cfg.start_jitter_y)
        } else {
            0.0
        };
        self.state = LanderState {
            x: self.cfg.start_x + jx,
            y: self.cfg.start_y + jy,
            ..LanderState::default()
        };
        let bias = if self.cfg.wind_bias_max > 0.0 {
            self.rng
                .random_range(-self.cfg.wind_bias_max..=self.cfg.wind_bias_max)
        } else {
            0.0
        };
        let gust_onset = if self.cfg.gust_accel > 0.0 {
            self.rng
                .random_range(self.cfg.gust_earliest..=self.cfg.gust_latest)
        } else {
            u32::MAX
        };
        let gust_dir = if self.rng.random::<bool>() { 1.0 } else { -1.0 };
        self.wind = Wind {
            ou: 0.0,
            bias,
            gust_onset,
            gust_dir,
        };
        self.tick = 0;
        self.status = EpisodeStatus::Running;
        self.entered_danger = false;
        self.crashed = false;
    }

    fn observation(&self) -> Vec<f64> {
        let s = &self.state;
        // Velocities are an order of magnitude smaller than positions;
        // scale them so the policy input stays O(1) across components.
        vec![
            s.x,
            s.y,
            s.vx * 10.0,
            s.vy * 10.0,
            s.angle,
            s.angular_velocity * 10.0,
            s.left_contact as u8 as f64,
            s.right_contact as u8 as f64,
        ]
    }

    fn obs_dim(&self) -> usize {
        8
    }

    fn apply(&mut self, action: LanderAction) -> StepEffect {
        debug_assert_eq!(self.status, EpisodeStatus::Running);
        let wind = self.wind_accel();
        self.state = lander_step(&self.state, action, wind, &self.cfg);
        self.tick += 1;

        let cfg = &self.cfg;
        let s = self.state;
        if s.left_contact {
            let gentle = s.vy.abs() <= cfg.max_land_vy
                && s.vx.abs() <= cfg.max_land_vx
                && s.angle.abs() <= cfg.max_land_angle;
            let on_pad = s.x.abs() <= cfg.pad_half_width;
            if gentle && on_pad && !self.entered_danger {
                self.status = EpisodeStatus::Success;
            } else {
                self.status = EpisodeStatus::Failure;
                self.crashed = !gentle;
            }
        } else if s.x.abs() > cfg.bounds_x || s.y > cfg.bounds_y {
            self.status = EpisodeStatus::Failure;
        } else if self.tick >= cfg.max_ticks {
            self.status = EpisodeStatus::Timeout;
        }

        if self.status == EpisodeStatus::Running && cfg.zones.contains(s.x, s.y) {
            self.entered_danger = true;
        }

        let items = lander_reward_items(action, &s, false, self.status, self.crashed, cfg);
        StepEffect {
            reward_items: items,
            status: self.status,
        }
    }

    fn status(&self) -> EpisodeStatus {
        self.status
    }

    fn topics(&self) -> &TopicTable<LanderAction> {
        &self.topics
    }

    fn initiation_penalty(&self) -> f64 {
        self.cfg.initiation_penalty
    }

    fn action_name(&self, action: LanderAction) -> &'static str {
        match action {
            LanderAction::Noop => "noop",
            LanderAction::MainEngine => "main_engine",
            LanderAction::ThrustLeft => "thrust_left",
            LanderAction::ThrustRight => "thrust_right",
        }
    }

    fn plot_point(&self) -> (f64, f64) {
        (self.state.x, self.state.y)
    }
}

/// Proportional controller flying toward the pad, blind to danger zones.
///
/// Vertical safety first: it throttles the main engine whenever descent is
/// faster than a height-scheduled target, then trims horizontal velocity
/// toward the pad, then lets gravity act.
#[derive(Debug, Clone, Default)]
pub struct ScriptedPilot;

impl ScriptedPilot {
    fn target_vy(y: f64) -> f64 {
        -(0.009 + 0.022 * y.min(1.0))
    }

    fn target_vx(x: f64, y: f64) -> f64 {
        // Approach speed cap tightens with proximity so the pad is never
        // crossed hot, and the budget shrinks near the ground so touchdown
        // happens with the drift already shed.
        let cap = (0.008 + 0.040 * x.abs()).min(0.020);
        let scale = (0.45 + y).min(1.0);
        (-x * 0.17).clamp(-cap, cap) * scale
    }

    fn side_toward(vx_err: f64) -> LanderAction {
        if vx_err > 0.0 {
            LanderAction::ThrustRight
        } else {
            LanderAction::ThrustLeft
        }
    }

    pub fn decide(s: &LanderState) -> LanderAction {
        if s.angle.abs() > 0.25 {
            // Straighten up before anything else.
            return if s.angle > 0.0 {
                LanderAction::ThrustRight
            } else {
                LanderAction::ThrustLeft
            };
        }
        // Hold a near-hover sink rate when low but not yet settled over the
        // pad (position and lateral speed); finish the traverse first.
        let settled = s.x.abs() <= 0.12 && s.vx.abs() <= 0.012;
        let vy_target = if s.y < 0.32 && !settled {
            -0.008
        } else {
            Self::target_vy(s.y)
        };
        let vy_err = s.vy - vy_target;
        let vx_err = Self::target_vx(s.x, s.y) - s.vx;
        if s.y < 0.30 {
            // Touchdown phase: shed lateral speed aggressively, only burn
            // when descent runs well past the profile.
            if vy_err < -0.012 {
                return LanderAction::MainEngine;
            }
            if vx_err.abs() > 0.002 {
                return Self::side_toward(vx_err);
            }
            if vy_err < -0.004 {
                return LanderAction::MainEngine;
            }
            return LanderAction::Noop;
        }
        if vy_err < -0.008 {
            return LanderAction::MainEngine;
        }
        if vx_err.abs() > 0.004 {
            return Self::side_toward(vx_err);
        }
        if vy_err < -0.004 {
            return LanderAction::MainEngine;
        }
        LanderAction::Noop
    }
}

impl BasePolicy<Lander> for ScriptedPilot {
    fn act(&mut self, env: &Lander, _rng: &mut ChaCha8Rng) -> LanderAction {
        Self::decide(env.state())
    }
}

#[cfg(test)]
mod tests;

/// Plain landing task for training a base pilot with the single-head PPO
/// loop: no zones, no notifier, dense approach shaping plus the terminal
/// landing rewards.
pub struct PilotTask {
    env: Lander,
    prev_potential: f64,
}

impl PilotTask {
    pub fn new(mut cfg: LanderConfig) -> Self {
        // hazards are the notifier's concern, not the pilot's
        let far = Rect::new(50.0, 51.0, 50.0, 51.0);
        cfg.zones = DangerZoneSet {
            top_left: far,
            overhead: far,
            right_side: far,
        };
        PilotTask {
            env: Lander::new(cfg),
            prev_potential: 0.0,
        }
    }

    fn potential(s: &LanderState) -> f64 {
        (s.x * s.x + s.y * s.y).sqrt() + 2.0 * (s.vx.abs() + s.vy.abs())
    }

    pub fn action_of(idx: usize) -> LanderAction {
        match idx {
            1 => LanderAction::MainEngine,
            2 => LanderAction::ThrustLeft,
            3 => LanderAction::ThrustRight,
            _ => LanderAction::Noop,
        }
    }
}

impl crate::policy::ppo::DiscreteTask for PilotTask {
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.env.reset(seed);
        self.prev_potential = Self::potential(self.env.state());
        self.env.observation()
    }

    fn step(&mut self, action: usize) -> (Vec<f64>, f64, bool) {
        let effect = self.env.apply(Self::action_of(action));
        let s = self.env.state();
        let potential = Self::potential(s);
        let mut reward = 60.0 * (self.prev_potential - potential);
        self.prev_potential = potential;
        for item in &effect.reward_items {
            match item.term {
                RewardTerm::FuelMain | RewardTerm::FuelSide => reward += item.value,
                RewardTerm::Crash | RewardTerm::SuccessLanding => reward += item.value,
                _ => {}
            }
        }
        (self.env.observation(), reward, effect.status.is_terminal())
    }

    fn obs_dim(&self) -> usize {
        8
    }

    fn n_actions(&self) -> usize {
        4
    }
}
