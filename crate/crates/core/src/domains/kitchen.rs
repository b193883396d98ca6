//! Steakhouse kitchen (cooking domain): a gridworld where the human works
//! through subtasks at stations they may wrongly believe to be free. Sight
//! is limited to a small window ahead, so station knowledge arrives either
//! by walking close or through a disclosing notification.

use super::{Domain, DomainId, EpisodeStatus, RewardItem, RewardTerm, StepEffect, TopicTable};
use crate::action::TopicId;
use crate::derive_seed;
use crate::human::BasePolicy;
use crate::time::WordTick;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KitchenAction {
    Up,
    Down,
    Left,
    Right,
    Stay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Facing {
    Up,
    Down,
    Left,
    Right,
}

impl Facing {
    fn delta(&self) -> (i32, i32) {
        match self {
            Facing::Up => (0, -1),
            Facing::Down => (0, 1),
            Facing::Left => (-1, 0),
            Facing::Right => (1, 0),
        }
    }

    fn side(&self) -> (i32, i32) {
        let (dx, dy) = self.delta();
        (-dy, dx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StationKind {
    Grill,
    Board,
    Sink,
    Counter,
}

impl StationKind {
    pub fn name(&self) -> &'static str {
        match self {
            StationKind::Grill => "grill",
            StationKind::Board => "chopping_board",
            StationKind::Sink => "sink",
            StationKind::Counter => "counter",
        }
    }

    /// Lower value = more urgent. Grill and board tie on purpose.
    fn priority(&self) -> u32 {
        match self {
            StationKind::Grill | StationKind::Board => 0,
            StationKind::Sink => 1,
            StationKind::Counter => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub kind: StationKind,
    pub cell: (i32, i32),
    /// Ground truth: another cook is using it.
    pub occupied: bool,
    pub progress: u32,
    pub done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationBelief {
    pub occupied: bool,
    /// True once the human has actually observed (or been told) the state.
    pub known: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KitchenState {
    pub width: i32,
    pub height: i32,
    pub human: (i32, i32),
    pub facing: Facing,
    pub stations: Vec<Station>,
    pub beliefs: Vec<StationBelief>,
}

impl KitchenState {
    pub fn station(&self, kind: StationKind) -> &Station {
        self.stations
            .iter()
            .find(|s| s.kind == kind)
            .expect("station exists")
    }

    pub fn belief(&self, kind: StationKind) -> &StationBelief {
        let i = self
            .stations
            .iter()
            .position(|s| s.kind == kind)
            .expect("station exists");
        &self.beliefs[i]
    }

    fn in_bounds(&self, c: (i32, i32)) -> bool {
        c.0 >= 1 && c.0 < self.width - 1 && c.1 >= 1 && c.1 < self.height - 1
    }

    /// The 2-deep by 3-wide visibility window directly ahead.
    pub fn visible_cells(&self) -> Vec<(i32, i32)> {
        let (fx, fy) = self.facing.delta();
        let (sx, sy) = self.facing.side();
        let mut cells = Vec::with_capacity(6);
        for depth in 1..=2 {
            for offset in -1..=1 {
                cells.push((
                    self.human.0 + fx * depth + sx * offset,
                    self.human.1 + fy * depth + sy * offset,
                ));
            }
        }
        cells
    }

    /// Interior cell from which a wall station is worked.
    pub fn work_cell(&self, station: &Station) -> (i32, i32) {
        let (x, y) = station.cell;
        let candidates = [(x, y + 1), (x, y - 1), (x - 1, y), (x + 1, y)];
        candidates
            .into_iter()
            .find(|c| self.in_bounds(*c))
            .expect("station reachable")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KitchenConfig {
    pub width: i32,
    pub height: i32,
    pub start: (i32, i32),
    /// Stations whose true state starts occupied.
    pub occupied_stations: Vec<StationKind>,
    /// Stations the human wrongly believes free at the start. Anything not
    /// listed starts with an accurate belief.
    pub misbelieved_free: Vec<StationKind>,
    pub work_required: u32,
    pub max_ticks: u32,
    pub step_cost: f64,
    pub subtask_reward: f64,
    pub initiation_penalty: f64,
}

impl Default for KitchenConfig {
    fn default() -> Self {
        KitchenConfig {
            width: 9,
            height: 8,
            start: (4, 5),
            occupied_stations: vec![],
            misbelieved_free: vec![],
            work_required: 6,
            max_ticks: 120,
            step_cost: -0.01,
            subtask_reward: 1.0,
            initiation_penalty: 0.0,
        }
    }
}

impl KitchenConfig {
    /// The pre-occupied scenario used in the incremental-notification demo:
    /// grill, board, and sink taken by other cooks, the human unaware.
    pub fn preoccupied() -> Self {
        KitchenConfig {
            occupied_stations: vec![StationKind::Grill, StationKind::Board, StationKind::Sink],
            misbelieved_free: vec![StationKind::Grill, StationKind::Board, StationKind::Sink],
            ..KitchenConfig::default()
        }
    }
}

fn kitchen_topics() -> TopicTable<KitchenAction> {
    TopicTable::new(vec![
        ("move_up", KitchenAction::Up),
        ("move_down", KitchenAction::Down),
        ("move_left", KitchenAction::Left),
        ("move_right", KitchenAction::Right),
        ("disclose_information", KitchenAction::Stay),
    ])
}

pub struct Kitchen {
    pub cfg: KitchenConfig,
    state: KitchenState,
    tick: u32,
    status: EpisodeStatus,
    topics: TopicTable<KitchenAction>,
    rng: ChaCha8Rng,
}

impl Kitchen {
    pub fn new(cfg: KitchenConfig) -> Self {
        let state = Self::initial_state(&cfg);
        Kitchen {
            cfg,
            state,
            tick: 0,
            status: EpisodeStatus::Running,
            topics: kitchen_topics(),
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    fn initial_state(cfg: &KitchenConfig) -> KitchenState {
        let stations = vec![
            Station {
                kind: StationKind::Grill,
                cell: (2, 0),
                occupied: cfg.occupied_stations.contains(&StationKind::Grill),
                progress: 0,
                done: false,
            },
            Station {
                kind: StationKind::Board,
                cell: (6, 0),
                occupied: cfg.occupied_stations.contains(&StationKind::Board),
                progress: 0,
                done: false,
            },
            Station {
                kind: StationKind::Sink,
                cell: (8, 3),
                occupied: cfg.occupied_stations.contains(&StationKind::Sink),
                progress: 0,
                done: false,
            },
            Station {
                kind: StationKind::Counter,
                cell: (4, 7),
                occupied: cfg.occupied_stations.contains(&StationKind::Counter),
                progress: 0,
                done: false,
            },
        ];
        let beliefs = stations
            .iter()
            .map(|s| {
                if cfg.misbelieved_free.contains(&s.kind) {
                    StationBelief {
                        occupied: false,
                        known: false,
                    }
                } else {
                    StationBelief {
                        occupied: s.occupied,
                        known: true,
                    }
                }
            })
            .collect();
        KitchenState {
            width: cfg.width,
            height: cfg.height,
            human: cfg.start,
            facing: Facing::Up,
            stations,
            beliefs,
        }
    }

    pub fn state(&self) -> &KitchenState {
        &self.state
    }

    pub fn tick(&self) -> u32 {
        self.tick
    }

    /// Mutable scenario hook for scripted tests.
    pub fn state_mut(&mut self) -> &mut KitchenState {
        &mut self.state
    }

    /// Subtasks the human believes workable right now: station believed
    /// free, not done, and (for plating) prerequisites complete.
    fn believed_available(&self) -> Vec<StationKind> {
        self.state
            .stations
            .iter()
            .zip(&self.state.beliefs)
            .filter(|(s, b)| {
                if s.done || b.occupied {
                    return false;
                }
                if s.kind == StationKind::Counter {
                    let cook = self.state.station(StationKind::Grill).done;
                    let chop = self.state.station(StationKind::Board).done;
                    if !(cook && chop) {
                        return false;
                    }
                }
                true
            })
            .map(|(s, _)| s.kind)
            .collect()
    }

    /// Highest-priority believed-available subtask; equal priorities break
    /// uniformly at random.
    pub fn choose_subtask(&self, rng: &mut ChaCha8Rng) -> Option<StationKind> {
        let available = self.believed_available();
        let best = available.iter().map(|k| k.priority()).min()?;
        let tied: Vec<StationKind> = available
            .into_iter()
            .filter(|k| k.priority() == best)
            .collect();
        let pick = if tied.len() == 1 {
            0
        } else {
            rng.random_range(0..tied.len())
        };
        Some(tied[pick])
    }

    /// Greedy step toward a cell: larger axis error first, vertical on ties.
    fn step_toward(&self, target: (i32, i32)) -> KitchenAction {
        let (hx, hy) = self.state.human;
        let (dx, dy) = (target.0 - hx, target.1 - hy);
        if dx == 0 && dy == 0 {
            return KitchenAction::Stay;
        }
        if dy.abs() >= dx.abs() {
            if dy < 0 {
                KitchenAction::Up
            } else {
                KitchenAction::Down
            }
        } else if dx < 0 {
            KitchenAction::Left
        } else {
            KitchenAction::Right
        }
    }

    /// The myopic base decision given a commitment cache owned by the
    /// policy: a subtask is only re-chosen when the committed one stops
    /// looking workable.
    pub fn base_decision(
        &self,
        committed: &mut Option<StationKind>,
        rng: &mut ChaCha8Rng,
    ) -> KitchenAction {
        let available = self.believed_available();
        if let Some(current) = *committed {
            if !available.contains(&current) {
                *committed = None;
            }
        }
        if committed.is_none() {
            *committed = self.choose_subtask(rng);
        }
        let Some(target) = *committed else {
            return KitchenAction::Stay;
        };
        let station = *self.state.station(target);
        let work = self.state.work_cell(&station);
        if self.state.human == work {
            // Walk "into" the station: the move is blocked by the wall but
            // turns the human to face it, which is what working requires.
            self.step_toward(station.cell)
        } else {
            self.step_toward(work)
        }
    }

    fn refresh_visibility(&mut self) {
        let visible = self.state.visible_cells();
        for (i, s) in self.state.stations.iter().enumerate() {
            if visible.contains(&s.cell) {
                self.state.beliefs[i] = StationBelief {
                    occupied: s.occupied,
                    known: true,
                };
            }
        }
    }
}

impl Domain for Kitchen {
    type Action = KitchenAction;

    fn id(&self) -> DomainId {
        DomainId::Cooking
    }

    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xc00c));
        self.state = Self::initial_state(&self.cfg);
        self.tick = 0;
        self.status = EpisodeStatus::Running;
        self.refresh_visibility();
    }

    fn observation(&self) -> Vec<f64> {
        let s = &self.state;
        let mut obs = vec![
            s.human.0 as f64 / (s.width - 1) as f64,
            s.human.1 as f64 / (s.height - 1) as f64,
        ];
        for f in [Facing::Up, Facing::Down, Facing::Left, Facing::Right] {
            obs.push((s.facing == f) as u8 as f64);
        }
        for (st, b) in s.stations.iter().zip(&s.beliefs) {
            obs.push(st.occupied as u8 as f64);
            obs.push(st.done as u8 as f64);
            obs.push(st.progress as f64 / self.cfg.work_required as f64);
            obs.push(b.known as u8 as f64);
        }
        obs
    }

    fn obs_dim(&self) -> usize {
        6 + 4 * self.state.stations.len()
    }

    fn apply(&mut self, action: KitchenAction) -> StepEffect {
        debug_assert_eq!(self.status, EpisodeStatus::Running);
        let dir = match action {
            KitchenAction::Up => Some(Facing::Up),
            KitchenAction::Down => Some(Facing::Down),
            KitchenAction::Left => Some(Facing::Left),
            KitchenAction::Right => Some(Facing::Right),
            KitchenAction::Stay => None,
        };
        if let Some(f) = dir {
            self.state.facing = f;
            let (dx, dy) = f.delta();
            let next = (self.state.human.0 + dx, self.state.human.1 + dy);
            if self.state.in_bounds(next) {
                self.state.human = next;
            }
        }
        self.refresh_visibility();

        let mut items = vec![RewardItem::new(RewardTerm::StepCost, self.cfg.step_cost)];

        // Work on an adjacent, truly free station the human is facing.
        let (fx, fy) = self.state.facing.delta();
        let ahead = (self.state.human.0 + fx, self.state.human.1 + fy);
        let worked = self
            .state
            .stations
            .iter()
            .position(|st| st.cell == ahead && !st.occupied && !st.done);
        if let Some(i) = worked {
            let allowed = match self.state.stations[i].kind {
                StationKind::Counter => {
                    self.state.station(StationKind::Grill).done
                        && self.state.station(StationKind::Board).done
                }
                _ => true,
            };
            if allowed {
                self.state.stations[i].progress += 1;
                if self.state.stations[i].progress >= self.cfg.work_required {
                    self.state.stations[i].done = true;
                    items.push(RewardItem::new(
                        RewardTerm::SubtaskComplete,
                        self.cfg.subtask_reward,
                    ));
                }
            }
        }

        self.tick += 1;
        if self.state.stations.iter().all(|s| s.done) {
            self.status = EpisodeStatus::Success;
        } else if self.tick >= self.cfg.max_ticks {
            self.status = EpisodeStatus::Timeout;
        }
        StepEffect {
            reward_items: items,
            status: self.status,
        }
    }

    fn status(&self) -> EpisodeStatus {
        self.status
    }

    fn topics(&self) -> &TopicTable<KitchenAction> {
        &self.topics
    }

    fn initiation_penalty(&self) -> f64 {
        self.cfg.initiation_penalty
    }

    fn action_name(&self, action: KitchenAction) -> &'static str {
        match action {
            KitchenAction::Up => "up",
            KitchenAction::Down => "down",
            KitchenAction::Left => "left",
            KitchenAction::Right => "right",
            KitchenAction::Stay => "stay",
        }
    }

    fn plot_point(&self) -> (f64, f64) {
        (self.state.human.0 as f64, self.state.human.1 as f64)
    }

    /// A fully delivered utterance that carries context (the disclosure
    /// topic, or any message whose tail extends past the actionable word by
    /// two or more words) reveals every station's true state.
    fn on_utterance_completed(&mut self, topic: TopicId, k: u32, l: u32, _t: WordTick) {
        let discloses =
            self.topics.name(topic) == "disclose_information" || l.saturating_sub(k) >= 2;
        if discloses {
            for (i, s) in self.state.stations.iter().enumerate() {
                self.state.beliefs[i] = StationBelief {
                    occupied: s.occupied,
                    known: true,
                };
            }
        }
    }
}

/// Myopic rule-based cook: always heads for the highest-priority subtask it
/// believes workable, breaking priority ties uniformly at random. The
/// current commitment is policy state, dropped whenever belief changes make
/// the target look unworkable.
#[derive(Debug, Clone, Default)]
pub struct MyopicCook {
    committed: Option<StationKind>,
}

impl BasePolicy<Kitchen> for MyopicCook {
    fn reset(&mut self, _seed: u64) {
        self.committed = None;
    }

    fn act(&mut self, env: &Kitchen, rng: &mut ChaCha8Rng) -> KitchenAction {
        env.base_decision(&mut self.committed, rng)
    }
}
