//! Two-action Krinsky automaton. States `1..=N` choose action 1 (state 1
//! deepest), `N+1..=2N` choose action 2 (state 2N deepest). State `s` is
//! stored as device level `level_map[s - 1]`; by default action 1 sits at
//! the low-resistance end.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::MvlError;
use crate::device::{DeviceParams, LevelConfig, VariationSpec};
use crate::seed;
use crate::xbar::Crossbar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feedback {
    Reward,
    Penalty,
}

impl Feedback {
    pub fn as_str(self) -> &'static str {
        match self {
            Feedback::Reward => "reward",
            Feedback::Penalty => "penalty",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutomatonConfig {
    /// States per action.
    pub depth: usize,
    /// Penalty probability of action 1.
    pub c1: f64,
    /// Penalty probability of action 2.
    pub c2: f64,
    /// Device level of state `s` at index `s - 1`.
    pub level_map: Vec<usize>,
}

impl AutomatonConfig {
    /// Consecutive levels `0..2N`, action 1 at the low-resistance end.
    pub fn new(depth: usize, c1: f64, c2: f64) -> Self {
        Self {
            depth,
            c1,
            c2,
            level_map: (0..2 * depth).collect(),
        }
    }

    pub fn validate(&self, levels: &LevelConfig) -> Result<(), MvlError> {
        let bad = |field, reason: String| Err(MvlError::Config { field, reason });
        if self.depth == 0 {
            return bad("depth", "must be >= 1".into());
        }
        for (field, c) in [("c1", self.c1), ("c2", self.c2)] {
            if !(0.0..=1.0).contains(&c) {
                return bad(field, format!("penalty probability {c} outside [0, 1]"));
            }
        }
        if self.level_map.len() != 2 * self.depth {
            return bad("level_map", format!("needs {} entries", 2 * self.depth));
        }
        if let Some(l) = self.level_map.iter().find(|l| **l >= levels.n_levels) {
            return bad(
                "level_map",
                format!("level {l} exceeds a {}-level ladder", levels.n_levels),
            );
        }
        let mut seen = self.level_map.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return bad("level_map", "must be injective".into());
        }
        Ok(())
    }

    fn state_of_level(&self, level: usize) -> Option<usize> {
        self.level_map.iter().position(|l| *l == level).map(|i| i + 1)
    }

    /// Valid state whose level is nearest `level`; ties go to the lower state.
    fn nearest_state(&self, level: usize) -> usize {
        (1..=2 * self.depth)
            .min_by_key(|&s| self.level_map[s - 1].abs_diff(level))
            .expect("depth >= 1")
    }

    fn penalty_prob(&self, state: usize) -> f64 {
        if action_of(state, self.depth) == 1 {
            self.c1
        } else {
            self.c2
        }
    }
}

/// Action (1 or 2) chosen in `state`.
pub fn action_of(state: usize, depth: usize) -> u8 {
    if state <= depth {
        1
    } else {
        2
    }
}

/// The Krinsky transition rule.
pub fn krinsky_next(state: usize, depth: usize, fb: Feedback) -> usize {
    match (action_of(state, depth), fb) {
        (1, Feedback::Reward) => 1,
        (_, Feedback::Reward) => 2 * depth,
        (1, Feedback::Penalty) => state + 1,
        (_, Feedback::Penalty) => state - 1,
    }
}

/// Read the automaton held in `cell`, apply `fb` and store the new state.
/// An off-map level is a state-corruption error.
pub fn krinsky_step(
    xbar: &mut Crossbar,
    cell: (usize, usize),
    cfg: &AutomatonConfig,
    levels: &LevelConfig,
    fb: Feedback,
) -> Result<usize, MvlError> {
    let level = xbar.read_level(cell.0, cell.1, levels)?;
    let state = cfg.state_of_level(level).ok_or(MvlError::StateCorruption { level })?;
    let next = krinsky_next(state, cfg.depth, fb);
    xbar.program_level(cell.0, cell.1, levels, cfg.level_map[next - 1])?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    /// State acted on in this step (as detected).
    pub state: usize,
    pub action: u8,
    pub feedback: Feedback,
    /// The detected state differed from the one last written.
    pub misread: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutomatonRun {
    pub trajectory: Vec<StepRecord>,
    pub misdetections: usize,
}

impl AutomatonRun {
    /// Fraction of action-1 choices over the last `window` steps.
    pub fn action1_frequency(&self, window: usize) -> f64 {
        let tail = &self.trajectory[self.trajectory.len().saturating_sub(window)..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().filter(|r| r.action == 1).count() as f64 / tail.len() as f64
    }

    pub fn action_counts(&self) -> [usize; 2] {
        let a1 = self.trajectory.iter().filter(|r| r.action == 1).count();
        [a1, self.trajectory.len() - a1]
    }

    pub fn states(&self) -> Vec<usize> {
        self.trajectory.iter().map(|r| r.state).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,state,action,feedback,misread\n");
        for r in &self.trajectory {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.step,
                r.state,
                r.action,
                r.feedback.as_str(),
                r.misread as u8
            );
        }
        out
    }
}

/// Environment: start state coin flip, then one penalty draw per step.
struct Environment {
    rng: seed::Stream,
}

impl Environment {
    fn new(seed_value: u64) -> Self {
        Self {
            rng: seed::stream(seed_value, "environment", 0),
        }
    }

    fn start(&mut self, depth: usize) -> usize {
        if self.rng.random::<bool>() {
            depth
        } else {
            depth + 1
        }
    }

    fn respond(&mut self, penalty_prob: f64) -> Feedback {
        if self.rng.random::<f64>() < penalty_prob {
            Feedback::Penalty
        } else {
            Feedback::Reward
        }
    }
}

/// Pure software automaton under the same environment stream as
/// [`run_automaton`].
pub fn run_software(cfg: &AutomatonConfig, steps: usize, seed_value: u64) -> AutomatonRun {
    let mut env = Environment::new(seed_value);
    let mut state = env.start(cfg.depth);
    let mut trajectory = Vec::with_capacity(steps);
    for step in 0..steps {
        let fb = env.respond(cfg.penalty_prob(state));
        trajectory.push(StepRecord {
            step,
            state,
            action: action_of(state, cfg.depth),
            feedback: fb,
            misread: false,
        });
        state = krinsky_next(state, cfg.depth, fb);
    }
    AutomatonRun {
        trajectory,
        misdetections: 0,
    }
}

/// Device-backed automaton on one cell. Each step reads the level, decodes
/// it to the nearest valid state, draws feedback for that state's action,
/// and programs the next state. `variation.c2c` switches read/write jitter.
pub fn run_automaton(
    cfg: &AutomatonConfig,
    levels: &LevelConfig,
    params: &DeviceParams,
    variation: &VariationSpec,
    steps: usize,
    seed_value: u64,
) -> Result<AutomatonRun, MvlError> {
    cfg.validate(levels)?;
    if steps == 0 {
        return Err(MvlError::Config {
            field: "steps",
            reason: "must be >= 1".into(),
        });
    }
    let mut xb = Crossbar::new(1, 1, *params, *variation, seed_value)?;
    xb.set_recording(false);
    let mut env = Environment::new(seed_value);
    let mut written = env.start(cfg.depth);
    xb.program_level(0, 0, levels, cfg.level_map[written - 1])?;
    let mut trajectory = Vec::with_capacity(steps);
    let mut misdetections = 0;
    for step in 0..steps {
        let level = xb.read_level(0, 0, levels)?;
        let state = cfg.state_of_level(level).unwrap_or_else(|| cfg.nearest_state(level));
        let misread = state != written;
        misdetections += misread as usize;
        let fb = env.respond(cfg.penalty_prob(state));
        trajectory.push(StepRecord {
            step,
            state,
            action: action_of(state, cfg.depth),
            feedback: fb,
            misread,
        });
        written = krinsky_next(state, cfg.depth, fb);
        xb.program_level(0, 0, levels, cfg.level_map[written - 1])?;
    }
    Ok(AutomatonRun {
        trajectory,
        misdetections,
    })
}
