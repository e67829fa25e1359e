//! One adaptation session: a policy, a subject, a target and a starting
//! spider, run until success or the iteration cap.
//!
//! Spiders Presented counts distinct spiders shown to the subject. Showing a
//! spider again costs nothing, and its stress is simply looked up.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{SpiderState, STATE_COUNT};
use crate::error::SessionError;
use crate::policies::{
    Fitness, GAConfig, GeneticPolicy, GreedyPolicy, Method, Policy, QLearningPolicy, QTable, RLConfig, RandomPolicy,
};
use crate::reward::{RewardInput, RewardSpec};
use crate::seed::{stream, StreamRng, RUN_DOMAIN};
use crate::subjects::VirtualSubject;

pub const DEFAULT_ITERATION_CAP: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Min,
    Avg,
    Max,
}

impl InitialKind {
    pub const ALL: [InitialKind; 3] = [InitialKind::Min, InitialKind::Avg, InitialKind::Max];

    pub fn state(self) -> SpiderState {
        match self {
            InitialKind::Min => SpiderState::MIN,
            InitialKind::Avg => SpiderState::AVERAGE,
            InitialKind::Max => SpiderState::MAX,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InitialKind::Min => "min",
            InitialKind::Avg => "avg",
            InitialKind::Max => "max",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            InitialKind::Min => "Min",
            InitialKind::Avg => "Avg",
            InitialKind::Max => "Max",
        }
    }
}

impl fmt::Display for InitialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InitialKind {
    type Err = SessionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InitialKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SessionError::UnknownInitialKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub subject_id: u32,
    pub target: u8,
    pub initial_kind: InitialKind,
    pub repeat_index: u32,
    pub iteration_cap: usize,
    pub master_seed: u64,
    pub rl: RLConfig,
    pub ga: GAConfig,
    pub reward_input: RewardInput,
}

impl RunConfig {
    pub fn new(method: Method, subject_id: u32, target: u8, initial_kind: InitialKind, repeat_index: u32, master_seed: u64) -> Self {
        RunConfig {
            method,
            subject_id,
            target,
            initial_kind,
            repeat_index,
            iteration_cap: DEFAULT_ITERATION_CAP,
            master_seed,
            rl: RLConfig::default(),
            ga: GAConfig::default(),
            reward_input: RewardInput::Continuous,
        }
    }

    /// The run's private random stream, keyed by its full coordinate tuple.
    pub fn rng(&self) -> StreamRng {
        stream(
            RUN_DOMAIN,
            &[
                self.master_seed,
                self.method as u64,
                u64::from(self.subject_id),
                u64::from(self.target),
                self.initial_kind as u64,
                u64::from(self.repeat_index),
            ],
        )
    }

    fn rl_config(&self) -> RLConfig {
        let mut rl = self.rl;
        rl.init_mode = match self.method {
            Method::RlRandom => crate::policies::QInit::Random,
            _ => crate::policies::QInit::Zero,
        };
        rl
    }
}

/// One spider shown to the subject.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Presentation {
    pub state: SpiderState,
    pub stress: f64,
    pub reward: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub success: bool,
    pub spiders_presented: usize,
    pub iterations_used: usize,
    /// The successful spider, or the policy's current spider on failure.
    pub final_state: SpiderState,
    pub presented_sequence: Vec<Presentation>,
}

/// What the subject's response to a spider tells the policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Response {
    pub stress: f64,
    pub reward: f64,
    pub success: bool,
    /// False when the spider had already been shown in this session.
    pub new: bool,
}

/// Shows spiders to the subject and keeps the presentation record.
pub struct Presenter<'a> {
    fitness: Fitness<'a>,
    seen: Vec<bool>,
    sequence: Vec<Presentation>,
    iteration: usize,
}

impl<'a> Presenter<'a> {
    pub fn new(fitness: Fitness<'a>) -> Self {
        Presenter {
            fitness,
            seen: vec![false; STATE_COUNT],
            sequence: Vec::new(),
            iteration: 0,
        }
    }

    pub fn fitness(&self) -> &Fitness<'a> {
        &self.fitness
    }

    pub fn set_iteration(&mut self, iteration: usize) {
        self.iteration = iteration;
    }

    pub fn present(&mut self, state: SpiderState) -> Response {
        let stress = self.fitness.stress(&state);
        let reward = self.fitness.of_stress(stress);
        let new = !std::mem::replace(&mut self.seen[state.index()], true);
        if new {
            self.sequence.push(Presentation { state, stress, reward, iteration: self.iteration });
        }
        Response {
            stress,
            reward,
            success: self.fitness.spec.is_success(stress),
            new,
        }
    }

    pub fn presented(&self) -> usize {
        self.sequence.len()
    }

    pub fn into_sequence(self) -> Vec<Presentation> {
        self.sequence
    }
}

fn build_policy(cfg: &RunConfig) -> Box<dyn Policy> {
    match cfg.method {
        Method::RlZero | Method::RlRandom => Box::new(QLearningPolicy::new(cfg.rl_config(), None)),
        Method::Ga => Box::new(GeneticPolicy::new(cfg.ga)),
        Method::Greedy => Box::new(GreedyPolicy::new()),
        Method::Random => Box::new(RandomPolicy::new()),
    }
}

/// Runs one session with a fresh policy.
pub fn run_session(cfg: &RunConfig, subject: &VirtualSubject) -> Result<RunResult, SessionError> {
    let mut none = None;
    run_session_carrying(cfg, subject, &mut none)
}

/// Runs one session. For Q-learning methods, `carried` supplies the starting
/// table (a fresh one when `None`) and receives the table afterwards.
pub fn run_session_carrying(
    cfg: &RunConfig,
    subject: &VirtualSubject,
    carried: &mut Option<QTable>,
) -> Result<RunResult, SessionError> {
    if cfg.subject_id != subject.id {
        return Err(SessionError::SubjectMismatch { expected: cfg.subject_id, actual: subject.id });
    }
    cfg.rl.validate()?;
    cfg.ga.validate()?;
    let spec = RewardSpec::new(cfg.target)?;
    let fitness = Fitness::new(subject, spec).with_input(cfg.reward_input);
    let mut rng = cfg.rng();
    let mut env = Presenter::new(fitness);

    if cfg.method.uses_qtable() {
        let mut policy = QLearningPolicy::new(cfg.rl_config(), carried.take());
        let result = drive(&mut policy, cfg, &mut env, &mut rng);
        *carried = policy.into_table();
        return Ok(finish(result, env));
    }
    let mut policy = build_policy(cfg);
    let result = drive(policy.as_mut(), cfg, &mut env, &mut rng);
    Ok(finish(result, env))
}

struct Outcome {
    success: bool,
    iterations_used: usize,
    final_state: SpiderState,
}

fn drive<P: Policy + ?Sized>(policy: &mut P, cfg: &RunConfig, env: &mut Presenter<'_>, rng: &mut StreamRng) -> Outcome {
    let initial = cfg.initial_kind.state();
    env.set_iteration(0);
    if let Some(found) = policy.start(initial, env, rng) {
        return Outcome { success: true, iterations_used: 0, final_state: found };
    }
    for iteration in 1..=cfg.iteration_cap {
        env.set_iteration(iteration);
        if let Some(found) = policy.step(env, rng) {
            return Outcome { success: true, iterations_used: iteration, final_state: found };
        }
    }
    Outcome {
        success: false,
        iterations_used: cfg.iteration_cap,
        final_state: policy.current(),
    }
}

fn finish(outcome: Outcome, env: Presenter<'_>) -> RunResult {
    let sequence = env.into_sequence();
    RunResult {
        success: outcome.success,
        spiders_presented: sequence.len(),
        iterations_used: outcome.iterations_used,
        final_state: outcome.final_state,
        presented_sequence: sequence,
    }
}

/// Writes one JSON object per presented spider.
pub fn write_trace<W: Write>(result: &RunResult, mut out: W) -> io::Result<()> {
    for p in &result.presented_sequence {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
