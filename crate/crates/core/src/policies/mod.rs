//! Content-adaptation policies. Every policy drives the same [`Presenter`],
//! which owns presentation counting and success checks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::SpiderState;
use crate::error::SessionError;
use crate::reward::{RewardInput, RewardSpec};
use crate::seed::StreamRng;
use crate::session::Presenter;
use crate::subjects::VirtualSubject;

pub mod genetic;
pub mod qlearning;
pub mod search;

pub use genetic::{ga_generation, ga_initial_population, ga_select, GAConfig, GeneticPolicy};
pub use qlearning::{rl_select_action, rl_update, QInit, QLearningPolicy, QTable, RLConfig};
pub use search::{greedy_step, random_step, GreedyPolicy, RandomPolicy};

/// Adaptation method. Declaration order is the reporting column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Random,
    Greedy,
    Ga,
    RlRandom,
    RlZero,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Random,
        Method::Greedy,
        Method::Ga,
        Method::RlRandom,
        Method::RlZero,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::Greedy => "greedy",
            Method::Ga => "ga",
            Method::RlRandom => "rl_random",
            Method::RlZero => "rl_zero",
        }
    }

    /// Column heading used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Random => "Random",
            Method::Greedy => "Greedy",
            Method::Ga => "GA",
            Method::RlRandom => "RL_Random",
            Method::RlZero => "RL_Zero",
        }
    }

    pub fn is_sequential(self) -> bool {
        self != Method::Ga
    }

    pub fn uses_qtable(self) -> bool {
        matches!(self, Method::RlZero | Method::RlRandom)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = SessionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| SessionError::UnknownMethod(s.to_string()))
    }
}

/// Parses a comma-separated method list such as `rl_zero,ga`.
pub fn parse_methods(list: &str) -> Result<Vec<Method>, SessionError> {
    let mut methods: Vec<Method> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Method::from_str)
        .collect::<Result<_, _>>()?;
    methods.sort();
    methods.dedup();
    if methods.is_empty() {
        return Err(SessionError::UnknownMethod(list.to_string()));
    }
    Ok(methods)
}

/// Fitness of a spider for one subject and target: the reward of its stress.
#[derive(Debug, Clone, Copy)]
pub struct Fitness<'a> {
    pub subject: &'a VirtualSubject,
    pub spec: RewardSpec,
    pub input: RewardInput,
}

impl<'a> Fitness<'a> {
    pub fn new(subject: &'a VirtualSubject, spec: RewardSpec) -> Self {
        Fitness { subject, spec, input: RewardInput::Continuous }
    }

    pub fn with_input(mut self, input: RewardInput) -> Self {
        self.input = input;
        self
    }

    pub fn stress(&self, state: &SpiderState) -> f64 {
        self.subject.stress(state)
    }

    pub fn of(&self, state: &SpiderState) -> f64 {
        self.of_stress(self.stress(state))
    }

    pub fn of_stress(&self, stress: f64) -> f64 {
        // stress() is clamped to the reward's domain, so this cannot fail
        self.spec.reward_unchecked(self.input.apply(stress))
    }

    pub fn is_success(&self, state: &SpiderState) -> bool {
        self.spec.is_success(self.stress(state))
    }
}

/// One adaptation strategy behind the session runner.
///
/// `start` presents the opening content; `step` runs one iteration. Both
/// return the successful state as soon as one is found.
pub trait Policy {
    fn start(&mut self, initial: SpiderState, env: &mut Presenter<'_>, rng: &mut StreamRng) -> Option<SpiderState>;

    fn step(&mut self, env: &mut Presenter<'_>, rng: &mut StreamRng) -> Option<SpiderState>;

    /// Best current content; reported as the final state of failed runs.
    fn current(&self) -> SpiderState;
}
