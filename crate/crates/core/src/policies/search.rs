//! Greedy neighbor search and uniform random walk.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::{Fitness, Policy};
use crate::domain::SpiderState;
use crate::seed::StreamRng;
use crate::session::Presenter;

/// The fittest neighbor of `current`, first in canonical action order on
/// ties. Moves even when every neighbor is worse than `current`.
pub fn greedy_step(current: &SpiderState, fitness: &Fitness<'_>) -> SpiderState {
    let mut best: Option<(SpiderState, f64)> = None;
    for n in current.neighbors() {
        let f = fitness.of(&n);
        if best.is_none_or(|(_, bf)| f > bf) {
            best = Some((n, f));
        }
    }
    best.expect("every state has neighbors").0
}

/// Applies a uniformly chosen valid action.
pub fn random_step<R: Rng + ?Sized>(current: &SpiderState, rng: &mut R) -> SpiderState {
    let action = *current
        .valid_actions()
        .choose(rng)
        .expect("every state has a valid action");
    current.step_unchecked(action)
}

pub struct GreedyPolicy {
    current: SpiderState,
}

impl GreedyPolicy {
    pub fn new() -> Self {
        GreedyPolicy { current: SpiderState::MIN }
    }
}

impl Default for GreedyPolicy {
    fn default() -> Self {
        Self::new()
    }
}

impl Policy for GreedyPolicy {
    fn start(&mut self, initial: SpiderState, env: &mut Presenter<'_>, _rng: &mut StreamRng) -> Option<SpiderState> {
        self.current = initial;
        env.present(initial).success.then_some(initial)
    }

    /// Presents neighbors one by one in canonical order, stopping at the
    /// first success; otherwise moves to the fittest neighbor.
    fn step(&mut self, env: &mut Presenter<'_>, _rng: &mut StreamRng) -> Option<SpiderState> {
        for n in self.current.neighbors() {
            if env.present(n).success {
                self.current = n;
                return Some(n);
            }
        }
        self.current = greedy_step(&self.current, env.fitness());
        None
    }

    fn current(&self) -> SpiderState {
        self.current
    }
}

pub struct RandomPolicy {
    current: SpiderState,
}

impl RandomPolicy {
    pub fn new() -> Self {
        RandomPolicy { current: SpiderState::MIN }
    }
}

impl Default for RandomPolicy {
    fn default() -> Self {
        Self::new()
    }
}

impl Policy for RandomPolicy {
    fn start(&mut self, initial: SpiderState, env: &mut Presenter<'_>, _rng: &mut StreamRng) -> Option<SpiderState> {
        self.current = initial;
        env.present(initial).success.then_some(initial)
    }

    fn step(&mut self, env: &mut Presenter<'_>, rng: &mut StreamRng) -> Option<SpiderState> {
        self.current = random_step(&self.current, rng);
        env.present(self.current).success.then_some(self.current)
    }

    fn current(&self) -> SpiderState {
        self.current
    }
}
