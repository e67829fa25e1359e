//! Tabular one-step Q-learning with epsilon-greedy action selection.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Policy;
use crate::domain::{Action, SpiderState, ACTION_COUNT, STATE_COUNT};
use crate::error::SessionError;
use crate::seed::StreamRng;
use crate::session::Presenter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QInit {
    #[default]
    Zero,
    /// Independent uniform draws on [0, 1).
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RLConfig {
    pub epsilon: f64,
    pub learning_rate: f64,
    pub discount: f64,
    pub init_mode: QInit,
    /// Carry the table from one subject to the next within a run chain
    /// instead of starting every run fresh.
    pub persist_across_subjects: bool,
}

impl Default for RLConfig {
    fn default() -> Self {
        RLConfig {
            epsilon: 0.05,
            learning_rate: 0.1,
            discount: 0.9,
            init_mode: QInit::Zero,
            persist_across_subjects: false,
        }
    }
}

impl RLConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |what: &str| Err(SessionError::InvalidConfig(what.to_string()));
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return bad("discount must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Dense state-action value table. Entries for moves that leave the
/// attribute range are never read or written.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros() -> Self {
        QTable { values: vec![0.0; STATE_COUNT * ACTION_COUNT] }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut table = QTable::zeros();
        for s in 0..STATE_COUNT {
            let state = SpiderState::from_index(s).expect("index in range");
            for action in Action::all().filter(|a| state.admits(*a)) {
                table.values[s * ACTION_COUNT + action.index()] = rng.random::<f64>();
            }
        }
        table
    }

    pub fn new<R: Rng + ?Sized>(mode: QInit, rng: &mut R) -> Self {
        match mode {
            QInit::Zero => QTable::zeros(),
            QInit::Random => QTable::random(rng),
        }
    }

    pub fn get(&self, state: &SpiderState, action: Action) -> f64 {
        debug_assert!(state.admits(action));
        self.values[state.index() * ACTION_COUNT + action.index()]
    }

    pub fn set(&mut self, state: &SpiderState, action: Action, value: f64) {
        debug_assert!(state.admits(action));
        self.values[state.index() * ACTION_COUNT + action.index()] = value;
    }

    /// Largest value over the valid actions of `state`.
    pub fn max_value(&self, state: &SpiderState) -> f64 {
        Action::all()
            .filter(|a| state.admits(*a))
            .map(|a| self.get(state, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn raw(&self) -> &[f64] {
        &self.values
    }
}

/// Epsilon-greedy choice among the valid actions of `state`; greedy ties
/// are broken uniformly at random.
pub fn rl_select_action<R: Rng + ?Sized>(qtable: &QTable, state: &SpiderState, epsilon: f64, rng: &mut R) -> Action {
    let actions = state.valid_actions();
    let explore = rng.random::<f64>() < epsilon;
    if explore {
        return *actions.choose(rng).expect("every state has a valid action");
    }
    let best = qtable.max_value(state);
    let ties: Vec<Action> = actions
        .into_iter()
        .filter(|a| qtable.get(state, *a) == best)
        .collect();
    *ties.choose(rng).expect("argmax set is nonempty")
}

/// One-step Q-learning backup of `Q(s, a)`.
pub fn rl_update(
    qtable: &mut QTable,
    state: &SpiderState,
    action: Action,
    reward: f64,
    next: &SpiderState,
    cfg: &RLConfig,
) {
    let old = qtable.get(state, action);
    let target = reward + cfg.discount * qtable.max_value(next);
    qtable.set(state, action, old + cfg.learning_rate * (target - old));
}

pub struct QLearningPolicy {
    cfg: RLConfig,
    table: Option<QTable>,
    current: SpiderState,
}

impl QLearningPolicy {
    /// `table` carries values over from an earlier run; `None` initializes
    /// a fresh table on `start` using `cfg.init_mode`.
    pub fn new(cfg: RLConfig, table: Option<QTable>) -> Self {
        QLearningPolicy { cfg, table, current: SpiderState::MIN }
    }

    pub fn into_table(self) -> Option<QTable> {
        self.table
    }
}

impl Policy for QLearningPolicy {
    fn start(&mut self, initial: SpiderState, env: &mut Presenter<'_>, rng: &mut StreamRng) -> Option<SpiderState> {
        if self.table.is_none() {
            self.table = Some(QTable::new(self.cfg.init_mode, rng));
        }
        self.current = initial;
        env.present(initial).success.then_some(initial)
    }

    fn step(&mut self, env: &mut Presenter<'_>, rng: &mut StreamRng) -> Option<SpiderState> {
        let table = self.table.as_mut().expect("start() initializes the table");
        let state = self.current;
        let action = rl_select_action(table, &state, self.cfg.epsilon, rng);
        let next = state.step_unchecked(action);
        let seen = env.present(next);
        rl_update(table, &state, action, seen.reward, &next, &self.cfg);
        self.current = next;
        seen.success.then_some(next)
    }

    fn current(&self) -> SpiderState {
        self.current
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use std::collections::HashMap;

    fn rng(seed: u64) -> StreamRng {
        StreamRng::seed_from_u64(seed)
    }

    #[test]
    fn config_validation() {
        assert!(RLConfig::default().validate().is_ok());
        assert!(RLConfig { epsilon: 1.5, ..Default::default() }.validate().is_err());
        assert!(RLConfig { learning_rate: 0.0, ..Default::default() }.validate().is_err());
        assert!(RLConfig { discount: -0.1, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn random_init_touches_only_valid_entries() {
        let t = QTable::random(&mut rng(1));
        let corner = SpiderState::MIN;
        let base = corner.index() * ACTION_COUNT;
        for a in Action::all() {
            let v = t.raw()[base + a.index()];
            if corner.admits(a) {
                assert!((0.0..1.0).contains(&v));
            } else {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn full_exploration_is_uniform() {
        let t = QTable::zeros();
        let mut r = rng(2);
        let mut counts: HashMap<Action, usize> = HashMap::new();
        let n = 60_000;
        for _ in 0..n {
            *counts.entry(rl_select_action(&t, &SpiderState::AVERAGE, 1.0, &mut r)).or_default() += 1;
        }
        assert_eq!(counts.len(), 11);
        for c in counts.values() {
            let p = *c as f64 / n as f64;
            assert!((p - 1.0 / 11.0).abs() < 0.01, "{p}");
        }
    }

    #[test]
    fn zero_table_ties_are_uniform() {
        let t = QTable::zeros();
        let mut r = rng(3);
        let mut counts: HashMap<Action, usize> = HashMap::new();
        for _ in 0..30_000 {
            *counts.entry(rl_select_action(&t, &SpiderState::MIN, 0.0, &mut r)).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        assert!(counts.values().all(|&c| (4_500..5_500).contains(&c)));
    }

    #[test]
    fn greedy_picks_unique_max() {
        let mut t = QTable::zeros();
        let best = Action::up(3);
        t.set(&SpiderState::MIN, best, 0.5);
        let mut r = rng(4);
        for _ in 0..200 {
            assert_eq!(rl_select_action(&t, &SpiderState::MIN, 0.0, &mut r), best);
        }
    }

    #[test]
    fn update_examples() {
        let s = SpiderState::MIN;
        let a = Action::up(0);
        let next = s.apply(a).unwrap();

        let mut t = QTable::random(&mut rng(5));
        let before = t.clone();
        // learning_rate 0 is rejected by validation but the backup is still the identity
        let frozen = RLConfig { learning_rate: 0.0, ..Default::default() };
        rl_update(&mut t, &s, a, 0.7, &next, &frozen);
        assert_eq!(t, before);

        let mut t = QTable::zeros();
        let cfg = RLConfig { learning_rate: 1.0, discount: 0.0, ..Default::default() };
        rl_update(&mut t, &s, a, 0.5, &next, &cfg);
        assert_eq!(t.get(&s, a), 0.5);

        let mut t = QTable::zeros();
        rl_update(&mut t, &s, a, 1.0, &next, &RLConfig::default());
        assert!((t.get(&s, a) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn update_changes_one_entry() {
        let mut t = QTable::random(&mut rng(6));
        let before = t.clone();
        let s = SpiderState::AVERAGE;
        let a = Action::down(2);
        rl_update(&mut t, &s, a, -0.3, &s.apply(a).unwrap(), &RLConfig::default());
        let changed: Vec<usize> = (0..before.raw().len())
            .filter(|&i| before.raw()[i].to_bits() != t.raw()[i].to_bits())
            .collect();
        assert_eq!(changed, vec![s.index() * ACTION_COUNT + a.index()]);
    }
}
