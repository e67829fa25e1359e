//! The ordinal spider attribute space and the move structure over it.
//!
//! A spider is six ordinal attributes. Moves change one attribute by one
//! step; moves that would leave an attribute's range are never offered.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::DomainError;

pub const ATTRIBUTE_COUNT: usize = 6;
/// Two directions per attribute.
pub const ACTION_COUNT: usize = 2 * ATTRIBUTE_COUNT;
/// 3 * 3 * 3 * 3 * 2 * 3
pub const STATE_COUNT: usize = 486;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributeSpec {
    pub name: &'static str,
    pub min_value: u8,
    pub max_value: u8,
    /// Mean fear impact of the attribute.
    pub impact_mean: f64,
    /// Spread of the fear impact across spider-fearful individuals.
    pub impact_std: f64,
}

impl AttributeSpec {
    pub const fn levels(&self) -> usize {
        (self.max_value - self.min_value) as usize + 1
    }
}

const ATTRIBUTES: [AttributeSpec; ATTRIBUTE_COUNT] = [
    AttributeSpec { name: "locomotion", min_value: 0, max_value: 2, impact_mean: 0.9, impact_std: 0.15 },
    AttributeSpec { name: "amount_of_movement", min_value: 0, max_value: 2, impact_mean: 0.9, impact_std: 0.15 },
    AttributeSpec { name: "closeness", min_value: 0, max_value: 2, impact_mean: 0.4, impact_std: 0.17 },
    AttributeSpec { name: "largeness", min_value: 0, max_value: 2, impact_mean: 0.7, impact_std: 0.16 },
    AttributeSpec { name: "hairiness", min_value: 0, max_value: 1, impact_mean: 0.6, impact_std: 0.21 },
    AttributeSpec { name: "color", min_value: 0, max_value: 2, impact_mean: 0.5, impact_std: 0.20 },
];

/// The six attributes in canonical order. Every state vector, Q-table row
/// and serialized array uses this order.
pub fn attribute_table() -> &'static [AttributeSpec; ATTRIBUTE_COUNT] {
    &ATTRIBUTES
}

/// Index of an attribute by name, e.g. `"hairiness"`.
pub fn attribute_index(name: &str) -> Option<usize> {
    ATTRIBUTES.iter().position(|a| a.name == name)
}

/// One spider configuration. Always within range: construction validates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[u8; ATTRIBUTE_COUNT]", into = "[u8; ATTRIBUTE_COUNT]")]
pub struct SpiderState([u8; ATTRIBUTE_COUNT]);

impl SpiderState {
    pub const MIN: SpiderState = SpiderState([0, 0, 0, 0, 0, 0]);
    pub const MAX: SpiderState = SpiderState([2, 2, 2, 2, 1, 2]);
    /// Midpoint of every range; binary hairiness takes the lower midpoint.
    pub const AVERAGE: SpiderState = SpiderState([1, 1, 1, 1, 0, 1]);

    pub fn new(values: [u8; ATTRIBUTE_COUNT]) -> Result<Self, DomainError> {
        for (i, (&v, spec)) in values.iter().zip(ATTRIBUTES.iter()).enumerate() {
            if v < spec.min_value || v > spec.max_value {
                return Err(DomainError::AttributeOutOfRange {
                    attribute: spec.name,
                    index: i,
                    value: v,
                    max: spec.max_value,
                });
            }
        }
        Ok(SpiderState(values))
    }

    pub fn values(&self) -> [u8; ATTRIBUTE_COUNT] {
        self.0
    }

    pub fn get(&self, attribute: usize) -> u8 {
        self.0[attribute]
    }

    /// Mixed-radix index in lexicographic order; bijective onto `0..STATE_COUNT`.
    pub fn index(&self) -> usize {
        self.0
            .iter()
            .zip(ATTRIBUTES.iter())
            .fold(0, |acc, (&v, spec)| acc * spec.levels() + (v - spec.min_value) as usize)
    }

    pub fn from_index(mut index: usize) -> Result<Self, DomainError> {
        if index >= STATE_COUNT {
            return Err(DomainError::StateIndexOutOfRange(index));
        }
        let mut values = [0u8; ATTRIBUTE_COUNT];
        for i in (0..ATTRIBUTE_COUNT).rev() {
            let levels = ATTRIBUTES[i].levels();
            values[i] = ATTRIBUTES[i].min_value + (index % levels) as u8;
            index /= levels;
        }
        Ok(SpiderState(values))
    }

    /// Valid moves from this state in canonical order (attribute ascending,
    /// decrement before increment).
    pub fn valid_actions(&self) -> Vec<Action> {
        Action::all().filter(|a| self.admits(*a)).collect()
    }

    pub fn admits(&self, action: Action) -> bool {
        let spec = &ATTRIBUTES[action.attribute];
        let v = self.0[action.attribute];
        match action.direction {
            Direction::Down => v > spec.min_value,
            Direction::Up => v < spec.max_value,
        }
    }

    /// Applies a move. Out-of-range moves are rejected, never clamped.
    pub fn apply(&self, action: Action) -> Result<SpiderState, DomainError> {
        if action.attribute >= ATTRIBUTE_COUNT {
            return Err(DomainError::UnknownAttribute(action.attribute));
        }
        if !self.admits(action) {
            return Err(DomainError::InvalidAction { state: *self, action });
        }
        let mut values = self.0;
        match action.direction {
            Direction::Down => values[action.attribute] -= 1,
            Direction::Up => values[action.attribute] += 1,
        }
        Ok(SpiderState(values))
    }

    pub fn neighbors(&self) -> Vec<SpiderState> {
        self.valid_actions()
            .into_iter()
            .map(|a| self.step_unchecked(a))
            .collect()
    }

    pub(crate) fn step_unchecked(&self, action: Action) -> SpiderState {
        debug_assert!(self.admits(action));
        let mut values = self.0;
        match action.direction {
            Direction::Down => values[action.attribute] -= 1,
            Direction::Up => values[action.attribute] += 1,
        }
        SpiderState(values)
    }

    /// Returns a copy with one attribute overwritten. Used by mutation.
    pub fn with_value(&self, attribute: usize, value: u8) -> Result<SpiderState, DomainError> {
        let mut values = self.0;
        *values
            .get_mut(attribute)
            .ok_or(DomainError::UnknownAttribute(attribute))? = value;
        SpiderState::new(values)
    }
}

impl TryFrom<[u8; ATTRIBUTE_COUNT]> for SpiderState {
    type Error = DomainError;

    fn try_from(values: [u8; ATTRIBUTE_COUNT]) -> Result<Self, Self::Error> {
        SpiderState::new(values)
    }
}

impl From<SpiderState> for [u8; ATTRIBUTE_COUNT] {
    fn from(s: SpiderState) -> Self {
        s.0
    }
}

impl fmt::Display for SpiderState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.0;
        write!(f, "({},{},{},{},{},{})", v[0], v[1], v[2], v[3], v[4], v[5])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Down,
    Up,
}

impl Direction {
    pub fn delta(self) -> i8 {
        match self {
            Direction::Down => -1,
            Direction::Up => 1,
        }
    }
}

/// Increase or decrease one attribute by one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub attribute: usize,
    pub direction: Direction,
}

impl Action {
    pub const fn new(attribute: usize, direction: Direction) -> Self {
        Action { attribute, direction }
    }

    pub fn up(attribute: usize) -> Self {
        Action::new(attribute, Direction::Up)
    }

    pub fn down(attribute: usize) -> Self {
        Action::new(attribute, Direction::Down)
    }

    /// Nominal index in `0..ACTION_COUNT`; matches canonical order.
    pub fn index(&self) -> usize {
        2 * self.attribute
            + match self.direction {
                Direction::Down => 0,
                Direction::Up => 1,
            }
    }

    pub fn from_index(index: usize) -> Option<Action> {
        (index < ACTION_COUNT).then_some(Action {
            attribute: index / 2,
            direction: if index.is_multiple_of(2) { Direction::Down } else { Direction::Up },
        })
    }

    pub fn inverse(&self) -> Action {
        Action {
            attribute: self.attribute,
            direction: match self.direction {
                Direction::Down => Direction::Up,
                Direction::Up => Direction::Down,
            },
        }
    }

    /// All nominal actions in canonical order.
    pub fn all() -> impl Iterator<Item = Action> {
        (0..ACTION_COUNT).filter_map(Action::from_index)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.direction {
            Direction::Down => '-',
            Direction::Up => '+',
        };
        write!(f, "{}{}", ATTRIBUTES[self.attribute].name, sign)
    }
}

pub fn valid_actions(state: &SpiderState) -> Vec<Action> {
    state.valid_actions()
}

pub fn apply_action(state: &SpiderState, action: Action) -> Result<SpiderState, DomainError> {
    state.apply(action)
}

pub fn neighbors(state: &SpiderState) -> Vec<SpiderState> {
    state.neighbors()
}

/// All 486 states in lexicographic order; position equals [`SpiderState::index`].
pub fn enumerate_states() -> Vec<SpiderState> {
    (0..STATE_COUNT)
        .map(|i| SpiderState::from_index(i).expect("index in range"))
        .collect()
}

pub fn state_index(state: &SpiderState) -> usize {
    state.index()
}
