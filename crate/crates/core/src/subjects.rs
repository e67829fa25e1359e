//! Virtual subjects: deterministic linear stress functions over spider
//! states, with weights drawn from the per-attribute impact distributions.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{attribute_table, enumerate_states, SpiderState, ATTRIBUTE_COUNT, STATE_COUNT};
use crate::error::SubjectError;
use crate::reward::{is_success, MAX_STRESS, MIN_STRESS};
use crate::seed::{stream, SUBJECT_DOMAIN};

pub const DEFAULT_POPULATION: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualSubject {
    pub id: u32,
    pub weights: [f64; ATTRIBUTE_COUNT],
    /// Scale that maps the all-maximum spider to stress 10.
    pub coefficient: f64,
}

impl VirtualSubject {
    /// Builds a subject and derives its scale coefficient from the weights.
    pub fn from_weights(id: u32, weights: [f64; ATTRIBUTE_COUNT]) -> Result<Self, SubjectError> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(SubjectError::InvalidSubject {
                id,
                reason: format!("weight {w} is negative or not finite"),
            });
        }
        let peak = weighted_sum(&weights, &SpiderState::MAX);
        if peak <= 0.0 {
            return Err(SubjectError::InvalidSubject {
                id,
                reason: "all weights are zero".into(),
            });
        }
        Ok(VirtualSubject {
            id,
            weights,
            coefficient: MAX_STRESS / peak,
        })
    }

    /// Stress in [0, 10] for the given spider.
    pub fn stress(&self, state: &SpiderState) -> f64 {
        (self.coefficient * weighted_sum(&self.weights, state)).clamp(MIN_STRESS, MAX_STRESS)
    }

    fn validate(&self) -> Result<(), SubjectError> {
        let bad = |reason: String| SubjectError::InvalidSubject { id: self.id, reason };
        if let Some(w) = self.weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(bad(format!("weight {w} is negative or not finite")));
        }
        if !(self.coefficient.is_finite() && self.coefficient > 0.0) {
            return Err(bad(format!("coefficient {} must be positive", self.coefficient)));
        }
        Ok(())
    }
}

fn weighted_sum(weights: &[f64; ATTRIBUTE_COUNT], state: &SpiderState) -> f64 {
    weights
        .iter()
        .zip(state.values())
        .map(|(w, a)| w * f64::from(a))
        .sum()
}

pub fn stress(subject: &VirtualSubject, state: &SpiderState) -> f64 {
    subject.stress(state)
}

/// Draws one subject. Each weight comes from its attribute's impact normal,
/// redrawn until non-negative.
pub fn sample_subject<R: Rng + ?Sized>(id: u32, rng: &mut R) -> VirtualSubject {
    let mut weights = [0.0; ATTRIBUTE_COUNT];
    for (w, spec) in weights.iter_mut().zip(attribute_table()) {
        let normal = Normal::new(spec.impact_mean, spec.impact_std).expect("finite positive std");
        *w = loop {
            let draw = normal.sample(rng);
            if draw >= 0.0 {
                break draw;
            }
        };
    }
    VirtualSubject::from_weights(id, weights).expect("sampled weights are non-negative")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectPopulation {
    pub seed: u64,
    pub subjects: Vec<VirtualSubject>,
}

impl SubjectPopulation {
    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&VirtualSubject> {
        self.subjects.get(id as usize).filter(|s| s.id == id)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("population serializes");
        out.push('\n');
        out
    }

    /// Parses and validates a subjects file.
    pub fn from_json(text: &str) -> Result<Self, SubjectError> {
        let population: SubjectPopulation = serde_json::from_str(text)?;
        if population.subjects.is_empty() {
            return Err(SubjectError::EmptyPopulation);
        }
        for (position, subject) in population.subjects.iter().enumerate() {
            if subject.id as usize != position {
                return Err(SubjectError::NonSequentialIds { position, found: subject.id });
            }
            subject.validate()?;
        }
        Ok(population)
    }
}

/// Generates `n` subjects. Subject `i` draws from its own stream keyed by
/// `(seed, i)`, so any prefix of a larger population is identical.
pub fn generate_population(n: usize, seed: u64) -> Result<SubjectPopulation, SubjectError> {
    if n == 0 {
        return Err(SubjectError::EmptyPopulation);
    }
    let subjects = (0..n as u32)
        .map(|id| {
            let mut rng = stream(SUBJECT_DOMAIN, &[seed, u64::from(id)]);
            sample_subject(id, &mut rng)
        })
        .collect();
    Ok(SubjectPopulation { seed, subjects })
}

/// Every state whose stress falls in the target's success band, in
/// enumeration order.
pub fn success_states(subject: &VirtualSubject, target: u8) -> Vec<SpiderState> {
    enumerate_states()
        .into_iter()
        .filter(|s| is_success(subject.stress(s), target))
        .collect()
}

/// Fewest single-attribute moves from `initial` to any success state.
pub fn bfs_distance(subject: &VirtualSubject, initial: &SpiderState, target: u8) -> Option<usize> {
    let mut goal = [false; STATE_COUNT];
    let mut any = false;
    for s in success_states(subject, target) {
        goal[s.index()] = true;
        any = true;
    }
    if !any {
        return None;
    }
    let mut dist = [usize::MAX; STATE_COUNT];
    let mut queue = VecDeque::new();
    dist[initial.index()] = 0;
    queue.push_back(*initial);
    while let Some(s) = queue.pop_front() {
        let d = dist[s.index()];
        if goal[s.index()] {
            return Some(d);
        }
        for n in s.neighbors() {
            if dist[n.index()] == usize::MAX {
                dist[n.index()] = d + 1;
                queue.push_back(n);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    const EXAMPLE_WEIGHTS: [f64; 6] = [0.97, 0.87, 0.07, 0.63, 0.67, 0.77];

    fn example_subject_rounded() -> VirtualSubject {
        VirtualSubject { id: 0, weights: EXAMPLE_WEIGHTS, coefficient: 1.37 }
    }

    #[test]
    fn example_coefficient() {
        let s = VirtualSubject::from_weights(0, EXAMPLE_WEIGHTS).unwrap();
        assert_abs_diff_eq!(s.coefficient, 10.0 / 7.29, epsilon = 1e-12);
        assert_abs_diff_eq!(s.coefficient, 1.3717, epsilon = 1e-4);
        // mean weights: 2*(0.9 + 0.9 + 0.4 + 0.7 + 0.5) + 0.6 = 7.4
        let mean = VirtualSubject::from_weights(1, [0.9, 0.9, 0.4, 0.7, 0.6, 0.5]).unwrap();
        assert_abs_diff_eq!(mean.coefficient, 10.0 / 7.4, epsilon = 1e-12);
    }

    #[test]
    fn example_stress_values() {
        let s = example_subject_rounded();
        assert_abs_diff_eq!(s.stress(&SpiderState::MAX), 9.9873, epsilon = 1e-9);
        assert_abs_diff_eq!(s.stress(&SpiderState::new([1, 0, 0, 0, 0, 0]).unwrap()), 1.3289, epsilon = 1e-9);
        assert_eq!(s.stress(&SpiderState::MIN), 0.0);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(VirtualSubject::from_weights(0, [0.0; 6]).is_err());
        assert!(VirtualSubject::from_weights(0, [0.5, -0.1, 0.5, 0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn sampling_is_truncated() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let closeness_min = (0..5000)
            .map(|i| sample_subject(i, &mut rng).weights[2])
            .fold(f64::INFINITY, f64::min);
        assert!(closeness_min >= 0.0);
        assert!(closeness_min < 0.1);
    }

    #[test]
    fn population_determinism() {
        let a = generate_population(100, 42).unwrap();
        let b = generate_population(100, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_population(100, 43).unwrap();
        assert_ne!(a.subjects[0].weights, c.subjects[0].weights);
        let one = generate_population(1, 42).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.subjects[0], a.subjects[0]);
        assert!(generate_population(0, 42).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let pop = generate_population(20, 9).unwrap();
        let back = SubjectPopulation::from_json(&pop.to_json()).unwrap();
        assert_eq!(pop, back);
        for (a, b) in pop.subjects.iter().zip(&back.subjects) {
            assert_eq!(a.coefficient.to_bits(), b.coefficient.to_bits());
        }
    }

    #[test]
    fn malformed_files() {
        assert!(SubjectPopulation::from_json("{}").is_err());
        assert!(SubjectPopulation::from_json(r#"{"seed":1,"subjects":[]}"#).is_err());
        let wrong_id = r#"{"seed":1,"subjects":[{"id":3,"weights":[1,1,1,1,1,1],"coefficient":1.0}]}"#;
        assert!(matches!(
            SubjectPopulation::from_json(wrong_id),
            Err(SubjectError::NonSequentialIds { .. })
        ));
        let negative = r#"{"seed":1,"subjects":[{"id":0,"weights":[1,-1,1,1,1,1],"coefficient":1.0}]}"#;
        assert!(SubjectPopulation::from_json(negative).is_err());
    }

    #[test]
    fn success_set_examples() {
        let s = example_subject_rounded();
        let ones = success_states(&s, 1);
        assert!(ones.contains(&SpiderState::new([1, 0, 0, 0, 0, 0]).unwrap()));
        for t in 1..=9 {
            assert!(!success_states(&s, t).contains(&SpiderState::MIN));
        }
    }

    #[test]
    fn bfs_examples() {
        let s = example_subject_rounded();
        assert_eq!(bfs_distance(&s, &SpiderState::MIN, 1), Some(1));
        let one = SpiderState::new([1, 0, 0, 0, 0, 0]).unwrap();
        assert_eq!(bfs_distance(&s, &one, 1), Some(0));
        // A subject whose stress jumps straight from 0 to 10 has no state near 5.
        let spike = VirtualSubject::from_weights(0, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(success_states(&spike, 3).is_empty());
        assert_eq!(bfs_distance(&spike, &SpiderState::MIN, 3), None);
        assert_eq!(bfs_distance(&spike, &SpiderState::MIN, 5), Some(1));
    }
}
