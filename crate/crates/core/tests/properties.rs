use proptest::prelude::*;

use spider_pcg::domain::{Action, SpiderState, STATE_COUNT};
use spider_pcg::reward::is_success;
use spider_pcg::stats::paired_ttest;
use spider_pcg::subjects::{bfs_distance, VirtualSubject};
use spider_pcg::RewardSpec;

fn state() -> impl Strategy<Value = SpiderState> {
    (0..STATE_COUNT).prop_map(|i| SpiderState::from_index(i).unwrap())
}

fn subject() -> impl Strategy<Value = VirtualSubject> {
    prop::array::uniform6(0.0f64..2.0)
        .prop_filter("needs a positive weight", |w| w.iter().any(|x| *x > 1e-6))
        .prop_map(|w| VirtualSubject::from_weights(0, w).unwrap())
}

proptest! {
    #[test]
    fn reward_is_symmetric_and_bounded(target in 1u8..=9, d in 0.0f64..1.0) {
        let spec = RewardSpec::new(target).unwrap();
        let mu = f64::from(target);
        let d = d * mu.min(10.0 - mu);
        let (lo, hi) = (spec.reward(mu - d).unwrap(), spec.reward(mu + d).unwrap());
        prop_assert!((lo - hi).abs() < 1e-12);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&lo));
    }

    #[test]
    fn apply_then_inverse_returns(s in state(), a in 0usize..12) {
        let action = Action::from_index(a).unwrap();
        match s.apply(action) {
            Ok(next) => {
                prop_assert!(s.admits(action));
                prop_assert_eq!(next.apply(action.inverse()).unwrap(), s);
                prop_assert_eq!(SpiderState::from_index(next.index()).unwrap(), next);
            }
            Err(_) => prop_assert!(!s.admits(action)),
        }
    }

    #[test]
    fn stress_stays_in_range(subj in subject(), s in state()) {
        let x = subj.stress(&s);
        prop_assert!((0.0..=10.0).contains(&x));
        prop_assert!((subj.stress(&SpiderState::MAX) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn success_bands_are_disjoint(x in 0.0f64..=10.0) {
        let hits = (1u8..=9).filter(|t| is_success(x, *t)).count();
        prop_assert!(hits <= 1);
    }

    #[test]
    fn bfs_moves_by_at_most_one(subj in subject(), s in state(), target in 1u8..=9) {
        let here = bfs_distance(&subj, &s, target);
        for n in s.neighbors() {
            let there = bfs_distance(&subj, &n, target);
            prop_assert_eq!(here.is_some(), there.is_some());
            if let (Some(a), Some(b)) = (here, there) {
                prop_assert!(a.abs_diff(b) <= 1);
            }
        }
    }

    #[test]
    fn paired_t_flips_sign_when_swapped(
        pairs in prop::collection::vec((0.0f64..50.0, 0.0f64..50.0), 3..30)
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let (Ok(ab), Ok(ba)) = (paired_ttest(&a, &b), paired_ttest(&b, &a)) {
            prop_assert!((ab.t + ba.t).abs() < 1e-9 * ab.t.abs().max(1.0));
            prop_assert!((ab.p - ba.p).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab.p));
        }
    }
}
