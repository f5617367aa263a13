use fairrank_core::metrics::{infeasibility, infeasible_index};
use fairrank_core::model::ceil_quota;
use fairrank_core::rerank::{rank, Algorithm};
use fairrank_core::{AttrId, RankedList, RankingTask, TaskInput};
use proptest::prelude::*;

const GREEDY_FAMILY: [Algorithm; 3] = [
    Algorithm::DetGreedy,
    Algorithm::DetCons,
    Algorithm::DetRelaxed,
];

/// Random task with `n` attributes, each pool large enough for any quota.
fn task(n: std::ops::Range<usize>) -> impl Strategy<Value = RankingTask> {
    n.prop_flat_map(|n| {
        (
            proptest::collection::vec(0.001f64..1.0, n),
            proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 60), n),
            1usize..60,
        )
    })
    .prop_map(|(weights, pools, k)| {
        let sum: f64 = weights.iter().sum();
        let mut input = TaskInput::new(k).allow_resort(true);
        for (i, (w, scores)) in weights.into_iter().zip(pools).enumerate() {
            input = input.attribute(format!("a{i}"), w / sum, scores);
        }
        input.validate().unwrap()
    })
}

fn per_attribute_non_increasing(list: &RankedList, n: usize) -> bool {
    (0..n).all(|a| {
        let s: Vec<f64> = list
            .items()
            .iter()
            .filter(|it| it.attr == AttrId(a))
            .map(|it| it.score)
            .collect();
        s.windows(2).all(|w| w[0] >= w[1])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn greedy_family_feasible_below_four_attributes(task in task(2..4)) {
        for algo in GREEDY_FAMILY {
            let list = rank(&task, algo).unwrap();
            prop_assert_eq!(infeasible_index(&list, task.desired()).unwrap(), 0, "{}", algo);
        }
    }

    #[test]
    fn const_sort_always_feasible(task in task(2..11)) {
        let list = rank(&task, Algorithm::DetConstSort).unwrap();
        prop_assert_eq!(list.len(), task.k_max());
        prop_assert_eq!(infeasibility(&list, task.desired()).unwrap(), (0, 0));
    }

    #[test]
    fn greedy_family_respects_ceiling(task in task(2..11)) {
        let p = task.desired().as_slice();
        for algo in GREEDY_FAMILY {
            let list = rank(&task, algo).unwrap();
            for k in 1..=list.len() {
                let counts = list.prefix_counts(p.len(), k);
                for (a, &share) in p.iter().enumerate() {
                    prop_assert!(counts.counts[a] <= ceil_quota(k, share), "{} k={} a={}", algo, k, a);
                }
            }
        }
    }

    #[test]
    fn pools_consumed_in_order_and_deterministic(task in task(1..11)) {
        for algo in Algorithm::ALL {
            let list = rank(&task, algo).unwrap();
            prop_assert_eq!(list.len(), task.k_max());
            prop_assert!(per_attribute_non_increasing(&list, task.num_attrs()), "{}", algo);
            prop_assert_eq!(&list, &rank(&task, algo).unwrap());
        }
    }

    #[test]
    fn single_attribute_all_equal_vanilla(task in task(1..2)) {
        let vanilla = rank(&task, Algorithm::Vanilla).unwrap();
        for algo in Algorithm::ALL {
            prop_assert_eq!(&rank(&task, algo).unwrap(), &vanilla);
        }
    }
}

#[test]
fn greedy_counter_example_stays_infeasible() {
    let task = TaskInput::new(4)
        .attribute("a1", 0.4, [0.1])
        .attribute("a2", 0.4, [0.2])
        .attribute("a3", 0.1, [0.3])
        .attribute("a4", 0.1, [0.4])
        .validate()
        .unwrap();
    let list = rank(&task, Algorithm::DetGreedy).unwrap();
    assert!(infeasible_index(&list, task.desired()).unwrap() >= 1);
}
