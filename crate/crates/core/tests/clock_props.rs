use proptest::prelude::*;

use wmm_core::ClockVector;

fn cv() -> impl Strategy<Value = ClockVector> {
    prop::collection::vec((0u32..6, 0u64..20), 0..6).prop_map(|pairs| {
        let mut c = ClockVector::new();
        for (t, s) in pairs {
            c.set(t, s.max(c.get(t)));
        }
        c
    })
}

proptest! {
    #[test]
    fn union_is_a_join(a in cv(), b in cv(), c in cv()) {
        prop_assert_eq!(a.union(&b), b.union(&a));
        prop_assert_eq!(a.union(&b).union(&c), a.union(&b.union(&c)));
        prop_assert_eq!(a.union(&a), a.clone());
        prop_assert!(a.leq(&a.union(&b)) && b.leq(&a.union(&b)));
        if a.leq(&c) && b.leq(&c) {
            prop_assert!(a.union(&b).leq(&c));
        }
    }

    #[test]
    fn intersect_is_a_meet(a in cv(), b in cv(), c in cv()) {
        let m = a.intersect(&b);
        prop_assert!(m.leq(&a) && m.leq(&b));
        if c.leq(&a) && c.leq(&b) {
            prop_assert!(c.leq(&m));
        }
        prop_assert_eq!(a.union(&m), a.clone());
    }

    #[test]
    fn leq_is_a_partial_order(a in cv(), b in cv(), c in cv()) {
        prop_assert!(a.leq(&a));
        if a.leq(&b) && b.leq(&a) {
            prop_assert_eq!(&a, &b);
        }
        if a.leq(&b) && b.leq(&c) {
            prop_assert!(a.leq(&c));
        }
        prop_assert!(ClockVector::new().leq(&a));
    }

    #[test]
    fn union_with_reports_change(a in cv(), b in cv()) {
        let mut x = a.clone();
        let changed = x.union_with(&b);
        prop_assert_eq!(changed, !b.leq(&a));
        prop_assert_eq!(x, a.union(&b));
    }
}
