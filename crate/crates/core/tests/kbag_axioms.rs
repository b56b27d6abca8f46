//! The defining properties of finite relations, checked on random inputs.

use nullsql::kbag::{Relation, Tuple, Value};
use proptest::prelude::*;

fn value() -> impl Strategy<Value = Value> {
    prop_oneof![Just(Value::Null), (0i64..3).prop_map(Value::int), Just(Value::str("a")),]
}

fn tuple(arity: usize) -> impl Strategy<Value = Tuple> {
    proptest::collection::vec(value(), arity).prop_map(Tuple::new)
}

fn relation(arity: usize) -> impl Strategy<Value = Relation> {
    proptest::collection::vec(tuple(arity), 0..7).prop_map(move |rows| Relation::from_rows(arity, rows).unwrap())
}

/// Two relations and a probe tuple of a common arity.
fn pair_and_probe() -> impl Strategy<Value = (Relation, Relation, Tuple)> {
    (0usize..4).prop_flat_map(|n| (relation(n), relation(n), tuple(n)))
}

/// A relation together with a probe that is often one of its rows.
fn rel_and_probe() -> impl Strategy<Value = (Relation, Tuple)> {
    (0usize..4)
        .prop_flat_map(|n| (relation(n), tuple(n), any::<prop::sample::Index>()))
        .prop_map(|(r, t, i)| {
            if r.is_empty() || i.index(2) == 0 {
                (r, t)
            } else {
                let row = r.rows()[i.index(r.rows().len())].clone();
                (r, row)
            }
        })
}

fn code(v: &Value) -> u64 {
    match v {
        Value::Null => 7,
        Value::Const(nullsql::BaseConst::Int(i)) => *i as u64 * 3 + 1,
        Value::Const(nullsql::BaseConst::Str(s)) => s.len() as u64 + 11,
    }
}

/// An arbitrary but fixed predicate, chosen by `salt`.
fn pred(salt: u64) -> impl Fn(&Tuple) -> bool {
    move |t| t.iter().fold(salt, |h, v| h.wrapping_mul(31).wrapping_add(code(v))) % 3 != 0
}

/// A tuple map built from column picks and constants.
#[derive(Debug, Clone)]
enum Cell {
    Col(usize),
    Const(Value),
}

fn mapping(from: usize) -> impl Strategy<Value = Vec<Cell>> {
    let cell = if from == 0 {
        value().prop_map(Cell::Const).boxed()
    } else {
        prop_oneof![(0..from).prop_map(Cell::Col), value().prop_map(Cell::Const)].boxed()
    };
    proptest::collection::vec(cell, 0..4)
}

fn apply(f: &[Cell], t: &Tuple) -> Tuple {
    f.iter()
        .map(|c| match c {
            Cell::Col(i) => t[*i].clone(),
            Cell::Const(v) => v.clone(),
        })
        .collect()
}

fn memb(r: &Relation, t: &Tuple) -> usize {
    r.memb(t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ext((r, s, _) in pair_and_probe(), shuffle in any::<u64>()) {
        // same multiset in another order builds the same relation
        let mut rows = r.rows().to_vec();
        let k = rows.len().max(1);
        rows.rotate_left((shuffle as usize) % k);
        rows.reverse();
        prop_assert_eq!(&Relation::from_rows(r.arity(), rows).unwrap(), &r);
        // relations that differ differ on some tuple's count
        let probes: Vec<Tuple> = r.supp().into_iter().chain(s.supp()).collect();
        let same = probes.iter().all(|t| memb(&r, t) == memb(&s, t));
        prop_assert_eq!(same, r == s);
    }

    #[test]
    fn fs((r, t) in rel_and_probe()) {
        if memb(&r, &t) > 0 {
            prop_assert!(r.supp().contains(&t));
        }
    }

    #[test]
    fn fs_r((r, t) in rel_and_probe()) {
        if r.supp().contains(&t) {
            prop_assert!(memb(&r, &t) > 0);
        }
    }

    #[test]
    fn nodup((r, _) in rel_and_probe()) {
        let s = r.supp();
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                prop_assert_ne!(&s[i], &s[j]);
            }
        }
    }

    #[test]
    fn plus((r, s, t) in pair_and_probe()) {
        prop_assert_eq!(memb(&r.plus(&s).unwrap(), &t), memb(&r, &t) + memb(&s, &t));
    }

    #[test]
    fn minus((r, s, t) in pair_and_probe()) {
        prop_assert_eq!(memb(&r.minus(&s).unwrap(), &t), memb(&r, &t).saturating_sub(memb(&s, &t)));
    }

    #[test]
    fn inter((r, s, t) in pair_and_probe()) {
        prop_assert_eq!(memb(&r.inter(&s).unwrap(), &t), memb(&r, &t).min(memb(&s, &t)));
    }

    #[test]
    fn times(
        (r1, t1) in (0usize..3).prop_flat_map(|m| (relation(m), tuple(m))),
        (r2, t2) in (0usize..3).prop_flat_map(|n| (relation(n), tuple(n))),
        pick in any::<prop::sample::Index>(),
    ) {
        let p = r1.times(&r2);
        prop_assert_eq!(p.arity(), r1.arity() + r2.arity());
        prop_assert_eq!(memb(&p, &t1.concat(&t2)), memb(&r1, &t1) * memb(&r2, &t2));
        if !p.is_empty() {
            let row = &p.rows()[pick.index(p.rows().len())];
            let (a, b) = row.split_at(r1.arity());
            prop_assert_eq!(memb(&p, row), memb(&r1, &a) * memb(&r2, &b));
        }
    }

    #[test]
    fn sum(
        (r, f, t) in (0usize..4).prop_flat_map(|m| (relation(m), mapping(m)))
            .prop_flat_map(|(r, f)| { let n = f.len(); (Just(r), Just(f), tuple(n)) }),
        use_image in any::<bool>(),
    ) {
        let n = f.len();
        let out = r.sum(n, |x| apply(&f, x)).unwrap();
        let t = match (use_image, r.rows().first()) {
            (true, Some(x)) => apply(&f, x),
            _ => t,
        };
        let expected: usize = r.supp().iter().filter(|x| apply(&f, x) == t).map(|x| memb(&r, x)).sum();
        prop_assert_eq!(memb(&out, &t), expected);
    }

    #[test]
    fn sel_false((r, t) in rel_and_probe(), salt in any::<u64>()) {
        let p = pred(salt);
        if !p(&t) {
            prop_assert_eq!(memb(&r.sel(&p), &t), 0);
        }
    }

    #[test]
    fn sel_true((r, t) in rel_and_probe(), salt in any::<u64>()) {
        let p = pred(salt);
        if p(&t) {
            prop_assert_eq!(memb(&r.sel(&p), &t), memb(&r, &t));
        }
    }

    #[test]
    fn flat((r, t) in rel_and_probe()) {
        prop_assert_eq!(memb(&r.flat(), &t), memb(&r, &t).min(1));
    }

    #[test]
    fn nil_and_one(_x in 0u8..1) {
        prop_assert_eq!(memb(&Relation::nil(), &Tuple::empty()), 0);
        prop_assert_eq!(memb(&Relation::one(), &Tuple::empty()), 1);
    }

    #[test]
    fn card((r, _) in rel_and_probe()) {
        let total: usize = r.supp().iter().map(|x| memb(&r, x)).sum();
        prop_assert_eq!(r.card(), total);
        // card through a comprehension onto the empty tuple
        let squashed = r.sum(0, |_| Tuple::empty()).unwrap();
        prop_assert_eq!(memb(&squashed, &Tuple::empty()), r.card());
    }
}
