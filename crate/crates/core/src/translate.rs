//! Elimination of three-valued logic.
//!
//! `ttcond c` holds in Boolean logic exactly when `c` is true in Kleene
//! logic, `ffcond c` exactly when it is false. Queries are translated by
//! rewriting every condition they contain with `ttcond`.

use crate::ast::{fresh_schema, Cond, FromItem, Query, TableRef, Term};

pub fn ttquery(q: &Query) -> Query {
    match q {
        Query::Select {
            distinct,
            selections,
            from,
            cond,
        } => Query::Select {
            distinct: *distinct,
            selections: selections.clone(),
            from: tttables(from),
            cond: ttcond(cond),
        },
        Query::SelectStar { distinct, from, cond } => Query::SelectStar {
            distinct: *distinct,
            from: tttables(from),
            cond: ttcond(cond),
        },
        Query::SetOp { op, all, left, right } => Query::set_op(*op, *all, ttquery(left), ttquery(right)),
    }
}

fn tttables(from: &[FromItem]) -> Vec<FromItem> {
    from.iter()
        .map(|(tb, alias)| {
            let tb = match tb {
                TableRef::Base(x) => TableRef::Base(x.clone()),
                TableRef::Query(q) => TableRef::Query(Box::new(ttquery(q))),
            };
            (tb, alias.clone())
        })
        .collect()
}

pub fn ttcond(c: &Cond) -> Cond {
    match c {
        Cond::True | Cond::False | Cond::IsNull { .. } | Cond::Pred { .. } => c.clone(),
        Cond::Memb {
            is_in: true,
            terms,
            query,
        } => Cond::memb(true, terms.clone(), ttquery(query)),
        Cond::Memb {
            is_in: false,
            terms,
            query,
        } => not_in(terms, query),
        Cond::Exists(q) => Cond::exists(ttquery(q)),
        Cond::And(l, r) => Cond::and(ttcond(l), ttcond(r)),
        Cond::Or(l, r) => Cond::or(ttcond(l), ttcond(r)),
        Cond::Not(c) => ffcond(c),
    }
}

pub fn ffcond(c: &Cond) -> Cond {
    match c {
        Cond::True => Cond::False,
        Cond::False => Cond::True,
        Cond::IsNull { is_null, term } => Cond::IsNull {
            is_null: !is_null,
            term: term.clone(),
        },
        Cond::Pred { args, .. } => Cond::and(
            Cond::not(c.clone()),
            args.iter()
                .rev()
                .fold(Cond::True, |acc, t| Cond::and(Cond::is_not_null(t.clone()), acc)),
        ),
        Cond::Memb {
            is_in: true,
            terms,
            query,
        } => not_in(terms, query),
        Cond::Memb {
            is_in: false,
            terms,
            query,
        } => Cond::memb(true, terms.clone(), ttquery(query)),
        Cond::Exists(q) => Cond::not(Cond::exists(ttquery(q))),
        Cond::And(l, r) => Cond::or(ffcond(l), ffcond(r)),
        Cond::Or(l, r) => Cond::and(ffcond(l), ffcond(r)),
        Cond::Not(c) => ttcond(c),
    }
}

/// `t̄ NOT IN Q` in two-valued form: no row of `Q` is equal-or-unknown to `t̄`.
fn not_in(terms: &[Term], query: &Query) -> Cond {
    let alias = fresh_schema(terms.len());
    let matches = terms.iter().zip(alias.attrs()).rev().fold(Cond::True, |acc, (t, a)| {
        let t = t.lift(1);
        let col = Term::Var(0, a.clone());
        let clause = Cond::or(
            Cond::is_null(col.clone()),
            Cond::or(Cond::is_null(t.clone()), Cond::eq(t, col)),
        );
        Cond::and(clause, acc)
    });
    Cond::not(Cond::exists(Query::SelectStar {
        distinct: false,
        from: vec![(TableRef::Query(Box::new(ttquery(query))), alias)],
        cond: matches,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Name;
    use crate::parser::{parse_query, render, render_cond};

    fn where_of(q: &Query) -> &Cond {
        match q {
            Query::Select { cond, .. } | Query::SelectStar { cond, .. } => cond,
            _ => panic!("not a select"),
        }
    }

    #[test]
    fn true_is_unchanged() {
        let q = parse_query("SELECT 0.A AS A FROM table R AS (A) WHERE TRUE").unwrap();
        assert_eq!(ttquery(&q), q);
    }

    #[test]
    fn negation_switches_sides() {
        let q = parse_query("SELECT * FROM table R AS (A, B) WHERE NOT 0.A = 0.B").unwrap();
        assert_eq!(
            render_cond(where_of(&ttquery(&q))),
            "NOT 0.A = 0.B AND (0.A IS NOT NULL AND (0.B IS NOT NULL AND TRUE))"
        );
        assert_eq!(ffcond(&Cond::True), Cond::False);
        let c = Cond::is_null(Term::var(0, "A"));
        assert_eq!(ttcond(&c), c);
        assert_eq!(ffcond(&c), Cond::is_not_null(Term::var(0, "A")));
        assert_eq!(ffcond(&Cond::not(c.clone())), c);
    }

    #[test]
    fn not_in_expansion() {
        let q = parse_query(
            "SELECT 0.A AS A FROM table R AS (A) WHERE 0.A NOT IN (SELECT 0.A AS A FROM table S AS (A) WHERE TRUE)",
        )
        .unwrap();
        let t = ttquery(&q);
        let text = render(&t);
        assert!(text.contains("NOT EXISTS (SELECT * FROM query ("), "{text}");
        assert!(
            text.contains("AS (?a0) WHERE (0.?a0 IS NULL OR (1.A IS NULL OR 1.A = 0.?a0)) AND TRUE"),
            "{text}"
        );
        assert_eq!(parse_query(&text).unwrap(), t);
    }

    #[test]
    fn tuples_pair_elementwise() {
        let sub = parse_query("SELECT * FROM table S AS (C, D) WHERE TRUE").unwrap();
        let c = Cond::memb(false, vec![Term::var(0, "A"), Term::var(0, "B")], sub);
        let Cond::Not(e) = ttcond(&c) else { panic!() };
        let Cond::Exists(q) = *e else { panic!() };
        let Query::SelectStar { from, cond, .. } = *q else {
            panic!()
        };
        assert_eq!(from[0].1.attrs(), &[Name::fresh(0), Name::fresh(1)]);
        let text = render_cond(&cond);
        assert!(text.contains("1.A = 0.?a0"), "{text}");
        assert!(text.contains("1.B = 0.?a1"), "{text}");
    }

    #[test]
    fn set_ops_and_subqueries() {
        let q = parse_query(
            "SELECT * FROM query (SELECT * FROM table R AS (A) WHERE NOT 0.A IS NULL) AS (B) WHERE TRUE \
             UNION ALL SELECT * FROM table R AS (A) WHERE NOT EXISTS (SELECT * FROM table R AS (C) WHERE FALSE)",
        )
        .unwrap();
        let Query::SetOp {
            all: true, left, right, ..
        } = ttquery(&q)
        else {
            panic!()
        };
        let Query::SelectStar { from, .. } = *left else {
            panic!()
        };
        let TableRef::Query(sub) = &from[0].0 else { panic!() };
        assert_eq!(where_of(sub), &Cond::is_not_null(Term::var(0, "A")));
        assert!(matches!(where_of(&right), Cond::Not(e) if matches!(**e, Cond::Exists(_))));
    }

    #[test]
    fn in_is_kept_positive() {
        let sub = parse_query("SELECT * FROM table S AS (C) WHERE NOT FALSE").unwrap();
        let c = Cond::memb(true, vec![Term::int(1)], sub.clone());
        assert_eq!(ttcond(&c), Cond::memb(true, vec![Term::int(1)], ttquery(&sub)));
        let c = Cond::memb(false, vec![Term::int(1)], sub.clone());
        assert_eq!(ffcond(&c), Cond::memb(true, vec![Term::int(1)], ttquery(&sub)));
        assert!(matches!(ffcond(&Cond::exists(sub)), Cond::Not(_)));
    }
}
