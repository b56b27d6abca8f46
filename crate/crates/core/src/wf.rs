//! Well-formedness judgments.
//!
//! Each checker returns what its judgment assigns: a schema for queries and
//! tables, a context for FROM lists, nothing for terms, conditions and
//! existential subqueries. The first failing premise wins.

use std::collections::BTreeMap;
use std::fmt;

use crate::ast::{flatten_scopes, star_terms, Cond, Context, FromItem, Name, NodePath, Query, Schema, TableRef, Term};
use crate::parser::SourceSpan;

/// Source of base-table schemas.
pub trait Catalog {
    fn table_schema(&self, name: &Name) -> Option<&Schema>;
}

impl Catalog for BTreeMap<Name, Schema> {
    fn table_schema(&self, name: &Name) -> Option<&Schema> {
        self.get(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WfErrorKind {
    UnboundIndex,
    UnknownAttr,
    AmbiguousAttr,
    DupAlias,
    SchemaLenMismatch,
    SetOpSchemaMismatch,
    InArityMismatch,
    PredArityMismatch,
    UnknownTable,
    AmbiguousStar,
}

impl fmt::Display for WfErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A failed premise. `path` locates the innermost offending node relative to
/// the checked root; `span` is filled in when a parser span tree is at hand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WfError {
    pub kind: WfErrorKind,
    pub path: NodePath,
    pub span: Option<SourceSpan>,
    pub message: String,
}

impl fmt::Display for WfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for WfError {}

pub fn wf_var(sigma: &Schema, x: &Name) -> Result<usize, WfError> {
    Checker::<BTreeMap<Name, Schema>>::var(sigma, x).map_err(|(kind, message)| WfError {
        kind,
        path: Vec::new(),
        span: None,
        message,
    })
}

pub fn wf_term(gamma: &Context, t: &Term) -> Result<(), WfError> {
    let db = BTreeMap::new();
    Checker::new(&db).term(gamma, t)
}

pub fn wf_terms(gamma: &Context, ts: &[Term]) -> Result<(), WfError> {
    let db = BTreeMap::new();
    let mut ck = Checker::new(&db);
    for (i, t) in ts.iter().enumerate() {
        ck.at(i, |ck| ck.term(gamma, t))?;
    }
    Ok(())
}

/// Returns the alias schemas bound by `from`, in FROM order.
pub fn wf_tables<D: Catalog>(gamma: &Context, db: &D, from: &[FromItem]) -> Result<Vec<Schema>, WfError> {
    Checker::new(db).tables(gamma, from, 0)
}

pub fn wf_query<D: Catalog>(gamma: &Context, db: &D, q: &Query) -> Result<Schema, WfError> {
    Checker::new(db).query(gamma, q)
}

pub fn wf_cond<D: Catalog>(gamma: &Context, db: &D, c: &Cond) -> Result<(), WfError> {
    Checker::new(db).cond(gamma, c)
}

pub fn wf_inquery<D: Catalog>(gamma: &Context, db: &D, q: &Query) -> Result<(), WfError> {
    Checker::new(db).inquery(gamma, q)
}

struct Checker<'a, D> {
    db: &'a D,
    path: NodePath,
}

type Premise = Result<(), (WfErrorKind, String)>;

impl<'a, D: Catalog> Checker<'a, D> {
    fn new(db: &'a D) -> Self {
        Checker { db, path: Vec::new() }
    }

    fn at<T>(&mut self, child: usize, f: impl FnOnce(&mut Self) -> Result<T, WfError>) -> Result<T, WfError> {
        self.path.push(child);
        let r = f(self);
        self.path.pop();
        r
    }

    fn fail<T>(&self, kind: WfErrorKind, message: String) -> Result<T, WfError> {
        Err(WfError {
            kind,
            path: self.path.clone(),
            span: None,
            message,
        })
    }

    fn lift(&self, p: Premise) -> Result<(), WfError> {
        p.or_else(|(kind, message)| self.fail(kind, message))
    }

    fn var(sigma: &Schema, x: &Name) -> Result<usize, (WfErrorKind, String)> {
        match sigma.occurrences(x) {
            0 => Err((WfErrorKind::UnknownAttr, format!("attribute `{x}` not in {sigma}"))),
            1 => Ok(sigma.attrs().iter().position(|a| a == x).unwrap()),
            _ => Err((
                WfErrorKind::AmbiguousAttr,
                format!("attribute `{x}` is ambiguous in {sigma}"),
            )),
        }
    }

    fn term(&mut self, gamma: &Context, t: &Term) -> Result<(), WfError> {
        match t {
            Term::Const(_) | Term::Null => Ok(()),
            Term::Var(n, x) => match gamma.get(*n) {
                None => self.fail(
                    WfErrorKind::UnboundIndex,
                    format!("`{n}.{x}`: index {n} out of range, {} scope(s)", gamma.len()),
                ),
                Some(sigma) => self.lift(Self::var(sigma, x).map(|_| ())),
            },
        }
    }

    fn tables(&mut self, gamma: &Context, from: &[FromItem], first_child: usize) -> Result<Vec<Schema>, WfError> {
        let mut scopes = Vec::with_capacity(from.len());
        for (j, (tb, alias)) in from.iter().enumerate() {
            self.at(first_child + j, |ck| {
                let natural = match tb {
                    TableRef::Base(x) => match ck.db.table_schema(x) {
                        Some(s) => s.clone(),
                        None => return ck.fail(WfErrorKind::UnknownTable, format!("no table named `{x}`")),
                    },
                    TableRef::Query(q) => ck.at(0, |ck| ck.query(gamma, q))?,
                };
                if natural.len() != alias.len() {
                    return ck.fail(
                        WfErrorKind::SchemaLenMismatch,
                        format!(
                            "alias {alias} has {} attribute(s), table has {}",
                            alias.len(),
                            natural.len()
                        ),
                    );
                }
                if alias.has_duplicates() {
                    return ck.fail(
                        WfErrorKind::DupAlias,
                        format!("alias {alias} repeats an attribute name"),
                    );
                }
                Ok(())
            })?;
            scopes.push(alias.clone());
        }
        Ok(scopes)
    }

    fn query(&mut self, gamma: &Context, q: &Query) -> Result<Schema, WfError> {
        match q {
            Query::Select {
                selections, from, cond, ..
            } => {
                let k = selections.len();
                let scopes = self.tables(gamma, from, k)?;
                let inner = gamma.extend(&scopes);
                for (i, (t, _)) in selections.iter().enumerate() {
                    self.at(i, |ck| ck.term(&inner, t))?;
                }
                self.at(k + from.len(), |ck| ck.cond(&inner, cond))?;
                Ok(Schema(selections.iter().map(|(_, x)| x.clone()).collect()))
            }
            Query::SelectStar { from, cond, .. } => {
                let scopes = self.tables(gamma, from, 0)?;
                let inner = gamma.extend(&scopes);
                for t in star_terms(&scopes) {
                    if let Err(e) = self.term(&inner, &t) {
                        return self.fail(
                            WfErrorKind::AmbiguousStar,
                            format!("`*` cannot be expanded: {}", e.message),
                        );
                    }
                }
                self.at(from.len(), |ck| ck.cond(&inner, cond))?;
                Ok(flatten_scopes(&scopes))
            }
            Query::SetOp { op, left, right, .. } => {
                let l = self.at(0, |ck| ck.query(gamma, left))?;
                let r = self.at(1, |ck| ck.query(gamma, right))?;
                if l != r {
                    return self.fail(
                        WfErrorKind::SetOpSchemaMismatch,
                        format!("{} operands have schemas {l} and {r}", op.keyword()),
                    );
                }
                Ok(l)
            }
        }
    }

    fn inquery(&mut self, gamma: &Context, q: &Query) -> Result<(), WfError> {
        match q {
            Query::SelectStar { from, cond, .. } => {
                let scopes = self.tables(gamma, from, 0)?;
                let inner = gamma.extend(&scopes);
                self.at(from.len(), |ck| ck.cond(&inner, cond))
            }
            _ => self.query(gamma, q).map(|_| ()),
        }
    }

    fn cond(&mut self, gamma: &Context, c: &Cond) -> Result<(), WfError> {
        match c {
            Cond::True | Cond::False => Ok(()),
            Cond::IsNull { term, .. } => self.at(0, |ck| ck.term(gamma, term)),
            Cond::Pred { op, args } => {
                if args.len() != op.arity() {
                    return self.fail(
                        WfErrorKind::PredArityMismatch,
                        format!("predicate expects {} argument(s), got {}", op.arity(), args.len()),
                    );
                }
                for (i, t) in args.iter().enumerate() {
                    self.at(i, |ck| ck.term(gamma, t))?;
                }
                Ok(())
            }
            Cond::Memb { terms, query, .. } => {
                for (i, t) in terms.iter().enumerate() {
                    self.at(i, |ck| ck.term(gamma, t))?;
                }
                let sigma = self.at(terms.len(), |ck| ck.query(gamma, query))?;
                if sigma.len() != terms.len() {
                    return self.fail(
                        WfErrorKind::InArityMismatch,
                        format!("IN compares {} term(s) with a query of schema {sigma}", terms.len()),
                    );
                }
                Ok(())
            }
            Cond::Exists(q) => self.at(0, |ck| ck.inquery(gamma, q)),
            Cond::And(l, r) | Cond::Or(l, r) => {
                self.at(0, |ck| ck.cond(gamma, l))?;
                self.at(1, |ck| ck.cond(gamma, r))
            }
            Cond::Not(c) => self.at(0, |ck| ck.cond(gamma, c)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{name, PredOp};

    fn db() -> BTreeMap<Name, Schema> {
        let mut m = BTreeMap::new();
        m.insert(name("R"), Schema::of(&["A", "B"]));
        m.insert(name("S"), Schema::of(&["A"]));
        m
    }

    fn base(t: &str, alias: &[&str]) -> FromItem {
        (TableRef::Base(name(t)), Schema::of(alias))
    }

    fn ctx(scopes: &[&[&str]]) -> Context {
        Context(scopes.iter().map(|s| Schema::of(s)).collect())
    }

    #[test]
    fn var_rules() {
        assert_eq!(wf_var(&Schema::of(&["A", "B"]), &name("A")), Ok(0));
        assert_eq!(
            wf_var(&Schema::of(&["A", "A"]), &name("A")).unwrap_err().kind,
            WfErrorKind::AmbiguousAttr
        );
        assert_eq!(
            wf_var(&Schema::of(&["A", "B"]), &name("C")).unwrap_err().kind,
            WfErrorKind::UnknownAttr
        );
    }

    #[test]
    fn term_rules() {
        assert!(wf_term(&ctx(&[&["A", "B"]]), &Term::var(0, "A")).is_ok());
        assert_eq!(
            wf_term(&ctx(&[&["A"]]), &Term::var(1, "A")).unwrap_err().kind,
            WfErrorKind::UnboundIndex
        );
        assert!(wf_term(&Context::empty(), &Term::Null).is_ok());
    }

    #[test]
    fn table_rules() {
        let g = Context::empty();
        assert_eq!(
            wf_tables(&g, &db(), &[base("R", &["X", "Y"])]).unwrap(),
            vec![Schema::of(&["X", "Y"])]
        );
        assert_eq!(
            wf_tables(&g, &db(), &[base("R", &["X", "X"])]).unwrap_err().kind,
            WfErrorKind::DupAlias
        );
        assert_eq!(
            wf_tables(&g, &db(), &[base("R", &["X"])]).unwrap_err().kind,
            WfErrorKind::SchemaLenMismatch
        );
        let err = wf_tables(&g, &db(), &[base("R", &["X", "Y"]), base("T", &["X"])]).unwrap_err();
        assert_eq!(err.kind, WfErrorKind::UnknownTable);
        assert_eq!(err.path, vec![1]);
    }

    #[test]
    fn duplicate_output_schema_is_legal() {
        let q = Query::Select {
            distinct: false,
            selections: vec![(Term::var(0, "A"), name("A")), (Term::var(0, "A"), name("A"))],
            from: vec![base("R", &["A", "B"])],
            cond: Cond::True,
        };
        assert_eq!(wf_query(&Context::empty(), &db(), &q).unwrap(), Schema::of(&["A", "A"]));
    }

    #[test]
    fn reselecting_duplicate_schema_is_rejected() {
        let inner = Query::Select {
            distinct: false,
            selections: vec![(Term::var(0, "A"), name("A")), (Term::var(0, "A"), name("A"))],
            from: vec![base("R", &["A", "B"])],
            cond: Cond::True,
        };
        let q = Query::SelectStar {
            distinct: false,
            from: vec![(TableRef::Query(Box::new(inner)), Schema::of(&["A", "A"]))],
            cond: Cond::True,
        };
        let err = wf_query(&Context::empty(), &db(), &q).unwrap_err();
        assert_eq!(err.kind, WfErrorKind::DupAlias);
        assert_eq!(err.path, vec![0]);
    }

    #[test]
    fn setop_schemas_must_agree() {
        let sel = |x: &str| Query::Select {
            distinct: false,
            selections: vec![(Term::var(0, "A"), name(x))],
            from: vec![base("S", &["A"])],
            cond: Cond::True,
        };
        let q = Query::union(false, sel("A"), sel("B"));
        assert_eq!(
            wf_query(&Context::empty(), &db(), &q).unwrap_err().kind,
            WfErrorKind::SetOpSchemaMismatch
        );
        assert!(wf_query(&Context::empty(), &db(), &Query::union(false, sel("A"), sel("A"))).is_ok());
        // inside EXISTS the operands are still checked as queries
        let c = Cond::exists(Query::union(true, sel("A"), sel("B")));
        assert_eq!(
            wf_cond(&Context::empty(), &db(), &c).unwrap_err().kind,
            WfErrorKind::SetOpSchemaMismatch
        );
    }

    #[test]
    fn star_with_shared_alias_names() {
        // FROM R AS (X), S AS (X): both judgments accept; the star expands to
        // 0.X, 1.X which are unambiguous, and the output schema is (X, X).
        let mut d = db();
        d.insert(name("R1"), Schema::of(&["A"]));
        let q = Query::SelectStar {
            distinct: false,
            from: vec![base("R1", &["X"]), base("S", &["X"])],
            cond: Cond::True,
        };
        assert!(wf_inquery(&Context::empty(), &d, &q).is_ok());
        assert_eq!(wf_query(&Context::empty(), &d, &q).unwrap(), Schema::of(&["X", "X"]));
    }

    #[test]
    fn cond_rules() {
        let g = ctx(&[&["A"]]);
        assert!(wf_cond(&g, &db(), &Cond::is_null(Term::var(0, "A"))).is_ok());
        let one_col = Query::SelectStar {
            distinct: false,
            from: vec![base("S", &["A"])],
            cond: Cond::True,
        };
        let c = Cond::memb(true, vec![Term::var(0, "A"), Term::int(1)], one_col);
        let err = wf_cond(&g, &db(), &c).unwrap_err();
        assert_eq!(err.kind, WfErrorKind::InArityMismatch);
        let c = Cond::Pred {
            op: PredOp::Eq,
            args: vec![Term::int(1)],
        };
        assert_eq!(wf_cond(&g, &db(), &c).unwrap_err().kind, WfErrorKind::PredArityMismatch);
    }

    #[test]
    fn error_path_points_at_term() {
        // SELECT 0.A AS A FROM table S AS (A) WHERE 0.A = 3.A
        let q = Query::Select {
            distinct: false,
            selections: vec![(Term::var(0, "A"), name("A"))],
            from: vec![base("S", &["A"])],
            cond: Cond::eq(Term::var(0, "A"), Term::var(3, "A")),
        };
        let err = wf_query(&Context::empty(), &db(), &q).unwrap_err();
        assert_eq!(err.kind, WfErrorKind::UnboundIndex);
        assert_eq!(err.path, vec![2, 1]);
    }

    #[test]
    fn correlated_reference() {
        // EXISTS (SELECT * FROM S AS (C) WHERE 0.C = 1.A) under [(A)]
        let sub = Query::SelectStar {
            distinct: false,
            from: vec![base("S", &["C"])],
            cond: Cond::eq(Term::var(0, "C"), Term::var(1, "A")),
        };
        assert!(wf_cond(&ctx(&[&["A"]]), &db(), &Cond::exists(sub.clone())).is_ok());
        assert!(wf_cond(&Context::empty(), &db(), &Cond::exists(sub)).is_err());
    }
}
