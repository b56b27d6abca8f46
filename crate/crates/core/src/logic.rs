//! Truth values: Boolean logic and Kleene's strong three-valued logic.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ast::PredOp;
use crate::kbag::{BaseConst, Value};

/// The operations conditions are evaluated with.
///
/// `MAYBE` is what comparisons involving `NULL` yield; in the Boolean
/// instance it coincides with `FALSE`.
pub trait TruthValue: Copy + Eq + fmt::Debug + Send + Sync + 'static {
    const TRUE: Self;
    const FALSE: Self;
    const MAYBE: Self;
    /// The whole carrier, for exhaustive tables.
    const ALL: &'static [Self];
    const KIND: LogicKind;

    fn and(self, other: Self) -> Self;
    fn or(self, other: Self) -> Self;
    fn neg(self) -> Self;

    fn is_true(self) -> bool {
        self == Self::TRUE
    }

    fn is_false(self) -> bool {
        self == Self::FALSE
    }

    fn of_bool(b: bool) -> Self {
        if b {
            Self::TRUE
        } else {
            Self::FALSE
        }
    }
}

impl TruthValue for bool {
    const TRUE: Self = true;
    const FALSE: Self = false;
    const MAYBE: Self = false;
    const ALL: &'static [Self] = &[false, true];
    const KIND: LogicKind = LogicKind::TwoValued;

    fn and(self, other: Self) -> Self {
        self && other
    }

    fn or(self, other: Self) -> Self {
        self || other
    }

    fn neg(self) -> Self {
        !self
    }
}

/// Kleene truth values, ordered `False < Unknown < True`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tribool {
    False,
    Unknown,
    True,
}

impl TruthValue for Tribool {
    const TRUE: Self = Tribool::True;
    const FALSE: Self = Tribool::False;
    const MAYBE: Self = Tribool::Unknown;
    const ALL: &'static [Self] = &[Tribool::False, Tribool::Unknown, Tribool::True];
    const KIND: LogicKind = LogicKind::ThreeValued;

    fn and(self, other: Self) -> Self {
        self.min(other)
    }

    fn or(self, other: Self) -> Self {
        self.max(other)
    }

    fn neg(self) -> Self {
        match self {
            Tribool::False => Tribool::True,
            Tribool::Unknown => Tribool::Unknown,
            Tribool::True => Tribool::False,
        }
    }
}

impl fmt::Display for Tribool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tribool::False => "false",
            Tribool::Unknown => "unknown",
            Tribool::True => "true",
        })
    }
}

/// Runtime choice of logic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LogicKind {
    TwoValued,
    ThreeValued,
}

impl LogicKind {
    pub fn label(self) -> &'static str {
        match self {
            LogicKind::TwoValued => "2vl",
            LogicKind::ThreeValued => "3vl",
        }
    }
}

impl fmt::Display for LogicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for LogicKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "2vl" => Ok(LogicKind::TwoValued),
            "3vl" => Ok(LogicKind::ThreeValued),
            other => Err(format!("unknown logic `{other}` (expected 2vl or 3vl)")),
        }
    }
}

/// SQL equality on values: `MAYBE` as soon as a `NULL` is involved.
pub fn veq<B: TruthValue>(v: &Value, w: &Value) -> B {
    match (v, w) {
        (Value::Const(a), Value::Const(b)) => B::of_bool(a == b),
        _ => B::MAYBE,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("predicate expects {expected} arguments, got {found}")]
pub struct PredArityError {
    pub expected: usize,
    pub found: usize,
}

/// Lifts a predicate on constants to values: `MAYBE` if any argument is
/// `NULL`.
pub fn sem_bpred<B: TruthValue>(op: &PredOp, args: &[Value]) -> Result<B, PredArityError> {
    if args.len() != op.arity() {
        return Err(PredArityError {
            expected: op.arity(),
            found: args.len(),
        });
    }
    let consts: Option<Vec<BaseConst>> = args.iter().map(|v| v.as_const().cloned()).collect();
    Ok(match consts {
        Some(cs) => B::of_bool(op.holds(&cs)),
        None => B::MAYBE,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectiveTable<B> {
    pub and: Vec<(B, B, B)>,
    pub or: Vec<(B, B, B)>,
    pub neg: Vec<(B, B)>,
}

/// Full truth tables of one instance.
pub fn connective_table<B: TruthValue>() -> ConnectiveTable<B> {
    let pairs = || B::ALL.iter().flat_map(|&a| B::ALL.iter().map(move |&b| (a, b)));
    ConnectiveTable {
        and: pairs().map(|(a, b)| (a, b, a.and(b))).collect(),
        or: pairs().map(|(a, b)| (a, b, a.or(b))).collect(),
        neg: B::ALL.iter().map(|&a| (a, a.neg())).collect(),
    }
}

/// Tables for both instances: (Boolean, Kleene).
pub fn connective_tables() -> (ConnectiveTable<bool>, ConnectiveTable<Tribool>) {
    (connective_table(), connective_table())
}

#[cfg(test)]
mod tests {
    use super::*;
    use Tribool::*;

    #[test]
    fn veq_cases() {
        let one = Value::int(1);
        assert_eq!(veq::<Tribool>(&one, &one), True);
        assert_eq!(veq::<Tribool>(&one, &Value::Null), Unknown);
        assert_eq!(veq::<Tribool>(&Value::Null, &Value::Null), Unknown);
        assert!(!veq::<bool>(&Value::Null, &Value::Null));
        assert_eq!(veq::<Tribool>(&one, &Value::int(2)), False);
    }

    #[test]
    fn bpred_cases() {
        let (one, two) = (Value::int(1), Value::int(2));
        assert_eq!(sem_bpred::<Tribool>(&PredOp::Eq, &[one.clone(), one.clone()]), Ok(True));
        assert_eq!(
            sem_bpred::<Tribool>(&PredOp::Lt, &[Value::Null, Value::int(5)]),
            Ok(Unknown)
        );
        assert_eq!(
            sem_bpred::<Tribool>(&PredOp::Neq, &[one.clone(), two.clone()]),
            Ok(True)
        );
        assert_eq!(sem_bpred::<bool>(&PredOp::Ge, &[one.clone(), two]), Ok(false));
        assert_eq!(
            sem_bpred::<bool>(&PredOp::Lt, &[Value::int(9), Value::str("a")]),
            Ok(true)
        );
        assert!(sem_bpred::<bool>(&PredOp::Eq, &[one]).is_err());
    }

    #[test]
    fn kleene_tables() {
        assert_eq!(True.and(Unknown), Unknown);
        assert_eq!(False.or(Unknown), Unknown);
        assert_eq!(False.and(Unknown), False);
        assert_eq!(True.or(Unknown), True);
        assert_eq!(Unknown.neg(), Unknown);
        assert!(!true.and(false));
        let (two, three) = connective_tables();
        assert_eq!(two.and.len(), 4);
        assert_eq!(three.and.len(), 9);
        assert_eq!(three.neg, vec![(False, True), (Unknown, Unknown), (True, False)]);
    }

    fn de_morgan<B: TruthValue>() {
        for &a in B::ALL {
            for &b in B::ALL {
                assert_eq!(a.and(b).neg(), a.neg().or(b.neg()));
                assert_eq!(a.or(b).neg(), a.neg().and(b.neg()));
            }
        }
    }

    #[test]
    fn de_morgan_both() {
        de_morgan::<bool>();
        de_morgan::<Tribool>();
    }

    #[test]
    fn truth_predicates() {
        for b in [false, true] {
            assert_eq!(Tribool::of_bool(b).is_true(), b);
            assert_eq!(bool::of_bool(b).is_true(), b);
        }
        assert!(!Unknown.is_true() && !Unknown.is_false());
        for &x in bool::ALL {
            assert!(x.is_true() ^ x.is_false());
        }
    }
}
