use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ExplanationEncoding, Formula, FormulaError};

/// Default ceiling on `N_pred` for exhaustive enumeration.
pub const DEFAULT_PREDICATE_CAP: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub predicate: usize,
    pub negated: bool,
}

impl Literal {
    pub fn new(predicate: usize, negated: bool) -> Self {
        Self { predicate, negated }
    }

    fn render(&self, names: &[impl AsRef<str>]) -> String {
        let name = names[self.predicate].as_ref();
        if self.negated {
            format!("!{name}")
        } else {
            name.to_string()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Connective {
    And,
    Or,
}

impl Connective {
    pub fn dual(self) -> Self {
        match self {
            Connective::And => Connective::Or,
            Connective::Or => Connective::And,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Connective::And => " & ",
            Connective::Or => " | ",
        }
    }

    /// Outer connective of a normal form: CNF joins clauses with `∧`.
    fn outer_of(dnf: bool) -> Self {
        if dnf {
            Connective::Or
        } else {
            Connective::And
        }
    }
}

/// One temporal part (`φ_F` or `φ_G`) in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Part {
    Literal(Literal),
    /// A single clause of two or more literals, sorted.
    Clause { connective: Connective, literals: Vec<Literal> },
    /// Two clauses joined by `outer`; literals inside a clause are joined by
    /// `outer.dual()`. Clauses are sorted and never both singletons.
    TwoClauses { outer: Connective, clauses: [Vec<Literal>; 2] },
}

impl Part {
    /// Applies the rewrite rules to the (possibly empty) clauses of one part.
    pub(super) fn from_clauses(first: Vec<Literal>, second: Vec<Literal>, dnf: bool) -> Self {
        let mut clauses: Vec<Vec<Literal>> = [first, second]
            .into_iter()
            .filter(|c| !c.is_empty())
            .map(|mut c| {
                c.sort();
                c
            })
            .collect();
        clauses.sort();
        let outer = Connective::outer_of(dnf);
        match clauses.len() {
            1 => {
                let c = clauses.pop().unwrap();
                if c.len() == 1 {
                    Part::Literal(c[0])
                } else {
                    Part::Clause { connective: outer.dual(), literals: c }
                }
            }
            2 => {
                let second = clauses.pop().unwrap();
                let first = clauses.pop().unwrap();
                if first.len() == 1 && second.len() == 1 {
                    let mut literals = vec![first[0], second[0]];
                    literals.sort();
                    Part::Clause { connective: outer, literals }
                } else {
                    Part::TwoClauses { outer, clauses: [first, second] }
                }
            }
            _ => unreachable!("a part always holds at least one literal"),
        }
    }

    pub fn literals(&self) -> Vec<Literal> {
        match self {
            Part::Literal(l) => vec![*l],
            Part::Clause { literals, .. } => literals.clone(),
            Part::TwoClauses { clauses, .. } => clauses.concat(),
        }
    }

    pub fn to_formula(&self) -> Formula {
        let lits = |ls: &[Literal]| ls.iter().map(|&l| Formula::Literal(l)).collect::<Vec<_>>();
        let join = |c: Connective, args: Vec<Formula>| match c {
            Connective::And => Formula::And(args),
            Connective::Or => Formula::Or(args),
        };
        match self {
            Part::Literal(l) => Formula::Literal(*l),
            Part::Clause { connective, literals } => join(*connective, lits(literals)),
            Part::TwoClauses { outer, clauses } => join(
                *outer,
                clauses.iter().map(|c| join(outer.dual(), lits(c))).collect(),
            ),
        }
    }

    /// Writes clause bits for this part's predicates and returns the form bit
    /// (`true` = DNF) of one encoding that decodes back to `self`.
    fn encode_into(&self, clause: &mut [bool]) -> bool {
        match self {
            Part::Literal(_) => false,
            Part::Clause { connective, .. } => *connective == Connective::And,
            Part::TwoClauses { outer, clauses } => {
                for l in &clauses[1] {
                    clause[l.predicate] = true;
                }
                *outer == Connective::Or
            }
        }
    }

    fn render(&self, names: &[impl AsRef<str>]) -> String {
        let clause = |ls: &[Literal], c: Connective| {
            ls.iter()
                .map(|l| l.render(names))
                .collect::<Vec<_>>()
                .join(c.symbol())
        };
        match self {
            Part::Literal(l) => l.render(names),
            Part::Clause { connective, literals } => clause(literals, *connective),
            Part::TwoClauses { outer, clauses } => clauses
                .iter()
                .map(|c| format!("({})", clause(c, outer.dual())))
                .collect::<Vec<_>>()
                .join(outer.symbol()),
        }
    }
}

/// `F(eventually) ∧ G(globally)` after deduplicating equivalent encodings.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonicalExplanation {
    pub eventually: Part,
    pub globally: Part,
}

impl CanonicalExplanation {
    pub fn decode(enc: &ExplanationEncoding) -> Self {
        let n = enc.n_pred();
        let mut parts: [[Vec<Literal>; 2]; 2] = Default::default();
        for p in 0..n {
            let lit = Literal::new(p, enc.negated(p));
            parts[enc.in_globally(p) as usize][enc.second_clause(p) as usize].push(lit);
        }
        let [[f0, f1], [g0, g1]] = parts;
        Self {
            eventually: Part::from_clauses(f0, f1, enc.form_f()),
            globally: Part::from_clauses(g0, g1, enc.form_g()),
        }
    }

    /// One encoding over `n_pred` predicates that decodes to `self`.
    pub fn encode(&self, n_pred: usize) -> Result<ExplanationEncoding, FormulaError> {
        let mut negated = vec![false; n_pred];
        let mut temporal = vec![false; n_pred];
        let mut clause = vec![false; n_pred];
        let mut seen = vec![false; n_pred];
        for (part, globally) in [(&self.eventually, false), (&self.globally, true)] {
            for l in part.literals() {
                if l.predicate >= n_pred || seen[l.predicate] {
                    return Err(FormulaError::InvalidEncoding(format!(
                        "predicate {} missing from or repeated in a {n_pred}-predicate explanation",
                        l.predicate
                    )));
                }
                seen[l.predicate] = true;
                negated[l.predicate] = l.negated;
                temporal[l.predicate] = globally;
            }
        }
        if let Some(p) = seen.iter().position(|s| !s) {
            return Err(FormulaError::InvalidEncoding(format!(
                "predicate {p} does not appear in the explanation"
            )));
        }
        let form_f = self.eventually.encode_into(&mut clause);
        let form_g = self.globally.encode_into(&mut clause);
        ExplanationEncoding::from_parts(&negated, &temporal, &clause, form_f, form_g)
    }

    pub fn render(&self, names: &[impl AsRef<str>]) -> String {
        format!(
            "F({}) & G({})",
            self.eventually.render(names),
            self.globally.render(names)
        )
    }

    pub fn n_pred(&self) -> usize {
        self.eventually.literals().len() + self.globally.literals().len()
    }
}

impl fmt::Display for CanonicalExplanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.n_pred()).map(|i| format!("psi{i}")).collect();
        f.write_str(&self.render(&names))
    }
}

/// Every distinct canonical explanation over `n_pred` predicates.
pub fn enumerate_all(
    n_pred: usize,
    cap: usize,
) -> Result<BTreeSet<CanonicalExplanation>, FormulaError> {
    if n_pred > cap || n_pred > super::MAX_PREDICATES {
        return Err(FormulaError::CapExceeded { n: n_pred, cap });
    }
    if n_pred < 2 {
        return Ok(BTreeSet::new());
    }
    Ok(ExplanationEncoding::all_valid(n_pred)
        .map(|e| CanonicalExplanation::decode(&e))
        .collect())
}
