//! 3-SAT* formulas: equally many 1-in-3 and 2-in-3 clauses, every literal
//! occurring exactly twice.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, positive: true }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, positive: false }
    }

    pub fn value(self, assignment: &[bool]) -> bool {
        assignment[self.var] == self.positive
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub literals: [Literal; 3],
    /// Number of literals that must be true: 1 or 2.
    pub kind: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("clause {clause} has kind {kind}; only 1 and 2 are allowed")]
    BadKind { clause: usize, kind: u8 },
    #[error("{ones} 1-in-3 clauses but {twos} 2-in-3 clauses")]
    KindBalance { ones: usize, twos: usize },
    #[error("clause {clause} is 1-in-3 but follows a 2-in-3 clause")]
    KindOrder { clause: usize },
    #[error("literal {literal} occurs {count} times; every literal occurs exactly twice")]
    OccurrenceCount { literal: String, count: usize },
    #[error("brute force refuses {0} variables (limit 24)")]
    TooManyVariables(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatStarFormula {
    variable_count: usize,
    clauses: Vec<Clause>,
}

fn literal_name(lit: Literal) -> String {
    if lit.positive {
        format!("{}", lit.var + 1)
    } else {
        format!("-{}", lit.var + 1)
    }
}

impl SatStarFormula {
    pub fn new(variable_count: usize, clauses: Vec<Clause>) -> Result<Self, FormulaError> {
        let mut seen_two = false;
        let (mut ones, mut twos) = (0, 0);
        for (i, c) in clauses.iter().enumerate() {
            match c.kind {
                1 if seen_two => return Err(FormulaError::KindOrder { clause: i }),
                1 => ones += 1,
                2 => {
                    seen_two = true;
                    twos += 1;
                }
                kind => return Err(FormulaError::BadKind { clause: i, kind }),
            }
        }
        if ones != twos {
            return Err(FormulaError::KindBalance { ones, twos });
        }
        let mut counts = vec![[0usize; 2]; variable_count];
        for c in &clauses {
            for lit in c.literals {
                if lit.var >= variable_count {
                    return Err(FormulaError::OccurrenceCount {
                        literal: literal_name(lit),
                        count: 1,
                    });
                }
                counts[lit.var][usize::from(!lit.positive)] += 1;
            }
        }
        for (var, pair) in counts.iter().enumerate() {
            for (side, &count) in pair.iter().enumerate() {
                if count != 2 {
                    let lit = Literal { var, positive: side == 0 };
                    return Err(FormulaError::OccurrenceCount {
                        literal: literal_name(lit),
                        count,
                    });
                }
            }
        }
        Ok(SatStarFormula {
            variable_count,
            clauses,
        })
    }

    /// Parses one clause per line, `k: l1 l2 l3`, with 1-based variables and a
    /// leading minus for negation. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, FormulaError> {
        let mut clauses = Vec::new();
        let mut n = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let syntax = |message: &str| FormulaError::Syntax {
                line,
                message: message.to_string(),
            };
            let (kind, rest) = body.split_once(':').ok_or_else(|| syntax("expected `k: l1 l2 l3`"))?;
            let kind: u8 = kind.trim().parse().map_err(|_| syntax("clause kind is not a number"))?;
            let lits: Vec<i64> = rest
                .split_whitespace()
                .map(|t| t.parse::<i64>())
                .collect::<Result<_, _>>()
                .map_err(|_| syntax("literal is not an integer"))?;
            if lits.len() != 3 {
                return Err(syntax("a clause has exactly three literals"));
            }
            let mut literals = [Literal::pos(0); 3];
            for (slot, &l) in literals.iter_mut().zip(&lits) {
                if l == 0 {
                    return Err(syntax("variables are numbered from 1"));
                }
                let var = (l.unsigned_abs() - 1) as usize;
                n = n.max(var + 1);
                *slot = Literal { var, positive: l > 0 };
            }
            clauses.push(Clause { literals, kind });
        }
        SatStarFormula::new(n, clauses)
    }

    /// The smallest formula of the class, over three variables.
    pub fn minimal() -> Self {
        let c = |a: Literal, b: Literal, d: Literal, kind| Clause {
            literals: [a, b, d],
            kind,
        };
        use Literal as L;
        SatStarFormula::new(
            3,
            vec![
                c(L::pos(0), L::pos(1), L::neg(2), 1),
                c(L::neg(0), L::pos(1), L::pos(2), 1),
                c(L::pos(0), L::neg(1), L::neg(2), 2),
                c(L::neg(0), L::neg(1), L::pos(2), 2),
            ],
        )
        .expect("the minimal formula is valid")
    }

    pub fn variable_count(&self) -> usize {
        self.variable_count
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Number of 1-in-3 clauses (equal to the number of 2-in-3 clauses).
    pub fn half(&self) -> usize {
        self.clauses.len() / 2
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SatStarFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            let [a, b, d] = c.literals.map(literal_name);
            writeln!(f, "{}: {a} {b} {d}", c.kind)?;
        }
        Ok(())
    }
}

/// Occurrence slot `(j, t)` of variable `j`: `t` in 0..2 are its positive
/// occurrences, 2..4 its negative ones, each in clause scan order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceMap {
    forward: Vec<[(usize, usize); 4]>,
    inverse: Vec<[(usize, usize); 3]>,
}

impl OccurrenceMap {
    pub fn new(formula: &SatStarFormula) -> Self {
        let n = formula.variable_count();
        let mut forward = vec![[(usize::MAX, usize::MAX); 4]; n];
        let mut inverse = vec![[(usize::MAX, usize::MAX); 3]; formula.clauses().len()];
        let mut used = vec![[0usize; 2]; n];
        for (i, clause) in formula.clauses().iter().enumerate() {
            for (s, lit) in clause.literals.iter().enumerate() {
                let side = usize::from(!lit.positive);
                let t = 2 * side + used[lit.var][side];
                used[lit.var][side] += 1;
                forward[lit.var][t] = (i, s);
                inverse[i][s] = (lit.var, t);
            }
        }
        OccurrenceMap { forward, inverse }
    }

    pub fn get(&self, j: usize, t: usize) -> (usize, usize) {
        self.forward[j][t]
    }

    pub fn inverse(&self, i: usize, s: usize) -> (usize, usize) {
        self.inverse[i][s]
    }
}

pub fn kappa(formula: &SatStarFormula) -> OccurrenceMap {
    OccurrenceMap::new(formula)
}

pub fn clause_satisfied(clause: &Clause, assignment: &[bool]) -> bool {
    let trues = clause.literals.iter().filter(|l| l.value(assignment)).count();
    trues == usize::from(clause.kind)
}

pub fn evaluate(formula: &SatStarFormula, assignment: &[bool]) -> bool {
    assert_eq!(assignment.len(), formula.variable_count(), "assignment length");
    formula.clauses().iter().all(|c| clause_satisfied(c, assignment))
}

fn assignment_from_bits(n: usize, bits: u32) -> Vec<bool> {
    (0..n).map(|v| bits >> v & 1 == 1).collect()
}

/// All satisfying assignments, in increasing order of their bit encoding
/// (variable `v` is bit `v`).
pub fn all_satisfying(formula: &SatStarFormula) -> Result<Vec<Vec<bool>>, FormulaError> {
    let n = formula.variable_count();
    if n > 24 {
        return Err(FormulaError::TooManyVariables(n));
    }
    Ok((0..1u32 << n)
        .map(|bits| assignment_from_bits(n, bits))
        .filter(|a| evaluate(formula, a))
        .collect())
}

pub fn sat_brute_force(formula: &SatStarFormula) -> Result<Option<Vec<bool>>, FormulaError> {
    let n = formula.variable_count();
    if n > 24 {
        return Err(FormulaError::TooManyVariables(n));
    }
    Ok((0..1u32 << n)
        .map(|bits| assignment_from_bits(n, bits))
        .find(|a| evaluate(formula, a)))
}

/// A random formula over `n` variables (`n` a positive multiple of 3). Triples
/// that mention one variable twice are rejected and the shuffle retried.
pub fn random_formula<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SatStarFormula {
    assert!(n > 0 && n.is_multiple_of(3), "variable count must be a positive multiple of 3");
    let mut pool: Vec<Literal> = (0..n)
        .flat_map(|v| [Literal::pos(v), Literal::pos(v), Literal::neg(v), Literal::neg(v)])
        .collect();
    let clause_count = pool.len() / 3;
    loop {
        pool.shuffle(rng);
        let degenerate = pool.chunks(3).any(|c| {
            c[0].var == c[1].var || c[0].var == c[2].var || c[1].var == c[2].var
        });
        if degenerate {
            continue;
        }
        let clauses = pool
            .chunks(3)
            .enumerate()
            .map(|(i, c)| Clause {
                literals: [c[0], c[1], c[2]],
                kind: if i < clause_count / 2 { 1 } else { 2 },
            })
            .collect();
        return SatStarFormula::new(n, clauses).expect("shuffled pool keeps every count");
    }
}
