//! The extended assignment LP for a candidate makespan and an exact simplex to decide it.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::model::{Eligibility, RaiInstance};

pub type Rational = BigRational;

pub fn rational(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn integer(value: u64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("gamma must be positive (gamma = {0})")]
    GammaNotPositive(Rational),
    #[error("xi must be positive (xi = {0})")]
    XiNotPositive(Rational),
    #[error("gamma <= xi fails (gamma = {gamma}, xi = {xi})")]
    GammaAboveXi { gamma: Rational, xi: Rational },
    #[error("gamma + xi <= 1/12 fails (gamma + xi = {0})")]
    SumTooLarge(Rational),
    #[error("8 xi + 7 gamma <= 3/4 fails (8 xi + 7 gamma = {0})")]
    WeightedSumTooLarge(Rational),
}

/// The rounding thresholds: xi splits large from huge jobs, gamma sets the load cap `(2 - gamma) T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundingParams {
    gamma: Rational,
    xi: Rational,
}

impl RoundingParams {
    #[allow(clippy::result_large_err)]
    pub fn new(gamma: Rational, xi: Rational) -> Result<Self, ParamError> {
        if !gamma.is_positive() {
            return Err(ParamError::GammaNotPositive(gamma));
        }
        if !xi.is_positive() {
            return Err(ParamError::XiNotPositive(xi));
        }
        if gamma > xi {
            return Err(ParamError::GammaAboveXi { gamma, xi });
        }
        let sum = &gamma + &xi;
        if sum > rational(1, 12) {
            return Err(ParamError::SumTooLarge(sum));
        }
        let weighted = &xi * integer(8) + &gamma * integer(7);
        if weighted > rational(3, 4) {
            return Err(ParamError::WeightedSumTooLarge(weighted));
        }
        Ok(RoundingParams { gamma, xi })
    }

    pub fn gamma(&self) -> &Rational {
        &self.gamma
    }

    pub fn xi(&self) -> &Rational {
        &self.xi
    }

    /// `(2 - gamma) T`, the per-machine load cap of the rounding.
    pub fn load_cap(&self, t: u64) -> Rational {
        (integer(2) - &self.gamma) * integer(t)
    }
}

impl Default for RoundingParams {
    fn default() -> Self {
        RoundingParams {
            gamma: rational(1, 24),
            xi: rational(1, 24),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum SizeClass {
    Small,
    Large,
    Huge,
}

impl SizeClass {
    pub fn is_big(self) -> bool {
        self != SizeClass::Small
    }
}

pub fn classify(size: u64, t: u64, xi: &Rational) -> SizeClass {
    if 2 * u128::from(size) <= u128::from(t) {
        SizeClass::Small
    } else if integer(size) <= (rational(1, 2) + xi) * integer(t) {
        SizeClass::Large
    } else {
        SizeClass::Huge
    }
}

pub fn classes(inst: &RaiInstance, t: u64, xi: &Rational) -> Vec<SizeClass> {
    inst.jobs().iter().map(|j| classify(j.size, t, xi)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("interval [{l}, {r}] is empty or outside the machine range")]
    BadInterval { l: usize, r: usize },
    #[error("the candidate makespan must be positive")]
    ZeroTarget,
}

/// Bound on the number of huge jobs inside machines `l..=r`; may be negative.
pub fn ub(inst: &RaiInstance, t: u64, xi: &Rational, l: usize, r: usize) -> Result<BigInt, LpError> {
    if l > r || r >= inst.machine_count() {
        return Err(LpError::BadInterval { l, r });
    }
    if t == 0 {
        return Err(LpError::ZeroTarget);
    }
    let small: u64 = inst
        .jobs()
        .iter()
        .filter(|j| l <= j.first && j.last <= r && classify(j.size, t, xi) == SizeClass::Small)
        .map(|j| j.size)
        .sum();
    Ok(ub_value(t, r - l + 1, small, xi))
}

fn ub_value(t: u64, len: usize, small_load: u64, xi: &Rational) -> BigInt {
    let numer = BigInt::from(t) * BigInt::from(len) - BigInt::from(small_load);
    let denom = (rational(1, 2) + xi) * integer(t);
    (Rational::from_integer(numer) / denom).floor().to_integer()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowKind {
    /// Each job is placed exactly once.
    Assign { job: usize },
    /// Machine load at most T.
    Capacity { machine: usize },
    /// At most one job larger than T/2 per machine.
    Big { machine: usize },
    /// Huge jobs inside an interval bounded by `ub`.
    Huge { l: usize, r: usize },
}

impl fmt::Display for RowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowKind::Assign { job } => write!(f, "c1_{job}"),
            RowKind::Capacity { machine } => write!(f, "c2_{machine}"),
            RowKind::Big { machine } => write!(f, "c4_{machine}"),
            RowKind::Huge { l, r } => write!(f, "c5_{l}_{r}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Le,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub kind: RowKind,
    pub coeffs: Vec<(usize, Rational)>,
    pub sense: Sense,
    pub rhs: Rational,
}

#[derive(Debug, Clone)]
pub struct LpModel {
    t: u64,
    machine_count: usize,
    classes: Vec<SizeClass>,
    /// `(machine, job)` per variable.
    variables: Vec<(usize, usize)>,
    rows: Vec<Row>,
}

impl LpModel {
    pub fn target(&self) -> u64 {
        self.t
    }

    pub fn variables(&self) -> &[(usize, usize)] {
        &self.variables
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn classes(&self) -> &[SizeClass] {
        &self.classes
    }

    pub fn row(&self, kind: RowKind) -> Option<&Row> {
        self.rows.iter().find(|r| r.kind == kind)
    }

    /// Plain-text dump in an LP-like format.
    pub fn to_lp_text(&self) -> String {
        let mut out = format!("\\ candidate makespan {}\nsubject to\n", self.t);
        for row in &self.rows {
            let lhs = if row.coeffs.is_empty() {
                "0".to_string()
            } else {
                row.coeffs
                    .iter()
                    .map(|(v, c)| {
                        let (i, j) = self.variables[*v];
                        if c.is_one() {
                            format!("x_{i}_{j}")
                        } else {
                            format!("{c} x_{i}_{j}")
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(" + ")
            };
            let op = match row.sense {
                Sense::Eq => "=",
                Sense::Le => "<=",
            };
            out.push_str(&format!(" {}: {} {} {}\n", row.kind, lhs, op, row.rhs));
        }
        out.push_str("bounds\n");
        for (i, j) in &self.variables {
            out.push_str(&format!(" 0 <= x_{i}_{j} <= 1\n"));
        }
        out.push_str("end\n");
        out
    }
}

/// Builds the LP for candidate makespan `t`.
///
/// Jobs larger than `t` get no variables, so their assignment row cannot be met.
#[allow(clippy::needless_range_loop)]
pub fn build_lp(inst: &RaiInstance, t: u64, params: &RoundingParams) -> LpModel {
    let m = inst.machine_count();
    let classes = if t == 0 {
        vec![SizeClass::Huge; inst.job_count()]
    } else {
        classes(inst, t, params.xi())
    };
    let mut variables = Vec::new();
    let mut by_job: Vec<Vec<usize>> = vec![Vec::new(); inst.job_count()];
    let mut by_machine: Vec<Vec<usize>> = vec![Vec::new(); m];
    for job in inst.jobs() {
        if job.size > t {
            continue;
        }
        for i in job.first..=job.last {
            let v = variables.len();
            variables.push((i, job.id));
            by_job[job.id].push(v);
            by_machine[i].push(v);
        }
    }

    let mut rows = Vec::new();
    for (job, vars) in by_job.iter().enumerate() {
        rows.push(Row {
            kind: RowKind::Assign { job },
            coeffs: vars.iter().map(|&v| (v, Rational::one())).collect(),
            sense: Sense::Eq,
            rhs: Rational::one(),
        });
    }
    for (machine, vars) in by_machine.iter().enumerate() {
        rows.push(Row {
            kind: RowKind::Capacity { machine },
            coeffs: vars
                .iter()
                .map(|&v| (v, integer(inst.size(variables[v].1))))
                .collect(),
            sense: Sense::Le,
            rhs: integer(t),
        });
    }
    if t == 0 {
        return LpModel {
            t,
            machine_count: m,
            classes,
            variables,
            rows,
        };
    }
    for (machine, vars) in by_machine.iter().enumerate() {
        let coeffs: Vec<_> = vars
            .iter()
            .filter(|&&v| classes[variables[v].1].is_big())
            .map(|&v| (v, Rational::one()))
            .collect();
        if !coeffs.is_empty() {
            rows.push(Row {
                kind: RowKind::Big { machine },
                coeffs,
                sense: Sense::Le,
                rhs: Rational::one(),
            });
        }
    }
    if classes.contains(&SizeClass::Huge) {
        let small = small_loads(inst, &classes);
        for l in 0..m {
            for r in l..m {
                let coeffs: Vec<_> = (l..=r)
                    .flat_map(|i| by_machine[i].iter())
                    .filter(|&&v| classes[variables[v].1] == SizeClass::Huge)
                    .map(|&v| (v, Rational::one()))
                    .collect();
                let bound = ub_value(t, r - l + 1, small[l][r - l], params.xi());
                rows.push(Row {
                    kind: RowKind::Huge { l, r },
                    coeffs,
                    sense: Sense::Le,
                    rhs: Rational::from_integer(bound),
                });
            }
        }
    }
    LpModel {
        t,
        machine_count: m,
        classes,
        variables,
        rows,
    }
}

/// `small[l][r - l]` is the size of the small jobs contained in `l..=r`.
fn small_loads(inst: &RaiInstance, classes: &[SizeClass]) -> Vec<Vec<u64>> {
    let m = inst.machine_count();
    let mut ending: Vec<Vec<(usize, u64)>> = vec![Vec::new(); m];
    for job in inst.jobs() {
        if classes[job.id] == SizeClass::Small {
            ending[job.last].push((job.first, job.size));
        }
    }
    (0..m)
        .map(|l| {
            let mut acc = 0;
            (l..m)
                .map(|r| {
                    acc += ending[r]
                        .iter()
                        .filter(|(first, _)| *first >= l)
                        .map(|(_, p)| p)
                        .sum::<u64>();
                    acc
                })
                .collect()
        })
        .collect()
}

/// An exact fractional solution certifying candidate makespan `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalAssignment {
    t: u64,
    machine_count: usize,
    /// Nonzero entries keyed by `(machine, job)`.
    x: BTreeMap<(usize, usize), Rational>,
}

impl FractionalAssignment {
    pub fn new(t: u64, machine_count: usize, x: BTreeMap<(usize, usize), Rational>) -> Self {
        let x = x.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        FractionalAssignment {
            t,
            machine_count,
            x,
        }
    }

    pub fn target(&self) -> u64 {
        self.t
    }

    pub fn value(&self, machine: usize, job: usize) -> Rational {
        self.x
            .get(&(machine, job))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn entries(&self) -> &BTreeMap<(usize, usize), Rational> {
        &self.x
    }

    /// Per-machine fractional count of jobs of the given classes.
    pub fn class_mass(&self, classes: &[SizeClass], wanted: &[SizeClass]) -> Vec<Rational> {
        let mut mass = vec![Rational::zero(); self.machine_count];
        for (&(i, j), v) in &self.x {
            if wanted.contains(&classes[j]) {
                mass[i] += v;
            }
        }
        mass
    }
}

/// Solves the model with a phase-one simplex; `None` when infeasible.
pub fn solve_feasibility(model: &LpModel) -> Option<FractionalAssignment> {
    let values = simplex::find_feasible(model.variables.len(), &model.rows)?;
    let x = model
        .variables
        .iter()
        .zip(values)
        .filter(|(_, v)| !v.is_zero())
        .map(|(&key, v)| (key, v))
        .collect();
    Some(FractionalAssignment::new(model.t, model.machine_count, x))
}

/// Convenience wrapper: build and solve at `t`.
pub fn feasible_at(inst: &RaiInstance, t: u64, params: &RoundingParams) -> Option<FractionalAssignment> {
    solve_feasibility(&build_lp(inst, t, params))
}

/// Re-evaluates every LP constraint from the instance alone; returns the violated ones.
pub fn check_constraints(
    inst: &RaiInstance,
    params: &RoundingParams,
    x: &FractionalAssignment,
) -> Vec<String> {
    let t = x.target();
    let m = inst.machine_count();
    let mut bad = Vec::new();
    for (&(i, j), v) in x.entries() {
        if j >= inst.job_count() || i >= m {
            bad.push(format!("x_{i}_{j} refers to a missing job or machine"));
            continue;
        }
        if v.is_negative() || *v > Rational::one() {
            bad.push(format!("x_{i}_{j} = {v} outside [0, 1]"));
        }
        if !inst.is_eligible(j, i) {
            bad.push(format!("x_{i}_{j} = {v} on an ineligible machine"));
        }
    }
    let mut placed = vec![Rational::zero(); inst.job_count()];
    let mut load = vec![Rational::zero(); m];
    for (&(i, j), v) in x.entries() {
        if j < inst.job_count() && i < m {
            placed[j] += v;
            load[i] += v * integer(inst.size(j));
        }
    }
    for (j, total) in placed.iter().enumerate() {
        if !total.is_one() {
            bad.push(format!("job {j} is placed {total} times"));
        }
    }
    for (i, l) in load.iter().enumerate() {
        if *l > integer(t) {
            bad.push(format!("machine {i} has fractional load {l} > {t}"));
        }
    }
    if t == 0 {
        return bad;
    }
    let class: Vec<SizeClass> = inst
        .jobs()
        .iter()
        .map(|j| classify(j.size, t, params.xi()))
        .collect();
    let big = x.class_mass(&class, &[SizeClass::Large, SizeClass::Huge]);
    for (i, b) in big.iter().enumerate() {
        if *b > Rational::one() {
            bad.push(format!("machine {i} holds {b} jobs larger than T/2"));
        }
    }
    let huge = x.class_mass(&class, &[SizeClass::Huge]);
    for l in 0..m {
        let mut acc = Rational::zero();
        for (r, h) in huge.iter().enumerate().skip(l) {
            acc += h;
            let small: u64 = inst
                .jobs()
                .iter()
                .filter(|job| l <= job.first && job.last <= r && class[job.id] == SizeClass::Small)
                .map(|job| job.size)
                .sum();
            let numer = integer(t) * integer((r - l + 1) as u64) - integer(small);
            let bound = (numer / ((rational(1, 2) + params.xi()) * integer(t))).floor();
            if acc > bound {
                bad.push(format!("interval [{l}, {r}] holds {acc} huge jobs > {bound}"));
            }
        }
    }
    bad
}

mod simplex {
    //! Dense phase-one simplex over exact rationals with Bland's rule.

    use super::{Rational, Row, Sense};
    use num_traits::{One, Signed, Zero};

    pub fn find_feasible(var_count: usize, rows: &[Row]) -> Option<Vec<Rational>> {
        // Rows with no variables are checked directly.
        let mut active = Vec::new();
        for row in rows {
            if row.coeffs.is_empty() {
                let ok = match row.sense {
                    Sense::Eq => row.rhs.is_zero(),
                    Sense::Le => !row.rhs.is_negative(),
                };
                if !ok {
                    return None;
                }
            } else {
                active.push(row);
            }
        }
        // Upper bounds x <= 1 follow from the assignment rows, so only x >= 0 is needed.
        let slack_count = active.iter().filter(|r| r.sense == Sense::Le).count();
        let structural = var_count + slack_count;
        let mut art_rows = Vec::new();
        let mut tableau: Vec<Vec<Rational>> = Vec::with_capacity(active.len());
        let mut basis = Vec::with_capacity(active.len());
        let mut slack = var_count;
        for (r, row) in active.iter().enumerate() {
            let mut line = vec![Rational::zero(); structural + 1];
            for (v, c) in &row.coeffs {
                line[*v] += c;
            }
            let mut slack_col = None;
            if row.sense == Sense::Le {
                line[slack] = Rational::one();
                slack_col = Some(slack);
                slack += 1;
            }
            line[structural] = row.rhs.clone();
            if line[structural].is_negative() {
                for e in line.iter_mut() {
                    *e = -e.clone();
                }
            }
            match slack_col {
                Some(s) if line[s].is_one() => basis.push(s),
                _ => {
                    art_rows.push(r);
                    basis.push(usize::MAX);
                }
            }
            tableau.push(line);
        }
        // Artificial columns go after the structural ones, before the right-hand side.
        let art_count = art_rows.len();
        let width = structural + art_count + 1;
        for line in tableau.iter_mut() {
            let rhs = line.pop().expect("rhs");
            line.resize(structural + art_count, Rational::zero());
            line.push(rhs);
        }
        for (a, &r) in art_rows.iter().enumerate() {
            tableau[r][structural + a] = Rational::one();
            basis[r] = structural + a;
        }
        // Objective: minimise the sum of artificials, stored as reduced costs.
        let mut cost = vec![Rational::zero(); width];
        for &r in &art_rows {
            for (c, e) in cost.iter_mut().zip(&tableau[r]) {
                *c -= e;
            }
        }
        for a in 0..art_count {
            cost[structural + a] = Rational::zero();
        }

        loop {
            let entering = (0..width - 1).find(|&c| cost[c].is_negative());
            let Some(col) = entering else { break };
            let mut leaving: Option<(usize, Rational)> = None;
            for (r, line) in tableau.iter().enumerate() {
                if line[col].is_positive() {
                    let ratio = &line[width - 1] / &line[col];
                    let better = match &leaving {
                        None => true,
                        Some((best_r, best)) => {
                            ratio < *best || (ratio == *best && basis[r] < basis[*best_r])
                        }
                    };
                    if better {
                        leaving = Some((r, ratio));
                    }
                }
            }
            // Phase one is bounded below by zero, so a pivot row always exists.
            let (pr, _) = leaving.expect("phase one objective is bounded");
            pivot(&mut tableau, &mut cost, pr, col);
            basis[pr] = col;
        }

        if !cost[width - 1].is_zero() {
            return None;
        }
        let mut values = vec![Rational::zero(); var_count];
        for (r, &b) in basis.iter().enumerate() {
            if b < var_count {
                values[b] = tableau[r][width - 1].clone();
            }
        }
        Some(values)
    }

    fn pivot(tableau: &mut [Vec<Rational>], cost: &mut [Rational], pr: usize, col: usize) {
        let inv = tableau[pr][col].recip();
        let nonzero: Vec<usize> = tableau[pr]
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero())
            .map(|(c, _)| c)
            .collect();
        for &c in &nonzero {
            tableau[pr][c] *= &inv;
        }
        let pivot_row = tableau[pr].clone();
        for (r, line) in tableau.iter_mut().enumerate() {
            if r == pr || line[col].is_zero() {
                continue;
            }
            let factor = line[col].clone();
            for &c in &nonzero {
                let delta = &factor * &pivot_row[c];
                line[c] -= delta;
            }
        }
        if !cost[col].is_zero() {
            let factor = cost[col].clone();
            for &c in &nonzero {
                let delta = &factor * &pivot_row[c];
                cost[c] -= delta;
            }
        }
    }
}
