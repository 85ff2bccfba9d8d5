//! A small finite-domain constraint engine over base-10 modular arithmetic.
//!
//! Variables are the entries of symbolic functions (`f[A]`, `f[B]`, ...) and
//! of digit permutations (`g[0]`, ..., `g[9]`). Every variable ranges over a
//! subset of `0..=9`. Supported constraints are the shapes produced by the
//! schemas in this crate:
//!
//! * `ModEq`: a linear sum of entries plus a constant is congruent to a digit,
//! * `Member`: such a sum lies in a digit set,
//! * `PermEq`: a permutation applied to such a sum yields a digit,
//! * `Or`: at least one of several constraint sets holds.
//!
//! Propagation enforces generalized arc consistency on each linear constraint,
//! all-different pruning on bijective permutations, and constructive
//! disjunction on `Or`. Systems are plain values: cloning one gives an
//! independent copy, which is how the search and the attackers branch.

mod domain;
mod search;

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use domain::DigitSet;

use crate::schema::letter_char;

/// Default bound on the number of alternatives in one `Or`.
pub const DEFAULT_OR_WIDTH: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CspError {
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("disjunction has {width} alternatives, limit is {limit}")]
    TooWide { width: usize, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub(crate) u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Handle to a declared function variable with one entry per letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FuncVar {
    base: u32,
    size: u32,
}

impl FuncVar {
    pub fn at(&self, entry: usize) -> VarId {
        assert!(entry < self.size as usize, "entry {entry} out of range");
        VarId(self.base + entry as u32)
    }

    pub fn size(&self) -> usize {
        self.size as usize
    }

    pub fn entries(&self) -> impl Iterator<Item = VarId> {
        let base = self.base;
        (0..self.size).map(move |i| VarId(base + i))
    }
}

/// Handle to a declared permutation of the digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PermVar {
    base: u32,
    bijective: bool,
}

impl PermVar {
    pub fn at(&self, x: u8) -> VarId {
        assert!(x < 10);
        VarId(self.base + x as u32)
    }

    pub fn is_bijective(&self) -> bool {
        self.bijective
    }

    pub fn entries(&self) -> impl Iterator<Item = VarId> {
        let base = self.base;
        (0..10).map(move |i| VarId(base + i))
    }
}

/// `sum(coef * var) + constant`, with each variable appearing at most once.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinExpr {
    terms: Vec<(VarId, u8)>,
    constant: u8,
}

impl LinExpr {
    pub fn constant(c: u8) -> Self {
        LinExpr { terms: Vec::new(), constant: c % 10 }
    }

    pub fn var(v: VarId) -> Self {
        LinExpr::sum([v])
    }

    /// Sum of the given entries; repeats accumulate as coefficients.
    pub fn sum<I: IntoIterator<Item = VarId>>(vars: I) -> Self {
        vars.into_iter().fold(LinExpr::default(), |e, v| e.plus_var(v))
    }

    pub fn plus_var(self, v: VarId) -> Self {
        self.plus_term(v, 1)
    }

    pub fn plus_term(mut self, v: VarId, coef: u8) -> Self {
        match self.terms.binary_search_by_key(&v, |t| t.0) {
            Ok(i) => {
                self.terms[i].1 = (self.terms[i].1 + coef) % 10;
                if self.terms[i].1 == 0 {
                    self.terms.remove(i);
                }
            }
            Err(i) => {
                if coef % 10 != 0 {
                    self.terms.insert(i, (v, coef % 10));
                }
            }
        }
        self
    }

    pub fn plus_const(mut self, c: u8) -> Self {
        self.constant = (self.constant + c % 10) % 10;
        self
    }

    pub fn terms(&self) -> &[(VarId, u8)] {
        &self.terms
    }

    pub fn constant_term(&self) -> u8 {
        self.constant
    }

    pub fn eval(&self, values: &[u8]) -> u8 {
        self.terms
            .iter()
            .fold(self.constant as u32, |acc, &(v, c)| acc + c as u32 * values[v.index()] as u32)
            as u8
            % 10
    }

    fn range(&self, domains: &[DigitSet]) -> DigitSet {
        self.terms
            .iter()
            .fold(DigitSet::single(self.constant), |acc, &(v, c)| acc.add(domains[v.index()].scale(c)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Constraint {
    /// `expr ≡ value (mod 10)`
    ModEq { expr: LinExpr, value: u8 },
    /// `expr mod 10 ∈ allowed`
    Member { expr: LinExpr, allowed: DigitSet },
    /// `perm(expr mod 10) = value`
    PermEq { perm: PermVar, expr: LinExpr, value: u8 },
    /// At least one of the constraint sets holds.
    Or(Vec<Vec<Constraint>>),
}

impl Constraint {
    pub fn mod_eq(expr: LinExpr, value: u8) -> Self {
        Constraint::ModEq { expr, value: value % 10 }
    }

    pub fn member(expr: LinExpr, allowed: DigitSet) -> Self {
        Constraint::Member { expr, allowed }
    }

    pub fn perm_eq(perm: PermVar, expr: LinExpr, value: u8) -> Self {
        Constraint::PermEq { perm, expr, value: value % 10 }
    }

    /// Whether a complete assignment satisfies the constraint.
    pub fn holds(&self, values: &[u8]) -> bool {
        match self {
            Constraint::ModEq { expr, value } => expr.eval(values) == *value,
            Constraint::Member { expr, allowed } => allowed.contains(expr.eval(values)),
            Constraint::PermEq { perm, expr, value } => {
                values[perm.at(expr.eval(values)).index()] == *value
            }
            Constraint::Or(alts) => alts.iter().any(|set| set.iter().all(|c| c.holds(values))),
        }
    }

    fn visit_vars(&self, out: &mut Vec<VarId>) {
        match self {
            Constraint::ModEq { expr, .. } | Constraint::Member { expr, .. } => {
                out.extend(expr.terms.iter().map(|t| t.0))
            }
            Constraint::PermEq { perm, expr, .. } => {
                out.extend(expr.terms.iter().map(|t| t.0));
                out.extend(perm.entries());
            }
            Constraint::Or(alts) => {
                for c in alts.iter().flatten() {
                    c.visit_vars(out);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Consistent,
    Contradiction,
}

#[derive(Debug)]
enum Prop {
    Constraint(Constraint),
    AllDifferent(PermVar),
}

#[derive(Debug, Clone)]
struct VarInfo {
    name: String,
}

/// A complete assignment of every declared variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    values: Vec<u8>,
}

impl Assignment {
    pub fn get(&self, v: VarId) -> u8 {
        self.values[v.index()]
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn func_values(&self, f: &FuncVar) -> Vec<u8> {
        f.entries().map(|v| self.get(v)).collect()
    }

    pub fn perm_values(&self, g: &PermVar) -> [u8; 10] {
        let mut out = [0u8; 10];
        for (x, v) in g.entries().enumerate() {
            out[x] = self.get(v);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    vars: Vec<VarInfo>,
    perms: Vec<PermVar>,
    domains: Vec<DigitSet>,
    props: Vec<Arc<Prop>>,
    watch: Vec<Vec<u32>>,
    status: Status,
    or_width_limit: usize,
}

impl Default for ConstraintSystem {
    fn default() -> Self {
        ConstraintSystem::new()
    }
}

impl ConstraintSystem {
    pub fn new() -> Self {
        ConstraintSystem::with_or_width(DEFAULT_OR_WIDTH)
    }

    pub fn with_or_width(limit: usize) -> Self {
        ConstraintSystem {
            vars: Vec::new(),
            perms: Vec::new(),
            domains: Vec::new(),
            props: Vec::new(),
            watch: Vec::new(),
            status: Status::Consistent,
            or_width_limit: limit,
        }
    }

    /// Declares a function over `size` letters with unrestricted entries.
    pub fn declare_func(&mut self, name: &str, size: usize) -> FuncVar {
        self.declare_func_with(name, vec![DigitSet::ALL; size])
    }

    pub fn declare_func_with(&mut self, name: &str, domains: Vec<DigitSet>) -> FuncVar {
        let base = self.vars.len() as u32;
        for (i, d) in domains.into_iter().enumerate() {
            let entry = if i < 26 { letter_char(i as u8).to_string() } else { i.to_string() };
            self.push_var(format!("{name}[{entry}]"), d);
        }
        FuncVar { base, size: self.vars.len() as u32 - base }
    }

    /// Declares a digit permutation. With `bijective`, full assignments must
    /// be bijections on `0..=9`.
    pub fn declare_perm(&mut self, name: &str, bijective: bool) -> PermVar {
        self.declare_perm_with(name, [DigitSet::ALL; 10], bijective)
    }

    pub fn declare_perm_with(&mut self, name: &str, domains: [DigitSet; 10], bijective: bool) -> PermVar {
        let base = self.vars.len() as u32;
        for (x, d) in domains.into_iter().enumerate() {
            self.push_var(format!("{name}[{x}]"), d);
        }
        let perm = PermVar { base, bijective };
        self.perms.push(perm);
        if bijective {
            let idx = self.props.len() as u32;
            self.props.push(Arc::new(Prop::AllDifferent(perm)));
            for v in perm.entries() {
                self.watch[v.index()].push(idx);
            }
            self.propagate_from(vec![idx]);
        }
        perm
    }

    fn push_var(&mut self, name: String, domain: DigitSet) {
        self.vars.push(VarInfo { name });
        self.domains.push(domain);
        self.watch.push(Vec::new());
        if domain.is_empty() {
            self.status = Status::Contradiction;
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn candidates(&self, v: VarId) -> DigitSet {
        self.domains[v.index()]
    }

    pub fn domains(&self) -> &[DigitSet] {
        &self.domains
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.vars[v.index()].name
    }

    /// Product of the candidate-set sizes.
    pub fn assignment_count(&self) -> u128 {
        self.domains.iter().fold(1u128, |acc, d| acc.saturating_mul(d.len() as u128))
    }

    pub fn constraints(&self) -> impl Iterator<Item = &Constraint> {
        self.props.iter().filter_map(|p| match p.as_ref() {
            Prop::Constraint(c) => Some(c),
            Prop::AllDifferent(_) => None,
        })
    }

    fn validate(&self, c: &Constraint) -> Result<(), CspError> {
        let n = self.vars.len() as u32;
        let check_expr = |e: &LinExpr| match e.terms.iter().find(|t| t.0 .0 >= n) {
            Some(t) => Err(CspError::InvalidConstraint(format!("variable #{} is not declared", t.0 .0))),
            None => Ok(()),
        };
        match c {
            Constraint::ModEq { expr, value } => {
                if *value > 9 {
                    return Err(CspError::InvalidConstraint(format!("{value} is not a digit")));
                }
                check_expr(expr)
            }
            Constraint::Member { expr, allowed } => {
                if allowed.is_empty() {
                    return Err(CspError::InvalidConstraint("membership set is empty".into()));
                }
                check_expr(expr)
            }
            Constraint::PermEq { perm, expr, value } => {
                if !self.perms.contains(perm) {
                    return Err(CspError::InvalidConstraint("permutation is not declared".into()));
                }
                if *value > 9 {
                    return Err(CspError::InvalidConstraint(format!("{value} is not a digit")));
                }
                check_expr(expr)
            }
            Constraint::Or(alts) => {
                if alts.is_empty() {
                    return Err(CspError::InvalidConstraint("disjunction has no alternatives".into()));
                }
                if alts.len() > self.or_width_limit {
                    return Err(CspError::TooWide { width: alts.len(), limit: self.or_width_limit });
                }
                alts.iter().flatten().try_for_each(|c| self.validate(c))
            }
        }
    }

    /// Stores `c` and propagates to a fixpoint.
    pub fn add_constraint(&mut self, c: Constraint) -> Result<Status, CspError> {
        self.validate(&c)?;
        let idx = self.props.len() as u32;
        let mut vars = Vec::new();
        c.visit_vars(&mut vars);
        vars.sort_unstable();
        vars.dedup();
        for v in vars {
            self.watch[v.index()].push(idx);
        }
        self.props.push(Arc::new(Prop::Constraint(c)));
        Ok(self.propagate_from(vec![idx]))
    }

    pub fn add_all<I: IntoIterator<Item = Constraint>>(&mut self, cs: I) -> Result<Status, CspError> {
        for c in cs {
            self.add_constraint(c)?;
        }
        Ok(self.status)
    }

    /// Restricts one variable's candidates.
    pub fn restrict(&mut self, v: VarId, allowed: DigitSet) -> Status {
        if self.status == Status::Contradiction {
            return self.status;
        }
        let old = self.domains[v.index()];
        let new = old.intersect(allowed);
        if new != old {
            self.domains[v.index()] = new;
            if new.is_empty() {
                self.status = Status::Contradiction;
                return self.status;
            }
            let start = self.watch[v.index()].clone();
            return self.propagate_from(start);
        }
        self.status
    }

    /// Removes candidates without support until a fixpoint is reached.
    pub fn propagate(&mut self) -> Status {
        let all = (0..self.props.len() as u32).collect();
        self.propagate_from(all)
    }

    fn propagate_from(&mut self, start: Vec<u32>) -> Status {
        if self.status == Status::Contradiction {
            return self.status;
        }
        let ok = run_queue(&self.props, &self.watch, &mut self.domains, start);
        if !ok {
            self.status = Status::Contradiction;
        }
        self.status
    }

    /// Independent evaluation of every constraint on a full assignment.
    pub fn check(&self, a: &Assignment) -> bool {
        if a.values.len() != self.vars.len() {
            return false;
        }
        let in_domain = a.values.iter().zip(&self.domains).all(|(&x, d)| d.contains(x));
        in_domain
            && self.props.iter().all(|p| match p.as_ref() {
                Prop::Constraint(c) => c.holds(&a.values),
                Prop::AllDifferent(g) => {
                    let mut seen = DigitSet::EMPTY;
                    g.entries().all(|v| {
                        let x = a.get(v);
                        let fresh = !seen.contains(x);
                        seen.insert(x);
                        fresh
                    })
                }
            })
    }

    /// One constraint per line, in insertion order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for c in self.constraints() {
            out.push_str(&self.render(c));
            out.push('\n');
        }
        out
    }

    fn render_expr(&self, e: &LinExpr) -> String {
        let mut parts: Vec<String> = e
            .terms
            .iter()
            .map(|&(v, c)| if c == 1 { self.var_name(v).to_string() } else { format!("{c}*{}", self.var_name(v)) })
            .collect();
        if e.constant != 0 || parts.is_empty() {
            parts.push(e.constant.to_string());
        }
        parts.join(" + ")
    }

    fn render(&self, c: &Constraint) -> String {
        match c {
            Constraint::ModEq { expr, value } => format!("{} == {value} (mod 10)", self.render_expr(expr)),
            Constraint::Member { expr, allowed } => format!("{} in {allowed} (mod 10)", self.render_expr(expr)),
            Constraint::PermEq { perm, expr, value } => {
                let name = self.var_name(perm.at(0));
                let name = name.split('[').next().unwrap_or(name);
                format!("{name}({}) == {value}", self.render_expr(expr))
            }
            Constraint::Or(alts) => {
                let rendered: Vec<String> = alts
                    .iter()
                    .map(|set| set.iter().map(|c| self.render(c)).collect::<Vec<_>>().join(" and "))
                    .collect();
                format!("OR [ {} ]", rendered.join(" | "))
            }
        }
    }
}

impl fmt::Display for ConstraintSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

fn run_queue(props: &[Arc<Prop>], watch: &[Vec<u32>], domains: &mut [DigitSet], start: Vec<u32>) -> bool {
    let mut queued = vec![false; props.len()];
    let mut queue: VecDeque<u32> = VecDeque::with_capacity(start.len());
    for i in start {
        if !queued[i as usize] {
            queued[i as usize] = true;
            queue.push_back(i);
        }
    }
    let mut changed = Vec::new();
    while let Some(i) = queue.pop_front() {
        queued[i as usize] = false;
        changed.clear();
        if !revise(&props[i as usize], domains, &mut changed) {
            return false;
        }
        for v in changed.drain(..) {
            for &j in &watch[v.index()] {
                if j != i && !queued[j as usize] {
                    queued[j as usize] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    true
}

fn set_domain(domains: &mut [DigitSet], v: VarId, new: DigitSet, changed: &mut Vec<VarId>) -> bool {
    let slot = &mut domains[v.index()];
    if *slot != new {
        *slot = new;
        changed.push(v);
    }
    !new.is_empty()
}

fn revise(p: &Prop, domains: &mut [DigitSet], changed: &mut Vec<VarId>) -> bool {
    match p {
        Prop::Constraint(c) => revise_constraint(c, domains, changed),
        Prop::AllDifferent(g) => revise_all_different(g, domains, changed),
    }
}

fn revise_constraint(c: &Constraint, domains: &mut [DigitSet], changed: &mut Vec<VarId>) -> bool {
    match c {
        Constraint::ModEq { expr, value } => revise_linear(expr, DigitSet::single(*value), domains, changed),
        Constraint::Member { expr, allowed } => revise_linear(expr, *allowed, domains, changed),
        Constraint::PermEq { perm, expr, value } => {
            let reachable = expr.range(domains);
            let allowed: DigitSet = reachable.iter().filter(|&x| domains[perm.at(x).index()].contains(*value)).collect();
            if allowed.is_empty() {
                return false;
            }
            if !revise_linear(expr, allowed, domains, changed) {
                return false;
            }
            if let Some(x) = expr.range(domains).intersect(allowed).value() {
                let v = perm.at(x);
                let new = domains[v.index()].intersect(DigitSet::single(*value));
                return set_domain(domains, v, new, changed);
            }
            true
        }
        Constraint::Or(alts) => revise_or(alts, domains, changed),
    }
}

/// Generalized arc consistency for `expr mod 10 ∈ allowed`.
fn revise_linear(expr: &LinExpr, allowed: DigitSet, domains: &mut [DigitSet], changed: &mut Vec<VarId>) -> bool {
    let n = expr.terms.len();
    let target = allowed.shift(10 - expr.constant);
    if n == 0 {
        return target.contains(0);
    }
    let scaled: Vec<DigitSet> = expr.terms.iter().map(|&(v, c)| domains[v.index()].scale(c)).collect();
    // prefix[i] = sum of terms < i, suffix[i] = sum of terms >= i
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(DigitSet::single(0));
    for s in &scaled {
        let last = *prefix.last().unwrap();
        prefix.push(last.add(*s));
    }
    if prefix[n].intersect(target).is_empty() {
        return false;
    }
    let mut suffix = vec![DigitSet::single(0); n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1].add(scaled[i]);
    }
    for (i, &(v, c)) in expr.terms.iter().enumerate() {
        let others = prefix[i].add(suffix[i + 1]);
        if others == DigitSet::ALL {
            continue;
        }
        // value x survives iff c*x ∈ target - others
        let need = target.add(others.negate());
        let dom = domains[v.index()];
        let kept: DigitSet = dom.iter().filter(|&x| need.contains((c * x) % 10)).collect();
        if kept != dom && !set_domain(domains, v, kept, changed) {
            return false;
        }
    }
    true
}

fn revise_all_different(g: &PermVar, domains: &mut [DigitSet], changed: &mut Vec<VarId>) -> bool {
    let vars: Vec<VarId> = g.entries().collect();
    loop {
        let mut progress = false;
        let mut union = DigitSet::EMPTY;
        for &v in &vars {
            union = union.union(domains[v.index()]);
            if let Some(x) = domains[v.index()].value() {
                for &w in &vars {
                    if w != v && domains[w.index()].contains(x) {
                        let mut d = domains[w.index()];
                        d.remove(x);
                        if !set_domain(domains, w, d, changed) {
                            return false;
                        }
                        progress = true;
                    }
                }
            }
        }
        if union != DigitSet::ALL {
            return false;
        }
        // a digit with a single possible position is forced there
        for x in 0..10u8 {
            let mut holders = vars.iter().filter(|v| domains[v.index()].contains(x));
            let Some(&first) = holders.next() else {
                return false;
            };
            if holders.next().is_none() && domains[first.index()] != DigitSet::single(x) {
                if !set_domain(domains, first, DigitSet::single(x), changed) {
                    return false;
                }
                progress = true;
            }
        }
        if !progress {
            return true;
        }
    }
}

fn revise_or(alts: &[Vec<Constraint>], domains: &mut [DigitSet], changed: &mut Vec<VarId>) -> bool {
    let mut vars = Vec::new();
    for c in alts.iter().flatten() {
        c.visit_vars(&mut vars);
    }
    vars.sort_unstable();
    vars.dedup();
    let mut union: Vec<DigitSet> = vec![DigitSet::EMPTY; vars.len()];
    let mut any = false;
    let mut scratch = Vec::new();
    for set in alts {
        let mut local = domains.to_vec();
        if local_fixpoint(set, &mut local, &mut scratch) {
            any = true;
            for (u, v) in union.iter_mut().zip(&vars) {
                *u = u.union(local[v.index()]);
            }
        }
    }
    if !any {
        return false;
    }
    for (u, &v) in union.iter().zip(&vars) {
        let new = domains[v.index()].intersect(*u);
        if !set_domain(domains, v, new, changed) {
            return false;
        }
    }
    true
}

fn local_fixpoint(set: &[Constraint], domains: &mut [DigitSet], scratch: &mut Vec<VarId>) -> bool {
    loop {
        scratch.clear();
        for c in set {
            if !revise_constraint(c, domains, scratch) {
                return false;
            }
        }
        if scratch.is_empty() {
            return true;
        }
    }
}
