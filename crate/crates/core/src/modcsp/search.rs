//! Backtracking search with propagation at every decision.
//!
//! Variables are chosen most-constrained first (smallest candidate set,
//! lowest index on ties). Values are tried in ascending order for
//! enumeration and in a caller-seeded random order for `solve_one`.

use std::ops::ControlFlow;

use rand::seq::SliceRandom;
use rand::RngCore;

use super::{run_queue, Assignment, ConstraintSystem, DigitSet, Status, VarId};

enum ValueOrder<'a> {
    Ascending,
    Shuffled(&'a mut dyn RngCore),
}

impl ConstraintSystem {
    /// Some satisfying assignment, if one exists. The value order at each
    /// decision is drawn from `rng`.
    pub fn solve_one(&self, rng: &mut dyn RngCore) -> Option<Assignment> {
        let mut found = None;
        self.search(ValueOrder::Shuffled(rng), &mut |a| {
            found = Some(a);
            ControlFlow::Break(())
        });
        found
    }

    /// Up to `limit` distinct satisfying assignments, in ascending order of
    /// the search tree.
    pub fn enumerate_solutions(&self, limit: usize) -> Vec<Assignment> {
        let mut out = Vec::new();
        if limit == 0 {
            return out;
        }
        self.search(ValueOrder::Ascending, &mut |a| {
            out.push(a);
            if out.len() >= limit {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        out
    }

    /// Calls `visit` on every satisfying assignment until it breaks.
    pub fn for_each_solution<F>(&self, mut visit: F)
    where
        F: FnMut(Assignment) -> ControlFlow<()>,
    {
        self.search(ValueOrder::Ascending, &mut visit);
    }

    /// Calls `visit` with the values of `vars` (in the given order) for every
    /// assignment of them that extends to a full solution.
    pub fn for_each_projected<F>(&self, vars: &[VarId], mut visit: F)
    where
        F: FnMut(&[u8]) -> ControlFlow<()>,
    {
        if self.status == Status::Contradiction {
            return;
        }
        let _ = self.descend_projected(self.domains.clone(), vars, &mut visit);
    }

    fn descend_projected(
        &self,
        domains: Vec<DigitSet>,
        vars: &[VarId],
        visit: &mut dyn FnMut(&[u8]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let pick = vars
            .iter()
            .map(|v| v.index())
            .filter(|&i| domains[i].len() > 1)
            .min_by_key(|&i| (domains[i].len(), i));
        let Some(var) = pick else {
            let mut exists = false;
            let _ = self.descend(domains.clone(), &mut ValueOrder::Ascending, &mut |_| {
                exists = true;
                ControlFlow::Break(())
            });
            if exists {
                let values: Vec<u8> = vars.iter().map(|v| domains[v.index()].value().expect("fixed")).collect();
                return visit(&values);
            }
            return ControlFlow::Continue(());
        };
        for x in domains[var].iter() {
            let mut child = domains.clone();
            child[var] = DigitSet::single(x);
            let start = self.watch[var].clone();
            if run_queue(&self.props, &self.watch, &mut child, start) {
                self.descend_projected(child, vars, visit)?;
            }
        }
        ControlFlow::Continue(())
    }

    fn search(&self, mut order: ValueOrder<'_>, visit: &mut dyn FnMut(Assignment) -> ControlFlow<()>) {
        if self.status == Status::Contradiction {
            return;
        }
        let domains = self.domains.clone();
        let _ = self.descend(domains, &mut order, visit);
    }

    fn descend(
        &self,
        domains: Vec<DigitSet>,
        order: &mut ValueOrder<'_>,
        visit: &mut dyn FnMut(Assignment) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let pick = domains
            .iter()
            .enumerate()
            .filter(|(_, d)| d.len() > 1)
            .min_by_key(|(i, d)| (d.len(), *i))
            .map(|(i, _)| i);
        let Some(var) = pick else {
            let values: Vec<u8> = domains.iter().map(|d| d.value().expect("all fixed")).collect();
            let a = Assignment { values };
            if self.check(&a) {
                return visit(a);
            }
            return ControlFlow::Continue(());
        };
        let mut values: Vec<u8> = domains[var].iter().collect();
        if let ValueOrder::Shuffled(rng) = order {
            values.shuffle(*rng);
        }
        for x in values {
            let mut child = domains.clone();
            child[var] = DigitSet::single(x);
            let start = self.watch[var].clone();
            if run_queue(&self.props, &self.watch, &mut child, start) {
                self.descend(child, order, visit)?;
            }
        }
        ControlFlow::Continue(())
    }
}
