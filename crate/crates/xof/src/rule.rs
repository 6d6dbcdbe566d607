//! Classifiers and the macro-classifier population.
//!
//! A classifier's condition is a conjunction of code fragments: it matches
//! a state iff every CF in the list evaluates to 1. An empty condition
//! matches everything. Rule complexity is the summed leaf count of the
//! condition's CFs; rate measures (fitness per complexity unit, generality
//! per complexity unit) treat the empty condition as complexity 1 to stay
//! finite while still ranking the fully general rule as maximally cheap.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::cf::{CfEvaluator, CfId, CodeFragment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassifierId(u64);

impl ClassifierId {
    pub fn raw(self) -> u64 {
        self.0
    }
}

impl fmt::Display for ClassifierId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cl{}", self.0)
    }
}

/// One macro-classifier: a CF-conjunction condition, a class advocation,
/// and the usual accuracy-based bookkeeping.
#[derive(Debug, Clone)]
pub struct Classifier {
    id: ClassifierId,
    condition: Vec<Arc<CodeFragment>>,
    action: u8,
    complexity: u32,
    /// Expected payoff.
    pub prediction: f64,
    /// Mean absolute payoff error.
    pub error: f64,
    /// Accuracy-based macro fitness.
    pub fitness: f64,
    /// Micro-classifier count.
    pub numerosity: u32,
    /// Number of parameter updates received.
    pub experience: u64,
    /// Smoothed action-set size estimate.
    pub action_set_size: f64,
    /// Instances matched since creation.
    pub matches: u64,
    /// Instances not matched since creation.
    pub no_matches: u64,
    /// Learning step of the last GA this classifier took part in.
    pub ga_timestamp: u64,
}

impl Classifier {
    pub fn new(
        id: ClassifierId,
        condition: Vec<Arc<CodeFragment>>,
        action: u8,
        ga_timestamp: u64,
    ) -> Self {
        let complexity = condition.iter().map(|cf| cf.complexity()).sum();
        Classifier {
            id,
            condition,
            action,
            complexity,
            prediction: 0.0,
            error: 0.0,
            fitness: 0.0,
            numerosity: 1,
            experience: 0,
            action_set_size: 1.0,
            matches: 0,
            no_matches: 0,
            ga_timestamp,
        }
    }

    pub fn id(&self) -> ClassifierId {
        self.id
    }

    pub fn condition(&self) -> &[Arc<CodeFragment>] {
        &self.condition
    }

    pub fn action(&self) -> u8 {
        self.action
    }

    /// Summed leaf count over the condition; 0 for an empty condition.
    pub fn complexity(&self) -> u32 {
        self.complexity
    }

    /// Complexity with the empty condition floored to 1, for rate measures.
    pub fn complexity_floored(&self) -> u32 {
        self.complexity.max(1)
    }

    /// True iff every CF in the condition evaluates to 1.
    pub fn matches(&self, state: &[bool]) -> bool {
        self.condition.iter().all(|cf| cf.eval(state))
    }

    fn matches_cached(&self, evaluator: &mut CfEvaluator, state: &[bool]) -> bool {
        self.condition.iter().all(|cf| evaluator.eval(cf, state))
    }

    /// Fitness per complexity unit.
    pub fn fitness_rate(&self) -> f64 {
        self.fitness / self.complexity_floored() as f64
    }

    /// Empirical match probability; `None` until the first instance is seen.
    pub fn generality(&self) -> Option<f64> {
        let seen = self.matches + self.no_matches;
        if seen == 0 {
            None
        } else {
            Some(self.matches as f64 / seen as f64)
        }
    }

    /// Generality per complexity unit; `None` with zero observations.
    pub fn generality_rate(&self) -> Option<f64> {
        self.generality()
            .map(|g| g / self.complexity_floored() as f64)
    }

    pub fn micro_fitness(&self) -> f64 {
        self.fitness / self.numerosity as f64
    }

    /// Condition identity as a sorted id multiset.
    pub fn condition_ids_sorted(&self) -> Box<[CfId]> {
        let mut ids: Vec<CfId> = self.condition.iter().map(|cf| cf.id()).collect();
        ids.sort_unstable();
        ids.into_boxed_slice()
    }

    /// Structural subsumption test. `self` subsumes `other` when it
    /// advocates the same action, is experienced and accurate, and its
    /// condition's id multiset is a subset of `other`'s. Fewer conjuncts
    /// mean a logically weaker condition, so the test never over-subsumes.
    pub fn does_subsume(&self, other: &Classifier, theta_sub: u64, eps_zero: f64) -> bool {
        if self.action != other.action {
            return false;
        }
        if self.experience <= theta_sub || self.error >= eps_zero {
            return false;
        }
        multiset_subset(&self.condition_ids_sorted(), &other.condition_ids_sorted())
    }

    /// One line of the population dump: `cf,cf,...:action` then the
    /// numeric fields, tab-separated. Generality is blank until observed.
    pub fn dump_line(&self) -> String {
        let condition = self
            .condition
            .iter()
            .map(|cf| cf.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let generality = self
            .generality()
            .map(|g| format!("{g:.6}"))
            .unwrap_or_default();
        format!(
            "{condition}:{}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}\t{}",
            self.action,
            self.prediction,
            self.error,
            self.fitness,
            self.numerosity,
            self.experience,
            generality,
            self.complexity,
        )
    }
}

fn multiset_subset(sub: &[CfId], superset: &[CfId]) -> bool {
    let mut it = superset.iter();
    'outer: for id in sub {
        for candidate in it.by_ref() {
            if candidate == id {
                continue 'outer;
            }
            if candidate > id {
                return false;
            }
        }
        return false;
    }
    true
}

/// The macro-classifier population, with auxiliary indexes: position by id,
/// identity by (action, condition ids) for duplicate merging, and a
/// CF-containment index serving the CF-fitness updates.
#[derive(Debug, Default)]
pub struct Population {
    members: Vec<Classifier>,
    index_of: HashMap<ClassifierId, usize>,
    by_condition: HashMap<(u8, Box<[CfId]>), ClassifierId>,
    containing: HashMap<CfId, Vec<ClassifierId>>,
    micro: u64,
    next_id: u64,
}

impl Population {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn allocate_id(&mut self) -> ClassifierId {
        let id = ClassifierId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Macro-classifier count.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Micro-classifier count (numerosity total).
    pub fn micro_count(&self) -> u64 {
        self.micro
    }

    pub fn members(&self) -> &[Classifier] {
        &self.members
    }

    pub fn get(&self, id: ClassifierId) -> &Classifier {
        &self.members[self.index_of[&id]]
    }

    pub fn get_mut(&mut self, id: ClassifierId) -> &mut Classifier {
        let idx = self.index_of[&id];
        &mut self.members[idx]
    }

    pub fn contains(&self, id: ClassifierId) -> bool {
        self.index_of.contains_key(&id)
    }

    /// Ids of members whose condition contains the CF, in insertion order.
    pub fn classifiers_containing(&self, cf: CfId) -> &[ClassifierId] {
        self.containing.get(&cf).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Inserts a classifier; a member with the identical condition multiset
    /// and action absorbs it as numerosity instead. Returns the id that now
    /// carries the inserted micro-classifiers.
    pub fn insert(&mut self, cl: Classifier) -> ClassifierId {
        let key = (cl.action, cl.condition_ids_sorted());
        self.micro += cl.numerosity as u64;
        if let Some(&existing) = self.by_condition.get(&key) {
            let num = cl.numerosity;
            self.get_mut(existing).numerosity += num;
            return existing;
        }
        let id = cl.id;
        self.index_of.insert(id, self.members.len());
        self.by_condition.insert(key, id);
        let mut seen = Vec::new();
        for cf in &cl.condition {
            if seen.contains(&cf.id()) {
                continue;
            }
            seen.push(cf.id());
            self.containing.entry(cf.id()).or_default().push(id);
        }
        self.members.push(cl);
        id
    }

    /// Grants extra micro-classifiers to an existing member (subsumption
    /// and duplicate absorption land here).
    pub fn add_numerosity(&mut self, id: ClassifierId, count: u32) {
        self.micro += count as u64;
        self.get_mut(id).numerosity += count;
    }

    /// Removes one micro-classifier; the macro entry disappears when its
    /// numerosity reaches zero.
    pub fn decrement(&mut self, id: ClassifierId) {
        self.micro -= 1;
        let cl = self.get_mut(id);
        if cl.numerosity > 1 {
            cl.numerosity -= 1;
            return;
        }
        self.remove(id);
    }

    /// Drops a whole macro classifier regardless of numerosity (action-set
    /// subsumption transfers the numerosity first).
    pub fn remove_macro(&mut self, id: ClassifierId) {
        let cl = self.get(id);
        self.micro -= cl.numerosity as u64;
        self.remove(id);
    }

    fn remove(&mut self, id: ClassifierId) {
        let idx = self.index_of.remove(&id).expect("removing unknown classifier");
        let cl = self.members.swap_remove(idx);
        if idx < self.members.len() {
            let moved = self.members[idx].id;
            self.index_of.insert(moved, idx);
        }
        self.by_condition
            .remove(&(cl.action, cl.condition_ids_sorted()));
        for cf in &cl.condition {
            if let Some(list) = self.containing.get_mut(&cf.id()) {
                list.retain(|&c| c != id);
                if list.is_empty() {
                    self.containing.remove(&cf.id());
                }
            }
        }
    }

    /// Mean micro fitness over the whole population.
    pub fn mean_micro_fitness(&self) -> f64 {
        if self.micro == 0 {
            return 0.0;
        }
        let total: f64 = self.members.iter().map(|cl| cl.fitness).sum();
        total / self.micro as f64
    }

    /// Forms the match set. With `count` set, every member's match counter
    /// pair is advanced exactly once — matching already touches everyone.
    pub fn match_set(
        &mut self,
        evaluator: &mut CfEvaluator,
        state: &[bool],
        count: bool,
    ) -> Vec<ClassifierId> {
        evaluator.begin_state();
        let matched: Vec<bool> = self
            .members
            .iter()
            .map(|cl| cl.matches_cached(evaluator, state))
            .collect();
        let mut set = Vec::new();
        for (cl, hit) in self.members.iter_mut().zip(&matched) {
            if count {
                if *hit {
                    cl.matches += 1;
                } else {
                    cl.no_matches += 1;
                }
            }
            if *hit {
                set.push(cl.id);
            }
        }
        set
    }

    /// Members matching the state and advocating the action, without
    /// touching any counters. Used by metrics snapshots.
    pub fn action_set(
        &self,
        evaluator: &mut CfEvaluator,
        state: &[bool],
        action: u8,
    ) -> Vec<ClassifierId> {
        evaluator.begin_state();
        let mut evaluator = evaluator;
        self.members
            .iter()
            .filter(|cl| cl.action == action && cl.matches_cached(&mut evaluator, state))
            .map(|cl| cl.id)
            .collect()
    }

    /// Population dump, most numerous first.
    pub fn dump(&self) -> String {
        let mut order: Vec<&Classifier> = self.members.iter().collect();
        order.sort_by(|a, b| b.numerosity.cmp(&a.numerosity).then(a.id.cmp(&b.id)));
        let mut out = String::new();
        for cl in order {
            out.push_str(&cl.dump_line());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::CfRegistry;

    fn classifier_with(
        reg: &mut CfRegistry,
        leaves: &[(u32, bool)],
        action: u8,
    ) -> Classifier {
        let condition = leaves
            .iter()
            .map(|&(attr, neg)| reg.leaf(attr, neg))
            .collect();
        Classifier::new(ClassifierId(leaves.len() as u64), condition, action, 0)
    }

    #[test]
    fn empty_condition_matches_everything() {
        let cl = Classifier::new(ClassifierId(0), vec![], 1, 0);
        assert!(cl.matches(&[true, false, true]));
        assert_eq!(cl.complexity(), 0);
        assert_eq!(cl.complexity_floored(), 1);
    }

    #[test]
    fn conjunction_matching() {
        let mut reg = CfRegistry::new();
        let cl = classifier_with(&mut reg, &[(0, false)], 1);
        assert!(!cl.matches(&[false, true]));
        assert!(cl.matches(&[true, true]));

        let cl = classifier_with(&mut reg, &[(0, false), (1, true)], 1);
        assert!(cl.matches(&[true, false]));
        assert!(!cl.matches(&[true, true]));
    }

    #[test]
    fn fitness_rate_examples() {
        let mut reg = CfRegistry::new();
        let mut cl = classifier_with(&mut reg, &[(0, false); 1], 0);
        // Five leaves total.
        cl.condition = (0..5).map(|a| reg.leaf(a, false)).collect();
        cl.complexity = 5;
        cl.fitness = 0.5;
        assert!((cl.fitness_rate() - 0.1).abs() < 1e-12);

        cl.fitness = 0.0;
        assert_eq!(cl.fitness_rate(), 0.0);
    }

    #[test]
    fn generality_rate_examples() {
        let mut reg = CfRegistry::new();
        let mut cl = classifier_with(&mut reg, &[(0, false)], 1);
        assert_eq!(cl.generality_rate(), None);

        cl.matches = 0;
        cl.no_matches = 100;
        assert_eq!(cl.generality_rate(), Some(0.0));

        // A complexity-1 rule that matched everything.
        cl.matches = 64;
        cl.no_matches = 0;
        assert_eq!(cl.generality_rate(), Some(1.0));
    }

    #[test]
    fn rates_ignore_condition_order() {
        let mut reg = CfRegistry::new();
        let a = reg.leaf(0, false);
        let b = reg.leaf(1, true);
        let mut fwd = Classifier::new(ClassifierId(0), vec![a.clone(), b.clone()], 1, 0);
        let mut rev = Classifier::new(ClassifierId(1), vec![b, a], 1, 0);
        for cl in [&mut fwd, &mut rev] {
            cl.fitness = 0.42;
            cl.matches = 3;
            cl.no_matches = 9;
        }
        assert_eq!(fwd.fitness_rate(), rev.fitness_rate());
        assert_eq!(fwd.generality_rate(), rev.generality_rate());
    }

    #[test]
    fn subsumption_examples() {
        let mut reg = CfRegistry::new();
        let mut general = Classifier::new(ClassifierId(0), vec![], 1, 0);
        general.experience = 60;
        general.error = 0.5;
        let specific = classifier_with(&mut reg, &[(0, false), (3, true)], 1);
        assert!(general.does_subsume(&specific, 50, 10.0));

        // Subset of condition ids.
        let d0 = reg.leaf(0, false);
        let pair = {
            let d1 = reg.leaf(1, false);
            let d2 = reg.leaf(2, false);
            reg.combine(&d1, &d2, crate::cf::CfFunction::Xor, 20)
                .unwrap()
        };
        let mut g = Classifier::new(ClassifierId(1), vec![d0.clone()], 1, 0);
        g.experience = 60;
        let s = Classifier::new(ClassifierId(2), vec![d0.clone(), pair], 1, 0);
        assert!(g.does_subsume(&s, 50, 10.0));
        assert!(!s.does_subsume(&g, 50, 10.0));

        // Different CFs never subsume.
        let d1 = reg.leaf(1, false);
        let other = Classifier::new(ClassifierId(3), vec![d1], 1, 0);
        assert!(!g.does_subsume(&other, 50, 10.0));

        // Thresholds gate it.
        g.experience = 10;
        assert!(!g.does_subsume(&s, 50, 10.0));
        g.experience = 60;
        g.error = 11.0;
        assert!(!g.does_subsume(&s, 50, 10.0));

        // Actions must agree.
        let mut flipped = s.clone();
        flipped.action = 0;
        g.error = 0.0;
        assert!(!g.does_subsume(&flipped, 50, 10.0));
    }

    #[test]
    fn insert_merges_identical_conditions() {
        let mut reg = CfRegistry::new();
        let mut pop = Population::new();
        let a = reg.leaf(0, false);
        let b = reg.leaf(1, false);
        let id1 = pop.allocate_id();
        let id2 = pop.allocate_id();
        pop.insert(Classifier::new(id1, vec![a.clone(), b.clone()], 1, 0));
        // Same multiset, different order, same action: merged.
        let merged = pop.insert(Classifier::new(id2, vec![b.clone(), a.clone()], 1, 0));
        assert_eq!(merged, id1);
        assert_eq!(pop.len(), 1);
        assert_eq!(pop.micro_count(), 2);

        // Different action stays separate.
        let id3 = pop.allocate_id();
        pop.insert(Classifier::new(id3, vec![a, b], 0, 0));
        assert_eq!(pop.len(), 2);
        assert_eq!(pop.micro_count(), 3);
    }

    #[test]
    fn decrement_and_containment_index() {
        let mut reg = CfRegistry::new();
        let mut pop = Population::new();
        let a = reg.leaf(0, false);
        let id = pop.allocate_id();
        let mut cl = Classifier::new(id, vec![a.clone()], 1, 0);
        cl.numerosity = 2;
        pop.insert(cl);
        assert_eq!(pop.classifiers_containing(a.id()), &[id]);

        pop.decrement(id);
        assert_eq!(pop.len(), 1);
        assert_eq!(pop.micro_count(), 1);

        pop.decrement(id);
        assert!(pop.is_empty());
        assert!(pop.classifiers_containing(a.id()).is_empty());
    }

    #[test]
    fn match_set_counts_once_per_member() {
        let mut reg = CfRegistry::new();
        let mut pop = Population::new();
        let id0 = pop.allocate_id();
        pop.insert(Classifier::new(id0, vec![reg.leaf(0, false)], 1, 0));
        let id1 = pop.allocate_id();
        pop.insert(Classifier::new(id1, vec![reg.leaf(1, false)], 0, 0));

        let mut eval = CfEvaluator::new(2);
        let set = pop.match_set(&mut eval, &[true, false], true);
        assert_eq!(set, vec![id0]);
        assert_eq!(pop.get(id0).matches, 1);
        assert_eq!(pop.get(id0).no_matches, 0);
        assert_eq!(pop.get(id1).matches, 0);
        assert_eq!(pop.get(id1).no_matches, 1);

        // Uncounted pass leaves counters alone.
        pop.match_set(&mut eval, &[true, false], false);
        assert_eq!(pop.get(id0).matches, 1);
        assert_eq!(pop.get(id1).no_matches, 1);
    }

    #[test]
    fn dump_line_shape() {
        let mut reg = CfRegistry::new();
        let mut cl = classifier_with(&mut reg, &[(0, false), (1, true)], 1);
        cl.matches = 1;
        cl.no_matches = 1;
        let line = cl.dump_line();
        assert!(line.starts_with("D0,!D1:1\t"));
        assert!(line.contains("\t0.500000\t"));
    }
}
