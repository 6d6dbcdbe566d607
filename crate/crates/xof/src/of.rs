//! The online feature-generation module: serves CF requests, grows new CFs
//! from the Observed List, and maintains CF-fitness.
//!
//! The Observed List (OL) is the registry of currently-applicable CFs.
//! Covering and the GA obtain their CFs here: a request either reuses an
//! OL member (roulette on CF-fitness) or combines two OL members into a
//! deeper tree. CF-fitness estimates a CF's applicability — its record of
//! appearing in good classifiers — where "good" depends on the variant:
//!
//! * shortening CF-fitness: classifier fitness divided by the number of
//!   CFs in its condition;
//! * generalising CF-fitness: classifier fitness divided by its complexity
//!   (leaf count), i.e. the fitness rate.
//!
//! Updates are Widrow-Hoff steps toward the best such value among the
//! classifiers containing the CF. The niched variant additionally
//! calibrates CF-fitness against the current action set when serving
//! requests, so CFs with no evidence in the niche are discounted.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::Rng;

use crate::cf::{CfFunction, CfId, CfRegistry, CodeFragment};
use crate::config::{ExperimentConfig, Variant};
use crate::rule::{Classifier, ClassifierId, Population};

use std::sync::Arc;

/// Applicability record of one CF.
#[derive(Debug, Clone, Copy)]
pub struct CfScore {
    /// The CF-fitness value (written `cf.f` in the logs).
    pub fitness: f64,
    /// The classifier currently defining this CF's quality, if any.
    pub best: Option<BestRef>,
}

#[derive(Debug, Clone, Copy)]
pub struct BestRef {
    pub classifier: ClassifierId,
    /// The quality measure of that classifier at the last update.
    pub measure: f64,
}

/// Counts which OF rules fired; variants must differ only here.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct OfTrace {
    pub scff_updates: u64,
    pub gcff_updates: u64,
    pub simplified_ol_updates: u64,
    pub bf_rebuilds: u64,
    pub ncf_case_direct: u64,
    pub ncf_case_discounted: u64,
    pub ncf_case_scaled: u64,
    pub generated: u64,
    pub reused: u64,
    pub bootstrap_leaves: u64,
}

/// Per-action-set context for niched CF-fitness: which classifiers are in
/// the set and, per CF appearing there, the best local quality measure.
#[derive(Debug)]
pub struct NicheContext {
    members: HashSet<ClassifierId>,
    local_best: HashMap<CfId, f64>,
}

impl NicheContext {
    pub fn from_action_set(aset: &[ClassifierId], pop: &Population) -> Self {
        let mut members = HashSet::with_capacity(aset.len());
        let mut local_best: HashMap<CfId, f64> = HashMap::new();
        for &id in aset {
            members.insert(id);
            let cl = pop.get(id);
            let rate = cl.fitness_rate();
            for cf in cl.condition() {
                let entry = local_best.entry(cf.id()).or_insert(f64::NEG_INFINITY);
                if rate > *entry {
                    *entry = rate;
                }
            }
        }
        NicheContext {
            members,
            local_best,
        }
    }

    pub fn contains_classifier(&self, id: ClassifierId) -> bool {
        self.members.contains(&id)
    }

    pub fn local_best_rate(&self, cf: CfId) -> Option<f64> {
        self.local_best.get(&cf).copied()
    }
}

#[derive(Debug)]
pub struct OfModule {
    registry: CfRegistry,
    scores: BTreeMap<CfId, CfScore>,
    /// OL entries with the classifiers currently justifying them. An entry
    /// leaves the list when its last supporter is outdated in its niche.
    ol: BTreeMap<CfId, BTreeSet<ClassifierId>>,
    trace: OfTrace,
    variant: Variant,
    attributes: u32,
    beta_cf: f64,
    p_new_cf: f64,
    selectivity: f64,
    ncf_discount: f64,
    max_cf_depth: u32,
    bf_ol_capacity: usize,
    bf_tournament_size: u32,
    function_set: Vec<CfFunction>,
}

impl OfModule {
    pub fn new(cfg: &ExperimentConfig, attributes: u32) -> Self {
        OfModule {
            registry: CfRegistry::new(),
            scores: BTreeMap::new(),
            ol: BTreeMap::new(),
            trace: OfTrace::default(),
            variant: cfg.variant,
            attributes,
            beta_cf: cfg.beta_cf,
            p_new_cf: cfg.p_new_cf,
            selectivity: cfg.ol_selectivity,
            ncf_discount: cfg.ncf_discount,
            max_cf_depth: cfg.max_cf_depth,
            bf_ol_capacity: cfg.bf_ol_capacity,
            bf_tournament_size: cfg.bf_tournament_size,
            function_set: CfFunction::ALL.to_vec(),
        }
    }

    pub fn registry(&self) -> &CfRegistry {
        &self.registry
    }

    pub fn registry_mut(&mut self) -> &mut CfRegistry {
        &mut self.registry
    }

    pub fn trace(&self) -> &OfTrace {
        &self.trace
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn ol_len(&self) -> usize {
        self.ol.len()
    }

    pub fn ol_ids(&self) -> impl Iterator<Item = CfId> + '_ {
        self.ol.keys().copied()
    }

    pub fn ol_contains(&self, cf: CfId) -> bool {
        self.ol.contains_key(&cf)
    }

    pub fn score(&self, cf: CfId) -> Option<&CfScore> {
        self.scores.get(&cf)
    }

    /// Mean tree depth over the OL; 0 when the OL is empty.
    pub fn mean_ol_depth(&self) -> f64 {
        if self.ol.is_empty() {
            return 0.0;
        }
        let total: u64 = self
            .ol
            .keys()
            .map(|&id| self.registry.get(id).depth() as u64)
            .sum();
        total as f64 / self.ol.len() as f64
    }

    /// Quality of a classifier for OL purposes under this variant.
    pub fn ol_quality(&self, cl: &Classifier) -> f64 {
        if self.variant.uses_fitness_rate() {
            cl.fitness_rate()
        } else {
            cl.fitness / cl.condition().len().max(1) as f64
        }
    }

    /// The shortening CF-fitness value a classifier offers to each of its
    /// condition CFs: fitness divided by CF count. Empty conditions carry
    /// no CFs and contribute nothing.
    pub fn scff_value(cl: &Classifier) -> Option<f64> {
        let count = cl.condition().len();
        if count == 0 {
            None
        } else {
            Some(cl.fitness / count as f64)
        }
    }

    /// Serves one CF request. With an empty OL this bootstraps a random
    /// single-attribute CF; otherwise it generates a fresh combination with
    /// probability `p_new_cf` and reuses an OL member (roulette on
    /// CF-fitness, locally calibrated under the niched variant) the rest of
    /// the time.
    pub fn request_cf(
        &mut self,
        rng: &mut impl Rng,
        context: Option<&NicheContext>,
    ) -> Arc<CodeFragment> {
        if self.ol.is_empty() {
            self.trace.bootstrap_leaves += 1;
            return self.random_leaf(rng);
        }
        if rng.gen_bool(self.p_new_cf) {
            return self.generate_new_cf(rng, context);
        }
        match self.roulette_pick(rng, context, None) {
            Some(cf) => {
                self.trace.reused += 1;
                cf
            }
            None => {
                self.trace.bootstrap_leaves += 1;
                self.random_leaf(rng)
            }
        }
    }

    /// Grows a new CF by combining two distinct OL picks under a random
    /// connective. Combining an entry with itself only manufactures bloat
    /// (`X∨X`, `X nand X`, a constant under XOR), so the second operand
    /// excludes the first, falling back to a fresh leaf when the OL is too
    /// small. Rejected (too-deep) combinations retry, so this always
    /// terminates.
    pub fn generate_new_cf(
        &mut self,
        rng: &mut impl Rng,
        context: Option<&NicheContext>,
    ) -> Arc<CodeFragment> {
        for _ in 0..5 {
            let a = self
                .roulette_pick(rng, context, None)
                .unwrap_or_else(|| self.random_leaf(rng));
            let b = self
                .roulette_pick(rng, context, Some(a.id()))
                .unwrap_or_else(|| self.random_leaf(rng));
            let f = self.function_set[rng.gen_range(0..self.function_set.len())];
            if let Ok(cf) = self.registry.combine(&a, &b, f, self.max_cf_depth) {
                self.trace.generated += 1;
                return cf;
            }
        }
        let a = self.random_leaf(rng);
        let b = self.random_leaf(rng);
        let f = self.function_set[rng.gen_range(0..self.function_set.len())];
        self.trace.generated += 1;
        self.registry
            .combine(&a, &b, f, self.max_cf_depth)
            .expect("two leaves fit any depth limit of at least 1")
    }

    fn random_leaf(&mut self, rng: &mut impl Rng) -> Arc<CodeFragment> {
        let attr = rng.gen_range(0..self.attributes);
        let negated = rng.gen_bool(0.5);
        self.registry.leaf(attr, negated)
    }

    fn roulette_pick(
        &mut self,
        rng: &mut impl Rng,
        context: Option<&NicheContext>,
        exclude: Option<CfId>,
    ) -> Option<Arc<CodeFragment>> {
        let ids: Vec<CfId> = self
            .ol
            .keys()
            .copied()
            .filter(|&id| Some(id) != exclude)
            .collect();
        if ids.is_empty() {
            return None;
        }
        let weights: Vec<f64> = ids.iter().map(|&id| self.request_weight(id, context)).collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return None;
        }
        let mut draw = rng.gen::<f64>() * total;
        for (id, w) in ids.iter().zip(&weights) {
            draw -= w;
            if draw <= 0.0 {
                return Some(self.registry.get(*id).clone());
            }
        }
        // Float underflow: fall back to the last positive weight.
        ids.iter()
            .zip(&weights)
            .rev()
            .find(|(_, &w)| w > 0.0)
            .map(|(id, _)| self.registry.get(*id).clone())
    }

    fn request_weight(&mut self, cf: CfId, context: Option<&NicheContext>) -> f64 {
        match context {
            Some(ctx) if self.variant == Variant::GcffNcf => self.local_cf_fitness(cf, ctx),
            _ => self.scores.get(&cf).map(|s| s.fitness).unwrap_or(0.0),
        }
    }

    /// Niched CF-fitness of an OL entry relative to an action set:
    ///
    /// 1. the entry's best classifier sits in the set — use the global
    ///    CF-fitness unchanged;
    /// 2. no classifier in the set contains the CF — discount the global
    ///    value by a constant factor;
    /// 3. otherwise scale the global value by the local-to-global ratio of
    ///    the best quality measure.
    pub fn local_cf_fitness(&mut self, cf: CfId, context: &NicheContext) -> f64 {
        let score = match self.scores.get(&cf) {
            Some(score) => *score,
            None => return 0.0,
        };
        if let Some(best) = score.best {
            if context.contains_classifier(best.classifier) {
                self.trace.ncf_case_direct += 1;
                return score.fitness;
            }
        }
        let local = match context.local_best_rate(cf) {
            Some(rate) => rate,
            None => {
                self.trace.ncf_case_discounted += 1;
                return self.ncf_discount * score.fitness;
            }
        };
        self.trace.ncf_case_scaled += 1;
        let global = score.best.map(|b| b.measure).unwrap_or(0.0);
        if global <= 0.0 {
            return 0.0;
        }
        score.fitness * (local / global)
    }

    /// Widrow-Hoff CF-fitness update for every listed CF: step toward the
    /// best quality measure among the classifiers containing it, and track
    /// that best classifier. Ties prefer higher numerosity, then lower
    /// complexity, then the older classifier.
    pub fn update_cf_fitness(&mut self, cfs: &[CfId], pop: &Population) {
        for &cf in cfs {
            let mut best: Option<(f64, u32, u32, ClassifierId)> = None;
            for &cl_id in pop.classifiers_containing(cf) {
                let cl = pop.get(cl_id);
                let measure = self.ol_quality(cl);
                let candidate = (measure, cl.numerosity, cl.complexity(), cl_id);
                let better = match &best {
                    None => true,
                    Some((m, num, cx, id)) => {
                        measure > *m
                            || (measure == *m
                                && (candidate.1 > *num
                                    || (candidate.1 == *num
                                        && (candidate.2 < *cx
                                            || (candidate.2 == *cx && cl_id < *id)))))
                    }
                };
                if better {
                    best = Some(candidate);
                }
            }
            let Some((target, _, _, best_id)) = best else {
                continue;
            };
            if !self.scores.contains_key(&cf) {
                let init = self.initial_fitness();
                self.scores.insert(
                    cf,
                    CfScore {
                        fitness: init,
                        best: None,
                    },
                );
            }
            let score = self.scores.get_mut(&cf).expect("just ensured");
            score.fitness += self.beta_cf * (target - score.fitness);
            score.best = Some(BestRef {
                classifier: best_id,
                measure: target,
            });
            if self.variant.uses_fitness_rate() {
                self.trace.gcff_updates += 1;
            } else {
                self.trace.scff_updates += 1;
            }
        }
    }

    // First score of a CF: the median CF-fitness of the current OL, or a
    // small constant while the OL is still empty.
    fn initial_fitness(&self) -> f64 {
        if self.ol.is_empty() {
            return 0.01;
        }
        let mut values: Vec<f64> = self
            .ol
            .keys()
            .filter_map(|id| self.scores.get(id).map(|s| s.fitness))
            .collect();
        if values.is_empty() {
            return 0.01;
        }
        values.sort_by(|a, b| a.partial_cmp(b).expect("CF-fitness is never NaN"));
        let mid = values.len() / 2;
        if values.len() % 2 == 1 {
            values[mid]
        } else {
            0.5 * (values[mid - 1] + values[mid])
        }
    }

    /// The per-trial simplified OL update. Process 1 collects the CFs of
    /// every action-set classifier whose quality reaches the selectivity
    /// fraction of the set's best, recording those classifiers as the
    /// entry's supporters. Process 2 withdraws the support of this set's
    /// failing classifiers: an entry leaves the OL once its last supporter
    /// is outdated, while entries justified by other niches stay put (and
    /// return regardless when their own niche is visited).
    pub fn update_ol_simplified(&mut self, aset: &[ClassifierId], pop: &Population) {
        debug_assert_ne!(self.variant, Variant::Bf);
        if aset.is_empty() {
            return;
        }
        // Deleted classifiers stop supporting their entries right away;
        // otherwise dead junk lingers in the list and dilutes the roulette.
        self.ol.retain(|_, support| {
            support.retain(|s| pop.contains(*s));
            !support.is_empty()
        });
        let qualities: Vec<f64> = aset.iter().map(|&id| self.ol_quality(pop.get(id))).collect();
        let best = qualities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let threshold = self.selectivity * best;

        for (&id, &q) in aset.iter().zip(&qualities) {
            if q < threshold {
                continue;
            }
            for cf in pop.get(id).condition() {
                if !self.scores.contains_key(&cf.id()) {
                    let init = self.initial_fitness();
                    self.scores.insert(
                        cf.id(),
                        CfScore {
                            fitness: init,
                            best: None,
                        },
                    );
                }
                self.ol.entry(cf.id()).or_default().insert(id);
            }
        }
        for (&id, &q) in aset.iter().zip(&qualities) {
            if q >= threshold {
                continue;
            }
            for cf in pop.get(id).condition() {
                if let Some(support) = self.ol.get_mut(&cf.id()) {
                    support.remove(&id);
                    // Supporters deleted from the population no longer count.
                    support.retain(|s| pop.contains(*s));
                    if support.is_empty() {
                        self.ol.remove(&cf.id());
                    }
                }
            }
        }
        self.trace.simplified_ol_updates += 1;
    }

    /// Baseline OL maintenance: wipe the list and refill it by tournament
    /// selection on CF-fitness over every scored CF, up to the capacity.
    pub fn rebuild_ol_bf(&mut self, rng: &mut impl Rng) {
        self.trace.bf_rebuilds += 1;
        self.ol.clear();
        let candidates: Vec<CfId> = self.scores.keys().copied().collect();
        if candidates.is_empty() {
            return;
        }
        let target = self.bf_ol_capacity.min(candidates.len());
        let mut attempts = 0usize;
        let max_attempts = target * 20 + 50;
        while self.ol.len() < target && attempts < max_attempts {
            attempts += 1;
            let mut winner: Option<(CfId, f64)> = None;
            for _ in 0..self.bf_tournament_size {
                let id = candidates[rng.gen_range(0..candidates.len())];
                let fitness = self.scores[&id].fitness;
                if winner.map(|(_, best)| fitness > best).unwrap_or(true) {
                    winner = Some((id, fitness));
                }
            }
            if let Some((id, _)) = winner {
                self.ol.entry(id).or_default();
            }
        }
        if self.ol.len() < target {
            // Tournament kept drawing duplicates; top off by fitness.
            let mut rest: Vec<CfId> = candidates
                .iter()
                .copied()
                .filter(|id| !self.ol.contains_key(id))
                .collect();
            rest.sort_by(|a, b| {
                self.scores[b]
                    .fitness
                    .partial_cmp(&self.scores[a].fitness)
                    .expect("CF-fitness is never NaN")
                    .then(a.cmp(b))
            });
            for id in rest.into_iter().take(target - self.ol.len()) {
                self.ol.entry(id).or_default();
            }
        }
    }

    /// OL dump: one row per entry, highest CF-fitness first.
    pub fn ol_dump(&self) -> String {
        let mut rows: Vec<(CfId, f64)> = self
            .ol
            .keys()
            .map(|&id| (id, self.scores.get(&id).map(|s| s.fitness).unwrap_or(0.0)))
            .collect();
        rows.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("CF-fitness is never NaN")
                .then(a.0.cmp(&b.0))
        });
        let mut out = String::new();
        for (id, fitness) in rows {
            out.push_str(&format!("{}\t{fitness:.6}\n", self.registry.get(id)));
        }
        out
    }

    #[cfg(test)]
    pub(crate) fn force_ol_entry(&mut self, cf: CfId, fitness: f64, best: Option<BestRef>) {
        self.scores.insert(cf, CfScore { fitness, best });
        self.ol.entry(cf).or_default();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::Population;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn module(variant: Variant) -> OfModule {
        let mut cfg = ExperimentConfig::default();
        cfg.variant = variant;
        OfModule::new(&cfg, 6)
    }

    fn insert_classifier(
        of: &mut OfModule,
        pop: &mut Population,
        leaves: &[(u32, bool)],
        fitness: f64,
    ) -> ClassifierId {
        let condition: Vec<_> = leaves
            .iter()
            .map(|&(attr, neg)| of.registry_mut().leaf(attr, neg))
            .collect();
        let id = pop.allocate_id();
        let mut cl = Classifier::new(id, condition, 1, 0);
        cl.fitness = fitness;
        pop.insert(cl)
    }

    #[test]
    fn empty_ol_serves_single_attributes() {
        let mut of = module(Variant::Gcff);
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        for _ in 0..20 {
            let cf = of.request_cf(&mut rng, None);
            assert_eq!(cf.complexity(), 1);
        }
    }

    #[test]
    fn roulette_never_picks_zero_weight() {
        let mut of = module(Variant::Gcff);
        let good = of.registry_mut().leaf(0, false);
        let bad = of.registry_mut().leaf(1, false);
        of.force_ol_entry(good.id(), 0.9, None);
        of.force_ol_entry(bad.id(), 0.0, None);
        // Score the remaining ground leaves to zero as well, leaving one
        // positive entry; p_new_cf = 0 so every request reuses.
        for attr in 2..6 {
            let leaf = of.registry_mut().leaf(attr, false);
            of.scores.insert(
                leaf.id(),
                CfScore {
                    fitness: 0.0,
                    best: None,
                },
            );
        }
        of.p_new_cf = 0.0;
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..50 {
            let cf = of.request_cf(&mut rng, None);
            assert_eq!(cf.id(), good.id());
        }
    }

    #[test]
    fn generated_cf_complexity_is_sum_of_operands() {
        let mut of = module(Variant::Gcff);
        let a = of.registry_mut().leaf(0, false);
        let b = of.registry_mut().leaf(1, true);
        of.force_ol_entry(a.id(), 0.5, None);
        of.force_ol_entry(b.id(), 0.5, None);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..20 {
            let cf = of.generate_new_cf(&mut rng, None);
            assert_eq!(cf.complexity(), 2);
            assert_eq!(cf.depth(), 1);
        }
    }

    #[test]
    fn depth_limited_generation_terminates() {
        let mut of = module(Variant::Gcff);
        of.max_cf_depth = 1;
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        // Put a depth-1 CF in the OL: combining it with anything busts the
        // limit, so generation must fall back to leaf operands.
        let a = of.registry_mut().leaf(0, false);
        let b = of.registry_mut().leaf(1, false);
        let pair = of
            .registry_mut()
            .combine(&a, &b, CfFunction::Xor, 1)
            .unwrap();
        of.force_ol_entry(pair.id(), 1.0, None);
        for _ in 0..20 {
            let cf = of.generate_new_cf(&mut rng, None);
            assert!(cf.depth() <= 1);
        }
    }

    #[test]
    fn scff_value_divides_by_cf_count() {
        let mut of = module(Variant::Scff);
        let mut pop = Population::new();
        let id = insert_classifier(
            &mut of,
            &mut pop,
            &[(0, false), (1, false), (2, false)],
            0.6,
        );
        let value = OfModule::scff_value(pop.get(id)).unwrap();
        assert_eq!(value, 0.6 / 3.0);
        assert!((value - 0.2).abs() < 1e-12);

        let empty = Classifier::new(pop.allocate_id(), vec![], 1, 0);
        assert_eq!(OfModule::scff_value(&empty), None);

        let mut zero = Classifier::new(pop.allocate_id(), vec![of.registry_mut().leaf(0, false)], 1, 0);
        zero.fitness = 0.0;
        assert_eq!(OfModule::scff_value(&zero), Some(0.0));
    }

    #[test]
    fn widrow_hoff_step_and_fixed_point() {
        let mut of = module(Variant::Gcff);
        let mut pop = Population::new();
        // One classifier of complexity 5 and fitness 0.5: target rate 0.10.
        let id = insert_classifier(
            &mut of,
            &mut pop,
            &[(0, false), (1, false), (2, false), (3, false), (4, false)],
            0.5,
        );
        let cf = pop.get(id).condition()[0].clone();
        of.force_ol_entry(cf.id(), 0.05, None);

        of.update_cf_fitness(&[cf.id()], &pop);
        let updated = of.score(cf.id()).unwrap();
        assert_eq!(updated.fitness, 0.05 + 0.001 * (0.10 - 0.05));
        assert!((updated.fitness - 0.05005).abs() < 1e-12);
        assert_eq!(updated.best.unwrap().classifier, id);

        // At the target the update is a fixed point.
        of.force_ol_entry(cf.id(), 0.10, None);
        of.update_cf_fitness(&[cf.id()], &pop);
        assert_eq!(of.score(cf.id()).unwrap().fitness, 0.10);

        // Repeated updates converge geometrically.
        of.force_ol_entry(cf.id(), 0.9, None);
        for _ in 0..20_000 {
            of.update_cf_fitness(&[cf.id()], &pop);
        }
        assert!((of.score(cf.id()).unwrap().fitness - 0.10).abs() < 1e-6);
        assert!(of.trace().gcff_updates > 0);
        assert_eq!(of.trace().scff_updates, 0);
    }

    #[test]
    fn gcff_prefers_cheaper_patterns_at_equal_fitness() {
        // Two classifiers with equal fitness but different complexity: the
        // CF contained only in the bulkier one gets a strictly lower target.
        let mut of = module(Variant::Gcff);
        let mut pop = Population::new();
        let lean = insert_classifier(&mut of, &mut pop, &[(0, false)], 0.8);
        let bulky = insert_classifier(&mut of, &mut pop, &[(1, false), (2, false)], 0.8);
        let lean_cf = pop.get(lean).condition()[0].id();
        let bulky_cf = pop.get(bulky).condition()[0].id();
        of.force_ol_entry(lean_cf, 0.0, None);
        of.force_ol_entry(bulky_cf, 0.0, None);
        of.update_cf_fitness(&[lean_cf, bulky_cf], &pop);
        let lean_fit = of.score(lean_cf).unwrap().fitness;
        let bulky_fit = of.score(bulky_cf).unwrap().fitness;
        assert!(lean_fit > bulky_fit);
    }

    #[test]
    fn niching_three_cases() {
        let mut of = module(Variant::GcffNcf);
        let mut pop = Population::new();

        // Global best for cf_a sits inside the action set: case 1.
        let in_set = insert_classifier(&mut of, &mut pop, &[(0, false)], 0.9);
        let cf_a = pop.get(in_set).condition()[0].id();
        of.force_ol_entry(
            cf_a,
            0.06,
            Some(BestRef {
                classifier: in_set,
                measure: 0.9,
            }),
        );

        // cf_b appears nowhere in the set: case 2.
        let outside = insert_classifier(&mut of, &mut pop, &[(1, false)], 0.4);
        let cf_b = pop.get(outside).condition()[0].id();
        of.force_ol_entry(
            cf_b,
            0.08,
            Some(BestRef {
                classifier: outside,
                measure: 0.4,
            }),
        );

        // cf_c is in the set, but its global best is elsewhere: case 3.
        let local = insert_classifier(&mut of, &mut pop, &[(2, false)], 0.05);
        let global = insert_classifier(&mut of, &mut pop, &[(2, false), (3, false)], 0.2);
        let cf_c = pop.get(local).condition()[0].id();
        of.force_ol_entry(
            cf_c,
            0.06,
            Some(BestRef {
                classifier: global,
                measure: 0.10,
            }),
        );

        let ctx = NicheContext::from_action_set(&[in_set, local], &pop);

        assert_eq!(of.local_cf_fitness(cf_a, &ctx), 0.06);
        assert_eq!(of.local_cf_fitness(cf_b, &ctx), 0.1 * 0.08);
        assert!((of.local_cf_fitness(cf_b, &ctx) - 0.008).abs() < 1e-12);
        // Local best rate is 0.05 (fitness 0.05 over complexity 1).
        let scaled = of.local_cf_fitness(cf_c, &ctx);
        assert!((scaled - 0.06 * (0.05 / 0.10)).abs() < 1e-12);
        assert!((scaled - 0.03).abs() < 1e-12);

        // Degenerate global measure guards to zero.
        of.force_ol_entry(
            cf_c,
            0.06,
            Some(BestRef {
                classifier: global,
                measure: 0.0,
            }),
        );
        assert_eq!(of.local_cf_fitness(cf_c, &ctx), 0.0);

        let trace = of.trace();
        assert!(trace.ncf_case_direct >= 1);
        assert!(trace.ncf_case_discounted >= 1);
        assert!(trace.ncf_case_scaled >= 1);
    }

    #[test]
    fn local_fitness_never_exceeds_global_in_cases_2_and_3() {
        let mut of = module(Variant::GcffNcf);
        let mut pop = Population::new();
        let member = insert_classifier(&mut of, &mut pop, &[(0, false)], 0.3);
        let best = insert_classifier(&mut of, &mut pop, &[(0, false), (1, false)], 0.9);
        let cf = pop.get(member).condition()[0].id();
        of.force_ol_entry(
            cf,
            0.07,
            Some(BestRef {
                classifier: best,
                measure: 0.45,
            }),
        );
        let ctx = NicheContext::from_action_set(&[member], &pop);
        assert!(of.local_cf_fitness(cf, &ctx) <= 0.07);
        let empty_ctx = NicheContext::from_action_set(&[], &pop);
        assert!(of.local_cf_fitness(cf, &empty_ctx) <= 0.07);
    }

    #[test]
    fn simplified_update_applies_selectivity_threshold() {
        let mut of = module(Variant::Gcff);
        let mut pop = Population::new();
        // Rates 0.10, 0.095, 0.05 against a 0.9 selectivity: the first two
        // qualify, the third does not.
        let a = insert_classifier(&mut of, &mut pop, &[(0, false)], 0.10);
        let b = insert_classifier(&mut of, &mut pop, &[(1, false)], 0.095);
        let c = insert_classifier(&mut of, &mut pop, &[(2, false)], 0.05);
        let cf_a = pop.get(a).condition()[0].id();
        let cf_b = pop.get(b).condition()[0].id();
        let cf_c = pop.get(c).condition()[0].id();

        of.update_ol_simplified(&[a, b, c], &pop);
        assert!(of.ol_contains(cf_a));
        assert!(of.ol_contains(cf_b));
        assert!(!of.ol_contains(cf_c));

        // A single-classifier set always qualifies itself.
        let mut of = module(Variant::Gcff);
        let mut pop = Population::new();
        let solo = insert_classifier(&mut of, &mut pop, &[(4, true)], 0.01);
        let cf = pop.get(solo).condition()[0].id();
        of.update_ol_simplified(&[solo], &pop);
        assert!(of.ol_contains(cf));
    }

    #[test]
    fn simplified_update_removes_then_readds_niche_members() {
        let mut of = module(Variant::Gcff);
        let mut pop = Population::new();
        let strong = insert_classifier(&mut of, &mut pop, &[(0, false)], 0.9);
        let weak = insert_classifier(&mut of, &mut pop, &[(1, false)], 0.05);
        let cf_weak = pop.get(weak).condition()[0].id();

        // The weak classifier's CF is in the OL from an earlier visit.
        of.force_ol_entry(cf_weak, 0.2, None);
        of.update_ol_simplified(&[strong, weak], &pop);
        assert!(!of.ol_contains(cf_weak), "outdated CF should be dropped");

        // Visiting the weak classifier's own niche puts it back.
        of.update_ol_simplified(&[weak], &pop);
        assert!(of.ol_contains(cf_weak));
    }

    #[test]
    fn bf_rebuild_caps_size_and_prefers_fit_cfs() {
        let mut of = module(Variant::Bf);
        of.bf_ol_capacity = 3;
        let mut pop = Population::new();
        let mut ids = Vec::new();
        for attr in 0..6 {
            let id = insert_classifier(&mut of, &mut pop, &[(attr, false)], attr as f64 / 10.0);
            ids.push(pop.get(id).condition()[0].id());
        }
        of.update_cf_fitness(&ids, &pop);
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        of.rebuild_ol_bf(&mut rng);
        assert_eq!(of.ol_len(), 3);
        assert_eq!(of.trace().bf_rebuilds, 1);
    }

    #[test]
    fn first_score_initializes_from_ol_median() {
        let mut of = module(Variant::Gcff);
        let a = of.registry_mut().leaf(0, false);
        let b = of.registry_mut().leaf(1, false);
        let c = of.registry_mut().leaf(2, false);
        of.force_ol_entry(a.id(), 0.2, None);
        of.force_ol_entry(b.id(), 0.4, None);
        of.force_ol_entry(c.id(), 0.9, None);
        assert_eq!(of.initial_fitness(), 0.4);

        let of_empty = module(Variant::Gcff);
        assert_eq!(of_empty.initial_fitness(), 0.01);
    }

    #[test]
    fn ol_dump_sorted_by_fitness() {
        let mut of = module(Variant::Gcff);
        let a = of.registry_mut().leaf(0, false);
        let b = of.registry_mut().leaf(1, true);
        of.force_ol_entry(a.id(), 0.1, None);
        of.force_ol_entry(b.id(), 0.7, None);
        let dump = of.ol_dump();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines[0], "!D1\t0.700000");
        assert_eq!(lines[1], "D0\t0.100000");
    }
}
