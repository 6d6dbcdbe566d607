//! The XCS learning loop: explore/exploit trials, covering, action-set
//! parameter updates, the niche GA, and population-limit deletion.
//!
//! Explore and exploit trials alternate strictly 1:1. Learning (parameter
//! updates, the OL update, the GA) happens on explore trials; exploit
//! trials pick the best-predicted action and record correctness. Under the
//! baseline variant the OL is instead rebuilt every
//! `bf_update_period` trials.
//!
//! A run owns its random stream and consumes it in a fixed order per
//! trial: instance sampling, covering, the explore action draw, GA
//! (selection, crossover, mutation), deletion, and finally the baseline OL
//! rebuild when due. Given equal seeds and configuration, runs are
//! bit-for-bit reproducible.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use std::sync::Arc;

use crate::cf::{CfEvaluator, CfId, CodeFragment};
use crate::config::{ConfigError, ExperimentConfig, Variant};
use crate::of::{NicheContext, OfModule};
use crate::problems::Problem;
use crate::rule::{Classifier, ClassifierId, Population};

/// What one trial did, for metrics and debugging.
#[derive(Debug, Clone, Copy)]
pub struct TrialOutcome {
    pub trial: u64,
    pub explore: bool,
    /// Whether the chosen action was correct; recorded on exploit trials.
    pub correct: Option<bool>,
    /// Classifiers created by covering.
    pub covered: u32,
    pub ga_invoked: bool,
}

/// One learning run: population, OF module and random stream.
#[derive(Debug)]
pub struct XcsRun {
    problem: Problem,
    cfg: ExperimentConfig,
    pop: Population,
    of: OfModule,
    evaluator: CfEvaluator,
    rng: ChaCha12Rng,
    trial: u64,
    learning_steps: u64,
    condition_cap: u32,
}

impl XcsRun {
    pub fn new(problem: Problem, cfg: ExperimentConfig, seed: u64) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let attributes = problem.attributes();
        Ok(XcsRun {
            of: OfModule::new(&cfg, attributes),
            evaluator: CfEvaluator::new(attributes),
            rng: ChaCha12Rng::seed_from_u64(seed),
            pop: Population::new(),
            condition_cap: cfg.condition_len_cap(attributes),
            problem,
            cfg,
            trial: 0,
            learning_steps: 0,
        })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn population(&self) -> &Population {
        &self.pop
    }

    pub fn of(&self) -> &OfModule {
        &self.of
    }

    pub fn trials_run(&self) -> u64 {
        self.trial
    }

    pub fn run_trials(&mut self, count: u64) {
        for _ in 0..count {
            self.run_trial();
        }
    }

    pub fn run_trial(&mut self) -> TrialOutcome {
        self.trial += 1;
        let explore = self.trial % 2 == 1;
        if explore {
            self.learning_steps += 1;
        }
        let state = self.problem.sample(&mut self.rng);
        let label = self.problem.label(&state);

        let (mset, covered) = self.form_match_set(&state);
        let action = if explore {
            self.rng.gen_range(0..2u8)
        } else {
            self.best_action(&mset)
        };
        let correct = action == label;
        let aset: Vec<ClassifierId> = mset
            .into_iter()
            .filter(|&id| self.pop.get(id).action() == action)
            .collect();

        let mut ga_invoked = false;
        if explore && !aset.is_empty() {
            let reward = if correct { self.cfg.reward } else { 0.0 };
            self.update_action_set(&aset, reward);
            let aset = self.subsume_action_set(aset);
            if self.cfg.variant != Variant::Bf {
                self.of.update_ol_simplified(&aset, &self.pop);
            }
            ga_invoked = self.run_ga_if_due(&aset, &state);
        }
        if self.cfg.variant == Variant::Bf && self.trial % self.cfg.bf_update_period == 0 {
            self.of.rebuild_ol_bf(&mut self.rng);
        }

        TrialOutcome {
            trial: self.trial,
            explore,
            correct: (!explore).then_some(correct),
            covered,
            ga_invoked,
        }
    }

    /// Sampled estimate of the population's niche-averaged generality rate;
    /// takes a caller-owned stream so metrics never perturb learning.
    pub fn generality_rate_estimate(&mut self, rng: &mut impl Rng) -> Option<f64> {
        crate::metrics::population_generality_rate(
            &self.pop,
            &self.problem,
            &mut self.evaluator,
            rng,
            self.cfg.generality_samples,
            self.cfg.theta_ga,
            self.cfg.eps_zero,
        )
    }

    // Match-set formation with covering. Counters advance on the first
    // pass only; covered classifiers start at matches = 1 instead, since
    // they are built to match the covering instance.
    fn form_match_set(&mut self, state: &[bool]) -> (Vec<ClassifierId>, u32) {
        let mut covered = 0u32;
        let mut count = true;
        loop {
            let mset = self.pop.match_set(&mut self.evaluator, state, count);
            count = false;
            let mut have = [false; 2];
            for &id in &mset {
                have[self.pop.get(id).action() as usize] = true;
            }
            if (have[0] && have[1]) || covered >= 16 {
                return (mset, covered);
            }
            for action in 0..2u8 {
                if !have[action as usize] {
                    let cl = self.cover(state, action);
                    covered += 1;
                    self.pop.insert(cl);
                }
            }
            self.enforce_population_limit();
        }
    }

    // Builds a covering classifier: each of the `condition_cap` slots gets
    // a CF with probability `p_spec`, negated if needed so that it matches
    // the covering state.
    fn cover(&mut self, state: &[bool], action: u8) -> Classifier {
        let mut condition = Vec::new();
        for _ in 0..self.condition_cap {
            if self.rng.gen_bool(self.cfg.p_spec) {
                let cf = self.request_matching_cf(state, None);
                condition.push(cf);
            }
        }
        let id = self.pop.allocate_id();
        let mut cl = Classifier::new(id, condition, action, self.learning_steps);
        cl.prediction = self.cfg.p_init;
        cl.error = self.cfg.eps_init;
        cl.fitness = self.cfg.f_init;
        cl.matches = 1;
        cl
    }

    fn request_matching_cf(
        &mut self,
        state: &[bool],
        context: Option<&NicheContext>,
    ) -> Arc<CodeFragment> {
        let cf = self.of.request_cf(&mut self.rng, context);
        if cf.eval(state) {
            cf
        } else {
            self.of.registry_mut().negated(&cf)
        }
    }

    // Fitness-weighted prediction array, best action wins; ties go to 0.
    fn best_action(&self, mset: &[ClassifierId]) -> u8 {
        let mut weighted = [0.0f64; 2];
        let mut weight = [0.0f64; 2];
        for &id in mset {
            let cl = self.pop.get(id);
            let a = cl.action() as usize;
            weighted[a] += cl.prediction * cl.fitness;
            weight[a] += cl.fitness;
        }
        let pa = |a: usize| {
            if weight[a] > 0.0 {
                weighted[a] / weight[a]
            } else {
                f64::NEG_INFINITY
            }
        };
        (pa(1) > pa(0)) as u8
    }

    // Standard accuracy-based update, plus the CF-fitness refresh for every
    // CF appearing in the set. Early updates average (MAM) until the
    // experience passes 1/beta.
    fn update_action_set(&mut self, aset: &[ClassifierId], reward: f64) {
        let beta = self.cfg.beta;
        let set_size: f64 = aset
            .iter()
            .map(|&id| self.pop.get(id).numerosity as f64)
            .sum();
        for &id in aset {
            let cl = self.pop.get_mut(id);
            cl.experience += 1;
            let exp = cl.experience as f64;
            let rate = if exp < 1.0 / beta { 1.0 / exp } else { beta };
            // The error sees the pre-update prediction: a rule whose
            // inherited prediction contradicts this niche is exposed on its
            // first update instead of scoring a spurious zero error.
            cl.error += rate * ((reward - cl.prediction).abs() - cl.error);
            cl.prediction += rate * (reward - cl.prediction);
            cl.action_set_size += rate * (set_size - cl.action_set_size);
        }

        let mut weighted_acc = Vec::with_capacity(aset.len());
        let mut acc_sum = 0.0;
        for &id in aset {
            let cl = self.pop.get(id);
            let kappa = if cl.error < self.cfg.eps_zero {
                1.0
            } else {
                self.cfg.alpha * (cl.error / self.cfg.eps_zero).powf(-self.cfg.nu)
            };
            let w = kappa * cl.numerosity as f64;
            weighted_acc.push(w);
            acc_sum += w;
        }
        for (&id, &w) in aset.iter().zip(&weighted_acc) {
            let cl = self.pop.get_mut(id);
            // A set with no settled member yet splits the share evenly.
            let share = if acc_sum > 0.0 {
                w / acc_sum
            } else {
                cl.numerosity as f64 / set_size
            };
            cl.fitness += beta * (share - cl.fitness);
        }

        let mut cf_ids: Vec<CfId> = aset
            .iter()
            .flat_map(|&id| self.pop.get(id).condition().iter().map(|cf| cf.id()))
            .collect();
        cf_ids.sort_unstable();
        cf_ids.dedup();
        self.of.update_cf_fitness(&cf_ids, &self.pop);
    }

    // Action-set subsumption: the most general experienced accurate member
    // absorbs every set-mate it structurally subsumes. This is what lets
    // numerosity concentrate on niche champions instead of spreading over
    // endless structural variants.
    fn subsume_action_set(&mut self, aset: Vec<ClassifierId>) -> Vec<ClassifierId> {
        let mut subsumer: Option<ClassifierId> = None;
        for &id in &aset {
            let cl = self.pop.get(id);
            if cl.experience <= self.cfg.theta_sub || cl.error >= self.cfg.eps_zero {
                continue;
            }
            let better = match subsumer {
                None => true,
                Some(best) => {
                    let b = self.pop.get(best);
                    let key = (cl.condition().len(), std::cmp::Reverse(cl.numerosity), id);
                    key < (b.condition().len(), std::cmp::Reverse(b.numerosity), best)
                }
            };
            if better {
                subsumer = Some(id);
            }
        }
        let Some(subsumer) = subsumer else {
            return aset;
        };
        let mut kept = Vec::with_capacity(aset.len());
        for &id in &aset {
            if id != subsumer
                && self.pop.get(subsumer).does_subsume(
                    self.pop.get(id),
                    self.cfg.theta_sub,
                    self.cfg.eps_zero,
                )
            {
                let absorbed = self.pop.get(id).numerosity;
                self.pop.add_numerosity(subsumer, absorbed);
                self.pop.remove_macro(id);
            } else {
                kept.push(id);
            }
        }
        kept
    }

    // Niche GA: tournament parents, uniform CF exchange, one structural
    // mutation per offspring, GA subsumption against the parents, then
    // deletion back down to the population cap.
    fn run_ga_if_due(&mut self, aset: &[ClassifierId], state: &[bool]) -> bool {
        let mut ts_weighted = 0.0;
        let mut num = 0.0;
        for &id in aset {
            let cl = self.pop.get(id);
            ts_weighted += cl.ga_timestamp as f64 * cl.numerosity as f64;
            num += cl.numerosity as f64;
        }
        if self.learning_steps as f64 - ts_weighted / num <= self.cfg.theta_ga {
            return false;
        }
        for &id in aset {
            self.pop.get_mut(id).ga_timestamp = self.learning_steps;
        }

        let context = (self.cfg.variant == Variant::GcffNcf)
            .then(|| NicheContext::from_action_set(aset, &self.pop));

        let p1 = self.tournament_select(aset);
        let p2 = self.tournament_select(aset);
        let action = self.pop.get(p1).action();
        let mut conditions = [
            self.pop.get(p1).condition().to_vec(),
            self.pop.get(p2).condition().to_vec(),
        ];
        let mut prediction = [self.pop.get(p1).prediction, self.pop.get(p2).prediction];
        let mut error = [self.pop.get(p1).error, self.pop.get(p2).error];
        let mut fitness = [self.pop.get(p1).fitness, self.pop.get(p2).fitness];
        let mut set_size = [
            self.pop.get(p1).action_set_size,
            self.pop.get(p2).action_set_size,
        ];

        if self.rng.gen_bool(self.cfg.chi) {
            // Uniform exchange over the pooled CFs: each one lands in either
            // offspring, so lengths recombine along with content.
            let pool: Vec<Arc<CodeFragment>> = conditions[0]
                .drain(..)
                .collect::<Vec<_>>()
                .into_iter()
                .chain(conditions[1].drain(..))
                .collect();
            for cf in pool {
                let child = if self.rng.gen_bool(0.5) { 0 } else { 1 };
                if (conditions[child].len() as u32) < self.condition_cap {
                    conditions[child].push(cf);
                } else {
                    conditions[1 - child].push(cf);
                }
            }
            prediction = [(prediction[0] + prediction[1]) / 2.0; 2];
            error = [(error[0] + error[1]) / 2.0; 2];
            fitness = [(fitness[0] + fitness[1]) / 2.0; 2];
            set_size = [(set_size[0] + set_size[1]) / 2.0; 2];
        }

        for (i, condition) in conditions.into_iter().enumerate() {
            let mut condition = condition;
            if self.rng.gen_bool(self.cfg.mu) {
                self.mutate_condition(&mut condition, state, context.as_ref());
            }
            let id = self.pop.allocate_id();
            let mut child = Classifier::new(id, condition, action, self.learning_steps);
            child.prediction = prediction[i];
            child.error = error[i];
            child.fitness = 0.1 * fitness[i];
            child.action_set_size = set_size[i];

            let subsumer = [p1, p2].into_iter().find(|&p| {
                self.pop
                    .get(p)
                    .does_subsume(&child, self.cfg.theta_sub, self.cfg.eps_zero)
            });
            match subsumer {
                Some(p) => self.pop.add_numerosity(p, 1),
                None => {
                    self.pop.insert(child);
                }
            }
        }
        self.enforce_population_limit();
        true
    }

    // One structural edit, chosen uniformly among the applicable ones:
    // add a CF (below the cap), remove one, or replace one. New CFs are
    // negated if needed so the offspring still matches the current state.
    fn mutate_condition(
        &mut self,
        condition: &mut Vec<Arc<CodeFragment>>,
        state: &[bool],
        context: Option<&NicheContext>,
    ) {
        #[derive(Clone, Copy)]
        enum Edit {
            Add,
            Remove,
            Replace,
        }
        let mut edits = Vec::with_capacity(3);
        if (condition.len() as u32) < self.condition_cap {
            edits.push(Edit::Add);
        }
        if !condition.is_empty() {
            edits.push(Edit::Remove);
            edits.push(Edit::Replace);
        }
        if edits.is_empty() {
            return;
        }
        match edits[self.rng.gen_range(0..edits.len())] {
            Edit::Add => {
                let cf = self.request_matching_cf(state, context);
                condition.push(cf);
            }
            Edit::Remove => {
                let i = self.rng.gen_range(0..condition.len());
                condition.remove(i);
            }
            Edit::Replace => {
                let i = self.rng.gen_range(0..condition.len());
                condition[i] = self.request_matching_cf(state, context);
            }
        }
    }

    // Tournament over micro-classifiers: draw a fraction of the set's
    // micro size and keep the best micro fitness.
    fn tournament_select(&mut self, aset: &[ClassifierId]) -> ClassifierId {
        let total: u64 = aset
            .iter()
            .map(|&id| self.pop.get(id).numerosity as u64)
            .sum();
        let draws = ((self.cfg.tournament_fraction * total as f64).ceil() as u64).max(1);
        let mut best: Option<(ClassifierId, f64)> = None;
        for _ in 0..draws {
            let mut pick = self.rng.gen_range(0..total);
            let mut chosen = aset[0];
            for &id in aset {
                let n = self.pop.get(id).numerosity as u64;
                if pick < n {
                    chosen = id;
                    break;
                }
                pick -= n;
            }
            let micro_fitness = self.pop.get(chosen).micro_fitness();
            if best.map(|(_, b)| micro_fitness > b).unwrap_or(true) {
                best = Some((chosen, micro_fitness));
            }
        }
        best.expect("action sets are never empty here").0
    }

    // Roulette deletion on the usual vote: action-set size times
    // numerosity, inflated for experienced low-fitness members.
    fn enforce_population_limit(&mut self) {
        while self.pop.micro_count() > self.cfg.pop_size as u64 {
            let mean_fitness = self.pop.mean_micro_fitness();
            let votes: Vec<(ClassifierId, f64)> = self
                .pop
                .members()
                .iter()
                .map(|cl| {
                    let mut vote = cl.action_set_size * cl.numerosity as f64;
                    let micro = cl.micro_fitness();
                    if cl.experience > self.cfg.theta_del
                        && micro < self.cfg.delta * mean_fitness
                        && micro > 0.0
                    {
                        vote *= mean_fitness / micro;
                    }
                    (cl.id(), vote)
                })
                .collect();
            let total: f64 = votes.iter().map(|(_, v)| v).sum();
            let victim = if total > 0.0 {
                let mut draw = self.rng.gen::<f64>() * total;
                let mut chosen = votes[votes.len() - 1].0;
                for &(id, vote) in &votes {
                    draw -= vote;
                    if draw <= 0.0 && vote > 0.0 {
                        chosen = id;
                        break;
                    }
                }
                chosen
            } else {
                votes[0].0
            };
            self.pop.decrement(victim);
        }
    }
}
