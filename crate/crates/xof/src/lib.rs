//! An accuracy-based learning classifier system whose rule conditions are
//! conjunctions of *code fragments* — small Boolean expression trees grown
//! online from the building blocks that already serve good rules.
//!
//! The crate provides:
//!
//! * [`cf`] — code-fragment trees: evaluation, structural accounting,
//!   canonical identity and an interning registry;
//! * [`rule`] — classifiers, matching, subsumption and the population;
//! * [`of`] — the online feature-generation module: the Observed List,
//!   CF-fitness schemes and per-niche calibration;
//! * [`xcs`] — the explore/exploit learning loop with covering, the niche
//!   GA and deletion;
//! * [`problems`] — Boolean benchmarks (even-parity, multiplexer and the
//!   hierarchical 18-bit problems);
//! * [`metrics`] — moving accuracy and the niche-averaged generality rate;
//! * [`oracle`] — independent brute-force ground truth used for
//!   verification;
//! * [`experiment`] — seeded runs, sweeps and their CSV/dump outputs;
//! * [`report`] — CSV reading and SVG learning-curve plots.
//!
//! ```
//! use xof::config::{ExperimentConfig, Variant};
//! use xof::problems::Problem;
//! use xof::xcs::XcsRun;
//!
//! let mut cfg = ExperimentConfig::default();
//! cfg.pop_size = 300;
//! cfg.variant = Variant::Gcff;
//! let mut run = XcsRun::new(Problem::multiplexer(2), cfg, 7).unwrap();
//! run.run_trials(500);
//! assert!(run.population().micro_count() <= 300);
//! ```

pub mod cf;
pub mod config;
pub mod experiment;
pub mod metrics;
pub mod of;
pub mod oracle;
pub mod problems;
pub mod report;
pub mod rule;
pub mod xcs;

#[cfg(doctest)]
mod book {
    //! Keeps the guide's code samples compiling and passing; each chapter
    //! of `book/src` is run as a doctest.

    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(code_fragments, "../../../book/src/code-fragments.md");
    chapter!(classifiers, "../../../book/src/classifiers.md");
    chapter!(learning_loop, "../../../book/src/learning-loop.md");
    chapter!(cf_fitness, "../../../book/src/cf-fitness.md");
    chapter!(observed_list, "../../../book/src/observed-list.md");
    chapter!(niching, "../../../book/src/niching.md");
    chapter!(benchmarks, "../../../book/src/benchmarks.md");
    chapter!(structural_efficiency, "../../../book/src/structural-efficiency.md");
    chapter!(experiments, "../../../book/src/experiments.md");
}
