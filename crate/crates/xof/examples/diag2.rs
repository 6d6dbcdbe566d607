// Scratch diagnostic: phase-1 structure on parity. Not part of the
// deliverable surface.

use xof::config::{ExperimentConfig, Variant};
use xof::oracle;
use xof::problems::Problem;
use xof::xcs::XcsRun;

fn main() {
    if std::env::args().nth(1).as_deref() == Some("mux-flip") {
        mux_flip();
        return;
    }
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().unwrap_or_else(|| "1".into()).parse().unwrap();
    let trials: u64 = args.next().unwrap_or_else(|| "100000".into()).parse().unwrap();

    let mut cfg = ExperimentConfig::default();
    cfg.pop_size = 2000;
    cfg.variant = Variant::GcffNcf;
    cfg.p_new_cf = 0.1;
    let problem = Problem::even_parity(7);
    let mut run = XcsRun::new(problem.clone(), cfg, seed).unwrap();

    println!("trials  macro  len_mean  det_rules  acc_exp  best_gen  ol  ol_depth");
    for step in 0..(trials / 10_000) {
        run.run_trials(10_000);
        let pop = run.population();
        let macro_n = pop.len();
        let len_mean: f64 = pop.members().iter().map(|c| c.condition().len() as f64).sum::<f64>()
            / macro_n.max(1) as f64;
        // determined = condition's matched set has a single parity (accurate by construction)
        let mut det = 0usize;
        let mut acc_exp = 0usize;
        let mut best_gen = 0.0f64;
        for cl in pop.members() {
            let gen = oracle::condition_generality(cl.condition(), 7).unwrap();
            let matched = (gen * 128.0).round() as u32;
            if matched > 0 {
                let mut parities = [false, false];
                for idx in 0..128u32 {
                    let state: Vec<bool> = (0..7).map(|k| (idx >> k) & 1 == 1).collect();
                    if cl.matches(&state) {
                        parities[(idx.count_ones() % 2) as usize] = true;
                    }
                }
                if !(parities[0] && parities[1]) {
                    det += 1;
                    if cl.error < 10.0 && cl.experience > 25 {
                        acc_exp += 1;
                        best_gen = best_gen.max(gen);
                    }
                }
            }
        }
        println!(
            "{:6}  {:5}  {:8.2}  {:9}  {:7}  {:8.4}  {:2}  {:.2}",
            (step + 1) * 10_000,
            macro_n,
            len_mean,
            det,
            acc_exp,
            best_gen,
            run.of().ol_len(),
            run.of().mean_ol_depth(),
        );
    }
}

// Steps the last thousand trials one at a time, auditing the live
// population's prediction array against the labels after each.
fn mux_flip() {
    let mut cfg = ExperimentConfig::default();
    cfg.pop_size = 500;
    cfg.variant = Variant::Gcff;
    let problem = Problem::multiplexer(2);
    let mut run = XcsRun::new(problem.clone(), cfg, 0).unwrap();
    run.run_trials(19_000);
    let mut mistakes = 0;
    let mut audits = Vec::new();
    for t in 0..1000u32 {
        let outcome = run.run_trial();
        if outcome.correct == Some(false) {
            mistakes += 1;
        }
        if t % 100 == 0 {
            let pop = run.population();
            let mut wrong = 0;
            for idx in 0..64u32 {
                let state: Vec<bool> = (0..6).map(|k| (idx >> k) & 1 == 1).collect();
                let label = problem.label(&state);
                let mut weighted = [0.0f64; 2];
                let mut weight = [0.0f64; 2];
                for cl in pop.members() {
                    if cl.matches(&state) {
                        let a = cl.action() as usize;
                        weighted[a] += cl.prediction * cl.fitness;
                        weight[a] += cl.fitness;
                    }
                }
                let pa = |a: usize| {
                    if weight[a] > 0.0 { weighted[a] / weight[a] } else { f64::NEG_INFINITY }
                };
                if ((pa(1) > pa(0)) as u8) != label {
                    wrong += 1;
                }
            }
            audits.push(wrong);
        }
    }
    println!("exploit mistakes in trials 19000..20000: {mistakes}");
    println!("wrong-state audits every 100 trials: {audits:?}");
}
