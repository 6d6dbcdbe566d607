// Scratch diagnostic: which niches still err after training, and what the
// prediction array looks like there. Not part of the deliverable surface.

use xof::config::{ExperimentConfig, Variant};
use xof::problems::Problem;
use xof::xcs::XcsRun;

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().unwrap_or_else(|| "1".into()).parse().unwrap();
    let trials: u64 = args.next().unwrap_or_else(|| "20000".into()).parse().unwrap();
    let p_new: f64 = args.next().unwrap_or_else(|| "0.5".into()).parse().unwrap();

    let mut cfg = ExperimentConfig::default();
    cfg.pop_size = 500;
    cfg.variant = Variant::Gcff;
    cfg.p_new_cf = p_new;
    let problem = Problem::multiplexer(2);
    let mut run = XcsRun::new(problem.clone(), cfg, seed).unwrap();
    run.run_trials(trials);

    // Exhaustive exploit audit over all 64 states.
    let mut wrong = 0;
    for idx in 0..64u32 {
        let state: Vec<bool> = (0..6).map(|k| (idx >> k) & 1 == 1).collect();
        let label = problem.label(&state);
        let pop = run.population();
        let mut weighted = [0.0f64; 2];
        let mut weight = [0.0f64; 2];
        let mut advocates = [0usize; 2];
        for cl in pop.members() {
            if cl.matches(&state) {
                let a = cl.action() as usize;
                weighted[a] += cl.prediction * cl.fitness;
                weight[a] += cl.fitness;
                advocates[a] += 1;
            }
        }
        let pa = |a: usize| {
            if weight[a] > 0.0 {
                weighted[a] / weight[a]
            } else {
                f64::NEG_INFINITY
            }
        };
        let chosen = (pa(1) > pa(0)) as u8;
        if chosen != label {
            wrong += 1;
            println!(
                "state {idx:06b} label {label} chose {chosen}: pa0={:.1} (w {:.3}, n {}) pa1={:.1} (w {:.3}, n {})",
                pa(0), weight[0], advocates[0], pa(1), weight[1], advocates[1]
            );
        }
    }
    println!("wrong states: {wrong}/64");

    // Profile the worst state: who props up the wrong action?
    let mut worst: Option<(u32, f64)> = None;
    for idx in 0..64u32 {
        let state: Vec<bool> = (0..6).map(|k| (idx >> k) & 1 == 1).collect();
        let label = problem.label(&state);
        let pop = run.population();
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
            if weight[a] > 0.0 {
                weighted[a] / weight[a]
            } else {
                f64::NEG_INFINITY
            }
        };
        let margin = pa(label as usize) - pa(1 - label as usize);
        if worst.map(|(_, m)| margin < m).unwrap_or(true) {
            worst = Some((idx, margin));
        }
    }
    if let Some((idx, margin)) = worst {
        let state: Vec<bool> = (0..6).map(|k| (idx >> k) & 1 == 1).collect();
        let label = problem.label(&state);
        println!("\nworst state {idx:06b} (label {label}, margin {margin:.1}):");
        let mut rows: Vec<_> = run
            .population()
            .members()
            .iter()
            .filter(|cl| cl.matches(&state) && cl.action() != label)
            .collect();
        rows.sort_by(|a, b| (b.prediction * b.fitness).total_cmp(&(a.prediction * a.fitness)));
        for cl in rows.iter().take(8) {
            println!(
                "  F={:.3} p={:.0} eps={:.0} exp={} num={} cfs={} cplx={}",
                cl.fitness,
                cl.prediction,
                cl.error,
                cl.experience,
                cl.numerosity,
                cl.condition().len(),
                cl.complexity()
            );
        }
    }

    // Fitness mass by accuracy class.
    let (mut acc_f, mut inacc_f) = (0.0, 0.0);
    let (mut acc_n, mut inacc_n) = (0u32, 0u32);
    for cl in run.population().members() {
        if cl.error < 10.0 && cl.experience > 20 {
            acc_f += cl.fitness;
            acc_n += 1;
        } else {
            inacc_f += cl.fitness;
            inacc_n += 1;
        }
    }
    println!("accurate-experienced: {acc_n} rules, fitness mass {acc_f:.2}");
    println!("other:                {inacc_n} rules, fitness mass {inacc_f:.2}");
}
