use nmixfact::datagen::{generate, trial_seed, GenParams};
use nmixfact::driver::fit_with;
use nmixfact::metrics::{alpha_mse, perm_mse};
use nmixfact::types::{PerBlock, SolverConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let eps0: f64 = args[1].parse().unwrap();
    let gamma: f64 = args[2].parse().unwrap();
    let seed_idx: u64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0);

    let params = GenParams { seed: trial_seed(100, seed_idx), ..GenParams::default() };
    let (data, z, truth) = generate(&params).unwrap();
    let mut cfg = SolverConfig::default();
    cfg.eps0 = PerBlock::uniform(eps0);
    cfg.gamma = gamma;
    cfg.seed = trial_seed(200, seed_idx);

    let mut rows = Vec::new();
    let result = fit_with(&data, &z, &cfg, |s| {
        if s.iter % 10 == 0 {
            rows.push((s.iter,
                perm_mse(&s.factors.u, &truth.u0).unwrap().mse,
                perm_mse(&s.factors.v, &truth.v0).unwrap().mse,
                alpha_mse(&s.detection.alpha, &truth.alpha0).unwrap()));
        }
    }).unwrap();
    print!("eps0={eps0:5} gamma={gamma:4} ev={:3} rho={:8.2e} |", result.trace.penalty_events.len(), result.aux.uu.rho);
    for (it, pu, _, _) in &rows {
        if *it % 20 == 0 { print!(" {pu:6.3}"); }
    }
    let last = rows.last().unwrap();
    println!(" | aM={:.4}", last.3);
}
