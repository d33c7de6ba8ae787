use nmixfact::datagen::{generate, trial_seed, GenParams};
use nmixfact::driver::fit_with;
use nmixfact::metrics::perm_mse;
use nmixfact::types::{PerBlock, SolverConfig};

fn main() {
    let seed_idx: u64 = std::env::args().nth(1).unwrap().parse().unwrap();
    let params = GenParams { seed: trial_seed(100, seed_idx), ..GenParams::default() };
    let (data, z, truth) = generate(&params).unwrap();
    let mut cfg = SolverConfig::default();
    cfg.eps0 = PerBlock::uniform(1.0);
    cfg.seed = trial_seed(200, seed_idx);
    let y_sum = data.y_sum().clone();

    let mut last_pu = 0.0;
    let result = fit_with(&data, &z, &cfg, |s| {
        if s.iter % 10 == 0 {
            // min counted lambda
            let lambda = s.factors.lambda();
            let mut min_counted = f64::INFINITY;
            for (idx, &y) in y_sum.indexed_iter() {
                if y > 0.0 { min_counted = min_counted.min(lambda[idx]); }
            }
            let pu = perm_mse(&s.factors.u, &truth.u0).unwrap().mse;
            last_pu = pu;
            println!("iter {:3}: permU={:.4} min_counted_lambda={:.3e}", s.iter, pu, min_counted);
        }
    }).unwrap();
    let _ = result;
    let _ = last_pu;
}
