use nmixfact::baselines::{nmixture_fit, poisson_nmf};
use nmixfact::datagen::{generate, trial_seed, GenParams};
use nmixfact::driver::fit;
use nmixfact::metrics::{alpha_mse, perm_mse};
use nmixfact::types::{PerBlock, SolverConfig};
use std::sync::Mutex;
use std::thread;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let eps0: f64 = args[1].parse().unwrap();
    let gamma: f64 = args[2].parse().unwrap();
    let trials: u64 = args[3].parse().unwrap();
    let rows: Mutex<Vec<(u64, f64, f64, f64, f64, f64)>> = Mutex::new(Vec::new());
    thread::scope(|sc| {
        for w in 0..2u64 {
            let rows = &rows;
            sc.spawn(move || {
                for t in (w..trials).step_by(2) {
                    let params = GenParams { seed: trial_seed(100, t), ..GenParams::default() };
                    let (data, z, truth) = generate(&params).unwrap();
                    let mut cfg = SolverConfig::default();
                    cfg.eps0 = PerBlock::uniform(eps0);
                    cfg.gamma = gamma;
                    cfg.seed = trial_seed(200, t);
                    let prop = fit(&data, &z, &cfg).unwrap();
                    let nmix = nmixture_fit(&data, &z, &cfg).unwrap();
                    let pn = poisson_nmf(data.y_sum(), cfg.rank, cfg.max_outer, 1, cfg.p0, cfg.seed).unwrap();
                    rows.lock().unwrap().push((t,
                        perm_mse(&prop.factors.u, &truth.u0).unwrap().mse,
                        perm_mse(&nmix.factors.u, &truth.u0).unwrap().mse,
                        perm_mse(&pn.u, &truth.u0).unwrap().mse,
                        alpha_mse(&prop.detection.alpha, &truth.alpha0).unwrap(),
                        alpha_mse(&nmix.detection.alpha, &truth.alpha0).unwrap()));
                }
            });
        }
    });
    let mut rows = rows.into_inner().unwrap();
    rows.sort_by_key(|r| r.0);
    println!("seed  prop_pU  nmix_pU  pnmf_pU | prop_aM nmix_aM");
    for (t, a, b, c, d, e) in &rows {
        println!("{t:4} {a:8.4} {b:8.4} {c:8.4} |{d:8.4} {e:8.4}");
    }
}
