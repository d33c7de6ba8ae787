use nmixfact::baselines::nmixture_fit;
use nmixfact::datagen::{generate, trial_seed, GenParams};
use nmixfact::driver::fit;
use nmixfact::metrics::{alpha_mse, perm_mse};
use nmixfact::types::{PerBlock, SolverConfig};
use std::sync::Mutex;
use std::thread;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let trials: u64 = args[1].parse().unwrap();
    let run_nmix = args.get(2).map(|s| s == "nmix").unwrap_or(false);
    let configs: Vec<(f64, f64)> = if run_nmix {
        vec![]
    } else {
        args[2..].chunks(2).map(|c| (c[0].parse().unwrap(), c[1].parse().unwrap())).collect()
    };

    if run_nmix {
        let rows: Mutex<Vec<(f64, f64)>> = Mutex::new(Vec::new());
        thread::scope(|sc| {
            for w in 0..2u64 {
                let rows = &rows;
                sc.spawn(move || {
                    for t in (w..trials).step_by(2) {
                        let params = GenParams { seed: trial_seed(100, t), ..GenParams::default() };
                        let (data, z, truth) = generate(&params).unwrap();
                        let mut cfg = SolverConfig::default();
                        cfg.seed = trial_seed(200, t);
                        let r = nmixture_fit(&data, &z, &cfg).unwrap();
                        rows.lock().unwrap().push((
                            perm_mse(&r.factors.u, &truth.u0).unwrap().mse,
                            alpha_mse(&r.detection.alpha, &truth.alpha0).unwrap()));
                    }
                });
            }
        });
        let rows = rows.into_inner().unwrap();
        let n = rows.len() as f64;
        let esc = rows.iter().filter(|r| r.0 < 0.05).count();
        println!("nmixture: escape {esc}/{} meanU={:.4} meanA={:.4}", rows.len(),
            rows.iter().map(|r| r.0).sum::<f64>()/n, rows.iter().map(|r| r.1).sum::<f64>()/n);
        return;
    }

    for (eps0, gamma) in configs {
        let rows: Mutex<Vec<(f64, f64)>> = Mutex::new(Vec::new());
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
                        let r = fit(&data, &z, &cfg).unwrap();
                        rows.lock().unwrap().push((
                            perm_mse(&r.factors.u, &truth.u0).unwrap().mse,
                            alpha_mse(&r.detection.alpha, &truth.alpha0).unwrap()));
                    }
                });
            }
        });
        let rows = rows.into_inner().unwrap();
        let n = rows.len() as f64;
        let esc = rows.iter().filter(|r| r.0 < 0.05).count();
        println!("eps0={eps0:4} gamma={gamma:4}: escape {esc}/{} meanU={:.4} meanA={:.4}", rows.len(),
            rows.iter().map(|r| r.0).sum::<f64>()/n, rows.iter().map(|r| r.1).sum::<f64>()/n);
    }
}
