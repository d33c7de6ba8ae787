use nmixfact::baselines::nmixture_fit;
use nmixfact::datagen::{generate, trial_seed, GenParams};
use nmixfact::driver::fit;
use nmixfact::metrics::{alpha_mse, graph_mse, perm_mse};
use nmixfact::types::{PerBlock, SolverConfig};
use std::sync::Mutex;
use std::thread;

#[derive(Clone, Copy, Default)]
struct M { pu: f64, pv: f64, am: f64, guu: f64, gvv: f64, guv: f64, auu: f64, avv: f64, auv: f64, esc: f64 }

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let trials: u64 = args[1].parse().unwrap();
    let mode = &args[2]; // "nmix" or "eps0,gamma"
    let (eps0, gamma, nmix) = if mode == "nmix" {
        (1.0, 2.0, true)
    } else {
        let parts: Vec<f64> = mode.split(',').map(|s| s.parse().unwrap()).collect();
        (parts[0], parts[1], false)
    };

    let acc: Mutex<Vec<M>> = Mutex::new(Vec::new());
    thread::scope(|sc| {
        for w in 0..2u64 {
            let acc = &acc;
            let eps0 = eps0; let gamma = gamma; let nmix = nmix;
            sc.spawn(move || {
                for t in (w..trials).step_by(2) {
                    let params = GenParams { seed: trial_seed(100, t), ..GenParams::default() };
                    let (data, z, truth) = generate(&params).unwrap();
                    let mut cfg = SolverConfig::default();
                    cfg.eps0 = PerBlock::uniform(eps0);
                    cfg.gamma = gamma;
                    cfg.seed = trial_seed(200, t);
                    let tuu = truth.u0.dot(&truth.u0.t());
                    let tvv = truth.v0.dot(&truth.v0.t());
                    let r = if nmix { nmixture_fit(&data, &z, &cfg).unwrap() } else { fit(&data, &z, &cfg).unwrap() };
                    let pu = perm_mse(&r.factors.u, &truth.u0).unwrap().mse;
                    let m = M {
                        pu,
                        pv: perm_mse(&r.factors.v, &truth.v0).unwrap().mse,
                        am: alpha_mse(&r.detection.alpha, &truth.alpha0).unwrap(),
                        guu: graph_mse(&r.factors.u.dot(&r.factors.u.t()), &tuu).unwrap(),
                        gvv: graph_mse(&r.factors.v.dot(&r.factors.v.t()), &tvv).unwrap(),
                        guv: graph_mse(&r.factors.lambda(), &truth.lambda_true).unwrap(),
                        auu: graph_mse(&r.aux.uu.a, &tuu).unwrap(),
                        avv: graph_mse(&r.aux.vv.a, &tvv).unwrap(),
                        auv: graph_mse(&r.aux.uv.a, &truth.lambda_true).unwrap(),
                        esc: if pu < 0.05 { 1.0 } else { 0.0 },
                    };
                    acc.lock().unwrap().push(m);
                }
            });
        }
    });
    let rows = acc.into_inner().unwrap();
    let n = rows.len() as f64;
    let mut s = M::default();
    for r in &rows {
        s.pu += r.pu/n; s.pv += r.pv/n; s.am += r.am/n; s.guu += r.guu/n; s.gvv += r.gvv/n;
        s.guv += r.guv/n; s.auu += r.auu/n; s.avv += r.avv/n; s.auv += r.auv/n; s.esc += r.esc;
    }
    println!("{mode} (n={}): esc={} pU={:.4} pV={:.4} aM={:.4} | gM {:.6} {:.6} {:.6} | gA {:.6} {:.6} {:.6}",
        rows.len(), s.esc, s.pu, s.pv, s.am, s.guu, s.gvv, s.guv, s.auu, s.avv, s.auv);
}
