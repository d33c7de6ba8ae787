use nmixfact::baselines::{nmixture_fit, poisson_nmf};
use nmixfact::datagen::{generate, trial_seed, GenParams};
use nmixfact::driver::fit;
use nmixfact::metrics::{alpha_mse, graph_mse, perm_mse};
use nmixfact::types::{PerBlock, SolverConfig};
use std::sync::Mutex;
use std::thread;

#[derive(Default, Clone, Copy)]
struct Row { pu: f64, pv: f64, am: f64, guu: f64, gvv: f64, guv: f64 }

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let eps0: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(1.0);
    let gamma: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(2.0);
    let trials: u64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(8);

    let acc: Mutex<Vec<(Row, Row, Row)>> = Mutex::new(Vec::new());
    thread::scope(|sc| {
        for w in 0..2u64 {
            let acc = &acc;
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
                    let eval = |u: &ndarray::Array2<f64>, v: &ndarray::Array2<f64>, a: Option<&ndarray::Array1<f64>>| Row {
                        pu: perm_mse(u, &truth.u0).unwrap().mse,
                        pv: perm_mse(v, &truth.v0).unwrap().mse,
                        am: a.map(|a| alpha_mse(a, &truth.alpha0).unwrap()).unwrap_or(0.0),
                        guu: graph_mse(&u.dot(&u.t()), &tuu).unwrap(),
                        gvv: graph_mse(&v.dot(&v.t()), &tvv).unwrap(),
                        guv: graph_mse(&u.dot(&v.t()), &truth.lambda_true).unwrap(),
                    };
                    let prop = fit(&data, &z, &cfg).unwrap();
                    let nmix = nmixture_fit(&data, &z, &cfg).unwrap();
                    let pn = poisson_nmf(data.y_sum(), cfg.rank, cfg.max_outer, 1, cfg.p0, cfg.seed).unwrap();
                    let r = (
                        eval(&prop.factors.u, &prop.factors.v, Some(&prop.detection.alpha)),
                        eval(&nmix.factors.u, &nmix.factors.v, Some(&nmix.detection.alpha)),
                        eval(&pn.u, &pn.v, None),
                    );
                    acc.lock().unwrap().push(r);
                }
            });
        }
    });
    let rows = acc.into_inner().unwrap();
    let n = rows.len() as f64;
    let mean = |f: &dyn Fn(&(Row, Row, Row)) -> Row| {
        let mut s = Row::default();
        for r in &rows { let x = f(r); s.pu += x.pu; s.pv += x.pv; s.am += x.am; s.guu += x.guu; s.gvv += x.gvv; s.guv += x.guv; }
        Row { pu: s.pu/n, pv: s.pv/n, am: s.am/n, guu: s.guu/n, gvv: s.gvv/n, guv: s.guv/n }
    };
    let p = mean(&|r| r.0); let m = mean(&|r| r.1); let q = mean(&|r| r.2);
    println!("eps0={eps0} gamma={gamma} trials={trials}");
    println!("          permU   permV   alpha    gUU      gVV      gUV");
    println!("proposed {:7.4} {:7.4} {:7.4} {:8.5} {:8.5} {:8.5}", p.pu, p.pv, p.am, p.guu, p.gvv, p.guv);
    println!("nmixture {:7.4} {:7.4} {:7.4} {:8.5} {:8.5} {:8.5}", m.pu, m.pv, m.am, m.guu, m.gvv, m.guv);
    println!("pnmf     {:7.4} {:7.4} {:7.4} {:8.5} {:8.5} {:8.5}", q.pu, q.pv, q.am, q.guu, q.gvv, q.guv);
}
