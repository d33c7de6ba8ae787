use nmixfact::baselines::nmixture_fit;
use nmixfact::datagen::{generate, trial_seed, GenParams};
use nmixfact::driver::fit;
use nmixfact::metrics::perm_mse;
use nmixfact::types::{PerBlock, SolverConfig};

fn main() {
    let seed_idx: u64 = std::env::args().nth(1).unwrap().parse().unwrap();
    let params = GenParams { seed: trial_seed(100, seed_idx), ..GenParams::default() };
    let (data, z, truth) = generate(&params).unwrap();
    let mut cfg = SolverConfig::default();
    cfg.eps0 = PerBlock::uniform(1.0);
    cfg.seed = trial_seed(200, seed_idx);
    let prop = fit(&data, &z, &cfg).unwrap();
    let nmix = nmixture_fit(&data, &z, &cfg).unwrap();
    let col_norms = |m: &ndarray::Array2<f64>| -> Vec<f64> {
        (0..m.ncols()).map(|f| m.column(f).iter().map(|x| x*x).sum::<f64>().sqrt()).collect()
    };
    println!("seed {seed_idx}: permU prop={:.4} nmix={:.4}",
        perm_mse(&prop.factors.u, &truth.u0).unwrap().mse,
        perm_mse(&nmix.factors.u, &truth.u0).unwrap().mse);
    println!("prop U col norms: {:?}", col_norms(&prop.factors.u).iter().map(|x| (x*10.0).round()/10.0).collect::<Vec<_>>());
    println!("nmix U col norms: {:?}", col_norms(&nmix.factors.u).iter().map(|x| (x*10.0).round()/10.0).collect::<Vec<_>>());
    println!("true U col norms: {:?}", col_norms(&truth.u0).iter().map(|x| (x*10.0).round()/10.0).collect::<Vec<_>>());
    // column correlation matrix (estimate vs truth) for proposed
    let normalize = |m: &ndarray::Array2<f64>| {
        let mut out = m.clone();
        for f in 0..m.ncols() {
            let n = m.column(f).iter().map(|x| x*x).sum::<f64>().sqrt();
            if n > 0.0 { for i in 0..m.nrows() { out[(i, f)] /= n; } }
        }
        out
    };
    let pu = normalize(&prop.factors.u);
    let tu = normalize(&truth.u0);
    let corr = tu.t().dot(&pu);
    println!("best |corr| per TRUE column (prop): {:?}",
        (0..8).map(|g| {
            let mut best = 0.0f64;
            for f in 0..8 { best = best.max(corr[(g, f)].abs()); }
            (best * 100.0).round() / 100.0
        }).collect::<Vec<_>>());
}
