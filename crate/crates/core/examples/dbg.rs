use tandemq_core::model::ModelParams;
use tandemq_core::psa::PsaSolver;
use tandemq_core::{oracle, C64};

fn main() {
    let base = ModelParams::new(1.0, 0.5, 4.0, 5.0, 2.0, 4.0, 0.5).unwrap();
    for p in [0.05, 0.1, 0.2, 0.5] {
        let params = base.with_p(p);
        let table = oracle::stationary_distribution(&oracle::build_generator(&params, 200).unwrap()).unwrap();
        let om = table.metrics();
        let solver = PsaSolver::new(params).unwrap();
        print!("p={p}: ctmc EQ1={:.8} EQ2={:.8} | rel err:", om.eq1, om.eq2);
        for m in [0usize, 3, 5, 6] {
            let pm = solver.metrics(m).unwrap();
            let e1 = ((pm.eq1 - om.eq1) / om.eq1).abs();
            let e2 = ((pm.eq2 - om.eq2) / om.eq2).abs();
            print!("  M{m}: {:.2e}/{:.2e}", e1, e2);
        }
        println!();
    }
    // PSA pgf vs oracle at p = 0.1.
    let params = base.with_p(0.1);
    let table = oracle::stationary_distribution(&oracle::build_generator(&params, 200).unwrap()).unwrap();
    let solver = PsaSolver::new(params).unwrap();
    let c = |re: f64| C64::new(re, 0.0);
    let (pgf0, pgf1) = solver.pgf(c(0.5), c(0.5), 5).unwrap();
    let o0 = table.pgf(c(0.5), c(0.5), 0);
    let o1 = table.pgf(c(0.5), c(0.5), 1);
    println!("pgf0 diff {:.3e}, pgf1 diff {:.3e}", (pgf0 - o0).norm(), (pgf1 - o1).norm());
}
