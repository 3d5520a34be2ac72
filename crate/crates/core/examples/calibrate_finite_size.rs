//! Measures |empirical − predicted| for Naive(1/3) at N = 20, 40, 80 and
//! prints the finite-size constant C with |dev| ≤ 3·se + C/N.
//!
//! cargo run --release -p orderbound-core --example calibrate_finite_size

use orderbound_core::rmt::{empirical_moments, predicted_moment, Ensemble, EnsembleSpec};
use orderbound_core::testfunc::make_naive;

const SEED: u64 = 20_240_917;

fn main() {
    let tf = make_naive(1.0 / 3.0).expect("valid width");
    let runs = [(20, 200_000), (40, 100_000), (80, 25_000)];
    println!("# ensemble,N,samples,order,empirical,predicted,std_error,excess_times_N");
    for ensemble in [Ensemble::SoEven, Ensemble::SoOdd] {
        let mut c: f64 = 0.0;
        for (n, samples) in runs {
            let spec = EnsembleSpec::new(ensemble, n, samples, SEED);
            let emp = empirical_moments(&spec, &tf, 4).expect("valid spec");
            for order in [2, 3, 4] {
                let e = emp.centered(order).unwrap();
                let se = emp.std_error(order).unwrap();
                let p = predicted_moment(ensemble, &tf, order).unwrap();
                let excess = ((e - p).abs() - 3.0 * se).max(0.0) * n as f64;
                c = c.max(excess);
                println!("{ensemble},{n},{samples},{order},{e:.6},{p:.6},{se:.6},{excess:.4}");
            }
        }
        println!("# {ensemble} C = {c:.4}");
    }
}
