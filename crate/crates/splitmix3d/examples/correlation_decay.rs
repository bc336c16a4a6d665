//! Estimates the quenched correlation decay rate of the split ABC flow:
//! for a fixed schedule realization, correlations of Fourier observables
//! against the uniform measure decay exponentially in the cycle count. Each
//! seed gets its own fit on the geometric mean over observables; the rates
//! agree across seeds up to quenched fluctuations.

use splitmix3d::fields::SplitVectorField;
use splitmix3d::rng::stream_seed;
use splitmix3d::transport::{mixing_rate, FourierField};

fn main() {
    let field = SplitVectorField::abc(1.0, 1.0, 1.0);
    let modes = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]];
    let pairs: Vec<(FourierField, FourierField)> = modes
        .iter()
        .map(|&k| {
            let f = FourierField::real_cosine(k).expect("valid mode");
            (f.clone(), f)
        })
        .collect();
    let seeds: Vec<u64> = (0..4).map(|i| stream_seed(11, i)).collect();

    println!("running {} schedule realizations at grid 64^3...", seeds.len());
    let report = mixing_rate(&field, 1.0, &pairs, &seeds, 64, (5, 40)).expect("valid run");

    println!("\nrealization    slope     R^2");
    for (i, fit) in report.per_seed.iter().enumerate() {
        println!("{:>11}  {:8.4}   {:.3}", i + 1, fit.slope, fit.r2);
    }
    println!(
        "\npooled rate over all seeds and observables: {:.4} per cycle (R^2 {:.3})",
        report.pooled.slope, report.pooled.r2
    );
    println!("quenched curves are noisy realization by realization;");
    println!("the decay trend is what the theory guarantees.");
}
