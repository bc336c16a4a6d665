//! Advects a passive scalar by the split ABC flow with an exact spectral
//! pullback and watches it homogenize: the H^{-1} norm decays exponentially
//! while the L^2 norm is conserved, the filamentation signature of mixing.
//! The series stops being trustworthy once aliased mass appears, so the
//! report flags the first aliased cycle.

use splitmix3d::fields::SplitVectorField;
use splitmix3d::splitting::SplitSchedule;
use splitmix3d::stats::fit_rate;
use splitmix3d::transport::{advected_norm_series, FourierField};

fn main() {
    let field = SplitVectorField::abc(1.0, 1.0, 1.0);
    let f0 = FourierField::real_cosine([1, 0, 0]).expect("valid mode");
    let schedule = SplitSchedule::new(5, 0.3).expect("positive mean");
    let series = advected_norm_series(&field, &schedule, 20, &f0, 1.0, 64).expect("valid run");

    println!("cycle   H^-1 norm   L^2 norm   aliased mass");
    for m in (0..series.steps.len()).step_by(2) {
        println!(
            "{:5}   {:9.4}   {:8.4}   {:10.2e}",
            series.steps[m], series.h_neg[m], series.l2[m], series.alias_fraction[m]
        );
    }

    let end = series.first_alias.unwrap_or(series.steps.len());
    let pts: Vec<(f64, f64)> =
        (0..end).map(|m| (series.steps[m] as f64, series.h_neg[m])).collect();
    let fit = fit_rate(&pts, 0.0).expect("enough pre-alias points");
    match series.first_alias {
        Some(m) => println!("\nfirst aliased cycle: {m}; fitting the {end} clean cycles"),
        None => println!("\nno aliasing within the horizon"),
    }
    println!("fitted H^-1 decay rate: {:.3} per cycle (R^2 {:.3})", fit.slope, fit.r2);
}
