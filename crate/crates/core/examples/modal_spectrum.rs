//! Analytic sphere-to-sphere transfer magnitudes and the per-degree gains of
//! the four pseudoinverses on the discretized scenario.

use consrc::config::RunConfig;
use consrc::experiments::{spectrum_analysis, Prepared};
use consrc::modes::{default_n_max, modal_spectrum, Polarization};

fn main() -> consrc::Result<()> {
    let cfg = RunConfig::default();
    let prepared = Prepared::new(&cfg)?;
    let sc = &prepared.scenario;
    let k = sc.medium.k();

    let n_max = default_n_max(k, sc.meas.radius);
    let spectrum = modal_spectrum(sc.gamma.radius, sc.meas.radius, k, n_max)?;
    println!("ka = {:.3}, k r_m = {:.3}", k * sc.gamma.radius, k * sc.meas.radius);
    for n in [1, 3, 5, 10, 15, 20, 30, n_max] {
        println!("  |T_{n:<2}| = {:.3e}", spectrum.magnitude(n, Polarization::TE).unwrap());
    }

    let a = spectrum_analysis(&cfg, &prepared)?;
    println!("\n n pol       mpp     {{1}}-inv       X B•        R‡");
    for d in &a.degrees {
        println!(
            "{:2} {}  {:9.2e} {:9.2e} {:9.2e} {:9.2e}",
            d.n, d.pol.label(), d.mpp, d.one_inverse, d.constraint_fit, d.constrained
        );
    }
    let s = &a.summary;
    println!("\nknee at n = {:?}, largest MPP gain beyond it {:.2e}", s.knee, s.max_mpp_gain_past_knee);
    if let Some(b) = &s.best_enhancement {
        println!(
            "best covered evanescent mode n = {} m = {} {}: R‡/MPP = {:.1} (coverage {:.1e})",
            b.n, b.m, b.pol.label(), b.ratio, b.coverage
        );
    }
    Ok(())
}
