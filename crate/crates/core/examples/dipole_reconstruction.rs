//! Reconstructs an offset Hertzian dipole from far measurements and compares
//! near, measurement-sphere and far errors of each pseudoinverse, for the
//! default local constraint shell and for a ring of constraint dipoles.

use consrc::config::{Layout, RunConfig};
use consrc::experiments::{reconstruct_summary, Prepared};

fn main() -> consrc::Result<()> {
    let base = RunConfig::default();
    let prepared = Prepared::new(&base)?;
    let ring = RunConfig {
        constraint_layout: Layout::Ring,
        constraint_radius: 0.8,
        ..base.clone()
    };
    for (name, cfg) in [("shell 0.1a around the truth", base), ("ring at 0.8a", ring)] {
        let s = reconstruct_summary(&cfg, &prepared)?;
        println!("{name}: rank {} of {}", s.rank, 4 * s.n_s);
        println!("  {:<15} {:>10} {:>10} {:>10} {:>10}", "method", "near", "meas", "far", "residual");
        for m in &s.methods {
            println!(
                "  {:<15} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e}",
                m.method.label(),
                m.near_error,
                m.measurement_error,
                m.far_error,
                m.measurement_residual
            );
        }
    }
    Ok(())
}
