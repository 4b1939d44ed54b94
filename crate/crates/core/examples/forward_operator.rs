//! Assembles the radiation operator for a coarse scenario, checks one column
//! against the closed-form field of the matching current element and prints
//! the singular value decay.

use consrc::em::{DipoleSource, Medium};
use consrc::geometry::{fibonacci_sphere, scale, SurfaceKind};
use consrc::numerics::svd;
use consrc::scenario::{assemble_r, relative_l2, synth_measurements};

fn main() -> consrc::Result<()> {
    let medium = Medium::vacuum(5e9)?;
    let a = 0.04;
    let gamma = fibonacci_sphere(200, a, SurfaceKind::Equivalent);
    let meas = fibonacci_sphere(200, a + 2.0 * medium.wavelength(), SurfaceKind::Measurement);
    let r = assemble_r(&gamma, &meas, &medium)?;
    println!("R is {} x {}, ka = {:.3}", r.rows(), r.cols(), medium.k() * a);

    // column 2 N_s + 2 i holds eta J along t1 at node i, weighted by w_i
    let node = 17;
    let f = gamma.frames[node];
    let ns = gamma.len();
    let column = r.column(2 * ns + 2 * node);
    let moment = scale(f.t1, gamma.weights[node] / medium.eta());
    let element = DipoleSource::electric(f.position, moment)?;
    let exact = synth_measurements(&element, &meas, &medium)?;
    println!("column vs current element: relative error {:.2e}", relative_l2(&column, exact.as_slice()));

    let s = svd(&r)?.s;
    for i in (0..s.len()).step_by(80) {
        println!("sigma[{i:4}] / sigma[0] = {:.3e}", s[i] / s[0]);
    }
    println!("spread: {:.1} decades", (s[0] / s[s.len() - 1]).log10());
    Ok(())
}
