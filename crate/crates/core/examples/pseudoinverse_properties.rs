//! Penrose residuals of the Moore-Penrose inverse, a random {1}-inverse, the
//! constraint fit X B• and the constrained inverse on one rank-deficient matrix.

use consrc::numerics::{random_gaussian, random_rank, ComplexMatrix};
use consrc::pinv::{
    constrained_pinv, constraint_fit_pinv, mp_residuals, mpp, one_inverse_from_mpp, ConsistencyPolicy,
    ConstraintSet,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> consrc::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = random_rank(30, 45, 12, &mut rng);
    let ap = mpp(&a, 1e-10)?;
    let w = random_gaussian(45, 30, &mut rng);
    let v = random_gaussian(45, 30, &mut rng);
    let one = one_inverse_from_mpp(&a, &ap, &w, &v)?;

    // three known solutions and their data
    let xtil = random_gaussian(45, 3, &mut rng);
    let cs = ConstraintSet::for_operator(&a, xtil.clone(), None, ConsistencyPolicy::Project)?;
    let fit = constraint_fit_pinv(&cs, 1e-10)?;
    let constrained = constrained_pinv(&one, &cs, 1e-10)?;

    println!("{:<16} {:>10} {:>10} {:>10} {:>10}", "pseudoinverse", "r1", "r2", "r3", "r4");
    let list: [(&str, &ComplexMatrix); 4] =
        [("mpp", &ap), ("one_inverse", &one), ("constraint_fit", &fit), ("constrained", &constrained)];
    for (name, p) in list {
        let r = mp_residuals(&a, p)?;
        println!("{name:<16} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e}", r.r1, r.r2, r.r3, r.r4);
    }

    let back = consrc::numerics::matmul(&constrained, cs.btil())?.sub(&xtil)?;
    println!("|R‡ B - X| / |X| = {:.2e}", back.frobenius() / xtil.frobenius());
    Ok(())
}
