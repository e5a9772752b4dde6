//! Expected number of descendants at time t of one particle, computed by
//! direct simulation and by the Feynman–Kac formula for the auxiliary
//! jump diffusion.
//!
//! cargo run --release --example many_to_one

use bdi::model::builtin_preset;
use bdi::rng;
use bdi::verify::expectation_semigroup_compare;

fn main() -> bdi::Result<()> {
    for name in ["binary-half", "binary-spread"] {
        let spec = builtin_preset(name)?;
        println!("{name}");
        for (i, t) in [0.5, 1.0, 2.0].into_iter().enumerate() {
            let cmp = expectation_semigroup_compare(&spec, &[0.0], t, 0.01, 20_000, 20_000, &mut rng::stream(5, i as u64))?;
            print!(
                "  t={t}: direct {:.4} ± {:.4}, Feynman-Kac {:.4} ± {:.4}, z={:.2}",
                cmp.direct.value, cmp.direct.std_error, cmp.feynman_kac.value, cmp.feynman_kac.std_error, cmp.mutual.z
            );
            match cmp.closed_form {
                Some((d, _)) => println!(", exact {:.4}", d.analytic),
                None => println!(),
            }
        }
    }
    Ok(())
}
