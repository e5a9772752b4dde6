//! Higher-order kernels and their moment conditions.
//!
//! cargo run --release --example kernels

use bdi::regress::{kernel_order_for, make_kernel};

fn main() -> bdi::Result<()> {
    for order in 1..=4 {
        let k = make_kernel(order)?;
        let moments: Vec<String> = (0..=order + 1).map(|r| format!("{:+.2e}", k.moment(r))).collect();
        println!(
            "order {order}: K(0)={:.4}  sup={:.4}  Lip={:.4}  moments {}",
            k.eval(0.0),
            k.sup_norm,
            k.lipschitz_constant,
            moments.join(" ")
        );
    }
    for beta in [2.0, 2.5, 3.0, 4.5] {
        println!("β={beta}: kernel order {}", kernel_order_for(beta));
    }
    Ok(())
}
