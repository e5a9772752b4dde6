use serde::Serialize;

use crate::error::{Error, Result};

/// A kernel of order `order` on `[-1, 1]`: `∫K = 1` and `∫v^r K = 0` for
/// `r = 1..=order`.
///
/// Built as `K(v) = W(v) Σ_{n ≤ order} C_n(0) C_n(v) / ‖C_n‖²_W` with the
/// Epanechnikov weight `W(v) = ¾(1 - v²)` and its orthogonal polynomials
/// (Gegenbauer, parameter 3/2). The sum is the reproducing kernel of
/// polynomials of degree `≤ order` at 0, which gives the moment conditions;
/// the weight makes `K` vanish at ±1, so it is Lipschitz on the real line.
/// Order 1 is the Epanechnikov kernel.
#[derive(Debug, Clone, Serialize)]
pub struct Kernel {
    pub order: u32,
    weights: Vec<f64>,
    pub lipschitz_constant: f64,
    pub sup_norm: f64,
}

/// `C_0(v), …, C_order(v)` for parameter 3/2.
fn gegenbauer(order: usize, v: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if order >= 1 {
        out[1] = 3.0 * v;
    }
    for n in 2..=order {
        let nf = n as f64;
        out[n] = (2.0 * (nf + 0.5) * v * out[n - 1] - (nf + 1.0) * out[n - 2]) / nf;
    }
}

fn norm_sq(n: usize) -> f64 {
    let n = n as f64;
    0.75 * (n + 1.0) * (n + 2.0) / (n + 1.5)
}

pub fn make_kernel(order: u32) -> Result<Kernel> {
    if order < 1 {
        return Err(Error::param("order", "kernel order must be at least 1"));
    }
    let m = order as usize;
    let mut at0 = vec![0.0; m + 1];
    gegenbauer(m, 0.0, &mut at0);
    let weights: Vec<f64> = (0..=m).map(|n| at0[n] / norm_sq(n)).collect();
    let mut k = Kernel {
        order,
        weights,
        lipschitz_constant: 0.0,
        sup_norm: 0.0,
    };
    // slopes between grid points converge to sup|K'| at rate O(step²)
    let steps = 20_000;
    let h = 2.0 / steps as f64;
    let values: Vec<f64> = (0..=steps).map(|i| k.eval(-1.0 + i as f64 * h)).collect();
    let slope = values.windows(2).map(|w| ((w[1] - w[0]) / h).abs()).fold(0.0, f64::max);
    k.lipschitz_constant = slope * 1.001;
    k.sup_norm = values.iter().fold(0.0f64, |a, v| a.max(v.abs())) * 1.001;
    Ok(k)
}

impl Kernel {
    pub fn eval(&self, v: f64) -> f64 {
        if !(-1.0..=1.0).contains(&v) {
            return 0.0;
        }
        let (mut prev, mut cur) = (0.0, 1.0);
        let mut poly = self.weights[0];
        for (n, w) in self.weights.iter().enumerate().skip(1) {
            let nf = n as f64;
            let next = if n == 1 {
                3.0 * v
            } else {
                (2.0 * (nf + 0.5) * v * cur - (nf + 1.0) * prev) / nf
            };
            prev = cur;
            cur = next;
            poly += w * cur;
        }
        0.75 * (1.0 - v * v) * poly
    }

    /// `K_h(u) = K(u/h)/h`.
    pub fn scaled(&self, u: f64, h: f64) -> f64 {
        self.eval(u / h) / h
    }

    /// `∫_{-1}^{1} v^r K(v) dv` by composite Simpson (exact up to rounding
    /// for the low-degree polynomials involved).
    pub fn moment(&self, r: u32) -> f64 {
        let n = 4000;
        let h = 2.0 / n as f64;
        let f = |v: f64| v.powi(r as i32) * self.eval(v);
        let mut s = f(-1.0) + f(1.0);
        for i in 1..n {
            let v = -1.0 + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(v);
        }
        s * h / 3.0
    }
}

/// Order `β'` used with smoothness `β`: the largest integer strictly below
/// `β`, and at least 1.
pub fn kernel_order_for(beta: f64) -> u32 {
    ((beta.ceil() - 1.0).max(1.0)) as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_is_epanechnikov() {
        let k = make_kernel(1).unwrap();
        for v in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert!((k.eval(v) - 0.75 * (1.0 - v * v)).abs() < 1e-15);
        }
        assert_eq!(k.eval(1.5), 0.0);
        assert!((k.lipschitz_constant - 1.5).abs() < 0.01);
    }

    #[test]
    fn moment_conditions() {
        for order in 1..=6 {
            let k = make_kernel(order).unwrap();
            assert!((k.moment(0) - 1.0).abs() < 1e-8, "order {order}");
            for r in 1..=order {
                assert!(k.moment(r).abs() < 1e-8, "order {order}, r {r}: {}", k.moment(r));
            }
        }
        // order 3 does not kill the fourth moment
        assert!(make_kernel(3).unwrap().moment(4).abs() > 1e-3);
    }

    #[test]
    fn order_zero_rejected() {
        assert!(make_kernel(0).is_err());
    }

    #[test]
    fn order_for_smoothness() {
        assert_eq!(kernel_order_for(2.0), 1);
        assert_eq!(kernel_order_for(2.5), 2);
        assert_eq!(kernel_order_for(3.0), 2);
        assert_eq!(kernel_order_for(4.2), 4);
    }
}
