//! Gauss-Laguerre and Gauss-Legendre rules with nodes computed by Newton
//! iteration on the orthogonal-polynomial recurrences.

use alloc::vec::Vec;

/// Nodes and weights of an n-point Gauss-Laguerre rule for
/// `int_0^inf e^{-t} f(t) dt`.
#[derive(Debug, Clone)]
pub struct GaussLaguerre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLaguerre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Gauss-Laguerre needs at least 2 nodes");
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let nf = n as f64;
        let mut z = 0.0;
        for i in 0..n {
            // standard initial guesses (Stroud-Secrest)
            z = if i == 0 {
                3.0 / (1.0 + 2.4 * nf)
            } else if i == 1 {
                z + 15.0 / (1.0 + 2.5 * nf)
            } else {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
            };
            let mut p1 = 0.0;
            let mut pp = 0.0;
            for _ in 0..100 {
                // recurrence for L_n(z) and its derivative
                p1 = 1.0;
                let mut p2 = 0.0;
                for j in 0..n {
                    let jf = j as f64;
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2.0 * jf + 1.0 - z) * p2 - jf * p3) / (jf + 1.0);
                }
                pp = nf * (p1 - p2) / z;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs() {
                    break;
                }
            }
            let _ = (p1, pp);
            nodes.push(z);
            // w_i = x_i / ((n+1)^2 [L_{n+1}(x_i)]^2)
            let lnext = laguerre_next(n, z);
            weights.push(z / ((nf + 1.0) * (nf + 1.0) * lnext * lnext));
        }
        GaussLaguerre { nodes, weights }
    }

    /// Integrates `int_0^inf e^{-t} f(t) dt`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

/// L_{n+1}(x) by upward recurrence.
fn laguerre_next(n: usize, x: f64) -> f64 {
    let mut p1 = 1.0;
    let mut p2 = 0.0;
    for j in 0..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = ((2.0 * jf + 1.0 - x) * p2 - jf * p3) / (jf + 1.0);
    }
    p1
}

/// Nodes and weights of an n-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Gauss-Legendre needs at least 2 nodes");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        for i in 0..m {
            let mut z = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5));
            let mut pp;
            loop {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 0..n {
                    let jf = j as f64;
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
                }
                pp = nf * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            let w = 2.0 / ((1.0 - z * z) * pp * pp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
    }
}
