//! Composite Gauss-Legendre panels.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct Rule {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl Rule {
    pub fn new(order: usize) -> Rule {
        let gl = GaussLegendre::new(NonZeroUsize::new(order.max(1)).unwrap());
        let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Rule { x: pairs.iter().map(|p| p.0).collect(), w: pairs.iter().map(|p| p.1).collect() }
    }

    /// Nodes and weights of the rule mapped onto `n` equal panels of [a, b].
    pub fn composite(&self, a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(n * self.x.len());
        let h = (b - a) / n as f64;
        for p in 0..n {
            let lo = a + h * p as f64;
            let mid = lo + 0.5 * h;
            for (x, w) in self.x.iter().zip(&self.w) {
                out.push((mid + 0.5 * h * x, 0.5 * h * w));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_and_exponentials() {
        let r = Rule::new(12);
        let s: f64 = r.composite(0.0, 2.0, 1).iter().map(|(x, w)| w * x.powi(7)).sum();
        assert!((s - 256.0 / 8.0).abs() < 1e-12);
        let s: f64 = r.composite(0.0, 5.0, 4).iter().map(|(x, w)| w * (-x).exp()).sum();
        assert!((s - (1.0 - (-5f64).exp())).abs() < 1e-14);
    }
}
