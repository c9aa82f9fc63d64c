use serde::{Deserialize, Serialize};

use super::{AccuracyOracle, OracleError};
use crate::netgraph::NetworkGraph;
use crate::policy::QuantPolicy;

/// Synthetic accuracy model. Each bit removed below 8 doubles a layer's
/// degradation:
///
/// `acc = acc_fp - sum_l sigma_l * (eps_w * (2^(8-w_l) - 1) + eps_a * (2^(8-a_l) - 1))`
///
/// clamped to `[0, 1]`. Exactly `acc_fp` at 8 bits everywhere and monotone
/// non-decreasing in every bitwidth. The numbers carry no empirical meaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyOracle {
    pub acc_fp: f64,
    pub sensitivity: Vec<f64>,
    pub eps_w: f64,
    pub eps_a: f64,
}

impl ProxyOracle {
    /// Unit sensitivity on every layer, `acc_fp = 0.71`, `eps = 1e-4`.
    pub fn new(num_layers: usize) -> Self {
        Self { acc_fp: 0.71, sensitivity: vec![1.0; num_layers], eps_w: 1e-4, eps_a: 1e-4 }
    }

    pub fn accuracy(&self, policy: &QuantPolicy) -> f64 {
        let drop: f64 = self
            .sensitivity
            .iter()
            .zip(&policy.bits)
            .map(|(sigma, b)| {
                let w = 2f64.powi(8 - b.w_bits as i32) * self.eps_w;
                let a = 2f64.powi(8 - b.a_bits as i32) * self.eps_a;
                sigma * (w + a - self.eps_w - self.eps_a)
            })
            .sum();
        (self.acc_fp - drop).clamp(0.0, 1.0)
    }
}

impl AccuracyOracle for ProxyOracle {
    fn evaluate(&mut self, net: &NetworkGraph, policy: &QuantPolicy) -> Result<f64, OracleError> {
        if self.sensitivity.len() != net.len() || policy.len() != net.len() {
            return Err(OracleError::NotConfigured(format!(
                "proxy has {} sensitivities, policy {} layers, network {}",
                self.sensitivity.len(),
                policy.len(),
                net.len()
            )));
        }
        Ok(self.accuracy(policy))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::LayerBits;
    use proptest::prelude::*;

    #[test]
    fn eight_bits_is_full_precision() {
        let p = ProxyOracle::new(4);
        assert_eq!(p.accuracy(&QuantPolicy::uniform(4, 8)), 0.71);
    }

    #[test]
    fn zero_sensitivity_is_flat() {
        let p = ProxyOracle { sensitivity: vec![0.0; 3], ..ProxyOracle::new(3) };
        assert_eq!(p.accuracy(&QuantPolicy::uniform(3, 2)), 0.71);
    }

    #[test]
    fn one_weight_dropped_to_two_bits() {
        let p = ProxyOracle::new(3);
        let mut q = QuantPolicy::uniform(3, 8);
        q.bits[1].w_bits = 2;
        assert!((p.accuracy(&q) - (0.71 - 0.0063)).abs() < 1e-15);
    }

    #[test]
    fn clamped_to_unit_interval() {
        let p = ProxyOracle { sensitivity: vec![1e4; 2], ..ProxyOracle::new(2) };
        assert_eq!(p.accuracy(&QuantPolicy::uniform(2, 2)), 0.0);
    }

    proptest! {
        #[test]
        fn monotone_in_every_bitwidth(
            bits in prop::collection::vec((2u32..=8, 2u32..=8), 1..8),
            sigma in prop::collection::vec(0.0f64..5.0, 8),
            pick in 0usize..8,
            weight in any::<bool>(),
        ) {
            let n = bits.len();
            let p = ProxyOracle { sensitivity: sigma[..n].to_vec(), ..ProxyOracle::new(n) };
            let q = QuantPolicy { bits: bits.iter().map(|&(w, a)| LayerBits::new(w, a)).collect() };
            let base = p.accuracy(&q);
            prop_assert_eq!(base, p.accuracy(&q));
            let mut up = q.clone();
            let b = &mut up.bits[pick % n];
            if weight { b.w_bits += 1 } else { b.a_bits += 1 }
            prop_assert!(p.accuracy(&up) >= base);
        }
    }
}
