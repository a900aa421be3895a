//! Shared workloads for the benchmarks.

use std::f64::consts::PI;

use ifm_core::{PulseSlot, SequenceConfig};

/// Sizes swept by the chain benchmarks.
pub const CHAIN_SIZES: [usize; 3] = [5, 25, 100];

/// `n` resonant pulses of varying strength and phase, so no step collapses
/// to a trivial product.
pub fn mixed_sequence(n: usize) -> SequenceConfig {
    let slots = (0..n)
        .map(|j| {
            let t = j as f64 / n as f64;
            PulseSlot::resonant(PI * (0.5 + t), 2.0 * PI * t)
        })
        .collect();
    SequenceConfig::new(n, ifm_core::optimal_phi(n), slots).expect("valid fixture")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_valid() {
        for n in CHAIN_SIZES {
            assert_eq!(mixed_sequence(n).slots.len(), n);
        }
    }
}
