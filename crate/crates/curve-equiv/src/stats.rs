//! Standard-normal CDF and quantile helpers.
//!
//! Thin wrappers over `statrs`, whose rational approximations are accurate
//! far below the 1e-9 needed here; the unit tests pin them against tabulated
//! values.

use statrs::distribution::{ContinuousCDF, Normal};

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Φ(z), the standard-normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    standard_normal().cdf(z)
}

/// Φ⁻¹(p), the standard-normal quantile; `u_alpha` in the test rules.
pub fn normal_quantile(p: f64) -> f64 {
    standard_normal().inverse_cdf(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_match_tabulated_values() {
        // (p, z) pairs from standard tables, 9+ decimals
        let table = [
            (0.05, -1.644_853_626_951_472),
            (0.1, -1.281_551_565_544_600),
            (0.5, 0.0),
            (0.9, 1.281_551_565_544_600),
            (0.95, 1.644_853_626_951_472),
            (0.975, 1.959_963_984_540_054),
            (0.995, 2.575_829_303_548_901),
        ];
        for (p, z) in table {
            assert!(
                (normal_quantile(p) - z).abs() < 1e-9,
                "quantile({p}) = {} vs {z}",
                normal_quantile(p)
            );
            assert!((normal_cdf(z) - p).abs() < 1e-9);
        }
    }

    #[test]
    fn cdf_quantile_round_trip() {
        for i in 1..100 {
            let p = i as f64 / 100.0;
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-9);
        }
    }
}
