//! Gap smoothing and relative-speed estimation from sampled range data.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoothingConfig {
    /// EMA time constant for the gap, s.
    pub gap_time_constant: f64,
    /// EMA time constant applied to the differenced gap, s.
    pub rate_time_constant: f64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self { gap_time_constant: 0.3, rate_time_constant: 0.15 }
    }
}

fn ema_weight(dt: f64, time_constant: f64) -> f64 {
    if time_constant <= 0.0 {
        1.0
    } else {
        1.0 - (-dt / time_constant).exp()
    }
}

/// Streaming filter: EMA on the gap, backward difference, EMA on the rate.
#[derive(Debug, Clone)]
pub struct GapFilter {
    dt: f64,
    w_gap: f64,
    w_rate: f64,
    gap: Option<f64>,
    rate: f64,
}

impl GapFilter {
    pub fn new(cfg: SmoothingConfig, dt: f64) -> Self {
        Self {
            dt,
            w_gap: ema_weight(dt, cfg.gap_time_constant),
            w_rate: ema_weight(dt, cfg.rate_time_constant),
            gap: None,
            rate: 0.0,
        }
    }

    /// Seeds the filter so it starts in steady state.
    pub fn prime(&mut self, gap: f64, rate: f64) {
        self.gap = Some(gap);
        self.rate = rate;
    }

    /// Feeds one raw gap sample and returns `(gap, rate)`.
    pub fn update(&mut self, raw: f64) -> (f64, f64) {
        match self.gap {
            None => {
                self.gap = Some(raw);
                (raw, 0.0)
            }
            Some(prev) => {
                let g = prev + self.w_gap * (raw - prev);
                let diff = (g - prev) / self.dt;
                self.rate += self.w_rate * (diff - self.rate);
                self.gap = Some(g);
                (g, self.rate)
            }
        }
    }
}

/// Batch form of [`GapFilter`]. With fewer than two samples the rate is 0.
pub fn smooth_gap_signal(raw: &[f64], dt: f64, cfg: SmoothingConfig) -> Vec<(f64, f64)> {
    let mut f = GapFilter::new(cfg, dt);
    raw.iter().map(|&x| f.update(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    const DT: f64 = 0.05;

    #[test]
    fn constant_gap_is_steady() {
        let out = smooth_gap_signal(&[10.0; 40], DT, SmoothingConfig::default());
        for (g, r) in out {
            assert_eq!(g, 10.0);
            assert_eq!(r, 0.0);
        }
        assert_eq!(smooth_gap_signal(&[3.0], DT, SmoothingConfig::default()), vec![(3.0, 0.0)]);
    }

    #[test]
    fn ramp_rate_converges_within_five_time_constants() {
        let cfg = SmoothingConfig::default();
        let n = (5.0 * cfg.gap_time_constant / DT).round() as usize + 1;
        let raw: Vec<f64> = (0..n).map(|j| 10.0 + j as f64 * DT).collect();
        let (_, rate) = *smooth_gap_signal(&raw, DT, cfg).last().unwrap();
        assert!((rate - 1.0).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn noise_envelope() {
        let cfg = SmoothingConfig::default();
        let sigma = 0.1;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, sigma).unwrap();
        let raw: Vec<f64> = (0..20_000).map(|_| 10.0 + noise.sample(&mut rng)).collect();
        let bound = 3.0 * sigma / cfg.gap_time_constant;
        let worst = smooth_gap_signal(&raw, DT, cfg).into_iter().map(|(_, r)| r.abs()).fold(0.0, f64::max);
        assert!(worst <= bound, "worst {worst} > {bound}");
    }
}
