use rand::Rng;
use serde::{Deserialize, Serialize};

/// Additive feedback noise `draw / divisor × sin(n·ts / time_scale)` with an
/// independent uniform `[0, 1)` draw per channel and step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    pub divisor: f64,
    pub time_scale: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            divisor: 6.0,
            time_scale: 5.0,
        }
    }
}

impl NoiseModel {
    /// Noise on `(x, y, θ)` at step `n`. Always consumes three draws so the
    /// random stream does not depend on `n`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, ts: f64, rng: &mut R) -> [f64; 3] {
        let envelope = (n as f64 * ts / self.time_scale).sin() / self.divisor;
        let draws: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        draws.map(|d| d * envelope)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_at_first_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(NoiseModel::default().sample(0, 0.1, &mut rng), [0.0; 3]);
    }

    #[test]
    fn bounded_at_envelope_peak() {
        let m = NoiseModel::default();
        // n·ts = 5π/2 puts the sine at its peak; pick ts so n is integral.
        let n = 1000;
        let ts = 2.5 * std::f64::consts::PI / n as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut sum = 0.0;
        let count = 100_000 / 3 + 1;
        for _ in 0..count {
            let s = m.sample(n, ts, &mut rng);
            for v in s {
                assert!((0.0..1.0 / 6.0).contains(&v));
                sum += v;
            }
        }
        let mean = sum / (3 * count) as f64;
        assert!((mean - 1.0 / 12.0).abs() < 0.003, "mean {mean}");
    }
}
