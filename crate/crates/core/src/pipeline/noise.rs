//! Seeded background-activity noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::event_io::{Event, Micros, Polarity, SensorDims};

/// Generator behind every seeded stream; recorded in reports so that other
/// implementations can reproduce the same draws.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.3, seed_from_u64)";

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Spurious events per pixel per second.
    pub rate_lambda: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(rate_lambda: f64, seed: u64) -> Result<Self> {
        if !(rate_lambda >= 0.0 && rate_lambda.is_finite()) {
            return Err(Error::param(format!("noise rate must be finite and >= 0, got {rate_lambda}")));
        }
        Ok(Self { rate_lambda, seed })
    }

    /// Mean number of injected events over `[t0, t1)`.
    pub fn expected_count(&self, dims: SensorDims, t0: Micros, t1: Micros) -> f64 {
        let span_s = t1.saturating_sub(t0) as f64 * 1e-6;
        self.rate_lambda * dims.pixels() as f64 * span_s
    }
}

/// Merges Poisson-count, uniformly placed noise events over `[t0, t1)` into
/// `events`. The result is sorted by time and keeps `events` as a subsequence.
pub fn inject_noise(
    events: &[Event],
    model: &NoiseModel,
    dims: SensorDims,
    span: (Micros, Micros),
) -> Result<Vec<Event>> {
    let (t0, t1) = span;
    let mean = model.expected_count(dims, t0, t1);
    if mean <= 0.0 || dims.pixels() == 0 {
        return Ok(events.to_vec());
    }
    if dims.width > u16::MAX as usize + 1 || dims.height > u16::MAX as usize + 1 {
        return Err(Error::dim(format!("sensor {dims} exceeds 16-bit coordinates")));
    }
    let mut rng = seeded_rng(model.seed);
    let poisson = Poisson::new(mean).map_err(|e| Error::param(format!("noise count distribution: {e}")))?;
    let count = poisson.sample(&mut rng) as usize;

    let mut out = Vec::with_capacity(events.len() + count);
    out.extend_from_slice(events);
    for _ in 0..count {
        let t = rng.gen_range(t0..t1);
        let x = rng.gen_range(0..dims.width) as u16;
        let y = rng.gen_range(0..dims.height) as u16;
        let p = if rng.gen::<bool>() { Polarity::On } else { Polarity::Off };
        out.push(Event { t, x, y, p });
    }
    // stable: clean events keep their relative order
    out.sort_by_key(|e| e.t);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clean() -> Vec<Event> {
        (0..50).map(|i| Event::new(i * 20, (i % 8) as u16, (i % 5) as u16, Polarity::On)).collect()
    }

    #[test]
    fn zero_rate_is_identity() {
        let m = NoiseModel::new(0.0, 1).unwrap();
        let ev = clean();
        assert_eq!(inject_noise(&ev, &m, SensorDims::new(8, 8), (0, 1000)).unwrap(), ev);
        assert!(NoiseModel::new(-1.0, 0).is_err());
        assert!(NoiseModel::new(f64::NAN, 0).is_err());
    }

    #[test]
    fn injected_events_respect_bounds_and_keep_clean_subsequence() {
        let dims = SensorDims::new(8, 6);
        let m = NoiseModel::new(5000.0, 3).unwrap();
        let ev = clean();
        let noisy = inject_noise(&ev, &m, dims, (0, 1000)).unwrap();
        assert!(noisy.len() > ev.len());
        assert!(noisy.windows(2).all(|w| w[0].t <= w[1].t));
        assert!(noisy.iter().all(|e| dims.contains(e.x, e.y) && e.t < 1000));
        let mut it = noisy.iter();
        assert!(ev.iter().all(|c| it.any(|n| n == c)));
    }

    #[test]
    fn deterministic_per_seed() {
        let dims = SensorDims::new(16, 16);
        let a = inject_noise(&[], &NoiseModel::new(100.0, 9).unwrap(), dims, (0, 100_000)).unwrap();
        let b = inject_noise(&[], &NoiseModel::new(100.0, 9).unwrap(), dims, (0, 100_000)).unwrap();
        let c = inject_noise(&[], &NoiseModel::new(100.0, 10).unwrap(), dims, (0, 100_000)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn count_tracks_expectation() {
        let dims = SensorDims::new(100, 100);
        // 10 ev/pix/s · 10⁴ px · 0.01 s = 1000
        let m0 = NoiseModel::new(10.0, 0).unwrap();
        assert!((m0.expected_count(dims, 0, 10_000) - 1000.0).abs() < 1e-9);
        for seed in 0..20 {
            let m = NoiseModel::new(10.0, seed).unwrap();
            let n = inject_noise(&[], &m, dims, (0, 10_000)).unwrap().len();
            assert!((800..=1200).contains(&n), "seed {seed}: {n}");
        }
    }
}
