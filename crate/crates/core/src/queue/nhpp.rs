use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::{RateFunction, HOUR};

/// Arrival times of a non-homogeneous Poisson process with piecewise-constant
/// intensity on `[origin, origin + horizon)`.
///
/// Each hour slot uses its own rate as the thinning majorant, so every
/// candidate is accepted and the draw reduces to exponential gaps restarted
/// at slot boundaries (exact by memorylessness).
pub fn sample_nhpp<R: Rng + ?Sized>(rate: &RateFunction, horizon: f64, rng: &mut R) -> Vec<f64> {
    let end = (rate.origin() + horizon).min(rate.end());
    let mut out = Vec::with_capacity(rate.integrated(rate.origin(), end).ceil() as usize + 16);
    for (k, &r) in rate.hourly_rates().iter().enumerate() {
        let slot_start = rate.origin() + k as f64 * HOUR;
        if slot_start >= end {
            break;
        }
        if r <= 0.0 {
            continue;
        }
        let slot_end = (slot_start + HOUR).min(end);
        let gap = Exp::new(r / HOUR).expect("positive rate");
        let mut t = slot_start;
        loop {
            t += gap.sample(rng);
            if t >= slot_end {
                break;
            }
            out.push(t);
        }
    }
    out
}

/// Lewis–Shedler thinning for an arbitrary intensity (vehicles/hour)
/// bounded by a piecewise-constant `majorant`.
///
/// Candidates are drawn from the majorant process and kept with probability
/// `intensity(t) / majorant(t)`.
pub fn sample_nhpp_thinning<R, F>(
    intensity: F,
    majorant: &RateFunction,
    horizon: f64,
    rng: &mut R,
) -> Vec<f64>
where
    R: Rng + ?Sized,
    F: Fn(f64) -> f64,
{
    sample_nhpp(majorant, horizon, rng)
        .into_iter()
        .filter(|&t| {
            let bound = majorant.rate_at(t).unwrap_or(0.0);
            let lam = intensity(t);
            debug_assert!(lam <= bound * (1.0 + 1e-9), "intensity above majorant at {t}");
            rng.random::<f64>() * bound < lam
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rate_gives_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = RateFunction::constant(0.0, 0.0, 10).unwrap();
        assert!(sample_nhpp(&r, 10.0 * HOUR, &mut rng).is_empty());
    }

    #[test]
    fn arrivals_sorted_and_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = RateFunction::new(1000.0, vec![30.0, 0.0, 50.0]).unwrap();
        let ts = sample_nhpp(&r, 2.5 * HOUR, &mut rng);
        assert!(ts.windows(2).all(|w| w[0] <= w[1]));
        assert!(ts.iter().all(|&t| t >= 1000.0 && t < 1000.0 + 2.5 * HOUR));
        assert!(ts.iter().all(|&t| !(1000.0 + HOUR..1000.0 + 2.0 * HOUR).contains(&t)));
    }

    #[test]
    fn thinning_keeps_everything_under_equal_intensity() {
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let r = RateFunction::constant(0.0, 40.0, 5).unwrap();
        let thinned = sample_nhpp_thinning(|_| 40.0, &r, 5.0 * HOUR, &mut a);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        let direct = sample_nhpp(&r, 5.0 * HOUR, &mut b);
        assert_eq!(thinned, direct);
    }
}
