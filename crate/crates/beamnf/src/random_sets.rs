//! Random excited-set sampling and admissibility statistics.
//!
//! Provides a seeded, reproducible sampler for uniform random n-point subsets
//! of the integer ball `{x in Z^d : |x| <= R}`, Monte-Carlo estimates of the
//! probability that such a set is admissible / strongly admissible (with
//! Wilson score confidence intervals), and an exact census of lattice-sphere
//! sizes used to bound the cost of the angle tests.
//!
//! Reproducibility contract: every trial draws from its own counter-indexed
//! stream of a ChaCha12 generator keyed by the user seed, so the estimate is
//! bit-for-bit identical whether trials run serially or on a thread pool.

use crate::lattice::LatticePoint;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Errors from the sampling layer.
#[derive(Debug, Error)]
pub enum RandomSetError {
    #[error("ball of radius {radius} in dimension {d} has only {size} points; need {needed}")]
    BallTooSmall {
        d: usize,
        radius: i64,
        size: u128,
        needed: usize,
    },
    #[error("invalid parameters: {0}")]
    BadParams(String),
}

/// Number of lattice points on each sphere `|x|^2 = r2` for `0 <= r2 <= r2_max`,
/// computed by a single pass over the bounding cube. Index `r2` holds the count.
pub fn sphere_growth(d: usize, r2_max: i128) -> Vec<u64> {
    assert!(d >= 1, "dimension must be positive");
    assert!(r2_max >= 0);
    let mut counts = vec![0u64; r2_max as usize + 1];
    let r = crate::lattice::isqrt(r2_max);
    fn rec(d_left: usize, r: i128, acc2: i128, r2_max: i128, counts: &mut [u64]) {
        if d_left == 0 {
            counts[acc2 as usize] += 1;
            return;
        }
        for c in -r..=r {
            let a2 = acc2 + c * c;
            if a2 <= r2_max {
                rec(d_left - 1, r, a2, r2_max, counts);
            }
        }
    }
    rec(d, r, 0, r2_max, &mut counts);
    counts
}

/// Exact number of lattice points in the closed ball of the given radius.
pub fn ball_size(d: usize, radius: i64) -> u128 {
    let r2 = (radius as i128) * (radius as i128);
    sphere_growth(d, r2).iter().map(|&c| c as u128).sum()
}

/// Cheap lower bound on the ball size: the inscribed cube `[-l, l]^d` with
/// `l = floor(radius / sqrt(d))` lies inside the ball since `d*l^2 <= radius^2`.
fn ball_size_lower_bound(d: usize, radius: i64) -> u128 {
    let mut l = radius as i128;
    while l * l * (d as i128) > (radius as i128) * (radius as i128) {
        l -= 1;
    }
    if l < 0 {
        return 0;
    }
    let side = (2 * l + 1) as u128;
    let mut acc: u128 = 1;
    for _ in 0..d {
        acc = acc.saturating_mul(side);
    }
    acc
}

fn check_sampleable(d: usize, n: usize, radius: i64) -> Result<(), RandomSetError> {
    if d == 0 {
        return Err(RandomSetError::BadParams("dimension must be positive".into()));
    }
    if n == 0 {
        return Err(RandomSetError::BadParams("set size must be positive".into()));
    }
    if radius < 0 {
        return Err(RandomSetError::BadParams("radius must be nonnegative".into()));
    }
    // Exact census only when the cheap bound cannot certify |B(R)| >= n.
    if ball_size_lower_bound(d, radius) < n as u128 {
        let size = ball_size(d, radius);
        if size < n as u128 {
            return Err(RandomSetError::BallTooSmall {
                d,
                radius,
                size,
                needed: n,
            });
        }
    }
    Ok(())
}

/// Draw one uniform random n-point subset of the ball `|x| <= radius`,
/// returned lex-sorted. Points are sampled by rejection from the bounding
/// cube (exact integer test `|x|^2 <= radius^2`), and a tuple containing a
/// repeated point is rejected wholesale, so every n-subset is equally likely.
pub fn sample_set(
    d: usize,
    n: usize,
    radius: i64,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<LatticePoint>, RandomSetError> {
    check_sampleable(d, n, radius)?;
    let coord = Uniform::new_inclusive(-radius, radius);
    let r2 = (radius as i128) * (radius as i128);
    'tuple: loop {
        let mut points: Vec<LatticePoint> = Vec::with_capacity(n);
        while points.len() < n {
            // Rejection from the cube onto the ball.
            let p = loop {
                let coords: Vec<i64> = (0..d).map(|_| coord.sample(rng)).collect();
                let q = LatticePoint::new(coords);
                if q.norm2() <= r2 {
                    break q;
                }
            };
            if points.contains(&p) {
                continue 'tuple;
            }
            points.push(p);
        }
        points.sort();
        return Ok(points);
    }
}

/// The per-trial generator: one keyed ChaCha12 instance per trial index, so
/// trials are independent and the schedule is independent of executor order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Sphere lookup table for a ball: `buckets[r2]` holds the concatenated
/// coordinates (chunks of `d`) of every lattice point with `|x|^2 = r2`.
struct BallTable {
    d: usize,
    buckets: Vec<Vec<i64>>,
}

impl BallTable {
    fn build(d: usize, radius: i64) -> Self {
        let r2_max = (radius as i128) * (radius as i128);
        let mut buckets: Vec<Vec<i64>> = vec![Vec::new(); r2_max as usize + 1];
        let mut coords = vec![0i64; d];
        fn rec(
            dim: usize,
            d: usize,
            radius: i64,
            acc2: i128,
            r2_max: i128,
            coords: &mut [i64],
            buckets: &mut [Vec<i64>],
        ) {
            if dim == d {
                buckets[acc2 as usize].extend_from_slice(coords);
                return;
            }
            for c in -radius..=radius {
                let a2 = acc2 + (c as i128) * (c as i128);
                if a2 <= r2_max {
                    coords[dim] = c;
                    rec(dim + 1, d, radius, a2, r2_max, coords, buckets);
                }
            }
        }
        rec(0, d, radius, 0, r2_max, &mut coords, &mut buckets);
        BallTable { d, buckets }
    }

    /// Count points `x` with `|x|^2 = r2` and `|x - c|^2 = target2`.
    fn sphere_shell_hits(&self, r2: i128, c: &[i64], target2: i128) -> usize {
        let mut hits = 0;
        for x in self.buckets[r2 as usize].chunks_exact(self.d) {
            let mut dist2: i128 = 0;
            for (xi, ci) in x.iter().zip(c.iter()) {
                let dfc = (*xi - *ci) as i128;
                dist2 += dfc * dfc;
            }
            if dist2 == target2 {
                hits += 1;
            }
        }
        hits
    }
}

/// `a` angle-tests against `b` relative to shifted center `a + b`: the set is
/// strongly admissible iff every ordered pair passes with at most two hits.
fn angle_shifted_ok(table: &BallTable, a: &LatticePoint, b: &LatticePoint) -> bool {
    let c: Vec<i64> = a
        .coords()
        .iter()
        .zip(b.coords().iter())
        .map(|(x, y)| x + y)
        .collect();
    // |a - (a+b)| = |b|, so the shell to match has squared radius |b|^2.
    table.sphere_shell_hits(a.norm2(), &c, b.norm2()) <= 2
}

fn is_admissible(points: &[LatticePoint]) -> bool {
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if points[i].norm2() == points[j].norm2() {
                return false;
            }
        }
    }
    true
}

fn is_strongly_admissible(table: &BallTable, points: &[LatticePoint]) -> bool {
    if !is_admissible(points) {
        return false;
    }
    for i in 0..points.len() {
        for j in 0..points.len() {
            if i != j && !angle_shifted_ok(table, &points[i], &points[j]) {
                return false;
            }
        }
    }
    true
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
/// Returns `(low, high)`; degenerate `(0, 1)` when there are no trials.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (
        ((center - spread) / denom).max(0.0),
        ((center + spread) / denom).min(1.0),
    )
}

/// Monte-Carlo admissibility statistics for uniform random n-subsets of a ball.
#[derive(Debug, Clone)]
pub struct SampleStats {
    pub d: usize,
    pub n: usize,
    pub radius: i64,
    pub trials: u64,
    pub seed: u64,
    pub admissible: u64,
    pub strongly_admissible: u64,
    /// Fraction of trials that were admissible, with its Wilson 95% interval.
    pub p_admissible: f64,
    pub ci_admissible: (f64, f64),
    /// Fraction of admissible trials that were also strongly admissible,
    /// with its Wilson 95% interval (conditional; NaN when no trial was admissible).
    pub p_strong_given_admissible: f64,
    pub ci_strong_given_admissible: (f64, f64),
    /// Unconditional failure rates `1 - #/trials`, convenient for decay fits.
    pub admissible_failure: f64,
    pub strong_failure: f64,
}

/// Estimate the probability that a uniform random n-subset of the ball of the
/// given radius is admissible, and conditionally strongly admissible, over the
/// given number of seeded trials. Deterministic in `(seed, trials)` regardless
/// of thread count. In dimension <= 2 every admissible draw must also test
/// strongly admissible (sphere-plane sections there carry at most two points);
/// the estimator asserts this on every trial.
pub fn estimate_probabilities(
    d: usize,
    n: usize,
    radius: i64,
    trials: u64,
    seed: u64,
) -> Result<SampleStats, RandomSetError> {
    check_sampleable(d, n, radius)?;
    if trials == 0 {
        return Err(RandomSetError::BadParams("need at least one trial".into()));
    }
    let table = BallTable::build(d, radius);
    let (admissible, strongly_admissible) = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let points =
                sample_set(d, n, radius, &mut rng).expect("parameters validated above");
            let adm = is_admissible(&points);
            let strong = adm && is_strongly_admissible(&table, &points);
            if d <= 2 {
                assert_eq!(adm, strong, "low-dimensional angle test must be vacuous");
            }
            (adm as u64, strong as u64)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    let p_admissible = admissible as f64 / trials as f64;
    let p_strong_given_admissible = if admissible > 0 {
        strongly_admissible as f64 / admissible as f64
    } else {
        f64::NAN
    };
    Ok(SampleStats {
        d,
        n,
        radius,
        trials,
        seed,
        admissible,
        strongly_admissible,
        p_admissible,
        ci_admissible: wilson_interval(admissible, trials, 1.96),
        p_strong_given_admissible,
        ci_strong_given_admissible: wilson_interval(strongly_admissible, admissible, 1.96),
        admissible_failure: 1.0 - admissible as f64 / trials as f64,
        strong_failure: 1.0 - strongly_admissible as f64 / trials as f64,
    })
}

/// Least-squares slope of `log(y)` against `log(x)`; pairs with `y <= 0` are
/// skipped (an exact zero carries no decay information at finite sample size).
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys.iter())
        .filter(|(_, &y)| y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    assert!(pts.len() >= 2, "need at least two positive samples for a slope");
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    num / den
}

/// Slope of the log-log upper envelope of sphere counts against the radius
/// `sqrt(r2)`: fits the running maximum of the census over `r2 >= r2_min`,
/// keeping only the record-setting radii.
pub fn envelope_exponent(counts: &[u64], r2_min: i128) -> f64 {
    let mut best = 0u64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (r2, &c) in counts.iter().enumerate() {
        if c > best {
            best = c;
            if r2 as i128 >= r2_min {
                xs.push((r2 as f64).sqrt());
                ys.push(c as f64);
            }
        }
    }
    log_log_slope(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{analyze_set, pt};

    fn fnv1a(bytes: &[u8]) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100_0000_01b3);
        }
        h
    }

    fn hash_sets(sets: &[Vec<LatticePoint>]) -> u64 {
        let mut bytes = Vec::new();
        for set in sets {
            for p in set {
                for &c in p.coords() {
                    bytes.extend_from_slice(&c.to_le_bytes());
                }
            }
        }
        fnv1a(&bytes)
    }

    #[test]
    fn tiny_line_ball_forces_the_full_set() {
        // |B(1)| = 3 in dimension 1, so every 3-point draw is {-1, 0, 1}.
        for trial in 0..10 {
            let mut rng = trial_rng(7, trial);
            let set = sample_set(1, 3, 1, &mut rng).unwrap();
            assert_eq!(set, vec![pt(&[-1]), pt(&[0]), pt(&[1])]);
        }
        let err = sample_set(1, 4, 1, &mut trial_rng(7, 0)).unwrap_err();
        assert!(matches!(err, RandomSetError::BallTooSmall { size: 3, .. }));
    }

    #[test]
    fn samples_stay_in_ball_and_distinct() {
        for trial in 0..200 {
            let mut rng = trial_rng(3, trial);
            let set = sample_set(2, 4, 5, &mut rng).unwrap();
            assert_eq!(set.len(), 4);
            for p in &set {
                assert!(p.norm2() <= 25);
            }
            for i in 0..4 {
                for j in (i + 1)..4 {
                    assert_ne!(set[i], set[j]);
                }
            }
            let mut sorted = set.clone();
            sorted.sort();
            assert_eq!(set, sorted);
        }
    }

    #[test]
    fn fixed_seed_sample_stream_is_frozen() {
        let sets: Vec<_> = (0..100)
            .map(|trial| sample_set(2, 3, 10, &mut trial_rng(42, trial)).unwrap())
            .collect();
        assert_eq!(hash_sets(&sets), 0xbe71_854e_d2e1_4297);
    }

    #[test]
    fn single_point_draws_collide_at_the_birthday_rate() {
        // 500 independent single-point draws from the 81-point ball (d=2, R=5):
        // each unordered pair collides with probability 1/81, so the expected
        // number of colliding pairs is C(500,2)/81 ~ 1540 with sd ~ 40.
        let draws: Vec<_> = (0..500)
            .map(|trial| sample_set(2, 1, 5, &mut trial_rng(11, trial)).unwrap()[0].clone())
            .collect();
        assert_eq!(ball_size(2, 5), 81);
        let mut collisions = 0u64;
        for i in 0..draws.len() {
            for j in (i + 1)..draws.len() {
                if draws[i] == draws[j] {
                    collisions += 1;
                }
            }
        }
        let expected = (500.0 * 499.0 / 2.0) / 81.0;
        assert!(
            (collisions as f64 - expected).abs() < 250.0,
            "collisions {collisions} vs expected {expected:.0}"
        );
    }

    #[test]
    fn estimator_is_deterministic_and_matches_serial_reference() {
        let stats = estimate_probabilities(2, 3, 10, 2_000, 5).unwrap();
        let again = estimate_probabilities(2, 3, 10, 2_000, 5).unwrap();
        assert_eq!(stats.admissible, again.admissible);
        assert_eq!(stats.strongly_admissible, again.strongly_admissible);

        let table = BallTable::build(2, 10);
        let mut adm = 0u64;
        let mut strong = 0u64;
        for trial in 0..2_000 {
            let mut rng = trial_rng(5, trial);
            let set = sample_set(2, 3, 10, &mut rng).unwrap();
            if is_admissible(&set) {
                adm += 1;
            }
            if is_strongly_admissible(&table, &set) {
                strong += 1;
            }
        }
        assert_eq!(stats.admissible, adm);
        assert_eq!(stats.strongly_admissible, strong);
        assert!(stats.p_admissible > 0.5 && stats.p_admissible < 1.0);
        assert!(stats.ci_admissible.0 <= stats.p_admissible);
        assert!(stats.ci_admissible.1 >= stats.p_admissible);
        // Dimension 2: the angle test never rejects an admissible draw.
        assert_eq!(stats.admissible, stats.strongly_admissible);
    }

    #[test]
    fn light_checks_agree_with_full_analysis() {
        for d in [2usize, 3] {
            let table = BallTable::build(d, 6);
            for trial in 0..60 {
                let mut rng = trial_rng(99 + d as u64, trial);
                let set = sample_set(d, 3, 6, &mut rng).unwrap();
                let analysis = analyze_set(d, &set).unwrap();
                assert_eq!(is_admissible(&set), analysis.admissible);
                assert_eq!(
                    is_strongly_admissible(&table, &set),
                    analysis.strongly_admissible,
                    "set {set:?}"
                );
            }
        }
    }

    #[test]
    fn singletons_are_always_strongly_admissible() {
        let stats = estimate_probabilities(3, 1, 4, 500, 1).unwrap();
        assert_eq!(stats.admissible, 500);
        assert_eq!(stats.strongly_admissible, 500);
        assert_eq!(stats.p_strong_given_admissible, 1.0);
    }

    #[test]
    fn sphere_census_matches_known_counts() {
        let d3 = sphere_growth(3, 9);
        assert_eq!(d3[0], 1);
        assert_eq!(d3[1], 6);
        assert_eq!(d3[2], 12);
        assert_eq!(d3[3], 8);
        assert_eq!(d3[7], 0); // 7 is not a sum of three squares
        let d2 = sphere_growth(2, 25);
        assert_eq!(d2[25], 12); // (0,5),(3,4),(4,3) and sign/axis mates
        assert_eq!(d2[3], 0);
        let d1 = sphere_growth(1, 9);
        assert_eq!(&d1[..], &[1, 2, 0, 0, 2, 0, 0, 0, 0, 2]);
        // Census total equals the ball size computed independently.
        assert_eq!(ball_size(2, 5), d2[..=25].iter().map(|&c| c as u128).sum());
    }

    #[test]
    fn sphere_envelope_growth_is_subquadratic_in_the_radius() {
        let counts = sphere_growth(3, 10_000);
        let exponent = envelope_exponent(&counts, 16);
        assert!(
            exponent <= 1.34,
            "envelope exponent {exponent} exceeds 1.34"
        );
        assert!(exponent > 0.5, "envelope exponent {exponent} implausibly flat");
    }

    #[test]
    fn pair_failure_rates_decay_with_radius_in_dimension_three() {
        let radii = [10i64, 20, 40, 80];
        let mut adm_fail = Vec::new();
        let mut strong_fail = Vec::new();
        for &radius in &radii {
            let stats = estimate_probabilities(3, 2, radius, 20_000, 17).unwrap();
            adm_fail.push(stats.admissible_failure);
            strong_fail.push(stats.strong_failure);
        }
        for w in adm_fail.windows(2) {
            assert!(w[1] < w[0], "admissible failure not decreasing: {adm_fail:?}");
        }
        for w in strong_fail.windows(2) {
            assert!(w[1] < w[0], "strong failure not decreasing: {strong_fail:?}");
        }
        let xs: Vec<f64> = radii.iter().map(|&r| r as f64).collect();
        let slope = log_log_slope(&xs, &adm_fail);
        assert!(slope <= -0.8, "admissible failure decays too slowly: {slope}");
    }
}
