use rand::seq::index;
use rand::Rng;

use super::{check_stationarity, Mechanism, Scm};
use crate::{Error, Result};

pub const MAX_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetRule {
    /// The target needs at least one incoming cross link.
    RequireIncoming,
    Any,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplingConfig {
    pub n_total: usize,
    pub n_observed: usize,
    pub n_links: usize,
    pub frac_contemporaneous: f64,
    pub auto_range: (f64, f64),
    pub coeff_range: (f64, f64),
    pub noise_range: (f64, f64),
    pub target_rule: TargetRule,
    pub max_attempts: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            n_total: 7,
            n_observed: 5,
            n_links: 7,
            frac_contemporaneous: 0.6,
            auto_range: (0.3, 0.6),
            coeff_range: (0.2, 0.5),
            noise_range: (0.5, 2.0),
            target_rule: TargetRule::RequireIncoming,
            max_attempts: MAX_ATTEMPTS,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        let range_ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if self.n_total == 0 || self.n_observed == 0 || self.n_observed > self.n_total {
            return Err(Error::config(
                "n_observed",
                format!("need 1 <= n_observed <= n_total, got {} of {}", self.n_observed, self.n_total),
            ));
        }
        if self.n_links == 0 {
            return Err(Error::config("n_links", "need at least one link"));
        }
        if !(0.0..=1.0).contains(&self.frac_contemporaneous) {
            return Err(Error::config("frac_contemporaneous", "must lie in [0, 1]"));
        }
        for (key, r) in [("auto", self.auto_range), ("coeff", self.coeff_range), ("noise", self.noise_range)] {
            if !range_ok(r) {
                return Err(Error::config(format!("{key}_min"), format!("invalid range {r:?}")));
            }
        }
        if self.noise_range.0 < 0.0 {
            return Err(Error::config("noise_min", "noise scale must be nonnegative"));
        }
        Ok(())
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Draws SCMs until one is acyclic, stationary and satisfies the target rule.
pub fn sample_scm<R: Rng + ?Sized>(cfg: &SamplingConfig, rng: &mut R) -> Result<Scm> {
    cfg.validate()?;
    let n = cfg.n_total;
    let pairs = n * (n - 1);
    if cfg.n_links > pairs {
        return Err(Error::Unsatisfiable {
            attempts: 0,
            reason: format!("{} links requested but only {pairs} ordered variable pairs exist", cfg.n_links),
        });
    }
    let mut last_reason = String::new();
    for _ in 0..cfg.max_attempts {
        let auto: Vec<f64> = (0..n).map(|_| uniform(rng, cfg.auto_range)).collect();
        let mut cross: Vec<Vec<Mechanism>> = vec![Vec::new(); n];
        for k in index::sample(rng, pairs, cfg.n_links).into_vec() {
            // pair k enumerates (source, target) with source != target
            let source = k / (n - 1);
            let mut target = k % (n - 1);
            if target >= source {
                target += 1;
            }
            let lag = if rng.random_bool(cfg.frac_contemporaneous) { 0 } else { 1 };
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let coeff = sign * uniform(rng, cfg.coeff_range);
            cross[target].push(Mechanism { source, lag, coeff });
        }
        for mechs in &mut cross {
            mechs.sort_by_key(|m| (m.lag, m.source));
        }
        let noise_std: Vec<f64> = (0..n).map(|_| uniform(rng, cfg.noise_range)).collect();
        let target = rng.random_range(0..n);
        let mut observed: Vec<usize> = index::sample(rng, n - 1, cfg.n_observed - 1)
            .into_iter()
            .map(|k| if k >= target { k + 1 } else { k })
            .collect();
        observed.push(target);
        observed.sort_unstable();

        if cfg.target_rule == TargetRule::RequireIncoming && cross[target].is_empty() {
            last_reason = "target has no incoming cross link".into();
            continue;
        }
        let scm = match Scm::new(auto, cross, noise_std, observed, target) {
            Ok(scm) => scm,
            Err(Error::ContemporaneousCycle) => {
                last_reason = "contemporaneous cycle".into();
                continue;
            }
            Err(e) => return Err(e),
        };
        if !check_stationarity(&scm) {
            last_reason = "non-stationary".into();
            continue;
        }
        return Ok(scm);
    }
    Err(Error::Unsatisfiable { attempts: cfg.max_attempts, reason: last_reason })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::topological_order;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn defaults_give_seven_autos_seven_links_two_latents() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let scm = sample_scm(&SamplingConfig::default(), &mut rng).unwrap();
        assert_eq!(scm.auto().len(), 7);
        assert_eq!(scm.cross().iter().map(Vec::len).sum::<usize>(), 7);
        assert_eq!(scm.n_total() - scm.observed().len(), 2);
    }

    #[test]
    fn single_variable_cannot_feed_the_target() {
        let cfg = SamplingConfig { n_total: 1, n_observed: 1, n_links: 1, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(sample_scm(&cfg, &mut rng), Err(Error::Unsatisfiable { .. })));
    }

    #[test]
    fn sampled_ranges_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = SamplingConfig::default();
        for _ in 0..1000 {
            let scm = sample_scm(&cfg, &mut rng).unwrap();
            assert!(scm.auto().iter().all(|a| (0.3..=0.6).contains(a)));
            assert!(scm.noise_std().iter().all(|s| (0.5..=2.0).contains(s)));
            let mut pairs = std::collections::BTreeSet::new();
            for (j, ms) in scm.cross().iter().enumerate() {
                for m in ms {
                    assert!((0.2..=0.5).contains(&m.coeff.abs()));
                    assert!(m.source != j && m.lag <= 1);
                    assert!(pairs.insert((m.source, j)));
                }
            }
            assert!(!scm.cross()[scm.target()].is_empty());
            assert!(scm.observed().contains(&scm.target()));
            let edges = scm
                .cross()
                .iter()
                .enumerate()
                .flat_map(|(j, ms)| ms.iter().filter(|m| m.lag == 0).map(move |m| (m.source, j)));
            assert!(topological_order(scm.n_total(), edges).is_some());
            assert!(check_stationarity(&scm));
        }
    }

    #[test]
    fn contemporaneous_fraction_near_sixty_percent() {
        let cfg = SamplingConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mut zero, mut total) = (0usize, 0usize);
        for _ in 0..10_000 {
            let scm = sample_scm(&cfg, &mut rng).unwrap();
            for m in scm.cross().iter().flatten() {
                total += 1;
                zero += usize::from(m.lag == 0);
            }
        }
        let frac = zero as f64 / total as f64;
        assert!((0.57..=0.63).contains(&frac), "{frac}");
    }

    #[test]
    fn too_many_links_fail_fast() {
        let cfg = SamplingConfig { n_total: 2, n_observed: 2, n_links: 3, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(sample_scm(&cfg, &mut rng), Err(Error::Unsatisfiable { attempts: 0, .. })));
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let cfg = SamplingConfig::default();
        let a = sample_scm(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = sample_scm(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }
}
