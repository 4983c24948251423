//! Seeded sampling of random grids and the shared tolerance policy.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{BoundaryClass, GridFn, Partition, MIN_STEPS};

/// Largest number of steps a sampled grid may have.
pub const MAX_STEPS: usize = 64;

/// Violation threshold as a multiple of the acceptance bound.
pub const VIOLATION_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingConfig {
    pub seed: u64,
    pub grids: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub h_set: Vec<f64>,
    pub q_amplitude: f64,
    pub t0_min: f64,
    pub t0_max: f64,
    pub tol_abs: f64,
    pub tol_rel: f64,
    /// Samples that may be discarded for domain errors before giving up.
    pub max_rejections: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            grids: 100,
            n_min: MIN_STEPS,
            n_max: 32,
            h_set: alloc::vec![0.05, 0.1, 0.5],
            q_amplitude: 2.0,
            t0_min: -1.0,
            t0_max: 1.0,
            tol_abs: 1e-9,
            tol_rel: 1e-9,
            max_rejections: 1000,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg| Err(Error::InvalidConfig(msg));
        if self.grids == 0 {
            return bad("grids must be at least 1");
        }
        if self.n_min < MIN_STEPS || self.n_max > MAX_STEPS || self.n_min > self.n_max {
            return bad("n range must satisfy 4 <= n_min <= n_max <= 64");
        }
        if self.h_set.is_empty() || self.h_set.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return bad("step sizes must be finite and positive");
        }
        if !(self.q_amplitude.is_finite() && self.q_amplitude > 0.0) {
            return bad("amplitude must be finite and positive");
        }
        if !(self.t0_min.is_finite() && self.t0_max.is_finite() && self.t0_min <= self.t0_max) {
            return bad("t0 range must be a finite interval");
        }
        if !(self.tol_abs >= 0.0 && self.tol_rel >= 0.0) {
            return bad("tolerances must be non-negative");
        }
        Ok(())
    }

    /// `τ_abs + τ_rel·scale`.
    pub fn bound(&self, scale: f64) -> f64 {
        self.tol_abs + self.tol_rel * scale
    }

    pub fn classify(&self, max_residual: f64, scale: f64) -> Verdict {
        let bound = self.bound(scale);
        if max_residual <= bound {
            Verdict::Satisfied
        } else if max_residual > VIOLATION_FACTOR * bound {
            Verdict::Violated
        } else {
            Verdict::Inconclusive
        }
    }
}

/// Deterministic source of random grids and probe directions.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if lo == hi {
            lo
        } else {
            self.rng.random_range(lo..=hi)
        }
    }

    pub fn index(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.random_range(lo..=hi)
    }

    pub fn partition(&mut self, cfg: &SamplingConfig) -> Partition {
        let n = self.index(cfg.n_min, cfg.n_max);
        let h = cfg.h_set[self.index(0, cfg.h_set.len() - 1)];
        let t0 = self.uniform(cfg.t0_min, cfg.t0_max);
        Partition::new(t0, h, n).expect("validated sampling configuration")
    }

    /// Grid function with values uniform in `[-amp, amp]`.
    pub fn grid_fn(&mut self, partition: Partition, amp: f64) -> GridFn {
        GridFn::from_fn(partition, |_, _| self.uniform(-amp, amp))
    }

    /// Direction with entries uniform in `[-1, 1]`, projected onto `class`.
    pub fn direction(&mut self, partition: Partition, class: BoundaryClass) -> GridFn {
        let mut values: Vec<f64> = (0..=partition.steps()).map(|_| self.uniform(-1.0, 1.0)).collect();
        class.project(&mut values);
        GridFn::new(partition, values).expect("length matches partition")
    }

    pub fn grid(&mut self, cfg: &SamplingConfig) -> GridFn {
        let partition = self.partition(cfg);
        self.grid_fn(partition, cfg.q_amplitude)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Satisfied => "Satisfied",
            Verdict::Violated => "Violated",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

/// Where the largest residual was found.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub q: GridFn,
    pub p: usize,
    /// Random direction the residual depended on, if any.
    pub probe: Option<GridFn>,
}

/// Largest residual of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    pub residual: f64,
    pub p: usize,
    /// Magnitude of the terms entering the residual, for the relative bound.
    pub scale: f64,
    pub probe: Option<GridFn>,
}

impl SampleOutcome {
    /// Folds `(p, residual, scale)` triples into the first-occurring maximum.
    pub fn from_rows(rows: impl IntoIterator<Item = (usize, f64, f64)>) -> Option<Self> {
        let mut out: Option<Self> = None;
        for (p, r, s) in rows {
            let r = r.abs();
            match &mut out {
                None => {
                    out = Some(Self {
                        residual: r,
                        p,
                        scale: s,
                        probe: None,
                    })
                }
                Some(o) => {
                    if r > o.residual || r.is_nan() {
                        o.residual = r;
                        o.p = p;
                    }
                    o.scale = o.scale.max(s);
                }
            }
        }
        out
    }

    pub fn with_probe(mut self, probe: GridFn) -> Self {
        self.probe = Some(probe);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub verdict: Verdict,
    pub max_residual: f64,
    pub witness: Option<Witness>,
    /// Accepted samples.
    pub samples: usize,
    /// Samples discarded for domain errors or non-finite values.
    pub rejected: usize,
    pub tolerance_abs: f64,
    pub tolerance_rel: f64,
    pub scale: f64,
}

fn recoverable(e: &Error) -> bool {
    match e {
        Error::Eval(_) | Error::NonFinite => true,
        Error::AtIndex { source, .. } => recoverable(source),
        _ => false,
    }
}

/// Draws `cfg.grids` accepted samples and aggregates their maxima.
///
/// Samples whose evaluation hits a domain error or produces a non-finite
/// residual are redrawn, up to `cfg.max_rejections` in total; if the cap is
/// hit the report is `Inconclusive` over whatever was accepted.
pub fn run<F>(cfg: &SamplingConfig, mut eval: F) -> Result<Report>
where
    F: FnMut(&GridFn, &mut Sampler) -> Result<Option<SampleOutcome>>,
{
    cfg.validate()?;
    let mut sampler = Sampler::new(cfg.seed);
    let mut best: Option<(SampleOutcome, GridFn)> = None;
    let mut scale = 0.0f64;
    let (mut samples, mut rejected) = (0, 0);
    let mut exhausted = false;
    while samples < cfg.grids {
        let q = sampler.grid(cfg);
        let outcome = match eval(&q, &mut sampler) {
            Ok(Some(o)) if o.residual.is_finite() && o.scale.is_finite() => o,
            Ok(Some(_)) => {
                rejected += 1;
                if rejected > cfg.max_rejections {
                    exhausted = true;
                    break;
                }
                continue;
            }
            Ok(None) => {
                samples += 1;
                continue;
            }
            Err(e) if recoverable(&e) => {
                rejected += 1;
                if rejected > cfg.max_rejections {
                    exhausted = true;
                    break;
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        samples += 1;
        scale = scale.max(outcome.scale);
        if best.as_ref().is_none_or(|(b, _)| outcome.residual > b.residual) {
            best = Some((outcome, q));
        }
    }
    let max_residual = best.as_ref().map_or(0.0, |(b, _)| b.residual);
    let verdict = if exhausted || samples == 0 {
        Verdict::Inconclusive
    } else {
        cfg.classify(max_residual, scale)
    };
    let witness = best.map(|(b, q)| Witness {
        q,
        p: b.p,
        probe: b.probe,
    });
    Ok(Report {
        verdict,
        max_residual,
        witness,
        samples,
        rejected,
        tolerance_abs: cfg.tol_abs,
        tolerance_rel: cfg.tol_rel,
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        SamplingConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_ranges() {
        let base = SamplingConfig::default();
        for cfg in [
            SamplingConfig {
                n_min: 3,
                ..base.clone()
            },
            SamplingConfig {
                n_max: 65,
                ..base.clone()
            },
            SamplingConfig {
                h_set: alloc::vec![0.1, 0.0],
                ..base.clone()
            },
            SamplingConfig {
                q_amplitude: -1.0,
                ..base.clone()
            },
            SamplingConfig {
                grids: 0,
                ..base.clone()
            },
        ] {
            assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn classification_has_a_gray_zone() {
        let cfg = SamplingConfig::default();
        let bound = cfg.bound(1.0);
        assert_eq!(cfg.classify(bound, 1.0), Verdict::Satisfied);
        assert_eq!(cfg.classify(10.0 * bound, 1.0), Verdict::Inconclusive);
        assert_eq!(cfg.classify(1e4 * bound, 1.0), Verdict::Violated);
    }

    #[test]
    fn same_seed_same_grids() {
        let cfg = SamplingConfig::default();
        let (mut a, mut b) = (Sampler::new(7), Sampler::new(7));
        for _ in 0..20 {
            let (qa, qb) = (a.grid(&cfg), b.grid(&cfg));
            assert_eq!(qa, qb);
            let n = qa.steps();
            assert!((4..=32).contains(&n));
            assert!(cfg.h_set.contains(&qa.step()));
            assert!(qa.values().iter().all(|v| v.abs() <= 2.0));
        }
    }

    #[test]
    fn ties_keep_the_first_maximum() {
        let o = SampleOutcome::from_rows([(2, 1.0, 0.0), (3, -1.0, 5.0), (4, 0.5, 0.0)]).unwrap();
        assert_eq!((o.p, o.residual, o.scale), (2, 1.0, 5.0));
    }

    #[test]
    fn domain_failures_are_resampled_then_give_up() {
        let cfg = SamplingConfig {
            grids: 5,
            max_rejections: 3,
            ..Default::default()
        };
        let r = run(&cfg, |_, _| Err(Error::NonFinite)).unwrap();
        let cfg = SamplingConfig {
            max_rejections: 10,
            ..cfg
        };
        assert_eq!((r.verdict, r.samples, r.rejected), (Verdict::Inconclusive, 0, 4));
        let mut calls = 0;
        let r = run(&cfg, |_, _| {
            calls += 1;
            if calls % 2 == 0 {
                Err(Error::NonFinite)
            } else {
                Ok(SampleOutcome::from_rows([(1, 0.0, 1.0)]))
            }
        })
        .unwrap();
        assert_eq!((r.verdict, r.samples, r.rejected), (Verdict::Satisfied, 5, 4));
    }
}
