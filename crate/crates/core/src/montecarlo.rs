//! Simulated unemployment spells.
//!
//! Each spell draws from its own ChaCha stream selected by
//! `(master_seed, spell_index)`, so any spell can be replayed on its own
//! and the summary does not depend on how spells are spread over threads.
//! Spells are reduced in fixed-size chunks whose partial sums are combined
//! in index order.
//!
//! Within a spell the draws come in a fixed order each period: the
//! extension trial first (only while no extension has happened), then the
//! offer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::OfferDistribution;
use crate::evaluate::PolicyProfile;
use crate::kahan::KahanSum;
use crate::params::{ExtensionSpec, MarketParams};

pub const DEFAULT_MAX_PERIODS: u64 = 2_000;

/// Spells per reduction chunk. Part of the determinism contract: changing
/// it changes the floating-point summation order.
const CHUNK: usize = 4_096;

/// Source of the random shocks a spell consumes.
pub trait SpellShocks {
    /// Uniform variate for this period's extension trial.
    fn extension_variate(&mut self) -> f64;
    /// Wage offer for this period.
    fn offer(&mut self) -> f64;
}

/// Counter-based stream for one spell.
pub struct RandomShocks<'a, D: ?Sized> {
    rng: ChaCha8Rng,
    dist: &'a D,
}

impl<'a, D: OfferDistribution + ?Sized> RandomShocks<'a, D> {
    pub fn new(dist: &'a D, master_seed: u64, spell: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(spell);
        Self { rng, dist }
    }
}

impl<D: OfferDistribution + ?Sized> SpellShocks for RandomShocks<'_, D> {
    fn extension_variate(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    fn offer(&mut self) -> f64 {
        let u = self.rng.random::<f64>();
        self.dist.quantile(u).expect("variate in [0, 1)")
    }
}

/// Replays fixed offers; the last offer repeats once the script runs out.
#[derive(Debug, Clone)]
pub struct ScriptedShocks {
    extension_variate: f64,
    offers: Vec<f64>,
    next: usize,
}

impl ScriptedShocks {
    /// `extension_variate` is returned for every extension trial; an
    /// extension happens when it falls below `δ*`.
    pub fn new(offers: Vec<f64>, extension_variate: f64) -> Self {
        assert!(!offers.is_empty(), "scripted offers must not be empty");
        Self {
            extension_variate,
            offers,
            next: 0,
        }
    }
}

impl SpellShocks for ScriptedShocks {
    fn extension_variate(&mut self) -> f64 {
        self.extension_variate
    }

    fn offer(&mut self) -> f64 {
        let w = self.offers[self.next.min(self.offers.len() - 1)];
        self.next += 1;
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpellRecord {
    /// Offers received, including the accepted one.
    pub duration: u64,
    pub accepted_wage: Option<f64>,
    /// Discounted income from spell start.
    pub welfare: f64,
    pub extended: bool,
    /// Period in which the extension was granted.
    pub extension_period: Option<u64>,
    pub truncated: bool,
}

/// Runs one spell from entitlement `N` until an offer clears the threshold
/// or `max_periods` offers have been rejected.
pub fn simulate_spell<D: OfferDistribution + ?Sized>(
    policy: &PolicyProfile,
    truth: &ExtensionSpec,
    p: &MarketParams,
    _d: &D,
    shocks: &mut impl SpellShocks,
    max_periods: u64,
) -> SpellRecord {
    let beta = p.beta();
    let mut welfare = KahanSum::new();
    let mut discount = 1.0;
    let mut n = p.entitlement();
    let mut extended = false;
    let mut extension_period = None;
    let mut t = 0u64;
    loop {
        if t >= max_periods {
            return SpellRecord {
                duration: t,
                accepted_wage: None,
                welfare: welfare.value(),
                extended,
                extension_period,
                truncated: true,
            };
        }
        welfare.add(discount * p.flow(n));
        if !extended && shocks.extension_variate() < truth.delta() {
            extended = true;
            extension_period = Some(t);
            n = truth.extended_state(n);
        } else {
            n = n.saturating_sub(1);
        }
        t += 1;
        discount *= beta;
        let w = shocks.offer();
        if w >= policy.threshold(extended, n) {
            welfare.add(discount * w / (1.0 - beta));
            return SpellRecord {
                duration: t,
                accepted_wage: Some(w),
                welfare: welfare.value(),
                extended,
                extension_period,
                truncated: false,
            };
        }
    }
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStat {
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub n_spells: u64,
    /// Over all spells; truncated spells contribute their partial sums.
    pub welfare: MeanStat,
    /// Over completed spells.
    pub duration: MeanStat,
    /// Over completed spells.
    pub accepted_wage: MeanStat,
    pub extensions: u64,
    pub extension_frequency: f64,
    pub truncated: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    pub max_periods: u64,
    /// Worker cap; `None` uses the global rayon pool. Never affects results.
    pub threads: Option<usize>,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            max_periods: DEFAULT_MAX_PERIODS,
            threads: None,
        }
    }
}

/// Shifted first and second moments. The shift is the first observation,
/// which keeps the second moment well conditioned.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    shift: Option<f64>,
    count: u64,
    sum: KahanSum,
    sum_sq: KahanSum,
}

impl Moments {
    fn push(&mut self, x: f64) {
        let k = *self.shift.get_or_insert(x);
        let y = x - k;
        self.count += 1;
        self.sum.add(y);
        self.sum_sq.add(y * y);
    }

    fn merge(&mut self, other: &Moments) {
        let Some(ko) = other.shift else { return };
        let k = *self.shift.get_or_insert(ko);
        // Re-centre the other chunk's sums on our shift.
        let dk = ko - k;
        let n = other.count as f64;
        let (s, ss) = (other.sum.value(), other.sum_sq.value());
        self.count += other.count;
        self.sum.add(s);
        self.sum.add(n * dk);
        self.sum_sq.add(ss);
        self.sum_sq.add(2.0 * dk * s);
        self.sum_sq.add(n * dk * dk);
    }

    fn finish(&self) -> MeanStat {
        if self.count == 0 {
            return MeanStat {
                mean: f64::NAN,
                stderr: f64::NAN,
                count: 0,
            };
        }
        let n = self.count as f64;
        let k = self.shift.unwrap_or(0.0);
        let m = self.sum.value() / n;
        let stderr = if self.count > 1 {
            let var = ((self.sum_sq.value() - n * m * m) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        } else {
            f64::NAN
        };
        MeanStat {
            mean: k + m,
            stderr,
            count: self.count,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    welfare: Moments,
    duration: Moments,
    wage: Moments,
    extensions: u64,
    truncated: u64,
}

impl Tally {
    fn push(&mut self, r: &SpellRecord) {
        self.welfare.push(r.welfare);
        if r.extended {
            self.extensions += 1;
        }
        match r.accepted_wage {
            Some(w) if !r.truncated => {
                self.duration.push(r.duration as f64);
                self.wage.push(w);
            }
            _ => self.truncated += 1,
        }
    }

    fn merge(&mut self, other: &Tally) {
        self.welfare.merge(&other.welfare);
        self.duration.merge(&other.duration);
        self.wage.merge(&other.wage);
        self.extensions += other.extensions;
        self.truncated += other.truncated;
    }
}

/// Simulates `n_spells` spells with streams derived from `master_seed`.
pub fn simulate_many<D: OfferDistribution + ?Sized>(
    policy: &PolicyProfile,
    truth: &ExtensionSpec,
    p: &MarketParams,
    d: &D,
    n_spells: u64,
    master_seed: u64,
    opts: SimulationOptions,
) -> SimulationSummary {
    let n_chunks = n_spells.div_ceil(CHUNK as u64);
    let run = || -> Vec<Tally> {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let start = c * CHUNK as u64;
                let end = (start + CHUNK as u64).min(n_spells);
                let mut tally = Tally::default();
                for i in start..end {
                    let mut shocks = RandomShocks::new(d, master_seed, i);
                    let r = simulate_spell(policy, truth, p, d, &mut shocks, opts.max_periods);
                    tally.push(&r);
                }
                tally
            })
            .collect()
    };
    let chunks = match opts.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .expect("thread pool")
            .install(run),
        None => run(),
    };
    let mut total = Tally::default();
    for c in &chunks {
        total.merge(c);
    }
    SimulationSummary {
        n_spells,
        welfare: total.welfare.finish(),
        duration: total.duration.finish(),
        accepted_wage: total.wage.finish(),
        extensions: total.extensions,
        extension_frequency: if n_spells > 0 {
            total.extensions as f64 / n_spells as f64
        } else {
            0.0
        },
        truncated: total.truncated,
    }
}

/// Replays the first `k` spells of a run.
pub fn trace_spells<D: OfferDistribution + ?Sized>(
    policy: &PolicyProfile,
    truth: &ExtensionSpec,
    p: &MarketParams,
    d: &D,
    k: u64,
    master_seed: u64,
    max_periods: u64,
) -> Vec<SpellRecord> {
    (0..k)
        .map(|i| {
            let mut shocks = RandomShocks::new(d, master_seed, i);
            simulate_spell(policy, truth, p, d, &mut shocks, max_periods)
        })
        .collect()
}
