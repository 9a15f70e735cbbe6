//! Finite-population stochastic simulation on a dynamic input-output
//! network with sticky supplier links and preferential attachment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Probability;
use crate::strategy::{best_response, ModelParams, Strategy};

/// How agents choose `(m, tau)` at a production attempt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AbmPolicy {
    /// Best response to the current population-wide functional fraction.
    BestResponseToGlobalF,
    Fixed { strategy: Strategy },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbmConfig {
    pub n_agents: usize,
    pub params: ModelParams,
    /// Stickiness: weight multiplier for a supplier that delivered last time.
    pub r: f64,
    /// Preferential-attachment exponent on `1 + customers`.
    pub xi: f64,
    pub f0: Probability,
    pub policy: AbmPolicy,
    pub t_end: f64,
    pub sample_dt: f64,
    pub seed: u64,
}

impl AbmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_agents < 2 {
            return bad(format!("n_agents must be at least 2, got {}", self.n_agents));
        }
        if !(self.r.is_finite() && self.r >= 1.0) {
            return bad(format!("r must be at least 1, got {}", self.r));
        }
        if !(self.xi.is_finite() && self.xi >= 0.0) {
            return bad(format!("xi must be non-negative, got {}", self.xi));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.sample_dt.is_finite() && self.sample_dt > 0.0 && self.sample_dt <= self.t_end) {
            return bad(format!("sample_dt must lie in (0, t_end], got {}", self.sample_dt));
        }
        Ok(())
    }

    /// Sample times `0, dt, 2 dt, ...` up to `t_end`.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = (self.t_end / self.sample_dt + 1e-9).floor() as usize;
        (0..=n).map(|k| k as f64 * self.sample_dt).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbmState {
    pub time: f64,
    pub functional: Vec<bool>,
    /// Suppliers chosen at each agent's last attempt, with multiplicity.
    pub suppliers: Vec<Vec<u32>>,
    /// Whether each supplier slot was functional at request time.
    pub delivered: Vec<Vec<bool>>,
    /// Number of supplier slots, over all agents, that point at each agent.
    pub customer_count: Vec<u32>,
}

impl AbmState {
    pub fn n_agents(&self) -> usize {
        self.functional.len()
    }

    pub fn n_functional(&self) -> usize {
        self.functional.iter().filter(|&&b| b).count()
    }

    pub fn functional_fraction(&self) -> Probability {
        Probability::from_rounded(self.n_functional() as f64 / self.n_agents() as f64)
    }

    /// Customer counts rebuilt from the supplier lists.
    pub fn recount_customers(&self) -> Vec<u32> {
        let mut counts = vec![0; self.n_agents()];
        for &j in self.suppliers.iter().flatten() {
            counts[j as usize] += 1;
        }
        counts
    }
}

fn sticky_flags(state: &AbmState, requester: usize, out: &mut [bool]) {
    out.fill(false);
    for (&j, &ok) in state.suppliers[requester].iter().zip(&state.delivered[requester]) {
        if ok {
            out[j as usize] = true;
        }
    }
}

/// Sampling weight `r^s (1 + k_j)^xi` of every agent as a supplier for
/// `requester`, where `s = 1` iff `j` delivered in one of the requester's
/// current slots. The requester's own weight is 0.
pub fn supplier_weights(state: &AbmState, requester: usize, r: f64, xi: f64) -> Vec<f64> {
    let mut sticky = vec![false; state.n_agents()];
    sticky_flags(state, requester, &mut sticky);
    state
        .customer_count
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            if j == requester {
                0.0
            } else {
                let base = (1.0 + f64::from(k)).powf(xi);
                if sticky[j] { r * base } else { base }
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    Attempt {
        strategy: Strategy,
        /// Functional agents other than the requester, at request time.
        functional_others: usize,
        delivered: u32,
        success: bool,
    },
    Failure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub agent: usize,
    pub kind: EventKind,
}

/// A single sequential run.
pub struct Simulation {
    config: AbmConfig,
    state: AbmState,
    rng: ChaCha8Rng,
    clock: Exp<f64>,
    n_functional: usize,
    br_cache: Vec<Option<Strategy>>,
    pow_cache: Vec<f64>,
    sticky: Vec<bool>,
    cumulative: Vec<f64>,
}

impl Simulation {
    pub fn new(config: AbmConfig) -> Result<Self> {
        Self::with_stream(config, 0)
    }

    /// Like [`Simulation::new`] but on an independent random stream of the
    /// same seed.
    pub fn with_stream(config: AbmConfig, stream: u64) -> Result<Self> {
        config.validate()?;
        let n = config.n_agents;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream);
        let f0 = config.f0.value();
        let functional: Vec<bool> = (0..n).map(|_| rng.random_bool(f0)).collect();
        let rate = n as f64 * (1.0 + config.params.eps());
        let clock = Exp::new(rate).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let n_functional = functional.iter().filter(|&&b| b).count();
        Ok(Simulation {
            config,
            state: AbmState {
                time: 0.0,
                functional,
                suppliers: vec![Vec::new(); n],
                delivered: vec![Vec::new(); n],
                customer_count: vec![0; n],
            },
            rng,
            clock,
            n_functional,
            br_cache: vec![None; n + 1],
            pow_cache: Vec::new(),
            sticky: vec![false; n],
            cumulative: Vec::with_capacity(n),
        })
    }

    pub fn state(&self) -> &AbmState {
        &self.state
    }

    pub fn config(&self) -> &AbmConfig {
        &self.config
    }

    pub fn functional_fraction(&self) -> Probability {
        Probability::from_rounded(self.n_functional as f64 / self.config.n_agents as f64)
    }

    fn strategy(&mut self) -> Strategy {
        match self.config.policy {
            AbmPolicy::Fixed { strategy } => strategy,
            AbmPolicy::BestResponseToGlobalF => {
                let n = self.n_functional;
                if let Some(s) = self.br_cache[n] {
                    return s;
                }
                let s = best_response(&self.config.params, self.functional_fraction());
                self.br_cache[n] = Some(s);
                s
            }
        }
    }

    fn attachment(&mut self, k: u32) -> f64 {
        let k = k as usize;
        while self.pow_cache.len() <= k {
            let next = (1.0 + self.pow_cache.len() as f64).powf(self.config.xi);
            self.pow_cache.push(next);
        }
        self.pow_cache[k]
    }

    fn sample_suppliers(&mut self, agent: usize, m: u32) -> Vec<u32> {
        let n = self.config.n_agents;
        if self.config.r == 1.0 && self.config.xi == 0.0 {
            return (0..m)
                .map(|_| {
                    let j = self.rng.random_range(0..n - 1);
                    (if j >= agent { j + 1 } else { j }) as u32
                })
                .collect();
        }
        let mut sticky = std::mem::take(&mut self.sticky);
        sticky_flags(&self.state, agent, &mut sticky);
        let mut cumulative = std::mem::take(&mut self.cumulative);
        cumulative.clear();
        let mut total = 0.0;
        for j in 0..n {
            if j != agent {
                let mut w = self.attachment(self.state.customer_count[j]);
                if sticky[j] {
                    w *= self.config.r;
                }
                total += w;
            }
            cumulative.push(total);
        }
        let picks = (0..m)
            .map(|_| {
                let u = self.rng.random::<f64>() * total;
                // The requester's zero-width slot is never selected.
                let j = cumulative.partition_point(|&c| c <= u).min(n - 1);
                j as u32
            })
            .collect();
        self.sticky = sticky;
        self.cumulative = cumulative;
        picks
    }

    /// Advances to the next event. Returns `None` (leaving the state
    /// untouched) when that event would fall after `t_end`.
    pub fn step(&mut self) -> Option<Event> {
        let t = self.state.time + self.clock.sample(&mut self.rng);
        self.advance_to(t)
    }

    fn advance_to(&mut self, t: f64) -> Option<Event> {
        if t > self.config.t_end {
            return None;
        }
        self.state.time = t;
        let n = self.config.n_agents;
        let agent = self.rng.random_range(0..n);
        let eps = self.config.params.eps();
        let is_attempt = eps == 0.0 || self.rng.random::<f64>() * (1.0 + eps) < 1.0;

        if !is_attempt {
            if self.state.functional[agent] {
                self.state.functional[agent] = false;
                self.n_functional -= 1;
            }
            return Some(Event { time: t, agent, kind: EventKind::Failure });
        }

        let strategy = self.strategy();
        let functional_others = self.n_functional - usize::from(self.state.functional[agent]);
        // The requester stops being a customer of its old suppliers as soon
        // as it tries again; their delivery record still sets stickiness.
        for &j in &self.state.suppliers[agent] {
            self.state.customer_count[j as usize] -= 1;
        }
        let picks = self.sample_suppliers(agent, strategy.m);
        let delivered_flags: Vec<bool> = picks
            .iter()
            .map(|&j| self.state.functional[j as usize])
            .collect();
        let delivered = delivered_flags.iter().filter(|&&b| b).count() as u32;

        for &j in &picks {
            self.state.customer_count[j as usize] += 1;
        }
        self.state.suppliers[agent] = picks;
        self.state.delivered[agent] = delivered_flags;

        let success = delivered >= strategy.tau;
        if strategy.tau > 0 {
            let was = self.state.functional[agent];
            if was != success {
                self.state.functional[agent] = success;
                if success {
                    self.n_functional += 1;
                } else {
                    self.n_functional -= 1;
                }
            }
        }
        Some(Event {
            time: t,
            agent,
            kind: EventKind::Attempt {
                strategy,
                functional_others,
                delivered,
                success,
            },
        })
    }

    /// Runs to `t_end`, sampling `F` on the configured grid. The value at a
    /// sample time is the state after all events up to that time.
    pub fn run(mut self) -> RunResult {
        let sample_times = self.config.sample_times();
        let mut f_series = Vec::with_capacity(sample_times.len());
        let mut next = 0;
        let mut attempts = 0u64;
        let mut failures = 0u64;
        loop {
            let t = self.state.time + self.clock.sample(&mut self.rng);
            while next < sample_times.len() && sample_times[next] < t {
                f_series.push(self.functional_fraction());
                next += 1;
            }
            match self.advance_to(t) {
                None => break,
                Some(Event { kind: EventKind::Failure, .. }) => failures += 1,
                Some(_) => attempts += 1,
            }
        }
        let final_f = self.functional_fraction();
        RunResult {
            sample_times,
            f_series,
            summary: FinalSummary {
                final_f,
                attempts,
                failures,
                mean_customers: self.state.customer_count.iter().map(|&k| f64::from(k)).sum::<f64>()
                    / self.config.n_agents as f64,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalSummary {
    pub final_f: Probability,
    pub attempts: u64,
    pub failures: u64,
    pub mean_customers: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub sample_times: Vec<f64>,
    pub f_series: Vec<Probability>,
    pub summary: FinalSummary,
}

impl RunResult {
    /// Standard deviation of the sampled `F` over samples at `t >= from`.
    pub fn time_series_sd(&self, from: f64) -> f64 {
        let xs: Vec<f64> = self
            .sample_times
            .iter()
            .zip(&self.f_series)
            .filter(|(t, _)| **t >= from)
            .map(|(_, f)| f.value())
            .collect();
        sample_sd(&xs)
    }
}

fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

pub fn run(config: AbmConfig) -> Result<RunResult> {
    Ok(Simulation::new(config)?.run())
}

/// Replica `i` runs on stream `i` of `config.seed`.
pub fn run_replica_set(config: AbmConfig, n_replicas: usize) -> Result<Vec<RunResult>> {
    if n_replicas < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 replicas, got {n_replicas}"
        )));
    }
    config.validate()?;
    (0..n_replicas as u64)
        .into_par_iter()
        .map(|i| Ok(Simulation::with_stream(config, i)?.run()))
        .collect()
}

pub fn run_replicas(config: AbmConfig, n_replicas: usize) -> Result<EnsembleSummary> {
    summarize(&run_replica_set(config, n_replicas)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub sample_times: Vec<f64>,
    pub mean_f: Vec<Probability>,
    pub sd_f: Vec<f64>,
    pub sem_f: Vec<f64>,
    pub n_replicas: usize,
    pub final_f_samples: Vec<Probability>,
}

impl EnsembleSummary {
    pub fn mean_final_f(&self) -> f64 {
        self.final_f_samples.iter().map(|f| f.value()).sum::<f64>() / self.n_replicas as f64
    }

    pub fn sem_final_f(&self) -> f64 {
        let xs: Vec<f64> = self.final_f_samples.iter().map(|f| f.value()).collect();
        sample_sd(&xs) / (self.n_replicas as f64).sqrt()
    }
}

/// Per-sample-time mean, sample standard deviation and standard error.
pub fn summarize(runs: &[RunResult]) -> Result<EnsembleSummary> {
    let first = runs
        .first()
        .ok_or_else(|| Error::InsufficientData("no runs to summarize".into()))?;
    if let Some(bad) = runs.iter().find(|r| r.f_series.len() != first.f_series.len()) {
        return Err(Error::LengthMismatch {
            left: first.f_series.len(),
            right: bad.f_series.len(),
        });
    }
    let n = runs.len();
    let root_n = (n as f64).sqrt();
    let mut mean_f = Vec::with_capacity(first.f_series.len());
    let mut sd_f = Vec::with_capacity(first.f_series.len());
    let mut sem_f = Vec::with_capacity(first.f_series.len());
    let mut column = vec![0.0; n];
    for k in 0..first.f_series.len() {
        for (c, run) in column.iter_mut().zip(runs) {
            *c = run.f_series[k].value();
        }
        let mean = column.iter().sum::<f64>() / n as f64;
        let sd = sample_sd(&column);
        mean_f.push(Probability::from_rounded(mean.clamp(0.0, 1.0)));
        sd_f.push(sd);
        sem_f.push(sd / root_n);
    }
    Ok(EnsembleSummary {
        sample_times: first.sample_times.clone(),
        mean_f,
        sd_f,
        sem_f,
        n_replicas: n,
        final_f_samples: runs.iter().map(|r| r.summary.final_f).collect(),
    })
}
