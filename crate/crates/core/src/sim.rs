//! Event-driven Monte Carlo sampler.
//!
//! Upward phases are `Exp(lambda)`, downward phases `Exp(mu)`, both drawn by
//! inverse transform. A downward phase that would cross the origin is cut at
//! the hit; the particle is then absorbed with probability `alpha` or starts a
//! fresh upward phase.
//!
//! Randomness comes from ChaCha8 streams. [`sample_many`] splits its work into
//! fixed-size chunks, each reading a disjoint window of the keystream, so the
//! output does not depend on the number of worker threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytic::ModelParams;
use crate::error::{Error, Result};

/// Maximum number of phases simulated on one path.
pub const EVENT_CAP: u64 = 1_000_000_000;

/// Records per parallel chunk of [`sample_many`].
pub const CHUNK: u64 = 1 << 14;

/// Keystream words reserved for one chunk.
const CHUNK_WORDS: u128 = 1 << 40;

/// Seed and stream of a random number generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngSpec { seed, stream }
    }

    /// A fresh generator positioned at the start of the stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    fn chunk_rng(&self, chunk: u64) -> ChaCha8Rng {
        let mut rng = self.rng();
        rng.set_word_pos(chunk as u128 * CHUNK_WORDS);
        rng
    }
}

fn exp_draw<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// Label of one linear piece of a sample path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Up,
    Down,
    /// Downward phase cut short by a visit to the origin.
    TruncatedDown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Reflected,
    Absorbed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEvent {
    pub time: f64,
    pub outcome: Outcome,
}

/// A full sample path: `phases[i]` joins `vertices[i]` and `vertices[i + 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathTrace {
    pub vertices: Vec<(f64, f64)>,
    pub phases: Vec<Phase>,
    pub boundary_events: Vec<BoundaryEvent>,
}

impl PathTrace {
    /// Checks unit speed, alternating directions, non-negativity and that
    /// boundary events sit at the origin, with absorption only at the end.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.vertices.len() != self.phases.len() + 1 {
            return Err("one phase per consecutive vertex pair expected".into());
        }
        for (i, ph) in self.phases.iter().enumerate() {
            let (t0, x0) = self.vertices[i];
            let (t1, x1) = self.vertices[i + 1];
            let slope = if *ph == Phase::Up { 1.0 } else { -1.0 };
            let dt = t1 - t0;
            if dt < 0.0 || ((x1 - x0) - slope * dt).abs() > 1e-9 * (1.0 + t1.abs()) {
                return Err(format!("segment {i} does not have slope {slope}"));
            }
            if i > 0 && (self.phases[i - 1] == Phase::Up) == (*ph == Phase::Up) {
                return Err(format!("segments {} and {i} do not alternate", i - 1));
            }
            if x1 < 0.0 {
                return Err(format!("negative position at vertex {}", i + 1));
            }
            if *ph == Phase::TruncatedDown && x1 != 0.0 {
                return Err(format!("truncated segment {i} does not end at the origin"));
            }
        }
        let hits = self
            .phases
            .iter()
            .filter(|p| **p == Phase::TruncatedDown)
            .count();
        if hits != self.boundary_events.len() {
            return Err("boundary events do not match truncated phases".into());
        }
        for (k, ev) in self.boundary_events.iter().enumerate() {
            if ev.outcome == Outcome::Absorbed && k + 1 != self.boundary_events.len() {
                return Err("absorption before the end of the trace".into());
            }
        }
        Ok(())
    }
}

/// First passage time, renewal cycles, visit count and absorption time of
/// one path.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionRecord {
    c_x: f64,
    cycles: Vec<f64>,
    a_x: f64,
}

impl AbsorptionRecord {
    /// Builds a record; `a_x` is the sum `c_x + sum(cycles)`.
    pub fn new(c_x: f64, cycles: Vec<f64>) -> Self {
        let a_x = cycles.iter().fold(c_x, |acc, c| acc + c);
        let rec = AbsorptionRecord { c_x, cycles, a_x };
        assert_eq!(rec.m() as usize, rec.cycles.len() + 1);
        rec
    }

    pub fn c_x(&self) -> f64 {
        self.c_x
    }

    pub fn cycles(&self) -> &[f64] {
        &self.cycles
    }

    /// Number of visits to the origin, absorption included.
    pub fn m(&self) -> u64 {
        self.cycles.len() as u64 + 1
    }

    pub fn a_x(&self) -> f64 {
        self.a_x
    }
}

/// Simulates one path until absorption.
pub fn simulate_path<R: Rng + ?Sized>(
    p: &ModelParams,
    rng: &mut R,
    trace: bool,
) -> Result<(AbsorptionRecord, Option<PathTrace>)> {
    p.validate()?;
    let mut tr = trace.then(|| PathTrace {
        vertices: vec![(0.0, p.x)],
        ..PathTrace::default()
    });
    let mut pos = p.x;
    let mut clock = 0.0;
    let mut segment = 0.0;
    let mut c_x: Option<f64> = None;
    let mut cycles = Vec::new();
    let mut events = 0u64;
    loop {
        events += 2;
        if events > EVENT_CAP {
            return Err(Error::Runaway { cap: EVENT_CAP });
        }
        let up = exp_draw(rng, p.lambda);
        pos += up;
        segment += up;
        clock += up;
        if let Some(tr) = tr.as_mut() {
            tr.vertices.push((clock, pos));
            tr.phases.push(Phase::Up);
        }
        let down = exp_draw(rng, p.mu);
        if down < pos {
            pos -= down;
            segment += down;
            clock += down;
            if let Some(tr) = tr.as_mut() {
                tr.vertices.push((clock, pos));
                tr.phases.push(Phase::Down);
            }
            continue;
        }
        segment += pos;
        clock += pos;
        pos = 0.0;
        match c_x {
            None => c_x = Some(segment),
            Some(_) => cycles.push(segment),
        }
        segment = 0.0;
        let absorbed = rng.random::<f64>() < p.alpha;
        if let Some(tr) = tr.as_mut() {
            tr.vertices.push((clock, 0.0));
            tr.phases.push(Phase::TruncatedDown);
            tr.boundary_events.push(BoundaryEvent {
                time: clock,
                outcome: if absorbed {
                    Outcome::Absorbed
                } else {
                    Outcome::Reflected
                },
            });
        }
        if absorbed {
            let c = c_x.expect("set at the first visit");
            return Ok((AbsorptionRecord::new(c, cycles), tr));
        }
    }
}

/// Simulates one path from the start of the stream `rng`.
pub fn simulate_absorption(
    p: &ModelParams,
    rng: RngSpec,
    trace: bool,
) -> Result<(AbsorptionRecord, Option<PathTrace>)> {
    simulate_path(p, &mut rng.rng(), trace)
}

/// Accumulates records; partial results are merged in chunk order.
pub trait Reducer: Send {
    fn observe(&mut self, rec: &AbsorptionRecord);
    fn merge(&mut self, other: Self)
    where
        Self: Sized;
}

/// Streaming mean and variance (Welford), mergeable (Chan et al.).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Moments) {
        if o.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *o;
            return;
        }
        let n = (self.count + o.count) as f64;
        let d = o.mean - self.mean;
        self.mean += d * o.count as f64 / n;
        self.m2 += o.m2 + d * d * self.count as f64 * o.count as f64 / n;
        self.count += o.count;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    /// Approximate standard error of the sample variance, from the fourth
    /// central moment estimate supplied by the caller.
    pub fn variance_std_error(&self, fourth_central: f64) -> f64 {
        let n = self.count as f64;
        let v = self.variance();
        ((fourth_central - v * v * (n - 3.0) / (n - 1.0)) / n).sqrt()
    }
}

/// Moments and visit-count histogram of a batch of records.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub c_x: Moments,
    pub a_x: Moments,
    pub m: Moments,
    /// Pooled renewal cycle durations.
    pub cycle: Moments,
    /// `m_hist[k]` counts records with `m = k + 1`; the last bin collects the rest.
    pub m_hist: Vec<u64>,
}

impl Summary {
    pub fn new(bins: usize) -> Self {
        Summary {
            c_x: Moments::default(),
            a_x: Moments::default(),
            m: Moments::default(),
            cycle: Moments::default(),
            m_hist: vec![0; bins.max(1)],
        }
    }
}

impl Default for Summary {
    fn default() -> Self {
        Summary::new(10)
    }
}

impl Reducer for Summary {
    fn observe(&mut self, rec: &AbsorptionRecord) {
        self.c_x.push(rec.c_x());
        self.a_x.push(rec.a_x());
        self.m.push(rec.m() as f64);
        for &c in rec.cycles() {
            self.cycle.push(c);
        }
        let bin = ((rec.m() - 1) as usize).min(self.m_hist.len() - 1);
        self.m_hist[bin] += 1;
    }

    fn merge(&mut self, o: Self) {
        self.c_x.merge(&o.c_x);
        self.a_x.merge(&o.a_x);
        self.m.merge(&o.m);
        self.cycle.merge(&o.cycle);
        for (a, b) in self.m_hist.iter_mut().zip(o.m_hist) {
            *a += b;
        }
    }
}

/// Keeps every record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Collect(pub Vec<AbsorptionRecord>);

impl Reducer for Collect {
    fn observe(&mut self, rec: &AbsorptionRecord) {
        self.0.push(rec.clone());
    }

    fn merge(&mut self, mut o: Self) {
        self.0.append(&mut o.0);
    }
}

/// Keeps `(c_x, m, a_x)` of every record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Columns {
    pub c_x: Vec<f64>,
    pub m: Vec<u64>,
    pub a_x: Vec<f64>,
}

impl Reducer for Columns {
    fn observe(&mut self, rec: &AbsorptionRecord) {
        self.c_x.push(rec.c_x());
        self.m.push(rec.m());
        self.a_x.push(rec.a_x());
    }

    fn merge(&mut self, mut o: Self) {
        self.c_x.append(&mut o.c_x);
        self.m.append(&mut o.m);
        self.a_x.append(&mut o.a_x);
    }
}

impl<A: Reducer, B: Reducer> Reducer for (A, B) {
    fn observe(&mut self, rec: &AbsorptionRecord) {
        self.0.observe(rec);
        self.1.observe(rec);
    }

    fn merge(&mut self, o: Self) {
        self.0.merge(o.0);
        self.1.merge(o.1);
    }
}

fn check_window(rng: &ChaCha8Rng, start: u128) -> Result<()> {
    if rng.get_word_pos() - start > CHUNK_WORDS {
        return Err(Error::Runaway {
            cap: CHUNK_WORDS as u64,
        });
    }
    Ok(())
}

/// Simulates `n` independent records and folds them into reducers created by
/// `make`. The result is identical for any number of threads.
pub fn sample_many<R, F>(p: &ModelParams, spec: RngSpec, n: u64, make: F) -> Result<R>
where
    R: Reducer,
    F: Fn() -> R + Sync,
{
    p.validate()?;
    if n == 0 {
        return Err(Error::domain("sample_many", "n must be at least 1"));
    }
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Result<R>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = spec.chunk_rng(c);
            let start = rng.get_word_pos();
            let mut red = make();
            let len = CHUNK.min(n - c * CHUNK);
            for _ in 0..len {
                let (rec, _) = simulate_path(p, &mut rng, false)?;
                red.observe(&rec);
            }
            check_window(&rng, start)?;
            Ok(red)
        })
        .collect();
    let mut iter = parts.into_iter();
    let mut acc = iter.next().expect("at least one chunk")?;
    for part in iter {
        acc.merge(part?);
    }
    Ok(acc)
}

/// Writes records as CSV with columns `seed,stream,c_x,m,a_x`.
pub fn write_csv<W, I>(out: &mut W, spec: RngSpec, records: I) -> std::io::Result<()>
where
    W: Write + ?Sized,
    I: IntoIterator<Item = (f64, u64, f64)>,
{
    writeln!(out, "seed,stream,c_x,m,a_x")?;
    for (c, m, a) in records {
        writeln!(out, "{},{},{:?},{},{:?}", spec.seed, spec.stream, c, m, a)?;
    }
    Ok(())
}

/// Outcome of one simulated renewal cycle from the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
struct CycleDraw {
    /// Total upward time `T_0` (half the cycle length).
    t0: f64,
    /// Upward time `W(t)` up to time `t`.
    w: f64,
    /// No reversal before `t`.
    atom: bool,
}

/// Simulates a cycle from the origin, tracking `W(t)`; gives up (returns
/// `None`) as soon as the upward time exceeds `t0_max`.
fn draw_cycle<R: Rng + ?Sized>(
    p: &ModelParams,
    t: f64,
    t0_max: f64,
    rng: &mut R,
) -> Option<CycleDraw> {
    let mut up_total = 0.0;
    let mut clock = 0.0;
    let mut pos = 0.0;
    let mut w: Option<f64> = None;
    let mut first = true;
    let mut atom = false;
    loop {
        let up = exp_draw(rng, p.lambda);
        if w.is_none() && clock + up >= t {
            w = Some(up_total + (t - clock));
            atom = first;
        }
        first = false;
        up_total += up;
        clock += up;
        pos += up;
        if up_total > t0_max {
            return None;
        }
        let down = exp_draw(rng, p.mu);
        let hit = down >= pos;
        let step = if hit { pos } else { down };
        if w.is_none() && clock + step >= t {
            w = Some(up_total);
        }
        clock += step;
        pos -= step;
        if hit {
            return Some(CycleDraw {
                t0: up_total,
                // t < T_0 < C_0 for accepted cycles, so W(t) is set then.
                w: w.unwrap_or(f64::NAN),
                atom,
            });
        }
    }
}

/// Empirical law of `X(t)` within renewal cycles whose upward time `T_0`
/// falls in `(tau - delta, tau + delta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleSample {
    pub t: f64,
    pub tau: f64,
    pub delta: f64,
    pub attempts: u64,
    /// Number of accepted cycles with `X(t) = t`.
    pub atom_count: u64,
    /// `X(t) = 2 W(t) - t` of the accepted cycles without atom.
    pub continuous: Vec<f64>,
    /// `(W(t), T_0)` of every accepted cycle.
    pub w_t0: Vec<(f64, f64)>,
}

impl CycleSample {
    pub fn accepted(&self) -> u64 {
        self.w_t0.len() as u64
    }

    pub fn atom_frequency(&self) -> f64 {
        self.atom_count as f64 / self.accepted() as f64
    }

    /// Empirical CDF of the continuous part (atom excluded), normalized by
    /// the total number of accepted cycles.
    pub fn continuous_cdf(&self, x: f64) -> f64 {
        let below = self.continuous.iter().filter(|&&v| v <= x).count();
        below as f64 / self.accepted() as f64
    }
}

const CYCLE_CHUNK: u64 = 1 << 16;
const MIN_RATE: f64 = 1e-6;

/// Rejection sampler for the conditional law of `X(t)` given `T_0` near `tau`.
///
/// Only `lambda` and `mu` are used from `p`. Stops after `n_target` accepted
/// cycles; fails with [`Error::InfeasibleConditioning`] when the acceptance
/// rate is below `1e-6`.
pub fn sample_within_cycle(
    p: &ModelParams,
    spec: RngSpec,
    t: f64,
    tau: f64,
    delta: f64,
    n_target: u64,
) -> Result<CycleSample> {
    p.validate()?;
    if !(t > 0.0 && delta > 0.0 && t < tau - delta && tau.is_finite()) {
        return Err(Error::domain(
            "sample_within_cycle",
            format!(
                "need 0 < t < tau - delta and delta > 0, got t = {t}, tau = {tau}, delta = {delta}"
            ),
        ));
    }
    if n_target == 0 {
        return Err(Error::domain(
            "sample_within_cycle",
            "n_target must be at least 1",
        ));
    }
    let (lo, hi) = (tau - delta, tau + delta);
    let threads = rayon::current_num_threads().max(1) as u64;
    let mut out = CycleSample {
        t,
        tau,
        delta,
        attempts: 0,
        atom_count: 0,
        continuous: Vec::new(),
        w_t0: Vec::new(),
    };
    let mut next_chunk = 0u64;
    'outer: loop {
        let batch: Vec<Vec<CycleDraw>> = (next_chunk..next_chunk + threads)
            .into_par_iter()
            .map(|c| {
                let mut rng = spec.chunk_rng(c);
                (0..CYCLE_CHUNK)
                    .filter_map(|_| draw_cycle(p, t, hi, &mut rng))
                    .filter(|d| d.t0 > lo && d.t0 < hi)
                    .collect()
            })
            .collect();
        next_chunk += threads;
        for chunk in batch {
            for d in &chunk {
                out.w_t0.push((d.w, d.t0));
                if d.atom {
                    out.atom_count += 1;
                } else {
                    out.continuous.push(2.0 * d.w - t);
                }
                if out.accepted() == n_target {
                    // Attempts are counted per chunk.
                    out.attempts += CYCLE_CHUNK;
                    break 'outer;
                }
            }
            out.attempts += CYCLE_CHUNK;
        }
        let rate = out.accepted() as f64 / out.attempts as f64;
        if out.attempts as f64 >= 10.0 / MIN_RATE && rate < MIN_RATE {
            return Err(Error::InfeasibleConditioning {
                rate,
                attempts: out.attempts,
            });
        }
    }
    Ok(out)
}
