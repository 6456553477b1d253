//! First-order thermal model of an absorber coupled to a bath through a
//! thermal resistance, and synthetic temperature traces with Poisson
//! background events.
//!
//! # Random streams
//!
//! Traces are reproducible from `rng_seed` alone. Each stream is a ChaCha8
//! generator seeded with `ChaCha8Rng::seed_from_u64(rng_seed)` and switched to
//! its own stream number; uniforms are `gen::<f64>()` (53-bit, `[0, 1)`).
//!
//! * stream 0, event times: gaps `−ln(1 − u) / rate` accumulated from 0 until
//!   the running time exceeds the duration;
//! * stream 1, event energies: one uniform per event, inverse CDF over the
//!   discrete table (unused for a fixed energy);
//! * stream 2, fluctuation noise: Box–Muller on consecutive uniform pairs
//!   `(u₁, u₂)`, giving `r cos 2πu₂` then `r sin 2πu₂` with
//!   `r = √(−2 ln(1 − u₁))`, one value per sample in time order.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constants::{BOLTZMANN, MEV_TO_J};
use crate::error::{Error, Result};

/// Pulses older than this many time constants are dropped from the sum.
const PULSE_HORIZON: f64 = 60.0;

/// Upper bound on baseline re-estimation passes in [`subtract_events`].
const BASELINE_ITERATIONS: usize = 8;

/// Heat capacity, thermal link and bath temperature of a bolometer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalSpec {
    /// C (J/K)
    pub heat_capacity: f64,
    /// R (K/W)
    pub thermal_resistance: f64,
    /// T₀ (K)
    pub bath_temperature: f64,
}

impl ThermalSpec {
    pub fn new(heat_capacity: f64, thermal_resistance: f64, bath_temperature: f64) -> Result<Self> {
        for (name, v) in [
            ("heat capacity", heat_capacity),
            ("thermal resistance", thermal_resistance),
            ("bath temperature", bath_temperature),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(ThermalSpec {
            heat_capacity,
            thermal_resistance,
            bath_temperature,
        })
    }

    /// TeO₂ crystal of 750 g at 10 mK: C = 2 nJ/K, R = 2×10⁸ K/W.
    pub fn cuore() -> Self {
        Self::new(2e-9, 2e8, 0.01).expect("valid preset")
    }

    /// Extrapolated larger and colder set-up: mass ×10, T₀ = 1 mK, R ×10³.
    /// C scales with mass and as T³ (Debye), giving 2×10⁻¹¹ J/K. Not a
    /// measured configuration.
    pub fn upgraded() -> Self {
        Self::new(2e-9 * 10.0 * 1e-3, 2e8 * 1e3, 0.001).expect("valid preset")
    }

    /// τ = C·R (s).
    pub fn time_constant(&self) -> f64 {
        self.heat_capacity * self.thermal_resistance
    }
}

/// Peak temperature rise (K) for an impulsive deposit of `energy` J.
pub fn pulse_peak(spec: &ThermalSpec, energy: f64) -> f64 {
    energy / spec.heat_capacity
}

/// Steady temperature offset (K) under constant `power` W.
pub fn steady_gradient(spec: &ThermalSpec, power: f64) -> f64 {
    spec.thermal_resistance * power
}

/// RMS thermodynamic temperature fluctuation √(k_B T²/C) (K).
pub fn fluctuation_floor(spec: &ThermalSpec, temperature: f64) -> f64 {
    (BOLTZMANN * temperature * temperature / spec.heat_capacity).sqrt()
}

/// Energy of each background event.
#[derive(Clone, Debug, PartialEq)]
pub enum EventEnergy {
    /// Every event deposits this many MeV.
    Fixed(f64),
    /// `(energy MeV, weight)` pairs sampled by inverse CDF.
    Discrete(Vec<(f64, f64)>),
}

impl EventEnergy {
    fn validate(&self) -> Result<()> {
        match self {
            EventEnergy::Fixed(e) if *e >= 0.0 && e.is_finite() => Ok(()),
            EventEnergy::Fixed(e) => Err(Error::param(format!("event energy must be >= 0, got {e}"))),
            EventEnergy::Discrete(table) => {
                if table.is_empty() {
                    return Err(Error::param("discrete energy table is empty"));
                }
                if table.iter().any(|&(e, w)| !(e >= 0.0) || !(w >= 0.0) || !e.is_finite() || !w.is_finite()) {
                    return Err(Error::param("discrete energy table needs non-negative energies and weights"));
                }
                if !(table.iter().map(|p| p.1).sum::<f64>() > 0.0) {
                    return Err(Error::param("discrete energy weights sum to zero"));
                }
                Ok(())
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            EventEnergy::Fixed(e) => *e,
            EventEnergy::Discrete(table) => {
                let total: f64 = table.iter().map(|p| p.1).sum();
                let target = rng.gen::<f64>() * total;
                let mut acc = 0.0;
                for &(e, w) in table {
                    acc += w;
                    if target < acc {
                        return e;
                    }
                }
                table[table.len() - 1].0
            }
        }
    }
}

/// Background event in a trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    /// s
    pub time: f64,
    /// MeV
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceConfig {
    /// s
    pub duration: f64,
    /// s
    pub sample_interval: f64,
    /// Poisson event rate (s⁻¹).
    pub event_rate: f64,
    pub event_energy: EventEnergy,
    /// Constant CSL heating (W).
    pub csl_power: f64,
    pub rng_seed: u64,
    pub include_fluctuation_noise: bool,
    /// Deterministic events added on top of the Poisson ones.
    pub injected_events: Vec<Event>,
}

impl TraceConfig {
    pub fn new(duration: f64, sample_interval: f64) -> Self {
        TraceConfig {
            duration,
            sample_interval,
            event_rate: 0.0,
            event_energy: EventEnergy::Fixed(0.0),
            csl_power: 0.0,
            rng_seed: 0,
            include_fluctuation_noise: false,
            injected_events: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::param(format!("duration must be > 0, got {}", self.duration)));
        }
        if !(self.sample_interval > 0.0) || self.sample_interval > self.duration {
            return Err(Error::param(format!(
                "sample interval must lie in (0, duration], got {}",
                self.sample_interval
            )));
        }
        if !(self.event_rate >= 0.0) || !self.event_rate.is_finite() {
            return Err(Error::param(format!("event rate must be >= 0, got {}", self.event_rate)));
        }
        if !(self.csl_power >= 0.0) || !self.csl_power.is_finite() {
            return Err(Error::param(format!("CSL power must be >= 0, got {}", self.csl_power)));
        }
        if self.injected_events.iter().any(|e| !(e.time >= 0.0) || !(e.energy >= 0.0)) {
            return Err(Error::param("injected events need non-negative time and energy"));
        }
        self.event_energy.validate()
    }
}

/// Facts about a generated trace, written as the `#` header of trace files.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceMetadata {
    pub bath_temperature: f64,
    pub heat_capacity: f64,
    pub time_constant: f64,
    /// R·W (K)
    pub steady_gradient: f64,
    /// Standard deviation of the added noise (0 when noise is off).
    pub noise_sigma: f64,
    pub sample_interval: f64,
    pub seed: u64,
    /// Set when the sample interval exceeds τ/2.
    pub undersampled: bool,
}

/// Uniformly sampled temperature record with its ground-truth event log.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    /// K, sample `k` taken at `k·sample_interval`.
    pub temperatures: Vec<f64>,
    pub events: Vec<Event>,
    pub metadata: TraceMetadata,
}

impl Trace {
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.metadata.sample_interval
    }

    pub fn len(&self) -> usize {
        self.temperatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.temperatures.is_empty()
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Poisson arrival times on `[0, duration]` (stream 0 of the trace contract).
pub fn sample_event_times(rate: f64, duration: f64, seed: u64) -> Vec<f64> {
    let mut times = Vec::new();
    if rate <= 0.0 {
        return times;
    }
    let mut rng = stream_rng(seed, 0);
    let mut t = 0.0;
    loop {
        let u: f64 = rng.gen();
        t += -(-u).ln_1p() / rate;
        if t > duration {
            return times;
        }
        times.push(t);
    }
}

struct Gaussian {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Gaussian {
    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1: f64 = self.rng.gen();
        let u2: f64 = self.rng.gen();
        let r = (-2.0 * (-u1).ln_1p()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

/// Generates a temperature trace: bath + R·W + exponential pulses (+ noise).
pub fn simulate_trace(spec: &ThermalSpec, cfg: &TraceConfig) -> Result<Trace> {
    cfg.validate()?;
    let tau = spec.time_constant();
    let dt = cfg.sample_interval;
    let n = (cfg.duration / dt).floor() as usize + 1;

    let mut energy_rng = stream_rng(cfg.rng_seed, 1);
    let mut events: Vec<Event> = sample_event_times(cfg.event_rate, cfg.duration, cfg.rng_seed)
        .into_iter()
        .map(|time| Event {
            time,
            energy: cfg.event_energy.sample(&mut energy_rng),
        })
        .collect();
    events.extend(cfg.injected_events.iter().copied());
    events.sort_by(|a, b| a.time.total_cmp(&b.time));

    let gradient = steady_gradient(spec, cfg.csl_power);
    let baseline = spec.bath_temperature + gradient;
    let noise_sigma = if cfg.include_fluctuation_noise {
        fluctuation_floor(spec, spec.bath_temperature)
    } else {
        0.0
    };
    let mut noise = cfg.include_fluctuation_noise.then(|| Gaussian {
        rng: stream_rng(cfg.rng_seed, 2),
        spare: None,
    });
    let amplitudes: Vec<f64> = events
        .iter()
        .map(|e| pulse_peak(spec, e.energy * MEV_TO_J))
        .collect();

    let mut temperatures = Vec::with_capacity(n);
    let (mut first, mut next) = (0usize, 0usize);
    for k in 0..n {
        let t = k as f64 * dt;
        while next < events.len() && events[next].time <= t {
            next += 1;
        }
        while first < next && t - events[first].time > PULSE_HORIZON * tau {
            first += 1;
        }
        let mut pulses = 0.0;
        for i in first..next {
            pulses += amplitudes[i] * (-(t - events[i].time) / tau).exp();
        }
        let mut value = baseline + pulses;
        if let Some(g) = noise.as_mut() {
            value += noise_sigma * g.next();
        }
        temperatures.push(value);
    }

    Ok(Trace {
        temperatures,
        events,
        metadata: TraceMetadata {
            bath_temperature: spec.bath_temperature,
            heat_capacity: spec.heat_capacity,
            time_constant: tau,
            steady_gradient: gradient,
            noise_sigma,
            sample_interval: dt,
            seed: cfg.rng_seed,
            undersampled: dt > 0.5 * tau,
        },
    })
}

/// One subtraction pass against a fixed baseline estimate.
fn subtract_pass(trace: &Trace, threshold: f64, baseline: f64) -> (Vec<f64>, Vec<FoundPulse>) {
    let meta = &trace.metadata;
    let tau = meta.time_constant;
    let dt = meta.sample_interval;
    let decay = |k: usize| (-(k as f64) * dt / tau).exp();
    let reach = ((PULSE_HORIZON * tau / dt).ceil() as usize).max(1);

    let mut cleaned = trace.temperatures.clone();
    let mut pulses = Vec::new();
    let n = cleaned.len();
    let mut k = 0;
    while k < n {
        let prev = if k == 0 { baseline } else { cleaned[k - 1] };
        if cleaned[k] - baseline > threshold && cleaned[k] - prev > threshold {
            // fit window: up to the next rise or ten time constants
            let limit = (k + ((10.0 * tau / dt).ceil() as usize).max(1)).min(n);
            let mut end = k + 1;
            while end < limit && cleaned[end] - cleaned[end - 1] <= threshold {
                end += 1;
            }
            let (mut num, mut den) = (0.0, 0.0);
            for (j, v) in cleaned[k..end].iter().enumerate() {
                let e = decay(j);
                num += (v - baseline) * e;
                den += e * e;
            }
            let amplitude = num / den;
            for (j, v) in cleaned[k..(k + reach).min(n)].iter_mut().enumerate() {
                *v -= amplitude * decay(j);
            }
            pulses.push(FoundPulse {
                time: k as f64 * dt,
                amplitude,
                energy: amplitude * meta.heat_capacity / MEV_TO_J,
            });
        }
        k += 1;
    }
    (cleaned, pulses)
}

/// A pulse located by [`subtract_events`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FoundPulse {
    /// Time of the first sample above threshold (s).
    pub time: f64,
    /// Fitted amplitude at that sample (K).
    pub amplitude: f64,
    /// `amplitude × C` in MeV; a lower bound on the deposited energy.
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Subtraction {
    pub cleaned: Vec<f64>,
    /// Mean of the cleaned trace minus the bath temperature (K).
    pub recovered_gradient: f64,
    pub pulses: Vec<FoundPulse>,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    *m
}

/// Finds pulses as threshold-crossing rises above the median baseline, fits
/// each to `A·e^(−(t − t_k)/τ)` with the known τ and subtracts it.
///
/// `threshold` (K) must be at least five times the trace's noise sigma.
pub fn subtract_events(trace: &Trace, threshold: f64) -> Result<Subtraction> {
    let meta = &trace.metadata;
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::param(format!("detection threshold must be > 0, got {threshold}")));
    }
    if threshold < 5.0 * meta.noise_sigma {
        return Err(Error::param(format!(
            "detection threshold {threshold:e} K is below 5x the noise floor ({:e} K); \
             raise it to at least {:e} K",
            meta.noise_sigma,
            5.0 * meta.noise_sigma
        )));
    }
    if trace.is_empty() {
        return Err(Error::param("empty trace"));
    }
    // Long pulse tails bias the median upwards; re-estimate it from the
    // cleaned trace until it settles.
    let mut baseline = median(&trace.temperatures);
    let (mut cleaned, mut pulses) = subtract_pass(trace, threshold, baseline);
    for _ in 0..BASELINE_ITERATIONS {
        let next = median(&cleaned);
        if (next - baseline).abs() <= 1e-6 * threshold {
            break;
        }
        baseline = next;
        (cleaned, pulses) = subtract_pass(trace, threshold, baseline);
    }
    let n = cleaned.len();
    let mean = cleaned.iter().sum::<f64>() / n as f64;
    Ok(Subtraction {
        recovered_gradient: mean - meta.bath_temperature,
        cleaned,
        pulses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_peak_values() {
        let spec = ThermalSpec::cuore();
        assert_eq!(pulse_peak(&spec, 0.0), 0.0);
        let v = pulse_peak(&spec, 1.602e-13);
        assert!((v - 8.01e-5).abs() < 1e-9);
        assert_eq!(pulse_peak(&spec, 2.0 * 1.602e-13), 2.0 * v);
    }

    #[test]
    fn cuore_time_constant() {
        let tau = ThermalSpec::cuore().time_constant();
        assert!((tau - 0.4).abs() < 1e-12);
        assert!((tau / 0.5 - 1.0).abs() <= 0.25);
    }

    #[test]
    fn fluctuation_values() {
        let spec = ThermalSpec::cuore();
        let hand = (1.380649e-23f64 * 1e-4 / 2e-9).sqrt();
        assert!((fluctuation_floor(&spec, 0.01) - hand).abs() < 1e-22);
        assert!((hand / 8.3e-10 - 1.0).abs() < 0.01);
        assert!((fluctuation_floor(&spec, 0.02) / fluctuation_floor(&spec, 0.01) - 2.0).abs() < 1e-14);
        let huge = ThermalSpec::new(1e300, 1.0, 1.0).unwrap();
        assert!(fluctuation_floor(&huge, 0.01) < 1e-160);
    }

    #[test]
    fn flat_trace_without_sources() {
        let spec = ThermalSpec::cuore();
        let tr = simulate_trace(&spec, &TraceConfig::new(10.0, 0.1)).unwrap();
        assert_eq!(tr.len(), 101);
        assert!(tr.temperatures.iter().all(|&t| t == spec.bath_temperature));
    }

    #[test]
    fn steady_offset_is_exact() {
        let spec = ThermalSpec::cuore();
        let cfg = TraceConfig { csl_power: 2.4e-11, ..TraceConfig::new(5.0, 0.1) };
        let tr = simulate_trace(&spec, &cfg).unwrap();
        let expected = spec.bath_temperature + spec.thermal_resistance * 2.4e-11;
        assert!(tr.temperatures.iter().all(|&t| t == expected));
    }

    #[test]
    fn single_pulse_closed_form() {
        let spec = ThermalSpec::cuore();
        let tau = spec.time_constant();
        let cfg = TraceConfig {
            injected_events: vec![Event { time: 0.0, energy: 5.0 }],
            ..TraceConfig::new(2.0, tau / 10.0)
        };
        let tr = simulate_trace(&spec, &cfg).unwrap();
        let peak = 5.0 * MEV_TO_J / spec.heat_capacity;
        let expected = spec.bath_temperature + peak * (-1f64).exp();
        assert!((tr.temperatures[10] / expected - 1.0).abs() < 1e-12);
        assert!(!tr.metadata.undersampled);
    }

    #[test]
    fn undersampling_flag() {
        let spec = ThermalSpec::cuore();
        let tr = simulate_trace(&spec, &TraceConfig::new(10.0, 1.0)).unwrap();
        assert!(tr.metadata.undersampled);
    }

    #[test]
    fn config_validation() {
        let spec = ThermalSpec::cuore();
        assert!(simulate_trace(&spec, &TraceConfig::new(1.0, 2.0)).is_err());
        assert!(simulate_trace(&spec, &TraceConfig::new(0.0, 0.0)).is_err());
        let cfg = TraceConfig { event_rate: -1.0, ..TraceConfig::new(1.0, 0.1) };
        assert!(simulate_trace(&spec, &cfg).is_err());
        assert!(ThermalSpec::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn discrete_energies_drawn_from_table() {
        let spec = ThermalSpec::cuore();
        let cfg = TraceConfig {
            event_rate: 5.0,
            event_energy: EventEnergy::Discrete(vec![(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]),
            rng_seed: 9,
            ..TraceConfig::new(100.0, 1.0)
        };
        let tr = simulate_trace(&spec, &cfg).unwrap();
        assert!(tr.events.len() > 300);
        assert!(tr.events.iter().all(|e| e.energy == 1.0 || e.energy == 3.0));
        let ones = tr.events.iter().filter(|e| e.energy == 1.0).count() as f64;
        assert!((ones / tr.events.len() as f64 - 0.5).abs() < 0.1);
    }

    #[test]
    fn threshold_guard() {
        let spec = ThermalSpec::cuore();
        let cfg = TraceConfig { include_fluctuation_noise: true, ..TraceConfig::new(10.0, 0.1) };
        let tr = simulate_trace(&spec, &cfg).unwrap();
        let sigma = tr.metadata.noise_sigma;
        assert!(subtract_events(&tr, 4.0 * sigma).is_err());
        assert!(subtract_events(&tr, 6.0 * sigma).is_ok());
        assert!(subtract_events(&tr, 0.0).is_err());
    }

    #[test]
    fn no_events_recovers_gradient() {
        let spec = ThermalSpec::cuore();
        let w = 2.4e-11;
        let cfg = TraceConfig {
            csl_power: w,
            include_fluctuation_noise: true,
            rng_seed: 5,
            ..TraceConfig::new(1000.0, 0.1)
        };
        let tr = simulate_trace(&spec, &cfg).unwrap();
        let sub = subtract_events(&tr, 10.0 * tr.metadata.noise_sigma).unwrap();
        let truth = steady_gradient(&spec, w);
        let tol = 5.0 * tr.metadata.noise_sigma / (tr.len() as f64).sqrt();
        assert!((sub.recovered_gradient - truth).abs() < tol);
        assert!(sub.pulses.is_empty());
    }

    #[test]
    fn separated_pulses_are_all_found() {
        let spec = ThermalSpec::cuore();
        let tau = spec.time_constant();
        let w = 2.4e-11;
        let events: Vec<Event> = [3.0, 9.0, 15.0]
            .iter()
            .map(|&t| Event { time: t * tau * 2.0 + 0.013, energy: 10.0 })
            .collect();
        let cfg = TraceConfig {
            csl_power: w,
            include_fluctuation_noise: true,
            rng_seed: 21,
            injected_events: events.clone(),
            ..TraceConfig::new(40.0 * tau, tau / 20.0)
        };
        let tr = simulate_trace(&spec, &cfg).unwrap();
        let sub = subtract_events(&tr, 1e-6).unwrap();
        assert_eq!(sub.pulses.len(), 3);
        for (p, e) in sub.pulses.iter().zip(&events) {
            assert!(p.time >= e.time && p.time - e.time <= tau / 20.0 + 1e-12);
        }
        let truth = steady_gradient(&spec, w);
        assert!((sub.recovered_gradient / truth - 1.0).abs() < 0.05);
    }

    #[test]
    fn pulse_tail_covering_most_samples() {
        // the tail fills more than half the trace, so the raw median sits on it
        let spec = ThermalSpec::cuore();
        let w = 5e-12;
        let cfg = TraceConfig {
            csl_power: w,
            injected_events: vec![Event { time: 0.57, energy: 5.0 }],
            ..TraceConfig::new(2.0, 0.05)
        };
        let tr = simulate_trace(&spec, &cfg).unwrap();
        let sub = subtract_events(&tr, 4e-5).unwrap();
        assert_eq!(sub.pulses.len(), 1);
        assert!((sub.recovered_gradient / steady_gradient(&spec, w) - 1.0).abs() < 1e-6);
    }
}
