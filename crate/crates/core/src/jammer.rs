//! Jammer behaviors, ambient noise and the SNR test for effective jamming.

use crate::network::{euclidean_distance, Network, NodeId, Point};
use crate::rng::SimRng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RadioError {
    #[error("noise power must be positive and finite, got {0}")]
    NonPositiveNoise(f64),
    #[error("signal power must be non-negative and finite, got {0}")]
    NegativeSignal(f64),
    #[error("jammer power must be positive and finite, got {0}")]
    BadPower(f64),
    #[error("jammer range must be non-negative and finite, got {0}")]
    BadRange(f64),
    #[error("random jammer durations must satisfy 1 <= min <= max, got {min}..={max}")]
    BadDuration { min: u64, max: u64 },
    #[error("radio constant `{0}` out of range")]
    BadConstant(&'static str),
}

/// Averaged received powers at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioSample {
    p_signal: f64,
    p_noise: f64,
}

impl RadioSample {
    pub fn new(p_signal: f64, p_noise: f64) -> Result<Self, RadioError> {
        if !(p_noise.is_finite() && p_noise > 0.0) {
            return Err(RadioError::NonPositiveNoise(p_noise));
        }
        if !(p_signal.is_finite() && p_signal >= 0.0) {
            return Err(RadioError::NegativeSignal(p_signal));
        }
        Ok(Self { p_signal, p_noise })
    }

    pub fn p_signal(&self) -> f64 {
        self.p_signal
    }

    pub fn p_noise(&self) -> f64 {
        self.p_noise
    }

    pub fn snr(&self) -> f64 {
        signal_to_noise_ratio(*self)
    }
}

pub fn signal_to_noise_ratio(s: RadioSample) -> f64 {
    s.p_signal / s.p_noise
}

/// Jamming is effective when the linear SNR drops strictly below one.
pub fn is_jammed(snr: f64) -> bool {
    snr < 1.0
}

/// Inclusive range of phase lengths, in time steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DurationRange {
    pub min: u64,
    pub max: u64,
}

impl DurationRange {
    pub fn new(min: u64, max: u64) -> Result<Self, RadioError> {
        if min == 0 || min > max {
            return Err(RadioError::BadDuration { min, max });
        }
        Ok(Self { min, max })
    }

    pub fn fixed(steps: u64) -> Result<Self, RadioError> {
        Self::new(steps, steps)
    }

    fn draw(&self, rng: &mut SimRng) -> u64 {
        if self.min == self.max {
            self.min
        } else {
            rng.gen_range(self.min..=self.max)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum JammerKind {
    /// Emits every step.
    Constant,
    /// Emits every step as well-formed traffic that also costs victims
    /// receive energy.
    Deceptive,
    /// Alternates sleep and jam phases of random length, starting asleep.
    Random {
        sleep: DurationRange,
        jam: DurationRange,
    },
    /// Emits on the step after channel activity within its range.
    Reactive,
}

impl JammerKind {
    pub fn name(&self) -> &'static str {
        match self {
            JammerKind::Constant => "constant",
            JammerKind::Deceptive => "deceptive",
            JammerKind::Random { .. } => "random",
            JammerKind::Reactive => "reactive",
        }
    }
}

impl fmt::Display for JammerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jammer {
    pub kind: JammerKind,
    pub position: Point,
    /// Emission power in watts.
    pub power: f64,
    /// Sensing radius for reactive jammers and victim radius for deceptive
    /// ones, in meters.
    pub range: f64,
    /// First step on which the jammer can emit.
    pub start: u64,
}

impl Jammer {
    pub fn new(
        kind: JammerKind,
        position: Point,
        power: f64,
        range: f64,
        start: u64,
    ) -> Result<Self, RadioError> {
        if !(power.is_finite() && power > 0.0) {
            return Err(RadioError::BadPower(power));
        }
        if !(range.is_finite() && range >= 0.0) {
            return Err(RadioError::BadRange(range));
        }
        if let JammerKind::Random { sleep, jam } = kind {
            DurationRange::new(sleep.min, sleep.max)?;
            DurationRange::new(jam.min, jam.max)?;
        }
        Ok(Self {
            kind,
            position,
            power,
            range,
            start,
        })
    }

    pub fn constant(position: Point, power: f64) -> Result<Self, RadioError> {
        Self::new(JammerKind::Constant, position, power, 0.0, 0)
    }

    pub fn covers(&self, p: Point) -> bool {
        euclidean_distance(self.position, p) <= self.range
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Sleep,
    Jam,
}

#[derive(Debug, Clone)]
struct Cycle {
    phase: Phase,
    // Current phase covers steps phase_start..phase_end.
    phase_start: u64,
    phase_end: u64,
}

/// A jammer together with its schedule state. The random schedule draws
/// from the jammer's own RNG substream, so its phase sequence depends only
/// on the seed, never on how often it is queried.
#[derive(Debug, Clone)]
pub struct JammerRuntime {
    jammer: Jammer,
    rng: SimRng,
    cycle: Option<Cycle>,
}

impl JammerRuntime {
    pub fn new(jammer: Jammer, rng: SimRng) -> Self {
        Self {
            jammer,
            rng,
            cycle: None,
        }
    }

    pub fn jammer(&self) -> &Jammer {
        &self.jammer
    }

    /// Emitted power at step `t`. Queries must be made with non-decreasing
    /// `t`; repeating a step returns the same value.
    pub fn emission(&mut self, t: u64, channel_active: bool) -> f64 {
        let j = &self.jammer;
        if t < j.start {
            return 0.0;
        }
        let on = match j.kind {
            JammerKind::Constant | JammerKind::Deceptive => true,
            JammerKind::Reactive => channel_active,
            JammerKind::Random { sleep, jam } => {
                let rng = &mut self.rng;
                let cycle = self.cycle.get_or_insert_with(|| Cycle {
                    phase: Phase::Sleep,
                    phase_start: j.start,
                    phase_end: j.start + sleep.draw(rng),
                });
                assert!(t >= cycle.phase_start, "jammer queried backwards in time");
                while t >= cycle.phase_end {
                    let (next, len) = match cycle.phase {
                        Phase::Sleep => (Phase::Jam, jam.draw(rng)),
                        Phase::Jam => (Phase::Sleep, sleep.draw(rng)),
                    };
                    cycle.phase = next;
                    cycle.phase_start = cycle.phase_end;
                    cycle.phase_end += len;
                }
                cycle.phase == Phase::Jam
            }
        };
        if on {
            j.power
        } else {
            0.0
        }
    }
}

/// Power leaving a jammer on one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emission {
    pub position: Point,
    pub power: f64,
}

/// Propagation and noise constants shared by every node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioModel {
    /// Ambient noise floor, watts.
    pub floor: f64,
    /// Transmit power of a sensor node, watts.
    pub tx_power: f64,
    /// Reference distance of the path-gain law, meters.
    pub d0: f64,
    /// Path-gain exponent.
    pub gamma: f64,
}

impl Default for RadioModel {
    fn default() -> Self {
        Self {
            floor: 1e-9,
            tx_power: 1e-3,
            d0: 1.0,
            gamma: 2.0,
        }
    }
}

impl RadioModel {
    pub fn validate(&self) -> Result<(), RadioError> {
        if !(self.floor.is_finite() && self.floor > 0.0) {
            return Err(RadioError::BadConstant("floor"));
        }
        if !(self.tx_power.is_finite() && self.tx_power > 0.0) {
            return Err(RadioError::BadConstant("tx_power"));
        }
        if !(self.d0.is_finite() && self.d0 > 0.0) {
            return Err(RadioError::BadConstant("d0"));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(RadioError::BadConstant("gamma"));
        }
        Ok(())
    }

    /// `min(1, (d0 / d)^gamma)`, capped at 1 inside the reference distance.
    pub fn path_gain(&self, d: f64) -> f64 {
        if d <= self.d0 {
            1.0
        } else {
            (self.d0 / d).powf(self.gamma).min(1.0)
        }
    }

    pub fn noise_at(&self, p: Point, emissions: &[Emission]) -> f64 {
        self.floor
            + emissions
                .iter()
                .map(|e| e.power * self.path_gain(euclidean_distance(e.position, p)))
                .sum::<f64>()
    }

    /// Reference sample at a node: signal from its nearest live neighbor.
    /// Nodes that are dead or have no live neighbor have no sample.
    pub fn sample(&self, net: &Network, i: NodeId, emissions: &[Emission]) -> Option<RadioSample> {
        let nearest = net
            .live_links_from(i)
            .map(|(l, _)| net.link_length(l))
            .min_by(f64::total_cmp)?;
        let signal = self.tx_power * self.path_gain(nearest);
        let noise = self.noise_at(net.position(i), emissions);
        RadioSample::new(signal, noise).ok()
    }

    /// SNR of a transmission over a link of length `d` received at `p`.
    pub fn link_snr(&self, d: f64, p: Point, emissions: &[Emission]) -> f64 {
        self.tx_power * self.path_gain(d) / self.noise_at(p, emissions)
    }

    /// Nodes whose reference SNR is below one on this step.
    pub fn jammed_nodes(&self, net: &Network, emissions: &[Emission]) -> BTreeSet<NodeId> {
        (0..net.len())
            .map(NodeId)
            .filter(|&i| {
                self.sample(net, i, emissions)
                    .is_some_and(|s| is_jammed(s.snr()))
            })
            .collect()
    }
}

/// Queries every jammer for step `t`. `channel_active` reports, per jammer,
/// whether the channel around it was busy on the previous step.
pub fn emissions_at(
    jammers: &mut [JammerRuntime],
    t: u64,
    channel_active: impl Fn(&Jammer) -> bool,
) -> Vec<Emission> {
    jammers
        .iter_mut()
        .map(|rt| {
            let active = channel_active(rt.jammer());
            let power = rt.emission(t, active);
            Emission {
                position: rt.jammer().position,
                power,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NodeSpec;
    use crate::rng::substream;

    fn runtime(kind: JammerKind, power: f64) -> JammerRuntime {
        let j = Jammer::new(kind, Point::new(0.0, 0.0), power, 5.0, 0).unwrap();
        JammerRuntime::new(j, substream(1, &[0]))
    }

    #[test]
    fn snr_examples() {
        let s = |a, b| signal_to_noise_ratio(RadioSample::new(a, b).unwrap());
        assert_eq!(s(2.0, 1.0), 2.0);
        assert_eq!(s(0.0, 1.0), 0.0);
        assert_eq!(s(0.5, 2.0), 0.25);
        assert_eq!(
            RadioSample::new(1.0, 0.0),
            Err(RadioError::NonPositiveNoise(0.0))
        );
        assert!(RadioSample::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn jamming_threshold_is_strict() {
        assert!(is_jammed(0.99));
        assert!(!is_jammed(1.0));
        assert!(!is_jammed(2.0));
    }

    #[test]
    fn constant_and_deceptive_emit_always() {
        for kind in [JammerKind::Constant, JammerKind::Deceptive] {
            let mut rt = runtime(kind, 3.0);
            for t in 0..10 {
                assert_eq!(rt.emission(t, t % 2 == 0), 3.0);
            }
        }
    }

    #[test]
    fn reactive_follows_channel_activity() {
        let mut rt = runtime(JammerKind::Reactive, 2.0);
        assert_eq!(rt.emission(0, false), 0.0);
        assert_eq!(rt.emission(1, true), 2.0);
        assert_eq!(rt.emission(2, false), 0.0);
    }

    #[test]
    fn fixed_random_cycle_unrolls() {
        let kind = JammerKind::Random {
            sleep: DurationRange::fixed(2).unwrap(),
            jam: DurationRange::fixed(3).unwrap(),
        };
        let mut rt = runtime(kind, 1.5);
        let seq: Vec<f64> = (0..7).map(|t| rt.emission(t, false)).collect();
        assert_eq!(seq, vec![0.0, 0.0, 1.5, 1.5, 1.5, 0.0, 0.0]);
    }

    #[test]
    fn random_cycle_independent_of_query_pattern() {
        let kind = JammerKind::Random {
            sleep: DurationRange::new(1, 4).unwrap(),
            jam: DurationRange::new(2, 6).unwrap(),
        };
        let mut dense = runtime(kind, 1.0);
        let all: Vec<f64> = (0..200).map(|t| dense.emission(t, false)).collect();
        let mut sparse = runtime(kind, 1.0);
        for t in (0..200).step_by(7) {
            assert_eq!(sparse.emission(t, false), all[t as usize]);
        }
        assert!(all.contains(&0.0) && all.contains(&1.0));
    }

    #[test]
    fn start_step_delays_emission() {
        let j = Jammer::new(JammerKind::Constant, Point::new(0.0, 0.0), 1.0, 0.0, 5).unwrap();
        let mut rt = JammerRuntime::new(j, substream(0, &[]));
        assert_eq!(rt.emission(4, true), 0.0);
        assert_eq!(rt.emission(5, false), 1.0);
    }

    #[test]
    fn jammer_validation() {
        let p = Point::new(0.0, 0.0);
        assert_eq!(Jammer::constant(p, 0.0), Err(RadioError::BadPower(0.0)));
        assert_eq!(
            DurationRange::new(0, 3),
            Err(RadioError::BadDuration { min: 0, max: 3 })
        );
        assert!(DurationRange::new(4, 3).is_err());
    }

    #[test]
    fn noise_examples() {
        let radio = RadioModel::default();
        let p = Point::new(4.0, 4.0);
        assert_eq!(radio.noise_at(p, &[]), 1e-9);
        let here = Emission {
            position: p,
            power: 0.3,
        };
        assert_eq!(radio.noise_at(p, &[here]), 1e-9 + 0.3);
        let far = Emission {
            position: Point::new(4.0, 6.0),
            power: 1.0,
        };
        assert!((radio.noise_at(p, &[far]) - (1e-9 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn jammed_set_examples() {
        let radio = RadioModel::default();
        let net = Network::build(
            &[
                NodeSpec::new(0.0, 0.0, 1.0, 15.0),
                NodeSpec::new(10.0, 0.0, 1.0, 15.0),
                NodeSpec::new(20.0, 0.0, 1.0, 15.0),
            ],
            0,
        )
        .unwrap();
        assert!(radio.jammed_nodes(&net, &[]).is_empty());
        let e = Emission {
            position: Point::new(20.0, 0.0),
            power: 1.0,
        };
        assert!(radio.jammed_nodes(&net, &[e]).contains(&NodeId(2)));
    }
}
