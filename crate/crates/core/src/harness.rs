//! Simulated force-evaluation rig: the effector follows circles around a
//! fixed force sensor and the delivered force is recorded per sample.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::device::{clamp_force, step_command, DeviceError, DeviceState, ServoConfig};
use crate::format::fixed9;
use crate::geometry::{DeltaGeometry, ForceVector, Position};
use crate::kinematics::{forward_kinematics, inverse_kinematics, inverse_kinematics_near, jacobian, KinematicsError};
use crate::stats::{one_way_anova, AnovaResult, StatsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("sample {sample} is unreachable: {source}")]
    Unreachable {
        sample: usize,
        #[source]
        source: KinematicsError,
    },
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error("trace needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("timestamps must be strictly increasing (sample {0})")]
    NonIncreasingTime(usize),
    #[error("lateral force amplitude is zero")]
    DegenerateTrace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub radius: f64,
    pub height: f64,
    pub angular_rate: f64,
}

/// `p(t) = (r·cos ωt, r·sin ωt, z)` sampled at `t = k / sample_rate` for
/// `k < round(duration·sample_rate)`.
pub fn circular_trajectory(
    radius: f64,
    height: f64,
    angular_rate: f64,
    duration: f64,
    sample_rate: f64,
) -> Result<Trajectory, HarnessError> {
    let positive = |name: &str, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(HarnessError::BadParameter(format!("{name} must be positive, got {v}")))
        }
    };
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(HarnessError::BadParameter(format!(
            "radius must be non-negative, got {radius}"
        )));
    }
    if !height.is_finite() {
        return Err(HarnessError::BadParameter("height must be finite".into()));
    }
    positive("angular_rate", angular_rate)?;
    positive("duration", duration)?;
    positive("sample_rate", sample_rate)?;

    let n = (duration * sample_rate).round() as usize;
    let samples = (0..n)
        .map(|k| {
            let t = k as f64 / sample_rate;
            let (s, c) = (angular_rate * t).sin_cos();
            TrajectorySample {
                t,
                position: Position::from_vector(Vector3::new(radius * c, radius * s, height)).expect("finite"),
            }
        })
        .collect();
    Ok(Trajectory {
        samples,
        radius,
        height,
        angular_rate,
    })
}

/// `n` lateral unit vectors at angles `2πk/n`.
pub fn direction_set(n: usize) -> Result<Vec<Vector3<f64>>, HarnessError> {
    if n < 2 {
        return Err(HarnessError::BadParameter(format!(
            "need at least 2 directions, got {n}"
        )));
    }
    Ok((0..n)
        .map(|k| {
            let (s, c) = (2.0 * PI * k as f64 / n as f64).sin_cos();
            Vector3::new(c, s, 0.0)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceSample {
    pub t: f64,
    pub commanded: Position,
    pub force: ForceVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceTrace {
    samples: Vec<ForceSample>,
    pub radius: f64,
    pub height: f64,
    pub angular_rate: f64,
}

impl ForceTrace {
    pub fn new(samples: Vec<ForceSample>, radius: f64, height: f64, angular_rate: f64) -> Result<Self, HarnessError> {
        if let Some(i) = samples.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(HarnessError::NonIncreasingTime(i + 1));
        }
        Ok(Self {
            samples,
            radius,
            height,
            angular_rate,
        })
    }

    pub fn samples(&self) -> &[ForceSample] {
        &self.samples
    }

    /// `t,px,py,pz,fx,fy,fz`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,px,py,pz,fx,fy,fz")?;
        for s in &self.samples {
            let p = s.commanded;
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fixed9(s.t),
                fixed9(p.x()),
                fixed9(p.y()),
                fixed9(p.z()),
                fixed9(s.force.x),
                fixed9(s.force.y),
                fixed9(s.force.z)
            )?;
        }
        Ok(())
    }

    /// Split into consecutive full revolutions; a trailing partial
    /// revolution is dropped.
    pub fn cycles(&self) -> Vec<ForceTrace> {
        if self.angular_rate <= 0.0 || self.samples.is_empty() {
            return Vec::new();
        }
        let period = 2.0 * PI / self.angular_rate;
        let t0 = self.samples[0].t;
        let span = self.samples.last().map(|s| s.t).unwrap_or(t0) - t0;
        let spacing = if self.samples.len() > 1 {
            span / (self.samples.len() - 1) as f64
        } else {
            0.0
        };
        let full = ((span + spacing) / period + 1e-9).floor() as usize;
        let mut out: Vec<Vec<ForceSample>> = vec![Vec::new(); full];
        for s in &self.samples {
            let idx = ((s.t - t0) / period + 1e-9).floor() as usize;
            if idx < full {
                out[idx].push(*s);
            }
        }
        out.into_iter()
            .map(|samples| ForceTrace {
                samples,
                radius: self.radius,
                height: self.height,
                angular_rate: self.angular_rate,
            })
            .collect()
    }
}

/// Seeded multiplicative noise on the delivered force magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub level: f64,
    pub seed: u64,
}

/// Run one trajectory through IK, servo stepping and FK, with the force
/// sensor fixed at `anchor`. The delivered force is the spring force
/// `stiffness·(achieved − anchor)` limited by the torque envelope at the
/// achieved pose.
pub fn run_force_experiment(
    geometry: &DeltaGeometry,
    servo: &ServoConfig,
    stiffness: f64,
    trajectory: &Trajectory,
    anchor: &Position,
    noise: Option<NoiseSpec>,
) -> Result<ForceTrace, HarnessError> {
    if !(stiffness.is_finite() && stiffness > 0.0) {
        return Err(HarnessError::BadParameter(format!(
            "stiffness must be positive, got {stiffness}"
        )));
    }
    let mut rng = noise.map(|n| ChaCha8Rng::seed_from_u64(n.seed));
    let mut samples = Vec::with_capacity(trajectory.samples.len());
    let mut state: Option<DeviceState> = None;

    for (k, sample) in trajectory.samples.iter().enumerate() {
        let target = match &state {
            None => inverse_kinematics(geometry, &sample.position),
            Some(s) => inverse_kinematics_near(geometry, &sample.position, &s.commanded),
        }
        .map_err(|source| HarnessError::Unreachable { sample: k, source })?;

        let next = match state {
            None => DeviceState::at_rest(target, servo, sample.t),
            Some(s) => step_command(&s, &target, sample.t - s.timestamp, servo)?,
        };
        let achieved = forward_kinematics(geometry, &next.current)?;
        let spring = (achieved.coords() - anchor.coords()) * stiffness;
        let mut force = clamp_force(geometry, &next.current, &spring, servo)?;
        if let (Some(rng), Some(spec)) = (rng.as_mut(), noise) {
            let z: f64 = StandardNormal.sample(rng);
            force *= 1.0 + spec.level * z;
        }
        samples.push(ForceSample {
            t: sample.t,
            commanded: sample.position,
            force,
        });
        state = Some(next);
    }
    ForceTrace::new(samples, trajectory.radius, trajectory.height, trajectory.angular_rate)
}

/// Upper bound on the lateral force error caused by command quantization
/// alone: each joint sits within `q/2` of its exact angle, so the position
/// error is at most `σ_max(J)·(q/2)·√3`.
pub fn quantization_force_bound(
    geometry: &DeltaGeometry,
    trajectory: &Trajectory,
    quantization: f64,
    stiffness: f64,
) -> Result<f64, HarnessError> {
    let mut worst = 0.0f64;
    for (k, s) in trajectory.samples.iter().enumerate() {
        let angles = inverse_kinematics(geometry, &s.position)
            .map_err(|source| HarnessError::Unreachable { sample: k, source })?;
        let j = jacobian(geometry, &angles)?;
        let sigma = j.singular_values().max();
        worst = worst.max(sigma);
    }
    Ok(stiffness * worst * 0.5 * quantization * 3f64.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStats {
    /// `(max − min)/2` per component.
    pub amplitude: [f64; 3],
    pub mean: [f64; 3],
    /// Mean of the x and y amplitudes; the normaliser for `delta`.
    pub lateral_amplitude: f64,
    pub mean_lateral_magnitude: f64,
    /// Population standard deviation of `|f_xy| / lateral_amplitude`.
    pub delta: f64,
    pub samples: usize,
}

pub fn trace_stats(trace: &ForceTrace) -> Result<TraceStats, HarnessError> {
    let s = trace.samples();
    if s.len() < 3 {
        return Err(HarnessError::TooFewSamples(s.len()));
    }
    let n = s.len() as f64;
    let mut amplitude = [0.0; 3];
    let mut mean = [0.0; 3];
    for axis in 0..3 {
        let (lo, hi, sum) = s
            .iter()
            .map(|x| x.force[axis])
            .fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(lo, hi, sum), v| {
                (lo.min(v), hi.max(v), sum + v)
            });
        amplitude[axis] = 0.5 * (hi - lo);
        mean[axis] = sum / n;
    }
    let lateral_amplitude = 0.5 * (amplitude[0] + amplitude[1]);
    if lateral_amplitude < 1e-12 {
        return Err(HarnessError::DegenerateTrace);
    }
    let magnitudes: Vec<f64> = s.iter().map(|x| x.force.x.hypot(x.force.y)).collect();
    let mean_lateral_magnitude = magnitudes.iter().sum::<f64>() / n;
    let m_mean = mean_lateral_magnitude / lateral_amplitude;
    let var = magnitudes
        .iter()
        .map(|m| (m / lateral_amplitude - m_mean).powi(2))
        .sum::<f64>()
        / n;
    Ok(TraceStats {
        amplitude,
        mean,
        lateral_amplitude,
        mean_lateral_magnitude,
        delta: var.sqrt(),
        samples: s.len(),
    })
}

/// Parameters of the radius ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub radii: Vec<f64>,
    pub height: f64,
    pub angular_rate: f64,
    pub duration: f64,
    pub sample_rate: f64,
    pub stiffness: f64,
    /// Zero disables the noise channel.
    pub noise_level: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            radii: vec![0.005, 0.010, 0.015, 0.020],
            height: -0.020,
            angular_rate: 2.0 * PI,
            duration: 5.0,
            sample_rate: 200.0,
            stiffness: 72.0,
            noise_level: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderEntry {
    pub radius: f64,
    pub trace: ForceTrace,
    pub stats: TraceStats,
    /// δ of each full revolution, rounded to nine decimals.
    pub cycle_deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderReport {
    pub entries: Vec<LadderEntry>,
    /// ANOVA of per-revolution δ grouped by radius.
    pub anova: Result<AnovaResult, StatsError>,
}

fn round9(v: f64) -> f64 {
    fixed9(v).parse().expect("formatted number parses")
}

/// Failure of one ladder entry, tagged with its radius.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("radius {radius} m: {source}")]
pub struct LadderError {
    pub radius: f64,
    #[source]
    pub source: HarnessError,
}

/// Run every radius of the ladder (in parallel, one thread per radius) with
/// the sensor at the circle centre. Entry `i` draws noise from `seed + i`.
pub fn run_ladder(
    geometry: &DeltaGeometry,
    servo: &ServoConfig,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<LadderReport, LadderError> {
    let anchor = Position::new(0.0, 0.0, config.height).map_err(|_| LadderError {
        radius: f64::NAN,
        source: HarnessError::BadParameter("height must be finite".into()),
    })?;
    let job = |i: usize, radius: f64| -> Result<LadderEntry, HarnessError> {
        let traj = circular_trajectory(
            radius,
            config.height,
            config.angular_rate,
            config.duration,
            config.sample_rate,
        )?;
        let noise = (config.noise_level > 0.0).then_some(NoiseSpec {
            level: config.noise_level,
            seed: seed.wrapping_add(i as u64),
        });
        let trace = run_force_experiment(geometry, servo, config.stiffness, &traj, &anchor, noise)?;
        let stats = trace_stats(&trace)?;
        let cycle_deltas = trace
            .cycles()
            .iter()
            .map(|c| trace_stats(c).map(|s| round9(s.delta)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LadderEntry {
            radius,
            trace,
            stats,
            cycle_deltas,
        })
    };

    let results: Vec<Result<LadderEntry, HarnessError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .radii
            .iter()
            .enumerate()
            .map(|(i, &r)| scope.spawn(move || job(i, r)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("ladder job panicked"))
            .collect()
    });

    let mut entries = Vec::with_capacity(results.len());
    for (r, res) in config.radii.iter().zip(results) {
        entries.push(res.map_err(|source| LadderError { radius: *r, source })?);
    }
    let groups: Vec<&[f64]> = entries.iter().map(|e| e.cycle_deltas.as_slice()).collect();
    let anova = one_way_anova(&groups);
    Ok(LadderReport { entries, anova })
}
