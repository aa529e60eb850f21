//! Propeller speed/torque missions: loading, resampling, synthesis and summary
//! statistics.
//!
//! A mission is the boundary condition for every simulation: each sample fixes
//! the propeller speed and torque the powertrain must deliver over the
//! interval that starts at that sample.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when deciding whether time steps are uniform.
pub const DT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissionSample {
    /// Time, s.
    pub t: f64,
    /// Propeller speed, rad/s.
    pub omega_prop: f64,
    /// Propeller torque, N·m. Negative values encode reverse thrust.
    pub torque_prop: f64,
}

impl MissionSample {
    pub fn power(&self) -> f64 {
        self.omega_prop * self.torque_prop
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionProfile {
    pub name: String,
    samples: Vec<MissionSample>,
    /// Optional per-sample segment label.
    segments: Option<Vec<u32>>,
}

impl MissionProfile {
    /// Builds a validated profile.
    pub fn new(
        name: impl Into<String>,
        samples: Vec<MissionSample>,
        segments: Option<Vec<u32>>,
    ) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Validation(format!(
                "a mission needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(seg) = &segments {
            if seg.len() != samples.len() {
                return Err(Error::Validation("segment labels do not match sample count".into()));
            }
        }
        for (k, s) in samples.iter().enumerate() {
            if !(s.t.is_finite() && s.omega_prop.is_finite() && s.torque_prop.is_finite()) {
                return Err(Error::Validation(format!("non-finite value in row {k}")));
            }
            if k > 0 && s.t <= samples[k - 1].t {
                return Err(Error::Validation(format!(
                    "time must be strictly increasing (row {k}: {} after {})",
                    s.t,
                    samples[k - 1].t
                )));
            }
        }
        Ok(Self { name: name.into(), samples, segments })
    }

    pub fn samples(&self) -> &[MissionSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn segments(&self) -> Option<&[u32]> {
        self.segments.as_deref()
    }

    pub fn segment_of(&self, k: usize) -> Option<u32> {
        self.segments.as_ref().map(|s| s[k])
    }

    /// Mission duration `t_end - t_0`.
    pub fn duration(&self) -> f64 {
        self.samples[self.samples.len() - 1].t - self.samples[0].t
    }

    /// Distinct time steps present in the profile, ascending.
    pub fn dt_candidates(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for w in self.samples.windows(2) {
            let d = w[1].t - w[0].t;
            if !out.iter().any(|c| (c - d).abs() <= DT_TOLERANCE) {
                out.push(d);
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// The uniform time step, if every delta agrees within [`DT_TOLERANCE`].
    pub fn dt(&self) -> Option<f64> {
        match self.dt_candidates().as_slice() {
            [d] => Some(*d),
            _ => None,
        }
    }

    /// Backward-difference propeller acceleration at step `k`; zero at the first step.
    pub fn acceleration(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let (a, b) = (&self.samples[k - 1], &self.samples[k]);
        (b.omega_prop - a.omega_prop) / (b.t - a.t)
    }

    /// Total propeller energy, J, by trapezoidal integration of ω·T.
    pub fn energy(&self) -> f64 {
        self.samples.windows(2).map(|w| 0.5 * (w[0].power() + w[1].power()) * (w[1].t - w[0].t)).sum()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Loads a mission CSV with header `t,omega_prop,torque_prop[,segment]`.
pub fn load_mission(path: impl AsRef<Path>) -> Result<MissionProfile> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    read_mission(file, name)
}

pub fn read_mission(reader: impl Read, name: impl Into<String>) -> Result<MissionProfile> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let has_segment = match cols.as_slice() {
        ["t", "omega_prop", "torque_prop"] => false,
        ["t", "omega_prop", "torque_prop", "segment"] => true,
        _ => {
            return Err(Error::Parse(format!(
                "expected header `t,omega_prop,torque_prop[,segment]`, got `{}`",
                cols.join(",")
            )))
        }
    };

    let mut samples = Vec::new();
    let mut segments = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != cols.len() {
            return Err(Error::Parse(format!(
                "row {}: expected {} fields, got {}",
                row + 1,
                cols.len(),
                record.len()
            )));
        }
        let field = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: `{}`: {e}", row + 1, &record[i])))
        };
        samples.push(MissionSample { t: field(0)?, omega_prop: field(1)?, torque_prop: field(2)? });
        if has_segment {
            segments.push(
                record[3]
                    .parse::<u32>()
                    .map_err(|e| Error::Parse(format!("row {}: segment `{}`: {e}", row + 1, &record[3])))?,
            );
        }
    }
    MissionProfile::new(name, samples, has_segment.then_some(segments))
}

pub fn write_mission(profile: &MissionProfile, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if profile.segments.is_some() {
        w.write_record(["t", "omega_prop", "torque_prop", "segment"])?;
    } else {
        w.write_record(["t", "omega_prop", "torque_prop"])?;
    }
    for (k, s) in profile.samples.iter().enumerate() {
        let mut rec = vec![s.t.to_string(), s.omega_prop.to_string(), s.torque_prop.to_string()];
        if let Some(seg) = &profile.segments {
            rec.push(seg[k].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<mission writer>", e))?;
    Ok(())
}

pub fn save_mission(profile: &MissionProfile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_mission(profile, std::io::BufWriter::new(file))
}

/// Linearly interpolates speed and torque onto a uniform grid of step `dt`
/// starting at the first sample. The last sample is kept exactly when it
/// falls on the grid.
pub fn resample(profile: &MissionProfile, dt: f64) -> Result<MissionProfile> {
    let duration = profile.duration();
    if !(dt > 0.0) || dt > duration {
        return Err(Error::InvalidArgument(format!("resample step {dt} must be in (0, {duration}]")));
    }
    let src = &profile.samples;
    let t0 = src[0].t;
    let t_end = src[src.len() - 1].t;
    let ratio = duration / dt;
    let n_steps = if (ratio - ratio.round()).abs() <= DT_TOLERANCE / dt {
        ratio.round() as usize
    } else {
        ratio.floor() as usize
    };

    let mut samples = Vec::with_capacity(n_steps + 1);
    let mut segments = profile.segments.as_ref().map(|_| Vec::with_capacity(n_steps + 1));
    let mut j = 0;
    for i in 0..=n_steps {
        let mut t = t0 + i as f64 * dt;
        if i == n_steps && (t - t_end).abs() <= DT_TOLERANCE {
            t = t_end;
        }
        while j + 2 < src.len() && src[j + 1].t <= t {
            j += 1;
        }
        let (a, b) = (&src[j], &src[j + 1]);
        let (omega, torque, left) = if t == a.t {
            (a.omega_prop, a.torque_prop, j)
        } else if t == b.t {
            (b.omega_prop, b.torque_prop, j + 1)
        } else {
            let f = (t - a.t) / (b.t - a.t);
            (
                a.omega_prop + f * (b.omega_prop - a.omega_prop),
                a.torque_prop + f * (b.torque_prop - a.torque_prop),
                j,
            )
        };
        samples.push(MissionSample { t, omega_prop: omega, torque_prop: torque });
        if let (Some(out), Some(seg)) = (segments.as_mut(), profile.segments.as_ref()) {
            out.push(seg[left]);
        }
    }
    MissionProfile::new(profile.name.clone(), samples, segments)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionStats {
    pub mean_power: f64,
    pub max_power: f64,
    pub energy: f64,
    /// Mean power per segment label.
    pub segment_mean_power: BTreeMap<u32, f64>,
}

pub fn mission_stats(profile: &MissionProfile) -> MissionStats {
    let n = profile.samples.len() as f64;
    let mean_power = profile.samples.iter().map(MissionSample::power).sum::<f64>() / n;
    let max_power = profile.samples.iter().map(MissionSample::power).fold(f64::NEG_INFINITY, f64::max);
    let mut acc: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    if let Some(seg) = &profile.segments {
        for (s, label) in profile.samples.iter().zip(seg) {
            let e = acc.entry(*label).or_insert((0.0, 0));
            e.0 += s.power();
            e.1 += 1;
        }
    }
    MissionStats {
        mean_power,
        max_power,
        energy: profile.energy(),
        segment_mean_power: acc.into_iter().map(|(k, (sum, c))| (k, sum / c as f64)).collect(),
    }
}

/// One qualitative leg of a synthetic mission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub label: u32,
    pub duration_s: f64,
    /// Cruise propeller speed, rad/s.
    pub cruise_speed: f64,
    /// Relative spread of the randomly drawn speed targets.
    pub speed_spread: f64,
    /// Number of stops; each leg between stops ends with a dwell.
    pub stops: usize,
    pub dwell_s: f64,
    /// Manoeuvring legs: targets jump between low and mid speed every few
    /// tens of seconds and approaches end in a reverse-thrust burst.
    pub manoeuvring: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionSpec {
    pub name: String,
    pub segments: Vec<SegmentSpec>,
    pub dt: f64,
    pub seed: u64,
    /// Propeller speed with the engine idling, rad/s.
    pub idle_speed: f64,
    /// Propeller-law coefficient `T = k ω²`, N·m·s².
    pub load_coefficient: f64,
    /// Extra torque per unit acceleration while speeding up, N·m·s².
    pub accel_torque: f64,
    pub max_accel: f64,
    pub max_decel: f64,
    /// Caps on the delivered propeller power (W) and torque (N·m).
    pub max_power: f64,
    pub max_torque: f64,
    /// Holding torque while moored at a stop, N·m.
    pub dwell_torque: f64,
    /// Magnitude of reverse-thrust bursts, N·m.
    pub reverse_torque: f64,
}

impl Default for MissionSpec {
    fn default() -> Self {
        Self {
            name: "linea1_demo".into(),
            segments: vec![
                SegmentSpec {
                    label: 1,
                    duration_s: 1500.0,
                    cruise_speed: 42.0,
                    speed_spread: 0.03,
                    stops: 5,
                    dwell_s: 35.0,
                    manoeuvring: false,
                },
                SegmentSpec {
                    label: 2,
                    duration_s: 2100.0,
                    cruise_speed: 34.0,
                    speed_spread: 0.25,
                    stops: 14,
                    dwell_s: 30.0,
                    manoeuvring: true,
                },
            ],
            dt: 1.0,
            seed: 42,
            idle_speed: 16.0,
            load_coefficient: 1.0,
            accel_torque: 250.0,
            max_accel: 2.5,
            max_decel: 4.0,
            max_power: 85_000.0,
            max_torque: 3_000.0,
            dwell_torque: 200.0,
            reverse_torque: 600.0,
        }
    }
}

/// Generates a deterministic two-regime mission from `spec`.
///
/// Speed follows randomly drawn targets through a rate limiter; torque
/// follows the propeller law plus an acceleration term, capped by
/// `max_power` and `max_torque`. Stops hold the propeller at idle speed with
/// a small mooring torque.
pub fn synthesize_demo_mission(spec: &MissionSpec) -> Result<MissionProfile> {
    if spec.segments.is_empty() {
        return Err(Error::InvalidArgument("mission spec has no segments".into()));
    }
    if !(spec.dt > 0.0) {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    for s in &spec.segments {
        if !(s.duration_s > 0.0) {
            return Err(Error::InvalidArgument(format!("segment {} has non-positive duration", s.label)));
        }
        if s.stops == 0 || !(s.cruise_speed > spec.idle_speed) {
            return Err(Error::InvalidArgument(format!(
                "segment {} needs at least one stop and a cruise speed above idle",
                s.label
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    let mut omega = spec.idle_speed;
    let mut k = 0usize;

    for seg in &spec.segments {
        let n = (seg.duration_s / spec.dt).round() as usize;
        let leg_len = n / seg.stops;
        let dwell = ((seg.dwell_s / spec.dt).round() as usize).min(leg_len / 2);
        for leg in 0..seg.stops {
            let len = if leg + 1 == seg.stops { n - leg_len * (seg.stops - 1) } else { leg_len };
            let moving = len - dwell;
            // Steps needed to brake from cruise to idle before the dwell.
            let brake =
                ((seg.cruise_speed - spec.idle_speed) / (spec.max_decel * spec.dt)).ceil() as usize + 2;
            let mut target = seg.cruise_speed;
            let mut hold = 0usize;
            for i in 0..len {
                let approaching = i + brake >= moving && i < moving;
                let docked = i >= moving;
                if docked || approaching {
                    target = spec.idle_speed;
                } else if hold == 0 {
                    let (lo, hi, span) = if seg.manoeuvring {
                        (0.45, 1.0, rng.gen_range(15..40))
                    } else {
                        (1.0 - seg.speed_spread, 1.0 + seg.speed_spread, rng.gen_range(40..90))
                    };
                    target = seg.cruise_speed * rng.gen_range(lo..hi);
                    hold = span;
                } else {
                    hold -= 1;
                }

                let prev = omega;
                let step = (target - omega).clamp(-spec.max_decel * spec.dt, spec.max_accel * spec.dt);
                omega = (omega + step).max(spec.idle_speed);
                let accel = (omega - prev) / spec.dt;

                let noise = 1.0 + 0.03 * rng.gen_range(-1.0..1.0);
                let torque = if docked {
                    spec.dwell_torque * (1.0 + 0.2 * rng.gen_range(-1.0..1.0))
                } else if seg.manoeuvring && approaching && accel < 0.0 && omega < 0.6 * seg.cruise_speed {
                    -spec.reverse_torque * (0.7 + 0.3 * rng.gen::<f64>())
                } else if accel < -1e-12 {
                    0.35 * spec.load_coefficient * omega * omega * noise
                } else {
                    (spec.load_coefficient * omega * omega + spec.accel_torque * accel) * noise
                };
                let torque = torque.min(spec.max_torque).min(spec.max_power / omega);

                samples.push(MissionSample { t: k as f64 * spec.dt, omega_prop: omega, torque_prop: torque });
                labels.push(seg.label);
                k += 1;
            }
        }
    }
    MissionProfile::new(spec.name.clone(), samples, Some(labels))
}
