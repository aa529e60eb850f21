use super::StepInput;
use crate::components::{em_power, transmission_input, EMachine, Transmission};
use crate::error::{Error, Result};
use crate::mission::MissionProfile;

/// Mean motor efficiency for each candidate ratio; `None` marks a ratio that
/// drives the motor outside its envelope somewhere on the mission.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSweep {
    pub best: f64,
    pub table: Vec<(f64, Option<f64>)>,
}

/// Picks the gearbox ratio that maximises the energy-weighted mean motor
/// efficiency over the mission. `template` supplies efficiency and inertia;
/// its ratio is replaced by each candidate. Ties go to the earlier candidate.
pub fn optimize_transmission_ratio(
    mission: &MissionProfile,
    motor: &EMachine,
    template: &Transmission,
    candidates: &[f64],
) -> Result<RatioSweep> {
    if candidates.is_empty() || candidates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InvalidArgument("candidate ratios must be positive".into()));
    }
    let samples = mission.samples();
    let weights: Vec<f64> = (0..samples.len())
        .map(|k| {
            if k + 1 < samples.len() {
                samples[k + 1].t - samples[k].t
            } else {
                samples[k].t - samples[k - 1].t
            }
        })
        .collect();

    let mut table = Vec::with_capacity(candidates.len());
    let mut best: Option<(f64, f64)> = None;
    for &ratio in candidates {
        let tr = Transmission { ratio, ..template.clone() };
        let mean = mean_efficiency(mission, motor, &tr, &weights);
        if let Some(m) = mean {
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((ratio, m));
            }
        }
        table.push((ratio, mean));
    }
    let (best, _) = best.ok_or(Error::NoFeasibleRatio)?;
    Ok(RatioSweep { best, table })
}

fn mean_efficiency(
    mission: &MissionProfile,
    motor: &EMachine,
    tr: &Transmission,
    weights: &[f64],
) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, w) in weights.iter().enumerate() {
        let inp = StepInput::from_mission(mission, k);
        let (omega, torque) = transmission_input(inp.omega_prop, inp.torque_prop, inp.omega_dot_prop, tr);
        let torque = torque + motor.inertia * inp.omega_dot_prop * tr.ratio;
        let p_el = em_power(omega, torque, motor).ok()?;
        let p_mech = omega * torque;
        if p_mech == 0.0 {
            continue;
        }
        let eta = if p_mech > 0.0 { p_mech / p_el } else { p_el / p_mech };
        let energy = p_mech.abs() * w;
        num += eta * energy;
        den += energy;
    }
    (den > 0.0).then(|| num / den)
}
