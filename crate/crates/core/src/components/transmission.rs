use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transmission {
    /// Speed ratio, input over output.
    pub ratio: f64,
    pub efficiency: f64,
    /// Inertia referred to the input shaft, kg·m².
    pub inertia: f64,
}

impl Transmission {
    pub fn new(ratio: f64, efficiency: f64, inertia: f64) -> Result<Self> {
        if !(ratio > 0.0 && efficiency > 0.0 && efficiency <= 1.0 && inertia >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "transmission needs ratio > 0, 0 < efficiency <= 1, inertia >= 0 \
                 (got {ratio}, {efficiency}, {inertia})"
            )));
        }
        Ok(Self { ratio, efficiency, inertia })
    }
}

/// Signum with `sgn(0) = 0`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Speed and torque at the transmission input for a propeller point.
///
/// The efficiency exponent is `-sgn(T)·sgn(ω)`: losses add to the input
/// torque when driving the propeller and are subtracted when the propeller
/// drives the shaft.
#[inline]
pub fn transmission_input(
    omega_prop: f64,
    torque_prop: f64,
    omega_dot_prop: f64,
    tr: &Transmission,
) -> (f64, f64) {
    let omega = omega_prop * tr.ratio;
    let omega_dot = omega_dot_prop * tr.ratio;
    let k = -sgn(torque_prop) * sgn(omega_prop);
    let torque = torque_prop / tr.ratio * tr.efficiency.powf(k) + tr.inertia * omega_dot;
    (omega, torque)
}

/// Ideal speed-ratio coupling: the downstream machine turns `ratio` times faster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorqueCoupling {
    pub ratio: f64,
}

impl TorqueCoupling {
    pub fn new(ratio: f64) -> Result<Self> {
        if !(ratio > 0.0) {
            return Err(Error::InvalidArgument("coupling ratio must be positive".into()));
        }
        Ok(Self { ratio })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn zero_load() {
        let tr = Transmission::new(4.3, 0.97, 0.5).unwrap();
        assert_eq!(transmission_input(50.0, 0.0, 0.0, &tr), (215.0, 0.0));
    }

    #[test]
    fn driving_and_regenerating() {
        let tr = Transmission::new(4.3, 0.97, 0.0).unwrap();
        let (w, t) = transmission_input(50.0, 1000.0, 0.0, &tr);
        assert_eq!(w, 215.0);
        assert!((t - 1000.0 / 4.3 / 0.97).abs() < 1e-9);
        assert!((t - 239.75).abs() < 0.01);
        let (_, t) = transmission_input(50.0, -1000.0, 0.0, &tr);
        assert!((t + 1000.0 / 4.3 * 0.97).abs() < 1e-9);
        assert!((t + 225.58).abs() < 0.01);
    }

    #[test]
    fn inertia_uses_input_acceleration() {
        let tr = Transmission::new(4.0, 1.0, 0.5).unwrap();
        let (_, t) = transmission_input(10.0, 0.0, 2.0, &tr);
        assert_eq!(t, 0.5 * 8.0);
    }

    #[test]
    fn losses_are_nonnegative_both_ways() {
        let tr = Transmission::new(4.0, 0.95, 0.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let w = rng.gen_range(0.0..60.0);
            let q = rng.gen_range(-3000.0..3000.0);
            let (wi, qi) = transmission_input(w, q, 0.0, &tr);
            let p_out = w * q;
            let p_in = wi * qi;
            assert!(p_in.abs() + 1e-9 >= p_out.abs() * if p_out >= 0.0 { 1.0 } else { 0.0 });
            if p_out > 0.0 {
                assert!(p_in >= p_out);
            } else if p_out < 0.0 {
                assert!(p_in.abs() <= p_out.abs());
            }
        }
    }

    #[test]
    fn rejects_invalid() {
        assert!(Transmission::new(0.0, 0.9, 0.0).is_err());
        assert!(Transmission::new(4.0, 1.1, 0.0).is_err());
        assert!(TorqueCoupling::new(-1.0).is_err());
    }
}
