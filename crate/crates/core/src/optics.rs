//! Fiber parameters, accumulated-dispersion bookkeeping and the
//! wavelength-to-time mapping relations shared by the rest of the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Float};
use crate::units;

/// Ratio above which the far-field (temporal Fraunhofer) regime is considered
/// reached. See [`check_fraunhofer`].
pub const FRAUNHOFER_MIN_RATIO: f64 = 100.0;

/// Distribution fiber of the network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberParams<T> {
    /// Dispersion coefficient in ps/(nm km). Any sign.
    pub dispersion_ps_nm_km: T,
    /// Attenuation in dB/km, one way.
    pub attenuation_db_km: T,
    /// Group index; group velocity is `c / group_index`.
    pub group_index: T,
}

impl<T: Float> FiberParams<T> {
    pub fn new(dispersion_ps_nm_km: T, attenuation_db_km: T, group_index: T) -> Result<Self> {
        if !(dispersion_ps_nm_km.is_finite()
            && attenuation_db_km.is_finite()
            && group_index.is_finite())
        {
            return Err(Error::NonFinite("fiber parameters"));
        }
        if group_index <= T::one() {
            return Err(Error::InvalidArgument(format!(
                "group_index must exceed 1, got {group_index}"
            )));
        }
        if attenuation_db_km < T::zero() {
            return Err(Error::InvalidArgument(
                "attenuation must be non-negative".into(),
            ));
        }
        Ok(Self {
            dispersion_ps_nm_km,
            attenuation_db_km,
            group_index,
        })
    }

    /// Standard single-mode fiber at the usual monitoring parameters.
    pub fn standard_smf() -> Self {
        Self {
            dispersion_ps_nm_km: lit(17.0),
            attenuation_db_km: lit(0.22),
            group_index: lit(units::DEFAULT_GROUP_INDEX),
        }
    }

    /// Group velocity in m/ps.
    #[inline]
    pub fn group_velocity_m_per_ps(&self) -> T {
        units::speed_of_light_m_per_ps::<T>() / self.group_index
    }
}

/// Convert accumulated dispersion (ps/nm) into group-delay dispersion (ps^2)
/// at a carrier wavelength: `phi2 = -D l0^2 / (2 pi c)`.
pub fn dispersion_to_gdd<T: Float>(d_total_ps_nm: T, center_wavelength_nm: T) -> Result<T> {
    if !d_total_ps_nm.is_finite() || !center_wavelength_nm.is_finite() {
        return Err(Error::NonFinite("dispersion_to_gdd"));
    }
    if center_wavelength_nm <= T::zero() {
        return Err(Error::InvalidArgument(
            "center wavelength must be positive".into(),
        ));
    }
    let c = units::speed_of_light_nm_per_ps::<T>();
    let two_pi = T::PI() + T::PI();
    Ok(-d_total_ps_nm * center_wavelength_nm * center_wavelength_nm / (two_pi * c))
}

/// Outcome of the far-field regime check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FraunhoferReport<T> {
    /// `|phi2| / (t0^2 / 8 pi)` with `t0` the 1/e half-width of the input
    /// pulse intensity, assumed Gaussian.
    pub ratio: T,
    /// True when `ratio >= FRAUNHOFER_MIN_RATIO`.
    pub satisfied: bool,
}

/// Checks whether the accumulated dispersion is large enough for the temporal
/// waveform to replicate the optical spectrum (wavelength-to-time mapping).
///
/// `temporal_fwhm_ps` is the FWHM of the input pulse intensity before
/// stretching. Zero total dispersion reports ratio 0, not satisfied.
pub fn check_fraunhofer<T: Float>(
    temporal_fwhm_ps: T,
    d_total_ps_nm: T,
    center_wavelength_nm: T,
) -> Result<FraunhoferReport<T>> {
    if temporal_fwhm_ps <= T::zero() || !temporal_fwhm_ps.is_finite() {
        return Err(Error::InvalidArgument(
            "temporal FWHM must be positive and finite".into(),
        ));
    }
    if d_total_ps_nm == T::zero() {
        return Ok(FraunhoferReport {
            ratio: T::zero(),
            satisfied: false,
        });
    }
    let gdd = dispersion_to_gdd(d_total_ps_nm, center_wavelength_nm)?;
    // 1/e half-width of a Gaussian intensity profile with the given FWHM.
    let t0 = temporal_fwhm_ps / (lit::<T>(2.0) * lit::<T>(std::f64::consts::LN_2).sqrt());
    let eight_pi = lit::<T>(8.0) * T::PI();
    let ratio = num_traits::Float::abs(gdd) / (t0 * t0 / eight_pi);
    Ok(FraunhoferReport {
        ratio,
        satisfied: ratio >= lit(FRAUNHOFER_MIN_RATIO),
    })
}

/// Round-trip delay (ps) of a reflector at distance `d` (m) from the probe
/// port: `tau = 2 d / v_g`.
pub fn distance_to_delay<T: Float>(distance_m: T, fiber: &FiberParams<T>) -> Result<T> {
    if distance_m < T::zero() || !distance_m.is_finite() {
        return Err(Error::InvalidArgument(
            "distance must be non-negative".into(),
        ));
    }
    Ok(lit::<T>(2.0) * distance_m / fiber.group_velocity_m_per_ps())
}

/// Distance (m) corresponding to a round-trip delay (ps): `d = tau v_g / 2`.
pub fn delay_to_distance<T: Float>(tau_ps: T, fiber: &FiberParams<T>) -> Result<T> {
    if tau_ps < T::zero() || !tau_ps.is_finite() {
        return Err(Error::InvalidArgument("delay must be non-negative".into()));
    }
    Ok(tau_ps * fiber.group_velocity_m_per_ps() / lit(2.0))
}

/// Wavelength observed at time `t` for a pulse stretched by `d_total` and
/// delayed by `tau`: `l = l0 + (t - tau) / D`.
///
/// For negative dispersion increasing time maps to decreasing wavelength, so
/// the trace is a temporally inverted copy of the spectrum.
pub fn wavelength_at_time<T: Float>(
    t_ps: T,
    tau_ps: T,
    d_total_ps_nm: T,
    center_wavelength_nm: T,
) -> Result<T> {
    if d_total_ps_nm == T::zero() {
        return Err(Error::MappingUndefined);
    }
    Ok(center_wavelength_nm + (t_ps - tau_ps) / d_total_ps_nm)
}

/// Accumulated dispersion of one monitoring round trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionBudget<T> {
    /// Dispersion of the monitoring module's stretching medium, ps/nm.
    pub monitor_ps_nm: T,
    /// Total round-trip dispersion `monitor + 2 D d`, ps/nm.
    pub total_ps_nm: T,
    /// Equivalent group-delay dispersion, ps^2. Sign opposite to the total.
    pub gdd_ps2: T,
}

impl<T: Float> DispersionBudget<T> {
    /// Budget for a reflector `distance_m` down the fiber, probed through a
    /// stretching medium of `monitor_ps_nm`.
    pub fn for_link(
        monitor_ps_nm: T,
        fiber: &FiberParams<T>,
        distance_m: T,
        center_wavelength_nm: T,
    ) -> Result<Self> {
        let d_km = distance_m / lit(1000.0);
        let total = monitor_ps_nm + lit::<T>(2.0) * fiber.dispersion_ps_nm_km * d_km;
        Ok(Self {
            monitor_ps_nm,
            total_ps_nm: total,
            gdd_ps2: dispersion_to_gdd(total, center_wavelength_nm)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gdd_matches_hand_computed_values() {
        // -D l^2 / (2 pi c) evaluated independently.
        let g = dispersion_to_gdd(-1659.0_f64, 1550.0).unwrap();
        assert_relative_eq!(g, 2115.98591194224, max_relative = 1e-12);

        assert_eq!(dispersion_to_gdd(0.0_f64, 1550.0).unwrap(), 0.0);

        let g = dispersion_to_gdd(3000.0_f64, 1550.0).unwrap();
        assert_relative_eq!(g, -3826.375970962459, max_relative = 1e-12);
    }

    #[test]
    fn gdd_rejects_bad_inputs() {
        assert!(dispersion_to_gdd(f64::NAN, 1550.0).is_err());
        assert!(dispersion_to_gdd(10.0, -3.0).is_err());
    }

    #[test]
    fn gdd_is_linear_in_dispersion() {
        let one = dispersion_to_gdd(1.0_f64, 1550.0).unwrap();
        for a in [-7.5, -1.0, 0.0, 3.25, 1e4] {
            let ga = dispersion_to_gdd(a, 1550.0).unwrap();
            assert_relative_eq!(ga, a * one, max_relative = 1e-12);
        }
    }

    #[test]
    fn fraunhofer_short_pulse_high_dispersion_is_satisfied() {
        let r = check_fraunhofer(0.81_f64, -1659.0, 1550.0).unwrap();
        assert!(r.satisfied);
        assert!(r.ratio > 1e4);
        assert_relative_eq!(r.ratio, 224733.6193445537, max_relative = 1e-9);
    }

    #[test]
    fn fraunhofer_zero_dispersion_never_satisfied() {
        let r = check_fraunhofer(0.5_f64, 0.0, 1550.0).unwrap();
        assert_eq!(r.ratio, 0.0);
        assert!(!r.satisfied);
    }

    #[test]
    fn fraunhofer_long_pulse_low_dispersion_fails() {
        let r = check_fraunhofer(100.0_f64, -10.0, 1550.0).unwrap();
        assert!(!r.satisfied);
        assert!(r.ratio < 0.1);
    }

    #[test]
    fn delay_distance_frozen_values() {
        let fiber = FiberParams::new(17.0_f64, 0.22, 1.468).unwrap();
        let tau = distance_to_delay(3300.0, &fiber).unwrap();
        assert_relative_eq!(tau, 3.2318623036125287e7, max_relative = 1e-12);

        let tau10 = distance_to_delay(10_000.0, &fiber).unwrap();
        assert_relative_eq!(tau10, 9.793522132159178e7, max_relative = 1e-12);

        assert_eq!(delay_to_distance(0.0, &fiber).unwrap(), 0.0);
        assert!(distance_to_delay(-1.0, &fiber).is_err());
        assert!(delay_to_distance(-1.0, &fiber).is_err());
    }

    #[test]
    fn delay_distance_round_trip_identity() {
        // Dense randomized round trip over [0, 100 km].
        use rand::{Rng, SeedableRng};
        let fiber = FiberParams::new(17.0_f64, 0.22, 1.468).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..1_000_000 {
            let d: f64 = rng.gen_range(0.0..100_000.0);
            let tau = distance_to_delay(d, &fiber).unwrap();
            let back = delay_to_distance(tau, &fiber).unwrap();
            assert!((back - d).abs() <= 1e-12 * d.max(1.0));
        }
    }

    #[test]
    fn wavelength_mapping_origin_and_inversion() {
        let l = wavelength_at_time(100.0_f64, 100.0, -1659.0, 1550.0).unwrap();
        assert_eq!(l, 1550.0);

        // (t - tau) = -1659 ps at D = -1659 ps/nm: one nm above carrier.
        let l = wavelength_at_time(-1659.0_f64, 0.0, -1659.0, 1550.0).unwrap();
        assert_relative_eq!(l, 1551.0, max_relative = 1e-12);

        let l = wavelength_at_time(3340.0_f64, 0.0, 3340.0, 1550.0).unwrap();
        assert_relative_eq!(l, 1551.0, max_relative = 1e-12);

        assert!(matches!(
            wavelength_at_time(1.0_f64, 0.0, 0.0, 1550.0),
            Err(Error::MappingUndefined)
        ));
    }

    #[test]
    fn wavelength_mapping_is_affine_with_slope_sign_of_dispersion() {
        for d in [-2500.0_f64, -1.0, 0.5, 4000.0] {
            let l0 = wavelength_at_time(0.0, 0.0, d, 1550.0).unwrap();
            let l1 = wavelength_at_time(1.0, 0.0, d, 1550.0).unwrap();
            let slope = l1 - l0;
            assert_relative_eq!(slope, 1.0 / d, max_relative = 1e-9);
            assert_eq!(slope.is_sign_positive(), d.is_sign_positive());
        }
    }

    #[test]
    fn budget_matches_link_arithmetic_exactly() {
        let fiber = FiberParams::new(17.0_f64, 0.22, 1.468).unwrap();
        for (dm, d) in [(-1659.0_f64, 3300.0_f64), (3000.0, 10_000.0), (0.0, 1.0)] {
            let b = DispersionBudget::for_link(dm, &fiber, d, 1550.0).unwrap();
            assert_eq!(b.total_ps_nm, dm + 2.0 * 17.0 * (d / 1000.0));
            // Sign of the GDD is opposite to the total dispersion.
            if b.total_ps_nm != 0.0 {
                assert_ne!(b.gdd_ps2.is_sign_positive(), b.total_ps_nm.is_sign_positive());
            }
        }
    }

    #[test]
    fn fiber_invariants_enforced() {
        assert!(FiberParams::new(17.0_f64, 0.22, 0.99).is_err());
        assert!(FiberParams::new(17.0_f64, -0.1, 1.468).is_err());
        assert!(FiberParams::new(f64::INFINITY, 0.22, 1.468).is_err());
        // Dispersion of either sign is fine.
        assert!(FiberParams::new(-17.0_f64, 0.22, 1.468).is_ok());
    }
}
