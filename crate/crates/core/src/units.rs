//! Working units and conversions.
//!
//! The whole crate operates in ps (time), nm (wavelength), THz (optical
//! frequency), m (distance), ps/nm (accumulated dispersion) and
//! ps/(nm km) (fiber dispersion coefficient). These are the natural units of
//! the problem and keep every quantity within a comfortable float range.

use crate::scalar::{lit, Float};

/// Speed of light in nm/ps. The single physical constant of the crate.
pub const C_NM_PER_PS: f64 = 2.9979e5;

/// Speed of light in m/ps (same constant, different unit).
pub const C_M_PER_PS: f64 = C_NM_PER_PS * 1e-9;

/// Default fiber group index used when a deployment does not specify one.
pub const DEFAULT_GROUP_INDEX: f64 = 1.468;

#[inline]
pub fn speed_of_light_nm_per_ps<T: Float>() -> T {
    lit(C_NM_PER_PS)
}

#[inline]
pub fn speed_of_light_m_per_ps<T: Float>() -> T {
    lit(C_M_PER_PS)
}

/// Optical frequency (THz) of a vacuum wavelength (nm).
#[inline]
pub fn wavelength_to_frequency<T: Float>(wavelength_nm: T) -> T {
    speed_of_light_nm_per_ps::<T>() / wavelength_nm
}

/// Vacuum wavelength (nm) of an optical frequency (THz).
#[inline]
pub fn frequency_to_wavelength<T: Float>(freq_thz: T) -> T {
    speed_of_light_nm_per_ps::<T>() / freq_thz
}

/// Width of a spectral interval expressed in frequency (THz) for a given
/// wavelength width (nm) around a center wavelength. First-order Jacobian
/// `c dl / l^2`, accurate for spans small against the carrier.
#[inline]
pub fn wavelength_width_to_freq_width<T: Float>(width_nm: T, center_nm: T) -> T {
    speed_of_light_nm_per_ps::<T>() * width_nm / (center_nm * center_nm)
}

#[inline]
pub fn db_to_linear<T: Float>(db: T) -> T {
    lit::<T>(10.0).powf(db / lit(10.0))
}

#[inline]
pub fn linear_to_db<T: Float>(linear: T) -> T {
    lit::<T>(10.0) * linear.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_conversion_round_trips() {
        let f = wavelength_to_frequency(1550.0_f64);
        assert!((f - 193.4129032258065).abs() < 1e-9);
        let l = frequency_to_wavelength(f);
        assert!((l - 1550.0).abs() < 1e-9);
    }

    #[test]
    fn light_crosses_a_meter_of_vacuum_in_a_third_of_a_nanosecond() {
        assert!((1.0 / C_M_PER_PS - 3335.6683011441345).abs() < 1e-9);
    }

    #[test]
    fn db_round_trip() {
        let x = db_to_linear(-34.503_f64);
        assert!((linear_to_db(x) + 34.503).abs() < 1e-12);
    }
}
