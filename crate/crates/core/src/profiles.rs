//! Unit-peak spectral line shapes, parameterized by their FWHM.
//!
//! All functions take the normalized offset `u = (lambda - center) / fwhm`
//! and return an intensity in [0, 1] with value 1 at `u = 0` and 1/2 at
//! `u = +-1/2` (the FWHM definition).

use crate::scalar::{lit, Float};

/// `sinc^2` argument scale putting the half-maximum at `u = 1/2`.
const SINC_SQ_HALF_MAX: f64 = 0.4429464706894525;

#[inline]
pub(crate) fn gaussian_intensity<T: Float>(u: T) -> T {
    let a = lit::<T>(4.0 * std::f64::consts::LN_2);
    (-a * u * u).exp()
}

#[inline]
pub(crate) fn super_gaussian_intensity<T: Float>(u: T, order: u32) -> T {
    let two_u = lit::<T>(2.0) * num_traits::Float::abs(u);
    let p = two_u.powi(2 * order as i32);
    (-lit::<T>(std::f64::consts::LN_2) * p).exp()
}

/// Main lobe plus sidelobes of an unapodized grating: `sinc^2` scaled so the
/// main lobe has the requested FWHM.
#[inline]
pub(crate) fn sinc_sq_intensity<T: Float>(u: T) -> T {
    let v = lit::<T>(2.0 * SINC_SQ_HALF_MAX) * u;
    let s = crate::waveform::sinc(v);
    s * s
}

/// Simpson integral of `f` over `[-half_extent, half_extent]`.
pub(crate) fn integrate_symmetric<T: Float, F: Fn(T) -> T>(f: F, half_extent: T, n: usize) -> T {
    let n = if n % 2 == 0 { n } else { n + 1 };
    let h = (half_extent + half_extent) / lit(n as f64);
    let mut acc = f(-half_extent) + f(half_extent);
    for i in 1..n {
        let x = -half_extent + lit::<T>(i as f64) * h;
        let w: T = if i % 2 == 1 { lit(4.0) } else { lit(2.0) };
        acc += w * f(x);
    }
    acc * h / lit(3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn all_shapes_have_unit_peak_and_half_max_at_half_width() {
        for f in [
            gaussian_intensity::<f64> as fn(f64) -> f64,
            sinc_sq_intensity::<f64> as fn(f64) -> f64,
        ] {
            assert_relative_eq!(f(0.0), 1.0, max_relative = 1e-12);
            assert_relative_eq!(f(0.5), 0.5, max_relative = 1e-9);
            assert_relative_eq!(f(-0.5), 0.5, max_relative = 1e-9);
        }
        for order in [1u32, 2, 4, 6] {
            assert_relative_eq!(super_gaussian_intensity(0.0, order), 1.0);
            assert_relative_eq!(
                super_gaussian_intensity(0.5_f64, order),
                0.5,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn simpson_matches_gaussian_closed_form() {
        let w = 1.33_f64;
        let iq = integrate_symmetric(|x| gaussian_intensity(x / w), 8.0 * w, 4096);
        assert_relative_eq!(iq, 1.415741135843531, max_relative = 1e-10);
    }
}
