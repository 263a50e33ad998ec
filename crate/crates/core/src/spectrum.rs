//! Uniform frequency grids and complex spectral envelopes.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Float};
use crate::units;

/// Safety factor applied when sizing the time window of an auto-planned grid.
const PLAN_WINDOW_MARGIN: f64 = 1.5;

/// Uniform optical-frequency grid centered on a carrier wavelength.
///
/// The grid is uniform in frequency (the natural axis of the discrete
/// transform); wavelengths are derived per point. The wavelength span must
/// cover at least 8x the widest spectral feature that will be placed on the
/// grid, which keeps both tails of the feature far from the edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid<T> {
    center_wavelength_nm: T,
    n_points: usize,
    freq_spacing_thz: T,
}

impl<T: Float> SpectralGrid<T> {
    /// Span multiple enforced against the declared widest feature.
    pub const MIN_SPAN_FACTOR: f64 = 8.0;

    pub fn new(
        center_wavelength_nm: T,
        n_points: usize,
        freq_spacing_thz: T,
        max_feature_nm: T,
    ) -> Result<Self> {
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "grid size must be a power of two >= 2, got {n_points}"
            )));
        }
        if freq_spacing_thz <= T::zero() || !freq_spacing_thz.is_finite() {
            return Err(Error::InvalidArgument(
                "frequency spacing must be positive".into(),
            ));
        }
        if center_wavelength_nm <= T::zero() {
            return Err(Error::InvalidArgument(
                "center wavelength must be positive".into(),
            ));
        }
        let grid = Self {
            center_wavelength_nm,
            n_points,
            freq_spacing_thz,
        };
        if grid.min_frequency_thz() <= T::zero() {
            return Err(Error::GridSpan(
                "grid extends to non-positive optical frequencies".into(),
            ));
        }
        if max_feature_nm > T::zero() {
            let required = lit::<T>(Self::MIN_SPAN_FACTOR) * max_feature_nm;
            if grid.wavelength_span_nm() < required {
                return Err(Error::GridSpan(format!(
                    "span {} nm below required {} nm for a {} nm feature",
                    grid.wavelength_span_nm(),
                    required,
                    max_feature_nm
                )));
            }
        }
        Ok(grid)
    }

    /// Grid of `n_points` covering at least `span_nm` of wavelength around
    /// the center.
    pub fn with_span(
        center_wavelength_nm: T,
        span_nm: T,
        n_points: usize,
        max_feature_nm: T,
    ) -> Result<Self> {
        let freq_span = units::wavelength_width_to_freq_width(span_nm, center_wavelength_nm);
        let mut spacing = freq_span / lit(n_points as f64);
        // The Jacobian above is first order in span/carrier; iterate against
        // the exact span so the request is met from above.
        for _ in 0..32 {
            let trial = Self {
                center_wavelength_nm,
                n_points,
                freq_spacing_thz: spacing,
            };
            if trial.min_frequency_thz() <= T::zero() {
                return Err(Error::GridSpan(
                    "grid extends to non-positive optical frequencies".into(),
                ));
            }
            let exact = trial.wavelength_span_nm();
            if exact >= span_nm {
                break;
            }
            spacing = spacing * (span_nm / exact) * (T::one() + lit(1e-12));
        }
        Self::new(center_wavelength_nm, n_points, spacing, max_feature_nm)
    }

    /// Plans a grid for features up to `max_feature_nm` wide stretched by up
    /// to `max_abs_dispersion_ps_nm`: span follows the 8x rule and the grid
    /// size grows until the time window holds the whole stretched signal
    /// with margin.
    pub fn plan(
        center_wavelength_nm: T,
        max_feature_nm: T,
        max_abs_dispersion_ps_nm: T,
    ) -> Result<Self> {
        Self::plan_with_content(
            center_wavelength_nm,
            max_feature_nm,
            max_abs_dispersion_ps_nm,
            max_feature_nm,
        )
    }

    /// [`SpectralGrid::plan`] with a separate width for the spectral content
    /// that actually carries energy (e.g. the narrow reflected slice of a
    /// broad probe). The span is still sized by the widest feature; the time
    /// window only needs to hold the stretched content, including its
    /// transform-limit floor.
    pub fn plan_with_content(
        center_wavelength_nm: T,
        max_feature_nm: T,
        max_abs_dispersion_ps_nm: T,
        content_width_nm: T,
    ) -> Result<Self> {
        if max_feature_nm <= T::zero() || content_width_nm <= T::zero() {
            return Err(Error::InvalidArgument(
                "feature widths must be positive".into(),
            ));
        }
        let span = lit::<T>(Self::MIN_SPAN_FACTOR) * max_feature_nm;
        let freq_span = units::wavelength_width_to_freq_width(span, center_wavelength_nm);
        let content_freq =
            units::wavelength_width_to_freq_width(content_width_nm, center_wavelength_nm);
        let transform_limit = lit::<T>(2.0 * std::f64::consts::LN_2) / T::PI() / content_freq;
        let window_ps = (lit::<T>(Self::MIN_SPAN_FACTOR)
            * num_traits::Float::abs(max_abs_dispersion_ps_nm)
            * content_width_nm
            + lit::<T>(16.0) * transform_limit)
            * lit::<T>(PLAN_WINDOW_MARGIN)
            + lit::<T>(64.0) / freq_span;
        let mut n: usize = 4096;
        while lit::<T>(n as f64) < window_ps * freq_span {
            n *= 2;
            if n > (1 << 24) {
                return Err(Error::InvalidArgument(
                    "planned grid exceeds 2^24 points".into(),
                ));
            }
        }
        Self::with_span(center_wavelength_nm, span, n, max_feature_nm)
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    #[inline]
    pub fn freq_spacing_thz(&self) -> T {
        self.freq_spacing_thz
    }

    #[inline]
    pub fn center_wavelength_nm(&self) -> T {
        self.center_wavelength_nm
    }

    #[inline]
    pub fn center_frequency_thz(&self) -> T {
        units::wavelength_to_frequency(self.center_wavelength_nm)
    }

    /// Frequency offset of point `k` from the carrier, THz. The carrier sits
    /// at index `n/2`.
    #[inline]
    pub fn rel_freq_thz(&self, k: usize) -> T {
        (lit::<T>(k as f64) - lit((self.n_points / 2) as f64)) * self.freq_spacing_thz
    }

    #[inline]
    pub fn freq_thz(&self, k: usize) -> T {
        self.center_frequency_thz() + self.rel_freq_thz(k)
    }

    /// Exact vacuum wavelength of point `k`, nm.
    #[inline]
    pub fn wavelength_nm(&self, k: usize) -> T {
        units::frequency_to_wavelength(self.freq_thz(k))
    }

    #[inline]
    pub fn min_frequency_thz(&self) -> T {
        self.freq_thz(0)
    }

    #[inline]
    pub fn max_frequency_thz(&self) -> T {
        self.freq_thz(self.n_points - 1)
    }

    /// Exact wavelength span covered by the grid, nm.
    pub fn wavelength_span_nm(&self) -> T {
        units::frequency_to_wavelength(self.min_frequency_thz())
            - units::frequency_to_wavelength(self.max_frequency_thz())
    }

    pub fn min_wavelength_nm(&self) -> T {
        units::frequency_to_wavelength(self.max_frequency_thz())
    }

    pub fn max_wavelength_nm(&self) -> T {
        units::frequency_to_wavelength(self.min_frequency_thz())
    }

    /// True when the closed wavelength interval is inside the grid.
    pub fn covers_wavelength(&self, lo_nm: T, hi_nm: T) -> bool {
        self.min_wavelength_nm() <= lo_nm && hi_nm <= self.max_wavelength_nm()
    }

    /// Sample period of the paired time-domain signal, ps.
    #[inline]
    pub fn time_step_ps(&self) -> T {
        T::one() / (lit::<T>(self.n_points as f64) * self.freq_spacing_thz)
    }

    /// Total time window of the paired time-domain signal, ps.
    #[inline]
    pub fn time_window_ps(&self) -> T {
        T::one() / self.freq_spacing_thz
    }
}

/// Complex optical envelope sampled on a [`SpectralGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<T> {
    grid: SpectralGrid<T>,
    amplitudes: Vec<Complex<T>>,
}

impl<T: Float> SpectralField<T> {
    pub fn new(grid: SpectralGrid<T>, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return Err(Error::InvalidArgument(format!(
                "amplitude count {} does not match grid size {}",
                amplitudes.len(),
                grid.n_points()
            )));
        }
        let field = Self { grid, amplitudes };
        let e = field.energy();
        if !e.is_finite() || e <= T::zero() {
            return Err(Error::InvalidArgument(
                "field energy must be finite and positive".into(),
            ));
        }
        Ok(field)
    }

    #[inline]
    pub fn grid(&self) -> &SpectralGrid<T> {
        &self.grid
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amplitudes
    }

    /// Discrete spectral energy: `sum |X_k|^2 df`.
    pub fn energy(&self) -> T {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .fold(T::zero(), |acc, x| acc + x)
            * self.grid.freq_spacing_thz()
    }

    /// Spectral intensity `|X_k|^2` per grid point.
    pub fn spectral_intensity(&self) -> Vec<T> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Complex time-domain envelope paired with a spectral grid; sample `k` sits
/// at `(k - n/2) * dt` relative to the envelope center.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTimeSignal<T> {
    pub dt_ps: T,
    pub samples: Vec<Complex<T>>,
}

impl<T: Float> ComplexTimeSignal<T> {
    /// Time of sample `k` relative to the envelope center, ps.
    #[inline]
    pub fn time_at(&self, k: usize) -> T {
        (lit::<T>(k as f64) - lit((self.samples.len() / 2) as f64)) * self.dt_ps
    }

    /// Discrete temporal energy: `sum |a_k|^2 dt`.
    pub fn energy(&self) -> T {
        self.samples
            .iter()
            .map(|a| a.norm_sqr())
            .fold(T::zero(), |acc, x| acc + x)
            * self.dt_ps
    }

    pub fn intensity(&self) -> Vec<T> {
        self.samples.iter().map(|a| a.norm_sqr()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(SpectralGrid::new(1550.0_f64, 3, 0.01, 0.0).is_err());
        assert!(SpectralGrid::new(1550.0_f64, 4, -0.01, 0.0).is_err());
        assert!(SpectralGrid::new(1550.0_f64, 0, 0.01, 0.0).is_err());
    }

    #[test]
    fn grid_enforces_span_rule() {
        // 4096 x 0.0003 THz ~ 1.229 THz ~ 9.85 nm at 1550: too small for a
        // 1.33 nm feature (needs 10.64 nm), fine for 1.2 nm.
        assert!(SpectralGrid::new(1550.0_f64, 4096, 3e-4, 1.33).is_err());
        assert!(SpectralGrid::new(1550.0_f64, 4096, 3e-4, 1.2).is_ok());
    }

    #[test]
    fn with_span_hits_requested_span() {
        let g = SpectralGrid::with_span(1550.0_f64, 10.64, 1 << 16, 1.33).unwrap();
        assert_relative_eq!(g.wavelength_span_nm(), 10.64, max_relative = 2e-3);
        assert_eq!(g.n_points(), 1 << 16);
        // Carrier sits on the center point.
        assert_relative_eq!(g.wavelength_nm(1 << 15), 1550.0, max_relative = 1e-12);
    }

    #[test]
    fn plan_sizes_window_for_stretched_signal() {
        let g = SpectralGrid::plan(1550.0_f64, 1.33, 1659.0).unwrap();
        assert!(g.wavelength_span_nm() >= 8.0 * 1.33);
        // Stretched extent |D| * span must fit in the window.
        assert!(g.time_window_ps() >= 1659.0 * 8.0 * 1.33);
        assert!(g.n_points() <= 1 << 17);
    }

    #[test]
    fn field_requires_matching_length_and_positive_energy() {
        let g = SpectralGrid::with_span(1550.0_f64, 16.0, 16, 0.0).unwrap();
        assert!(SpectralField::new(g, vec![Complex::new(1.0, 0.0); 8]).is_err());
        assert!(SpectralField::new(g, vec![Complex::new(0.0, 0.0); 16]).is_err());
        let f = SpectralField::new(g, vec![Complex::new(1.0, 0.0); 16]).unwrap();
        assert_relative_eq!(f.energy(), 16.0 * g.freq_spacing_thz(), max_relative = 1e-12);
    }
}
