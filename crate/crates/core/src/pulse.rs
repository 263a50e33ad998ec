//! Probe pulse synthesis, chromatic dispersion as quadratic spectral phase,
//! and the frequency/time transforms.
//!
//! The envelope convention is `a(t) = integral X(v) exp(-i 2 pi v t) dv`, so
//! a stretching medium with accumulated dispersion `D` delays the spectral
//! component at wavelength offset `dl` by `t = D dl`: the trace reproduces
//! the spectrum on the `l = l0 + t / D` axis, temporally inverted when `D`
//! is negative.

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics;
use crate::profiles;
use crate::scalar::{lit, Float};
use crate::spectrum::{ComplexTimeSignal, SpectralField, SpectralGrid};
use crate::units;
use crate::waveform::Waveform;

/// Spectral intensity shape of the probe source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralShape {
    Gaussian,
    SuperGaussian { order: u32 },
}

/// Broadband probe pulse description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePulseSpec<T> {
    pub center_wavelength_nm: T,
    /// FWHM of the spectral intensity, nm.
    pub spectral_fwhm_nm: T,
    pub shape: SpectralShape,
    /// Dimensionless quadratic spectral phase coefficient; 0 means
    /// transform-limited.
    pub chirp: T,
    /// Peak power of the transform-limited pulse, mW.
    pub peak_power_mw: T,
}

impl<T: Float> ProbePulseSpec<T> {
    pub fn new(
        center_wavelength_nm: T,
        spectral_fwhm_nm: T,
        shape: SpectralShape,
        chirp: T,
        peak_power_mw: T,
    ) -> Result<Self> {
        if spectral_fwhm_nm <= T::zero() || !spectral_fwhm_nm.is_finite() {
            return Err(Error::InvalidArgument(
                "spectral FWHM must be positive".into(),
            ));
        }
        if peak_power_mw <= T::zero() {
            return Err(Error::InvalidArgument(
                "peak power must be positive".into(),
            ));
        }
        if let SpectralShape::SuperGaussian { order } = shape {
            if order < 1 {
                return Err(Error::InvalidArgument(
                    "super-Gaussian order must be >= 1".into(),
                ));
            }
        }
        if !chirp.is_finite() {
            return Err(Error::NonFinite("chirp"));
        }
        Ok(Self {
            center_wavelength_nm,
            spectral_fwhm_nm,
            shape,
            chirp,
            peak_power_mw,
        })
    }

    /// The usual monitoring source used in the bundled scenarios: 1.33 nm
    /// Gaussian at 1550 nm, transform limited.
    pub fn default_gaussian() -> Self {
        Self {
            center_wavelength_nm: lit(1550.0),
            spectral_fwhm_nm: lit(1.33),
            shape: SpectralShape::Gaussian,
            chirp: T::zero(),
            peak_power_mw: T::one(),
        }
    }

    /// Unit-peak spectral intensity at a wavelength.
    pub fn spectral_intensity_at(&self, wavelength_nm: T) -> T {
        let u = (wavelength_nm - self.center_wavelength_nm) / self.spectral_fwhm_nm;
        match self.shape {
            SpectralShape::Gaussian => profiles::gaussian_intensity(u),
            SpectralShape::SuperGaussian { order } => {
                profiles::super_gaussian_intensity(u, order)
            }
        }
    }

    /// Spectral intensity FWHM converted to frequency, THz.
    pub fn spectral_fwhm_thz(&self) -> T {
        units::wavelength_width_to_freq_width(self.spectral_fwhm_nm, self.center_wavelength_nm)
    }

    /// FWHM of the transform-limited temporal intensity, ps. Exact for the
    /// Gaussian shape; a Gaussian-equivalent estimate otherwise (used for
    /// regime checks, not for waveform synthesis).
    pub fn transform_limited_fwhm_ps(&self) -> T {
        let tbp = lit::<T>(2.0 * std::f64::consts::LN_2) / T::PI();
        tbp / self.spectral_fwhm_thz()
    }

    /// Total pulse energy in mW ps, fixed by the transform-limited peak
    /// power: `E = P0 (l0^2/c) Iq / Ip^2`, with `Iq`/`Ip` the intensity and
    /// amplitude profile integrals over wavelength.
    pub fn pulse_energy(&self) -> T {
        let w = self.spectral_fwhm_nm;
        let half_extent = lit::<T>(8.0) * w;
        let iq = profiles::integrate_symmetric(
            |x| self.spectral_intensity_at(self.center_wavelength_nm + x),
            half_extent,
            4096,
        );
        let ip = profiles::integrate_symmetric(
            |x| {
                self.spectral_intensity_at(self.center_wavelength_nm + x)
                    .sqrt()
            },
            half_extent,
            4096,
        );
        let l0 = self.center_wavelength_nm;
        self.peak_power_mw * (l0 * l0 / units::speed_of_light_nm_per_ps::<T>()) * iq / (ip * ip)
    }
}

/// Synthesizes the probe's complex spectral envelope on a grid.
///
/// Zero chirp produces an identically zero spectral phase. The amplitude is
/// normalized so the transform-limited temporal peak equals the spec's peak
/// power.
pub fn generate_probe_pulse<T: Float>(
    spec: &ProbePulseSpec<T>,
    grid: &SpectralGrid<T>,
) -> Result<SpectralField<T>> {
    let center_mismatch =
        num_traits::Float::abs(grid.center_wavelength_nm() - spec.center_wavelength_nm);
    if center_mismatch > lit(1e-6) {
        return Err(Error::GridSpan(format!(
            "grid centered at {} nm, probe at {} nm",
            grid.center_wavelength_nm(),
            spec.center_wavelength_nm
        )));
    }
    let required = lit::<T>(SpectralGrid::<T>::MIN_SPAN_FACTOR) * spec.spectral_fwhm_nm;
    if grid.wavelength_span_nm() < required {
        return Err(Error::GridSpan(format!(
            "grid span {} nm below {} nm required by the probe width",
            grid.wavelength_span_nm(),
            required
        )));
    }

    let dnu = spec.spectral_fwhm_thz();
    let half_dnu = dnu / lit(2.0);
    let n = grid.n_points();
    let mut amps = Vec::with_capacity(n);
    let mut amp_sum = T::zero();
    for k in 0..n {
        // Shape evaluated on the frequency axis; the wavelength and frequency
        // FWHMs agree to first order in span/carrier.
        let u = grid.rel_freq_thz(k) / dnu;
        let intensity = match spec.shape {
            SpectralShape::Gaussian => profiles::gaussian_intensity(u),
            SpectralShape::SuperGaussian { order } => {
                profiles::super_gaussian_intensity(u, order)
            }
        };
        let amp = intensity.sqrt();
        amp_sum += amp;
        let phase = if spec.chirp == T::zero() {
            T::zero()
        } else {
            let un = grid.rel_freq_thz(k) / half_dnu;
            spec.chirp * un * un
        };
        amps.push(Complex::from_polar(amp, phase));
    }
    // Transform-limited temporal peak is |sum X df|^2.
    let scale = spec.peak_power_mw.sqrt() / (amp_sum * grid.freq_spacing_thz());
    for a in amps.iter_mut() {
        *a = a.scale(scale);
    }
    SpectralField::new(*grid, amps)
}

/// Applies an accumulated dispersion (ps/nm) as the quadratic spectral phase
/// `exp(i phi2 w^2 / 2)`. Lossless: the spectral intensity is unchanged bin
/// by bin.
pub fn apply_dispersion<T: Float>(
    field: &SpectralField<T>,
    d_total_ps_nm: T,
) -> Result<SpectralField<T>> {
    let grid = *field.grid();
    let gdd = optics::dispersion_to_gdd(d_total_ps_nm, grid.center_wavelength_nm())?;
    if gdd == T::zero() {
        return Ok(field.clone());
    }
    let two_pi = T::PI() + T::PI();
    let half = lit::<T>(0.5);
    let amps = field
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let w = two_pi * grid.rel_freq_thz(k);
            let phase = gdd * w * w * half;
            a * Complex::from_polar(T::one(), phase)
        })
        .collect();
    SpectralField::new(grid, amps)
}

/// Transforms a spectral field to its complex temporal envelope.
///
/// Discrete Parseval holds between the two domains to floating-point
/// accuracy; the time step is `1 / (n df)`.
pub fn to_time_domain<T: Float>(field: &SpectralField<T>) -> ComplexTimeSignal<T> {
    let grid = field.grid();
    let n = grid.n_points();
    // Reorder so the carrier bin leads (standard DFT layout), transform with
    // the exp(-i 2 pi v t) kernel, and center the result in time.
    let mut buf: Vec<Complex<T>> = (0..n)
        .map(|j| field.amplitudes()[(j + n / 2) % n])
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let df = grid.freq_spacing_thz();
    let samples: Vec<Complex<T>> = (0..n).map(|k| buf[(k + n / 2) % n].scale(df)).collect();
    ComplexTimeSignal {
        dt_ps: grid.time_step_ps(),
        samples,
    }
}

/// Detected intensity `|a(t)|^2` of a spectral field, with the envelope
/// center placed at `t_offset_ps` on the absolute time axis.
pub fn to_intensity_waveform<T: Float>(field: &SpectralField<T>, t_offset_ps: T) -> Waveform<T> {
    let signal = to_time_domain(field);
    let n = signal.samples.len();
    let t0 = t_offset_ps - lit::<T>((n / 2) as f64) * signal.dt_ps;
    Waveform {
        t0_ps: t0,
        dt_ps: signal.dt_ps,
        samples: signal.intensity(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn crossing_fwhm(w: &Waveform<f64>) -> f64 {
        let (pi, pv) = w.peak();
        let half = pv / 2.0;
        let mut left = f64::NAN;
        for i in (0..pi).rev() {
            if w.samples[i] <= half {
                let frac = (half - w.samples[i]) / (w.samples[i + 1] - w.samples[i]);
                left = w.time_at(i) + frac * w.dt_ps;
                break;
            }
        }
        let mut right = f64::NAN;
        for i in pi..w.len() - 1 {
            if w.samples[i + 1] <= half {
                let frac = (w.samples[i] - half) / (w.samples[i] - w.samples[i + 1]);
                right = w.time_at(i) + frac * w.dt_ps;
                break;
            }
        }
        right - left
    }

    fn default_probe() -> ProbePulseSpec<f64> {
        ProbePulseSpec::default_gaussian()
    }

    #[test]
    fn probe_spec_validation() {
        assert!(ProbePulseSpec::new(1550.0, -1.0, SpectralShape::Gaussian, 0.0, 1.0).is_err());
        assert!(ProbePulseSpec::new(1550.0, 1.0, SpectralShape::Gaussian, 0.0, 0.0).is_err());
        assert!(
            ProbePulseSpec::new(1550.0, 1.0, SpectralShape::SuperGaussian { order: 0 }, 0.0, 1.0)
                .is_err()
        );
    }

    #[test]
    fn probe_rejects_undersized_grid() {
        let grid = SpectralGrid::with_span(1550.0, 8.0, 1 << 12, 0.9).unwrap();
        assert!(generate_probe_pulse(&default_probe(), &grid).is_err());
        let off_center = SpectralGrid::with_span(1551.0, 80.0, 1 << 12, 1.33).unwrap();
        assert!(generate_probe_pulse(&default_probe(), &off_center).is_err());
    }

    #[test]
    fn zero_chirp_probe_has_flat_phase_and_correct_spectral_width() {
        let grid = SpectralGrid::with_span(1550.0, 12.0, 1 << 13, 1.33).unwrap();
        let field = generate_probe_pulse(&default_probe(), &grid).unwrap();
        for a in field.amplitudes() {
            if a.norm() > 1e-12 {
                assert!(a.im.abs() < 1e-15, "phase must be identically zero");
            }
        }
        // Spectral intensity FWHM in frequency equals the converted width
        // within one grid spacing.
        let intensity = field.spectral_intensity();
        let w = Waveform::new(0.0, grid.freq_spacing_thz(), intensity).unwrap();
        let measured = crossing_fwhm(&w);
        let expected = default_probe().spectral_fwhm_thz();
        assert!((measured - expected).abs() <= grid.freq_spacing_thz());
    }

    #[test]
    fn transform_limited_width_matches_time_bandwidth_product() {
        // Wide span for fine time resolution: dt ~ 0.1 ps on a 2.66 ps pulse.
        let grid = SpectralGrid::with_span(1550.0, 80.0, 1 << 12, 1.33).unwrap();
        let field = generate_probe_pulse(&default_probe(), &grid).unwrap();
        let wave = to_intensity_waveform(&field, 0.0);
        let measured = crossing_fwhm(&wave);
        // 0.441 / (c dl / l^2), evaluated independently.
        assert_relative_eq!(measured, 2.658888938380904, max_relative = 0.02);
        // Transform-limited peak equals the requested peak power.
        let (_, peak) = wave.peak();
        assert_relative_eq!(peak, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn pulse_energy_matches_temporal_integral() {
        let grid = SpectralGrid::with_span(1550.0, 80.0, 1 << 12, 1.33).unwrap();
        let field = generate_probe_pulse(&default_probe(), &grid).unwrap();
        let wave = to_intensity_waveform(&field, 0.0);
        assert_relative_eq!(default_probe().pulse_energy(), wave.energy(), max_relative = 1e-4);
        assert_relative_eq!(
            default_probe().pulse_energy(),
            2.830299583236978,
            max_relative = 1e-6
        );
    }

    #[test]
    fn dispersion_preserves_spectrum_and_energy() {
        let grid = SpectralGrid::plan(1550.0, 1.33, 1659.0).unwrap();
        let field = generate_probe_pulse(&default_probe(), &grid).unwrap();
        let out = apply_dispersion(&field, -1659.0).unwrap();
        for (a, b) in field.amplitudes().iter().zip(out.amplitudes()) {
            assert!((a.norm_sqr() - b.norm_sqr()).abs() <= 1e-15 * a.norm_sqr().max(1e-30));
        }
        assert_relative_eq!(field.energy(), out.energy(), max_relative = 1e-12);
    }

    #[test]
    fn dispersion_round_trip_restores_field() {
        let grid = SpectralGrid::plan(1550.0, 1.33, 1659.0).unwrap();
        let field = generate_probe_pulse(&default_probe(), &grid).unwrap();
        let out = apply_dispersion(&apply_dispersion(&field, -1659.0).unwrap(), 1659.0).unwrap();
        let mut err = 0.0_f64;
        let mut norm = 0.0_f64;
        for (a, b) in field.amplitudes().iter().zip(out.amplitudes()) {
            err += (a - b).norm_sqr();
            norm += a.norm_sqr();
        }
        assert!((err / norm).sqrt() < 1e-9, "relative error {}", (err / norm).sqrt());
    }

    #[test]
    fn dispersion_zero_is_identity() {
        let grid = SpectralGrid::with_span(1550.0, 12.0, 1 << 12, 1.33).unwrap();
        let field = generate_probe_pulse(&default_probe(), &grid).unwrap();
        let out = apply_dispersion(&field, 0.0).unwrap();
        assert_eq!(field.amplitudes(), out.amplitudes());
    }

    #[test]
    fn dispersion_phase_is_additive() {
        let grid = SpectralGrid::plan(1550.0, 1.33, 3000.0).unwrap();
        let field = generate_probe_pulse(&default_probe(), &grid).unwrap();
        let once = apply_dispersion(&field, 1250.0 - 3000.0).unwrap();
        let twice =
            apply_dispersion(&apply_dispersion(&field, 1250.0).unwrap(), -3000.0).unwrap();
        let mut err = 0.0_f64;
        let mut norm = 0.0_f64;
        for (a, b) in once.amplitudes().iter().zip(twice.amplitudes()) {
            err += (a - b).norm_sqr();
            norm += a.norm_sqr();
        }
        // Accumulated phases reach ~1e4 rad, so the combined and sequential
        // paths differ by rounding of the phase argument (~ulp of the
        // phase): well below 1e-10 in the field.
        assert!((err / norm).sqrt() < 1e-10, "rms {}", (err / norm).sqrt());
    }

    #[test]
    fn stretched_probe_reaches_dispersion_bandwidth_product() {
        // 1.33 nm through -1659 ps/nm: |D| * dl with the exact Gaussian
        // correction gives 2206.47 ps.
        let grid = SpectralGrid::plan(1550.0, 1.33, 1659.0).unwrap();
        let field = generate_probe_pulse(&default_probe(), &grid).unwrap();
        let stretched = apply_dispersion(&field, -1659.0).unwrap();
        let wave = to_intensity_waveform(&stretched, 0.0);
        let fwhm = crossing_fwhm(&wave);
        assert_relative_eq!(fwhm, 2206.4716020357905, max_relative = 0.02);
    }

    #[test]
    fn parseval_between_domains() {
        let grid = SpectralGrid::plan(1550.0, 1.33, 1659.0).unwrap();
        let field = generate_probe_pulse(&default_probe(), &grid).unwrap();
        let stretched = apply_dispersion(&field, -1659.0).unwrap();
        let time = to_time_domain(&stretched);
        let rel = ((time.energy() - stretched.energy()) / stretched.energy()).abs();
        assert!(rel < 1e-9, "Parseval violated at {rel}");
    }

    #[test]
    fn flat_spectrum_concentrates_at_window_center() {
        let grid = SpectralGrid::with_span(1550.0, 12.0, 1 << 12, 0.0).unwrap();
        let amps = vec![Complex::new(1.0, 0.0); grid.n_points()];
        let field = SpectralField::new(grid, amps).unwrap();
        let wave = to_intensity_waveform(&field, 0.0);
        let (peak_idx, _) = wave.peak();
        assert_eq!(peak_idx, grid.n_points() / 2);
        // Essentially all energy within a few samples of the center.
        let total: f64 = wave.samples.iter().sum();
        let local: f64 = wave.samples[peak_idx - 4..=peak_idx + 4].iter().sum();
        assert!(local / total > 0.99);
    }

    #[test]
    fn negative_dispersion_inverts_an_asymmetric_spectrum() {
        // Two unequal lines: strong at +0.5 nm, weak at -0.5 nm.
        let grid = SpectralGrid::with_span(1550.0, 12.0, 1 << 14, 1.0).unwrap();
        let line = |lambda: f64, center: f64| (-4.0 * std::f64::consts::LN_2 * ((lambda - center) / 0.05).powi(2)).exp();
        let amps: Vec<Complex<f64>> = (0..grid.n_points())
            .map(|k| {
                let l = grid.wavelength_nm(k);
                Complex::new((2.0 * line(l, 1550.5) + 0.5 * line(l, 1549.5)).sqrt(), 0.0)
            })
            .collect();
        let field = SpectralField::new(grid, amps).unwrap();

        for (d_total, expected_peak_time) in [(-1659.0, -829.5), (1659.0, 829.5)] {
            let stretched = apply_dispersion(&field, d_total).unwrap();
            let wave = to_intensity_waveform(&stretched, 0.0);
            let (peak_idx, _) = wave.peak();
            let t_peak = wave.time_at(peak_idx);
            assert!(
                (t_peak - expected_peak_time).abs() < 40.0,
                "strong line at {t_peak} ps, expected {expected_peak_time}"
            );
        }
    }
}
