//! Real sampled photocurrent traces and band-limited resampling.

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Float};

/// Half-width of the interpolation kernel, in cutoff periods.
const KERNEL_HALF_WIDTH: f64 = 16.0;

/// Fraction of input Nyquist above which energy counts as near-aliased.
const ALIAS_BAND_FRACTION: f64 = 0.8;
const ALIAS_ENERGY_FRACTION: f64 = 1e-3;

/// Real sampled waveform. `samples[i]` sits at `t0_ps + i * dt_ps`.
///
/// Detected intensities are non-negative; samples may go negative only after
/// additive receiver noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform<T> {
    pub t0_ps: T,
    pub dt_ps: T,
    pub samples: Vec<T>,
}

impl<T: Float> Waveform<T> {
    pub fn new(t0_ps: T, dt_ps: T, samples: Vec<T>) -> Result<Self> {
        if dt_ps <= T::zero() || !dt_ps.is_finite() {
            return Err(Error::InvalidArgument(
                "sample period must be positive".into(),
            ));
        }
        if samples.is_empty() {
            return Err(Error::InvalidArgument("waveform has no samples".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("waveform sample"));
        }
        Ok(Self {
            t0_ps,
            dt_ps,
            samples,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[inline]
    pub fn time_at(&self, index: usize) -> T {
        self.t0_ps + lit::<T>(index as f64) * self.dt_ps
    }

    /// Time of the last sample.
    pub fn end_time(&self) -> T {
        self.time_at(self.len().saturating_sub(1))
    }

    /// Index and value of the maximum sample.
    pub fn peak(&self) -> (usize, T) {
        let mut best = (0usize, self.samples[0]);
        for (i, &s) in self.samples.iter().enumerate() {
            if s > best.1 {
                best = (i, s);
            }
        }
        best
    }

    /// Trapezoidal integral of the waveform over its support.
    pub fn energy(&self) -> T {
        if self.samples.len() < 2 {
            return T::zero();
        }
        let sum: T = self.samples.iter().copied().sum();
        let half = lit::<T>(0.5);
        (sum - half * (self.samples[0] + self.samples[self.len() - 1])) * self.dt_ps
    }

    /// Band-limited value at an arbitrary time, using a Blackman-windowed
    /// sinc kernel with cutoff period `cutoff_dt` (>= the sample period for a
    /// lowpass/decimating kernel). Times outside the support interpolate
    /// against an implicit zero extension.
    pub fn value_at_bandlimited(&self, t: T, cutoff_dt: T) -> T {
        let cutoff = if cutoff_dt > self.dt_ps {
            cutoff_dt
        } else {
            self.dt_ps
        };
        let half_width = cutoff * lit(KERNEL_HALF_WIDTH);
        let lo_t = t - half_width;
        let hi_t = t + half_width;
        let lo = ((lo_t - self.t0_ps) / self.dt_ps).ceil();
        let hi = ((hi_t - self.t0_ps) / self.dt_ps).floor();
        let lo_i = lo.to_isize().unwrap_or(0).max(0) as usize;
        let hi_i = hi
            .to_isize()
            .unwrap_or(-1)
            .min(self.len() as isize - 1);
        if hi_i < 0 || lo_i >= self.len() {
            return T::zero();
        }
        let hi_i = hi_i as usize;
        let mut acc = T::zero();
        let mut norm = T::zero();
        for j in lo_i..=hi_i {
            let u = (t - self.time_at(j)) / cutoff;
            let w = sinc(u) * blackman(u / lit(KERNEL_HALF_WIDTH));
            acc += w * self.samples[j];
            norm += w;
        }
        if norm == T::zero() {
            T::zero()
        } else {
            acc / norm
        }
    }

    /// Resamples onto a grid with period `new_dt`, starting at the same
    /// `t0_ps` and covering the same duration.
    ///
    /// Downsampling band-limits to the new Nyquist rate; upsampling
    /// interpolates. Upsampling content that already carries energy near the
    /// input Nyquist frequency is flagged with a warning, since that content
    /// cannot be reconstructed.
    pub fn resample(&self, new_dt: T) -> Result<Waveform<T>> {
        if new_dt <= T::zero() || !new_dt.is_finite() {
            return Err(Error::InvalidArgument(
                "new sample period must be positive".into(),
            ));
        }
        if new_dt == self.dt_ps {
            return Ok(self.clone());
        }
        if new_dt < self.dt_ps && self.near_nyquist_energy_fraction() > lit(ALIAS_ENERGY_FRACTION)
        {
            log::warn!(
                "upsampling a waveform with significant energy near its Nyquist rate; \
                 content above the original band cannot be reconstructed"
            );
        }
        let duration = self.end_time() - self.t0_ps;
        let n_new = (duration / new_dt).floor().to_usize().unwrap_or(0) + 1;
        let cutoff = if new_dt > self.dt_ps { new_dt } else { self.dt_ps };
        let samples = (0..n_new)
            .map(|i| {
                let t = self.t0_ps + lit::<T>(i as f64) * new_dt;
                self.value_at_bandlimited(t, cutoff)
            })
            .collect();
        Waveform::new(self.t0_ps, new_dt, samples)
    }

    /// Fraction of spectral energy above `ALIAS_BAND_FRACTION` of Nyquist.
    fn near_nyquist_energy_fraction(&self) -> T {
        let n = self.len().next_power_of_two();
        let mut buf: Vec<rustfft::num_complex::Complex<T>> = self
            .samples
            .iter()
            .map(|&s| rustfft::num_complex::Complex::new(s, T::zero()))
            .collect();
        buf.resize(n, rustfft::num_complex::Complex::new(T::zero(), T::zero()));
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let half = n / 2;
        let band_lo = (ALIAS_BAND_FRACTION * half as f64) as usize;
        let mut total = T::zero();
        let mut band = T::zero();
        for (k, v) in buf.iter().enumerate().take(half + 1) {
            let p = v.norm_sqr();
            total += p;
            if k >= band_lo {
                band += p;
            }
        }
        if total == T::zero() {
            T::zero()
        } else {
            band / total
        }
    }
}

/// Normalized sinc: `sin(pi x) / (pi x)`.
#[inline]
pub(crate) fn sinc<T: Float>(x: T) -> T {
    if x == T::zero() {
        T::one()
    } else {
        let px = T::PI() * x;
        px.sin() / px
    }
}

/// Blackman window on `u` in [-1, 1]; zero outside.
#[inline]
pub(crate) fn blackman<T: Float>(u: T) -> T {
    let au = num_traits::Float::abs(u);
    if au > T::one() {
        return T::zero();
    }
    lit::<T>(0.42) + lit::<T>(0.5) * (T::PI() * au).cos()
        + lit::<T>(0.08) * (lit::<T>(2.0) * T::PI() * au).cos()
}
