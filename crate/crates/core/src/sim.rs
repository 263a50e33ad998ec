//! End-to-end monitoring response assembly.
//!
//! Each branch contributes one reflected pulse: the probe spectrum, stretched
//! by the monitoring module's dispersive medium and the round trip through
//! the distribution fiber, is spectrally carved by the branch encoder and
//! lands in the trace at the branch's round-trip delay. Two propagation
//! models are provided and cross-validate each other:
//!
//! * far field: the closed-form wavelength-to-time mapping, evaluated
//!   analytically (encoder reflectivity times the probe spectral density on
//!   the `l = l0 + (t - tau) / D_i` axis, scaled by `1/|D_i|`);
//! * full field: probe synthesis, quadratic spectral phase for each
//!   dispersive segment, reflection in the spectral domain, then a discrete
//!   transform back to time.
//!
//! Branch pulses are rendered in local windows and placed on a common time
//! base; the floor between pulses is exactly zero before noise. The receiver
//! chain applies a 4th-order-Bessel-magnitude lowpass, resamples to the ADC
//! rate, adds seeded Gaussian noise, and optionally quantizes.

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::encoder::FbgEncoder;
use crate::optics::{
    check_fraunhofer, distance_to_delay, DispersionBudget, FiberParams,
};
use crate::profiles;
use crate::pulse::{
    apply_dispersion, generate_probe_pulse, to_intensity_waveform, ProbePulseSpec,
};
use crate::scalar::{lit, Float};
use crate::spectrum::{SpectralField, SpectralGrid};
use crate::units;
use crate::waveform::Waveform;

/// Bessel 4th-order frequency scale placing the -3 dB point at the nominal
/// bandwidth.
const BESSEL4_3DB_SCALE: f64 = 2.1139176749042154;

/// Local render window half-width, in units of the mapped pulse width.
const WINDOW_WIDTHS: f64 = 8.0;

/// Trace extent beyond the latest pulse, in units of the widest pulse.
const TRACE_TAIL_WIDTHS: f64 = 10.0;

/// Customer branch: distance from the central office to its encoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch<T> {
    pub id: u32,
    /// CO-to-encoder distance, m (includes the feeder span).
    pub distance_m: T,
    pub encoder: FbgEncoder<T>,
    /// Connector/splice losses beyond splitter and fiber, dB one way.
    pub excess_loss_db: T,
}

/// The passive plant between the central office and the encoders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PonTopology<T> {
    pub branches: Vec<Branch<T>>,
    pub split_ratio: u32,
    pub fiber: FiberParams<T>,
    /// CO-to-splitter length, m; bookkeeping only since branch distances are
    /// measured from the CO.
    pub feeder_length_m: T,
    /// When false the link budget is ideal (0 dB), matching the usual
    /// idealization in which propagation losses are omitted.
    pub model_losses: bool,
}

impl<T: Float> PonTopology<T> {
    pub fn validate(&self) -> Result<()> {
        if (self.split_ratio as usize) < self.branches.len() {
            return Err(Error::Topology(format!(
                "split ratio {} below branch count {}",
                self.split_ratio,
                self.branches.len()
            )));
        }
        let mut ids: Vec<u32> = self.branches.iter().map(|b| b.id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.branches.len() {
            return Err(Error::Topology("duplicate branch ids".into()));
        }
        for b in &self.branches {
            if b.distance_m <= T::zero() || !b.distance_m.is_finite() {
                return Err(Error::Topology(format!(
                    "branch {} distance must be positive",
                    b.id
                )));
            }
            if b.distance_m < self.feeder_length_m {
                return Err(Error::Topology(format!(
                    "branch {} is shorter than the feeder",
                    b.id
                )));
            }
            if b.excess_loss_db < T::zero() {
                return Err(Error::Topology(format!(
                    "branch {} has negative excess loss",
                    b.id
                )));
            }
        }
        if let Some(first) = self.branches.first() {
            let c = first.encoder.center_wavelength_nm;
            if self
                .branches
                .iter()
                .any(|b| b.encoder.center_wavelength_nm != c)
            {
                return Err(Error::Topology(
                    "all encoders must share one center wavelength".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Which propagation path renders the branch pulses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PropagationModel {
    #[default]
    FarField,
    FullField,
}

/// Photodiode, digitizer and noise description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverConfig<T> {
    /// 3 dB lowpass bandwidth of the photodiode, GHz.
    pub pd_bandwidth_ghz: T,
    /// ADC sample rate, Gsps.
    pub sample_rate_gsps: T,
    /// Quantizer resolution; 0 means an ideal converter.
    pub adc_bits: u8,
    /// Additive white Gaussian noise, rms as a fraction of the trace peak.
    pub noise_rms: T,
    /// Noise generator seed.
    pub seed: u64,
}

impl<T: Float> ReceiverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.pd_bandwidth_ghz <= T::zero() || self.sample_rate_gsps <= T::zero() {
            return Err(Error::InvalidArgument(
                "receiver bandwidth and sample rate must be positive".into(),
            ));
        }
        if self.noise_rms < T::zero() {
            return Err(Error::InvalidArgument(
                "noise level must be non-negative".into(),
            ));
        }
        if self.sample_rate_gsps <= lit::<T>(2.0) * self.pd_bandwidth_ghz {
            log::warn!(
                "sample rate {} Gsps at or below twice the photodiode bandwidth {} GHz",
                self.sample_rate_gsps,
                self.pd_bandwidth_ghz
            );
        }
        Ok(())
    }

    /// ADC sample period, ps.
    #[inline]
    pub fn sample_period_ps(&self) -> T {
        lit::<T>(1000.0) / self.sample_rate_gsps
    }
}

/// Monitoring module: stretching medium, probe source and receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitoringModuleConfig<T> {
    /// Accumulated dispersion of the module's stretching medium, ps/nm.
    pub dispersion_ps_nm: T,
    pub probe: ProbePulseSpec<T>,
    pub receiver: ReceiverConfig<T>,
    /// Probe repetition period; must exceed the largest round-trip delay.
    pub repetition_period_ps: T,
    pub model: PropagationModel,
}

impl<T: Float> MonitoringModuleConfig<T> {
    pub fn validate(&self, topo: &PonTopology<T>) -> Result<()> {
        self.receiver.validate()?;
        if !self.dispersion_ps_nm.is_finite() {
            return Err(Error::NonFinite("monitoring dispersion"));
        }
        let mut max_tau = T::zero();
        for b in &topo.branches {
            let tau = distance_to_delay(b.distance_m, &topo.fiber)?;
            if tau > max_tau {
                max_tau = tau;
            }
        }
        if self.repetition_period_ps <= max_tau {
            return Err(Error::Topology(format!(
                "repetition period {} ps does not exceed the maximum round-trip delay {} ps",
                self.repetition_period_ps, max_tau
            )));
        }
        Ok(())
    }
}

/// Per-branch prediction of where and how wide its reflection lands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedEvent<T> {
    pub branch_id: u32,
    pub distance_m: T,
    pub tau_ps: T,
    pub bandwidth_nm: T,
    /// `|D_m + 2 D d| B`, the mapped pulse width.
    pub fwhm_ps: T,
}

/// Round-trip link budget of one branch, dB. Zero when loss modeling is off.
///
/// Fiber attenuation, splitter and excess losses are counted both ways; the
/// encoder's sub-unity peak reflectivity enters once. Branch responses fold
/// the peak reflectivity into this budget and use the unit-peak reflectivity
/// shape, so the reflection term is never double counted.
pub fn link_loss<T: Float>(branch: &Branch<T>, topo: &PonTopology<T>) -> T {
    if !topo.model_losses {
        return T::zero();
    }
    let d_km = branch.distance_m / lit(1000.0);
    let one_way = topo.fiber.attenuation_db_km * d_km
        + lit::<T>(10.0) * lit::<T>(topo.split_ratio as f64).log10()
        + branch.excess_loss_db;
    let reflection = -lit::<T>(10.0) * branch.encoder.peak_reflectivity.log10();
    lit::<T>(2.0) * one_way + reflection
}

fn branch_budget<T: Float>(
    branch: &Branch<T>,
    mm: &MonitoringModuleConfig<T>,
    topo: &PonTopology<T>,
) -> Result<DispersionBudget<T>> {
    DispersionBudget::for_link(
        mm.dispersion_ps_nm,
        &topo.fiber,
        branch.distance_m,
        mm.probe.center_wavelength_nm,
    )
}

/// Single reflected pulse via the closed-form mapping model: noise free,
/// before the receiver chain.
///
/// The waveform is the encoder's unit-peak reflectivity shape evaluated on
/// the wavelength-to-time axis, weighted by the probe's spectral energy
/// density and `1/|D_i|`, delayed by the branch round trip and scaled by the
/// link budget. Valid in the far-field regime; the transform-limit floor on
/// the pulse width is only captured by the full-field path.
pub fn branch_response_farfield<T: Float>(
    branch: &Branch<T>,
    mm: &MonitoringModuleConfig<T>,
    topo: &PonTopology<T>,
) -> Result<Waveform<T>> {
    let budget = branch_budget(branch, mm, topo)?;
    let d_i = budget.total_ps_nm;
    if d_i == T::zero() {
        return Err(Error::MappingUndefined);
    }
    let report = check_fraunhofer(
        mm.probe.transform_limited_fwhm_ps(),
        d_i,
        mm.probe.center_wavelength_nm,
    )?;
    if !report.satisfied {
        log::warn!(
            "branch {}: far-field model outside its regime (ratio {})",
            branch.id,
            report.ratio
        );
    }

    let tau = distance_to_delay(branch.distance_m, &topo.fiber)?;
    let abs_d = num_traits::Float::abs(d_i);
    let lam0 = mm.probe.center_wavelength_nm;

    // Probe spectral energy density, mW ps / nm.
    let energy = mm.probe.pulse_energy();
    let iq = profiles::integrate_symmetric(
        |x| mm.probe.spectral_intensity_at(lam0 + x),
        lit::<T>(8.0) * mm.probe.spectral_fwhm_nm,
        4096,
    );
    let density_peak = energy / iq;

    let amp = units::db_to_linear(-link_loss(branch, topo));
    let b_eff = if branch.encoder.bandwidth_nm < mm.probe.spectral_fwhm_nm {
        branch.encoder.bandwidth_nm
    } else {
        mm.probe.spectral_fwhm_nm
    };
    let mapped_width = abs_d * b_eff;
    let half_window = lit::<T>(WINDOW_WIDTHS) * mapped_width;
    let dt = local_render_period(mapped_width, mm.receiver.sample_period_ps());
    let n = ((half_window + half_window) / dt).ceil().to_usize().unwrap() + 1;
    let t0 = tau - half_window;
    let samples = (0..n)
        .map(|i| {
            let t = t0 + lit::<T>(i as f64) * dt;
            let lambda = lam0 + (t - tau) / d_i;
            let probe_density = density_peak * mm.probe.spectral_intensity_at(lambda);
            amp * probe_density * branch.encoder.normalized_reflectivity_at(lambda) / abs_d
        })
        .collect();
    Waveform::new(t0, dt, samples)
}

/// Single reflected pulse via full-field propagation: probe synthesis, both
/// dispersive segments as quadratic spectral phase, spectral-domain
/// reflection, then a transform to the detected intensity. Noise free,
/// before the receiver chain.
pub fn branch_response_fullfield<T: Float>(
    branch: &Branch<T>,
    mm: &MonitoringModuleConfig<T>,
    topo: &PonTopology<T>,
) -> Result<Waveform<T>> {
    let budget = branch_budget(branch, mm, topo)?;
    let d_i = budget.total_ps_nm;
    let lam0 = mm.probe.center_wavelength_nm;

    let max_feature = num_traits::Float::max(branch.encoder.bandwidth_nm, mm.probe.spectral_fwhm_nm);
    let content = num_traits::Float::min(branch.encoder.bandwidth_nm, mm.probe.spectral_fwhm_nm);
    let grid = SpectralGrid::plan_with_content(
        lam0,
        max_feature,
        num_traits::Float::abs(d_i),
        content,
    )?;

    let probe = generate_probe_pulse(&mm.probe, &grid)?;
    let outgoing = apply_dispersion(&probe, mm.dispersion_ps_nm)?;

    // Reflection carves the spectrum; the unit-peak shape is used here and
    // the peak reflectivity lives in the link budget.
    let reflected_amps = outgoing
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let r = branch.encoder.normalized_reflectivity_at(grid.wavelength_nm(k));
            a.scale(r.sqrt())
        })
        .collect();
    let reflected = SpectralField::new(grid, reflected_amps).map_err(|_| {
        Error::Topology(format!(
            "branch {} encoder does not overlap the probe spectrum",
            branch.id
        ))
    })?;

    let return_dispersion = d_i - mm.dispersion_ps_nm;
    let arrived = apply_dispersion(&reflected, return_dispersion)?;

    let tau = distance_to_delay(branch.distance_m, &topo.fiber)?;
    let mut wave = to_intensity_waveform(&arrived, tau);
    let amp = units::db_to_linear(-link_loss(branch, topo));
    for s in wave.samples.iter_mut() {
        *s *= amp;
    }
    Ok(wave)
}

/// Render period for a local pulse window: fine against the pulse itself and
/// against the receiver grid.
fn local_render_period<T: Float>(mapped_width_ps: T, rx_period_ps: T) -> T {
    let by_pulse = mapped_width_ps / lit(16.0);
    let dt = if by_pulse < rx_period_ps { by_pulse } else { rx_period_ps };
    // Keep local windows from degenerating.
    if dt < lit(1e-3) {
        lit(1e-3)
    } else {
        dt
    }
}

/// Magnitude response of a 4th-order Bessel lowpass, unit DC gain, -3 dB at
/// `f3db`.
pub fn bessel4_magnitude<T: Float>(freq: T, f3db: T) -> T {
    let w = lit::<T>(BESSEL4_3DB_SCALE) * freq / f3db;
    let w2 = w * w;
    let re = w2 * w2 - lit::<T>(45.0) * w2 + lit::<T>(105.0);
    let im = lit::<T>(105.0) * w - lit::<T>(10.0) * w2 * w;
    lit::<T>(105.0) / (re * re + im * im).sqrt()
}

/// Zero-phase photodiode lowpass, applied in the frequency domain of the
/// sampled window. Magnitude-equivalent response only: pulse widths are
/// magnitude dominated and the analog group delay is not reproduced.
pub(crate) fn pd_lowpass<T: Float>(wave: &mut Waveform<T>, bandwidth_ghz: T) {
    let f3_thz = bandwidth_ghz / lit(1000.0);
    let tail = (lit::<T>(4.0) / (f3_thz * wave.dt_ps))
        .ceil()
        .to_usize()
        .unwrap_or(0);
    let n = (wave.len() + tail).next_power_of_two();
    let mut buf: Vec<rustfft::num_complex::Complex<T>> = wave
        .samples
        .iter()
        .map(|&s| rustfft::num_complex::Complex::new(s, T::zero()))
        .collect();
    buf.resize(n, rustfft::num_complex::Complex::new(T::zero(), T::zero()));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let df = T::one() / (lit::<T>(n as f64) * wave.dt_ps);
    for (k, v) in buf.iter_mut().enumerate() {
        let bin = if k <= n / 2 { k } else { n - k };
        let h = bessel4_magnitude(lit::<T>(bin as f64) * df, f3_thz);
        *v = v.scale(h);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = T::one() / lit::<T>(n as f64);
    for (s, v) in wave.samples.iter_mut().zip(buf.iter()) {
        *s = v.re * scale;
    }
}

/// Predicted arrival and mapped width per branch, sorted by delay.
pub fn expected_events<T: Float>(
    topo: &PonTopology<T>,
    mm: &MonitoringModuleConfig<T>,
) -> Result<Vec<ExpectedEvent<T>>> {
    let mut events = Vec::with_capacity(topo.branches.len());
    for b in &topo.branches {
        let budget = branch_budget(b, mm, topo)?;
        events.push(ExpectedEvent {
            branch_id: b.id,
            distance_m: b.distance_m,
            tau_ps: distance_to_delay(b.distance_m, &topo.fiber)?,
            bandwidth_nm: b.encoder.bandwidth_nm,
            fwhm_ps: num_traits::Float::abs(budget.total_ps_nm) * b.encoder.bandwidth_nm,
        });
    }
    events.sort_by(|a, b| a.tau_ps.partial_cmp(&b.tau_ps).unwrap());
    Ok(events)
}

/// Simulates the full acquired trace: all branch reflections on a common
/// time base starting at t = 0, photodiode filtering, ADC-rate sampling,
/// seeded noise and optional quantization. Deterministic for a given seed.
pub fn simulate_pon_response<T: Float>(
    topo: &PonTopology<T>,
    mm: &MonitoringModuleConfig<T>,
) -> Result<Waveform<T>> {
    topo.validate()?;
    mm.validate(topo)?;

    let dt_rx = mm.receiver.sample_period_ps();
    let events = expected_events(topo, mm)?;
    let n_samples = match events.last() {
        Some(_) => {
            let max_tau = events
                .iter()
                .map(|e| e.tau_ps)
                .fold(T::zero(), |a, b| if b > a { b } else { a });
            let max_w = events
                .iter()
                .map(|e| e.fwhm_ps)
                .fold(T::zero(), |a, b| if b > a { b } else { a });
            let end = max_tau + lit::<T>(TRACE_TAIL_WIDTHS) * max_w;
            (end / dt_rx).ceil().to_usize().unwrap() + 1
        }
        // Noise-only trace for an empty plant.
        None => 2048,
    };

    // Branch windows render in parallel; summation stays in branch order so
    // the trace is bit-reproducible regardless of worker count.
    let windows: Vec<(usize, Vec<T>)> = topo
        .branches
        .par_iter()
        .map(|branch| -> Result<(usize, Vec<T>)> {
            let mut local = match mm.model {
                PropagationModel::FarField => branch_response_farfield(branch, mm, topo)?,
                PropagationModel::FullField => {
                    let full = branch_response_fullfield(branch, mm, topo)?;
                    crop_to_event_window(full, branch, mm, topo)?
                }
            };
            pd_lowpass(&mut local, mm.receiver.pd_bandwidth_ghz);
            // Project the filtered window onto the global receiver grid.
            let start = ((local.t0_ps / dt_rx).ceil()).to_isize().unwrap_or(0).max(0) as usize;
            let stop_t = local.end_time();
            let cutoff = if local.dt_ps > dt_rx { local.dt_ps } else { dt_rx };
            let mut values = Vec::new();
            let mut i = start;
            loop {
                let t = lit::<T>(i as f64) * dt_rx;
                if t > stop_t || i >= n_samples {
                    break;
                }
                values.push(local.value_at_bandlimited(t, cutoff));
                i += 1;
            }
            Ok((start, values))
        })
        .collect::<Result<_>>()?;

    let mut samples = vec![T::zero(); n_samples];
    for (start, values) in &windows {
        for (j, v) in values.iter().enumerate() {
            samples[start + j] += *v;
        }
    }
    // The zero-phase filter can undershoot by a fraction of a percent; the
    // detected photocurrent is clamped at zero before noise.
    for s in samples.iter_mut() {
        if *s < T::zero() {
            *s = T::zero();
        }
    }

    if mm.receiver.noise_rms > T::zero() {
        let peak = samples.iter().cloned().fold(T::zero(), |a, b| if b > a { b } else { a });
        let reference = if peak > T::zero() { peak } else { T::one() };
        let sigma = (mm.receiver.noise_rms * reference).to_f64().unwrap();
        let normal = Normal::new(0.0_f64, sigma).expect("valid noise sigma");
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(mm.receiver.seed);
        for s in samples.iter_mut() {
            *s += lit::<T>(normal.sample(&mut rng));
        }
    }

    if mm.receiver.adc_bits > 0 {
        quantize(&mut samples, mm.receiver.adc_bits);
    }

    Waveform::new(T::zero(), dt_rx, samples)
}

/// Crops a full-transform waveform to the neighborhood of its pulse.
fn crop_to_event_window<T: Float>(
    wave: Waveform<T>,
    branch: &Branch<T>,
    mm: &MonitoringModuleConfig<T>,
    topo: &PonTopology<T>,
) -> Result<Waveform<T>> {
    let budget = branch_budget(branch, mm, topo)?;
    let tau = distance_to_delay(branch.distance_m, &topo.fiber)?;
    let b_eff = if branch.encoder.bandwidth_nm < mm.probe.spectral_fwhm_nm {
        branch.encoder.bandwidth_nm
    } else {
        mm.probe.spectral_fwhm_nm
    };
    let mapped = num_traits::Float::abs(budget.total_ps_nm) * b_eff;
    // Window sized for the mapped width or the transform-limit floor,
    // whichever dominates.
    let floor = mm.probe.transform_limited_fwhm_ps()
        * (mm.probe.spectral_fwhm_nm / b_eff);
    let width = if mapped > floor { mapped } else { floor };
    let half = lit::<T>(WINDOW_WIDTHS) * width;
    let lo = ((tau - half - wave.t0_ps) / wave.dt_ps)
        .floor()
        .to_isize()
        .unwrap_or(0)
        .max(0) as usize;
    let hi = ((tau + half - wave.t0_ps) / wave.dt_ps)
        .ceil()
        .to_isize()
        .unwrap_or(0)
        .min(wave.len() as isize - 1) as usize;
    if hi <= lo {
        return Err(Error::Topology(format!(
            "branch {} pulse fell outside its transform window",
            branch.id
        )));
    }
    Waveform::new(
        wave.time_at(lo),
        wave.dt_ps,
        wave.samples[lo..=hi].to_vec(),
    )
}

/// Mid-rise uniform quantizer over the trace's own range.
fn quantize<T: Float>(samples: &mut [T], bits: u8) {
    let mut lo = samples[0];
    let mut hi = samples[0];
    for &s in samples.iter() {
        if s < lo {
            lo = s;
        }
        if s > hi {
            hi = s;
        }
    }
    if hi <= lo {
        return;
    }
    let levels = lit::<T>(((1u64 << bits.min(63)) - 1) as f64);
    let step = (hi - lo) / levels;
    for s in samples.iter_mut() {
        *s = lo + ((*s - lo) / step).round() * step;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::ReflectivityProfile;
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

    fn encoder(id: u32, b: f64) -> FbgEncoder<f64> {
        FbgEncoder::new(id, 1550.0, b, 0.9, ReflectivityProfile::Gaussian).unwrap()
    }

    fn reference_topology(bandwidths: &[(u32, f64, f64)]) -> PonTopology<f64> {
        PonTopology {
            branches: bandwidths
                .iter()
                .map(|&(id, d, b)| Branch {
                    id,
                    distance_m: d,
                    encoder: encoder(id, b),
                    excess_loss_db: 0.0,
                })
                .collect(),
            split_ratio: 32,
            fiber: FiberParams::standard_smf(),
            feeder_length_m: 0.0,
            model_losses: false,
        }
    }

    fn reference_mm(model: PropagationModel) -> MonitoringModuleConfig<f64> {
        MonitoringModuleConfig {
            dispersion_ps_nm: -1659.0,
            probe: ProbePulseSpec::default_gaussian(),
            receiver: ReceiverConfig {
                pd_bandwidth_ghz: 5.0,
                sample_rate_gsps: 20.0,
                adc_bits: 0,
                noise_rms: 0.0,
                seed: 1,
            },
            repetition_period_ps: 1e9,
            model,
        }
    }

    #[test]
    fn link_loss_disabled_is_zero() {
        let topo = reference_topology(&[(1, 3300.0, 0.24)]);
        assert_eq!(link_loss(&topo.branches[0], &topo), 0.0);
    }

    #[test]
    fn link_loss_matches_budget_arithmetic() {
        let mut topo = reference_topology(&[(1, 10_000.0, 0.24)]);
        topo.model_losses = true;
        let loss = link_loss(&topo.branches[0], &topo);
        // 2 (0.22 * 10 + 10 log10 32) plus the 0.9 reflection term.
        let expected = 34.502999566398124 - 10.0 * 0.9_f64.log10();
        assert_relative_eq!(loss, expected, max_relative = 1e-12);
    }

    #[test]
    fn link_loss_reflection_term_only() {
        let mut topo = reference_topology(&[(1, 1e-6, 0.24)]);
        topo.model_losses = true;
        topo.split_ratio = 1;
        // Branch distance ~ 0: only the reflection term remains.
        let loss = link_loss(&topo.branches[0], &topo);
        assert_relative_eq!(loss, -10.0 * 0.9_f64.log10(), max_relative = 1e-6);
    }

    #[test]
    fn farfield_width_reproduces_mapped_bandwidth() {
        let topo = reference_topology(&[(1, 3300.0, 0.24)]);
        let mm = reference_mm(PropagationModel::FarField);
        let w = branch_response_farfield(&topo.branches[0], &mm, &topo).unwrap();
        let fwhm = crossing_fwhm(&w);
        // |D_i| B = 371.232 ps; the probe's finite width narrows the product
        // spectrum to B_eff = B / sqrt(1 + (B/W_p)^2) = 0.23619 nm.
        assert_relative_eq!(fwhm, 365.33, max_relative = 0.01);
        assert_relative_eq!(fwhm, 371.232, max_relative = 0.025);
        // Peak sits at the round-trip delay.
        let (pi, _) = w.peak();
        let tau = distance_to_delay(3300.0, &topo.fiber).unwrap();
        assert!((w.time_at(pi) - tau).abs() < 2.0 * w.dt_ps);
    }

    #[test]
    fn farfield_width_matches_design_rule_under_flat_probe() {
        // Probe 8x wider than the encoder: the mapped width hits |D_i| B
        // within 1 %.
        let topo = reference_topology(&[(1, 3300.0, 0.24)]);
        let mut mm = reference_mm(PropagationModel::FarField);
        mm.probe.spectral_fwhm_nm = 8.0 * 0.24;
        let w = branch_response_farfield(&topo.branches[0], &mm, &topo).unwrap();
        assert_relative_eq!(crossing_fwhm(&w), 371.232, max_relative = 0.01);
    }

    #[test]
    fn farfield_rejects_zero_total_dispersion() {
        let topo = reference_topology(&[(1, 3300.0, 0.24)]);
        let mut mm = reference_mm(PropagationModel::FarField);
        mm.dispersion_ps_nm = -2.0 * 17.0 * 3.3;
        assert!(branch_response_farfield(&topo.branches[0], &mm, &topo).is_err());
    }

    #[test]
    fn fullfield_agrees_with_farfield() {
        let topo = reference_topology(&[(1, 3300.0, 0.24)]);
        let mm_far = reference_mm(PropagationModel::FarField);
        let far = branch_response_farfield(&topo.branches[0], &mm_far, &topo).unwrap();
        let full = branch_response_fullfield(&topo.branches[0], &mm_far, &topo).unwrap();
        let f1 = crossing_fwhm(&far);
        let f2 = crossing_fwhm(&full);
        assert!(
            ((f1 - f2) / f2).abs() < 0.02,
            "farfield {f1} vs fullfield {f2}"
        );
        // Peak amplitudes from the two scalings agree as well.
        let (_, a1) = far.peak();
        let (_, a2) = full.peak();
        assert_relative_eq!(a1, a2, max_relative = 0.03);
    }

    #[test]
    fn fullfield_transparent_encoder_is_probe_limited() {
        // Encoder much wider than the probe: the response is the stretched
        // probe itself, 2.2 ns.
        let topo = reference_topology(&[(1, 3300.0, 20.0)]);
        let mm = reference_mm(PropagationModel::FullField);
        let w = branch_response_fullfield(&topo.branches[0], &mm, &topo).unwrap();
        assert_relative_eq!(crossing_fwhm(&w), 2206.47, max_relative = 0.025);
    }

    #[test]
    fn fullfield_width_floors_at_transform_limit() {
        // Degenerate encoder: the mapped width |D_i| B drops below the
        // transform limit of the carved spectrum and the pulse floors there.
        let topo = reference_topology(&[(1, 3300.0, 0.01)]);
        let mm = reference_mm(PropagationModel::FullField);
        let w = branch_response_fullfield(&topo.branches[0], &mm, &topo).unwrap();
        let fwhm = crossing_fwhm(&w);
        assert!(fwhm > mm.probe.transform_limited_fwhm_ps());
        // Exact Gaussian prediction: sqrt(T_tl^2 + (|D_i| B_eff)^2).
        assert_relative_eq!(fwhm, 354.0, max_relative = 0.03);
    }

    #[test]
    fn dispersion_sign_flip_keeps_width() {
        let topo = reference_topology(&[(1, 3300.0, 0.24)]);
        let mut neg = reference_mm(PropagationModel::FullField);
        neg.dispersion_ps_nm = -1659.0;
        let mut pos = neg;
        pos.dispersion_ps_nm = 1659.0;
        let wn = branch_response_fullfield(&topo.branches[0], &neg, &topo).unwrap();
        let wp = branch_response_fullfield(&topo.branches[0], &pos, &topo).unwrap();
        // Widths differ only through 2Dd entering with opposite sign.
        let expected_ratio = (1659.0 + 112.2) / (1659.0 - 112.2);
        assert_relative_eq!(
            crossing_fwhm(&wp) / crossing_fwhm(&wn),
            expected_ratio,
            max_relative = 0.02
        );
    }

    #[test]
    fn empty_topology_gives_noise_only_trace() {
        let topo = reference_topology(&[]);
        let mut mm = reference_mm(PropagationModel::FarField);
        let quiet = simulate_pon_response(&topo, &mm).unwrap();
        assert!(quiet.samples.iter().all(|&s| s == 0.0));

        mm.receiver.noise_rms = 0.02;
        let noisy = simulate_pon_response(&topo, &mm).unwrap();
        let rms = (noisy.samples.iter().map(|s| s * s).sum::<f64>() / noisy.len() as f64).sqrt();
        assert_relative_eq!(rms, 0.02, max_relative = 0.1);
    }

    #[test]
    fn single_branch_trace_preserves_pulse_energy() {
        let topo = reference_topology(&[(1, 3300.0, 0.24)]);
        let mm = reference_mm(PropagationModel::FarField);
        let trace = simulate_pon_response(&topo, &mm).unwrap();
        let response = branch_response_farfield(&topo.branches[0], &mm, &topo).unwrap();
        assert_relative_eq!(trace.energy(), response.energy(), max_relative = 0.02);
    }

    #[test]
    fn close_branches_produce_two_resolved_pulses() {
        let topo = reference_topology(&[(1, 3300.0, 0.24), (2, 3300.48, 0.29)]);
        let mm = reference_mm(PropagationModel::FarField);
        let trace = simulate_pon_response(&topo, &mm).unwrap();
        // Count well-separated local maxima above half the trace peak.
        let (_, peak) = trace.peak();
        let mut maxima = Vec::new();
        for i in 1..trace.len() - 1 {
            if trace.samples[i] > 0.4 * peak
                && trace.samples[i] >= trace.samples[i - 1]
                && trace.samples[i] > trace.samples[i + 1]
                && maxima.last().map_or(true, |&last: &usize| i - last > 20)
            {
                maxima.push(i);
            }
        }
        assert_eq!(maxima.len(), 2, "expected two pulses");
        let sep = (maxima[1] - maxima[0]) as f64 * trace.dt_ps;
        assert_relative_eq!(sep, 4700.89, max_relative = 0.03);
    }

    #[test]
    fn superposition_of_disjoint_plants() {
        let both = reference_topology(&[(1, 2000.0, 0.24), (2, 2600.0, 0.29)]);
        let only1 = reference_topology(&[(1, 2000.0, 0.24)]);
        let only2 = reference_topology(&[(2, 2600.0, 0.29)]);
        let mm = reference_mm(PropagationModel::FarField);
        let w = simulate_pon_response(&both, &mm).unwrap();
        let w1 = simulate_pon_response(&only1, &mm).unwrap();
        let w2 = simulate_pon_response(&only2, &mm).unwrap();
        let (_, peak) = w.peak();
        for i in 0..w1.len().min(w.len()) {
            let expect = w1.samples[i] + w2.samples.get(i).copied().unwrap_or(0.0);
            assert!(
                (w.samples[i] - expect).abs() <= 2e-3 * peak,
                "sample {i}: {} vs {}",
                w.samples[i],
                expect
            );
        }
    }

    #[test]
    fn traces_are_bit_deterministic_per_seed() {
        let topo = reference_topology(&[(1, 3300.0, 0.24)]);
        let mut mm = reference_mm(PropagationModel::FarField);
        mm.receiver.noise_rms = 0.02;
        mm.receiver.adc_bits = 8;
        let a = simulate_pon_response(&topo, &mm).unwrap();
        let b = simulate_pon_response(&topo, &mm).unwrap();
        assert_eq!(a, b);
        mm.receiver.seed = 2;
        let c = simulate_pon_response(&topo, &mm).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn repetition_period_must_exceed_round_trip() {
        let topo = reference_topology(&[(1, 3300.0, 0.24)]);
        let mut mm = reference_mm(PropagationModel::FarField);
        mm.repetition_period_ps = 1e6; // below the 32.3 us round trip
        assert!(simulate_pon_response(&topo, &mm).is_err());
    }

    #[test]
    fn width_vs_distance_slope_follows_fiber_dispersion() {
        // Mapped width against distance: slope magnitude 2 D B, negative
        // while the stretching medium dominates with opposite sign.
        let mm = reference_mm(PropagationModel::FarField);
        for (b_nm, expected_abs) in [(0.24, 8.16), (0.29, 9.86)] {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for k in 0..8 {
                let d = 1000.0 + k as f64 * 1250.0;
                let topo = reference_topology(&[(1, d, b_nm)]);
                let w = branch_response_farfield(&topo.branches[0], &mm, &topo).unwrap();
                xs.push(d / 1000.0);
                ys.push(crossing_fwhm(&w));
            }
            let n = xs.len() as f64;
            let sx: f64 = xs.iter().sum();
            let sy: f64 = ys.iter().sum();
            let sxx: f64 = xs.iter().map(|x| x * x).sum();
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
            let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            assert!(slope < 0.0, "slope must be negative, got {slope}");
            assert!(
                (slope.abs() - expected_abs).abs() / expected_abs < 0.15,
                "B = {b_nm}: slope {slope} vs -{expected_abs}"
            );
        }
    }

    #[test]
    fn topology_validation_catches_errors() {
        let mut topo = reference_topology(&[(1, 3300.0, 0.24), (1, 4000.0, 0.29)]);
        assert!(topo.validate().is_err()); // duplicate id
        topo.branches[1].id = 2;
        topo.split_ratio = 1;
        assert!(topo.validate().is_err()); // split ratio too small
        topo.split_ratio = 32;
        topo.branches[0].encoder.center_wavelength_nm = 1551.0;
        assert!(topo.validate().is_err()); // mismatched centers
    }
}
