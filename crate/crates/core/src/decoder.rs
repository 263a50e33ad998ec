//! Trace recognition: pulse detection, width measurement, bandwidth
//! inversion, codebook identification, overlap resolution and branch health.
//!
//! The decoder works entirely from the acquired trace plus the previously
//! known plant parameters (stretching dispersion, fiber dispersion and group
//! index, codebook). Each reflection's delay gives the branch distance, its
//! FWHM divided by the accumulated dispersion gives the encoder bandwidth,
//! and the nearest codebook entry names the user — equivalent to midpoint
//! decision thresholds between adjacent codes.

use serde::{Deserialize, Serialize};

use crate::encoder::Codebook;
use crate::error::{Error, Result};
use crate::optics::{delay_to_distance, FiberParams};
use crate::scalar::{lit, Float};
use crate::waveform::Waveform;

/// Residual energy fraction at which greedy overlap resolution stops.
const OVERLAP_RESIDUAL_FLOOR: f64 = 0.05;
/// Iteration cap of the overlap resolver.
const OVERLAP_MAX_ITERATIONS: usize = 8;
/// Amplitude ratio over the singleton reference above which a pulse looks
/// like more than one user.
const AMBIGUOUS_AMPLITUDE_RATIO: f64 = 1.5;
/// Window floor, relative to the event peak, that the detection window must
/// reach on both sides so the half-maximum crossings are bracketed.
const WINDOW_FLOOR_FRACTION: f64 = 0.35;

/// One reflection found in the trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent<T> {
    /// Interpolated peak delay, ps.
    pub tau_ps: T,
    /// Measured width, ps; zero until measured.
    pub fwhm_ps: T,
    /// Peak amplitude, linear trace units.
    pub amplitude: T,
    /// Half-open sample range `[start, end)` owning the event.
    pub window: (usize, usize),
}

/// Decoder configuration: detection threshold plus copies of the plant
/// parameters needed to invert pulse widths into bandwidths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig<T> {
    /// Detection threshold as a fraction of the trace maximum.
    pub detect_threshold: T,
    /// Designed pulse-width resolution, ps.
    pub resolution_ps: T,
    /// Stretching-medium dispersion, ps/nm.
    pub monitor_dispersion_ps_nm: T,
    pub fiber: FiberParams<T>,
    pub codebook: Codebook<T>,
    /// Distance window for matching a decoded user to its registered branch.
    pub distance_tolerance_m: T,
    /// Amplitude fraction (of the reference) below which a matched branch
    /// counts as degraded.
    pub degradation_fraction: T,
    /// Reference amplitude of a healthy singleton pulse; estimated from the
    /// trace (median event amplitude) when absent.
    pub reference_amplitude: Option<T>,
}

impl<T: Float> DecoderConfig<T> {
    pub fn new(
        detect_threshold: T,
        resolution_ps: T,
        monitor_dispersion_ps_nm: T,
        fiber: FiberParams<T>,
        codebook: Codebook<T>,
    ) -> Result<Self> {
        if detect_threshold <= T::zero() || detect_threshold >= T::one() {
            return Err(Error::InvalidArgument(
                "detection threshold must lie in (0, 1)".into(),
            ));
        }
        Ok(Self {
            detect_threshold,
            resolution_ps,
            monitor_dispersion_ps_nm,
            fiber,
            codebook,
            distance_tolerance_m: lit(2.0),
            degradation_fraction: lit(0.5),
            reference_amplitude: None,
        })
    }

    /// Accumulated dispersion magnitude at a distance, ps/nm.
    fn abs_dispersion_at(&self, distance_m: T) -> T {
        let d_km = distance_m / lit(1000.0);
        num_traits::Float::abs(
            self.monitor_dispersion_ps_nm + lit::<T>(2.0) * self.fiber.dispersion_ps_nm_km * d_km,
        )
    }
}

/// Expected mapped pulse width `|D_m + 2 D d| B`, ps.
pub fn expected_fwhm<T: Float>(
    bandwidth_nm: T,
    distance_m: T,
    monitor_dispersion_ps_nm: T,
    fiber: &FiberParams<T>,
) -> T {
    let d_km = distance_m / lit(1000.0);
    num_traits::Float::abs(
        monitor_dispersion_ps_nm + lit::<T>(2.0) * fiber.dispersion_ps_nm_km * d_km,
    ) * bandwidth_nm
}

/// 3-sample median prefilter used ahead of threshold detection.
fn median3<T: Float>(samples: &[T]) -> Vec<T> {
    let n = samples.len();
    if n < 3 {
        return samples.to_vec();
    }
    let mut out = Vec::with_capacity(n);
    out.push(samples[0]);
    for i in 1..n - 1 {
        let (a, b, c) = (samples[i - 1], samples[i], samples[i + 1]);
        let med = if a > b {
            if b > c {
                b
            } else if a > c {
                c
            } else {
                a
            }
        } else if a > c {
            a
        } else if b > c {
            c
        } else {
            b
        };
        out.push(med);
    }
    out.push(samples[n - 1]);
    out
}

/// Sub-sample peak offset from a three-point parabola, clamped to half a
/// sample.
fn parabolic_offset<T: Float>(ym: T, y0: T, yp: T) -> T {
    let denom = ym - y0 - y0 + yp;
    if denom == T::zero() {
        return T::zero();
    }
    let half = lit::<T>(0.5);
    let delta = half * (ym - yp) / denom;
    num_traits::Float::max(num_traits::Float::min(delta, half), -half)
}

/// Finds reflections: one event per contiguous above-threshold region of the
/// median-prefiltered trace, sorted by delay. An all-quiet trace yields an
/// empty list.
pub fn detect_pulses<T: Float>(
    waveform: &Waveform<T>,
    cfg: &DecoderConfig<T>,
) -> Vec<DetectionEvent<T>> {
    let filtered = median3(&waveform.samples);
    let max = filtered
        .iter()
        .cloned()
        .fold(T::neg_infinity(), num_traits::Float::max);
    if !(max > T::zero()) {
        return Vec::new();
    }
    let threshold = cfg.detect_threshold * max;
    let n = filtered.len();

    let mut events = Vec::new();
    let mut i = 0;
    while i < n {
        if filtered[i] <= threshold {
            i += 1;
            continue;
        }
        let region_start = i;
        while i < n && filtered[i] > threshold {
            i += 1;
        }
        let region_end = i;

        let mut peak_idx = region_start;
        for j in region_start..region_end {
            if filtered[j] > filtered[peak_idx] {
                peak_idx = j;
            }
        }
        let peak_val = filtered[peak_idx];
        // A flat top (rectangular pulse) centers the event on the plateau.
        let mut plateau_end = peak_idx;
        while plateau_end + 1 < region_end && filtered[plateau_end + 1] >= peak_val {
            plateau_end += 1;
        }
        let peak_idx = peak_idx + (plateau_end - peak_idx) / 2;
        let floor = lit::<T>(WINDOW_FLOOR_FRACTION) * peak_val;

        // Grow the window outward until well below half maximum so both
        // crossings are bracketed; a sustained rise means a neighboring
        // pulse, where the window stops.
        let mut start = region_start;
        let mut rises = 0;
        while start > 0 {
            let candidate = filtered[start - 1];
            if candidate > filtered[start] {
                rises += 1;
                if rises > 2 {
                    break;
                }
            } else {
                rises = 0;
            }
            start -= 1;
            if start + 1 < n && filtered[start] < floor && filtered[start + 1] < floor {
                break;
            }
        }
        let mut end = region_end;
        rises = 0;
        while end < n {
            let candidate = filtered[end];
            if candidate > filtered[end - 1] {
                rises += 1;
                if rises > 2 {
                    break;
                }
            } else {
                rises = 0;
            }
            end += 1;
            if end >= 2 && filtered[end - 1] < floor && filtered[end - 2] < floor {
                break;
            }
        }

        let delta = if peak_idx > 0 && peak_idx + 1 < n {
            parabolic_offset(
                filtered[peak_idx - 1],
                filtered[peak_idx],
                filtered[peak_idx + 1],
            )
        } else {
            T::zero()
        };
        let tau = waveform.time_at(peak_idx) + delta * waveform.dt_ps;

        events.push(DetectionEvent {
            tau_ps: tau,
            fwhm_ps: T::zero(),
            amplitude: peak_val,
            window: (start, end),
        });
    }
    events
}

/// Measures the FWHM of an event by linear interpolation of the half-maximum
/// crossings on each side of the peak. Fails when a crossing is not
/// bracketed inside the window (clipped or truncated pulse).
pub fn measure_fwhm<T: Float>(waveform: &Waveform<T>, event: &DetectionEvent<T>) -> Result<T> {
    let (start, end) = event.window;
    if start >= end || end > waveform.len() {
        return Err(Error::MeasurementFailed("invalid event window".into()));
    }
    let w = &waveform.samples[start..end];
    let mut peak_idx = 0;
    for (j, &v) in w.iter().enumerate() {
        if v > w[peak_idx] {
            peak_idx = j;
        }
    }
    // Parabola-refined amplitude reduces bias on coarse grids.
    let amp = if peak_idx > 0 && peak_idx + 1 < w.len() {
        let delta = parabolic_offset(w[peak_idx - 1], w[peak_idx], w[peak_idx + 1]);
        w[peak_idx] - lit::<T>(0.25) * (w[peak_idx - 1] - w[peak_idx + 1]) * delta
    } else {
        w[peak_idx]
    };
    let half = amp / lit(2.0);

    let mut left = None;
    for j in (0..peak_idx).rev() {
        if w[j] <= half {
            let frac = (half - w[j]) / (w[j + 1] - w[j]);
            left = Some(lit::<T>(j as f64) + frac);
            break;
        }
    }
    let mut right = None;
    for j in peak_idx..w.len() - 1 {
        if w[j + 1] <= half {
            let frac = (w[j] - half) / (w[j] - w[j + 1]);
            right = Some(lit::<T>(j as f64) + frac);
            break;
        }
    }
    match (left, right) {
        (Some(l), Some(r)) => Ok((r - l) * waveform.dt_ps),
        _ => Err(Error::MeasurementFailed(
            "half-maximum crossing not bracketed in window".into(),
        )),
    }
}

/// Inverts a measured width into an encoder bandwidth using the known plant
/// dispersion at the event's own distance estimate.
pub fn infer_bandwidth<T: Float>(fwhm_ps: T, tau_ps: T, cfg: &DecoderConfig<T>) -> Result<T> {
    let distance = delay_to_distance(tau_ps, &cfg.fiber)?;
    let denom = cfg.abs_dispersion_at(distance);
    if denom == T::zero() {
        return Err(Error::UndecodableEvent(
            "zero accumulated dispersion at the event distance".into(),
        ));
    }
    Ok(fwhm_ps / denom)
}

/// Names the nearest codebook entry. Ties at the exact midpoint resolve to
/// the lower index. Estimates outside the codebook range (half a step beyond
/// either end) return no index with zero confidence.
pub fn identify<T: Float>(bandwidth_nm: T, codebook: &Codebook<T>) -> (Option<usize>, T) {
    if !codebook.in_range(bandwidth_nm) {
        return (None, T::zero());
    }
    let (index, dist) = codebook.nearest(bandwidth_nm);
    let confidence = T::one() - lit::<T>(2.0) * dist / codebook.delta_b_nm;
    let confidence =
        num_traits::Float::max(num_traits::Float::min(confidence, T::one()), T::zero());
    (Some(index), confidence)
}

/// Outcome of greedy overlap resolution on one anomalous window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapResolution<T> {
    pub events: Vec<DetectionEvent<T>>,
    /// Energy left after the fitted components were removed, as a fraction
    /// of the original window energy.
    pub residual_fraction: T,
    /// True when the residual floor was reached; partial results otherwise.
    pub converged: bool,
    /// True when a fitted amplitude exceeds 1.5x the singleton reference:
    /// fully coincident pulses cannot be separated and are flagged.
    pub ambiguous: bool,
}

/// Greedy matching pursuit over codebook pulse templates: iteratively fits
/// and subtracts the best (delay, code, amplitude) component, least-squares
/// in amplitude, until the residual energy drops below 5 % of the window
/// energy or eight components were extracted.
pub fn resolve_overlap<T: Float>(
    waveform: &Waveform<T>,
    window: (usize, usize),
    cfg: &DecoderConfig<T>,
) -> OverlapResolution<T> {
    let (start, end) = (window.0, window.1.min(waveform.len()));
    let mut residual: Vec<T> = waveform.samples[start..end].to_vec();
    let n = residual.len();
    let energy0: T = residual.iter().map(|&x| x * x).sum();
    let dt = waveform.dt_ps;
    let floor_amp = cfg.detect_threshold
        * residual
            .iter()
            .cloned()
            .fold(T::zero(), num_traits::Float::max);

    let mut events: Vec<DetectionEvent<T>> = Vec::new();
    let mut residual_fraction = T::one();
    let mut converged = energy0 == T::zero();

    'outer: for _ in 0..OVERLAP_MAX_ITERATIONS {
        if converged {
            break;
        }
        // Best (code, position) by the energy a least-squares amplitude
        // removes.
        let mut best: Option<(usize, usize, T)> = None; // (code, pos, score)
        for code in 1..=cfg.codebook.n_codes {
            let b = cfg.codebook.bandwidth(code).unwrap();
            for pos in 0..n {
                let fwhm = match template_width(waveform, start + pos, b, cfg) {
                    Some(f) if f > dt => f,
                    _ => continue,
                };
                let (num, den) = template_products(&residual, lit(pos as f64), fwhm, dt);
                if den <= T::zero() || num <= T::zero() {
                    continue;
                }
                let score = num * num / den;
                if best.map_or(true, |(_, _, s)| score > s) {
                    best = Some((code, pos, score));
                }
            }
        }
        let Some((code, pos, _)) = best else {
            break 'outer;
        };
        let b = cfg.codebook.bandwidth(code).unwrap();
        let fwhm = template_width(waveform, start + pos, b, cfg).unwrap();

        // Sub-sample delay refinement on the correlation score.
        let score_at = |p: T| {
            let (num, den) = template_products(&residual, p, fwhm, dt);
            if den > T::zero() {
                num * num / den
            } else {
                T::zero()
            }
        };
        let p0 = lit::<T>(pos as f64);
        let delta = if pos > 0 && pos + 1 < n {
            parabolic_offset(
                score_at(p0 - T::one()),
                score_at(p0),
                score_at(p0 + T::one()),
            )
        } else {
            T::zero()
        };
        let center = p0 + delta;
        let (num, den) = template_products(&residual, center, fwhm, dt);
        if den <= T::zero() || num <= T::zero() {
            break;
        }
        let amp = num / den;
        if amp < floor_amp {
            break;
        }
        subtract_template(&mut residual, center, fwhm, dt, amp);
        let tau = waveform.time_at(start) + center * dt;

        // A coincident repeat of an existing component merges into it.
        if let Some(prev) = events.iter_mut().find(|e| {
            num_traits::Float::abs(e.tau_ps - tau) < e.fwhm_ps / lit(4.0)
                && num_traits::Float::abs(e.fwhm_ps - fwhm) < e.fwhm_ps / lit(10.0)
        }) {
            prev.amplitude += amp;
        } else {
            events.push(DetectionEvent {
                tau_ps: tau,
                fwhm_ps: fwhm,
                amplitude: amp,
                window,
            });
        }

        let energy: T = residual.iter().map(|&x| x * x).sum();
        residual_fraction = energy / energy0;
        if residual_fraction < lit(OVERLAP_RESIDUAL_FLOOR) {
            converged = true;
        }
    }

    events.sort_by(|a, b| a.tau_ps.partial_cmp(&b.tau_ps).unwrap());
    let ambiguous = match cfg.reference_amplitude {
        Some(reference) => events
            .iter()
            .any(|e| e.amplitude > lit::<T>(AMBIGUOUS_AMPLITUDE_RATIO) * reference),
        None => false,
    };
    OverlapResolution {
        events,
        residual_fraction,
        converged,
        ambiguous,
    }
}

/// Expected width of a codebook pulse template centered at a trace index.
fn template_width<T: Float>(
    waveform: &Waveform<T>,
    index: usize,
    bandwidth_nm: T,
    cfg: &DecoderConfig<T>,
) -> Option<T> {
    let tau = waveform.time_at(index);
    let distance = delay_to_distance(tau, &cfg.fiber).ok()?;
    Some(cfg.abs_dispersion_at(distance) * bandwidth_nm)
}

/// Gaussian template correlations `(sum r g, sum g g)` around a fractional
/// sample position.
fn template_products<T: Float>(residual: &[T], center: T, fwhm_ps: T, dt_ps: T) -> (T, T) {
    let fwhm_samples = fwhm_ps / dt_ps;
    let a = lit::<T>(4.0 * std::f64::consts::LN_2) / (fwhm_samples * fwhm_samples);
    let half_support = (lit::<T>(2.0) * fwhm_samples).ceil().to_isize().unwrap_or(0);
    let c = center.round().to_isize().unwrap_or(0);
    let lo = (c - half_support).max(0) as usize;
    let hi = ((c + half_support) as usize).min(residual.len().saturating_sub(1));
    let mut num = T::zero();
    let mut den = T::zero();
    for (j, &r) in residual.iter().enumerate().take(hi + 1).skip(lo) {
        let d = lit::<T>(j as f64) - center;
        let g = (-a * d * d).exp();
        num += r * g;
        den += g * g;
    }
    (num, den)
}

fn subtract_template<T: Float>(residual: &mut [T], center: T, fwhm_ps: T, dt_ps: T, amp: T) {
    let fwhm_samples = fwhm_ps / dt_ps;
    let a = lit::<T>(4.0 * std::f64::consts::LN_2) / (fwhm_samples * fwhm_samples);
    let half_support = (lit::<T>(2.0) * fwhm_samples).ceil().to_isize().unwrap_or(0);
    let c = center.round().to_isize().unwrap_or(0);
    let lo = (c - half_support).max(0) as usize;
    let hi = ((c + half_support) as usize).min(residual.len().saturating_sub(1));
    for (j, r) in residual.iter_mut().enumerate().take(hi + 1).skip(lo) {
        let d = lit::<T>(j as f64) - center;
        *r -= amp * (-a * d * d).exp();
    }
}

/// Health classification of a decoded or registered branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchStatus {
    Healthy,
    Degraded,
    Lost,
    Unknown,
}

/// One decoded user: the resolved interpretation of a trace event, or a
/// registered branch that produced no reflection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodedUser<T> {
    pub branch_id: Option<u32>,
    pub code_index: Option<usize>,
    pub distance_m: T,
    pub bandwidth_nm: T,
    pub confidence: T,
    pub amplitude: T,
    pub status: BranchStatus,
}

/// Registered pairing of a branch with its code and nominal distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry<T> {
    pub branch_id: u32,
    pub code_index: usize,
    pub expected_distance_m: T,
}

/// Per-branch health derived from the decoded users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchHealth<T> {
    pub branch_id: u32,
    pub code_index: usize,
    pub status: BranchStatus,
    pub expected_distance_m: T,
    /// Where the branch was actually seen; for a lost branch the expected
    /// distance doubles as the localization hint.
    pub observed_distance_m: Option<T>,
    pub observed_amplitude: Option<T>,
}

/// Matches decoded users against the registry: a registered code seen at its
/// expected distance (within tolerance) is healthy, or degraded when its
/// amplitude falls below the configured fraction of the reference; an absent
/// code is lost. Registry codes must be unique.
pub fn diagnose<T: Float>(
    users: &[DecodedUser<T>],
    registry: &[RegistryEntry<T>],
    cfg: &DecoderConfig<T>,
) -> Result<Vec<BranchHealth<T>>> {
    let mut codes = std::collections::BTreeSet::new();
    for entry in registry {
        if !codes.insert(entry.code_index) {
            return Err(Error::InvalidArgument(format!(
                "registry assigns code {} to more than one branch",
                entry.code_index
            )));
        }
    }

    let reference = cfg.reference_amplitude.unwrap_or_else(|| {
        registry
            .iter()
            .filter_map(|entry| best_match(users, entry, cfg))
            .map(|u| u.amplitude)
            .fold(T::zero(), num_traits::Float::max)
    });

    Ok(registry
        .iter()
        .map(|entry| match best_match(users, entry, cfg) {
            Some(user) => {
                let degraded =
                    reference > T::zero() && user.amplitude < cfg.degradation_fraction * reference;
                BranchHealth {
                    branch_id: entry.branch_id,
                    code_index: entry.code_index,
                    status: if degraded {
                        BranchStatus::Degraded
                    } else {
                        BranchStatus::Healthy
                    },
                    expected_distance_m: entry.expected_distance_m,
                    observed_distance_m: Some(user.distance_m),
                    observed_amplitude: Some(user.amplitude),
                }
            }
            None => BranchHealth {
                branch_id: entry.branch_id,
                code_index: entry.code_index,
                status: BranchStatus::Lost,
                expected_distance_m: entry.expected_distance_m,
                observed_distance_m: None,
                observed_amplitude: None,
            },
        })
        .collect())
}

fn best_match<'a, T: Float>(
    users: &'a [DecodedUser<T>],
    entry: &RegistryEntry<T>,
    cfg: &DecoderConfig<T>,
) -> Option<&'a DecodedUser<T>> {
    users
        .iter()
        .filter(|u| u.code_index == Some(entry.code_index))
        .filter(|u| {
            num_traits::Float::abs(u.distance_m - entry.expected_distance_m)
                <= cfg.distance_tolerance_m
        })
        .max_by(|a, b| a.amplitude.partial_cmp(&b.amplitude).unwrap())
}

/// Full decode report: raw events, their user interpretations, and the
/// registry-driven branch health summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeReport<T> {
    pub events: Vec<DetectionEvent<T>>,
    pub users: Vec<DecodedUser<T>>,
    pub branches: Vec<BranchHealth<T>>,
}

impl<T: Float> DecodeReport<T> {
    pub fn any_lost(&self) -> bool {
        self.branches
            .iter()
            .any(|b| b.status == BranchStatus::Lost)
    }
}

/// Runs the whole recognition chain on a trace: detect, measure, invert,
/// identify, resolve anomalous windows, and classify against the registry.
pub fn decode_trace<T: Float>(
    waveform: &Waveform<T>,
    cfg: &DecoderConfig<T>,
    registry: &[RegistryEntry<T>],
) -> Result<DecodeReport<T>> {
    let detected = detect_pulses(waveform, cfg);

    // Singleton amplitude reference: configured, or the median event
    // amplitude.
    let reference = cfg.reference_amplitude.or_else(|| {
        if detected.is_empty() {
            None
        } else {
            let mut amps: Vec<T> = detected.iter().map(|e| e.amplitude).collect();
            amps.sort_by(|a, b| a.partial_cmp(b).unwrap());
            Some(amps[amps.len() / 2])
        }
    });
    let resolve_cfg = DecoderConfig {
        reference_amplitude: reference,
        ..cfg.clone()
    };

    let mut events = Vec::new();
    let mut users = Vec::new();
    for event in detected {
        let measured = measure_fwhm(waveform, &event);
        let interpreted = measured.ok().and_then(|fwhm| {
            let bandwidth = infer_bandwidth(fwhm, event.tau_ps, cfg).ok()?;
            let (code, confidence) = identify(bandwidth, &cfg.codebook);
            Some((fwhm, bandwidth, code, confidence))
        });

        let anomalous = match &interpreted {
            None => true,
            Some((_, _, code, _)) => {
                code.is_none()
                    || is_multimodal(waveform, event.window)
                    || reference.map_or(false, |r| {
                        event.amplitude > lit::<T>(AMBIGUOUS_AMPLITUDE_RATIO) * r
                    })
            }
        };

        if !anomalous {
            let (fwhm, bandwidth, code, confidence) = interpreted.unwrap();
            let distance = delay_to_distance(event.tau_ps, &cfg.fiber)?;
            events.push(DetectionEvent {
                fwhm_ps: fwhm,
                ..event
            });
            users.push(DecodedUser {
                branch_id: None,
                code_index: code,
                distance_m: distance,
                bandwidth_nm: bandwidth,
                confidence,
                amplitude: event.amplitude,
                status: BranchStatus::Unknown,
            });
        } else {
            let resolution = resolve_overlap(waveform, event.window, &resolve_cfg);
            // Components from a partial or ambiguous resolution carry at
            // most half confidence.
            let cap = if resolution.converged && !resolution.ambiguous {
                T::one()
            } else {
                lit(0.5)
            };
            for fitted in resolution.events {
                let bandwidth = infer_bandwidth(fitted.fwhm_ps, fitted.tau_ps, cfg)?;
                let (code, confidence) = identify(bandwidth, &cfg.codebook);
                let distance = delay_to_distance(fitted.tau_ps, &cfg.fiber)?;
                events.push(fitted);
                users.push(DecodedUser {
                    branch_id: None,
                    code_index: code,
                    distance_m: distance,
                    bandwidth_nm: bandwidth,
                    confidence: num_traits::Float::min(confidence, cap),
                    amplitude: fitted.amplitude,
                    status: BranchStatus::Unknown,
                });
            }
        }
    }

    let branches = diagnose(&users, registry, cfg)?;

    // Stamp user statuses from the branch summary.
    for user in users.iter_mut() {
        let matched = branches.iter().find(|b| {
            Some(b.code_index) == user.code_index
                && num_traits::Float::abs(user.distance_m - b.expected_distance_m)
                    <= cfg.distance_tolerance_m
        });
        if let Some(b) = matched {
            user.branch_id = Some(b.branch_id);
            user.status = b.status;
        }
    }
    // Registered branches that produced nothing still appear as users, with
    // the expected distance as the localization hint.
    for b in &branches {
        if b.status == BranchStatus::Lost {
            users.push(DecodedUser {
                branch_id: Some(b.branch_id),
                code_index: Some(b.code_index),
                distance_m: b.expected_distance_m,
                bandwidth_nm: cfg.codebook.bandwidth(b.code_index).unwrap_or(T::zero()),
                confidence: T::zero(),
                amplitude: T::zero(),
                status: BranchStatus::Lost,
            });
        }
    }

    Ok(DecodeReport {
        events,
        users,
        branches,
    })
}

/// More than one dominant local maximum in the window.
fn is_multimodal<T: Float>(waveform: &Waveform<T>, window: (usize, usize)) -> bool {
    let (start, end) = (window.0, window.1.min(waveform.len()));
    if end - start < 3 {
        return false;
    }
    let w = median3(&waveform.samples[start..end]);
    let peak = w.iter().cloned().fold(T::zero(), num_traits::Float::max);
    let gate = peak / lit(2.0);
    let mut maxima: Vec<(usize, T)> = Vec::new();
    for j in 1..w.len() - 1 {
        if w[j] >= gate && w[j] >= w[j - 1] && w[j] > w[j + 1] {
            maxima.push((j, w[j]));
        }
    }
    // Count maxima separated by a genuine valley.
    let mut count = 0;
    let mut last: Option<(usize, T)> = None;
    for (j, v) in maxima {
        match last {
            None => {
                count = 1;
                last = Some((j, v));
            }
            Some((pj, pv)) => {
                let valley = w[pj..=j]
                    .iter()
                    .cloned()
                    .fold(T::infinity(), num_traits::Float::min);
                let smaller = num_traits::Float::min(pv, v);
                if valley < lit::<T>(0.7) * smaller {
                    count += 1;
                    last = Some((j, v));
                }
            }
        }
    }
    count > 1
}
