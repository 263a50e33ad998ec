//! FBG encoder reflectivity models and the bandwidth codebook.
//!
//! Every customer branch terminates in a single grating written at the shared
//! center wavelength; its reflection bandwidth is the branch signature. The
//! codebook assigns bandwidths on a uniform ladder `B_i = B_1 + (i - 1) dB`
//! whose step is fixed by the decoder's temporal resolution and the minimum
//! accumulated dispersion in the plant: `dB = dT / D_min`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::FiberParams;
use crate::profiles;
use crate::scalar::{lit, Float};
use crate::spectrum::SpectralGrid;

/// Reflectivity line shape of a grating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReflectivityProfile {
    /// Apodized grating: smooth Gaussian response. The default.
    Gaussian,
    SuperGaussian { order: u32 },
    /// Unapodized grating: main lobe plus sinc^2 sidelobes. Shipped to
    /// exercise the width estimator against sidelobes.
    UniformSinc,
}

/// Single-grating encoder at the end of one branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbgEncoder<T> {
    pub id: u32,
    pub center_wavelength_nm: T,
    /// FWHM of the reflectivity spectrum, nm. The branch signature.
    pub bandwidth_nm: T,
    /// Peak reflectivity in (0, 1].
    pub peak_reflectivity: T,
    pub profile: ReflectivityProfile,
}

impl<T: Float> FbgEncoder<T> {
    pub fn new(
        id: u32,
        center_wavelength_nm: T,
        bandwidth_nm: T,
        peak_reflectivity: T,
        profile: ReflectivityProfile,
    ) -> Result<Self> {
        if bandwidth_nm <= T::zero() || !bandwidth_nm.is_finite() {
            return Err(Error::InvalidArgument(
                "encoder bandwidth must be positive".into(),
            ));
        }
        if peak_reflectivity <= T::zero() || peak_reflectivity > T::one() {
            return Err(Error::InvalidArgument(
                "peak reflectivity must lie in (0, 1]".into(),
            ));
        }
        if let ReflectivityProfile::SuperGaussian { order } = profile {
            if order < 1 {
                return Err(Error::InvalidArgument(
                    "super-Gaussian order must be >= 1".into(),
                ));
            }
        }
        Ok(Self {
            id,
            center_wavelength_nm,
            bandwidth_nm,
            peak_reflectivity,
            profile,
        })
    }

    /// Unit-peak reflectivity shape at a wavelength; symmetric about the
    /// center for every shipped profile.
    pub fn normalized_reflectivity_at(&self, wavelength_nm: T) -> T {
        let u = (wavelength_nm - self.center_wavelength_nm) / self.bandwidth_nm;
        match self.profile {
            ReflectivityProfile::Gaussian => profiles::gaussian_intensity(u),
            ReflectivityProfile::SuperGaussian { order } => {
                profiles::super_gaussian_intensity(u, order)
            }
            ReflectivityProfile::UniformSinc => profiles::sinc_sq_intensity(u),
        }
    }

    /// Absolute reflectivity at a wavelength, in `[0, peak_reflectivity]`.
    pub fn reflectivity_at(&self, wavelength_nm: T) -> T {
        self.peak_reflectivity * self.normalized_reflectivity_at(wavelength_nm)
    }
}

/// Samples an encoder's reflectivity on a grid. The grid must cover the
/// encoder center +- 4 bandwidths so both tails are represented.
pub fn fbg_reflectivity<T: Float>(
    encoder: &FbgEncoder<T>,
    grid: &SpectralGrid<T>,
) -> Result<Vec<T>> {
    let four_b = lit::<T>(4.0) * encoder.bandwidth_nm;
    let lo = encoder.center_wavelength_nm - four_b;
    let hi = encoder.center_wavelength_nm + four_b;
    if !grid.covers_wavelength(lo, hi) {
        return Err(Error::GridSpan(format!(
            "grid [{}, {}] nm does not cover encoder support [{}, {}] nm",
            grid.min_wavelength_nm(),
            grid.max_wavelength_nm(),
            lo,
            hi
        )));
    }
    Ok((0..grid.n_points())
        .map(|k| encoder.reflectivity_at(grid.wavelength_nm(k)))
        .collect())
}

/// The ordered bandwidth family assigned to the network's branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Codebook<T> {
    /// Minimum bandwidth `B_1`, nm.
    pub b1_nm: T,
    /// Bandwidth step between adjacent codes, nm.
    pub delta_b_nm: T,
    /// Number of codes.
    pub n_codes: usize,
}

impl<T: Float> Codebook<T> {
    pub fn new(b1_nm: T, delta_b_nm: T, n_codes: usize) -> Result<Self> {
        if b1_nm <= T::zero() || delta_b_nm <= T::zero() {
            return Err(Error::InvalidArgument(
                "codebook bandwidths must be positive".into(),
            ));
        }
        if n_codes == 0 {
            return Err(Error::InvalidArgument(
                "codebook must hold at least one code".into(),
            ));
        }
        Ok(Self {
            b1_nm,
            delta_b_nm,
            n_codes,
        })
    }

    /// Bandwidth of code `i` (1-based): `B_1 + (i - 1) dB`.
    pub fn bandwidth(&self, index: usize) -> Option<T> {
        if index == 0 || index > self.n_codes {
            return None;
        }
        Some(self.b1_nm + lit::<T>((index - 1) as f64) * self.delta_b_nm)
    }

    pub fn max_bandwidth(&self) -> T {
        self.bandwidth(self.n_codes).unwrap()
    }

    pub fn bandwidths(&self) -> impl Iterator<Item = T> + '_ {
        (1..=self.n_codes).map(|i| self.bandwidth(i).unwrap())
    }

    /// Code whose bandwidth is nearest to the estimate; ties resolve to the
    /// lower index. Returns `(index, |distance|)`.
    pub fn nearest(&self, bandwidth_nm: T) -> (usize, T) {
        let mut best = (1usize, num_traits::Float::abs(bandwidth_nm - self.b1_nm));
        for i in 2..=self.n_codes {
            let d = num_traits::Float::abs(bandwidth_nm - self.bandwidth(i).unwrap());
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// True when the estimate falls inside `[B_1 - dB/2, B_N + dB/2]`.
    pub fn in_range(&self, bandwidth_nm: T) -> bool {
        let half = self.delta_b_nm / lit(2.0);
        bandwidth_nm >= self.b1_nm - half && bandwidth_nm <= self.max_bandwidth() + half
    }
}

/// Designs a codebook from the decoder's pulse-width resolution `dT` and the
/// minimum accumulated dispersion `D_min` in the plant: `dB = dT / D_min`.
pub fn design_codebook<T: Float>(
    n_codes: usize,
    b1_nm: T,
    delta_t_ps: T,
    d_min_ps_nm: T,
) -> Result<Codebook<T>> {
    if delta_t_ps <= T::zero() || d_min_ps_nm <= T::zero() {
        return Err(Error::InvalidArgument(
            "resolution and minimum dispersion must be positive".into(),
        ));
    }
    Codebook::new(b1_nm, delta_t_ps / d_min_ps_nm, n_codes)
}

/// Minimum branch-length difference guaranteeing that two adjacent
/// reflections never overlap in the trace: `v_g T_max / 2`.
pub fn min_separation_distance<T: Float>(max_width_ps: T, fiber: &FiberParams<T>) -> T {
    fiber.group_velocity_m_per_ps() * max_width_ps / lit(2.0)
}
