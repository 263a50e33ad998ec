//! Floating-point abstraction: the simulation core is generic over `f32`/`f64`.

/// Scalar type used throughout the core math.
///
/// The FFT bound is required by the spectral transforms; everything else is
/// ordinary float arithmetic. Concrete aliases for `f64` live at the crate
/// root.
pub trait Float:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + rustfft::FftNum
    + std::iter::Sum
    + Default
    + std::fmt::Display
{
}

impl Float for f32 {}
impl Float for f64 {}

/// Convert an `f64` literal into the working scalar type.
#[inline]
pub fn lit<T: Float>(x: f64) -> T {
    T::from_f64(x).expect("literal not representable in scalar type")
}
