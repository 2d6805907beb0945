//! Finitely supported laws on the integer lattice: exact and float
//! convolution, characteristic functions, Fourier inversion, and
//! Gaussian comparison.

mod ops;
mod pmf;
mod sparse;

pub use ops::{
    char_fn, convolve, convolve_capped, convolve_power, convolve_power_capped, discrete_gaussian,
    invert_to_pmf, invert_to_pmf_capped, sup_gaussian_distance, sup_gaussian_distance_detailed,
    CharGrid, GaussianRef, Inversion, SupDistance, CLIP_THRESHOLD, DEFAULT_SUPPORT_CAP,
};
pub use pmf::{parse_rational, LatticePmf, Masses, Mode, FLOAT_MASS_TOLERANCE};
pub use sparse::SparseLaw;
