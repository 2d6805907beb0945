//! Parameters, index windows and the laws of the building-block variables,
//! together with exact finite-`n` second moments.

mod laws;
mod moments;
mod params;

pub use laws::{
    block_aperiodic_deficit, block_char, block_char_deficit, block_pmf, block_pmf_with_alphas,
    block_product_enumeration, block_second_moment, block_table, difference_table, fbar_pmf,
    three_point_table, y_i_blocks, y_i_pmf, y_law_for_blocks, BlockPmf,
};
pub use moments::{
    dyadic_block_ratio, geometric_tail_check, second_moments, small_block_ratio, tail_bound,
    trapezoid_sum_sq, truncation_level, var_un, window_coeffs, GeometricCheck, SecondMoments,
    WindowCoeffs,
};
pub use params::{
    exact_log2, index_i, index_j, k_log_k, lt_pow2, p_k, params, AlphaSq, ConstructionParams,
    IndexWindow, MAX_K,
};
