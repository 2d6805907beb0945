//! Characteristic-function analysis of `𝖴_n`: the product formula, Fourier
//! inversion, Gaussian comparison and numerical checks of the domination
//! lemmas, the Lindeberg functional and noise stability.

mod lemmas;
mod lindeberg;
mod noise;
mod un;

pub use lemmas::{
    away_grid, check_lemma_away, check_lemma_near, log_aperiodic_bound, log_grid, near_zero_l, trig_step_holds,
    upsilon_moments, UpsilonMoments, INTEGER_GRID_LIMIT, POINTS_PER_DECADE,
};
pub use lindeberg::{lindeberg, lindeberg_detailed, lindeberg_groups, LindebergGroup};
pub use noise::{gaussian_kernel, noise_cutoff, noise_stability, NoiseReport, NoiseSpec};
pub use un::{
    chernoff_tail, effective_support_bound, full_support_bound, llt_sup_error, log_mgf, log_phi_n, phi_n,
    sigma_sq, un_law, un_law_capped, un_pmf, un_pmf_direct, un_pmf_inversion, variance_ratio, Reference, UnLaw,
    UnPath, VarianceRatio, DIRECT_SUPPORT_LIMIT, TAIL_TARGET,
};
