//! Exact laws and integrals: the pmf of `J(n)` from the ζ-integral, the law
//! of `J(n) P0(n)`, the area `b0`, region means and the Dickman function.

pub mod cache;
pub mod integrals;
pub mod pmf;
pub mod quadrature;
pub mod special;

pub use cache::{PmfCache, PmfKey};
pub use integrals::{b0_integral, b0_lower_piece_signed, dickman_rho, region_mean, B0Report, Dickman};
pub use pmf::{
    dtv_j_harmonic, dtv_jp0_uniform, dtv_to_uniform, g_fun, gh_ladder_constant, h_fun, harmonic_ratio,
    pmf_j, pmf_j_detailed, pmf_jp0, pmf_jp0_from_j, DtvForms, Pmf, PmfJInfo, UniformizationLaw, MAX_EXACT_N,
};
pub use quadrature::{QuadResult, QuadratureMethod, QuadratureSpec};
pub use special::{ein, exp_integral_e1, zeta_near_one, zeta_prime_near_one};
