//! Total variation machinery and the component-wise mixture distance.

mod ball;
mod kappa;
mod tv;

pub use ball::{ball_members, linf};
pub use kappa::{bottleneck_assignment, kappa_costs, kappa_mix, KappaMixResult};
pub(crate) use tv::tv_normal_1d;
pub use tv::{
    hoeffding_half_width, std_normal_cdf, tv_bounds_gaussian, tv_gaussian_1d, tv_mc_estimate, tv_quadrature_1d,
    TvEstimate, TvOracle, DEFAULT_CONF, LOWER_BOUND_REGIME, QUAD_SIGMAS,
};
