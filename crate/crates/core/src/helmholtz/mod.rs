//! Temporal Fourier transform, Lippmann-Schwinger solver and low-frequency asymptotics.

mod ft;
mod ls;
mod radiation;

pub use ft::{
    half_tukey, temporal_ft, temporal_ft_with, time_weights, FreqTrace, FtOptions, TimeQuadrature, ENERGY_STOP,
    TAPER_FRACTION,
};
pub use ls::{leading_order_remainder, low_freq_leading, ls_freq_trace, ls_solve, ls_solve_with, LsOptions, LsSolution};
pub use radiation::{radiation_check, radiation_diagnostic};
