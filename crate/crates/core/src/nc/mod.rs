//! Matrix algebras with normalized trace, trace-preserving conditional
//! expectations, column Hardy/BMO norms and column atomic blocks.

pub mod algebra;
mod blocks;
mod filtration;
mod norms;

pub use algebra::{
    eigen_clusters, op_serde, projection_defect, psd_sqrt, schatten_norm, spectral_proj_interval,
    tau, Op, TracialAlgebra,
};
pub use blocks::{
    decompose_delta_projection, nc_duality_bound_check, nc_duality_bound_check_p2, nc_pairing,
    truncate_block, validate_nc_block, validate_nc_block_scaled, NCBlock, NCTerm, Truncation,
};
pub use filtration::{m2chain, NCFiltration, NCLevel};
pub use norms::{
    col_big_bmo_norm, col_big_h1_norm, col_bmo_norm, col_h1_norm, nc_diag_norm, nc_max_diff,
    row_big_h1_norm, row_bmo_norm,
};
