//! Geometry of policies in w-l space: the value/cost mapping, enclosing
//! triangles, worst-case uncertainty curves and the minmax gain update.

mod conic;
pub mod sampling;
mod triangle;
mod uncertainty;
mod update;
mod wl;

pub use conic::{intersect_conics, Conic};
pub use triangle::{
    initial_triangle, reduce_triangle, reduce_triangle_with, EnclosingTriangle, GainInterval,
    ValueMismatch, DEGENERATE_TOL, VALIDATE_TOL,
};
pub use uncertainty::{
    left_uncertainty_max, right_uncertainty_expanded, right_uncertainty_max, uncertainty_conics,
};
pub use update::{
    alpha_gain_update, bisect_gain, optimal_gain_update, optimal_gain_update_route, UpdateRoute,
    BISECTION_STEPS,
};
pub use wl::{
    map_to_wl, nudged_level_set, nudged_value_at, pencil_vertex, slope_projection, wl_inverse,
    Line, WlPoint,
};
