//! Kolmogorov–Arnold networks: every edge carries `w_b·silu(x) + w_s·spline(x)`
//! with a cubic B-spline on a fixed uniform grid.

mod layer;
mod network;
mod spline;

pub use layer::{kan_layer_backward, kan_layer_forward, KanLayer, KanLayerCache, KanLayerGrads};
pub use network::{build_kan, KanCache, KanNetwork};
pub use spline::{bspline_basis, SplineGrid};
