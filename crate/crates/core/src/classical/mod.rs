//! The statistical manifold of faithful distributions on a finite sample space.

mod connection;
mod distribution;
mod family;
mod tangent;

pub use connection::{
    christoffel, geodesic, skewness_tensor, Christoffel, GeodesicOptions, GeodesicPath, GeodesicSample, Tensor3,
};
pub use distribution::{
    alpha_embed, bhattacharyya_angle, entropy, hellinger_distance, kl_divergence, FiniteDistribution, FAITHFUL_FLOOR,
    SUM_TOL,
};
pub use family::{CanonicalPoint, ExponentialFamily, LegendreCheck, GRAM_TOL};
pub use tangent::{fisher_metric, parallel_transport, tangent_convert, ClassicalTangent, TangentRep, Transport};
