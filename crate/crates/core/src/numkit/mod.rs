//! Minimal dense-network numerics shared by every other module: forward and
//! backward passes, simplex/softmax machinery, diagonal Gaussians, and the
//! deterministic seeded generator.

pub mod gaussian;
pub mod net;
pub mod rng;
pub mod simplex;

pub use gaussian::{entropy_from_log_std, DiagGaussian, HALF_LN_2PIE};
pub use net::{Activation, Adam, DenseNet, ForwardTrace, NetCheckpoint, NetGrads, NET_FORMAT_VERSION};
pub use rng::SeededRng;
pub use simplex::{
    entropy_categorical, kl_categorical, kl_softmax_grad, neg_entropy_softmax_grad, softmax,
    SimplexVector, KL_FLOOR, SIMPLEX_TOL,
};
