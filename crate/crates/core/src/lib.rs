//! Pricing games between two ride-hailing platforms.
//!
//! Each platform is a two-station queue: waiting drivers and drivers on a ride.
//! Passengers split between platforms according to a Wardrop equilibrium on a
//! quality-of-service metric, and platforms compete on price.
//!
//! Modules, bottom up:
//! - [`sensitivity`]: the price sensitivity function `f` and its extended inverse.
//! - [`queueing`]: product-form stationary quantities of one platform.
//! - [`wardrop`]: passenger splits and payoffs at the split.
//! - [`equilibria`]: monopoly and duopoly equilibria plus grid verifiers.
//! - [`dynamics`]: best responses and alternating best-response trajectories.
//! - [`simulate`]: event-driven simulation of one platform and a coupled pair.

pub mod dynamics;
pub mod equilibria;
mod error;
pub mod numeric;
pub mod queueing;
pub mod sensitivity;
pub mod simulate;
pub mod wardrop;

pub use error::{Error, Result};
pub use queueing::MarketParams;
pub use sensitivity::{Family, PriceModel};
pub use wardrop::{QosMetric, WardropSplit};
