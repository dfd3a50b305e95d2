//! Closed-form predictions: semiclassical squeezing dynamics, homodyne
//! readout signal/noise, temporal-mode covariances, and the special
//! functions they need.

pub mod quad;
pub mod readout;
pub mod semiclassical;
pub mod special;
pub mod temporal;
