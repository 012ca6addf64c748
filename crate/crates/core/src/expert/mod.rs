//! Classical controllers: the dynamic window approach and pure pursuit.

mod dwa;
mod pursuit;

pub use dwa::{dwa_control, window_samples, DwaConfig, EmptyWindow};
pub use pursuit::{carrot, pure_pursuit, PursuitCommand};
