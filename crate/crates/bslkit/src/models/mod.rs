//! The three simulator models used throughout the experiments.

pub mod ma2;
pub mod stable;
pub mod toad;
pub mod toy;

pub use ma2::Ma2Model;
pub use stable::levy_stable_sample;
pub use toad::ToadModel;
pub use toy::ToyModel;
