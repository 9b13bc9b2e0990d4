//! Statistics over replica ensembles.

pub mod blocking;
pub mod covariance;
pub mod density;
pub mod gap;
pub mod maxscan;
pub mod sample;
pub mod stats;
pub mod tail;

pub use sample::SampleSet;
