//! Real-time learning of monopoly reserve prices in repeated lazy
//! second-price auctions.
//!
//! The learners run projected online gradient ascent on a convolution-smoothed
//! revenue: each update is O(1) in time and memory. ERM baselines, a
//! piecewise-stationary bid-stream simulator and the quadrature oracles used
//! to check the smoothing bounds are included.

pub mod checks;
pub mod distributions;
pub mod error;
pub mod kernels;
pub mod learners;
pub mod quadrature;
pub mod search;
pub mod simulator;
pub mod surrogate;

pub use distributions::{BidDistribution, Family, MonopolyPrice, ProblemConstants};
pub use error::{Error, Result};
pub use kernels::{GaussianKernel, KernelSchedule, SmoothingKernel};
pub use learners::{ConvOga, DiscreteErm, Erm, GridPolicy, Interval, Learner, LearnerSpec, ReserveLearner, StepSchedule, VConvOga};
pub use simulator::{Experiment, Phase, RecordSchedule, SeedRun, StreamSpec, TrajectoryRecord};
