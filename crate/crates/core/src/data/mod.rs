//! Dataset generators: chaotic trajectories, forecasting windows and XOR.

mod attractor;
mod windows;
mod xor;

pub use attractor::{integrate, lorenz_trajectory, rossler_trajectory, Integrator, State, System, Trajectory};
pub use windows::{make_windows, Normalization, WindowedDataset};
pub use xor::{xor_dataset, XOR_POINTS};
