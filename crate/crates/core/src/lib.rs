//! Derivative-free training of neural networks by weight perturbation.
//!
//! The optimizers perturb every parameter at once with Gaussian noise, use
//! the resulting change in loss (the regret, a reward-prediction error) as a
//! single global learning signal, and adapt the learning rate from a moving
//! average of that signal (the Dopamine-1 and Dopamine-2 rules). For
//! recurrent networks the spectral radius of the recurrent matrix can be
//! reset after updates (Spectral WP).
//!
//! Modules:
//! - [`nn`]: parameter layouts, MLP / RNN forward passes, heads and losses
//! - [`optim`]: perturbation sampling, regret, WP, Spectral WP, Dopamine-1/2
//! - [`grad`]: backprop / BPTT with SGD and Adam, the gradient baselines
//! - [`data`]: Lorenz and Rössler trajectories, look-back windows, XOR
//! - [`analysis`]: loss landscapes, spectral radius, run statistics, timing
//! - [`experiment`]: configs, presets, the multi-seed runner and comparisons

pub mod analysis;
pub mod data;
pub mod error;
pub mod experiment;
pub mod grad;
pub mod matrix;
pub mod nn;
pub mod optim;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use matrix::{Param, ParamMatrix, ParamRole, ParamSet};
