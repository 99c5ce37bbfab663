//! Lorenz and Rössler trajectories.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type State = [f64; 3];

/// A three-variable autonomous system and its constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum System {
    /// `x' = -(y + z)`, `y' = x + a y`, `z' = b + x z - c z`.
    Rossler { a: f64, b: f64, c: f64 },
    /// Lorenz-63: `x' = sigma (y - x)`, `y' = x (rho - z) - y`, `z' = x y - beta z`.
    Lorenz { sigma: f64, rho: f64, beta: f64 },
    /// A variant with `x' = sigma (x - y)`, `y' = rho x - x z`,
    /// `z' = beta y - b z`. It has no damping on `y` and does not settle on
    /// the butterfly; kept only for inspection.
    LorenzVariant { sigma: f64, rho: f64, beta: f64, b: f64 },
}

impl System {
    pub const fn rossler() -> Self {
        System::Rossler { a: 0.2, b: 0.2, c: 5.7 }
    }

    pub const fn lorenz() -> Self {
        System::Lorenz { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0 }
    }

    pub fn derivative(&self, s: &State) -> State {
        let [x, y, z] = *s;
        match *self {
            System::Rossler { a, b, c } => [-(y + z), x + a * y, b + x * z - c * z],
            System::Lorenz { sigma, rho, beta } => [sigma * (y - x), x * (rho - z) - y, x * y - beta * z],
            System::LorenzVariant { sigma, rho, beta, b } => [sigma * (x - y), rho * x - x * z, beta * y - b * z],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    /// Explicit Euler: the generator used for every dataset.
    #[default]
    Euler,
    /// Classical fourth-order Runge-Kutta, for convergence checks.
    Rk4,
}

fn advance(system: &System, s: &State, dt: f64, integrator: Integrator) -> State {
    let axpy = |a: &State, k: &State, h: f64| [a[0] + h * k[0], a[1] + h * k[1], a[2] + h * k[2]];
    match integrator {
        Integrator::Euler => axpy(s, &system.derivative(s), dt),
        Integrator::Rk4 => {
            let k1 = system.derivative(s);
            let k2 = system.derivative(&axpy(s, &k1, dt / 2.0));
            let k3 = system.derivative(&axpy(s, &k2, dt / 2.0));
            let k4 = system.derivative(&axpy(s, &k3, dt));
            std::array::from_fn(|i| s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        }
    }
}

/// `states[0]` is the initial condition; `states[k]` is the state after `k`
/// steps of size `dt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub system: System,
    pub integrator: Integrator,
    pub dt: f64,
    pub initial: State,
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Row-major `len x 3` copy of the states.
    pub fn flat(&self) -> Vec<f64> {
        self.states.iter().flatten().copied().collect()
    }

    /// One coordinate as a scalar series.
    pub fn coordinate(&self, axis: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[axis]).collect()
    }

    /// CSV with header `t,x,y,z`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "x", "y", "z"])?;
        for (k, s) in self.states.iter().enumerate() {
            w.serialize((k as f64 * self.dt, s[0], s[1], s[2]))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Integrate `system` for `len` points (the initial state included).
pub fn integrate(system: System, initial: State, dt: f64, len: usize, integrator: Integrator) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial state".into()));
    }
    let mut states = Vec::with_capacity(len);
    let mut s = initial;
    for step in 0..len {
        if step > 0 {
            s = advance(&system, &s, dt, integrator);
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Diverged { step });
            }
        }
        states.push(s);
    }
    Ok(Trajectory { system, integrator, dt, initial, states })
}

pub fn rossler_trajectory(len: usize, dt: f64, a: f64, b: f64, c: f64, initial: State) -> Result<Trajectory> {
    integrate(System::Rossler { a, b, c }, initial, dt, len, Integrator::Euler)
}

pub fn lorenz_trajectory(len: usize, dt: f64, sigma: f64, rho: f64, beta: f64, initial: State) -> Result<Trajectory> {
    integrate(System::Lorenz { sigma, rho, beta }, initial, dt, len, Integrator::Euler)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_euler_steps() {
        let r = rossler_trajectory(2, 0.01, 0.2, 0.2, 5.7, [1.0, 0.0, 0.0]).unwrap();
        let expect = [1.0, 0.01, 0.002];
        for i in 0..3 {
            assert!((r.states[1][i] - expect[i]).abs() < 1e-15);
        }
        let l = lorenz_trajectory(2, 0.01, 10.0, 28.0, 8.0 / 3.0, [1.0, 0.0, 0.0]).unwrap();
        let expect = [0.9, 0.28, 0.0];
        for i in 0..3 {
            assert!((l.states[1][i] - expect[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_sigma_freezes_x() {
        let l = lorenz_trajectory(1000, 0.01, 0.0, 28.0, 8.0 / 3.0, [1.5, 0.3, 0.2]).unwrap();
        assert!(l.states.iter().all(|s| s[0] == 1.5));
    }

    #[test]
    fn rejects_bad_dt_and_reports_divergence() {
        assert!(rossler_trajectory(10, 0.0, 0.2, 0.2, 5.7, [1.0, 0.0, 0.0]).is_err());
        let blowup = integrate(System::lorenz(), [1.0, 0.0, 0.0], 10.0, 100, Integrator::Euler);
        assert!(matches!(blowup, Err(Error::Diverged { .. })));
    }

    #[test]
    fn rk4_is_more_accurate_than_euler() {
        let fine = integrate(System::rossler(), [1.0, 0.0, 0.0], 0.0005, 2001, Integrator::Rk4).unwrap();
        let euler = integrate(System::rossler(), [1.0, 0.0, 0.0], 0.01, 101, Integrator::Euler).unwrap();
        let rk4 = integrate(System::rossler(), [1.0, 0.0, 0.0], 0.01, 101, Integrator::Rk4).unwrap();
        let err = |t: &Trajectory| {
            let (a, b) = (t.states.last().unwrap(), fine.states.last().unwrap());
            (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
        };
        assert!(err(&rk4) < err(&euler) * 1e-3);
    }
}
