//! Cart-pole swing-up: the pole starts hanging and has to be swung up and
//! balanced without the cart leaving the track.
//!
//! The pole angle is measured from upright (`theta = 0`), so the hanging rest
//! position is `theta = pi`. Dynamics are the frictionless cart-pole
//! equations with the pole modelled as a uniform rod, integrated with
//! classic fourth-order Runge-Kutta under a force held constant over the
//! step.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::evaluation::{Episode, Task};
use crate::genome::{Network, Weights};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl CartState {
    pub const HANGING: CartState = CartState {
        x: 0.0,
        x_dot: 0.0,
        theta: PI,
        theta_dot: 0.0,
    };

    pub const UPRIGHT: CartState = CartState {
        x: 0.0,
        x_dot: 0.0,
        theta: 0.0,
        theta_dot: 0.0,
    };

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.x_dot.is_finite() && self.theta.is_finite() && self.theta_dot.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartParams {
    pub m_cart: f64,
    pub m_pole: f64,
    pub pole_half_length: f64,
    pub gravity: f64,
    pub f_max: f64,
    pub dt: f64,
    pub x_limit: f64,
    pub episode_steps: usize,
    /// Half-width of the uniform noise on the initial state.
    pub init_noise: f64,
}

impl Default for CartParams {
    fn default() -> Self {
        CartParams {
            m_cart: 0.5,
            m_pole: 0.5,
            pole_half_length: 0.3,
            gravity: 9.81,
            f_max: 10.0,
            dt: 0.01,
            x_limit: 2.4,
            episode_steps: 1000,
            init_noise: 0.05,
        }
    }
}

impl CartParams {
    /// Accelerations `(x_ddot, theta_ddot)` under `force`.
    pub fn accelerations(&self, s: &CartState, force: f64) -> (f64, f64) {
        let total = self.m_cart + self.m_pole;
        let pml = self.m_pole * self.pole_half_length;
        let (sin, cos) = s.theta.sin_cos();
        let temp = (force + pml * s.theta_dot * s.theta_dot * sin) / total;
        let theta_acc = (self.gravity * sin - cos * temp)
            / (self.pole_half_length * (4.0 / 3.0 - self.m_pole * cos * cos / total));
        let x_acc = temp - pml * theta_acc * cos / total;
        (x_acc, theta_acc)
    }

    /// Total mechanical energy, with the potential zero at the pivot height.
    pub fn energy(&self, s: &CartState) -> f64 {
        let total = self.m_cart + self.m_pole;
        let l = self.pole_half_length;
        0.5 * total * s.x_dot * s.x_dot
            + self.m_pole * l * s.x_dot * s.theta_dot * s.theta.cos()
            + (2.0 / 3.0) * self.m_pole * l * l * s.theta_dot * s.theta_dot
            + self.m_pole * self.gravity * l * s.theta.cos()
    }
}

/// Advances the state by one `dt`. The force is clamped to `±f_max`.
pub fn cartpole_step(state: &CartState, force: f64, params: &CartParams) -> CartState {
    let force = force.clamp(-params.f_max, params.f_max);
    let deriv = |s: &CartState| {
        let (x_acc, theta_acc) = params.accelerations(s, force);
        [s.x_dot, x_acc, s.theta_dot, theta_acc]
    };
    let shifted = |k: &[f64; 4], h: f64| CartState {
        x: state.x + k[0] * h,
        x_dot: state.x_dot + k[1] * h,
        theta: state.theta + k[2] * h,
        theta_dot: state.theta_dot + k[3] * h,
    };
    let dt = params.dt;
    let k1 = deriv(state);
    let k2 = deriv(&shifted(&k1, dt / 2.0));
    let k3 = deriv(&shifted(&k2, dt / 2.0));
    let k4 = deriv(&shifted(&k3, dt));
    let mut k = [0.0; 4];
    for i in 0..4 {
        k[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
    }
    shifted(&k, dt)
}

/// `[x, x_dot, cos(theta), sin(theta), theta_dot]`
pub fn cartpole_observe(state: &CartState) -> [f64; 5] {
    let (sin, cos) = state.theta.sin_cos();
    [state.x, state.x_dot, cos, sin, state.theta_dot]
}

/// Per-step reward in `[0, 1]`: product of an angle term (1 upright, 0
/// hanging) and a position term (1 at the centre, 0 at the track edge).
pub fn step_reward(state: &CartState, params: &CartParams) -> f64 {
    let angle = (state.theta.cos() + 1.0) / 2.0;
    let position = (state.x / params.x_limit * PI / 2.0).cos();
    angle * position
}

pub fn initial_state<R: Rng + ?Sized>(params: &CartParams, rng: &mut R) -> CartState {
    let a = params.init_noise;
    let mut noise = || if a > 0.0 { rng.random_range(-a..=a) } else { 0.0 };
    CartState {
        x: noise(),
        x_dot: noise(),
        theta: PI + noise(),
        theta_dot: noise(),
    }
}

/// Runs one episode driven by `net` and returns the summed reward. The
/// episode ends after `episode_steps` steps or when the cart leaves the
/// track; the step that leaves the track earns nothing.
pub fn cartpole_rollout(net: &Network, weights: Weights<'_>, params: &CartParams, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = initial_state(params, &mut rng);
    let mut scratch = Vec::new();
    let mut total = 0.0;
    for _ in 0..params.episode_steps {
        let obs = cartpole_observe(&state);
        let action = net.activate(&obs, weights, &mut scratch)[0];
        let action = if action.is_finite() { action.clamp(-1.0, 1.0) } else { 0.0 };
        state = cartpole_step(&state, params.f_max * action, params);
        if !state.is_finite() || state.x.abs() > params.x_limit {
            break;
        }
        total += step_reward(&state, params);
    }
    total
}

#[derive(Debug, Clone, Default)]
pub struct SwingUp {
    pub params: CartParams,
}

impl SwingUp {
    pub fn new(params: CartParams) -> Self {
        SwingUp { params }
    }
}

impl Task for SwingUp {
    fn name(&self) -> &str {
        "swingup"
    }

    fn n_inputs(&self) -> usize {
        5
    }

    fn n_outputs(&self) -> usize {
        1
    }

    fn rollout(&self, net: &Network, weights: Weights<'_>, episode: Episode) -> f64 {
        cartpole_rollout(net, weights, &self.params, episode.seed)
    }
}
