//! The fixed set of node activation functions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Linear,
    Step,
    Sin,
    Cosine,
    Gaussian,
    Tanh,
    Sigmoid,
    Abs,
    Invert,
    #[serde(rename = "relu")]
    ReLU,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 10] = [
        ActivationKind::Linear,
        ActivationKind::Step,
        ActivationKind::Sin,
        ActivationKind::Cosine,
        ActivationKind::Gaussian,
        ActivationKind::Tanh,
        ActivationKind::Sigmoid,
        ActivationKind::Abs,
        ActivationKind::Invert,
        ActivationKind::ReLU,
    ];

    /// Draws one of the ten kinds uniformly.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::ALL[rng.random_range(0..Self::ALL.len())]
    }

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ActivationKind::Linear => x,
            ActivationKind::Step => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Sin => (PI * x).sin(),
            ActivationKind::Cosine => (PI * x).cos(),
            ActivationKind::Gaussian => (-0.5 * x * x).exp(),
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            ActivationKind::Abs => x.abs(),
            ActivationKind::Invert => -x,
            ActivationKind::ReLU => x.max(0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Linear => "linear",
            ActivationKind::Step => "step",
            ActivationKind::Sin => "sin",
            ActivationKind::Cosine => "cosine",
            ActivationKind::Gaussian => "gaussian",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Abs => "abs",
            ActivationKind::Invert => "invert",
            ActivationKind::ReLU => "relu",
        }
    }
}

/// Free-function form of [`ActivationKind::apply`].
#[inline]
pub fn apply_activation(kind: ActivationKind, x: f64) -> f64 {
    kind.apply(x)
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown activation `{s}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_values() {
        assert_eq!(apply_activation(ActivationKind::Gaussian, 0.0), 1.0);
        assert_eq!(apply_activation(ActivationKind::Step, -0.3), 0.0);
        assert_eq!(apply_activation(ActivationKind::Step, 0.3), 1.0);
        assert_eq!(apply_activation(ActivationKind::Step, 0.0), 0.0);
        assert_eq!(apply_activation(ActivationKind::Invert, 1.7), -1.7);
        // sin(pi/2) evaluates to exactly 1.0 in f64
        assert_eq!(apply_activation(ActivationKind::Sin, 0.5), 1.0);
        assert_eq!(apply_activation(ActivationKind::Cosine, 0.0), 1.0);
        assert_eq!(apply_activation(ActivationKind::Sigmoid, 0.0), 0.5);
        assert_eq!(apply_activation(ActivationKind::ReLU, -2.0), 0.0);
        assert_eq!(apply_activation(ActivationKind::Abs, -2.0), 2.0);
        assert_eq!(apply_activation(ActivationKind::Linear, -2.0), -2.0);
        assert!((apply_activation(ActivationKind::Gaussian, 1.0) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((apply_activation(ActivationKind::Tanh, 0.5) - 0.5f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn all_finite_on_wide_range() {
        let mut x = -1e6;
        while x <= 1e6 {
            for k in ActivationKind::ALL {
                assert!(k.apply(x).is_finite(), "{k} at {x}");
            }
            x += 997.3;
        }
        for k in ActivationKind::ALL {
            for x in [-1e6, 1e6, -1e-300, 0.0, 1e-300] {
                assert!(k.apply(x).is_finite(), "{k} at {x}");
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for k in ActivationKind::ALL {
            assert_eq!(k.name().parse::<ActivationKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.name()));
        }
    }
}
