//! Elementwise activations, each reporting its value and derivative in one
//! call so the backward pass never re-evaluates transcendentals.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::nn::NnError;

pub const SELU_LAMBDA: f64 = 1.0507009873554804934;
pub const SELU_ALPHA: f64 = 1.6732632423543772848;
const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Selu,
    Elu,
    Swish,
    LeakyRelu,
}

impl Activation {
    pub const ALL: [Activation; 5] = [
        Activation::Relu,
        Activation::Selu,
        Activation::Elu,
        Activation::Swish,
        Activation::LeakyRelu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Selu => "selu",
            Activation::Elu => "elu",
            Activation::Swish => "swish",
            Activation::LeakyRelu => "leaky_relu",
        }
    }

    /// (value, derivative) at x.
    #[inline]
    pub fn eval(self, x: f64) -> (f64, f64) {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    (x, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
            Activation::LeakyRelu => {
                if x > 0.0 {
                    (x, 1.0)
                } else {
                    (LEAKY_SLOPE * x, LEAKY_SLOPE)
                }
            }
            Activation::Elu => {
                if x > 0.0 {
                    (x, 1.0)
                } else {
                    let e = x.exp();
                    (e - 1.0, e)
                }
            }
            Activation::Selu => {
                if x > 0.0 {
                    (SELU_LAMBDA * x, SELU_LAMBDA)
                } else {
                    let e = x.exp();
                    (SELU_LAMBDA * SELU_ALPHA * (e - 1.0), SELU_LAMBDA * SELU_ALPHA * e)
                }
            }
            Activation::Swish => {
                let s = sigmoid(x);
                (x * s, s + x * s * (1.0 - s))
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "relu" => Ok(Activation::Relu),
            "selu" => Ok(Activation::Selu),
            "elu" => Ok(Activation::Elu),
            "swish" => Ok(Activation::Swish),
            "leaky_relu" | "lrelu" => Ok(Activation::LeakyRelu),
            _ => Err(NnError::UnknownActivation { got: s.to_owned() }),
        }
    }
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
