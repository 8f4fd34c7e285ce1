//! Initial-condition primitives and the six dataset families.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::WeldError;

#[inline]
fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Piecewise-linear hat of width `eps` supported on `[0, eps]` with peak 1
/// at `eps / 2`: `(2/eps) (relu(x) - 2 relu(x - eps/2) + relu(x - eps))`.
pub fn hat(eps: f64, x: f64) -> f64 {
    2.0 / eps * (relu(x) - 2.0 * relu(x - eps / 2.0) + relu(x - eps))
}

/// KdV soliton profile `(c/2) sech(sqrt(c) x / 2)^2`.
pub fn soliton(c: f64, x: f64) -> f64 {
    let s = 1.0 / (c.sqrt() * x / 2.0).cosh();
    c / 2.0 * s * s
}

/// Which evolution equation generates a family's trajectories.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equation {
    Transport,
    Burgers,
    Kdv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Tscale,
    Tshift,
    Bscale,
    Bshift,
    Kscale,
    Kshift,
}

pub const HAT_WIDTH: f64 = 0.05;
pub const BURGERS_VISCOSITY: f64 = 1e-3;

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Tscale,
        Family::Tshift,
        Family::Bscale,
        Family::Bshift,
        Family::Kscale,
        Family::Kshift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Tscale => "tscale",
            Family::Tshift => "tshift",
            Family::Bscale => "bscale",
            Family::Bshift => "bshift",
            Family::Kscale => "kscale",
            Family::Kshift => "kshift",
        }
    }

    pub fn equation(self) -> Equation {
        match self {
            Family::Tscale | Family::Tshift => Equation::Transport,
            Family::Bscale | Family::Bshift => Equation::Burgers,
            Family::Kscale | Family::Kshift => Equation::Kdv,
        }
    }

    /// Range the scalar family parameter is drawn from, uniformly.
    pub fn param_range(self) -> (f64, f64) {
        match self {
            Family::Tscale => (1.0, 4.0),
            Family::Tshift => (0.0, 3.0),
            Family::Bscale => (-0.9, 0.9),
            Family::Bshift => (0.0, 1.0),
            Family::Kscale => (6.0, 18.0),
            Family::Kshift => (0.0, 0.4),
        }
    }

    pub fn default_t_end(self) -> f64 {
        match self.equation() {
            Equation::Transport => 0.3,
            Equation::Burgers => 1.0,
            Equation::Kdv => 0.01,
        }
    }

    /// `(start, end, periodic)` of the spatial domain.
    pub fn domain(self) -> (f64, f64, bool) {
        match self.equation() {
            Equation::Transport => (0.0, 1.0, false),
            Equation::Burgers => (0.0, 1.0, true),
            Equation::Kdv => (0.0, 6.0, true),
        }
    }

    /// Closed-form initial condition for the transport and KdV families.
    /// Burgers families depend on sampled base fields and are built in
    /// [`crate::pde::dataset`].
    pub fn analytic_initial(self, param: f64) -> Option<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
        let h = |x: f64| hat(HAT_WIDTH, x);
        match self {
            Family::Tscale => Some(Box::new(move |x| param * h(x - 0.1) + h(x - 0.2))),
            Family::Tshift => Some(Box::new(move |x| h(x - 0.1) + 2.5 * h(x - (0.2 + 0.1 * param)))),
            Family::Kscale => Some(Box::new(move |x| soliton(param * param, x - 1.0) + soliton(36.0, x - 2.0))),
            Family::Kshift => Some(Box::new(move |x| soliton(36.0, x - 1.0) + soliton(36.0, x - 2.0 - param))),
            Family::Bscale | Family::Bshift => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = WeldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL.iter().copied().find(|f| f.name() == s).ok_or_else(|| {
            let names: Vec<_> = Family::ALL.iter().map(|f| f.name()).collect();
            WeldError::invalid(format!("unknown family {s:?}; valid families: {}", names.join(", ")))
        })
    }
}
