//! Points of the state space.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

/// Default quantization used to decide whether two real coordinates are equal.
pub const DEFAULT_EPS: f64 = 1e-9;

/// A point of a model's state space: real coordinates plus discrete labels.
pub trait State: Clone + PartialEq + Debug + Send + Sync + 'static {
    /// Real coordinates, used for binning and identity keys.
    fn coords(&self) -> Vec<f64>;

    /// Discrete labels; compared exactly.
    fn labels(&self) -> Vec<i64> {
        Vec::new()
    }

    fn is_valid(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }

    /// Identity key: coordinates rounded to an `eps` grid, labels verbatim.
    fn key(&self, eps: f64) -> StateKey {
        let mut k: Vec<i64> = self
            .coords()
            .iter()
            .map(|c| (c / eps).round() as i64)
            .collect();
        k.extend(self.labels());
        StateKey(k)
    }
}

/// Hashable, ordered identity of a state on an `eps` grid.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(pub Vec<i64>);

/// Equality under the default quantization.
pub fn same_state<S: State>(a: &S, b: &S) -> bool {
    a == b || a.key(DEFAULT_EPS) == b.key(DEFAULT_EPS)
}

impl State for f64 {
    fn coords(&self) -> Vec<f64> {
        vec![*self]
    }
}

/// Direction of motion on the line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Velocity {
    Neg,
    Pos,
}

impl Velocity {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Velocity::Neg => -1.0,
            Velocity::Pos => 1.0,
        }
    }

    #[inline]
    pub fn flipped(self) -> Velocity {
        match self {
            Velocity::Neg => Velocity::Pos,
            Velocity::Pos => Velocity::Neg,
        }
    }
}

impl TryFrom<i8> for Velocity {
    type Error = String;
    fn try_from(v: i8) -> Result<Self, String> {
        match v {
            1 => Ok(Velocity::Pos),
            -1 => Ok(Velocity::Neg),
            other => Err(format!("velocity must be +1 or -1, got {other}")),
        }
    }
}

impl From<Velocity> for i8 {
    fn from(v: Velocity) -> i8 {
        if v == Velocity::Pos {
            1
        } else {
            -1
        }
    }
}

/// Position on the line with a unit velocity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosVel {
    pub x: f64,
    pub v: Velocity,
}

impl PosVel {
    pub fn new(x: f64, v: Velocity) -> Self {
        PosVel { x, v }
    }

    pub fn flipped(self) -> Self {
        PosVel {
            x: self.x,
            v: self.v.flipped(),
        }
    }
}

impl State for PosVel {
    fn coords(&self) -> Vec<f64> {
        vec![self.x]
    }
    fn labels(&self) -> Vec<i64> {
        vec![i8::from(self.v) as i64]
    }
}

/// Point of the flat torus [0,1)^D.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusPoint<const D: usize>(pub [f64; D]);

impl<const D: usize> TorusPoint<D> {
    /// Wraps arbitrary reals into [0,1).
    pub fn wrapped(mut c: [f64; D]) -> Self {
        for v in c.iter_mut() {
            *v = wrap_unit(*v);
        }
        TorusPoint(c)
    }
}

impl<const D: usize> Serialize for TorusPoint<D> {
    fn serialize<Z: serde::Serializer>(&self, ser: Z) -> std::result::Result<Z::Ok, Z::Error> {
        self.0.as_slice().serialize(ser)
    }
}

/// Accepts a list of `D` reals and wraps them onto the torus.
impl<'de, const D: usize> Deserialize<'de> for TorusPoint<D> {
    fn deserialize<Z: serde::Deserializer<'de>>(de: Z) -> std::result::Result<Self, Z::Error> {
        let v = Vec::<f64>::deserialize(de)?;
        let c: [f64; D] = v
            .try_into()
            .map_err(|v: Vec<f64>| serde::de::Error::invalid_length(v.len(), &"one coordinate per dimension"))?;
        if c.iter().any(|x| !x.is_finite()) {
            return Err(serde::de::Error::custom("torus coordinates must be finite"));
        }
        Ok(TorusPoint::wrapped(c))
    }
}

#[inline]
pub(crate) fn wrap_unit(v: f64) -> f64 {
    let w = v - v.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

impl<const D: usize> State for TorusPoint<D> {
    fn coords(&self) -> Vec<f64> {
        self.0.to_vec()
    }
    fn is_valid(&self) -> bool {
        self.0.iter().all(|c| (0.0..1.0).contains(c))
    }
}
