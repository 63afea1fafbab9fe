//! Partial invertible maps of the line acting on exact points.

use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StepError {
    /// The point sits on the top (or, going backwards, bottom) level of the
    /// deepest constructed tower.
    #[error("orbit left the constructed towers")]
    DepthExceeded,
    #[error("point {0} is outside the domain")]
    OutOfDomain(Rational),
}

/// An invertible map, possibly only partially defined on a truncation.
pub trait Transformation {
    fn forward(&self, x: Rational) -> Result<Rational, StepError>;
    fn backward(&self, x: Rational) -> Result<Rational, StepError>;
}

/// The identity map, used as a test double.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Transformation for Identity {
    fn forward(&self, x: Rational) -> Result<Rational, StepError> {
        Ok(x)
    }
    fn backward(&self, x: Rational) -> Result<Rational, StepError> {
        Ok(x)
    }
}

/// `x ↦ x + 1` on the whole line.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitShift;

impl Transformation for UnitShift {
    fn forward(&self, x: Rational) -> Result<Rational, StepError> {
        Ok(x + Rational::ONE)
    }
    fn backward(&self, x: Rational) -> Result<Rational, StepError> {
        Ok(x - Rational::ONE)
    }
}

impl<T: Transformation + ?Sized> Transformation for &T {
    fn forward(&self, x: Rational) -> Result<Rational, StepError> {
        (**self).forward(x)
    }
    fn backward(&self, x: Rational) -> Result<Rational, StepError> {
        (**self).backward(x)
    }
}
