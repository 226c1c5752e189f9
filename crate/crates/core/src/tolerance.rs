use crate::error::{Error, Result};

/// Relative tolerances shared by every numerical predicate.
///
/// All four are dimensionless. `null` bounds the Lorentz form of a unit ray,
/// `rank` is the singular-value cutoff relative to the largest singular
/// value, `member` bounds the distance of a unit ray from a subspace (and the
/// distance between two equal points), and `verify` bounds point residuals
/// when checking a fitted map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub null: f64,
    pub rank: f64,
    pub member: f64,
    pub verify: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            null: 1e-10,
            rank: 1e-8,
            member: 1e-8,
            verify: 1e-8,
        }
    }
}

impl Tolerances {
    /// Upper edge of the band in which a rank decision is reported as
    /// ill-conditioned instead of being made silently.
    pub(crate) const AMBIGUITY_FACTOR: f64 = 1e3;

    pub fn validate(&self) -> Result<()> {
        let all = [self.null, self.rank, self.member, self.verify];
        if all.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidInput(
                "tolerances must be finite and strictly positive".into(),
            ));
        }
        if self.member < self.null {
            return Err(Error::InvalidInput(
                "membership tolerance must be at least the null tolerance".into(),
            ));
        }
        Ok(())
    }

    /// Returns a copy with a different verification tolerance.
    pub fn with_verify(mut self, verify: f64) -> Self {
        self.verify = verify;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        Tolerances::default().validate().unwrap();
    }

    #[test]
    fn rejects_nonpositive_and_misordered() {
        let mut t = Tolerances::default();
        t.rank = 0.0;
        assert!(t.validate().is_err());
        let mut t = Tolerances::default();
        t.member = t.null / 10.0;
        assert!(t.validate().is_err());
        let t = Tolerances::default().with_verify(f64::NAN);
        assert!(t.validate().is_err());
    }
}
