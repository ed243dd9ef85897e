use crate::error::{Error, Result};

/// The non-negative weight applied to each dataset action's log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterSpec {
    /// Constant weight 1: behavioral cloning.
    Bc,
    /// `1[A > 0]`.
    Binary,
    /// `1[A > 0]` on the max-based advantage.
    BinaryMax,
    /// `min(exp(A / beta), clip)`.
    Exp { beta: f64, clip: f64 },
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec::Exp { beta: 1.0, clip: 20.0 }
    }
}

impl FilterSpec {
    pub fn validate(&self) -> Result<()> {
        if let FilterSpec::Exp { beta, clip } = *self {
            if !(beta > 0.0 && beta.is_finite()) || !(clip > 0.0) {
                return Err(Error::Config(format!("exp filter needs beta > 0 and clip > 0, got {beta}, {clip}")));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            FilterSpec::Bc => "bc",
            FilterSpec::Binary => "binary",
            FilterSpec::BinaryMax => "binary_max",
            FilterSpec::Exp { .. } => "exp",
        }
    }

    /// Whether the weight depends on the critic at all.
    pub fn uses_advantage(&self) -> bool {
        !matches!(self, FilterSpec::Bc)
    }
}

pub fn filter_weight(spec: &FilterSpec, advantage: f64) -> f64 {
    match *spec {
        FilterSpec::Bc => 1.0,
        FilterSpec::Binary | FilterSpec::BinaryMax => {
            if advantage > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        FilterSpec::Exp { beta, clip } => (advantage / beta).exp().min(clip),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_values() {
        let exp = FilterSpec::default();
        assert_eq!(filter_weight(&exp, 0.0), 1.0);
        assert_eq!(filter_weight(&exp, 10.0), 20.0);
        assert_eq!(filter_weight(&FilterSpec::Binary, -0.1), 0.0);
        assert_eq!(filter_weight(&FilterSpec::Binary, 0.0), 0.0);
        assert_eq!(filter_weight(&FilterSpec::BinaryMax, 1e-300), 1.0);
        assert_eq!(filter_weight(&FilterSpec::Bc, -1e9), 1.0);
        assert!(FilterSpec::Exp { beta: 0.0, clip: 1.0 }.validate().is_err());
    }
}
