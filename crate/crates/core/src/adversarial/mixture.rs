use serde::{Deserialize, Serialize};

use crate::data::FiniteDistribution;
use crate::error::{Error, Result};

/// Which point-mass component is mixed into the base distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "at")]
pub enum MixtureKind {
    /// `P_X x delta_y`.
    ResponseAt(u32),
    /// `delta_x x P_Y`.
    FeatureAt(u32),
}

/// `P' = c * component + (1 - c) * P`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureDistribution {
    pub base: FiniteDistribution,
    pub kind: MixtureKind,
    pub c: f64,
}

impl MixtureDistribution {
    pub fn new(base: FiniteDistribution, kind: MixtureKind, c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::Config(format!("mixture weight {c} outside [0, 1]")));
        }
        let space = base.space();
        match kind {
            MixtureKind::ResponseAt(y) if y >= space.y_size => {
                return Err(Error::Config(format!("response {y} outside the space")))
            }
            MixtureKind::FeatureAt(x) if x >= space.x_size => {
                return Err(Error::Config(format!("feature {x} outside the space")))
            }
            _ => {}
        }
        Ok(MixtureDistribution { base, kind, c })
    }

    pub fn distribution(&self) -> Result<FiniteDistribution> {
        let space = self.base.space();
        let px = self.base.marginal_x();
        let py = self.base.marginal_y();
        let mut probs: Vec<f64> = self
            .base
            .probs()
            .iter()
            .map(|p| (1.0 - self.c) * p)
            .collect();
        match self.kind {
            MixtureKind::ResponseAt(y) => {
                for (x, &p) in px.iter().enumerate() {
                    probs[x * space.y_size as usize + y as usize] += self.c * p;
                }
            }
            MixtureKind::FeatureAt(x) => {
                for (y, &p) in py.iter().enumerate() {
                    probs[x as usize * space.y_size as usize + y] += self.c * p;
                }
            }
        }
        FiniteDistribution::new(space, probs)
    }
}

/// Shorthand for `MixtureDistribution::new(..)?.distribution()`.
pub fn mixture(base: &FiniteDistribution, kind: MixtureKind, c: f64) -> Result<FiniteDistribution> {
    MixtureDistribution::new(base.clone(), kind, c)?.distribution()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Space;

    fn base() -> FiniteDistribution {
        FiniteDistribution::new(
            Space::new(2, 3).unwrap(),
            vec![0.1, 0.2, 0.1, 0.3, 0.0, 0.3],
        )
        .unwrap()
    }

    #[test]
    fn response_mixture_keeps_x_marginal() {
        let b = base();
        let m = mixture(&b, MixtureKind::ResponseAt(1), 0.37).unwrap();
        for (p, q) in m.marginal_x().iter().zip(b.marginal_x()) {
            assert!((p - q).abs() < 1e-15);
        }
        assert!((m.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let py = m.marginal_y();
        assert!((py[1] - (0.37 + 0.63 * 0.2)).abs() < 1e-12);
    }

    #[test]
    fn feature_mixture_keeps_y_marginal() {
        let b = base();
        let m = mixture(&b, MixtureKind::FeatureAt(0), 0.5).unwrap();
        for (p, q) in m.marginal_y().iter().zip(b.marginal_y()) {
            assert!((p - q).abs() < 1e-15);
        }
        assert!((m.marginal_x()[0] - (0.5 + 0.5 * 0.4)).abs() < 1e-12);
    }

    #[test]
    fn endpoints() {
        let b = base();
        assert_eq!(mixture(&b, MixtureKind::FeatureAt(1), 0.0).unwrap(), b);
        let full = mixture(&b, MixtureKind::ResponseAt(2), 1.0).unwrap();
        assert!((full.marginal_y()[2] - 1.0).abs() < 1e-12);
        assert!(mixture(&b, MixtureKind::FeatureAt(5), 0.5).is_err());
        assert!(mixture(&b, MixtureKind::FeatureAt(0), 1.5).is_err());
    }
}
