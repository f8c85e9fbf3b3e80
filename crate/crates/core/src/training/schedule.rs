use crate::error::{Error, Result};

/// Piecewise-constant learning-rate schedule: the initial rate multiplied by
/// every factor whose milestone step is `<= step`.
#[derive(Clone, Debug, PartialEq)]
pub struct LrSchedule {
    pub initial: f64,
    pub milestones: Vec<(usize, f64)>,
}

impl LrSchedule {
    pub fn new(initial: f64, milestones: Vec<(usize, f64)>) -> Result<Self> {
        let s = LrSchedule {
            initial,
            milestones,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(initial: f64) -> Self {
        LrSchedule {
            initial,
            milestones: Vec::new(),
        }
    }

    /// 3e-4 decayed by 0.25 at steps 7000, 8000 and 9000.
    pub fn sdf_default() -> Self {
        LrSchedule {
            initial: 3e-4,
            milestones: vec![(7000, 0.25), (8000, 0.25), (9000, 0.25)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial > 0.0) || !self.initial.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "initial learning rate must be positive, got {}",
                self.initial
            )));
        }
        if self.milestones.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidConfig(
                "schedule steps must be strictly increasing".into(),
            ));
        }
        if self.milestones.iter().any(|&(_, m)| !(m > 0.0 && m <= 1.0)) {
            return Err(Error::InvalidConfig(
                "schedule multipliers must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn lr_at(&self, step: usize) -> f64 {
        self.milestones
            .iter()
            .take_while(|&&(s, _)| s <= step)
            .fold(self.initial, |lr, &(_, m)| lr * m)
    }

    /// The same milestones rescaled from a `from`-step run to a `to`-step run.
    pub fn rescaled(&self, from: usize, to: usize) -> Self {
        LrSchedule {
            initial: self.initial,
            milestones: self
                .milestones
                .iter()
                .map(|&(s, m)| ((s as u128 * to as u128 / from.max(1) as u128) as usize, m))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sdf_schedule_values() {
        let s = LrSchedule::sdf_default();
        assert_eq!(s.lr_at(0), 3e-4);
        assert_eq!(s.lr_at(6999), 3e-4);
        assert!((s.lr_at(7500) - 7.5e-5).abs() < 1e-18);
        assert!((s.lr_at(9500) - 3e-4 * 0.25f64.powi(3)).abs() < 1e-18);
        assert!((s.lr_at(9500) - 4.6875e-6).abs() < 1e-18);
    }

    #[test]
    fn validation() {
        assert!(LrSchedule::new(3e-4, vec![(10, 0.5), (10, 0.5)]).is_err());
        assert!(LrSchedule::new(3e-4, vec![(10, 1.5)]).is_err());
        assert!(LrSchedule::new(3e-4, vec![(10, 0.0)]).is_err());
        assert!(LrSchedule::new(0.0, vec![]).is_err());
        assert!(LrSchedule::new(1e-3, vec![(1, 1.0), (2, 0.1)]).is_ok());
    }

    #[test]
    fn rescale_maps_milestones_proportionally() {
        let s = LrSchedule::sdf_default().rescaled(10_000, 3000);
        assert_eq!(s.milestones, vec![(2100, 0.25), (2400, 0.25), (2700, 0.25)]);
    }

    proptest! {
        #[test]
        fn lr_is_non_increasing(
            mut steps in prop::collection::vec(0usize..10_000, 0..6),
            mults in prop::collection::vec(0.01f64..=1.0, 6),
            a in 0usize..12_000,
            b in 0usize..12_000,
        ) {
            steps.sort_unstable();
            steps.dedup();
            let milestones = steps.iter().zip(&mults).map(|(&s, &m)| (s, m)).collect();
            let s = LrSchedule::new(1e-3, milestones).unwrap();
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assert!(s.lr_at(hi) <= s.lr_at(lo));
        }
    }
}
