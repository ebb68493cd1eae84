//! Algorithm constants and their consistency requirements.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProfileError {
    #[error("unknown constants profile `{0}`")]
    Unknown(String),
    #[error("constants violate `{0}`")]
    Invalid(&'static str),
}

/// The constant parameters of the algorithm.
///
/// `collision` (C) is the run collision distance, `k_max` (K) bounds merge
/// pattern sizes, `period` (L) is the number of phases between merge/init
/// subphases, `view_radius` (V) the viewing range along the chain, and
/// `init_depth` the clean-context depth used when vertex modules of height 0
/// seed new runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constants {
    pub collision: u32,
    pub k_max: u32,
    pub period: u64,
    pub view_radius: u32,
    pub init_depth: u32,
}

const SLACK: u64 = 8;

impl Constants {
    pub const DEFAULT: Constants = Constants {
        collision: 8,
        k_max: 4,
        period: 32,
        view_radius: 64,
        init_depth: 3,
    };

    pub const STRESS: Constants = Constants {
        collision: 12,
        k_max: 16,
        period: 48,
        view_radius: 96,
        init_depth: 3,
    };

    pub fn profile(name: &str) -> Result<Constants, ProfileError> {
        let c = match name {
            "default" => Constants::DEFAULT,
            "stress" => Constants::STRESS,
            other => return Err(ProfileError::Unknown(other.to_string())),
        };
        c.validate()?;
        Ok(c)
    }

    /// Check the inequalities the run lemmas require.
    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.collision + 4 <= self.k_max - 1 {
            return Err(ProfileError::Invalid("C + 4 > K - 1"));
        }
        if self.period <= self.k_max as u64 + SLACK {
            return Err(ProfileError::Invalid("L > K + 8"));
        }
        if self.period <= self.collision as u64 + SLACK {
            return Err(ProfileError::Invalid("L > C + 8"));
        }
        let needed = 2 * self.k_max.max(self.collision).max(self.init_depth) + 4;
        if self.view_radius < needed {
            return Err(ProfileError::Invalid("V >= 2*max(K, C, D_init) + 4"));
        }
        Ok(())
    }

    /// Side length of the target square: gathered means the bounding box fits
    /// in a (K-1) x (K-1) square.
    pub fn gathered_side(&self) -> i64 {
        (self.k_max - 1) as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_profile_is_valid() {
        let c = Constants::profile("default").unwrap();
        assert_eq!(
            (c.collision, c.k_max, c.period, c.view_radius, c.init_depth),
            (8, 4, 32, 64, 3)
        );
        assert!(c.collision + 4 > c.k_max - 1);
        assert!(c.period > c.k_max as u64 + 8);
        assert!(c.period > c.collision as u64 + 8);
    }

    #[test]
    fn stress_profile_is_valid() {
        assert!(Constants::profile("stress").is_ok());
    }

    #[test]
    fn oversized_k_is_rejected() {
        let c = Constants {
            k_max: 20,
            ..Constants::DEFAULT
        };
        assert_eq!(c.validate(), Err(ProfileError::Invalid("C + 4 > K - 1")));
    }

    #[test]
    fn unknown_profile_is_rejected() {
        assert!(matches!(
            Constants::profile("tuned"),
            Err(ProfileError::Unknown(_))
        ));
    }
}
