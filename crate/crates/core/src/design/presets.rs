use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use super::ptb::check_degenerate;
use super::{jcm_design, preset_heterogeneous, Design, DesignError, PtbDesign, TransmitterRule};
use crate::combinat::{binomial, NodeGrouping};

fn precondition(
    preset: &'static str,
    ok: bool,
    reason: impl Into<String>,
) -> Result<(), DesignError> {
    if ok {
        Ok(())
    } else {
        Err(DesignError::Precondition {
            preset,
            reason: reason.into(),
        })
    }
}

/// Groups of three with `t = K - 3`: in every multicast group the nodes
/// of the smallest part transmit.
pub fn preset_triple_grouping(k: u32) -> Result<PtbDesign, DesignError> {
    precondition("triple", k.is_multiple_of(3), "K must be divisible by 3")?;
    precondition("triple", k >= 9, "K must be at least 9 (K = 3m, m >= 3)")?;
    let q = NodeGrouping::equal(k, 3)?;
    PtbDesign::from_rule(k, k - 3, q, TransmitterRule::SmallestPart)
}

/// Pairs with an even `t̄ = K - t`: the singleton parts of every multicast
/// group transmit.
pub fn preset_pair_grouping(k: u32, t_bar: u32) -> Result<PtbDesign, DesignError> {
    precondition("pair", k.is_multiple_of(2), "K must be even")?;
    precondition(
        "pair",
        t_bar >= 2 && t_bar.is_multiple_of(2),
        "K - t must be even and at least 2",
    )?;
    precondition("pair", k >= 2 * t_bar, "K must be at least 2(K - t)")?;
    let q = NodeGrouping::equal(k, 2)?;
    PtbDesign::from_rule(k, k - t_bar, q, TransmitterRule::SmallestPart)
}

/// Two equal groups with `t = 2r`.
pub fn preset_two_group(k: u32, t: u32) -> Result<PtbDesign, DesignError> {
    precondition("two-group", k.is_multiple_of(2), "K must be even")?;
    precondition(
        "two-group",
        t >= 2 && t.is_multiple_of(2),
        "t must be even and at least 2",
    )?;
    precondition("two-group", k / 2 > t, "K/2 must be at least t + 1")?;
    let q = NodeGrouping::equal(k, k / 2)?;
    PtbDesign::from_rule(k, t, q, TransmitterRule::SmallestPart)
}

fn frac(n: impl Into<BigInt>, d: impl Into<BigInt>) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// `f(t̄) / (K - t̄)` with `f(t̄) = 1·3·…·(t̄ - 1)`.
pub fn pair_ratio_bound(k: u32, t_bar: u32) -> BigRational {
    let f: BigInt = (1..=t_bar / 2).map(|i| BigInt::from(2 * i - 1)).product();
    frac(f, k - t_bar)
}

/// `(1 - 1/2^(t-1)) / 2`.
pub fn two_group_ratio_bound(t: u32) -> BigRational {
    let p = BigInt::from(2u32).pow(t - 1);
    (BigRational::one() - frac(1, p)) / frac(2, 1)
}

/// `(C(t, t/2) / 2^t - 1) / t + 1`.
pub fn hetero_ratio_bound(t: u32) -> BigRational {
    let c = BigInt::from(binomial(t, t / 2));
    let p = BigInt::from(2u32).pow(t);
    (frac(c, p) - BigRational::one()) / frac(t, 1) + BigRational::one()
}

/// The named constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Jcm,
    Triple,
    Pair,
    TwoGroup,
    Hetero,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Jcm,
        Preset::Triple,
        Preset::Pair,
        Preset::TwoGroup,
        Preset::Hetero,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Jcm => "jcm",
            Preset::Triple => "triple",
            Preset::Pair => "pair",
            Preset::TwoGroup => "two-group",
            Preset::Hetero => "hetero",
        }
    }

    /// Builds the preset for `K` users with replication `t`.
    pub fn build(&self, k: u32, t: u32) -> Result<Design, DesignError> {
        match self {
            Preset::Jcm => jcm_design(k, t).map(Design::from),
            Preset::Triple => {
                if t + 3 != k {
                    return Err(DesignError::Precondition {
                        preset: "triple",
                        reason: format!("t must equal K - 3 = {}", k.saturating_sub(3)),
                    });
                }
                preset_triple_grouping(k).map(Design::from)
            }
            Preset::Pair => {
                check_degenerate(k, t)?;
                preset_pair_grouping(k, k - t).map(Design::from)
            }
            Preset::TwoGroup => preset_two_group(k, t).map(Design::from),
            Preset::Hetero => preset_heterogeneous(k, t).map(Design::from),
        }
    }

    /// The ratio bound the construction is compared against, if any.
    pub fn bound(&self, k: u32, t: u32) -> Option<BigRational> {
        match self {
            Preset::Pair => Some(pair_ratio_bound(k, k - t)),
            Preset::TwoGroup => Some(two_group_ratio_bound(t)),
            Preset::Hetero => Some(hetero_ratio_bound(t)),
            Preset::Jcm | Preset::Triple => None,
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                format!("unknown preset `{s}` (expected jcm, triple, pair, two-group or hetero)")
            })
    }
}
