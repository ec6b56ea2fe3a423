use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::ptb::{check_degenerate, jcm_subpacketization};
use super::{
    enumerate_multicast_types, enumerate_packet_types, subpacketization, DesignError, Gains,
    Library, MemoryTable, PacketType, SplitPlan, TransmitterRule,
};
use crate::combinat::{count_shape, NodeGrouping};

/// Packet sub-types sharing one packet length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledLayer {
    pub plan: SplitPlan,
    /// Packet length relative to the first layer.
    pub gamma: BigRational,
}

/// A design whose packets come in several lengths, one per layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledDesign {
    pub k: u32,
    pub t: u32,
    pub library: Option<Library>,
    pub grouping: NodeGrouping,
    pub packet_types: Vec<PacketType>,
    pub layers: Vec<CoupledLayer>,
    pub raw_counts: Vec<BigUint>,
    pub memory: MemoryTable,
    /// Sum of the layer splitting vectors.
    pub alpha: Vec<u64>,
    pub f: BigUint,
    pub f_jcm: BigUint,
}

impl CoupledDesign {
    /// Builds one layer per selection and solves the length ratios from the
    /// memory balance. Supports two layers, the case with one free ratio.
    pub fn build(
        k: u32,
        t: u32,
        grouping: NodeGrouping,
        selections: &[Vec<Vec<usize>>],
    ) -> Result<Self, DesignError> {
        check_degenerate(k, t)?;
        if grouping.k() != k {
            return Err(DesignError::GroupingSize {
                k,
                got: grouping.k(),
            });
        }
        if selections.len() != 2 {
            return Err(DesignError::Dimension(format!(
                "coupled designs take two layers, got {}",
                selections.len()
            )));
        }
        let packet_types = enumerate_packet_types(&grouping, t);
        let plans = selections
            .iter()
            .map(|sel| SplitPlan::new(&grouping, t, &packet_types, sel))
            .collect::<Result<Vec<_>, _>>()?;
        let memory = MemoryTable::new(&grouping, &packet_types);
        let gamma2 = balance_ratio(&memory, plans[0].alpha(), plans[1].alpha())?;
        let raw_counts: Vec<BigUint> = packet_types
            .iter()
            .map(|v| count_shape(&v.shape, &grouping))
            .collect();
        let alpha: Vec<u64> = plans[0]
            .alpha()
            .iter()
            .zip(plans[1].alpha())
            .map(|(a, b)| a + b)
            .collect();
        let f = subpacketization(&alpha, &raw_counts);
        let gammas = [BigRational::one(), gamma2];
        let layers = plans
            .into_iter()
            .zip(gammas)
            .map(|(plan, gamma)| CoupledLayer { plan, gamma })
            .collect();
        Ok(CoupledDesign {
            k,
            t,
            library: None,
            grouping,
            packet_types,
            layers,
            raw_counts,
            memory,
            alpha,
            f,
            f_jcm: jcm_subpacketization(k, t),
        })
    }

    pub fn with_library(mut self, n: u32, m: u32) -> Result<Self, DesignError> {
        let lib = Library { n, m };
        if lib.replication(self.k)? != self.t {
            return Err(DesignError::Dimension(format!(
                "K*M/N does not match t = {}",
                self.t
            )));
        }
        self.library = Some(lib);
        Ok(self)
    }

    pub fn gammas(&self) -> Vec<BigRational> {
        self.layers.iter().map(|l| l.gamma.clone()).collect()
    }

    /// Integer packet lengths per layer, proportional to the ratios and
    /// as small as possible.
    pub fn unit_lengths(&self) -> Vec<BigUint> {
        integer_lengths(&self.gammas())
    }

    /// Bits cached per file by a node of each unique group, in units of
    /// the integer lengths.
    pub fn cached_units(&self) -> Vec<BigUint> {
        let lens = self.unit_lengths();
        self.memory
            .rows
            .iter()
            .map(|row| {
                self.layers
                    .iter()
                    .zip(&lens)
                    .map(|(l, len)| {
                        row.iter()
                            .zip(l.plan.alpha())
                            .map(|(c, &a)| c * a)
                            .sum::<BigUint>()
                            * len
                    })
                    .sum()
            })
            .collect()
    }

    pub fn gains(&self) -> Gains {
        Gains::compute(self.t, &self.alpha, &self.raw_counts)
    }

    pub fn ratio(&self) -> BigRational {
        BigRational::new(self.f.clone().into(), self.f_jcm.clone().into())
    }

    pub fn ratio_f64(&self) -> f64 {
        self.ratio().to_f64().unwrap_or(f64::NAN)
    }
}

/// `γ_2` with `Σ_h γ_h α^(h) ΔF_iᵀ = 0` for every `i`, `γ_1 = 1`.
fn balance_ratio(
    memory: &MemoryTable,
    first: &[u64],
    second: &[u64],
) -> Result<BigRational, DesignError> {
    let dot = |d: &[BigInt], a: &[u64]| -> BigInt {
        d.iter().zip(a).map(|(x, &y)| x * BigInt::from(y)).sum()
    };
    let mut gamma: Option<BigRational> = None;
    for d in memory.deltas() {
        let (c1, c2) = (dot(&d, first), dot(&d, second));
        if c2.is_zero() {
            if !c1.is_zero() {
                return Err(DesignError::NoPositiveRatio);
            }
            continue;
        }
        let g = BigRational::new(-c1, c2);
        match &gamma {
            Some(prev) if *prev != g => return Err(DesignError::NoPositiveRatio),
            _ => gamma = Some(g),
        }
    }
    let gamma = gamma.unwrap_or_else(BigRational::one);
    if !gamma.is_positive() {
        return Err(DesignError::NoPositiveRatio);
    }
    Ok(gamma)
}

/// Smallest positive integers proportional to `ratios`.
pub(crate) fn integer_lengths(ratios: &[BigRational]) -> Vec<BigUint> {
    use num_integer::Integer;
    let l = ratios
        .iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    let ints: Vec<BigInt> = ratios
        .iter()
        .map(|r| (r * BigRational::from_integer(l.clone())).to_integer())
        .collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    ints.iter()
        .map(|x| (x / &g).to_biguint().expect("positive ratios"))
        .collect()
}

/// Two groups of sizes `(K+1)/2` and `(K-1)/2` with `t = 2r`. The first
/// layer lets the smallest parts transmit, the second lets the nodes in the
/// larger group transmit; their lengths are balanced so both group sizes
/// cache the same number of bits.
pub fn preset_heterogeneous(k: u32, t: u32) -> Result<CoupledDesign, DesignError> {
    let pre = |ok: bool, reason: &str| {
        if ok {
            Ok(())
        } else {
            Err(DesignError::Precondition {
                preset: "hetero",
                reason: reason.to_string(),
            })
        }
    };
    pre(k % 2 == 1, "K must be odd")?;
    pre(
        t >= 2 && t.is_multiple_of(2),
        "t must be even and at least 2",
    )?;
    pre((k - 1) / 2 > t, "(K-1)/2 must be at least t + 1")?;
    let q = NodeGrouping::new(&[k.div_ceil(2), (k - 1) / 2])?;
    let mtypes = enumerate_multicast_types(&q, t);
    let selections = [TransmitterRule::SmallestPart, TransmitterRule::LargestGroup]
        .map(|r| r.select(&mtypes))
        .to_vec();
    CoupledDesign::build(k, t, q, &selections)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k7_t2() {
        let d = preset_heterogeneous(7, 2).unwrap();
        // Canonical order (2,0), (1,1), (0,2).
        assert_eq!(d.layers[0].plan.alpha(), &[0, 1, 0]);
        assert_eq!(d.layers[1].plan.alpha(), &[2, 1, 0]);
        assert_eq!(d.alpha, vec![2, 2, 0]);
        assert_eq!(d.layers[1].gamma, BigRational::new(1.into(), 5.into()));
        assert_eq!(d.f, BigUint::from(36u32));
        assert_eq!(d.f_jcm, BigUint::from(42u32));
        assert_eq!(
            d.unit_lengths(),
            vec![BigUint::from(5u32), BigUint::from(1u32)]
        );
        let cached = d.cached_units();
        assert_eq!(cached[0], cached[1]);
        assert_eq!(cached[0], BigUint::from(24u32));
    }

    #[test]
    fn preconditions() {
        assert!(preset_heterogeneous(8, 2).is_err());
        assert!(preset_heterogeneous(7, 3).is_err());
        assert!(preset_heterogeneous(9, 4).is_err());
        assert!(preset_heterogeneous(11, 4).is_ok());
    }

    #[test]
    fn lengths() {
        let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(
            integer_lengths(&[r(1, 1), r(1, 5)]),
            vec![BigUint::from(5u32), BigUint::from(1u32)]
        );
        assert_eq!(
            integer_lengths(&[r(1, 1), r(3, 2)]),
            vec![BigUint::from(2u32), BigUint::from(3u32)]
        );
    }
}
