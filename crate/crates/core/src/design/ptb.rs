use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::{
    enumerate_multicast_types, enumerate_packet_types, involved_types, lcm_vector, local_fsr,
    memory_check, subpacketization, DesignError, FsrTable, LcmSolution, MemoryTable, MulticastType,
    PacketType,
};
use crate::combinat::{binomial, count_shape, NodeGrouping};

/// Library size and per-node cache size, in files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Library {
    pub n: u32,
    pub m: u32,
}

impl Library {
    /// `t = KM/N`, checked for integrality and `1 <= t < K`.
    pub fn replication(&self, k: u32) -> Result<u32, DesignError> {
        let num = k as u64 * self.m as u64;
        if self.n == 0 || !num.is_multiple_of(self.n as u64) {
            return Err(DesignError::NonIntegralT {
                k,
                n: self.n,
                m: self.m,
            });
        }
        let t = (num / self.n as u64) as u32;
        check_degenerate(k, t)?;
        Ok(t)
    }
}

pub(crate) fn check_degenerate(k: u32, t: u32) -> Result<(), DesignError> {
    if t == 0 || t >= k {
        return Err(DesignError::Degenerate { k, t });
    }
    Ok(())
}

/// Transmitter classes per multicast type, indices into `classes`.
pub type Selection = Vec<Vec<usize>>;

/// How a preset picks `D_T` for every multicast type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransmitterRule {
    /// Classes with the smallest nonzero part transmit.
    SmallestPart,
    /// Classes hosted by the largest group size transmit; every class
    /// when the multicast group has no node there.
    LargestGroup,
    /// Every node transmits.
    All,
}

impl TransmitterRule {
    pub fn select(&self, types: &[MulticastType]) -> Selection {
        types
            .iter()
            .map(|s| {
                let all: Vec<usize> = (0..s.classes.len()).collect();
                match self {
                    TransmitterRule::All => all,
                    TransmitterRule::SmallestPart => {
                        let min = s.classes.iter().map(|c| c.part).min().unwrap_or(0);
                        all.into_iter()
                            .filter(|&c| s.classes[c].part == min)
                            .collect()
                    }
                    TransmitterRule::LargestGroup => {
                        let first: Vec<usize> = all
                            .iter()
                            .copied()
                            .filter(|&c| s.classes[c].unique_group == 0)
                            .collect();
                        if first.is_empty() {
                            all
                        } else {
                            first
                        }
                    }
                }
            })
            .collect()
    }
}

/// Multicast types with their transmitter selections, the resulting local
/// splitting rows and their LCM combination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub multicast_types: Vec<MulticastType>,
    /// Per multicast type, the packet type index requested by each class.
    pub involved: Vec<Vec<usize>>,
    pub fsrt: FsrTable,
    pub lcm: LcmSolution,
}

impl SplitPlan {
    pub fn new(
        q: &NodeGrouping,
        t: u32,
        packet_types: &[PacketType],
        selection: &[Vec<usize>],
    ) -> Result<Self, DesignError> {
        let bare = enumerate_multicast_types(q, t);
        if bare.len() != selection.len() {
            return Err(DesignError::SelectionLength {
                expected: bare.len(),
                got: selection.len(),
            });
        }
        let mut multicast_types = Vec::with_capacity(bare.len());
        let mut involved = Vec::with_capacity(bare.len());
        let mut rows = Vec::with_capacity(bare.len());
        for (s, sel) in bare.into_iter().zip(selection) {
            let mut sel = sel.clone();
            sel.sort_unstable();
            sel.dedup();
            if let Some(&bad) = sel.iter().find(|&&c| c >= s.classes.len()) {
                return Err(DesignError::BadClass {
                    mtype: s.index,
                    class: bad,
                });
            }
            let s = s.with_transmitters(sel);
            let inv = involved_types(&s).indices(packet_types);
            rows.push(local_fsr(&s, &inv, packet_types.len())?);
            involved.push(inv);
            multicast_types.push(s);
        }
        let lcm = lcm_vector(&rows).ok_or(DesignError::NoLcm)?;
        let lcm = if rows.is_empty() {
            LcmSolution {
                alpha: vec![0; packet_types.len()],
                ..lcm
            }
        } else {
            lcm
        };
        Ok(SplitPlan {
            multicast_types,
            involved,
            fsrt: FsrTable::new(rows, packet_types.len()),
            lcm,
        })
    }

    pub fn alpha(&self) -> &[u64] {
        &self.lcm.alpha
    }

    /// Multicast types that would have to deliver packets of a dropped type.
    pub fn wasteful_rows(&self) -> Vec<usize> {
        self.lcm.wasteful_rows(&self.fsrt.rows)
    }

    pub fn selection(&self) -> Selection {
        self.multicast_types
            .iter()
            .map(|s| s.transmitters.clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gains {
    pub raw_subfile_saving: BigUint,
    pub raw_packet_saving: BigUint,
    /// Signed: an LCM scaling can push a ratio above `t`.
    pub splitting_gain: BigInt,
}

impl Gains {
    pub fn compute(t: u32, alpha: &[u64], raw_counts: &[BigUint]) -> Gains {
        let excluded: BigUint = alpha
            .iter()
            .zip(raw_counts)
            .filter(|(&a, _)| a == 0)
            .map(|(_, c)| c.clone())
            .sum();
        let splitting_gain = alpha
            .iter()
            .zip(raw_counts)
            .filter(|(&a, _)| a > 0)
            .map(|(&a, c)| (BigInt::from(t) - BigInt::from(a)) * BigInt::from(c.clone()))
            .sum();
        Gains {
            raw_subfile_saving: excluded.clone(),
            raw_packet_saving: excluded * t,
            splitting_gain,
        }
    }

    pub fn total(&self) -> BigInt {
        BigInt::from(self.raw_packet_saving.clone()) + &self.splitting_gain
    }
}

/// A complete equal-length design.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PtbDesign {
    pub k: u32,
    pub t: u32,
    pub library: Option<Library>,
    pub grouping: NodeGrouping,
    pub packet_types: Vec<PacketType>,
    pub plan: SplitPlan,
    pub raw_counts: Vec<BigUint>,
    pub memory: MemoryTable,
    pub f: BigUint,
    pub f_jcm: BigUint,
}

impl PtbDesign {
    /// Builds the design and checks that every node caches the same amount.
    /// Wasteful rows are left for the scheme validator to reject.
    pub fn build(
        k: u32,
        t: u32,
        grouping: NodeGrouping,
        selection: &[Vec<usize>],
    ) -> Result<Self, DesignError> {
        let d = Self::build_unchecked(k, t, grouping, selection)?;
        if !memory_check(d.alpha(), &d.memory)? {
            return Err(DesignError::MemoryImbalance);
        }
        Ok(d)
    }

    /// Same as [`PtbDesign::build`] without the memory balance check.
    pub fn build_unchecked(
        k: u32,
        t: u32,
        grouping: NodeGrouping,
        selection: &[Vec<usize>],
    ) -> Result<Self, DesignError> {
        check_degenerate(k, t)?;
        if grouping.k() != k {
            return Err(DesignError::GroupingSize {
                k,
                got: grouping.k(),
            });
        }
        let packet_types = enumerate_packet_types(&grouping, t);
        let plan = SplitPlan::new(&grouping, t, &packet_types, selection)?;
        let raw_counts: Vec<BigUint> = packet_types
            .iter()
            .map(|v| count_shape(&v.shape, &grouping))
            .collect();
        let memory = MemoryTable::new(&grouping, &packet_types);
        let f = subpacketization(plan.alpha(), &raw_counts);
        Ok(PtbDesign {
            k,
            t,
            library: None,
            grouping,
            packet_types,
            plan,
            raw_counts,
            memory,
            f,
            f_jcm: jcm_subpacketization(k, t),
        })
    }

    pub fn from_rule(
        k: u32,
        t: u32,
        grouping: NodeGrouping,
        rule: TransmitterRule,
    ) -> Result<Self, DesignError> {
        let selection = rule.select(&enumerate_multicast_types(&grouping, t));
        Self::build(k, t, grouping, &selection)
    }

    /// Attaches `(N, M)`; `t` must equal `KM/N`.
    pub fn with_library(mut self, n: u32, m: u32) -> Result<Self, DesignError> {
        let lib = Library { n, m };
        if lib.replication(self.k)? != self.t {
            return Err(DesignError::Dimension(format!(
                "K*M/N = {} does not match t = {}",
                self.k * m / n,
                self.t
            )));
        }
        self.library = Some(lib);
        Ok(self)
    }

    pub fn alpha(&self) -> &[u64] {
        self.plan.alpha()
    }

    pub fn t_bar(&self) -> u32 {
        self.k - self.t
    }

    pub fn kept_raw_count(&self) -> BigUint {
        self.alpha()
            .iter()
            .zip(&self.raw_counts)
            .filter(|(&a, _)| a > 0)
            .map(|(_, c)| c.clone())
            .sum()
    }

    pub fn gains(&self) -> Gains {
        Gains::compute(self.t, self.alpha(), &self.raw_counts)
    }

    /// `F / F^JCM`.
    pub fn ratio(&self) -> BigRational {
        BigRational::new(self.f.clone().into(), self.f_jcm.clone().into())
    }

    pub fn ratio_f64(&self) -> f64 {
        self.ratio().to_f64().unwrap_or(f64::NAN)
    }
}

pub fn jcm_subpacketization(k: u32, t: u32) -> BigUint {
    binomial(k, t) * t
}

/// The baseline: every node is its own group and every node transmits.
pub fn jcm_design(k: u32, t: u32) -> Result<PtbDesign, DesignError> {
    check_degenerate(k, t)?;
    PtbDesign::from_rule(k, t, NodeGrouping::singleton(k), TransmitterRule::All)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jcm_values() {
        assert_eq!(jcm_design(9, 6).unwrap().f, BigUint::from(504u32));
        assert_eq!(jcm_design(8, 6).unwrap().f, BigUint::from(168u32));
        assert_eq!(jcm_design(2, 1).unwrap().f, BigUint::from(2u32));
        let d = jcm_design(7, 3).unwrap();
        assert_eq!(d.alpha(), &[3]);
        assert_eq!(d.plan.multicast_types[0].transmitters, vec![0]);
        let g = d.gains();
        assert_eq!(g.raw_subfile_saving, BigUint::from(0u32));
        assert_eq!(g.raw_packet_saving, BigUint::from(0u32));
        assert_eq!(g.splitting_gain, BigInt::from(0));
    }

    #[test]
    fn degenerate_rejected() {
        assert_eq!(
            jcm_design(5, 0).unwrap_err(),
            DesignError::Degenerate { k: 5, t: 0 }
        );
        assert_eq!(
            jcm_design(5, 5).unwrap_err(),
            DesignError::Degenerate { k: 5, t: 5 }
        );
        assert!(matches!(
            Library { n: 3, m: 1 }.replication(4),
            Err(DesignError::NonIntegralT { .. })
        ));
        assert_eq!(Library { n: 3, m: 2 }.replication(9), Ok(6));
    }

    #[test]
    fn worked_example_design() {
        let q = NodeGrouping::equal(9, 3).unwrap();
        let d = PtbDesign::build(9, 6, q, &[vec![1], vec![1]])
            .unwrap()
            .with_library(3, 2)
            .unwrap();
        assert_eq!(d.alpha(), &[0, 3, 4]);
        assert_eq!(d.f, BigUint::from(270u32));
        assert_eq!(d.kept_raw_count(), BigUint::from(81u32));
        let g = d.gains();
        assert_eq!(g.raw_subfile_saving, BigUint::from(3u32));
        assert_eq!(g.raw_packet_saving, BigUint::from(18u32));
        assert_eq!(g.splitting_gain, BigInt::from(216));
        assert_eq!(g.total(), BigInt::from(234));
        assert!(d.plan.wasteful_rows().is_empty());
    }

    #[test]
    fn selection_errors() {
        let q = NodeGrouping::equal(9, 3).unwrap();
        assert!(matches!(
            PtbDesign::build(9, 6, q.clone(), &[vec![1]]),
            Err(DesignError::SelectionLength { .. })
        ));
        assert!(matches!(
            PtbDesign::build(9, 6, q.clone(), &[vec![5], vec![1]]),
            Err(DesignError::BadClass { .. })
        ));
        assert!(matches!(
            PtbDesign::build(9, 6, q, &[vec![], vec![1]]),
            Err(DesignError::EmptyTransmitters(0))
        ));
    }
}
