use num_bigint::{BigInt, BigUint};
use num_traits::Zero;

use super::{DesignError, PacketType};
use crate::combinat::{count_shape_through, NodeGrouping};

/// Raw packets of each type cached by one node of each unique group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryTable {
    pub rows: Vec<Vec<BigUint>>,
}

impl MemoryTable {
    pub fn new(q: &NodeGrouping, types: &[PacketType]) -> Self {
        let rows = (0..q.num_unique())
            .map(|i| {
                types
                    .iter()
                    .map(|v| count_shape_through(&v.shape, q, i).expect("unique group in range"))
                    .collect()
            })
            .collect();
        MemoryTable { rows }
    }

    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }

    /// `ΔF_i = F_{i+1} - F_i`.
    pub fn deltas(&self) -> Vec<Vec<BigInt>> {
        self.rows
            .windows(2)
            .map(|w| {
                w[1].iter()
                    .zip(&w[0])
                    .map(|(b, a)| BigInt::from(b.clone()) - BigInt::from(a.clone()))
                    .collect()
            })
            .collect()
    }

    /// Packets cached per file by a node of each unique group.
    pub fn cached_packets(&self, alpha: &[u64]) -> Vec<BigUint> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(alpha).map(|(c, &a)| c * a).sum())
            .collect()
    }
}

/// True iff every node caches the same number of packets under `alpha`.
pub fn memory_check(alpha: &[u64], mct: &MemoryTable) -> Result<bool, DesignError> {
    if mct.width() != alpha.len() && !mct.rows.is_empty() {
        return Err(DesignError::Dimension(format!(
            "splitting vector has {} entries, memory table {}",
            alpha.len(),
            mct.width()
        )));
    }
    Ok(mct.deltas().iter().all(|d| {
        d.iter()
            .zip(alpha)
            .map(|(x, &a)| x * BigInt::from(a))
            .sum::<BigInt>()
            .is_zero()
    }))
}

pub fn subpacketization(alpha: &[u64], raw_counts: &[BigUint]) -> BigUint {
    assert_eq!(
        alpha.len(),
        raw_counts.len(),
        "splitting vector and counts differ in length"
    );
    alpha.iter().zip(raw_counts).map(|(&a, c)| c * a).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::enumerate_packet_types;

    fn big(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn worked_example_total() {
        assert_eq!(
            subpacketization(&[4, 3, 0], &big(&[27, 54, 3])),
            BigUint::from(270u32)
        );
        assert_eq!(subpacketization(&[0, 0], &big(&[5, 7])), BigUint::zero());
    }

    #[test]
    fn equal_grouping_always_balanced() {
        let q = NodeGrouping::equal(9, 3).unwrap();
        let types = enumerate_packet_types(&q, 6);
        let m = MemoryTable::new(&q, &types);
        assert!(m.deltas().is_empty());
        assert!(memory_check(&[0, 3, 4], &m).unwrap());
        assert_eq!(m.cached_packets(&[0, 3, 4]), big(&[180]));
    }

    #[test]
    fn unequal_grouping_imbalance() {
        let q = NodeGrouping::new(&[5, 4]).unwrap();
        let types = enumerate_packet_types(&q, 2);
        let m = MemoryTable::new(&q, &types);
        // Types (2,0), (1,1), (0,2): a node in the group of 5 sits in 4, 4, 0
        // of them; a node in the group of 4 in 0, 5, 3.
        assert_eq!(m.rows, vec![big(&[4, 4, 0]), big(&[0, 5, 3])]);
        assert!(!memory_check(&[0, 1, 0], &m).unwrap());
        assert!(memory_check(&[0, 0, 0], &m).unwrap());
        assert!(matches!(
            memory_check(&[1, 1], &m),
            Err(DesignError::Dimension(_))
        ));
    }
}
