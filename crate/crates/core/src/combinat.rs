//! Integer partitions, node groupings and raw-packet counting.
//!
//! Everything in this module is exact: counts are `BigUint` because the
//! binomials involved overflow 64 bits well inside the parameter ranges a
//! sweep touches.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CombinatError {
    #[error("partition {0} cannot be embedded in grouping {1}")]
    InvalidType(PartitionVector, PartitionVector),
    #[error("unique group index {index} out of range (grouping has {len})")]
    GroupIndex { index: usize, len: usize },
    #[error("invalid grouping: {0}")]
    InvalidGrouping(String),
}

/// A non-increasing sequence of non-negative integers. Trailing zeros are
/// kept for display width but never count as parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartitionVector {
    parts: Vec<u32>,
}

impl PartitionVector {
    /// Builds a partition from arbitrary parts; they are sorted non-increasing.
    pub fn new(mut parts: Vec<u32>) -> Self {
        parts.sort_unstable_by(|a, b| b.cmp(a));
        PartitionVector { parts }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn total(&self) -> u32 {
        self.parts.iter().sum()
    }

    /// Number of nonzero parts.
    pub fn num_parts(&self) -> usize {
        self.parts.iter().take_while(|&&p| p > 0).count()
    }

    pub fn nonzero(&self) -> &[u32] {
        &self.parts[..self.num_parts()]
    }

    /// Same partition padded (or trimmed of zeros) to `width` entries.
    pub fn padded(&self, width: usize) -> PartitionVector {
        let mut parts = self.nonzero().to_vec();
        if parts.len() < width {
            parts.resize(width, 0);
        }
        PartitionVector { parts }
    }
}

impl fmt::Display for PartitionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, &self.parts)
    }
}

fn write_tuple(f: &mut fmt::Formatter<'_>, parts: &[u32]) -> fmt::Result {
    write!(f, "(")?;
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{p}")?;
    }
    write!(f, ")")
}

/// All partitions of `n` with parts at most `max_part` and at most
/// `max_parts` nonzero parts, zero-padded to `max_parts` entries, in
/// descending lexicographic order.
pub fn partitions(n: u32, max_part: u32, max_parts: usize) -> Vec<PartitionVector> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(max_parts);
    fill_partitions(n, max_part, max_parts, &mut cur, &mut out);
    out
}

fn fill_partitions(
    rest: u32,
    cap: u32,
    slots: usize,
    cur: &mut Vec<u32>,
    out: &mut Vec<PartitionVector>,
) {
    if rest == 0 {
        let mut parts = cur.clone();
        parts.resize(parts.len() + slots, 0);
        out.push(PartitionVector { parts });
        return;
    }
    if slots == 0 || (cap as u64) * (slots as u64) < rest as u64 {
        return;
    }
    for p in (1..=cap.min(rest)).rev() {
        cur.push(p);
        fill_partitions(rest - p, p, slots - 1, cur, out);
        cur.pop();
    }
}

/// `ψ_i` groups of `β_i` nodes each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UniqueGroup {
    pub size: u32,
    pub count: u32,
}

impl UniqueGroup {
    pub fn nodes(&self) -> u32 {
        self.size * self.count
    }
}

/// A partition of the `K` users into groups. Groups of equal size form a
/// unique group; unique groups are ordered by decreasing group size.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeGrouping {
    partition: PartitionVector,
    unique: Vec<UniqueGroup>,
}

impl NodeGrouping {
    pub fn new(parts: &[u32]) -> Result<Self, CombinatError> {
        let partition = PartitionVector::new(parts.iter().copied().filter(|&p| p > 0).collect());
        if partition.num_parts() == 0 {
            return Err(CombinatError::InvalidGrouping(
                "grouping has no users".into(),
            ));
        }
        let mut unique: Vec<UniqueGroup> = Vec::new();
        for &p in partition.nonzero() {
            match unique.last_mut() {
                Some(u) if u.size == p => u.count += 1,
                _ => unique.push(UniqueGroup { size: p, count: 1 }),
            }
        }
        Ok(NodeGrouping { partition, unique })
    }

    pub fn from_partition(p: &PartitionVector) -> Result<Self, CombinatError> {
        Self::new(p.parts())
    }

    /// `(1,1,…,1)`: every user is its own group.
    pub fn singleton(k: u32) -> Self {
        Self::new(&vec![1; k as usize]).expect("k >= 1")
    }

    /// `k / size` groups of `size` users.
    pub fn equal(k: u32, size: u32) -> Result<Self, CombinatError> {
        if size == 0 || !k.is_multiple_of(size) {
            return Err(CombinatError::InvalidGrouping(format!(
                "{k} users cannot be split into groups of {size}"
            )));
        }
        Self::new(&vec![size; (k / size) as usize])
    }

    pub fn k(&self) -> u32 {
        self.partition.total()
    }

    pub fn partition(&self) -> &PartitionVector {
        &self.partition
    }

    pub fn unique_groups(&self) -> &[UniqueGroup] {
        &self.unique
    }

    pub fn num_unique(&self) -> usize {
        self.unique.len()
    }

    pub fn num_groups(&self) -> usize {
        self.partition.num_parts()
    }

    pub fn is_equal(&self) -> bool {
        self.unique.len() == 1
    }

    /// Group sizes in canonical order.
    pub fn group_sizes(&self) -> &[u32] {
        self.partition.nonzero()
    }
}

impl fmt::Display for NodeGrouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, self.group_sizes())
    }
}

/// How a node set meets a grouping: for every unique group, the sorted
/// intersection sizes with its member groups (zero-padded to `ψ_i`).
///
/// Under an equal grouping this carries the same information as the sorted
/// partition. Under an unequal grouping it also records which group size
/// hosts each part, so `(0,2)` and `(2,0)` on `(4,3)` stay distinct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeShape {
    blocks: Vec<Vec<u32>>,
}

impl TypeShape {
    /// Builds a shape from per-unique-group intersection sizes; each block is
    /// sorted non-increasing.
    pub fn from_blocks(mut blocks: Vec<Vec<u32>>) -> Self {
        for b in &mut blocks {
            b.sort_unstable_by(|a, b| b.cmp(a));
        }
        TypeShape { blocks }
    }

    pub fn blocks(&self) -> &[Vec<u32>] {
        &self.blocks
    }

    pub fn total(&self) -> u32 {
        self.blocks.iter().flatten().sum()
    }

    /// Nodes the shape places inside unique group `i`.
    pub fn block_sum(&self, i: usize) -> u32 {
        self.blocks[i].iter().sum()
    }

    /// Parts laid out in grouping order, one block per unique group, for
    /// example `(0,2)` vs `(2,0)` on an unequal grouping.
    pub fn aligned(&self) -> Vec<u32> {
        self.blocks.iter().flatten().copied().collect()
    }

    pub fn sorted(&self) -> PartitionVector {
        PartitionVector::new(self.aligned())
    }

    pub fn fits(&self, q: &NodeGrouping) -> bool {
        self.blocks.len() == q.num_unique()
            && self
                .blocks
                .iter()
                .zip(q.unique_groups())
                .all(|(b, u)| b.len() == u.count as usize && b.iter().all(|&p| p <= u.size))
    }
}

impl fmt::Display for TypeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, &self.aligned())
    }
}

/// Every shape of `total` nodes that fits `q`, in descending lexicographic
/// order of the aligned vector.
pub fn shapes(total: u32, q: &NodeGrouping) -> Vec<TypeShape> {
    let mut out = Vec::new();
    let mut blocks = Vec::with_capacity(q.num_unique());
    fill_shapes(total, q.unique_groups(), &mut blocks, &mut out);
    out.sort_by_key(|s| std::cmp::Reverse(s.aligned()));
    out
}

fn fill_shapes(
    rest: u32,
    groups: &[UniqueGroup],
    blocks: &mut Vec<Vec<u32>>,
    out: &mut Vec<TypeShape>,
) {
    let Some((head, tail)) = groups.split_first() else {
        if rest == 0 {
            out.push(TypeShape {
                blocks: blocks.clone(),
            });
        }
        return;
    };
    let tail_cap: u32 = tail.iter().map(UniqueGroup::nodes).sum();
    let lo = rest.saturating_sub(tail_cap);
    let hi = rest.min(head.nodes());
    for here in lo..=hi {
        for p in partitions(here, head.size, head.count as usize) {
            blocks.push(p.parts().to_vec());
            fill_shapes(rest - here, tail, blocks, out);
            blocks.pop();
        }
    }
}

pub fn binomial(n: u32, k: u32) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn factorial(n: u32) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// Number of node sets with exactly this shape.
///
/// Within unique group `i` the parts can be assigned to the `ψ_i` groups in
/// `ψ_i! / Π mult!` distinct ways, and a part `p` picks its nodes in
/// `C(β_i, p)` ways.
pub fn count_shape(shape: &TypeShape, q: &NodeGrouping) -> BigUint {
    debug_assert!(shape.fits(q));
    let mut acc = BigUint::one();
    for (block, u) in shape.blocks().iter().zip(q.unique_groups()) {
        let mut arrangements = factorial(u.count);
        let mut i = 0;
        while i < block.len() {
            let run = block[i..].iter().take_while(|&&p| p == block[i]).count();
            arrangements /= factorial(run as u32);
            i += run;
        }
        acc *= arrangements;
        for &p in block {
            acc *= binomial(u.size, p);
        }
    }
    acc
}

/// Node sets of this shape that contain one fixed node of unique group `i`.
/// The shape puts `n_i` of its nodes among the `β_i ψ_i` nodes of that
/// unique group, and by symmetry every such node is covered equally often.
pub fn count_shape_through(
    shape: &TypeShape,
    q: &NodeGrouping,
    i: usize,
) -> Result<BigUint, CombinatError> {
    let u = q.unique_groups().get(i).ok_or(CombinatError::GroupIndex {
        index: i,
        len: q.num_unique(),
    })?;
    Ok(count_shape(shape, q) * shape.block_sum(i) / u.nodes())
}

fn embeddings(v: &PartitionVector, q: &NodeGrouping) -> Result<Vec<TypeShape>, CombinatError> {
    let target = v.padded(0);
    let found: Vec<TypeShape> = shapes(v.total(), q)
        .into_iter()
        .filter(|s| s.sorted().padded(0) == target)
        .collect();
    if found.is_empty() {
        return Err(CombinatError::InvalidType(v.clone(), q.partition().clone()));
    }
    Ok(found)
}

/// Number of `|v|`-subsets of users whose sorted intersection sizes with
/// the groups of `q` equal `v`.
pub fn count_raw_packets(v: &PartitionVector, q: &NodeGrouping) -> Result<BigUint, CombinatError> {
    Ok(embeddings(v, q)?.iter().map(|s| count_shape(s, q)).sum())
}

/// Raw packets of sorted type `v` cached by one fixed node of unique group `i`.
pub fn count_cached_by_node(
    v: &PartitionVector,
    q: &NodeGrouping,
    i: usize,
) -> Result<BigUint, CombinatError> {
    if i >= q.num_unique() {
        return Err(CombinatError::GroupIndex {
            index: i,
            len: q.num_unique(),
        });
    }
    embeddings(v, q)?
        .iter()
        .map(|s| count_shape_through(s, q, i))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(p: &[u32]) -> PartitionVector {
        PartitionVector::new(p.to_vec())
    }

    #[test]
    fn partitions_of_six_into_three_parts_of_three() {
        let got = partitions(6, 3, 3);
        assert_eq!(got, vec![pv(&[3, 3, 0]), pv(&[3, 2, 1]), pv(&[2, 2, 2])]);
    }

    #[test]
    fn empty_partition() {
        let got = partitions(0, 4, 2);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].num_parts(), 0);
    }

    #[test]
    fn infeasible_partition_is_empty() {
        assert!(partitions(7, 2, 3).is_empty());
    }

    #[test]
    fn grouping_unique_groups() {
        let q = NodeGrouping::new(&[3, 2, 1, 1]).unwrap();
        assert_eq!(q.k(), 7);
        assert_eq!(q.num_groups(), 4);
        assert_eq!(
            q.unique_groups(),
            &[
                UniqueGroup { size: 3, count: 1 },
                UniqueGroup { size: 2, count: 1 },
                UniqueGroup { size: 1, count: 2 }
            ]
        );
        assert!(NodeGrouping::new(&[]).is_err());
        assert!(NodeGrouping::equal(7, 2).is_err());
    }

    #[test]
    fn worked_example_counts() {
        let q = NodeGrouping::equal(9, 3).unwrap();
        assert_eq!(
            count_raw_packets(&pv(&[2, 2, 2]), &q).unwrap(),
            BigUint::from(27u32)
        );
        assert_eq!(
            count_raw_packets(&pv(&[3, 2, 1]), &q).unwrap(),
            BigUint::from(54u32)
        );
        assert_eq!(
            count_raw_packets(&pv(&[3, 3, 0]), &q).unwrap(),
            BigUint::from(3u32)
        );
        assert_eq!(
            count_cached_by_node(&pv(&[2, 2, 2]), &q, 0).unwrap(),
            BigUint::from(18u32)
        );
        assert_eq!(
            count_cached_by_node(&pv(&[3, 2, 1]), &q, 0).unwrap(),
            BigUint::from(36u32)
        );
    }

    #[test]
    fn single_group_and_singletons() {
        let q = NodeGrouping::new(&[10]).unwrap();
        assert_eq!(count_raw_packets(&pv(&[4]), &q).unwrap(), binomial(10, 4));
        assert_eq!(
            count_cached_by_node(&pv(&[4]), &q, 0).unwrap(),
            binomial(9, 3)
        );
        let ones = NodeGrouping::singleton(9);
        assert_eq!(
            count_raw_packets(&pv(&[1; 6]), &ones).unwrap(),
            binomial(9, 6)
        );
    }

    #[test]
    fn invalid_type_and_bad_index() {
        let q = NodeGrouping::equal(9, 3).unwrap();
        assert!(matches!(
            count_raw_packets(&pv(&[4, 2]), &q),
            Err(CombinatError::InvalidType(..))
        ));
        assert!(matches!(
            count_cached_by_node(&pv(&[2, 2, 2]), &q, 1),
            Err(CombinatError::GroupIndex { index: 1, len: 1 })
        ));
    }

    #[test]
    fn shapes_on_unequal_grouping_keep_host_sizes() {
        let q = NodeGrouping::new(&[4, 3]).unwrap();
        let got: Vec<Vec<u32>> = shapes(2, &q).iter().map(TypeShape::aligned).collect();
        assert_eq!(got, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        let counts: Vec<BigUint> = shapes(2, &q).iter().map(|s| count_shape(s, &q)).collect();
        assert_eq!(counts, vec![6u32.into(), 12u32.into(), 3u32.into()]);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(9, 6), BigUint::from(84u32));
        assert_eq!(binomial(3, 5), BigUint::zero());
        assert_eq!(
            binomial(100, 50).to_string(),
            "100891344545564193334812497256"
        );
    }
}
