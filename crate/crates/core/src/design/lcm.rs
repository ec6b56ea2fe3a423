use std::collections::VecDeque;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// One local splitting row: `None` where the multicast type never touches
/// the packet type.
pub type FsrRow = Vec<Option<u64>>;

/// Rows of local splitting vectors, one per multicast type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FsrTable {
    pub rows: Vec<FsrRow>,
    pub width: usize,
}

impl FsrTable {
    pub fn new(rows: Vec<FsrRow>, width: usize) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == width));
        FsrTable { rows, width }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LcmSolution {
    /// `z_i`; rows that constrain nothing keep `1`.
    pub scalars: Vec<u64>,
    pub alpha: Vec<u64>,
    /// Whether the row touches a kept packet type. Inactive rows carry no
    /// delivery.
    pub active: Vec<bool>,
}

impl LcmSolution {
    /// Packet types kept by the design (positive splitting ratio).
    pub fn kept(&self) -> Vec<bool> {
        self.alpha.iter().map(|&a| a > 0).collect()
    }

    /// Rows whose multicast groups would serve a receiver whose packet
    /// type has been dropped. Delivery for such a row cannot match the
    /// splits of the kept types without sending more than needed.
    pub fn wasteful_rows(&self, rows: &[FsrRow]) -> Vec<usize> {
        rows.iter()
            .enumerate()
            .filter(|(i, row)| {
                self.active[*i]
                    && row
                        .iter()
                        .zip(&self.alpha)
                        .any(|(e, &a)| matches!(e, Some(x) if *x > 0) && a == 0)
            })
            .map(|(i, _)| i)
            .collect()
    }
}

/// Combines local rows into one splitting vector.
///
/// A zero anywhere in a column drops that packet type from the design.
/// The positive entries that remain must agree after scaling each row by
/// `z_i`; the scalars are propagated as exact rationals over the graph of
/// rows that share a column and reduced to the smallest integers per
/// connected component. Returns `None` when a cycle of constraints is
/// inconsistent or a scaled entry exceeds 64 bits.
pub fn lcm_vector(rows: &[FsrRow]) -> Option<LcmSolution> {
    let width = rows.first().map_or(0, |r| r.len());
    let excluded: Vec<bool> = (0..width)
        .map(|j| rows.iter().any(|r| r[j] == Some(0)))
        .collect();
    let links: Vec<Vec<(usize, u64)>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter_map(|(j, e)| match e {
                    Some(a) if *a > 0 && !excluded[j] => Some((j, *a)),
                    _ => None,
                })
                .collect()
        })
        .collect();
    let mut by_column: Vec<Vec<(usize, u64)>> = vec![Vec::new(); width];
    for (i, l) in links.iter().enumerate() {
        for &(j, a) in l {
            by_column[j].push((i, a));
        }
    }

    let mut z: Vec<Option<BigRational>> = vec![None; rows.len()];
    let mut scalars = vec![1u64; rows.len()];
    for start in 0..rows.len() {
        if z[start].is_some() || links[start].is_empty() {
            continue;
        }
        z[start] = Some(BigRational::one());
        let mut component = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let zi = z[i].clone().expect("queued rows are assigned");
            for &(j, a) in &links[i] {
                let value = &zi * BigRational::from_integer(BigInt::from(a));
                for &(other, b) in &by_column[j] {
                    let want = &value / BigRational::from_integer(BigInt::from(b));
                    match &z[other] {
                        Some(existing) if *existing != want => return None,
                        Some(_) => {}
                        None => {
                            z[other] = Some(want);
                            component.push(other);
                            queue.push_back(other);
                        }
                    }
                }
            }
        }
        let denom = component.iter().fold(BigInt::one(), |acc, &i| {
            acc.lcm(z[i].as_ref().unwrap().denom())
        });
        let ints: Vec<BigInt> = component
            .iter()
            .map(|&i| {
                (z[i].as_ref().unwrap() * BigRational::from_integer(denom.clone())).to_integer()
            })
            .collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
        for (&i, v) in component.iter().zip(&ints) {
            scalars[i] = (v / &g).to_u64()?;
        }
    }

    let mut alpha = vec![0u64; width];
    for j in 0..width {
        if excluded[j] {
            continue;
        }
        if let Some(&(i, a)) = by_column[j].first() {
            alpha[j] = scalars[i].checked_mul(a)?;
        }
    }
    let active = links.iter().map(|l| !l.is_empty()).collect();
    Some(LcmSolution {
        scalars,
        alpha,
        active,
    })
}
