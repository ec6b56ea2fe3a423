//! Concrete placement and XOR delivery for a design, and the validator that
//! decodes every user bit by bit.
//!
//! Users are `0..K` and node sets are bitmasks, so `K <= 64`.

use std::collections::{HashMap, HashSet};

use bitvec::prelude::*;
use itertools::Itertools;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::combinat::{NodeGrouping, TypeShape};
use crate::design::{json::rational_string, Design, DesignError, Library};

pub type Bits = BitVec<u64, Lsb0>;
pub type NodeSet = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemeError {
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error("K = {0} exceeds the 64-user limit")]
    TooManyUsers(u32),
    #[error("file size {file_bits} bits is not a positive multiple of {minimal}; the smallest valid size is {minimal} bits")]
    Divisibility { file_bits: u64, minimal: BigUint },
    #[error("node assignment: {0}")]
    Assignment(String),
    #[error("demand: {0}")]
    Demand(String),
    #[error("multicast type {mtype} cannot be scheduled: {reason}")]
    Infeasible { mtype: String, reason: String },
}

pub fn members(set: NodeSet) -> impl Iterator<Item = usize> {
    (0..64).filter(move |&i| set >> i & 1 == 1)
}

fn mask(users: &[usize]) -> NodeSet {
    users.iter().fold(0, |m, &u| m | 1 << u)
}

/// Which users form which group of the grouping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeAssignment {
    groups: Vec<Vec<usize>>,
    group_of: Vec<usize>,
    unique_of: Vec<usize>,
}

impl NodeAssignment {
    /// Groups take consecutive users in the grouping's (non-increasing) order.
    pub fn canonical(q: &NodeGrouping) -> Self {
        let mut next = 0;
        let groups = q
            .group_sizes()
            .iter()
            .map(|&s| {
                let g: Vec<usize> = (next..next + s as usize).collect();
                next += s as usize;
                g
            })
            .collect();
        Self::from_groups(q, groups).expect("canonical assignment is valid")
    }

    /// Groups listed in the grouping's order of sizes.
    pub fn from_groups(q: &NodeGrouping, groups: Vec<Vec<usize>>) -> Result<Self, SchemeError> {
        let k = q.k() as usize;
        let sizes = q.group_sizes();
        if groups.len() != sizes.len() {
            return Err(SchemeError::Assignment(format!(
                "expected {} groups, got {}",
                sizes.len(),
                groups.len()
            )));
        }
        let mut group_of = vec![usize::MAX; k];
        let mut unique_of = Vec::with_capacity(groups.len());
        for (gi, (g, &size)) in groups.iter().zip(sizes).enumerate() {
            if g.len() != size as usize {
                return Err(SchemeError::Assignment(format!(
                    "group {gi} should have {size} users"
                )));
            }
            for &u in g {
                if u >= k || group_of[u] != usize::MAX {
                    return Err(SchemeError::Assignment(format!(
                        "user {u} is out of range or repeated"
                    )));
                }
                group_of[u] = gi;
            }
            let unique = q
                .unique_groups()
                .iter()
                .position(|ug| ug.size == size)
                .expect("group size belongs to a unique group");
            unique_of.push(unique);
        }
        Ok(NodeAssignment {
            groups,
            group_of,
            unique_of,
        })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_of(&self, user: usize) -> usize {
        self.group_of[user]
    }

    /// Shape of a node set: per unique group, how many of its members each
    /// group contributes.
    pub fn shape(&self, set: NodeSet, num_unique: usize) -> TypeShape {
        let mut counts = vec![0u32; self.groups.len()];
        for u in members(set) {
            counts[self.group_of[u]] += 1;
        }
        let mut blocks = vec![Vec::new(); num_unique];
        for (g, c) in counts.into_iter().enumerate() {
            blocks[self.unique_of[g]].push(c);
        }
        TypeShape::from_blocks(blocks)
    }

    /// (unique group, part) of `user` inside `set`.
    fn class_key(&self, set: NodeSet, user: usize) -> (usize, u32) {
        let g = self.group_of[user];
        let part = self.groups[g]
            .iter()
            .filter(|&&u| set >> u & 1 == 1)
            .count() as u32;
        (self.unique_of[g], part)
    }
}

/// One split of a raw packet of a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PacketId {
    pub file: u32,
    pub nodes: NodeSet,
    pub layer: u8,
    pub split: u32,
}

/// Position of one split inside every file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketSlot {
    pub nodes: NodeSet,
    pub type_index: usize,
    pub layer: u8,
    pub split: u32,
    pub offset: u64,
    pub len: u64,
}

/// The cut of a file into packets; identical for every file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileLayout {
    pub file_bits: u64,
    pub unit_bits: u64,
    /// Integer packet length of each layer, in units.
    pub layer_units: Vec<u64>,
    pub slots: Vec<PacketSlot>,
    index: HashMap<(NodeSet, u8, u32), usize>,
}

impl FileLayout {
    pub fn slot(&self, nodes: NodeSet, layer: u8, split: u32) -> Option<&PacketSlot> {
        self.index
            .get(&(nodes, layer, split))
            .map(|&i| &self.slots[i])
    }

    pub fn packet_bits(&self, layer: u8) -> u64 {
        self.layer_units[layer as usize] * self.unit_bits
    }
}

/// Units per file: `Σ_h ℓ_h · α^(h) · Fᵀ`.
pub fn file_units(design: &Design) -> BigUint {
    design
        .layers()
        .iter()
        .map(|(plan, len)| {
            plan.alpha()
                .iter()
                .zip(design.raw_counts())
                .map(|(&a, c)| c * a)
                .sum::<BigUint>()
                * len
        })
        .sum()
}

/// Smallest file size in bits for which every packet is a whole number of bits.
pub fn minimal_file_bits(design: &Design) -> BigUint {
    file_units(design)
}

/// What every user stores, as packet ids over all files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheContents {
    pub k: u32,
    pub t: u32,
    pub library: Library,
    pub assignment: NodeAssignment,
    pub layout: FileLayout,
    pub per_user: Vec<Vec<PacketId>>,
}

impl CacheContents {
    pub fn cached_bits(&self, user: usize) -> u64 {
        self.per_user[user]
            .iter()
            .map(|p| {
                self.layout
                    .slot(p.nodes, p.layer, p.split)
                    .map_or(0, |s| s.len)
            })
            .sum()
    }
}

pub fn build_placement(
    design: &Design,
    assignment: &NodeAssignment,
    n: u32,
    m: u32,
    file_bits: u64,
) -> Result<CacheContents, SchemeError> {
    let k = design.k();
    if k > 64 {
        return Err(SchemeError::TooManyUsers(k));
    }
    let library = Library { n, m };
    let t = library.replication(k)?;
    if t != design.t() {
        return Err(DesignError::Dimension(format!(
            "K*M/N = {t} but the design has t = {}",
            design.t()
        ))
        .into());
    }
    let units = file_units(design);
    let minimal = units.clone();
    if file_bits == 0 || units.is_zero() || BigUint::from(file_bits) % &units != BigUint::zero() {
        return Err(SchemeError::Divisibility { file_bits, minimal });
    }
    let unit_bits = file_bits / units.to_u64().expect("divides a u64");
    let layers = design.layers();
    let layer_units: Vec<u64> = layers
        .iter()
        .map(|(_, l)| l.to_u64().expect("small length"))
        .collect();
    let num_unique = design.grouping().num_unique();
    let shape_index: HashMap<&TypeShape, usize> = design
        .packet_types()
        .iter()
        .map(|v| (&v.shape, v.index))
        .collect();

    let mut slots = Vec::new();
    let mut offset = 0u64;
    for set in (0..k as usize).combinations(t as usize) {
        let nodes = mask(&set);
        let j = shape_index[&assignment.shape(nodes, num_unique)];
        for (h, (plan, _)) in layers.iter().enumerate() {
            let len = layer_units[h] * unit_bits;
            for split in 0..plan.alpha()[j] as u32 {
                slots.push(PacketSlot {
                    nodes,
                    type_index: j,
                    layer: h as u8,
                    split,
                    offset,
                    len,
                });
                offset += len;
            }
        }
    }
    debug_assert_eq!(offset, file_bits);
    let index = slots
        .iter()
        .enumerate()
        .map(|(i, s)| ((s.nodes, s.layer, s.split), i))
        .collect();
    let layout = FileLayout {
        file_bits,
        unit_bits,
        layer_units,
        slots,
        index,
    };

    let per_user = (0..k as usize)
        .map(|u| {
            (0..n)
                .flat_map(|file| {
                    layout
                        .slots
                        .iter()
                        .filter(move |s| s.nodes >> u & 1 == 1)
                        .map(move |s| PacketId {
                            file,
                            nodes: s.nodes,
                            layer: s.layer,
                            split: s.split,
                        })
                })
                .collect()
        })
        .collect();
    Ok(CacheContents {
        k,
        t,
        library,
        assignment: assignment.clone(),
        layout,
        per_user,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedMessage {
    pub sender: usize,
    /// `(receiver, packet)`: the receiver is the one user missing the packet.
    pub constituents: Vec<(usize, PacketId)>,
    pub length_bits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupInstance {
    pub nodes: NodeSet,
    pub layer: u8,
    pub mtype: usize,
    pub transmitters: Vec<usize>,
    pub rounds: u64,
    pub messages: Vec<CodedMessage>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliverySchedule {
    pub groups: Vec<GroupInstance>,
}

impl DeliverySchedule {
    pub fn messages(&self) -> impl Iterator<Item = (&GroupInstance, &CodedMessage)> {
        self.groups
            .iter()
            .flat_map(|g| g.messages.iter().map(move |m| (g, m)))
    }

    pub fn message_count(&self) -> usize {
        self.groups.iter().map(|g| g.messages.len()).sum()
    }

    pub fn total_bits(&self) -> u128 {
        self.messages().map(|(_, m)| m.length_bits as u128).sum()
    }

    /// One JSON record per message.
    pub fn audit_lines(&self) -> Vec<String> {
        self.messages()
            .map(|(g, m)| {
                let constituents: Vec<Value> = m
                    .constituents
                    .iter()
                    .map(|(r, p)| {
                        json!({
                            "receiver": r,
                            "file": p.file,
                            "nodes": members(p.nodes).collect::<Vec<_>>(),
                            "layer": p.layer,
                            "split": p.split,
                        })
                    })
                    .collect();
                json!({
                    "group": members(g.nodes).collect::<Vec<_>>(),
                    "sender": m.sender,
                    "constituents": constituents,
                    "length_bits": m.length_bits,
                })
                .to_string()
            })
            .collect()
    }

    /// The same schedule without one message (for completeness probes).
    pub fn without_message(&self, group: usize, message: usize) -> DeliverySchedule {
        let mut s = self.clone();
        s.groups[group].messages.remove(message);
        s
    }
}

fn check_demand(placement: &CacheContents, demand: &[u32]) -> Result<(), SchemeError> {
    if demand.len() != placement.k as usize {
        return Err(SchemeError::Demand(format!(
            "{} entries for {} users",
            demand.len(),
            placement.k
        )));
    }
    if let Some(&d) = demand.iter().find(|&&d| d >= placement.library.n) {
        return Err(SchemeError::Demand(format!(
            "file {d} does not exist (N = {})",
            placement.library.n
        )));
    }
    Ok(())
}

/// For every group of `t + 1` users and every layer, `z` rounds in which
/// each transmitter sends one XOR holding a fresh split for every other
/// member of the group.
///
/// In round `r` the transmitter at sorted position `p` of `n_x` carries
/// split `r·n_x + p` for a non-transmitter and split
/// `r·(n_x-1) + (p if p < p_k else p-1)` for the transmitter at `p_k`.
pub fn build_schedule(
    design: &Design,
    placement: &CacheContents,
    demand: &[u32],
) -> Result<DeliverySchedule, SchemeError> {
    check_demand(placement, demand)?;
    let k = design.k() as usize;
    let t = design.t() as usize;
    let num_unique = design.grouping().num_unique();
    let assignment = &placement.assignment;
    let layers = design.layers();
    let mut shape_to_mtype: HashMap<&TypeShape, usize> = HashMap::new();
    for s in &layers[0].0.multicast_types {
        shape_to_mtype.insert(&s.shape, s.index);
    }

    let mut groups = Vec::new();
    for set in (0..k).combinations(t + 1) {
        let nodes = mask(&set);
        let shape = assignment.shape(nodes, num_unique);
        let mi = shape_to_mtype[&shape];
        for (h, (plan, _)) in layers.iter().enumerate() {
            if !plan.lcm.active[mi] {
                continue;
            }
            let s = &plan.multicast_types[mi];
            let row = &plan.fsrt.rows[mi];
            let z = plan.lcm.scalars[mi];
            let infeasible = |reason: String| SchemeError::Infeasible {
                mtype: s.label(),
                reason,
            };
            let class_of = |u: usize| {
                let (ug, part) = assignment.class_key(nodes, u);
                s.classes
                    .iter()
                    .position(|c| c.unique_group == ug && c.part == part)
                    .expect("member class exists in its multicast type")
            };
            let transmitters: Vec<usize> = set
                .iter()
                .copied()
                .filter(|&u| s.is_transmitter_class(class_of(u)))
                .collect();
            let n_x = transmitters.len() as u64;
            // Receivers that get splits in this layer.
            let mut wants: Vec<(usize, Option<usize>)> = Vec::new();
            for &u in &set {
                let j = plan.involved[mi][class_of(u)];
                let local = row[j].expect("involved entries are filled");
                let alpha = plan.alpha()[j];
                if alpha == 0 {
                    if local > 0 {
                        return Err(infeasible(format!(
                            "a receiver needs {local} splits of a dropped packet type"
                        )));
                    }
                    continue;
                }
                if alpha != z * local {
                    return Err(infeasible(format!(
                        "{z} rounds deliver {} splits but the packet type has {alpha}",
                        z * local
                    )));
                }
                wants.push((u, transmitters.iter().position(|&x| x == u)));
            }
            let len = placement.layout.packet_bits(h as u8);
            let mut messages = Vec::with_capacity((z * n_x) as usize);
            for r in 0..z {
                for (p, &sender) in transmitters.iter().enumerate() {
                    let p = p as u64;
                    let constituents: Vec<(usize, PacketId)> = wants
                        .iter()
                        .filter(|(u, _)| *u != sender)
                        .map(|&(u, pos)| {
                            let split = match pos {
                                None => r * n_x + p,
                                Some(pk) => r * (n_x - 1) + if p < pk as u64 { p } else { p - 1 },
                            };
                            let pkt = PacketId {
                                file: demand[u],
                                nodes: nodes & !(1 << u),
                                layer: h as u8,
                                split: split as u32,
                            };
                            (u, pkt)
                        })
                        .collect();
                    if !constituents.is_empty() {
                        messages.push(CodedMessage {
                            sender,
                            constituents,
                            length_bits: len,
                        });
                    }
                }
            }
            groups.push(GroupInstance {
                nodes,
                layer: h as u8,
                mtype: mi,
                transmitters,
                rounds: z,
                messages,
            });
        }
    }
    Ok(DeliverySchedule { groups })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserVerdict {
    pub user: usize,
    pub file: u32,
    pub decoded: bool,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub per_user: Vec<UserVerdict>,
    /// Messages some receiver could not reduce to a single unknown, or whose
    /// sender lacked a constituent.
    pub audit_failures: Vec<String>,
    pub cached_bits: Vec<u64>,
    pub cache_ok: bool,
    pub messages: usize,
    pub bits: u128,
    pub rate: BigRational,
}

impl ValidationReport {
    pub fn all_decoded(&self) -> bool {
        self.per_user.iter().all(|v| v.decoded)
    }

    pub fn ok(&self) -> bool {
        self.all_decoded() && self.audit_failures.is_empty() && self.cache_ok
    }

    pub fn failed_users(&self) -> Vec<usize> {
        self.per_user
            .iter()
            .filter(|v| !v.decoded)
            .map(|v| v.user)
            .collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "per_user": self.per_user.iter().map(|v| json!({
                "user": v.user,
                "file": v.file,
                "decoded": v.decoded,
                "detail": v.detail,
            })).collect::<Vec<_>>(),
            "rate": rational_string(&self.rate),
            "messages": self.messages,
            "bits": self.bits.to_string().parse::<serde_json::Number>().expect("integer"),
            "cache_ok": self.cache_ok,
            "cached_bits": self.cached_bits,
            "audit_failures": self.audit_failures,
        })
    }
}

fn payload(files: &[Bits], layout: &FileLayout, p: &PacketId) -> Option<Bits> {
    let slot = layout.slot(p.nodes, p.layer, p.split)?;
    let f = files.get(p.file as usize)?;
    Some(f[slot.offset as usize..(slot.offset + slot.len) as usize].to_bitvec())
}

/// Replays the schedule on real file contents. Each user starts from its
/// cache, XORs away the constituents it holds, and must end with its file
/// reproduced exactly.
pub fn validate(
    placement: &CacheContents,
    schedule: &DeliverySchedule,
    demand: &[u32],
    files: &[Bits],
) -> ValidationReport {
    let layout = &placement.layout;
    let k = placement.k as usize;
    let caches: Vec<HashMap<PacketId, Bits>> = placement
        .per_user
        .par_iter()
        .map(|ids| {
            ids.iter()
                .filter_map(|p| payload(files, layout, p).map(|b| (*p, b)))
                .collect()
        })
        .collect();
    let cached_bits: Vec<u64> = (0..k).map(|u| placement.cached_bits(u)).collect();
    let lib = placement.library;
    let cache_ok = cached_bits
        .iter()
        .all(|&b| b as u128 == lib.m as u128 * layout.file_bits as u128);

    let mut audit_failures = Vec::new();
    // Transmitted payloads, computed from the sender's own cache.
    let mut sent: Vec<(usize, usize, Bits)> = Vec::new();
    for (gi, g) in schedule.groups.iter().enumerate() {
        for (mi, m) in g.messages.iter().enumerate() {
            let mut acc = bitvec![u64, Lsb0; 0; m.length_bits as usize];
            let mut ok = true;
            for (_, p) in &m.constituents {
                match caches[m.sender].get(p) {
                    Some(b) if b.len() == acc.len() => acc ^= b,
                    _ => ok = false,
                }
            }
            if !ok {
                audit_failures.push(format!(
                    "group {:?} sender {}: sender lacks a constituent",
                    members(g.nodes).collect::<Vec<_>>(),
                    m.sender
                ));
            }
            sent.push((gi, mi, acc));
        }
    }

    let results: Vec<(UserVerdict, Vec<String>)> = (0..k)
        .into_par_iter()
        .map(|u| {
            let mut failures = Vec::new();
            let mut decoded: HashMap<PacketId, Bits> = HashMap::new();
            for (gi, mi, bits) in &sent {
                let g = &schedule.groups[*gi];
                let m = &g.messages[*mi];
                if g.nodes >> u & 1 == 0 || m.sender == u {
                    continue;
                }
                let mut acc = bits.clone();
                let mut unknown: Vec<&PacketId> = Vec::new();
                for (_, p) in &m.constituents {
                    match caches[u].get(p) {
                        Some(b) => acc ^= b,
                        None => unknown.push(p),
                    }
                }
                match unknown.len() {
                    0 => {}
                    1 => {
                        if m.constituents
                            .iter()
                            .any(|(r, p)| *r == u && p == unknown[0])
                        {
                            decoded.insert(*unknown[0], acc);
                        } else {
                            failures
                                .push(format!("user {u} decodes a packet meant for someone else"));
                        }
                    }
                    n => failures.push(format!(
                        "user {u} cannot cancel {} of the constituents sent by {}",
                        n - 1,
                        m.sender
                    )),
                }
            }
            let file = demand[u];
            let mut rebuilt = bitvec![u64, Lsb0; 0; layout.file_bits as usize];
            let mut missing = 0usize;
            for s in &layout.slots {
                let id = PacketId {
                    file,
                    nodes: s.nodes,
                    layer: s.layer,
                    split: s.split,
                };
                let part = caches[u].get(&id).or_else(|| decoded.get(&id));
                match part {
                    Some(b) => rebuilt[s.offset as usize..(s.offset + s.len) as usize]
                        .copy_from_bitslice(b),
                    None => missing += 1,
                }
            }
            let detail = if missing > 0 {
                Some(format!("{missing} packets missing"))
            } else if files.get(file as usize) != Some(&rebuilt) {
                Some("reconstruction differs from the file".to_string())
            } else {
                None
            };
            (
                UserVerdict {
                    user: u,
                    file,
                    decoded: detail.is_none(),
                    detail,
                },
                failures,
            )
        })
        .collect();
    let mut per_user = Vec::with_capacity(k);
    for (v, f) in results {
        per_user.push(v);
        audit_failures.extend(f);
    }

    let bits = schedule.total_bits();
    let rate = BigRational::new(
        BigUint::from(bits).into(),
        BigUint::from(layout.file_bits).into(),
    );
    ValidationReport {
        per_user,
        audit_failures,
        cached_bits,
        cache_ok,
        messages: schedule.message_count(),
        bits,
        rate,
    }
}

/// Packets each user must still obtain: its file's splits it does not cache.
pub fn needed_packets(placement: &CacheContents, demand: &[u32]) -> Vec<HashSet<PacketId>> {
    (0..placement.k as usize)
        .map(|u| {
            placement
                .layout
                .slots
                .iter()
                .filter(|s| s.nodes >> u & 1 == 0)
                .map(|s| PacketId {
                    file: demand[u],
                    nodes: s.nodes,
                    layer: s.layer,
                    split: s.split,
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{jcm_design, preset_triple_grouping};

    fn pattern_files(n: u32, bits: u64) -> Vec<Bits> {
        (0..n)
            .map(|f| (0..bits).map(|i| (i * 7 + f as u64 * 13) % 5 < 2).collect())
            .collect()
    }

    fn triple() -> (Design, CacheContents) {
        let d: Design = preset_triple_grouping(9).unwrap().into();
        let a = NodeAssignment::canonical(d.grouping());
        let p = build_placement(&d, &a, 3, 2, 270).unwrap();
        (d, p)
    }

    #[test]
    fn worked_example_placement() {
        let (_, p) = triple();
        assert_eq!(p.layout.slots.len(), 270);
        // 180 of the 270 packets of each file, for 3 files.
        for u in 0..9 {
            assert_eq!(p.per_user[u].len(), 540);
            assert_eq!(p.cached_bits(u), 540);
        }
    }

    #[test]
    fn worked_example_groups() {
        let (d, p) = triple();
        let demand = [0, 1, 2, 0, 1, 2, 0, 1, 2];
        let s = build_schedule(&d, &p, &demand).unwrap();
        let first = s.groups.iter().find(|g| g.nodes == 0b001111111).unwrap();
        assert_eq!(first.transmitters, vec![6]);
        assert_eq!(first.messages.len(), 3);
        assert!(first.messages.iter().all(|m| m.constituents.len() == 6));
        let second = s.groups.iter().find(|g| g.nodes == 0b011011111).unwrap();
        assert_eq!(second.transmitters, vec![3, 4, 6, 7]);
        assert_eq!(second.messages.len(), 4);
        assert!(second.messages.iter().all(|m| m.constituents.len() == 6));
        let report = validate(&p, &s, &demand, &pattern_files(3, 270));
        assert!(report.ok(), "{:?}", report.audit_failures);
        assert_eq!(report.rate, BigRational::new(1.into(), 2.into()));
    }

    #[test]
    fn divisibility_error_names_minimum() {
        let d: Design = preset_triple_grouping(9).unwrap().into();
        let a = NodeAssignment::canonical(d.grouping());
        let err = build_placement(&d, &a, 3, 2, 100).unwrap_err();
        assert!(err.to_string().contains("270"));
        assert!(build_placement(&d, &a, 3, 2, 540).is_ok());
        assert!(matches!(
            build_placement(&d, &a, 3, 3, 270),
            Err(SchemeError::Design(_))
        ));
    }

    #[test]
    fn jcm_group_structure() {
        let d: Design = jcm_design(5, 2).unwrap().into();
        let a = NodeAssignment::canonical(d.grouping());
        let p = build_placement(&d, &a, 5, 2, 20).unwrap();
        let demand = [0, 1, 2, 3, 4];
        let s = build_schedule(&d, &p, &demand).unwrap();
        assert_eq!(s.groups.len(), 10);
        // Every member of a 3-group sends once, serving the other two.
        assert!(s.groups.iter().all(|g| g.messages.len() == 3));
        assert!(s.messages().all(|(_, m)| m.constituents.len() == 2));
        let r = validate(&p, &s, &demand, &pattern_files(5, 20));
        assert!(r.ok());
        assert_eq!(r.rate, BigRational::new(3.into(), 2.into()));
    }

    #[test]
    fn demand_errors() {
        let (d, p) = triple();
        assert!(matches!(
            build_schedule(&d, &p, &[0; 8]),
            Err(SchemeError::Demand(_))
        ));
        assert!(matches!(
            build_schedule(&d, &p, &[3; 9]),
            Err(SchemeError::Demand(_))
        ));
    }

    #[test]
    fn dropped_message_fails_its_receivers() {
        let (d, p) = triple();
        let demand = [0, 0, 0, 1, 1, 1, 2, 2, 2];
        let s = build_schedule(&d, &p, &demand).unwrap();
        let files = pattern_files(3, 270);
        let victims: Vec<usize> = s.groups[0].messages[0]
            .constituents
            .iter()
            .map(|c| c.0)
            .collect();
        let r = validate(&p, &s.without_message(0, 0), &demand, &files);
        assert_eq!(r.failed_users(), victims);
    }

    #[test]
    fn assignment_checks() {
        let q = NodeGrouping::new(&[2, 1]).unwrap();
        assert!(NodeAssignment::from_groups(&q, vec![vec![0, 2], vec![1]]).is_ok());
        assert!(NodeAssignment::from_groups(&q, vec![vec![0], vec![1, 2]]).is_err());
        assert!(NodeAssignment::from_groups(&q, vec![vec![0, 0], vec![1]]).is_err());
        let a = NodeAssignment::canonical(&q);
        assert_eq!(a.shape(0b011, 2).aligned(), vec![2, 0]);
        assert_eq!(a.shape(0b101, 2).aligned(), vec![1, 1]);
    }
}
