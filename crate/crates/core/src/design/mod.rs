//! Packet-type-based designs: type enumeration, transmitter selection,
//! splitting tables, the LCM vector, memory balance and the preset
//! constructions.

mod coupled;
pub mod json;
mod lcm;
mod memory;
mod presets;
mod ptb;

use std::fmt;

use thiserror::Error;

use crate::combinat::{self, CombinatError, NodeGrouping, TypeShape};

pub use coupled::{preset_heterogeneous, CoupledDesign, CoupledLayer};
pub use lcm::{lcm_vector, FsrRow, FsrTable, LcmSolution};
pub use memory::{memory_check, subpacketization, MemoryTable};
pub use presets::{
    hetero_ratio_bound, pair_ratio_bound, preset_pair_grouping, preset_triple_grouping,
    preset_two_group, two_group_ratio_bound, Preset,
};
pub use ptb::{
    jcm_design, jcm_subpacketization, Gains, Library, PtbDesign, Selection, SplitPlan,
    TransmitterRule,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DesignError {
    #[error("t = {t} is degenerate for K = {k}: need 1 <= t < K")]
    Degenerate { k: u32, t: u32 },
    #[error("t = K*M/N = {k}*{m}/{n} is not an integer")]
    NonIntegralT { k: u32, n: u32, m: u32 },
    #[error("grouping covers {got} users but K = {k}")]
    GroupingSize { k: u32, got: u32 },
    #[error("multicast type {0} has an empty transmitter selection")]
    EmptyTransmitters(usize),
    #[error("transmitter class {class} does not exist in multicast type {mtype}")]
    BadClass { mtype: usize, class: usize },
    #[error("expected a selection for {expected} multicast types, got {got}")]
    SelectionLength { expected: usize, got: usize },
    #[error("local splitting ratios admit no consistent LCM vector")]
    NoLcm,
    #[error("splitting vector violates the node memory balance")]
    MemoryImbalance,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{preset} preset: {reason}")]
    Precondition {
        preset: &'static str,
        reason: String,
    },
    #[error("no positive length ratios balance the coupled groups")]
    NoPositiveRatio,
    #[error("design document: {0}")]
    Document(String),
    #[error(transparent)]
    Combinat(#[from] CombinatError),
}

/// A packet type: the shape of the caching set of a raw packet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PacketType {
    pub index: usize,
    pub shape: TypeShape,
}

impl fmt::Display for PacketType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.shape.fmt(f)
    }
}

/// Nodes of a multicast group that sit in equally sized parts of groups of
/// the same size. They are interchangeable, so transmitters are chosen per
/// class. Under an equal grouping a class is exactly a unique group of the
/// multicast partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TypeClass {
    /// Unique group of the node grouping hosting the parts.
    pub unique_group: usize,
    pub part: u32,
    pub multiplicity: u32,
}

impl TypeClass {
    /// `g_i`: number of nodes in the class.
    pub fn nodes(&self) -> u32 {
        self.part * self.multiplicity
    }
}

/// A multicasting group type together with its transmitter selection `D_T`
/// (indices into `classes`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MulticastType {
    pub index: usize,
    pub shape: TypeShape,
    pub classes: Vec<TypeClass>,
    pub transmitters: Vec<usize>,
}

impl MulticastType {
    fn new(index: usize, shape: TypeShape) -> Self {
        let mut classes = Vec::new();
        for (g, block) in shape.blocks().iter().enumerate() {
            let mut i = 0;
            while i < block.len() && block[i] > 0 {
                let run = block[i..].iter().take_while(|&&p| p == block[i]).count();
                classes.push(TypeClass {
                    unique_group: g,
                    part: block[i],
                    multiplicity: run as u32,
                });
                i += run;
            }
        }
        MulticastType {
            index,
            shape,
            classes,
            transmitters: Vec::new(),
        }
    }

    pub fn with_transmitters(mut self, transmitters: Vec<usize>) -> Self {
        self.transmitters = transmitters;
        self
    }

    pub fn is_transmitter_class(&self, class: usize) -> bool {
        self.transmitters.contains(&class)
    }

    /// `|T_x|`, the number of transmitting nodes in one group instance.
    pub fn transmitter_count(&self) -> u32 {
        self.transmitters
            .iter()
            .map(|&c| self.classes[c].nodes())
            .sum()
    }

    /// Class of the part at aligned position `pos`, if that part is nonzero.
    fn class_at(&self, unique_group: usize, part: u32) -> Option<usize> {
        self.classes
            .iter()
            .position(|c| c.unique_group == unique_group && c.part == part)
    }

    /// Partition with transmitter parts starred, e.g. `(3,2*,2*)`.
    pub fn label(&self) -> String {
        let mut items = Vec::new();
        for (g, block) in self.shape.blocks().iter().enumerate() {
            for &p in block {
                let star = p > 0
                    && self
                        .class_at(g, p)
                        .is_some_and(|c| self.is_transmitter_class(c));
                items.push(if star { format!("{p}*") } else { p.to_string() });
            }
        }
        format!("({})", items.join(","))
    }
}

impl fmt::Display for MulticastType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Packet types of `t` nodes that can occur under `q`, canonical order.
pub fn enumerate_packet_types(q: &NodeGrouping, t: u32) -> Vec<PacketType> {
    combinat::shapes(t, q)
        .into_iter()
        .enumerate()
        .map(|(index, shape)| PacketType { index, shape })
        .collect()
}

/// Multicast types of `t + 1` nodes under `q`, with empty selections.
pub fn enumerate_multicast_types(q: &NodeGrouping, t: u32) -> Vec<MulticastType> {
    combinat::shapes(t + 1, q)
        .into_iter()
        .enumerate()
        .map(|(index, shape)| MulticastType::new(index, shape))
        .collect()
}

/// For every class of `s`, the packet type requested by a node of that
/// class: the shape left after removing that node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvolvedTypeMap {
    pub shapes: Vec<TypeShape>,
}

impl InvolvedTypeMap {
    /// Resolves each involved shape to its index in `types`.
    pub fn indices(&self, types: &[PacketType]) -> Vec<usize> {
        self.shapes
            .iter()
            .map(|s| {
                types
                    .iter()
                    .position(|v| &v.shape == s)
                    .expect("an involved shape is always a valid packet type")
            })
            .collect()
    }
}

pub fn involved_types(s: &MulticastType) -> InvolvedTypeMap {
    let shapes = s
        .classes
        .iter()
        .map(|c| {
            let mut blocks = s.shape.blocks().to_vec();
            let slot = blocks[c.unique_group]
                .iter()
                .position(|&p| p == c.part)
                .expect("class part is present in its block");
            blocks[c.unique_group][slot] -= 1;
            TypeShape::from_blocks(blocks)
        })
        .collect();
    InvolvedTypeMap { shapes }
}

/// Local splitting row of one multicast type over `width` packet types:
/// receivers in a transmitting class get `|T_x| - 1` splits, the others
/// `|T_x|`. Types the multicast type never involves stay empty.
pub fn local_fsr(
    s: &MulticastType,
    involved: &[usize],
    width: usize,
) -> Result<FsrRow, DesignError> {
    if s.transmitters.is_empty() {
        return Err(DesignError::EmptyTransmitters(s.index));
    }
    let senders = s.transmitter_count() as u64;
    let mut row = vec![None; width];
    for (class, &v) in involved.iter().enumerate() {
        row[v] = Some(if s.is_transmitter_class(class) {
            senders - 1
        } else {
            senders
        });
    }
    Ok(row)
}

/// Either an equal-length design or a coupled one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Design {
    Ptb(PtbDesign),
    Coupled(CoupledDesign),
}

impl Design {
    pub fn k(&self) -> u32 {
        match self {
            Design::Ptb(d) => d.k,
            Design::Coupled(d) => d.k,
        }
    }

    pub fn t(&self) -> u32 {
        match self {
            Design::Ptb(d) => d.t,
            Design::Coupled(d) => d.t,
        }
    }

    pub fn library(&self) -> Option<Library> {
        match self {
            Design::Ptb(d) => d.library,
            Design::Coupled(d) => d.library,
        }
    }

    pub fn grouping(&self) -> &NodeGrouping {
        match self {
            Design::Ptb(d) => &d.grouping,
            Design::Coupled(d) => &d.grouping,
        }
    }

    pub fn packet_types(&self) -> &[PacketType] {
        match self {
            Design::Ptb(d) => &d.packet_types,
            Design::Coupled(d) => &d.packet_types,
        }
    }

    pub fn raw_counts(&self) -> &[num_bigint::BigUint] {
        match self {
            Design::Ptb(d) => &d.raw_counts,
            Design::Coupled(d) => &d.raw_counts,
        }
    }

    pub fn memory(&self) -> &MemoryTable {
        match self {
            Design::Ptb(d) => &d.memory,
            Design::Coupled(d) => &d.memory,
        }
    }

    /// Overall splitting vector (summed over layers).
    pub fn alpha(&self) -> &[u64] {
        match self {
            Design::Ptb(d) => d.alpha(),
            Design::Coupled(d) => &d.alpha,
        }
    }

    pub fn f(&self) -> &num_bigint::BigUint {
        match self {
            Design::Ptb(d) => &d.f,
            Design::Coupled(d) => &d.f,
        }
    }

    pub fn f_jcm(&self) -> &num_bigint::BigUint {
        match self {
            Design::Ptb(d) => &d.f_jcm,
            Design::Coupled(d) => &d.f_jcm,
        }
    }

    pub fn gains(&self) -> Gains {
        match self {
            Design::Ptb(d) => d.gains(),
            Design::Coupled(d) => d.gains(),
        }
    }

    pub fn ratio(&self) -> num_rational::BigRational {
        match self {
            Design::Ptb(d) => d.ratio(),
            Design::Coupled(d) => d.ratio(),
        }
    }

    pub fn ratio_f64(&self) -> f64 {
        match self {
            Design::Ptb(d) => d.ratio_f64(),
            Design::Coupled(d) => d.ratio_f64(),
        }
    }

    /// Split plans with their integer packet lengths.
    pub fn layers(&self) -> Vec<(&SplitPlan, num_bigint::BigUint)> {
        match self {
            Design::Ptb(d) => vec![(&d.plan, num_bigint::BigUint::from(1u32))],
            Design::Coupled(d) => d
                .layers
                .iter()
                .map(|l| &l.plan)
                .zip(d.unit_lengths())
                .collect(),
        }
    }

    pub fn with_library(self, n: u32, m: u32) -> Result<Self, DesignError> {
        Ok(match self {
            Design::Ptb(d) => Design::Ptb(d.with_library(n, m)?),
            Design::Coupled(d) => Design::Coupled(d.with_library(n, m)?),
        })
    }
}

impl From<PtbDesign> for Design {
    fn from(d: PtbDesign) -> Self {
        Design::Ptb(d)
    }
}

impl From<CoupledDesign> for Design {
    fn from(d: CoupledDesign) -> Self {
        Design::Coupled(d)
    }
}
