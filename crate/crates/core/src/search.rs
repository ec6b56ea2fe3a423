//! Exhaustive search over groupings and transmitter selections for the
//! design with the smallest subpacketization.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;
use thiserror::Error;

use crate::combinat::{partitions, NodeGrouping};
use crate::design::json::{rational_string, to_json};
use crate::design::{
    enumerate_multicast_types, enumerate_packet_types, involved_types, lcm_vector, local_fsr,
    memory_check, CoupledDesign, Design, DesignError, MemoryTable, MulticastType, PtbDesign,
    Selection,
};
use crate::scheme::{
    build_placement, build_schedule, minimal_file_bits, validate, Bits, NodeAssignment,
};

pub const DEFAULT_K_CAP: u32 = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("K = {k} exceeds the search cap of {cap}")]
    Cap { k: u32, cap: u32 },
    #[error(transparent)]
    Design(#[from] DesignError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupingFilter {
    All,
    /// Groupings whose groups all have the same size.
    Equal,
    Explicit(Vec<NodeGrouping>),
}

#[derive(Debug, Clone)]
pub struct SearchSpace {
    pub k: u32,
    pub t: u32,
    pub groupings: GroupingFilter,
    /// Selections tried per grouping; the rest are counted as skipped.
    pub max_candidates: u64,
    pub time_budget: Option<Duration>,
    /// Validate every surviving candidate, not just the cheapest level.
    pub validate_all: bool,
    /// Drop memory-imbalanced candidates before validation.
    pub prune_memory: bool,
    /// Also pair up selections into two-length designs on two-group
    /// unequal groupings.
    pub include_coupled: bool,
    pub k_cap: u32,
}

impl SearchSpace {
    pub fn new(k: u32, t: u32) -> Self {
        SearchSpace {
            k,
            t,
            groupings: GroupingFilter::All,
            max_candidates: 1 << 18,
            time_budget: None,
            validate_all: false,
            prune_memory: true,
            include_coupled: false,
            k_cap: DEFAULT_K_CAP,
        }
    }

    pub fn groupings(mut self, g: GroupingFilter) -> Self {
        self.groupings = g;
        self
    }

    fn grouping_list(&self) -> Result<Vec<NodeGrouping>, SearchError> {
        Ok(match &self.groupings {
            GroupingFilter::All => partitions(self.k, self.k, self.k as usize)
                .iter()
                .map(NodeGrouping::from_partition)
                .collect::<Result<_, _>>()
                .map_err(DesignError::from)?,
            GroupingFilter::Equal => (1..=self.k)
                .filter(|d| self.k.is_multiple_of(*d))
                .map(|d| NodeGrouping::equal(self.k, d))
                .collect::<Result<_, _>>()
                .map_err(DesignError::from)?,
            GroupingFilter::Explicit(list) => list.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Validated,
    Failed(String),
    Unchecked,
}

impl Status {
    pub fn label(&self) -> &str {
        match self {
            Status::Validated => "validated",
            Status::Failed(_) => "failed",
            Status::Unchecked => "unchecked",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub design: Design,
    pub status: Status,
}

impl Candidate {
    pub fn f(&self) -> &BigUint {
        self.design.f()
    }

    /// Transmitter selections with starred labels, `;` between multicast
    /// types and `|` between layers.
    pub fn selection_label(&self) -> String {
        self.design
            .layers()
            .iter()
            .map(|(p, _)| {
                p.multicast_types
                    .iter()
                    .map(MulticastType::label)
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .collect::<Vec<_>>()
            .join("|")
    }

    fn key(&self) -> (BigUint, Vec<u32>, bool, Vec<Selection>) {
        (
            self.f().clone(),
            self.design.grouping().group_sizes().to_vec(),
            matches!(self.design, Design::Coupled(_)),
            self.design
                .layers()
                .iter()
                .map(|(p, _)| p.selection())
                .collect(),
        )
    }

    fn cmp_key(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Rejections {
    pub no_lcm: u64,
    pub memory: u64,
    pub decodability: u64,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub k: u32,
    pub t: u32,
    /// Validated designs with the smallest F.
    pub best: Vec<Candidate>,
    /// Every surviving distinct design, by (F, key).
    pub ranked: Vec<Candidate>,
    pub rejected: Rejections,
    pub evaluated: u64,
    pub duplicates: u64,
    pub skipped: u64,
    pub timed_out: bool,
}

impl SearchResult {
    pub fn best_f(&self) -> Option<&BigUint> {
        self.best.first().map(Candidate::f)
    }

    pub const CSV_HEADER: [&'static str; 9] = [
        "rank",
        "grouping",
        "transmitters",
        "alpha_lcm",
        "F",
        "F_jcm",
        "ratio",
        "gamma",
        "status",
    ];

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::CSV_HEADER).expect("in-memory write");
        for (i, c) in self.ranked.iter().enumerate() {
            let d = &c.design;
            let gamma = match d {
                Design::Ptb(_) => String::new(),
                Design::Coupled(cd) => cd
                    .gammas()
                    .iter()
                    .map(rational_string)
                    .collect::<Vec<_>>()
                    .join(";"),
            };
            w.write_record([
                (i + 1).to_string(),
                d.grouping().to_string(),
                c.selection_label(),
                format!(
                    "({})",
                    d.alpha()
                        .iter()
                        .map(u64::to_string)
                        .collect::<Vec<_>>()
                        .join(",")
                ),
                d.f().to_string(),
                d.f_jcm().to_string(),
                format!("{:.6}", d.ratio_f64()),
                gamma,
                c.status.label().to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn best_json(&self) -> Option<Value> {
        self.best.first().map(|c| to_json(&c.design))
    }
}

/// Decodes the design under distinct demands with `N = K`, `M = t`.
pub fn validate_design(design: &Design) -> Result<(), String> {
    let (k, t) = (design.k(), design.t());
    let design = design
        .clone()
        .with_library(k, t)
        .map_err(|e| e.to_string())?;
    let bits = minimal_file_bits(&design)
        .to_u64()
        .ok_or("file too large")?;
    let assignment = NodeAssignment::canonical(design.grouping());
    let placement = build_placement(&design, &assignment, k, t, bits).map_err(|e| e.to_string())?;
    let demand: Vec<u32> = (0..k).collect();
    let schedule = build_schedule(&design, &placement, &demand).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let files: Vec<Bits> = (0..k)
        .map(|_| {
            (0..bits)
                .map(|_| rand::Rng::gen::<bool>(&mut rng))
                .collect()
        })
        .collect();
    let report = validate(&placement, &schedule, &demand, &files);
    let expected = BigRational::new(BigInt::from(k - t), BigInt::from(t));
    if !report.all_decoded() {
        return Err(format!("users {:?} fail to decode", report.failed_users()));
    }
    if let Some(f) = report.audit_failures.first() {
        return Err(f.clone());
    }
    if !report.cache_ok {
        return Err("cache sizes differ from M file sizes".into());
    }
    if report.rate != expected {
        return Err(format!(
            "rate {} instead of {}",
            rational_string(&report.rate),
            rational_string(&expected)
        ));
    }
    Ok(())
}

/// Everything about a grouping that does not depend on the selection.
struct GroupingContext {
    grouping: NodeGrouping,
    width: usize,
    mtypes: Vec<MulticastType>,
    involved: Vec<Vec<usize>>,
    memory: MemoryTable,
    /// Nonempty class subsets per multicast type.
    choices: Vec<Vec<Vec<usize>>>,
}

impl GroupingContext {
    fn new(grouping: NodeGrouping, t: u32) -> Self {
        let types = enumerate_packet_types(&grouping, t);
        let mtypes = enumerate_multicast_types(&grouping, t);
        let involved = mtypes
            .iter()
            .map(|s| involved_types(s).indices(&types))
            .collect();
        let choices = mtypes
            .iter()
            .map(|s| {
                let c = s.classes.len();
                (1u32..1 << c)
                    .map(|bits| (0..c).filter(|i| bits >> i & 1 == 1).collect())
                    .collect()
            })
            .collect();
        GroupingContext {
            width: types.len(),
            memory: MemoryTable::new(&grouping, &types),
            grouping,
            mtypes,
            involved,
            choices,
        }
    }

    fn total(&self) -> u64 {
        self.choices
            .iter()
            .try_fold(1u64, |acc, c| acc.checked_mul(c.len() as u64))
            .unwrap_or(u64::MAX)
    }

    fn selection(&self, mut index: u64) -> Selection {
        self.choices
            .iter()
            .map(|c| {
                let n = c.len() as u64;
                let pick = &c[(index % n) as usize];
                index /= n;
                pick.clone()
            })
            .collect()
    }

    /// Cheap filters: LCM existence, no wasted deliveries, memory balance.
    fn screen(&self, sel: &Selection, prune_memory: bool) -> Screen {
        let rows: Vec<_> = self
            .mtypes
            .iter()
            .zip(&self.involved)
            .zip(sel)
            .map(|((s, inv), d)| {
                local_fsr(&s.clone().with_transmitters(d.clone()), inv, self.width)
                    .expect("selections are nonempty")
            })
            .collect();
        let Some(lcm) = lcm_vector(&rows) else {
            return Screen::NoLcm;
        };
        if !lcm.wasteful_rows(&rows).is_empty() {
            return Screen::Wasteful;
        }
        let balanced = memory_check(&lcm.alpha, &self.memory).expect("dimensions agree");
        if prune_memory && !balanced {
            return Screen::Memory(lcm.alpha);
        }
        Screen::Pass {
            alpha: lcm.alpha,
            balanced,
        }
    }
}

enum Screen {
    NoLcm,
    Wasteful,
    Memory(Vec<u64>),
    Pass { alpha: Vec<u64>, balanced: bool },
}

struct GroupingOutcome {
    designs: Vec<Design>,
    rejected: Rejections,
    evaluated: u64,
    duplicates: u64,
    skipped: u64,
    timed_out: bool,
}

fn search_grouping(
    ctx: &GroupingContext,
    space: &SearchSpace,
    deadline: Option<Instant>,
) -> GroupingOutcome {
    let total = ctx.total();
    let tried = total.min(space.max_candidates);
    let screens: Vec<Option<(u64, Screen)>> = (0..tried)
        .into_par_iter()
        .map(|i| {
            if deadline.is_some_and(|d| Instant::now() > d) {
                return None;
            }
            Some((i, ctx.screen(&ctx.selection(i), space.prune_memory)))
        })
        .collect();
    let timed_out = screens.iter().any(Option::is_none);
    let mut out = GroupingOutcome {
        designs: Vec::new(),
        rejected: Rejections::default(),
        evaluated: 0,
        duplicates: 0,
        skipped: total - tried,
        timed_out,
    };
    let (k, t) = (space.k, space.t);
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    // Feasible single-layer plans for pairing into coupled designs.
    let mut layer_pool: Vec<(Vec<u64>, Selection)> = Vec::new();
    for (i, screen) in screens.into_iter().flatten() {
        out.evaluated += 1;
        match screen {
            Screen::NoLcm => out.rejected.no_lcm += 1,
            Screen::Wasteful => out.rejected.decodability += 1,
            Screen::Memory(alpha) => {
                out.rejected.memory += 1;
                if space.include_coupled && !seen.contains(&alpha) {
                    seen.insert(alpha.clone());
                    layer_pool.push((alpha, ctx.selection(i)));
                }
            }
            Screen::Pass { alpha, balanced } => {
                if !seen.insert(alpha.clone()) {
                    out.duplicates += 1;
                    continue;
                }
                let sel = ctx.selection(i);
                if space.include_coupled {
                    layer_pool.push((alpha.clone(), sel.clone()));
                }
                if alpha.iter().all(|&a| a == 0) {
                    continue;
                }
                let build = if balanced || space.prune_memory {
                    PtbDesign::build(k, t, ctx.grouping.clone(), &sel)
                } else {
                    PtbDesign::build_unchecked(k, t, ctx.grouping.clone(), &sel)
                };
                if let Ok(d) = build {
                    out.designs.push(d.into());
                }
            }
        }
    }
    let two_unequal =
        ctx.grouping.num_unique() == 2 && ctx.grouping.unique_groups().iter().all(|u| u.count == 1);
    if space.include_coupled && two_unequal {
        let mut seen_pairs = HashSet::new();
        for (a1, s1) in &layer_pool {
            for (a2, s2) in &layer_pool {
                if a1 == a2 || a1.iter().all(|&a| a == 0) || a2.iter().all(|&a| a == 0) {
                    continue;
                }
                // Both orders give the same design up to which layer is first.
                let key = if a1 < a2 {
                    (a1.clone(), a2.clone())
                } else {
                    (a2.clone(), a1.clone())
                };
                if !seen_pairs.insert(key) {
                    continue;
                }
                if let Ok(d) =
                    CoupledDesign::build(k, t, ctx.grouping.clone(), &[s1.clone(), s2.clone()])
                {
                    out.designs.push(d.into());
                }
            }
        }
    }
    out
}

pub fn solve(space: &SearchSpace) -> Result<SearchResult, SearchError> {
    if space.k > space.k_cap {
        return Err(SearchError::Cap {
            k: space.k,
            cap: space.k_cap,
        });
    }
    if space.t == 0 || space.t >= space.k {
        return Err(DesignError::Degenerate {
            k: space.k,
            t: space.t,
        }
        .into());
    }
    let deadline = space.time_budget.map(|b| Instant::now() + b);
    let contexts: Vec<GroupingContext> = space
        .grouping_list()?
        .into_iter()
        .filter(|q| q.k() == space.k)
        .map(|q| GroupingContext::new(q, space.t))
        .collect();
    let outcomes: Vec<GroupingOutcome> = contexts
        .par_iter()
        .map(|c| search_grouping(c, space, deadline))
        .collect();

    let mut rejected = Rejections::default();
    let (mut evaluated, mut duplicates, mut skipped, mut timed_out) = (0, 0, 0, false);
    let mut ranked: Vec<Candidate> = Vec::new();
    for o in outcomes {
        rejected.no_lcm += o.rejected.no_lcm;
        rejected.memory += o.rejected.memory;
        rejected.decodability += o.rejected.decodability;
        evaluated += o.evaluated;
        duplicates += o.duplicates;
        skipped += o.skipped;
        timed_out |= o.timed_out;
        ranked.extend(o.designs.into_iter().map(|design| Candidate {
            design,
            status: Status::Unchecked,
        }));
    }
    ranked.sort_by(Candidate::cmp_key);

    // Validate the cheapest F level; move up a level while nothing survives.
    let mut i = 0;
    let mut best_level: Option<BigUint> = None;
    while i < ranked.len() {
        let f = ranked[i].f().clone();
        let end = ranked[i..]
            .iter()
            .position(|c| *c.f() != f)
            .map_or(ranked.len(), |p| i + p);
        if space.validate_all || best_level.is_none() {
            let statuses: Vec<Status> = ranked[i..end]
                .par_iter()
                .map(|c| match validate_design(&c.design) {
                    Ok(()) => Status::Validated,
                    Err(e) => Status::Failed(e),
                })
                .collect();
            for (c, s) in ranked[i..end].iter_mut().zip(statuses) {
                if matches!(s, Status::Failed(_)) {
                    rejected.decodability += 1;
                }
                c.status = s;
            }
            if best_level.is_none() && ranked[i..end].iter().any(|c| c.status == Status::Validated)
            {
                best_level = Some(f);
            }
        }
        i = end;
    }
    let best = ranked
        .iter()
        .filter(|c| c.status == Status::Validated && Some(c.f()) == best_level.as_ref())
        .cloned()
        .collect();
    if best_level.as_ref().is_some_and(Zero::is_zero) {
        unreachable!("all-zero splitting vectors are skipped");
    }
    Ok(SearchResult {
        k: space.k,
        t: space.t,
        best,
        ranked,
        rejected,
        evaluated,
        duplicates,
        skipped,
        timed_out,
    })
}
