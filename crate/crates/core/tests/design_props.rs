use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use proptest::prelude::*;
use ptb_core::combinat::{
    binomial, count_cached_by_node, count_shape_through, partitions, NodeGrouping, PartitionVector,
    TypeShape,
};
use ptb_core::design::json::{from_json, to_json};
use ptb_core::design::{
    enumerate_multicast_types, enumerate_packet_types, involved_types, jcm_design, lcm_vector,
    local_fsr, memory_check, preset_heterogeneous, preset_pair_grouping, preset_triple_grouping,
    preset_two_group, subpacketization, Design, FsrRow, MemoryTable, Preset, PtbDesign,
    TransmitterRule,
};
use ptb_core::scheme::NodeAssignment;

fn some(xs: &[Option<u64>]) -> FsrRow {
    xs.to_vec()
}

#[test]
fn lcm_examples() {
    let s = lcm_vector(&[
        some(&[None, Some(1), Some(0)]),
        some(&[Some(4), Some(3), None]),
    ])
    .unwrap();
    assert_eq!(s.scalars, vec![3, 1]);
    assert_eq!(s.alpha, vec![4, 3, 0]);

    let s = lcm_vector(&[some(&[Some(5)])]).unwrap();
    assert_eq!((s.scalars, s.alpha), (vec![1], vec![5]));

    let s = lcm_vector(&[some(&[Some(2), None]), some(&[Some(3), None])]).unwrap();
    assert_eq!((s.scalars, s.alpha), (vec![3, 2], vec![6, 0]));

    let s = lcm_vector(&[
        some(&[Some(2), Some(3), None]),
        some(&[None, Some(1), Some(5)]),
    ])
    .unwrap();
    assert_eq!((s.scalars, s.alpha), (vec![1, 3], vec![2, 3, 15]));

    assert!(lcm_vector(&[some(&[Some(1), Some(2)]), some(&[Some(2), Some(1)])]).is_none());
}

fn row_strategy(width: usize) -> impl Strategy<Value = FsrRow> {
    proptest::collection::vec(prop_oneof![Just(None), (0u64..=4).prop_map(Some)], width)
}

fn rows_strategy() -> impl Strategy<Value = Vec<FsrRow>> {
    (1usize..=3, 1usize..=4).prop_flat_map(|(w, n)| proptest::collection::vec(row_strategy(w), n))
}

/// Columns that survive: no zero anywhere in the column.
fn kept_columns(rows: &[FsrRow]) -> Vec<bool> {
    let w = rows[0].len();
    (0..w)
        .map(|j| rows.iter().all(|r| r[j] != Some(0)))
        .collect()
}

fn consistent(rows: &[FsrRow], z: &[u64], kept: &[bool]) -> bool {
    (0..kept.len()).filter(|&j| kept[j]).all(|j| {
        let vals: Vec<u64> = rows
            .iter()
            .zip(z)
            .filter_map(|(r, &zi)| r[j].filter(|&a| a > 0).map(|a| a * zi))
            .collect();
        vals.windows(2).all(|w| w[0] == w[1])
    })
}

/// Exhaustive scalar search over a small box.
fn brute_lcm_exists(rows: &[FsrRow]) -> bool {
    let kept = kept_columns(rows);
    let n = rows.len();
    let bound = 16u64;
    let mut z = vec![1u64; n];
    loop {
        if consistent(rows, &z, &kept) {
            return true;
        }
        let mut i = 0;
        while i < n && z[i] == bound {
            z[i] = 1;
            i += 1;
        }
        if i == n {
            return false;
        }
        z[i] += 1;
    }
}

/// Rows sharing a kept positive column, as connected components.
fn components(rows: &[FsrRow]) -> Vec<Vec<usize>> {
    let kept = kept_columns(rows);
    let linked =
        |i: usize| (0..kept.len()).any(|j| kept[j] && matches!(rows[i][j], Some(a) if a > 0));
    let touches = |a: usize, b: usize| {
        (0..kept.len()).any(|j| {
            kept[j]
                && matches!(rows[a][j], Some(x) if x > 0)
                && matches!(rows[b][j], Some(x) if x > 0)
        })
    };
    let mut seen = vec![false; rows.len()];
    let mut out = Vec::new();
    for s in 0..rows.len() {
        if seen[s] || !linked(s) {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut i = 0;
        while i < comp.len() {
            let a = comp[i];
            for (b, mark) in seen.iter_mut().enumerate() {
                if !*mark && touches(a, b) {
                    *mark = true;
                    comp.push(b);
                }
            }
            i += 1;
        }
        out.push(comp);
    }
    out
}

proptest! {
    #[test]
    fn lcm_agrees_with_scalar_search(rows in rows_strategy()) {
        let kept = kept_columns(&rows);
        match lcm_vector(&rows) {
            Some(sol) => {
                prop_assert!(consistent(&rows, &sol.scalars, &kept));
                for comp in components(&rows) {
                    let g = comp.iter().fold(0u64, |acc, &i| acc.gcd(&sol.scalars[i]));
                    prop_assert_eq!(g, 1, "scalars not minimal on {:?}", comp);
                }
                for (j, &k) in kept.iter().enumerate() {
                    if !k {
                        prop_assert_eq!(sol.alpha[j], 0);
                    }
                }
            }
            None => prop_assert!(!brute_lcm_exists(&rows)),
        }
    }
}

#[test]
fn jcm_embedding() {
    for k in 2..=12u32 {
        for t in 1..k {
            let d = jcm_design(k, t).unwrap();
            assert_eq!(d.packet_types.len(), 1);
            assert_eq!(d.plan.multicast_types.len(), 1);
            assert_eq!(d.alpha(), &[t as u64]);
            assert_eq!(d.f, binomial(k, t) * t);
            assert_eq!(d.f, d.f_jcm);
            assert!(d.plan.lcm.wasteful_rows(&d.plan.fsrt.rows).is_empty());
        }
    }
    assert_eq!(jcm_design(8, 6).unwrap().f, BigUint::from(168u32));
    assert_eq!(jcm_design(2, 1).unwrap().f, BigUint::from(2u32));
}

#[test]
fn subpacketization_examples() {
    let counts: Vec<BigUint> = [27u32, 54, 3].iter().map(|&c| c.into()).collect();
    assert_eq!(subpacketization(&[4, 3, 0], &counts), BigUint::from(270u32));
    assert_eq!(subpacketization(&[0, 0, 0], &counts), BigUint::from(0u32));
}

/// Concrete node set realizing `shape` under the canonical assignment.
fn realize(shape: &TypeShape, a: &NodeAssignment, q: &NodeGrouping) -> u64 {
    let mut set = 0u64;
    let mut g = 0usize;
    for (block, ug) in shape.blocks().iter().zip(q.unique_groups()) {
        for (j, &p) in block.iter().enumerate() {
            for &u in a.groups()[g + j].iter().take(p as usize) {
                set |= 1 << u;
            }
        }
        g += ug.count as usize;
    }
    set
}

fn all_groupings(k: u32) -> Vec<NodeGrouping> {
    partitions(k, k, k as usize)
        .iter()
        .map(|p| NodeGrouping::from_partition(p).unwrap())
        .collect()
}

/// Every local splitting row agrees with counting the other transmitters in
/// a concrete group of nodes, and every involved type is the shape left after
/// removing that node.
#[test]
fn local_rows_match_concrete_groups() {
    for k in 3..=8u32 {
        for q in all_groupings(k) {
            let a = NodeAssignment::canonical(&q);
            let unique_of: Vec<usize> = q
                .unique_groups()
                .iter()
                .enumerate()
                .flat_map(|(i, ug)| std::iter::repeat_n(i, ug.count as usize))
                .collect();
            for t in 1..k {
                let types = enumerate_packet_types(&q, t);
                for s in enumerate_multicast_types(&q, t) {
                    let nc = s.classes.len();
                    // Every nonempty transmitter subset of classes.
                    for mask in 1u32..(1 << nc) {
                        let sel: Vec<usize> = (0..nc).filter(|c| mask >> c & 1 == 1).collect();
                        let s = s.clone().with_transmitters(sel.clone());
                        let inv = involved_types(&s).indices(&types);
                        let row = local_fsr(&s, &inv, types.len()).unwrap();
                        let set = realize(&s.shape, &a, &q);
                        assert_eq!(a.shape(set, q.num_unique()), s.shape);
                        let tx: Vec<usize> = (0..k as usize)
                            .filter(|&u| set >> u & 1 == 1)
                            .filter(|&u| {
                                let g = a.group_of(u);
                                let part =
                                    a.groups()[g].iter().filter(|&&v| set >> v & 1 == 1).count()
                                        as u32;
                                s.classes.iter().enumerate().any(|(c, cl)| {
                                    sel.contains(&c)
                                        && cl.unique_group == unique_of[g]
                                        && cl.part == part
                                })
                            })
                            .collect();
                        for u in (0..k as usize).filter(|&u| set >> u & 1 == 1) {
                            let rest = a.shape(set & !(1 << u), q.num_unique());
                            let col = types.iter().position(|v| v.shape == rest).unwrap();
                            let others = tx.iter().filter(|&&v| v != u).count() as u64;
                            assert_eq!(row[col], Some(others), "K={k} q={q} s={} u={u}", s.label());
                        }
                        let touched = row.iter().filter(|e| e.is_some()).count();
                        let distinct: std::collections::BTreeSet<usize> =
                            inv.iter().copied().collect();
                        assert_eq!(touched, distinct.len());
                    }
                }
            }
        }
    }
}

fn gain_identity(d: &Design) {
    let g = d.gains();
    let lhs = BigInt::from(g.raw_packet_saving.clone()) + &g.splitting_gain;
    let rhs = BigInt::from(d.f_jcm().clone()) - BigInt::from(d.f().clone());
    assert_eq!(lhs, rhs, "gain identity K={} t={}", d.k(), d.t());
    let kept: BigUint = d
        .raw_counts()
        .iter()
        .zip(d.alpha())
        .filter(|(_, &a)| a > 0)
        .map(|(c, _)| c.clone())
        .sum();
    assert_eq!(g.raw_subfile_saving, binomial(d.k(), d.t()) - kept);
}

#[test]
fn gain_identity_on_presets() {
    for k in 2..=14u32 {
        for t in 1..k {
            for p in Preset::ALL {
                if let Ok(d) = p.build(k, t) {
                    gain_identity(&d);
                }
            }
        }
    }
}

fn selection_strategy() -> impl Strategy<Value = (u32, u32, NodeGrouping, Vec<u32>)> {
    (3u32..=8).prop_flat_map(|k| {
        let gs = all_groupings(k);
        (
            1..k,
            0..gs.len(),
            proptest::collection::vec(any::<u32>(), 32),
        )
            .prop_map(move |(t, i, picks)| (k, t, gs[i].clone(), picks))
    })
}

proptest! {
    #[test]
    fn gain_identity_on_random_selections((k, t, q, picks) in selection_strategy()) {
        let mts = enumerate_multicast_types(&q, t);
        let sel: Vec<Vec<usize>> = mts
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let nc = s.classes.len() as u32;
                let mask = picks[i % picks.len()] % ((1 << nc) - 1) + 1;
                (0..nc as usize).filter(|c| mask >> c & 1 == 1).collect()
            })
            .collect();
        if let Ok(d) = PtbDesign::build_unchecked(k, t, q.clone(), &sel) {
            gain_identity(&d.into());
        }
    }

    #[test]
    fn json_roundtrip(k in 4u32..=12, t in 1u32..=10) {
        prop_assume!(t < k);
        for p in Preset::ALL {
            if let Ok(d) = p.build(k, t) {
                let back = from_json(&to_json(&d)).unwrap();
                prop_assert_eq!(to_json(&back), to_json(&d));
            }
        }
    }
}

#[test]
fn memory_check_examples() {
    // Equal grouping has nothing to balance.
    let d = preset_triple_grouping(9).unwrap();
    assert!(memory_check(d.alpha(), &d.memory).unwrap());

    let q = NodeGrouping::new(&[5, 4]).unwrap();
    let types = enumerate_packet_types(&q, 2);
    let mct = MemoryTable::new(&q, &types);
    assert!(memory_check(&[0, 0, 0], &mct).unwrap());
    assert!(memory_check(&[0, 0], &mct).is_err());

    // alpha . (cached by a node of group 0 - cached by a node of group 1)
    let alpha = [0u64, 1, 0];
    let mut dot = BigInt::from(0);
    for (v, &a) in types.iter().zip(&alpha) {
        let set_count = |i: usize| count_shape_through(&v.shape, &q, i).unwrap();
        dot += BigInt::from(a) * (BigInt::from(set_count(0)) - BigInt::from(set_count(1)));
    }
    assert_ne!(dot, BigInt::from(0));
    assert!(!memory_check(&alpha, &mct).unwrap());
    // Sanity: shape-blind counts agree on the mixed type.
    assert_eq!(
        count_cached_by_node(&PartitionVector::new(vec![1, 1]), &q, 0).unwrap(),
        BigUint::from(4u32)
    );
}

#[test]
fn preset_values() {
    let d = preset_triple_grouping(9).unwrap();
    assert_eq!(d.f, BigUint::from(270u32));
    assert_eq!(d.kept_raw_count(), BigUint::from(81u32));
    let g = d.gains();
    assert_eq!(g.raw_subfile_saving, BigUint::from(3u32));
    assert_eq!(
        BigInt::from(g.raw_packet_saving) + g.splitting_gain,
        BigInt::from(234)
    );

    let d = preset_two_group(10, 4).unwrap();
    assert_eq!(d.alpha(), &[0, 1, 2]);
    assert_eq!(d.f, BigUint::from(300u32));
    let d = preset_two_group(6, 2).unwrap();
    assert_eq!(d.f, BigUint::from(9u32));
    assert!(preset_two_group(6, 0).is_err());

    assert_eq!(preset_pair_grouping(8, 2).unwrap().f, BigUint::from(24u32));
    assert_eq!(preset_pair_grouping(10, 2).unwrap().f, BigUint::from(40u32));
    assert_eq!(
        preset_pair_grouping(10, 2).unwrap().f_jcm,
        BigUint::from(360u32)
    );

    let h = preset_heterogeneous(7, 2).unwrap();
    let aligned: Vec<Vec<u32>> = h.packet_types.iter().map(|v| v.shape.aligned()).collect();
    let dropped: Vec<&Vec<u32>> = aligned
        .iter()
        .zip(&h.alpha)
        .filter(|(_, &a)| a == 0)
        .map(|(v, _)| v)
        .collect();
    assert_eq!(dropped, vec![&vec![0, 2]]);
    assert_eq!(h.gammas()[1], BigRational::new(1.into(), 5.into()));
}

#[test]
fn rule_selections_are_valid_selections() {
    for k in 3..=8u32 {
        for q in all_groupings(k) {
            for t in 1..k {
                let mts = enumerate_multicast_types(&q, t);
                for rule in [
                    TransmitterRule::All,
                    TransmitterRule::SmallestPart,
                    TransmitterRule::LargestGroup,
                ] {
                    let sel = rule.select(&mts);
                    assert_eq!(sel.len(), mts.len());
                    assert!(sel
                        .iter()
                        .zip(&mts)
                        .all(|(s, m)| !s.is_empty() && s.iter().all(|&c| c < m.classes.len())));
                }
            }
        }
    }
}
