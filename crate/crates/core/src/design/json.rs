//! Design documents: a fixed-order JSON rendering and the reverse import,
//! which rebuilds the design from `K`, `t`, the grouping and the
//! transmitter selections, then checks the stored numbers.

use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::BigRational;
use serde_json::{json, Map, Number, Value};

use super::{CoupledDesign, Design, DesignError, FsrTable, PtbDesign, SplitPlan};
use crate::combinat::NodeGrouping;

pub fn big(n: &BigUint) -> Value {
    Value::Number(Number::from_str(&n.to_string()).expect("decimal integer"))
}

pub fn signed(n: &num_bigint::BigInt) -> Value {
    Value::Number(Number::from_str(&n.to_string()).expect("decimal integer"))
}

pub fn rational(r: &BigRational) -> Value {
    Value::String(rational_string(r))
}

/// `p/q`, or `p` when the denominator is one.
pub fn rational_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<BigRational> {
    match s.split_once('/') {
        Some((n, d)) => {
            let d: num_bigint::BigInt = d.trim().parse().ok()?;
            if d == 0.into() {
                return None;
            }
            Some(BigRational::new(n.trim().parse().ok()?, d))
        }
        None => Some(BigRational::from_integer(s.trim().parse().ok()?)),
    }
}

fn fsrt_json(t: &FsrTable) -> Value {
    Value::Array(
        t.rows
            .iter()
            .map(|r| {
                Value::Array(
                    r.iter()
                        .map(|e| e.map_or(Value::Null, |x| json!(x)))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn multicast_json(plan: &SplitPlan, q: &NodeGrouping) -> Value {
    let sizes: Vec<u32> = q.unique_groups().iter().map(|u| u.size).collect();
    Value::Array(
        plan.multicast_types
            .iter()
            .map(|s| {
                let classes: Vec<Value> = s
                    .classes
                    .iter()
                    .map(|c| {
                        json!({
                            "group_size": sizes[c.unique_group],
                            "part": c.part,
                            "multiplicity": c.multiplicity,
                        })
                    })
                    .collect();
                json!({
                    "type": s.label(),
                    "classes": classes,
                    "transmitters": s.transmitters,
                })
            })
            .collect(),
    )
}

pub fn to_json(design: &Design) -> Value {
    let mut m = Map::new();
    let lib = design.library();
    m.insert("K".into(), json!(design.k()));
    m.insert("N".into(), lib.map_or(Value::Null, |l| json!(l.n)));
    m.insert("M".into(), lib.map_or(Value::Null, |l| json!(l.m)));
    m.insert("t".into(), json!(design.t()));
    m.insert(
        "grouping".into(),
        json!(design.grouping().partition().nonzero()),
    );
    m.insert(
        "packet_types".into(),
        Value::Array(
            design
                .packet_types()
                .iter()
                .map(|v| json!(v.to_string()))
                .collect(),
        ),
    );
    let layers = design.layers();
    let (first, _) = &layers[0];
    m.insert(
        "multicast_types".into(),
        multicast_json(first, design.grouping()),
    );
    m.insert("fsrt".into(), fsrt_json(&first.fsrt));
    m.insert("alpha_lcm".into(), json!(design.alpha()));
    m.insert(
        "raw_counts".into(),
        Value::Array(design.raw_counts().iter().map(big).collect()),
    );
    m.insert("F".into(), big(design.f()));
    m.insert("F_jcm".into(), big(design.f_jcm()));
    let g = design.gains();
    m.insert(
        "gains".into(),
        json!({
            "raw_subfile_saving": big(&g.raw_subfile_saving),
            "raw_packet_saving": big(&g.raw_packet_saving),
            "splitting_gain": signed(&g.splitting_gain),
        }),
    );
    let coupled = match design {
        Design::Ptb(_) => Value::Null,
        Design::Coupled(d) => json!({
            "H": d.layers.len(),
            "gamma": d.layers.iter().map(|l| rational(&l.gamma)).collect::<Vec<_>>(),
            "alphas": d.layers.iter().map(|l| l.plan.alpha().to_vec()).collect::<Vec<_>>(),
            "layers": d.layers.iter().map(|l| json!({
                "multicast_types": multicast_json(&l.plan, &d.grouping),
                "fsrt": fsrt_json(&l.plan.fsrt),
            })).collect::<Vec<_>>(),
        }),
    };
    m.insert("coupled".into(), coupled);
    Value::Object(m)
}

fn doc_err(msg: impl Into<String>) -> DesignError {
    DesignError::Document(msg.into())
}

fn get_u32(v: &Value, key: &str) -> Result<Option<u32>, DesignError> {
    match v.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(x) => x
            .as_u64()
            .and_then(|n| u32::try_from(n).ok())
            .map(Some)
            .ok_or_else(|| doc_err(format!("`{key}` must be a small non-negative integer"))),
    }
}

fn selection_of(mtypes: &Value) -> Result<Vec<Vec<usize>>, DesignError> {
    let arr = mtypes
        .as_array()
        .ok_or_else(|| doc_err("`multicast_types` must be an array"))?;
    arr.iter()
        .map(|s| {
            s.get("transmitters")
                .and_then(Value::as_array)
                .ok_or_else(|| doc_err("multicast type without `transmitters`"))?
                .iter()
                .map(|c| {
                    c.as_u64()
                        .map(|c| c as usize)
                        .ok_or_else(|| doc_err("bad transmitter index"))
                })
                .collect()
        })
        .collect()
}

fn check_labels(mtypes: &Value, plan: &SplitPlan) -> Result<(), DesignError> {
    for (doc, s) in mtypes
        .as_array()
        .into_iter()
        .flatten()
        .zip(&plan.multicast_types)
    {
        if let Some(label) = doc.get("type").and_then(Value::as_str) {
            if label != s.label() {
                return Err(doc_err(format!(
                    "multicast type {label} does not match rebuilt {}",
                    s.label()
                )));
            }
        }
    }
    Ok(())
}

/// Rebuilds a design from its document and verifies `alpha_lcm` and `F`
/// when present.
pub fn from_json(v: &Value) -> Result<Design, DesignError> {
    let k = get_u32(v, "K")?.ok_or_else(|| doc_err("missing `K`"))?;
    let t = get_u32(v, "t")?.ok_or_else(|| doc_err("missing `t`"))?;
    let parts: Vec<u32> = v
        .get("grouping")
        .and_then(Value::as_array)
        .ok_or_else(|| doc_err("missing `grouping`"))?
        .iter()
        .map(|x| {
            x.as_u64()
                .map(|x| x as u32)
                .ok_or_else(|| doc_err("bad group size"))
        })
        .collect::<Result<_, _>>()?;
    let q = NodeGrouping::new(&parts)?;
    let design: Design = match v.get("coupled") {
        Some(c) if !c.is_null() => {
            let layers = c
                .get("layers")
                .and_then(Value::as_array)
                .ok_or_else(|| doc_err("coupled design without `layers`"))?;
            let sels = layers
                .iter()
                .map(|l| selection_of(l.get("multicast_types").unwrap_or(&Value::Null)))
                .collect::<Result<Vec<_>, _>>()?;
            let d = CoupledDesign::build(k, t, q, &sels)?;
            for (l, doc) in d.layers.iter().zip(layers) {
                check_labels(&doc["multicast_types"], &l.plan)?;
            }
            if let Some(g) = c.get("gamma").and_then(Value::as_array) {
                for (want, l) in g.iter().zip(&d.layers) {
                    let want = want.as_str().and_then(parse_rational);
                    if want.as_ref() != Some(&l.gamma) {
                        return Err(doc_err(format!(
                            "stored length ratio does not match rebuilt {}",
                            rational_string(&l.gamma)
                        )));
                    }
                }
            }
            d.into()
        }
        _ => {
            let mtypes = v
                .get("multicast_types")
                .ok_or_else(|| doc_err("missing `multicast_types`"))?;
            let d = PtbDesign::build(k, t, q, &selection_of(mtypes)?)?;
            check_labels(mtypes, &d.plan)?;
            d.into()
        }
    };
    let design = match (get_u32(v, "N")?, get_u32(v, "M")?) {
        (Some(n), Some(m)) => design.with_library(n, m)?,
        _ => design,
    };
    if let Some(a) = v.get("alpha_lcm") {
        if a != &json!(design.alpha()) {
            return Err(doc_err(
                "stored `alpha_lcm` does not match the rebuilt design",
            ));
        }
    }
    if let Some(f) = v.get("F") {
        if f != &big(design.f()) {
            return Err(doc_err(format!(
                "stored `F` does not match rebuilt {}",
                design.f()
            )));
        }
    }
    Ok(design)
}
