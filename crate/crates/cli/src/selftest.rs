//! Worked-example checks at K = 9, N = 3, M = 2, recomputed from the library.

use num_bigint::BigUint;
use num_rational::BigRational;
use ptb_core::design::{jcm_design, preset_triple_grouping};
use ptb_core::simulate::{self, DesignSource, SimConfig};

fn check(name: &str, ok: bool, detail: String) -> bool {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

pub fn run_checks() -> Vec<bool> {
    let mut results = Vec::new();
    let d = match preset_triple_grouping(9) {
        Ok(d) => d,
        Err(e) => return vec![check("triple preset", false, e.to_string())],
    };
    let kept = d.kept_raw_count();
    results.push(check(
        "kept raw sub-files",
        kept == BigUint::from(81u32),
        kept.to_string(),
    ));
    results.push(check("F", d.f == BigUint::from(270u32), d.f.to_string()));
    let jcm = jcm_design(9, 6).map(|j| j.f).unwrap_or_default();
    results.push(check(
        "F_jcm",
        jcm == BigUint::from(504u32),
        jcm.to_string(),
    ));
    let saving = d.gains().raw_subfile_saving;
    results.push(check(
        "raw sub-file saving",
        saving == BigUint::from(3u32),
        saving.to_string(),
    ));
    let mut alpha = d.alpha().to_vec();
    alpha.sort_unstable_by(|a, b| b.cmp(a));
    results.push(check(
        "alpha_lcm",
        alpha == [4, 3, 0],
        format!("{:?}", d.alpha()),
    ));
    let cfg = SimConfig::new(9, 3, 2, DesignSource::Design(Box::new(d.into())));
    match simulate::run(&cfg) {
        Ok(r) => {
            let half = BigRational::new(1.into(), 2.into());
            results.push(check(
                "all users decode",
                r.all_decoded(),
                format!("{:?}", r.decode_ok),
            ));
            results.push(check(
                "rate",
                r.rate == half,
                ptb_core::design::json::rational_string(&r.rate),
            ));
        }
        Err(e) => results.push(check("simulation", false, e.to_string())),
    }
    results
}

pub fn run() -> bool {
    let results = run_checks();
    results.iter().all(|&b| b)
}
