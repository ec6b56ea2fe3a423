use std::fmt::Write;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use ptb_core::design::json::rational_string;
use ptb_core::design::Design;
use ptb_core::scheme::minimal_file_bits;
use ptb_core::search::SearchResult;
use ptb_core::simulate::SimReport;

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn ratio_cell(r: &BigRational) -> String {
    format!(
        "{} ({:.6})",
        rational_string(r),
        r.to_f64().unwrap_or(f64::NAN)
    )
}

pub fn design_table(d: &Design, bound: Option<&BigRational>) -> String {
    let mut s = String::new();
    let lib = d
        .library()
        .map(|l| format!(" N={} M={}", l.n, l.m))
        .unwrap_or_default();
    let _ = writeln!(s, "K={}{lib} t={} t_bar={}", d.k(), d.t(), d.k() - d.t());
    let _ = writeln!(s, "grouping        {}", d.grouping());
    let types: Vec<String> = d.packet_types().iter().map(|v| v.to_string()).collect();
    let _ = writeln!(s, "packet types    {}", types.join(" "));
    let _ = writeln!(s, "raw counts      {}", join(d.raw_counts()));
    let _ = writeln!(s, "alpha_lcm       {}", join(d.alpha()));
    for (h, (plan, len)) in d.layers().iter().enumerate() {
        if let Design::Coupled(c) = d {
            let _ = writeln!(
                s,
                "layer {}         gamma={} length={} alpha={}",
                h + 1,
                rational_string(&c.layers[h].gamma),
                len,
                join(plan.alpha())
            );
        }
        for (i, m) in plan.multicast_types.iter().enumerate() {
            let state = if plan.lcm.active[i] {
                format!("z={}", plan.lcm.scalars[i])
            } else {
                "idle".to_string()
            };
            let _ = writeln!(s, "  multicast     {:<24} {state}", m.label());
        }
    }
    let _ = writeln!(s, "F               {}", d.f());
    let _ = writeln!(s, "F_jcm           {}", d.f_jcm());
    let _ = writeln!(s, "ratio           {}", ratio_cell(&d.ratio()));
    if let Some(b) = bound {
        let _ = writeln!(s, "bound           {}", ratio_cell(b));
    }
    let g = d.gains();
    let _ = writeln!(
        s,
        "gains           raw sub-files {}, raw packets {}, splitting {}",
        g.raw_subfile_saving, g.raw_packet_saving, g.splitting_gain
    );
    let _ = writeln!(s, "min file size   {} bits", minimal_file_bits(d));
    s
}

pub fn sim_table(r: &SimReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "K={} N={} M={} t={} seed={} file_bits={}",
        r.k, r.n, r.m, r.t, r.seed, r.file_bits
    );
    let _ = writeln!(s, "demand          {}", join(&r.demand));
    let ok: Vec<&str> = r
        .decode_ok
        .iter()
        .map(|&b| if b { "ok" } else { "FAIL" })
        .collect();
    let _ = writeln!(s, "decoded         {}", ok.join(" "));
    let _ = writeln!(
        s,
        "cache sizes     {}",
        if r.cache_ok { "ok" } else { "MISMATCH" }
    );
    let _ = writeln!(s, "audit failures  {}", r.audit_failures);
    let _ = writeln!(s, "messages        {} ({} bits)", r.messages, r.bits);
    let _ = writeln!(
        s,
        "rate            {} (expected {})",
        rational_string(&r.rate),
        rational_string(&r.expected_rate)
    );
    let _ = writeln!(
        s,
        "F / F_jcm       {} / {} = {}",
        r.f,
        r.f_jcm,
        ratio_cell(&r.ratio)
    );
    let _ = writeln!(s, "payload digest  {}", r.payload_digest);
    let _ = writeln!(s, "wall time       {:.3} s", r.wall_time.as_secs_f64());
    s
}

pub fn search_summary(r: &SearchResult, top: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "K={} t={}: {} selections evaluated, {} skipped, {} duplicates{}",
        r.k,
        r.t,
        r.evaluated,
        r.skipped,
        r.duplicates,
        if r.timed_out { ", time budget hit" } else { "" }
    );
    let _ = writeln!(
        s,
        "rejected: {} without LCM vector, {} memory imbalance, {} undecodable",
        r.rejected.no_lcm, r.rejected.memory, r.rejected.decodability
    );
    match r.best.first() {
        Some(b) => {
            let _ = writeln!(
                s,
                "best F = {} (F_jcm = {}, ratio {:.6}), {} validated design(s) at this F",
                b.f(),
                b.design.f_jcm(),
                b.design.ratio_f64(),
                r.best.len()
            );
        }
        None => {
            let _ = writeln!(s, "no validated design");
        }
    }
    for (i, c) in r.ranked.iter().take(top).enumerate() {
        let _ = writeln!(
            s,
            "{:>4}  F={:<10} {:<18} {:<10} {}",
            i + 1,
            c.f().to_string(),
            c.design.grouping().to_string(),
            c.status.label(),
            c.selection_label()
        );
    }
    s
}
