use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::verification::{BoundednessReport, ErrorTable, MinimaSeries, SchemeDistance};

pub const MINIMA_HEADER: &str = "step,time,min_u,min_v,min_m";
pub const ERRORS_HEADER: &str =
    "level,n,h,dt,e_u_L2,e_v_L2,e_m_L2,e_sigma_L2,e_u_H1,e_m_H1,order_u,order_v,order_m,order_sigma";

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Adds a `min_s` column when any row carries it.
pub fn write_minima(path: impl AsRef<Path>, series: &MinimaSeries) -> Result<()> {
    let with_s = series.rows.iter().any(|r| r.min_s.is_some());
    let mut out = String::from(MINIMA_HEADER);
    if with_s {
        out.push_str(",min_s");
    }
    out.push('\n');
    for r in &series.rows {
        let _ = write!(out, "{},{},{},{},{}", r.step, r.time, r.min_u, r.min_v, r.min_m);
        if with_s {
            let _ = write!(out, ",{}", opt(r.min_s));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_errors(path: impl AsRef<Path>, table: &ErrorTable) -> Result<()> {
    let mut out = format!("{ERRORS_HEADER}\n");
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.level,
            r.n,
            r.h,
            r.dt,
            r.e_u_l2,
            r.e_v_l2,
            r.e_m_l2,
            opt(r.e_sigma_l2),
            r.e_u_h1,
            r.e_m_h1,
            opt(r.order_u),
            opt(r.order_v),
            opt(r.order_m),
            opt(r.order_sigma)
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// One `quantity,value` line per diagnostic.
pub fn write_diagnostics(path: impl AsRef<Path>, r: &BoundednessReport) -> Result<()> {
    let mut out = String::from("quantity,value\n");
    let rows: [(&str, String); 11] = [
        ("steps", r.steps.to_string()),
        ("v0_sup", r.v0_sup.to_string()),
        ("max_v_sup", r.max_v_sup.to_string()),
        ("v_sup_violated", r.v_sup_violated.to_string()),
        ("max_m_L2", r.max_m_l2.to_string()),
        ("dt_sum_m_H1_sq", r.m_h1_sq_sum.to_string()),
        ("dt_sum_dm_L2_sq", r.dm_l2_sq_sum.to_string()),
        ("v_increase_count", r.v_increase_count.to_string()),
        ("v_increase_with_nonneg_m", r.v_increase_with_nonneg_m.to_string()),
        ("all_finite", r.all_finite.to_string()),
        ("bounded", (r.all_finite && !r.v_sup_violated).to_string()),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_distances(path: impl AsRef<Path>, rows: &[SchemeDistance]) -> Result<()> {
    let mut out = String::from("n,dt,d_u_L2,d_v_L2,d_m_L2,ratio_u\n");
    for (k, d) in rows.iter().enumerate() {
        let ratio = (k > 0).then(|| d.u / rows[k - 1].u);
        let _ = writeln!(out, "{},{},{},{},{},{}", d.n, d.dt, d.u, d.v, d.m, opt(ratio));
    }
    std::fs::write(path, out)?;
    Ok(())
}
