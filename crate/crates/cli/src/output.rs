//! Deterministic text output: every float is rendered to 10 significant
//! digits through one function so repeated runs produce byte-identical
//! files, and every CSV line ends in `\n`.

use impulse_dose_core::bifurcation::BifurcationDiagram;
use impulse_dose_core::sim::SimTrace;
use std::fmt::Write;

/// Fixed 10-significant-digit decimal rendering.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".to_string()
        } else if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let mag = v.abs().log10().floor() as i32;
    let prec = (9 - mag).max(0) as usize;
    format!("{v:.prec$}")
}

pub const EVENTS_HEADER: &str = "n,t,lambda,T,x1_pre,x2_pre,x3_pre,x1_post,x2_post,x3_post";
pub const DENSE_HEADER: &str = "t,x1,x2,x3,ybar,y";
pub const BIFURCATION_HEADER: &str = "param,value,period,point_index,x1,x2,x3,saturated";

pub fn events_csv(trace: &SimTrace) -> String {
    let mut out = String::with_capacity(64 * (trace.events.len() + 1));
    out.push_str(EVENTS_HEADER);
    out.push('\n');
    for ev in &trace.events {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            ev.n,
            num(ev.t),
            num(ev.lambda),
            num(ev.period),
            num(ev.pre[0]),
            num(ev.pre[1]),
            num(ev.pre[2]),
            num(ev.post[0]),
            num(ev.post[1]),
            num(ev.post[2]),
        );
    }
    out
}

pub fn dense_csv(trace: &SimTrace) -> String {
    let mut out = String::with_capacity(48 * (trace.dense.len() + 1));
    out.push_str(DENSE_HEADER);
    out.push('\n');
    for s in &trace.dense {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            num(s.t),
            num(s.x[0]),
            num(s.x[1]),
            num(s.x[2]),
            num(s.ybar),
            num(s.y),
        );
    }
    out
}

pub fn bifurcation_csv(diagram: &BifurcationDiagram) -> String {
    let name = diagram.parameter.name();
    let mut out = String::with_capacity(64 * diagram.rows.len());
    out.push_str(BIFURCATION_HEADER);
    out.push('\n');
    for row in &diagram.rows {
        let period = match row.period {
            Some(p) => p.to_string(),
            None => "aperiodic".to_string(),
        };
        for (i, point) in row.points.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                name,
                num(row.value),
                period,
                i,
                num(point.x[0]),
                num(point.x[1]),
                num(point.x[2]),
                point.saturation.any(),
            );
        }
    }
    out
}
