//! Trajectory CSV, capture sidecar JSON and a static SVG plot.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so output
//! bytes depend only on the simulated values.

use std::fmt::Write as _;

use serde_json::json;

use crate::engine::{min_distance_trace, SimulationResult};

fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Header: `t,y_1..y_n,x1_1..x1_n,...,omega_1..omega_m,min_dist`.
///
/// Omega columns are left empty when the run did not use the pursuit strategy.
pub fn trajectory_csv(result: &SimulationResult) -> String {
    let n = result.evader_traj.first().map_or(0, |y| y.dim());
    let m = result.num_pursuers();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|k| format!("y_{k}")));
    for i in 1..=m {
        header.extend((1..=n).map(|k| format!("x{i}_{k}")));
    }
    header.extend((1..=m).map(|i| format!("omega_{i}")));
    header.push("min_dist".into());

    let mut out = header.join(",");
    out.push('\n');
    let dists = min_distance_trace(result);
    for (k, &t) in result.times.iter().enumerate() {
        let mut row = vec![num(t)];
        row.extend(result.evader_traj[k].coords().iter().map(|&c| num(c)));
        for traj in &result.pursuer_trajs {
            row.extend(traj[k].coords().iter().map(|&c| num(c)));
        }
        match &result.omega_traces {
            Some(om) => row.extend(om.iter().map(|tr| num(tr[k]))),
            None => row.extend(std::iter::repeat_n(String::new(), m)),
        }
        row.push(num(dists[k].1));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// `{"capture": {"i": k, "tau": t} | null, "capture_rule": ..., ...}` with a
/// one-based pursuer index.
pub fn events_json(result: &SimulationResult) -> String {
    let capture = result.capture.as_ref().map(|c| {
        json!({
            "i": c.pursuer_index + 1,
            "tau": c.time,
            "position": c.position.coords(),
        })
    });
    let rule = match result.capture_tolerance {
        None => json!({"kind": "gap-crossing"}),
        Some(tol) => json!({"kind": "distance", "tolerance": tol}),
    };
    let doc = json!({
        "capture": capture,
        "capture_rule": rule,
        "final_time": result.final_time(),
    });
    serde_json::to_string_pretty(&doc).expect("json values serialize") + "\n"
}

/// One-line human summary, e.g. `captured i=2 tau=1.0`.
pub fn capture_summary(result: &SimulationResult) -> String {
    match &result.capture {
        Some(c) => format!("captured i={} tau={:?}", c.pursuer_index + 1, c.time),
        None => "no capture within horizon".to_string(),
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
];

/// Renders trajectories projected on coordinates `(a, b)` (zero-based). For
/// one-dimensional games the horizontal axis is time.
pub fn trajectory_svg(result: &SimulationResult, axes: (usize, usize)) -> String {
    let dim = result.evader_traj[0].dim();
    let point = |k: usize, p: &crate::vectorspace::Vec2l| -> (f64, f64) {
        if dim == 1 {
            (result.times[k], p[0])
        } else {
            (p[axes.0], p[axes.1])
        }
    };
    let mut tracks: Vec<Vec<(f64, f64)>> = Vec::new();
    tracks.push(
        result
            .evader_traj
            .iter()
            .enumerate()
            .map(|(k, p)| point(k, p))
            .collect(),
    );
    for traj in &result.pursuer_trajs {
        tracks.push(traj.iter().enumerate().map(|(k, p)| point(k, p)).collect());
    }
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in tracks.iter().flatten() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let size = 600.0;
    let pad = 20.0;
    let sx = |x: f64| pad + (x - x0) / span * (size - 2.0 * pad);
    let sy = |y: f64| size - pad - (y - y0) / span * (size - 2.0 * pad);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (idx, track) in tracks.iter().enumerate() {
        let (color, name) = if idx == 0 {
            ("#d62728", "evader".to_string())
        } else {
            (PALETTE[(idx - 1) % PALETTE.len()], format!("pursuer {idx}"))
        };
        let pts: Vec<String> = track
            .iter()
            .map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{name}</title></polyline>"#,
            pts.join(" ")
        );
        if let Some(&(x, y)) = track.first() {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.3}" cy="{:.3}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
    }
    if let Some(c) = &result.capture {
        let k = result.times.len() - 1;
        let (x, y) = point(k, &c.position);
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.3}" cy="{:.3}" r="6" fill="none" stroke="black" stroke-width="2"><title>capture by pursuer {} at t={:?}</title></circle>"#,
            sx(x),
            sy(y),
            c.pursuer_index + 1,
            c.time
        );
    }
    svg.push_str("</svg>\n");
    svg
}
