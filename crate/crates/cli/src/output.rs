//! CSV rendering and file output.

use std::fmt::Write as _;
use std::path::Path;

use oscnet::tuning::ScanPoint;
use oscnet::{ModeDecomposition, Trajectory};

use crate::error::CliError;
use crate::run::{Analysis, SweepPoint};

/// 12 significant digits.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.11e}")
    }
}

/// 17 significant digits, enough to round-trip an f64.
pub fn full(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

fn row(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let cells: Vec<String> = cells.into_iter().collect();
    out.push_str(&cells.join(","));
    out.push('\n');
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.nodes();
    let mut out = String::new();
    let mut header = vec!["t".to_string()];
    for j in 0..n {
        for c in ["mean_q", "mean_p", "var_q", "var_p", "cov_qp"] {
            header.push(format!("{c}_{j}"));
        }
    }
    header.push("total_energy".into());
    row(&mut out, header);
    for (k, t) in traj.times.iter().enumerate() {
        let mut cells = vec![num(*t)];
        for m in &traj.moments[k] {
            cells.extend([m.mean_q, m.mean_p, m.var_q, m.var_p, m.cov_qp].map(num));
        }
        cells.push(num(traj.energy[k]));
        row(&mut out, cells);
    }
    out
}

pub fn measures_csv(traj: &Trajectory, a: &Analysis) -> String {
    let mut out = String::from("t,pair_i,pair_j,C,I,discord,logneg\n");
    for (s, &k) in a.indices.iter().enumerate() {
        for (p, &(i, j)) in a.pairs.iter().enumerate() {
            let c = a.correlations.as_ref().and_then(|cs| cs[p].values.get(k).copied()).unwrap_or(f64::NAN);
            let (mi, d, e) = match &a.measures {
                Some(m) => (m[p].mutual_information[s], m[p].discord[s], m[p].log_negativity[s]),
                None => (f64::NAN, f64::NAN, f64::NAN),
            };
            let _ = writeln!(out, "{},{i},{j},{},{},{},{}", num(traj.times[k]), num(c), num(mi), num(d), num(e));
        }
    }
    out
}

pub fn aggregate_csv(traj: &Trajectory, a: &Analysis) -> String {
    let mut out = String::from("t,S,avg_discord,avg_I,avg_logneg,avg_discord_filtered\n");
    for (s, &k) in a.indices.iter().enumerate() {
        row(
            &mut out,
            [
                traj.times[k],
                a.s_at(k),
                a.avg_discord[s],
                a.avg_mutual_information[s],
                a.avg_log_negativity[s],
                a.avg_discord_filtered[s],
            ]
            .map(num),
        );
    }
    out
}

pub fn modes_csv(d: &ModeDecomposition) -> String {
    let mut out = String::from("mode,Omega,kappa,Gamma,D\n");
    for k in 0..d.len() {
        let _ = writeln!(
            out,
            "{k},{},{},{},{}",
            full(d.omega()[k]),
            full(d.kappa()[k]),
            full(d.damping()[k]),
            full(d.diffusion()[k])
        );
    }
    out
}

/// `F[node, mode]`, one row per node.
pub fn transform_csv(d: &ModeDecomposition) -> String {
    let f = d.transform();
    let mut out = String::new();
    row(&mut out, std::iter::once("node".to_string()).chain((0..f.ncols()).map(|k| format!("mode_{k}"))));
    for j in 0..f.nrows() {
        row(&mut out, std::iter::once(j.to_string()).chain((0..f.ncols()).map(|k| full(f[(j, k)]))));
    }
    out
}

pub fn scan_csv(scan: &[ScanPoint]) -> String {
    let mut out = String::from("value,kappa_sigma,sigma,discontinuity\n");
    for p in scan {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            full(p.value),
            full(p.kappa_sigma.unwrap_or(f64::NAN)),
            p.sigma.map_or(String::new(), |s| s.to_string()),
            u8::from(p.discontinuity)
        );
    }
    out
}

/// Heat-map rows `(value, t, S, ⟨δ⟩)` on each point's strided grid; ⟨δ⟩ is
/// the filtered pair average.
pub fn sweep_map_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("value,t,S,avg_discord\n");
    for p in points {
        let Ok(sim) = &p.outcome else { continue };
        let Some(a) = &sim.analysis else { continue };
        for (s, &k) in a.indices.iter().enumerate() {
            row(&mut out, [p.value, sim.trajectory.times[k], a.s_at(k), a.avg_discord_filtered[s]].map(num));
        }
    }
    out
}

pub fn sweep_failures_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("value,kind,message\n");
    for p in points {
        if let Err(e) = &p.outcome {
            let _ = writeln!(out, "{},{},\"{}\"", full(p.value), e.kind(), e.to_string().replace('"', "\"\""));
        }
    }
    out
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}
