use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::eval::ResultRow;
use crate::environment::TransitionRecord;
use crate::error::{Result, SimError};

pub const CSV_HEADER: &str =
    "policy,i_max,seed,mean_pde,mean_cd,mean_pd,mean_ql,mean_qu,mean_qc,c10_violation_rate,terminal_uav_distance";

pub const TRAJECTORY_HEADER: &str = "interval,device,ql,qu,qc,reward,eta,t_comm,b_tot";

/// Decimal notation rounded to six significant digits.
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn row_line(r: &ResultRow) -> String {
    let mut line = format!("{},{},{}", r.policy.name(), format_sig6(r.i_max), r.seed);
    for v in [
        r.mean_pde,
        r.mean_cd,
        r.mean_pd,
        r.mean_ql,
        r.mean_qu,
        r.mean_qc,
        r.c10_violation_rate,
        r.terminal_uav_distance,
    ] {
        line.push(',');
        line.push_str(&format_sig6(v));
    }
    line
}

/// Render rows as CSV text, header first, newline-terminated.
pub fn emit_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&row_line(r));
        out.push('\n');
    }
    out
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    }
    fs::write(path, emit_csv(rows)).map_err(|e| SimError::io(path, e))
}

/// Parse CSV produced by [`emit_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        other => {
            return Err(SimError::Malformed {
                line: 1,
                content: other.map(|(_, l)| l.to_string()).unwrap_or_default(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let bad = || SimError::Malformed { line: i + 1, content: line.to_string() };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        rows.push(ResultRow {
            policy: f[0].parse().map_err(|_| bad())?,
            i_max: num(f[1])?,
            seed: f[2].parse().map_err(|_| bad())?,
            mean_pde: num(f[3])?,
            mean_cd: num(f[4])?,
            mean_pd: num(f[5])?,
            mean_ql: num(f[6])?,
            mean_qu: num(f[7])?,
            mean_qc: num(f[8])?,
            c10_violation_rate: num(f[9])?,
            terminal_uav_distance: num(f[10])?,
        });
    }
    Ok(rows)
}

/// One line per (interval, device), full precision.
pub fn write_trajectory<'a, W: std::io::Write>(
    w: &mut W,
    records: impl IntoIterator<Item = &'a TransitionRecord>,
) -> std::io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    let mut line = String::new();
    for t in records {
        for (k, d) in t.record.devices.iter().enumerate() {
            line.clear();
            let _ = write!(
                line,
                "{},{},{:?},{:?},{:?},{:?},{},{:?},{:?}",
                t.record.interval,
                k,
                d.queues.q_local,
                d.queues.q_uav,
                d.queues.q_cloud,
                d.reward,
                d.eta as u8,
                d.t_comm,
                d.b_tot
            );
            writeln!(w, "{line}")?;
        }
    }
    Ok(())
}
