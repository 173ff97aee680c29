use std::io::{self, Write};

use super::Trajectory;

/// Column names for a trajectory with `n` coordinates and `m` constraints.
pub fn csv_header(n: usize, m: usize, open: bool) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("q_{i}")));
    cols.extend((1..=n).map(|i| format!("v_{i}")));
    cols.push("S".into());
    cols.extend((1..=n).map(|i| format!("p_{i}")));
    cols.extend((1..=m).map(|i| format!("mu_{i}")));
    for c in ["E", "Sdot", "dirac_residual", "power_ext"] {
        cols.push(c.into());
    }
    if open {
        for c in ["N", "I", "P_W", "P_H", "P_M", "p_time"] {
            cols.push(c.into());
        }
    }
    cols
}

/// Writes every sample with 17 significant digits.
pub fn write_csv(trajectory: &Trajectory, mut out: impl Write) -> io::Result<()> {
    let open = trajectory.is_open();
    writeln!(
        out,
        "{}",
        csv_header(trajectory.dof, trajectory.constraints, open).join(",")
    )?;
    let mut row = Vec::new();
    for s in &trajectory.samples {
        row.clear();
        row.push(s.t);
        row.extend(s.point.q.iter());
        row.extend(s.point.v.iter());
        row.push(s.point.entropy);
        row.extend(s.point.p.iter());
        row.extend(s.multipliers.iter());
        row.extend([s.energy, s.sdot, s.dirac_residual, s.power_ext]);
        if let Some(o) = &s.open {
            row.extend([
                s.point.moles,
                o.internal_entropy_production,
                o.p_w,
                o.p_h,
                o.p_m,
                o.p_time,
            ]);
        }
        let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}
