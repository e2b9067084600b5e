use std::fmt::Write as _;

use super::{linspace, FuzzyError, GainTuner};

pub const SURFACE_CSV_HEADER: &str = "e,de,dkp,dki,dkd";

/// Evaluates the tuner on an `n × n` grid over `[-1, 1]²`.
pub fn control_surface(tuner: &dyn GainTuner, n: usize) -> Result<Vec<[f64; 5]>, FuzzyError> {
    let axis = linspace(-1.0, 1.0, n.max(2));
    let mut rows = Vec::with_capacity(axis.len() * axis.len());
    for e in &axis {
        for de in &axis {
            let d = tuner.infer(*e, *de)?;
            rows.push([*e, *de, d.kp, d.ki, d.kd]);
        }
    }
    Ok(rows)
}

pub fn control_surface_csv(tuner: &dyn GainTuner, n: usize) -> Result<String, FuzzyError> {
    let mut s = String::from(SURFACE_CSV_HEADER);
    s.push('\n');
    for r in control_surface(tuner, n)? {
        writeln!(s, "{},{},{},{},{}", r[0], r[1], r[2], r[3], r[4]).unwrap();
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::T1Engine;

    #[test]
    fn surface_shape() {
        let csv = control_surface_csv(&T1Engine::standard(), 5).unwrap();
        assert_eq!(csv.lines().count(), 26);
        assert!(csv.starts_with(SURFACE_CSV_HEADER));
    }
}
