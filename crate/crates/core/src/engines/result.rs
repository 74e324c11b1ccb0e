//! Tabulated quench output shared by every engine.

use std::io::Write;

use crate::error::{Error, Result};

/// Per-step observable series from one quench run. `values[i][j]` is
/// observable i at `steps[j]`; `stderrs` is populated by sampling engines.
#[derive(Debug, Clone)]
pub struct QuenchResult {
    pub engine: String,
    pub config_hash: String,
    pub observables: Vec<String>,
    pub steps: Vec<usize>,
    pub values: Vec<Vec<f64>>,
    pub stderrs: Option<Vec<Vec<f64>>>,
}

impl QuenchResult {
    pub fn new(engine: &str, observables: Vec<String>, with_stderr: bool) -> Self {
        let n = observables.len();
        QuenchResult {
            engine: engine.to_string(),
            config_hash: String::new(),
            observables,
            steps: Vec::new(),
            values: vec![Vec::new(); n],
            stderrs: if with_stderr { Some(vec![Vec::new(); n]) } else { None },
        }
    }

    pub fn push_step(&mut self, step: usize, values: &[f64], stderrs: Option<&[f64]>) {
        debug_assert_eq!(values.len(), self.observables.len());
        self.steps.push(step);
        for (col, &v) in self.values.iter_mut().zip(values.iter()) {
            col.push(v);
        }
        if let (Some(cols), Some(errs)) = (self.stderrs.as_mut(), stderrs) {
            debug_assert_eq!(errs.len(), cols.len());
            for (col, &e) in cols.iter_mut().zip(errs.iter()) {
                col.push(e);
            }
        }
    }

    pub fn series(&self, observable: &str) -> Result<&[f64]> {
        let idx = self
            .observables
            .iter()
            .position(|o| o == observable)
            .ok_or_else(|| Error::invalid(format!("no observable {observable:?}")))?;
        Ok(&self.values[idx])
    }

    pub fn stderr_series(&self, observable: &str) -> Result<&[f64]> {
        let idx = self
            .observables
            .iter()
            .position(|o| o == observable)
            .ok_or_else(|| Error::invalid(format!("no observable {observable:?}")))?;
        self.stderrs
            .as_ref()
            .map(|s| s[idx].as_slice())
            .ok_or_else(|| Error::invalid("engine reports no standard errors"))
    }

    pub fn final_value(&self, observable: &str) -> Result<f64> {
        let s = self.series(observable)?;
        s.last()
            .copied()
            .ok_or_else(|| Error::invalid("empty series"))
    }

    /// Writes rows ordered by step, then by observable; exact engines leave
    /// the stderr field empty. The config hash rides in a comment line so the
    /// file is self-identifying.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "# config {}", self.config_hash)?;
        writeln!(w, "step,observable,value,stderr,engine")?;
        for (j, &step) in self.steps.iter().enumerate() {
            for (i, obs) in self.observables.iter().enumerate() {
                let err = match &self.stderrs {
                    Some(cols) => format!("{}", cols[i][j]),
                    None => String::new(),
                };
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    step, obs, self.values[i][j], err, self.engine
                )?;
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("string write");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_is_stable() {
        let mut r = QuenchResult::new("statevector", vec!["sx_1".into(), "parity_x".into()], false);
        r.config_hash = "deadbeef".into();
        r.push_step(0, &[1.0, 1.0], None);
        r.push_step(1, &[0.5, 0.25], None);
        let csv = r.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# config deadbeef");
        assert_eq!(lines[1], "step,observable,value,stderr,engine");
        assert_eq!(lines[2], "0,sx_1,1,,statevector");
        assert_eq!(lines[3], "0,parity_x,1,,statevector");
        assert_eq!(lines[4], "1,sx_1,0.5,,statevector");
        assert_eq!(lines[5], "1,parity_x,0.25,,statevector");
    }

    #[test]
    fn stderr_column_appears_for_sampling_engines() {
        let mut r = QuenchResult::new("trajectories", vec!["sx_2".into()], true);
        r.push_step(1, &[0.75], Some(&[0.01]));
        let csv = r.to_csv_string();
        assert!(csv.lines().last().unwrap().starts_with("1,sx_2,0.75,0.01,"));
    }

    #[test]
    fn series_lookup() {
        let mut r = QuenchResult::new("density", vec!["sx_1".into()], false);
        r.push_step(0, &[0.9], None);
        assert_eq!(r.series("sx_1").unwrap(), &[0.9]);
        assert!(r.series("nope").is_err());
        assert!(r.stderr_series("sx_1").is_err());
    }
}
