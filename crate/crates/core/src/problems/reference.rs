//! Reference trajectories for problems without a closed-form solution.

use super::{vdp, DEFAULT_VDP_MU};
use crate::error::{Error, Result};
use crate::integrators::{IntegrateOptions, MethodSpec, ReferenceMethod};
use num_complex::Complex64;
use std::io::{BufRead, Write};

/// Step used for the classical RK4 reference runs.
pub const REFERENCE_DT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFixture {
    pub problem: String,
    pub mu: f64,
    pub method: String,
    pub dt: f64,
    pub seed: u64,
    pub t_end: f64,
    pub state: Vec<f64>,
}

/// Van der Pol state at `t_end` from classical RK4 with step `dt`.
pub fn vdp_reference(mu: f64, t_end: f64, dt: f64) -> Result<ReferenceFixture> {
    let p = vdp(mu).with_t_end(t_end);
    let r = p.integrate(&MethodSpec::reference(ReferenceMethod::Rk4), dt, &IntegrateOptions::default())?;
    Ok(ReferenceFixture {
        problem: "vdp".into(),
        mu,
        method: ReferenceMethod::Rk4.name().into(),
        dt,
        seed: 0,
        t_end,
        state: r.final_state().iter().map(|z| z.re).collect(),
    })
}

pub fn default_vdp_reference(t_end: f64) -> Result<ReferenceFixture> {
    vdp_reference(DEFAULT_VDP_MU, t_end, REFERENCE_DT)
}

impl ReferenceFixture {
    pub fn complex_state(&self) -> Vec<Complex64> {
        self.state.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    /// Comment header with the generation parameters, then `t,y_1..y_N`.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# problem={} mu={} method={} dt={:e} seed={}",
            self.problem, self.mu, self.method, self.dt, self.seed
        )?;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.state.len()).map(|i| format!("y_{i}")));
        w.write_record(&header)?;
        let mut row = vec![format!("{:.16e}", self.t_end)];
        row.extend(self.state.iter().map(|v| format!("{v:.16e}")));
        w.write_record(&row)?;
        w.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(mut input: R) -> Result<Self> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let meta = first
            .strip_prefix('#')
            .ok_or_else(|| Error::arg("fixture lacks its parameter header"))?;
        let field = |key: &str| -> Result<String> {
            meta.split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .map(str::to_string)
                .ok_or_else(|| Error::arg(format!("fixture header lacks {key}")))
        };
        let num = |key: &str| -> Result<f64> {
            field(key)?
                .parse()
                .map_err(|_| Error::arg(format!("fixture field {key} is not a number")))
        };
        let mut rdr = csv::Reader::from_reader(input);
        let rec = rdr
            .records()
            .next()
            .ok_or_else(|| Error::arg("fixture has no data row"))??;
        let values: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::arg("fixture row is not numeric"))?;
        let (t_end, state) = values.split_first().ok_or_else(|| Error::arg("empty fixture row"))?;
        Ok(ReferenceFixture {
            problem: field("problem")?,
            mu: num("mu")?,
            method: field("method")?,
            dt: num("dt")?,
            seed: num("seed")? as u64,
            t_end: *t_end,
            state: state.to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_round_trip() {
        let f = vdp_reference(1.0, 0.01, 1e-4).unwrap();
        let mut buf = Vec::new();
        f.write(&mut buf).unwrap();
        let back = ReferenceFixture::read(&buf[..]).unwrap();
        assert_eq!(back, f);
    }
}
