//! CSV and gnuplot emission for experiment results.

use super::{ExperimentConfig, ExperimentOutput};
use crate::error::Result;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Provenance line written at the top of every CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvHeader {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl CsvHeader {
    pub fn for_config(cfg: &ExperimentConfig) -> Self {
        CsvHeader {
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
        }
    }

    pub fn line(&self) -> String {
        format!("# cxpath {} config={} seed={}", self.version, self.config_hash, self.seed)
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

struct Sink<'a> {
    dir: &'a Path,
    header: String,
    written: Vec<PathBuf>,
}

impl Sink<'_> {
    fn csv(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let mut f = BufWriter::new(File::create(&path)?);
        writeln!(f, "{}", self.header)?;
        body(&mut f)?;
        f.flush()?;
        self.written.push(path);
        Ok(())
    }

    fn script(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }
}

fn rows<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

/// Writes the CSVs and gnuplot scripts of `output` into `dir`.
pub fn write_outputs(cfg: &ExperimentConfig, output: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut sink = Sink {
        dir,
        header: CsvHeader::for_config(cfg).line(),
        written: Vec::new(),
    };
    match output {
        ExperimentOutput::Converge(tables) => {
            sink.csv("converge.csv", |f| {
                rows(
                    f,
                    &["problem", "method", "dt", "error", "evaluations", "note"],
                    tables.iter().flat_map(|t| {
                        t.rows.iter().map(|r| {
                            vec![
                                t.problem.clone(),
                                t.method.clone(),
                                num(r.dt),
                                r.error.map(num).unwrap_or_default(),
                                r.evaluations.to_string(),
                                r.note.clone().unwrap_or_default(),
                            ]
                        })
                    }),
                )
            })?;
            sink.csv("slopes.csv", |f| {
                rows(
                    f,
                    &["problem", "method", "slope", "nominal_order"],
                    tables.iter().map(|t| {
                        vec![
                            t.problem.clone(),
                            t.method.clone(),
                            t.slope.map(num).unwrap_or_default(),
                            t.nominal_order.to_string(),
                        ]
                    }),
                )
            })?;
            let mut gp = String::from(
                "set datafile separator ','\nset logscale xy\nset xlabel 'dt'\nset ylabel 'error'\nset key left top\n",
            );
            gp.push_str("set terminal pngcairo size 900,600\nset output 'converge.png'\nplot \\\n");
            let plots: Vec<String> = tables
                .iter()
                .map(|t| {
                    format!(
                        "  'converge.csv' every ::1 using ((strcol(1) eq '{p}' && strcol(2) eq '{m}') ? $3 : 1/0):4 with linespoints title '{p} {m}'",
                        p = t.problem,
                        m = t.method
                    )
                })
                .collect();
            gp.push_str(&plots.join(", \\\n"));
            gp.push('\n');
            sink.script("converge.gp", &gp)?;
        }
        ExperimentOutput::Stability(entries) => {
            let mut gp = String::from(
                "set datafile separator ','\nset size ratio -1\nset xlabel 'Re z'\nset ylabel 'Im z'\nset terminal pngcairo size 800,800\nset output 'stability.png'\nplot \\\n",
            );
            let mut plots = Vec::new();
            for e in entries {
                let stem = file_stem(&e.name);
                sink.csv(&format!("region_{stem}.csv"), |f| e.raster.write_csv(f))?;
                sink.csv(&format!("boundary_{stem}.csv"), |f| {
                    crate::stability::write_polyline_csv(&e.boundary, f)
                })?;
                plots.push(format!("  'boundary_{stem}.csv' every ::1 using 1:2 with lines title '{}'", e.name));
            }
            sink.csv("extents.csv", |f| {
                rows(
                    f,
                    &["name", "ray_re", "ray_im", "extent", "unbounded"],
                    entries.iter().flat_map(|e| {
                        e.extents.iter().map(|(d, x)| {
                            vec![e.name.clone(), num(d.re), num(d.im), num(x.extent), x.unbounded.to_string()]
                        })
                    }),
                )
            })?;
            gp.push_str(&plots.join(", \\\n"));
            gp.push('\n');
            sink.script("stability.gp", &gp)?;
        }
        ExperimentOutput::Paths(lines) => {
            sink.csv("paths.csv", |f| {
                rows(
                    f,
                    &["path", "index", "re", "im"],
                    lines.iter().flat_map(|l| {
                        l.points
                            .iter()
                            .enumerate()
                            .map(|(i, z)| vec![l.name.clone(), i.to_string(), num(z.re), num(z.im)])
                    }),
                )
            })?;
            let plots: Vec<String> = lines
                .iter()
                .map(|l| {
                    format!(
                        "  'paths.csv' every ::1 using (strcol(1) eq '{n}' ? $3 : 1/0):4 with linespoints title '{n}'",
                        n = l.name
                    )
                })
                .collect();
            let gp = format!(
                "set datafile separator ','\nset xlabel 'Re t'\nset ylabel 'Im t'\nset terminal pngcairo size 900,600\nset output 'paths.png'\nplot \\\n{}\n",
                plots.join(", \\\n")
            );
            sink.script("paths.gp", &gp)?;
        }
        ExperimentOutput::Ssp(curve) => {
            sink.csv("ssp.csv", |f| curve.write_csv(f))?;
            let plots: Vec<String> = curve
                .methods
                .iter()
                .enumerate()
                .map(|(i, m)| format!("  'ssp.csv' every ::1 using 1:{} with lines title '{m}'", i + 2))
                .collect();
            let gp = format!(
                "set datafile separator ','\nset xlabel 'u_n'\nset ylabel 'max dt'\nset terminal pngcairo size 900,600\nset output 'ssp.png'\nplot \\\n{}\n",
                plots.join(", \\\n")
            );
            sink.script("ssp.gp", &gp)?;
        }
        ExperimentOutput::Schrodinger(cmp) => {
            let [a, b] = &cmp.methods;
            sink.csv("schrodinger.csv", |f| {
                rows(
                    f,
                    &[
                        "dt",
                        &format!("error_{a}"),
                        &format!("error_{b}"),
                        &format!("evaluations_{a}"),
                        &format!("evaluations_{b}"),
                    ],
                    cmp.rows.iter().map(|r| {
                        vec![
                            num(r.dt),
                            num(r.errors[0]),
                            num(r.errors[1]),
                            r.evaluations[0].to_string(),
                            r.evaluations[1].to_string(),
                        ]
                    }),
                )
            })?;
            let gp = format!(
                "set datafile separator ','\nset logscale xy\nset xlabel 'function evaluations'\nset ylabel 'max error'\nset terminal pngcairo size 900,600\nset output 'schrodinger.png'\nplot 'schrodinger.csv' every ::1 using 4:2 with linespoints title '{a}', \\\n  'schrodinger.csv' every ::1 using 5:3 with linespoints title '{b}'\n"
            );
            sink.script("schrodinger.gp", &gp)?;
        }
        ExperimentOutput::SolveComposite(sol) => {
            let path = dir.join("composite.json");
            std::fs::write(&path, sol.scheme.to_json()?)?;
            sink.written.push(path);
            sink.csv("composite.csv", |f| {
                rows(
                    f,
                    &["coefficient", "re", "im"],
                    ["a121", "b11", "b12", "a221", "a231", "a232", "b21", "b22", "b23"]
                        .iter()
                        .zip(sol.coefficients.as_array())
                        .map(|(n, z)| vec![n.to_string(), num(z.re), num(z.im)])
                        .chain(std::iter::once(vec![
                            "residual_inf".into(),
                            num(sol.residual_inf),
                            num(0.0),
                        ])),
                )
            })?;
        }
    }
    Ok(sink.written)
}
