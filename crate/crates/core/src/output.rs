//! CSV, legacy VTK and manifest writers, and a sink that puts them in a directory.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scenario::{EnergySample, ProbeSeries, RunOutput, Scenario, Simulation, Sink};
use crate::Real;

/// 17 significant digits, enough to round-trip an `f64`.
fn num<T: Real>(x: T) -> String {
    format!("{:.16e}", x.to_f64_lossy())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn write_probe_csv_to<T: Real>(series: &ProbeSeries<T>, w: &mut impl Write) -> std::io::Result<()> {
    write!(w, "t")?;
    for n in &series.names {
        write!(w, ",{n}_u1,{n}_u2,{n}_s11,{n}_s12,{n}_s22")?;
    }
    writeln!(w)?;
    for (t, row) in series.times.iter().zip(&series.samples) {
        write!(w, "{}", num(*t))?;
        for s in row {
            write!(
                w,
                ",{},{},{},{},{}",
                num(s.u[0]),
                num(s.u[1]),
                num(s.cauchy.xx),
                num(s.cauchy.xy),
                num(s.cauchy.yy)
            )?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// One header line plus one row per step.
pub fn write_probe_csv<T: Real>(series: &ProbeSeries<T>, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_probe_csv_to(series, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

const ENERGY_HEADER: &str = "t,external_work,kinetic,strain,imbalance";

pub fn write_energy_csv<T: Real>(energy: &[EnergySample<T>], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "{ENERGY_HEADER}")?;
        for e in energy {
            writeln!(
                w,
                "{},{},{},{},{}",
                num(e.t),
                num(e.external_work),
                num(e.kinetic),
                num(e.strain),
                num(e.imbalance())
            )?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

pub fn read_energy_csv(path: &Path) -> Result<Vec<EnergySample<f64>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if i == 0 {
            if line.trim() != ENERGY_HEADER {
                return Err(Error::Config(format!("{}: unexpected header `{line}`", path.display())));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if v.len() < 4 {
            return Err(Error::Config(format!("{}:{}: expected 5 columns", path.display(), i + 1)));
        }
        out.push(EnergySample {
            t: v[0],
            external_work: v[1],
            kinetic: v[2],
            strain: v[3],
        });
    }
    Ok(out)
}

pub fn write_vtk_to<T: Real>(sim: &Simulation<T>, w: &mut impl Write) -> Result<()> {
    let grid = &sim.scenario().grid;
    let sigma = sim.cauchy_field()?;
    let energy = sim.strain_energy_field()?;
    let mech = sim.mechanical();
    let j = &sim.kinetic().j;
    let [n1, n2] = grid.dims();
    let o = grid.origin();
    let h = grid.dx() * T::lit(0.5);
    let io = |e| Error::io("<vtk>", e);
    let mut text = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(text, "# vtk DataFile Version 3.0");
    let _ = writeln!(text, "solid-lbm t = {}", num(sim.time()));
    let _ = writeln!(text, "ASCII\nDATASET STRUCTURED_POINTS");
    let _ = writeln!(text, "DIMENSIONS {n1} {n2} 1");
    let _ = writeln!(text, "ORIGIN {} {} 0", num(o[0] + h), num(o[1] + h));
    let _ = writeln!(text, "SPACING {} {} 1", num(grid.dx()), num(grid.dx()));
    let _ = writeln!(text, "POINT_DATA {}", grid.len());
    let vector = |text: &mut String, name: &str, f: &dyn Fn(usize) -> [T; 2]| {
        let _ = writeln!(text, "VECTORS {name} double");
        for s in 0..grid.len() {
            let v = f(s);
            let _ = writeln!(text, "{} {} 0", num(v[0]), num(v[1]));
        }
    };
    let scalar = |text: &mut String, name: &str, f: &dyn Fn(usize) -> T| {
        let _ = writeln!(text, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for s in 0..grid.len() {
            let _ = writeln!(text, "{}", num(f(s)));
        }
    };
    vector(&mut text, "displacement", &|s| mech.u[s]);
    vector(&mut text, "momentum", &|s| j[s]);
    scalar(&mut text, "sigma11", &|s| sigma[s].xx);
    scalar(&mut text, "sigma12", &|s| sigma[s].xy);
    scalar(&mut text, "sigma22", &|s| sigma[s].yy);
    scalar(&mut text, "strain_energy", &|s| energy[s]);
    let _ = writeln!(text, "SCALARS solid int 1\nLOOKUP_TABLE default");
    for s in 0..grid.len() {
        let _ = writeln!(text, "{}", u8::from(grid.is_solid(s)));
    }
    w.write_all(text.as_bytes()).map_err(io)
}

/// Legacy ASCII structured-points file. Void sites carry zeros and
/// `solid = 0`.
pub fn write_vtk<T: Real>(sim: &Simulation<T>, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_vtk_to(sim, &mut w).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Resolved config (when given) plus everything derived from it.
pub fn manifest<T: Real>(scenario: &Scenario<T>, config: Option<&Value>) -> Value {
    let grid = &scenario.grid;
    let probes: Vec<Value> = scenario
        .probes
        .iter()
        .map(|p| {
            let x = grid.position(p.site);
            json!({
                "name": p.name,
                "requested": [p.requested[0].to_f64_lossy(), p.requested[1].to_f64_lossy()],
                "site": [x[0].to_f64_lossy(), x[1].to_f64_lossy()],
                "snap_distance": p.snap_distance.to_f64_lossy(),
            })
        })
        .collect();
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "scalar": std::any::type_name::<T>(),
        "config": config.cloned().unwrap_or(Value::Null),
        "dt": scenario.dt().to_f64_lossy(),
        "tau": scenario.params.tau.to_f64_lossy(),
        "grid": grid.dims(),
        "solid_sites": grid.solid_count(),
        "steps": scenario.steps(),
        "probes": probes,
    })
}

pub fn write_manifest(value: &Value, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("manifest serialises");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Writes `manifest.json` up front, `fields_NNNNNN.vtk` per frame, and
/// `probes.csv` and `energy.csv` at the end, or up to the failed step.
pub struct DirectorySink {
    dir: PathBuf,
    config: Option<Value>,
    frames: Vec<PathBuf>,
}

impl DirectorySink {
    pub fn new(dir: impl Into<PathBuf>, config: Option<Value>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir,
            config,
            frames: Vec::new(),
        })
    }

    pub fn start<T: Real>(&self, scenario: &Scenario<T>) -> Result<()> {
        write_manifest(&manifest(scenario, self.config.as_ref()), &self.dir.join("manifest.json"))
    }

    pub fn frames(&self) -> &[PathBuf] {
        &self.frames
    }
}

impl<T: Real> Sink<T> for DirectorySink {
    fn frame(&mut self, sim: &Simulation<T>) -> Result<()> {
        let path = self.dir.join(format!("fields_{:06}.vtk", sim.step_count()));
        write_vtk(sim, &path)?;
        self.frames.push(path);
        Ok(())
    }

    fn finish(&mut self, _sim: &Simulation<T>, output: &RunOutput<T>) -> Result<()> {
        write_probe_csv(&output.probes, &self.dir.join("probes.csv"))?;
        write_energy_csv(&output.energy, &self.dir.join("energy.csv"))
    }

    fn abort(&mut self, sim: &Simulation<T>, partial: &RunOutput<T>) -> Result<()> {
        self.finish(sim, partial)
    }
}
