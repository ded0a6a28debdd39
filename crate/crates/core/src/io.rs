//! CSV and JSON serialization of runs. Every CSV starts with a
//! `# config_hash=<hex>` comment line; writes go through a temporary file in
//! the target directory and a rename.

use crate::ancient::{AncientSolution, ResidualReport};
use crate::diagnostics::SeriesRow;
use crate::error::{Error, Result};
use crate::mesh::{Grid, GridFunction, SpaceTimeField, TimeMesh};
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::Path;

/// Writes `bytes` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("{} is not a file path", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn csv_bytes<I>(hash: &str, header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut buf = format!("# config_hash={hash}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
    }
    Ok(buf)
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

/// The hash recorded in the header comment of a CSV file, if any.
pub fn header_hash(path: &Path) -> Result<Option<String>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# config_hash="))
        .map(|s| s.trim().to_string()))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let f = fs::File::open(path)?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(f))
}

fn parse(s: &str, path: &Path) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidInput(format!("{}: cannot parse {s:?} as a number", path.display())))
}

/// `v,theta,t,value`, time-major, then `v`, then `θ`.
pub fn write_field(path: &Path, grid: &Grid, field: &SpaceTimeField, hash: &str) -> Result<()> {
    let (vs, ts) = (grid.v_nodes(), grid.theta_nodes());
    let nt = grid.n_theta();
    let rows = (0..field.n_t()).flat_map(|n| {
        let t = field.mesh.time(n);
        let s = field.slice(n);
        (0..grid.n_nodes()).map(move |k| vec![num(vs[k / nt]), num(ts[k % nt]), num(t), num(s[k])])
    });
    write_atomic(path, &csv_bytes(hash, &["v", "theta", "t", "value"], rows)?)
}

/// Reads a field written by [`write_field`] and checks it against `grid` and `mesh`.
pub fn read_field(path: &Path, grid: &Grid, mesh: TimeMesh) -> Result<SpaceTimeField> {
    let mut rd = reader(path)?;
    let nn = grid.n_nodes();
    let mut data = Vec::with_capacity(nn * mesh.n_t);
    let (vs, ts) = (grid.v_nodes(), grid.theta_nodes());
    let nt = grid.n_theta();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        if rec.len() != 4 {
            return Err(Error::InvalidInput(format!("{}: row {row} has {} columns", path.display(), rec.len())));
        }
        let (n, k) = (row / nn, row % nn);
        if n >= mesh.n_t {
            return Err(Error::InvalidInput(format!("{}: more rows than the time mesh holds", path.display())));
        }
        let (v, th, t) = (parse(&rec[0], path)?, parse(&rec[1], path)?, parse(&rec[2], path)?);
        let scale = 1e-9 * (1.0 + mesh.t_min.abs());
        if (v - vs[k / nt]).abs() > 1e-9 || (th - ts[k % nt]).abs() > 1e-9 || (t - mesh.time(n)).abs() > scale {
            return Err(Error::InvalidInput(format!(
                "{}: row {row} at (v, theta, t) = ({v}, {th}, {t}) does not match the grid",
                path.display()
            )));
        }
        data.push(parse(&rec[3], path)?);
    }
    if data.len() != nn * mesh.n_t {
        return Err(Error::InvalidInput(format!(
            "{}: {} values, expected {}",
            path.display(),
            data.len(),
            nn * mesh.n_t
        )));
    }
    let slices = data.chunks(nn).map(|c| c.to_vec()).collect();
    Ok(SpaceTimeField::from_slices(mesh, nn, slices))
}

/// `v,theta,value`.
pub fn write_grid_function(path: &Path, grid: &Grid, f: &GridFunction, hash: &str) -> Result<()> {
    let (vs, ts) = (grid.v_nodes(), grid.theta_nodes());
    let nt = grid.n_theta();
    let rows = f.values.iter().enumerate().map(|(k, &x)| vec![num(vs[k / nt]), num(ts[k % nt]), num(x)]);
    write_atomic(path, &csv_bytes(hash, &["v", "theta", "value"], rows)?)
}

/// `l,j,a_j,weighted_norm,iterations`, one row per mode of every level.
pub fn write_levels(path: &Path, sol: &AncientSolution, hash: &str) -> Result<()> {
    let rows = sol.levels.iter().flat_map(|lv| {
        lv.group.iter().zip(&lv.a).map(move |(&j, &a)| {
            vec![lv.level.to_string(), (j + 1).to_string(), num(a), num(lv.weighted_norm), lv.iterations.to_string()]
        })
    });
    write_atomic(path, &csv_bytes(hash, &["l", "j", "a_j", "weighted_norm", "iterations"], rows)?)
}

/// `t,sup` at the midpoints of the time intervals.
pub fn write_residual(path: &Path, res: &ResidualReport, hash: &str) -> Result<()> {
    let rows = res.times.iter().zip(&res.sup).map(|(&t, &s)| vec![num(t), num(s)]);
    write_atomic(path, &csv_bytes(hash, &["t", "sup"], rows)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub radius: f64,
    /// 1-based mode index.
    pub i: usize,
    pub lambda: f64,
    pub block_m: usize,
}

/// `R,i,lambda,block_m`.
pub fn write_spectrum(path: &Path, rows: &[SpectrumRow], hash: &str) -> Result<()> {
    let it = rows.iter().map(|r| vec![num(r.radius), r.i.to_string(), num(r.lambda), r.block_m.to_string()]);
    write_atomic(path, &csv_bytes(hash, &["R", "i", "lambda", "block_m"], it)?)
}

pub fn read_spectrum(path: &Path) -> Result<Vec<SpectrumRow>> {
    let mut rd = reader(path)?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let int = |s: &str| {
            s.trim().parse::<usize>().map_err(|_| Error::InvalidInput(format!("{}: bad integer {s:?}", path.display())))
        };
        out.push(SpectrumRow { radius: parse(&rec[0], path)?, i: int(&rec[1])?, lambda: parse(&rec[2], path)?, block_m: int(&rec[3])? });
    }
    Ok(out)
}

/// `t,sup_u,sup_w,area,Hsq_cum,total_curv`.
pub fn write_series(path: &Path, rows: &[SeriesRow], hash: &str) -> Result<()> {
    let it = rows
        .iter()
        .map(|r| vec![num(r.t), num(r.sup_u), num(r.sup_w), num(r.area), num(r.hsq_cum), num(r.total_curv)]);
    write_atomic(path, &csv_bytes(hash, &["t", "sup_u", "sup_w", "area", "Hsq_cum", "total_curv"], it)?)
}

/// Generic table with a header comment.
pub fn write_table(path: &Path, header: &[&str], rows: Vec<Vec<String>>, hash: &str) -> Result<()> {
    write_atomic(path, &csv_bytes(hash, header, rows)?)
}

/// Pretty JSON with a top-level `config_hash` key.
pub fn write_json<T: Serialize>(path: &Path, value: &T, hash: &str) -> Result<()> {
    let mut v = serde_json::to_value(value)?;
    if let serde_json::Value::Object(map) = &mut v {
        map.insert("config_hash".into(), serde_json::Value::String(hash.into()));
    }
    let mut bytes = serde_json::to_vec_pretty(&v)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn format_number(x: f64) -> String {
    num(x)
}
