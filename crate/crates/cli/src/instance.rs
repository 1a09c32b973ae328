//! Instance generation and prediction-set files.

use std::fs::File;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use spatial_select::{CovarianceModel, Point, ProblemInstance, Region};

use crate::error::{CliError, Result};

/// Name of the point generator recorded in output metadata.
pub const GENERATOR: &str = "ChaCha8Rng::seed_from_u64(seed); each coordinate lo + (hi - lo) * u, u uniform on [0, 1) with 53-bit resolution; points i.i.d. uniform over the region";

/// `n_pred` prediction points drawn i.i.d. uniformly over `region`.
pub fn generate_instance(
    region: &Region,
    n_pred: usize,
    budget: usize,
    model: CovarianceModel,
    seed: u64,
) -> Result<ProblemInstance> {
    if n_pred == 0 {
        return Err(CliError::Usage("an instance needs at least one prediction point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = region.lo().coords();
    let hi = region.hi().coords();
    let omega = (0..n_pred)
        .map(|_| {
            let coords = lo
                .iter()
                .zip(hi)
                .map(|(l, h)| (l + (h - l) * rng.random::<f64>()).min(*h))
                .collect();
            Point::new(coords)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(ProblemInstance::new(region.clone(), omega, budget, model)?)
}

/// Reads a CSV with header `x,y[,z...]` and one point per row.
pub fn read_omega_csv(path: &Path) -> Result<Vec<Point>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_omega_csv(file).map_err(|e| match e {
        CliError::Csv { source, .. } => CliError::csv(path, source),
        CliError::Usage(msg) => CliError::Usage(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_omega_csv(reader: impl std::io::Read) -> Result<Vec<Point>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let dim = rdr.headers().map_err(|e| CliError::csv("<input>", e))?.len();
    if dim == 0 {
        return Err(CliError::Usage("missing header row".into()));
    }
    let mut points = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::csv("<input>", e))?;
        let coords = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| CliError::Usage(format!("row {}: {e}", line + 2)))?;
        if coords.len() != dim {
            return Err(CliError::Usage(format!("row {}: expected {dim} fields", line + 2)));
        }
        points.push(Point::new(coords).map_err(|e| CliError::Usage(format!("row {}: {e}", line + 2)))?);
    }
    if points.is_empty() {
        return Err(CliError::Usage("no prediction points".into()));
    }
    Ok(points)
}

pub fn write_omega_csv(path: &Path, omega: &[Point]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let dim = omega.first().map_or(0, Point::dim);
    let header: Vec<String> = (0..dim).map(axis_name).collect();
    w.write_record(&header).map_err(|e| CliError::csv(path, e))?;
    for p in omega {
        w.write_record(p.coords().iter().map(|c| c.to_string()))
            .map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn axis_name(i: usize) -> String {
    match i {
        0 => "x".into(),
        1 => "y".into(),
        2 => "z".into(),
        n => format!("x{n}"),
    }
}

/// Parses `lo:hi[,lo:hi...]`, one interval per axis.
pub fn parse_region(spec: &str) -> Result<Region> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for part in spec.split(',') {
        let (a, b) = part
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("region axis `{part}` is not of the form lo:hi")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("region bound `{s}`: {e}")))
        };
        lo.push(parse(a)?);
        hi.push(parse(b)?);
    }
    Ok(Region::new(Point::new(lo)?, Point::new(hi)?)?)
}

/// SHA-256 of the instance's JSON form, hex encoded.
pub fn instance_hash(instance: &ProblemInstance) -> String {
    let bytes = serde_json::to_vec(instance).expect("instance serializes");
    hex::encode(Sha256::digest(&bytes))
}
