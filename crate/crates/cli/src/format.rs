//! On-disk formats. Every dataset is a TOML manifest plus a raw
//! little-endian `f64` payload next to it, guarded by an FNV-1a checksum.

use std::fs;
use std::hash::Hasher;
use std::path::{Path, PathBuf};

use fnv::FnvHasher;
use hydrec::assembly::ComparisonReport;
use hydrec::numerics::{GridField, PhysicalConstants, SpatialGrid, TimeNodes};
use hydrec::potentials::PotentialModel;
use hydrec::simulator::{DensityMatrixGrid, OffDiagonalGrid, WaveFunction};
use hydrec::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

pub fn checksum_hex(bytes: &[u8]) -> String {
    format!("{:016x}", fnv1a64(bytes))
}

pub fn encode_f64s(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn decode_f64s(bytes: &[u8]) -> Result<Vec<f64>, CliError> {
    if !bytes.len().is_multiple_of(8) {
        return Err(CliError::Format(format!("payload length {} is not a multiple of 8", bytes.len())));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

/// Writes `values` to `path` and returns the checksum of the bytes written.
pub fn write_payload(path: &Path, values: &[f64]) -> Result<String, CliError> {
    let bytes = encode_f64s(values);
    fs::write(path, &bytes).map_err(|e| CliError::io(path, e))?;
    Ok(checksum_hex(&bytes))
}

/// Reads a payload, verifying its checksum and its length in values.
pub fn read_payload(path: &Path, checksum: &str, expected_len: usize) -> Result<Vec<f64>, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let actual = checksum_hex(&bytes);
    if actual != checksum {
        return Err(CliError::Format(format!(
            "checksum mismatch for {}: manifest {checksum}, file {actual}",
            path.display()
        )));
    }
    if bytes.len() != expected_len * 8 {
        return Err(CliError::Format(format!(
            "{} holds {} bytes, expected {}",
            path.display(),
            bytes.len(),
            expected_len * 8
        )));
    }
    decode_f64s(&bytes)
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = toml::to_string(value).map_err(|e| CliError::Format(e.to_string()))?;
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

fn sibling(manifest: &Path, relative: &str) -> PathBuf {
    manifest.parent().unwrap_or(Path::new(".")).join(relative)
}

fn check_version(version: u32) -> Result<(), CliError> {
    if version != FORMAT_VERSION {
        return Err(CliError::Format(format!("unsupported format_version {version}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// One row of `n_points` values per time node, in node order.
    TimeMajorRows,
}

/// Stored wave functions, interleaved `(re, im)`, time-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavefunctionRef {
    pub data_path: String,
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub constants: PhysicalConstants,
    pub grid: SpatialGrid,
    pub times: TimeNodes,
    pub potential: PotentialModel,
    pub data_path: String,
    pub layout: Layout,
    pub checksum: String,
    pub provenance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavefunctions: Option<WavefunctionRef>,
}

/// `f_0` records at every node, plus the optional exact wave functions.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub records: Vec<GridField>,
}

impl Dataset {
    pub fn time_major(&self) -> Vec<f64> {
        self.records.iter().flat_map(|r| r.values().iter().copied()).collect()
    }
}

/// Writes `<stem>.toml`, `<stem>.bin` and, with wave functions,
/// `<stem>_psi.bin` into `dir`. Returns the manifest path.
pub fn write_dataset(
    dir: &Path,
    stem: &str,
    constants: PhysicalConstants,
    times: TimeNodes,
    potential: PotentialModel,
    records: &[GridField],
    provenance: String,
    wavefunctions: Option<&[WaveFunction]>,
) -> Result<(PathBuf, DatasetManifest), CliError> {
    let grid = *records.first().ok_or_else(|| CliError::Format("no records".into()))?.grid();
    let data_path = format!("{stem}.bin");
    let values: Vec<f64> = records.iter().flat_map(|r| r.values().iter().copied()).collect();
    let checksum = write_payload(&dir.join(&data_path), &values)?;
    let wavefunctions = match wavefunctions {
        Some(states) => {
            let psi_path = format!("{stem}_psi.bin");
            let values: Vec<f64> =
                states.iter().flat_map(|s| s.amplitudes().iter().flat_map(|a| [a.re, a.im])).collect();
            let checksum = write_payload(&dir.join(&psi_path), &values)?;
            Some(WavefunctionRef { data_path: psi_path, checksum })
        }
        None => None,
    };
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        constants,
        grid,
        times,
        potential,
        data_path,
        layout: Layout::TimeMajorRows,
        checksum,
        provenance,
        wavefunctions,
    };
    let path = dir.join(format!("{stem}.toml"));
    write_toml(&path, &manifest)?;
    Ok((path, manifest))
}

pub fn read_dataset(path: &Path) -> Result<Dataset, CliError> {
    let manifest: DatasetManifest = read_toml(path)?;
    check_version(manifest.format_version)?;
    let n = manifest.grid.len();
    let values = read_payload(&sibling(path, &manifest.data_path), &manifest.checksum, manifest.times.len() * n)?;
    let records = values
        .chunks(n)
        .map(|row| GridField::new(manifest.grid, row.to_vec()))
        .collect::<Result<_, _>>()?;
    Ok(Dataset { manifest, records })
}

/// Exact wave function at `node`; `None` when the dataset stores none.
pub fn read_wavefunction(path: &Path, manifest: &DatasetManifest, node: usize) -> Result<Option<WaveFunction>, CliError> {
    let Some(psi) = &manifest.wavefunctions else { return Ok(None) };
    let n = manifest.grid.len();
    let file = sibling(path, &psi.data_path);
    if !file.exists() {
        return Ok(None);
    }
    let values = read_payload(&file, &psi.checksum, 2 * n * manifest.times.len())?;
    let row = &values[2 * n * node..2 * n * (node + 1)];
    let amplitudes = row.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok(Some(WaveFunction::new(manifest.grid, amplitudes, manifest.times.time(node))?))
}

/// Moments `f_0 … f_N` at one node of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSetManifest {
    pub format_version: u32,
    /// Dataset manifest, relative to this file.
    pub dataset: String,
    pub node: usize,
    pub central_time: f64,
    pub orders: usize,
    pub constants: PhysicalConstants,
    pub grid: SpatialGrid,
    pub data_path: String,
    pub layout: String,
    pub checksum: String,
    pub provenance: String,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    pub manifest: MomentSetManifest,
    pub moments: Vec<GridField>,
}

pub fn write_moment_set(dir: &Path, stem: &str, mut manifest: MomentSetManifest, moments: &[GridField]) -> Result<PathBuf, CliError> {
    manifest.data_path = format!("{stem}.bin");
    manifest.orders = moments.len() - 1;
    manifest.layout = "order_major_rows".into();
    let values: Vec<f64> = moments.iter().flat_map(|m| m.values().iter().copied()).collect();
    manifest.checksum = write_payload(&dir.join(&manifest.data_path), &values)?;
    let path = dir.join(format!("{stem}.toml"));
    write_toml(&path, &manifest)?;
    Ok(path)
}

pub fn read_moment_set(path: &Path) -> Result<MomentSet, CliError> {
    let manifest: MomentSetManifest = read_toml(path)?;
    check_version(manifest.format_version)?;
    let n = manifest.grid.len();
    let values = read_payload(&sibling(path, &manifest.data_path), &manifest.checksum, (manifest.orders + 1) * n)?;
    let moments = values
        .chunks(n)
        .map(|row| GridField::new(manifest.grid, row.to_vec()))
        .collect::<Result<_, _>>()?;
    Ok(MomentSet { manifest, moments })
}

/// Resolves the dataset a moment set came from.
pub fn moment_set_dataset(path: &Path, set: &MomentSetManifest) -> PathBuf {
    sibling(path, &set.dataset)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoManifest {
    pub format_version: u32,
    /// Taylor order, absent for reference grids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    pub hbar: f64,
    pub x_grid: SpatialGrid,
    pub y_grid: OffDiagonalGrid,
    pub data_path: String,
    pub layout: String,
    pub checksum: String,
    pub provenance: String,
}

/// Writes `<stem>.toml`, `<stem>.bin` (interleaved `re, im`, x-major) and
/// `<stem>.tsv` (`x y re im` per line).
pub fn write_rho(dir: &Path, stem: &str, rho: &DensityMatrixGrid, order: Option<usize>, hbar: f64, provenance: String) -> Result<PathBuf, CliError> {
    let data_path = format!("{stem}.bin");
    let values: Vec<f64> = rho.values().iter().flat_map(|v| [v.re, v.im]).collect();
    let checksum = write_payload(&dir.join(&data_path), &values)?;
    let manifest = RhoManifest {
        format_version: FORMAT_VERSION,
        order,
        hbar,
        x_grid: *rho.x_grid(),
        y_grid: *rho.y_grid(),
        data_path,
        layout: "x_major_interleaved_complex".into(),
        checksum,
        provenance,
    };
    let path = dir.join(format!("{stem}.toml"));
    write_toml(&path, &manifest)?;
    write_surface(&dir.join(format!("{stem}.tsv")), rho)?;
    Ok(path)
}

pub fn write_surface(path: &Path, rho: &DensityMatrixGrid) -> Result<(), CliError> {
    let mut out = String::from("# x\ty\tre\tim\n");
    for ix in 0..rho.x_grid().len() {
        let x = rho.x_grid().point(ix);
        for (iy, y) in rho.y_grid().points().enumerate() {
            let v = rho.get(ix, iy);
            out.push_str(&format!("{x}\t{y}\t{}\t{}\n", v.re, v.im));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

pub fn read_rho(path: &Path) -> Result<(RhoManifest, DensityMatrixGrid), CliError> {
    let manifest: RhoManifest = read_toml(path)?;
    check_version(manifest.format_version)?;
    let n = manifest.x_grid.len() * manifest.y_grid.len();
    let values = read_payload(&sibling(path, &manifest.data_path), &manifest.checksum, 2 * n)?;
    let values = values.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
    let rho = DensityMatrixGrid::new(manifest.x_grid, manifest.y_grid, values)?;
    Ok((manifest, rho))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format_version: u32,
    pub a: String,
    pub b: String,
    pub report: ComparisonReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trust_radius: Option<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}
