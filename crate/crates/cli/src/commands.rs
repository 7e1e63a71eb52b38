use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hydrec::assembly::{assemble, compare, ComparisonReport, Region};
use hydrec::numerics::{GridField, PhysicalConstants};
use hydrec::reconstruction::{build_pyramid, ReconstructionOptions};
use hydrec::simulator::{
    cat_density_matrix, check_offdiagonal_resolution, exact_density_matrix, probability_density,
    sample_evolution, CatStateParams, InitialState, OffDiagonalGrid,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::args::{AssembleArgs, Command, CompareArgs, DemoCatArgs, ReconstructArgs, Reference, SimulateArgs};
use crate::format::{
    self, moment_set_dataset, read_dataset, read_moment_set, read_rho, read_wavefunction, write_dataset,
    write_moment_set, write_rho, write_toml, MomentSetManifest, ReportFile, FORMAT_VERSION,
};
use crate::CliError;

pub fn run(command: &Command) -> Result<String, CliError> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Assemble(a) => assemble_cmd(a),
        Command::Compare(a) => compare_cmd(a),
        Command::DemoCat(a) => demo_cat(a).map(|s| s.table()),
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn constants(hbar: f64, mass: f64) -> Result<PhysicalConstants, CliError> {
    Ok(PhysicalConstants::new(hbar, mass)?)
}

/// Additive Gaussian detector noise, clipped at zero.
pub fn add_noise(records: &mut [GridField], sigma: f64, seed: u64) -> Result<(), CliError> {
    if sigma == 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| CliError::Usage(format!("noise: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for r in records.iter_mut() {
        let values = r.values().iter().map(|v| (v + normal.sample(&mut rng)).max(0.0)).collect();
        *r = GridField::new(*r.grid(), values)?;
    }
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> Result<String, CliError> {
    if !(a.noise.is_finite() && a.noise >= 0.0) {
        return Err(CliError::Usage(format!("noise must be non-negative, got {}", a.noise)));
    }
    let c = constants(a.constants.hbar, a.constants.mass)?;
    let psi0 = a.state.prepare(a.grid, &c)?;
    let states = sample_evolution(&psi0, &a.potential, &c, &a.times, a.substeps)?;
    let mut records: Vec<GridField> = states.iter().map(probability_density).collect();
    add_noise(&mut records, a.noise, a.seed)?;
    let state = match a.state {
        InitialState::Cat { sigma, k0 } => format!("cat(sigma={sigma}, k0={k0})"),
        InitialState::Gaussian { sigma, x0, k0 } => format!("gaussian(sigma={sigma}, x0={x0}, k0={k0})"),
        InitialState::Coherent { omega, x0, p0 } => format!("coherent(omega={omega}, x0={x0}, p0={p0})"),
    };
    let provenance = format!(
        "simulated: split-operator from t=0, state={state}, substeps={}, noise={}, seed={}",
        a.substeps, a.noise, a.seed
    );
    create_dir(&a.out)?;
    let (path, _) = write_dataset(
        &a.out,
        "dataset",
        c,
        a.times,
        a.potential.clone(),
        &records,
        provenance,
        a.store_psi.then_some(states.as_slice()),
    )?;
    let mut out = format!("wrote {}\n", path.display());
    for (j, r) in records.iter().enumerate() {
        writeln!(out, "node {j} t={} norm={}", a.times.time(j), r.integral()).unwrap();
    }
    Ok(out)
}

/// The dataset path as stored in a moment set: a bare file name when the
/// two live side by side, the canonical path otherwise.
fn dataset_reference(dataset: &Path, out: &Path) -> Result<String, CliError> {
    let ds = dataset.canonicalize().map_err(|e| CliError::io(dataset, e))?;
    let dir = out.canonicalize().map_err(|e| CliError::io(out, e))?;
    if ds.parent() == Some(dir.as_path()) {
        Ok(ds.file_name().unwrap().to_string_lossy().into_owned())
    } else {
        Ok(ds.to_string_lossy().into_owned())
    }
}

pub fn reconstruct(a: &ReconstructArgs) -> Result<String, CliError> {
    let ds = read_dataset(&a.dataset)?;
    let m = &ds.manifest;
    let options = ReconstructionOptions { anchor: a.anchor, smoothing: a.smooth };
    let pyramid = build_pyramid(&ds.records, &m.times, &m.potential, &m.constants, a.order, &options)?;
    let node = a.node.unwrap_or(pyramid.central_node());
    if node >= m.times.len() {
        return Err(CliError::Usage(format!("node {node} outside 0..{}", m.times.len())));
    }
    create_dir(&a.out)?;
    let warnings: Vec<String> = pyramid.warnings().iter().map(|w| w.to_string()).collect();
    let manifest = MomentSetManifest {
        format_version: FORMAT_VERSION,
        dataset: dataset_reference(&a.dataset, &a.out)?,
        node,
        central_time: m.times.time(node),
        orders: a.order,
        constants: m.constants,
        grid: m.grid,
        data_path: String::new(),
        layout: String::new(),
        checksum: String::new(),
        provenance: format!(
            "reconstructed: order={}, node={node}, anchor={:?}, smoothing={:?}; source: {}",
            a.order, a.anchor, a.smooth, m.provenance
        ),
        warnings: warnings.clone(),
    };
    let fields: Vec<GridField> = (0..=a.order).map(|n| pyramid.get(n, node).clone()).collect();
    let path = write_moment_set(&a.out, "moments", manifest, &fields)?;
    let mut out = format!("wrote {}\n", path.display());
    for w in warnings {
        writeln!(out, "warning: {w}").unwrap();
    }
    Ok(out)
}

fn y_grid(y_max: f64, points: usize) -> Result<OffDiagonalGrid, CliError> {
    Ok(OffDiagonalGrid::from_extent(y_max, points)?)
}

fn write_report(
    out: &Path,
    a: String,
    b: String,
    report: ComparisonReport,
    trust_radius: Option<f64>,
    warnings: Vec<String>,
) -> Result<PathBuf, CliError> {
    let path = out.join("report.toml");
    write_toml(&path, &ReportFile { format_version: FORMAT_VERSION, a, b, report, trust_radius, warnings })?;
    Ok(path)
}

pub fn assemble_cmd(a: &AssembleArgs) -> Result<String, CliError> {
    let set = read_moment_set(&a.moments)?;
    let m = &set.manifest;
    let yg = y_grid(a.y_max, a.y_points)?;
    let hbar = m.constants.hbar();

    let reference = match &a.reference {
        None => None,
        Some(Reference::AnalyticCat(p)) => Some((
            cat_density_matrix(p, m.grid, yg),
            format!("analytic cat(sigma={}, k0={})", p.sigma, p.k0),
            check_offdiagonal_resolution(&yg, p),
        )),
        Some(Reference::StoredPsi) => {
            let ds_path = moment_set_dataset(&a.moments, m);
            let ds: format::DatasetManifest = format::read_toml(&ds_path).map_err(|e| {
                CliError::MissingReference(format!("dataset {} unavailable: {e}", ds_path.display()))
            })?;
            let psi = read_wavefunction(&ds_path, &ds, m.node)?.ok_or_else(|| {
                CliError::MissingReference(format!("{} stores no wave functions", ds_path.display()))
            })?;
            let rho = exact_density_matrix(&psi, yg);
            let warning = rho.warnings().into_iter().next();
            Some((rho, format!("stored psi at node {}", m.node), warning))
        }
    };

    let rec = assemble(&set.moments, yg, hbar)?;
    create_dir(&a.out)?;
    let order = rec.order();
    let stem = format!("rho_{order}");
    let provenance = format!("taylor order {order}; moments: {}", m.provenance);
    let rho_path = write_rho(&a.out, &stem, rec.values(), Some(order), hbar, provenance)?;
    let mut out = format!("wrote {}\n", rho_path.display());
    let mut warnings: Vec<String> = rec.warnings().iter().map(|w| w.to_string()).collect();

    if let Some((exact, label, warning)) = reference {
        warnings.extend(warning.map(|w| w.to_string()));
        write_rho(&a.out, "reference", &exact, None, hbar, label.clone())?;
        let region = Region { x_max: a.x_max, y_max: a.y_max };
        let report = compare(rec.values(), &exact, region, Some(&set.moments[0]))?;
        let path = write_report(&a.out, stem, label, report, Some(rec.trust_radius()), warnings.clone())?;
        writeln!(out, "wrote {}", path.display()).unwrap();
        writeln!(out, "sup_error={} sup_real_error={} l2_error={}", report.sup_error, report.sup_real_error, report.l2_error)
            .unwrap();
    }
    for w in warnings {
        writeln!(out, "warning: {w}").unwrap();
    }
    Ok(out)
}

pub fn compare_cmd(a: &CompareArgs) -> Result<String, CliError> {
    let (_, ra) = read_rho(&a.a)?;
    let (_, rb) = read_rho(&a.b)?;
    let report = compare(&ra, &rb, Region { x_max: a.x_max, y_max: a.y_max }, None)?;
    create_dir(&a.out)?;
    let path = write_report(
        &a.out,
        a.a.display().to_string(),
        a.b.display().to_string(),
        report,
        None,
        Vec::new(),
    )?;
    Ok(format!(
        "wrote {}\nsup_error={} sup_real_error={} l2_error={}\n",
        path.display(),
        report.sup_error,
        report.sup_real_error,
        report.l2_error
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemoRow {
    pub order: usize,
    pub sup_real_error: f64,
    pub sup_error: f64,
    pub l2_error: f64,
    pub trust_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoSummary {
    pub sigma: f64,
    pub k0: f64,
    pub hbar: f64,
    pub region: Region,
    pub rows: Vec<DemoRow>,
}

impl DemoSummary {
    pub fn table(&self) -> String {
        let mut out = String::from("order\tsup_real_error\tsup_error\tl2_error\ttrust_radius\n");
        for r in &self.rows {
            writeln!(out, "{}\t{}\t{}\t{}\t{}", r.order, r.sup_real_error, r.sup_error, r.l2_error, r.trust_radius)
                .unwrap();
        }
        out
    }
}

/// Cat-state moments from the closed form, assembled at each order and
/// compared with the exact density matrix over `|x| ≤ 3`, `|y| ≤ y_max`.
pub fn demo_cat(a: &DemoCatArgs) -> Result<DemoSummary, CliError> {
    let p = CatStateParams::new(a.sigma, a.k0)?;
    let c = constants(a.hbar, 1.0)?;
    let yg = y_grid(a.y_max, a.y_points)?;
    let region = Region { x_max: 3.0, y_max: a.y_max };
    let exact = cat_density_matrix(&p, a.grid, yg);
    create_dir(&a.out)?;
    write_rho(&a.out, "exact", &exact, None, c.hbar(), format!("analytic cat(sigma={}, k0={})", p.sigma, p.k0))?;
    let max_order = a.orders.iter().copied().max().unwrap_or(0);
    let moments: Vec<GridField> = (0..=max_order).map(|n| p.moment_field(n, a.grid, c.hbar())).collect();
    let mut rows = Vec::new();
    for &order in &a.orders {
        let rec = assemble(&moments[..=order], yg, c.hbar())?;
        let report = compare(rec.values(), &exact, region, Some(&moments[0]))?;
        write_rho(
            &a.out,
            &format!("rho_{order}"),
            rec.values(),
            Some(order),
            c.hbar(),
            format!("taylor order {order} of analytic cat moments"),
        )?;
        rows.push(DemoRow {
            order,
            sup_real_error: report.sup_real_error,
            sup_error: report.sup_error,
            l2_error: report.l2_error,
            trust_radius: rec.trust_radius(),
        });
    }
    let summary = DemoSummary { sigma: p.sigma, k0: p.k0, hbar: c.hbar(), region, rows };
    let table = summary.table();
    fs::write(a.out.join("summary.tsv"), &table).map_err(|e| CliError::io(&a.out.join("summary.tsv"), e))?;
    write_toml(&a.out.join("summary.toml"), &summary)?;
    Ok(summary)
}
