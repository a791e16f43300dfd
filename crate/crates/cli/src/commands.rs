use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use slowquench::evolve::{averaging_plan, differential, finite_tasp, integrate, population, Band, Differential, EvolutionConfig, Window};
use slowquench::exec::Exec;
use slowquench::invariants::{scheme1, scheme2, sudden_control, InvariantReport, PipelineOptions};
use slowquench::lz::{tasp, QuenchSpec};
use slowquench::models::Field;
use slowquench::surfaces::{sweep, Element, FieldSource, SurfaceKind, SurfaceSet, TaspGrid, VertexField, Zone};

use crate::config::{Format, RunConfig, SchemeChoice};
use crate::error::CliError;
use crate::export::{heatmap, line_plot, surface_plot, write_grid_csv, write_json, write_triangles_csv, write_vertices_csv, SurfaceLayer};

fn prepare(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Create the output directory and record the effective configuration.
fn start_run(cfg: &RunConfig) -> Result<(), CliError> {
    prepare(&cfg.output.dir)?;
    fs::write(cfg.output.dir.join("config.toml"), cfg.to_toml())?;
    Ok(())
}

fn relative(dir: &Path, path: &Path) -> String {
    path.strip_prefix(dir).unwrap_or(path).display().to_string()
}

pub fn cmd_sweep(cfg: &RunConfig, exec: Exec) -> Result<(), CliError> {
    let dir = &cfg.output.dir;
    start_run(cfg)?;
    let spec = QuenchSpec::new(cfg.quench.axis, cfg.quench.rate)?;
    let zone = Zone::with_origin(cfg.model.dim(), cfg.grid.extent, cfg.grid.origin)?;
    let grid = sweep(&cfg.model, &spec, zone, exec)?;
    let labels = cfg.model.labels();
    let mut files = Vec::new();
    for (c, label) in labels.iter().enumerate() {
        if cfg.output.wants(Format::Csv) {
            let path = dir.join(format!("tasp_{c}.csv"));
            write_grid_csv(&path, &grid, c)?;
            files.push(json!({ "component": c, "label": label, "file": relative(dir, &path) }));
        }
        if cfg.output.wants(Format::Svg) && zone.dim == 2 {
            let svg = heatmap(&format!("TASP component {label}"), &grid, |n| grid.tasp_component(n, c));
            fs::write(dir.join(format!("tasp_{c}.svg")), svg)?;
        }
    }
    if cfg.output.wants(Format::Svg) && zone.dim == 1 {
        let series: Vec<(String, Vec<(f64, f64)>)> = labels
            .iter()
            .enumerate()
            .map(|(c, l)| {
                let pts = (0..zone.node_count()).map(|n| (zone.position(n)[0], grid.tasp_component(n, c))).collect();
                (format!("<{l}>"), pts)
            })
            .collect();
        fs::write(dir.join("tasp.svg"), line_plot("TASP over the zone", &series))?;
    }
    if cfg.output.wants(Format::Json) {
        let manifest = json!({
            "model": cfg.model,
            "quench": spec,
            "extent": zone.extent,
            "nodes_per_axis": zone.cells(),
            "spacing": zone.spacing(),
            "lower": zone.lower(),
            "components": files,
        });
        write_json(&dir.join("manifest.json"), &manifest)?;
    }
    Ok(())
}

fn options(cfg: &RunConfig, exec: Exec) -> PipelineOptions {
    PipelineOptions {
        extent: cfg.grid.extent,
        origin: cfg.grid.origin,
        exec,
        reduction: cfg.invariant.reduction.clone(),
    }
}

/// Surface files of one hierarchy plus a manifest entry per level.
fn export_surfaces(dir: &Path, grid: &TaspGrid, set: &SurfaceSet, tag: &str) -> Result<Vec<serde_json::Value>, CliError> {
    let sub = dir.join("surfaces");
    prepare(&sub)?;
    let dim = grid.zone.dim;
    let kind = set.kind;
    let mut levels = Vec::new();
    for level in &set.levels {
        let mut elements = Vec::new();
        for (i, element) in level.elements.iter().enumerate() {
            let stem = format!("{tag}_{}_{i}", level.order);
            let path = sub.join(format!("{stem}.csv"));
            write_vertices_csv(&path, &element.vertices(), dim, |v| v.interpolate(|n| grid.scalar(kind, n)))?;
            let mut entry = json!({
                "file": relative(dir, &path),
                "dimension": element.dimension(),
                "vertices": element.vertices().len(),
            });
            if let Element::Mesh(mesh) = element {
                let tri = sub.join(format!("{stem}_triangles.csv"));
                write_triangles_csv(&tri, &mesh.triangles)?;
                entry["triangles"] = json!(relative(dir, &tri));
            }
            elements.push(entry);
        }
        levels.push(json!({ "kind": kind, "order": level.order, "cut": level.cut, "elements": elements }));
    }
    Ok(levels)
}

fn planar_layer<'a>(set: &SurfaceSet, field: &VertexField, colour: &'a str) -> SurfaceLayer<'a> {
    let mut layer = SurfaceLayer {
        colour,
        curves: Vec::new(),
        arrows: Vec::new(),
        points: Vec::new(),
    };
    if let Some(first) = set.levels.first() {
        for element in &first.elements {
            if let Element::Curve(c) = element {
                layer.curves.push(c.vertices.iter().map(|v| [v.position[0], v.position[1]]).collect());
                let step = (c.vertices.len() / 24).max(1);
                for v in c.vertices.iter().step_by(step) {
                    let d = field.eval(v, &[1, 2]);
                    layer.arrows.push(([v.position[0], v.position[1]], [d[0], d[1]]));
                }
            }
        }
    }
    for level in set.levels.iter().skip(1) {
        layer
            .points
            .extend(level.points().iter().map(|p| [p.vertex.position[0], p.vertex.position[1]]));
    }
    layer
}

pub fn cmd_invariant(cfg: &RunConfig, exec: Exec) -> Result<i64, CliError> {
    let dir = &cfg.output.dir;
    start_run(cfg)?;
    if cfg.quench.axis != 0 {
        return Err(CliError::Config(String::from(
            "invariant pipelines quench the band axis first; set quench.axis = 0",
        )));
    }
    let opts = options(cfg, exec);
    let g = cfg.quench.rate;
    let mut report = match cfg.invariant.scheme {
        SchemeChoice::Scheme1 => scheme1(&cfg.model, g, &opts)?,
        SchemeChoice::Scheme2 => scheme2(&cfg.model, g, cfg.second_axis(), &opts)?,
        SchemeChoice::SuddenControl => {
            let control = sudden_control(&cfg.model, cfg.second_axis(), &opts)?;
            if cfg.output.wants(Format::Json) {
                write_json(&dir.join("sudden_control.json"), &control)?;
            }
            println!(
                "sudden control: max values {:?}, winding {:?}, unit-rate control {}",
                control.max_values, control.winding, control.positive_control.invariant
            );
            return Ok(control.positive_control.invariant);
        }
    };
    let zone = Zone::with_origin(cfg.model.dim(), cfg.grid.extent, cfg.grid.origin)?;
    if cfg.output.wants(Format::Csv) || cfg.output.wants(Format::Svg) {
        export_report_surfaces(cfg, &mut report, zone, exec)?;
    }
    if cfg.output.wants(Format::Json) {
        write_json(&dir.join("report.json"), &report)?;
    }
    for e in &report.orders {
        println!("{:>6} {:<13} invariant {:?}", e.label(), format!("{:?}", e.source), e.invariant);
    }
    println!("invariant {}", report.invariant);
    Ok(report.invariant)
}

fn export_report_surfaces(cfg: &RunConfig, report: &mut InvariantReport, zone: Zone, exec: Exec) -> Result<(), CliError> {
    let dir = &cfg.output.dir;
    let first = sweep(&cfg.model, &QuenchSpec::new(0, cfg.quench.rate)?, zone, exec)?;
    let second = match report.quench_axes.get(1) {
        Some(&axis) => Some(sweep(&cfg.model, &QuenchSpec::new(axis, cfg.quench.rate)?, zone, exec)?),
        None => None,
    };
    let mut manifest = Vec::new();
    let mut layers = Vec::new();
    for set in &report.surfaces {
        let (tag, field) = match (set.kind, &second) {
            (SurfaceKind::Bis, _) => ("bis", VertexField::new(&first, FieldSource::BisValue)),
            (SurfaceKind::Sis, None) => ("sis", VertexField::new(&first, FieldSource::SisGradient)),
            (SurfaceKind::Sis, Some(g2)) => ("sis", VertexField::new(g2, FieldSource::SisValue)),
        };
        if cfg.output.wants(Format::Csv) {
            manifest.extend(export_surfaces(dir, &first, set, tag)?);
        }
        if zone.dim == 2 {
            layers.push(planar_layer(
                set,
                &field,
                if set.kind == SurfaceKind::Bis { "#9467bd" } else { "#2ca02c" },
            ));
        }
    }
    if cfg.output.wants(Format::Csv) {
        let path = dir.join("surfaces.json");
        write_json(&path, &manifest)?;
        report.surface_files = vec![relative(dir, &path)];
        for level in &manifest {
            for e in level["elements"].as_array().into_iter().flatten() {
                if let Some(f) = e["file"].as_str() {
                    report.surface_files.push(f.to_string());
                }
            }
        }
    }
    if cfg.output.wants(Format::Svg) && zone.dim == 2 {
        let svg = surface_plot("inversion surfaces and dynamical field", zone.lower(), &layers);
        fs::write(dir.join("surfaces.svg"), svg)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EvolveSummary {
    k: Vec<f64>,
    field: Vec<f64>,
    quench: QuenchSpec,
    config: EvolutionConfig,
    window: Option<Window>,
    closed_form_tasp: Vec<f64>,
    finite_window_tasp: Option<Vec<f64>>,
    closed_form_lower_population: f64,
    final_lower_population: f64,
    accepted_steps: usize,
    rejected_steps: usize,
    max_norm_error: f64,
}

pub fn cmd_evolve(cfg: &RunConfig, k: Option<Vec<f64>>) -> Result<(), CliError> {
    let dir = &cfg.output.dir;
    start_run(cfg)?;
    let section = cfg.evolve.as_ref();
    let k = k
        .or_else(|| section.map(|e| e.k.clone()))
        .ok_or_else(|| CliError::Config(String::from("evolve needs a momentum: set evolve.k or pass --k")))?;
    if k.len() != cfg.model.dim() {
        return Err(CliError::Config(format!("momentum needs {} entries, got {}", cfg.model.dim(), k.len())));
    }
    let field: Field = cfg.model.eval(&k);
    let spec = QuenchSpec::new(cfg.quench.axis, cfg.quench.rate)?;
    let closed = tasp(&field, &spec)?;
    let (planned, planned_window) = averaging_plan(closed.energy, spec.rate);
    let (config, window) = match section.and_then(|e| e.integrator.clone()) {
        Some(c) => {
            let w = Window::new(
                (c.record_from * closed.energy / PI).ceil() as u64,
                (c.t_max * closed.energy / PI).floor() as u64,
            )
            .ok();
            (c, w)
        }
        None => (planned, Some(planned_window)),
    };
    let traj = integrate(&field, &spec, &config)?;
    let labels = cfg.model.labels();
    if cfg.output.wants(Format::Csv) {
        let mut w = csv::Writer::from_path(dir.join("trajectory.csv"))?;
        let mut header = vec![String::from("t")];
        header.extend(labels.iter().map(|l| format!("gamma_{l}")));
        w.write_record(&header)?;
        for (t, p) in traj.times.iter().zip(&traj.polarization) {
            let mut row = vec![crate::export::num(*t)];
            row.extend(p.iter().map(|&x| crate::export::num(x)));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    if cfg.output.wants(Format::Svg) {
        let series: Vec<(String, Vec<(f64, f64)>)> = labels
            .iter()
            .enumerate()
            .map(|(c, l)| {
                (
                    format!("<{l}>"),
                    traj.times.iter().zip(&traj.polarization).map(|(&t, p)| (t, p[c])).collect(),
                )
            })
            .collect();
        fs::write(dir.join("trajectory.svg"), line_plot("polarization after the quench", &series))?;
    }
    let finite = window.and_then(|w| finite_tasp(&traj, w).ok());
    let summary = EvolveSummary {
        k,
        field: field.to_vec(),
        quench: spec,
        config,
        window,
        closed_form_tasp: closed.tasp.to_vec(),
        finite_window_tasp: finite.clone(),
        closed_form_lower_population: closed.p_down,
        final_lower_population: population(&traj, Band::Lower),
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
        max_norm_error: traj.max_norm_error(),
    };
    if cfg.output.wants(Format::Json) {
        write_json(&dir.join("evolve.json"), &summary)?;
    }
    println!(
        "lower population {:.8} (closed form {:.8}), {} samples",
        summary.final_lower_population,
        summary.closed_form_lower_population,
        traj.times.len()
    );
    if let Some(f) = finite {
        println!("window average {f:?}, closed form {:?}", summary.closed_form_tasp);
    }
    Ok(())
}

pub const VERIFY_RATES: [f64; 3] = [0.1, 1.0, 5.0];
pub const VERIFY_POPULATION_TOL: f64 = 1e-4;
pub const VERIFY_TASP_TOL: f64 = 1e-3;
const VERIFY_SEED: u64 = 0x51_0e_c4;

/// Random five-component fields with gap at least 1/2, from a fixed seed.
pub fn verify_fields(count: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let h: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..=1.0)).collect();
        if Field::new(&h).energy() >= 0.5 {
            out.push(h);
        }
    }
    out
}

pub fn cmd_verify(samples: usize, out: Option<PathBuf>, exec: Exec) -> Result<bool, CliError> {
    let fields = verify_fields(samples);
    let jobs: Vec<(usize, f64)> = (0..fields.len()).flat_map(|i| VERIFY_RATES.map(|g| (i, g))).collect();
    let results: Vec<Result<Differential, CliError>> = exec
        .map(jobs.len(), |j| {
            let (i, g) = jobs[j];
            let spec = QuenchSpec::new(0, g)?;
            Ok(differential(&fields[i], &spec)?)
        })
        .into_iter()
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r?);
    }
    let worst_pop = rows.iter().map(Differential::population_error).fold(0.0, f64::max);
    let worst_tasp = rows.iter().map(Differential::tasp_error).fold(0.0, f64::max);
    let pass = worst_pop <= VERIFY_POPULATION_TOL && worst_tasp <= VERIFY_TASP_TOL;
    for g in VERIFY_RATES {
        let sel: Vec<&Differential> = rows.iter().filter(|d| d.rate == g).collect();
        println!(
            "g = {g:<4} fields {:>3}  max population error {:.3e}  max TASP error {:.3e}",
            sel.len(),
            sel.iter().map(|d| d.population_error()).fold(0.0, f64::max),
            sel.iter().map(|d| d.tasp_error()).fold(0.0, f64::max)
        );
    }
    println!(
        "{} (tolerances {VERIFY_POPULATION_TOL:e}, {VERIFY_TASP_TOL:e})",
        if pass { "PASS" } else { "FAIL" }
    );
    if let Some(dir) = out {
        prepare(&dir)?;
        write_json(
            &dir.join("verify.json"),
            &json!({ "pass": pass, "max_population_error": worst_pop, "max_tasp_error": worst_tasp, "runs": rows }),
        )?;
    }
    Ok(pass)
}
