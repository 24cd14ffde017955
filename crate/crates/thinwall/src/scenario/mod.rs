//! Declarative run configurations and the pipelines behind the command
//! line.
//!
//! A [`Scenario`] is a single TOML document that names a surface, a
//! grid, an optional slab, a particle, a field and solver knobs. The
//! `run_*` functions execute one pipeline each (geometry tables,
//! spectra, variant comparison, separability, divergence checks) and
//! drop their artifacts plus a `manifest.json` into an output
//! directory. The manifest embeds the fully resolved scenario, so
//! feeding it back through [`load_config`] reproduces the run.
//!
//! Unknown keys anywhere in a config are hard errors; every numeric
//! default is spelled out here rather than scattered through the
//! pipelines.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{compare_variants, schmidt_spectrum, ComparisonReport};
use crate::assembly::{
    anomalous_delta, assemble_laplace_beltrami, assemble_naive, assemble_slab,
    assemble_variational, sample_surface_field, surface_divergence, xi_reduction_check,
    BoundaryCondition, Confinement, DiscreteOperator, EdgeRule, ParticleParams, SlabGrid,
    SurfaceGrid,
};
use crate::em::{surface_divergence_identity, VectorPotentialField};
use crate::err::{Error, Result};
use crate::geometry::{
    self, egregium_check, geometric_potential, SurfaceChart,
};
use crate::io::{
    self, atomic_write, file_digest, summarize, write_eigenvector_csv, write_geometry_csv,
    write_json, write_spectrum_csv, ColumnSummary,
};
use crate::solve::{solve_lowest, SolverConfig, SpectrumResult};
use crate::UNITS;

type C = Complex64;

/// Which surface to build, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceSpec {
    Plane { lx: f64, ly: f64 },
    Cylinder { radius: f64, length: f64 },
    Sphere { radius: f64 },
    Torus { major: f64, minor: f64 },
    Catenoid { a: f64, v_max: f64 },
    Helicoid { a: f64, v_max: f64 },
    /// Tabulated chart loaded from a `u,v,x,y,z` CSV lattice.
    Chart {
        path: String,
        #[serde(default)]
        periodic: [bool; 2],
        #[serde(default)]
        label: Option<String>,
    },
}

impl SurfaceSpec {
    pub fn build(&self) -> Result<SurfaceChart> {
        match self {
            SurfaceSpec::Plane { lx, ly } => geometry::plane(*lx, *ly),
            SurfaceSpec::Cylinder { radius, length } => geometry::cylinder(*radius, *length),
            SurfaceSpec::Sphere { radius } => geometry::sphere(*radius),
            SurfaceSpec::Torus { major, minor } => geometry::torus(*major, *minor),
            SurfaceSpec::Catenoid { a, v_max } => geometry::catenoid(*a, *v_max),
            SurfaceSpec::Helicoid { a, v_max } => geometry::helicoid(*a, *v_max),
            SurfaceSpec::Chart { path, periodic, label } => io::load_chart_csv(
                Path::new(path),
                *periodic,
                label.as_deref().unwrap_or("chart"),
            ),
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let SurfaceSpec::Chart { path, .. } = self {
            *path = resolve(base, path);
        }
    }
}

/// Surface grid resolution and edge closures. Omitted edge rules
/// default to periodic where the chart closes up and zero-flux
/// otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_u: usize,
    pub n_v: usize,
    #[serde(default)]
    pub edge_u: Option<EdgeRule>,
    #[serde(default)]
    pub edge_v: Option<EdgeRule>,
}

impl GridSpec {
    pub fn resolve_edges(&self, chart: &SurfaceChart) -> [EdgeRule; 2] {
        let def = |p: bool| if p { EdgeRule::Periodic } else { EdgeRule::ZeroFlux };
        [
            self.edge_u.unwrap_or(def(chart.periodic[0])),
            self.edge_v.unwrap_or(def(chart.periodic[1])),
        ]
    }
}

/// Transverse slab extent and boundary handling (only read by the
/// `slab3d` variant).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlabSpec {
    /// Half thickness; the slab spans `x3 in [-eps, eps]`.
    pub eps: f64,
    /// Transverse nodes (including the wall nodes for Dirichlet runs).
    pub n3: usize,
    #[serde(default = "default_bc")]
    pub bc: BoundaryCondition,
    #[serde(default = "default_confinement")]
    pub confinement: Confinement,
}

fn default_bc() -> BoundaryCondition {
    BoundaryCondition::Dirichlet
}

fn default_confinement() -> Confinement {
    Confinement::None
}

/// Vector potential, either analytic or built from line currents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    None,
    Uniform {
        a: [f64; 3],
    },
    /// Infinite straight wire through `point` along `direction`.
    Wire {
        point: [f64; 3],
        direction: [f64; 3],
        current: f64,
    },
    /// `A = k (-y, x, 0) / 2`: uniform magnetic field along z.
    Azimuthal {
        strength: f64,
    },
    /// Circular current loop, quadrature over a polygon approximation.
    Loop {
        center: [f64; 3],
        radius: f64,
        normal: [f64; 3],
        current: f64,
        #[serde(default = "default_segments")]
        segments: usize,
        #[serde(default = "default_quadrature")]
        quadrature: usize,
    },
    Solenoid {
        center: [f64; 3],
        axis: [f64; 3],
        radius: f64,
        length: f64,
        turns: usize,
        current: f64,
        #[serde(default = "default_segments")]
        segments: usize,
        #[serde(default = "default_quadrature")]
        quadrature: usize,
    },
    /// Polyline currents from `x,y,z` CSV files (each with a JSON
    /// sidecar holding the current and closure flag).
    Sources {
        paths: Vec<String>,
        #[serde(default = "default_quadrature")]
        quadrature: usize,
    },
    Scaled {
        factor: f64,
        field: Box<FieldSpec>,
    },
    Superpose {
        fields: Vec<FieldSpec>,
    },
}

fn default_segments() -> usize {
    64
}

fn default_quadrature() -> usize {
    8
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::None
    }
}

impl FieldSpec {
    pub fn is_none(&self) -> bool {
        matches!(self, FieldSpec::None)
    }

    pub fn build(&self) -> Result<VectorPotentialField> {
        let v3 = |a: &[f64; 3]| nalgebra::Vector3::new(a[0], a[1], a[2]);
        match self {
            FieldSpec::None => Ok(VectorPotentialField::zero()),
            FieldSpec::Uniform { a } => Ok(VectorPotentialField::uniform(v3(a))),
            FieldSpec::Wire { point, direction, current } => {
                VectorPotentialField::wire(v3(point), v3(direction), *current)
            }
            FieldSpec::Azimuthal { strength } => Ok(VectorPotentialField::azimuthal(*strength)),
            FieldSpec::Loop { center, radius, normal, current, segments, quadrature } => {
                crate::em::loop_potential(v3(center), *radius, v3(normal), *current, *segments, *quadrature)
            }
            FieldSpec::Solenoid {
                center,
                axis,
                radius,
                length,
                turns,
                current,
                segments,
                quadrature,
            } => crate::em::solenoid_potential(
                v3(center),
                v3(axis),
                *radius,
                *length,
                *turns,
                *current,
                *segments,
                *quadrature,
            ),
            FieldSpec::Sources { paths, quadrature } => {
                let sources = paths
                    .iter()
                    .map(|p| io::load_current_source(Path::new(p)))
                    .collect::<Result<Vec<_>>>()?;
                crate::em::biot_savart_potential(sources, *quadrature)
            }
            FieldSpec::Scaled { factor, field } => Ok(field.build()?.scaled(*factor)),
            FieldSpec::Superpose { fields } => {
                if fields.is_empty() {
                    return Err(Error::Config("superpose needs at least one field".into()));
                }
                let mut built = fields[0].build()?;
                for f in &fields[1..] {
                    built = built.superpose(f.build()?);
                }
                Ok(built)
            }
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        match self {
            FieldSpec::Sources { paths, .. } => {
                for p in paths {
                    *p = resolve(base, p);
                }
            }
            FieldSpec::Scaled { field, .. } => field.resolve_paths(base),
            FieldSpec::Superpose { fields } => {
                for f in fields {
                    f.resolve_paths(base);
                }
            }
            _ => {}
        }
    }
}

/// Which Hamiltonian to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    LaplaceBeltrami,
    Naive,
    Variational,
    Slab3d,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorSpec {
    pub variant: Variant,
    /// Tangential advection coefficient of the variational reduction.
    pub coef_adv: f64,
}

impl Default for OperatorSpec {
    fn default() -> Self {
        OperatorSpec { variant: Variant::Variational, coef_adv: 1.0 }
    }
}

/// Post-processing knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    /// How many of the lowest slab states get a Schmidt decomposition.
    pub schmidt_states: usize,
    /// How many singular values to keep per state.
    pub schmidt_values: usize,
    /// Random probe points for the curvature consistency summary.
    pub egregium_points: usize,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec { schmidt_states: 3, schmidt_values: 6, egregium_points: 100 }
    }
}

/// What to write beyond the standard artifacts of each command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Number of eigenvector CSV grids to dump.
    pub eigenvectors: usize,
    /// Dump the assembled operator as a triplet CSV + metadata JSON.
    pub dump_operator: bool,
}

/// One self-contained run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub label: String,
    pub surface: SurfaceSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub slab: Option<SlabSpec>,
    #[serde(default)]
    pub particle: ParticleParams,
    #[serde(default)]
    pub field: FieldSpec,
    #[serde(default)]
    pub operator: OperatorSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Scenario> {
        let sc: Scenario =
            toml::from_str(text).map_err(|e| Error::Config(format!("scenario parse: {e}")))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("scenario serialize: {e}")))
    }

    /// Cross-field consistency beyond what serde can express.
    pub fn validate(&self) -> Result<()> {
        ParticleParams::new(self.particle.mass, self.particle.charge)?;
        match (self.operator.variant, &self.slab) {
            (Variant::Slab3d, None) => {
                return Err(Error::Config(
                    "variant slab3d needs a [slab] section".into(),
                ))
            }
            (v, Some(_)) if v != Variant::Slab3d => {
                return Err(Error::Config(format!(
                    "[slab] section is set but the variant is {v:?}; use variant = \"slab3d\""
                )))
            }
            _ => {}
        }
        if self.operator.variant != Variant::Variational && self.operator.coef_adv != 1.0 {
            return Err(Error::Config(
                "coef_adv only applies to the variational variant".into(),
            ));
        }
        if self.operator.variant == Variant::LaplaceBeltrami && !self.field.is_none() {
            return Err(Error::Config(
                "laplace_beltrami has no field coupling; remove [field] or pick a charged variant"
                    .into(),
            ));
        }
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        self.surface.resolve_paths(base);
        self.field.resolve_paths(base);
    }

    pub fn build_chart(&self) -> Result<SurfaceChart> {
        self.surface.build()
    }

    pub fn build_grid(&self, chart: &SurfaceChart) -> Result<SurfaceGrid> {
        SurfaceGrid::build(chart, self.grid.n_u, self.grid.n_v, self.grid.resolve_edges(chart))
    }

    pub fn particle(&self) -> Result<ParticleParams> {
        ParticleParams::new(self.particle.mass, self.particle.charge)
    }

    /// Assemble the operator this scenario describes.
    pub fn assemble(&self) -> Result<BuiltOperator> {
        self.validate()?;
        let chart = self.build_chart()?;
        let grid = self.build_grid(&chart)?;
        let particle = self.particle()?;
        match self.operator.variant {
            Variant::LaplaceBeltrami => {
                let op = assemble_laplace_beltrami(&grid, particle)?;
                Ok(BuiltOperator::Surface { grid, op })
            }
            Variant::Naive => {
                let field = self.field.build()?;
                let op = assemble_naive(&grid, particle, &field)?;
                Ok(BuiltOperator::Surface { grid, op })
            }
            Variant::Variational => {
                let field = self.field.build()?;
                let op = assemble_variational(&grid, particle, &field, self.operator.coef_adv)?;
                Ok(BuiltOperator::Surface { grid, op })
            }
            Variant::Slab3d => {
                let spec = self.slab.as_ref().expect("validated above");
                let slab = SlabGrid::build(grid, spec.eps, spec.n3)?;
                let field = if self.field.is_none() { None } else { Some(self.field.build()?) };
                let op =
                    assemble_slab(&slab, particle, field.as_ref(), spec.bc, spec.confinement)?;
                Ok(BuiltOperator::Slab { slab, op })
            }
        }
    }
}

fn resolve(base: &Path, p: &str) -> String {
    let path = Path::new(p);
    if path.is_absolute() {
        p.to_string()
    } else {
        base.join(path).to_string_lossy().into_owned()
    }
}

/// Load a scenario from a TOML config or from a previously written
/// `manifest.json` (reruns). Relative file references are resolved
/// against the config's directory.
pub fn load_config(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut sc = if path.extension().is_some_and(|e| e == "json") {
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("manifest parse: {e}")))?;
        manifest.scenario
    } else {
        Scenario::from_toml_str(&text)?
    };
    sc.resolve_paths(path.parent().unwrap_or_else(|| Path::new(".")));
    sc.validate()?;
    Ok(sc)
}

/// Embedded scenarios for the acceptance criteria, addressable by name.
pub const PRESET_NAMES: [&str; 8] =
    ["ac1", "ac2", "ac3", "ac4", "ac5", "ac6", "ac7", "ac8"];

pub fn preset_toml(name: &str) -> Option<&'static str> {
    match name.to_ascii_lowercase().as_str() {
        "ac1" => Some(include_str!("../../presets/ac1.toml")),
        "ac2" => Some(include_str!("../../presets/ac2.toml")),
        "ac3" => Some(include_str!("../../presets/ac3.toml")),
        "ac4" => Some(include_str!("../../presets/ac4.toml")),
        "ac5" => Some(include_str!("../../presets/ac5.toml")),
        "ac6" => Some(include_str!("../../presets/ac6.toml")),
        "ac7" => Some(include_str!("../../presets/ac7.toml")),
        "ac8" => Some(include_str!("../../presets/ac8.toml")),
        _ => None,
    }
}

pub fn preset(name: &str) -> Result<Scenario> {
    let text = preset_toml(name).ok_or_else(|| {
        Error::Config(format!("unknown preset '{name}' (known: ac1 .. ac8)"))
    })?;
    Scenario::from_toml_str(text)
}

/// Operator plus the grid it lives on.
pub enum BuiltOperator {
    Surface { grid: SurfaceGrid, op: DiscreteOperator },
    Slab { slab: SlabGrid, op: DiscreteOperator },
}

impl BuiltOperator {
    pub fn operator(&self) -> &DiscreteOperator {
        match self {
            BuiltOperator::Surface { op, .. } | BuiltOperator::Slab { op, .. } => op,
        }
    }

    pub fn hashes(&self) -> (String, Option<String>) {
        match self {
            BuiltOperator::Surface { grid, .. } => (grid.hash.clone(), None),
            BuiltOperator::Slab { slab, .. } => {
                (slab.surface.hash.clone(), Some(slab.hash.clone()))
            }
        }
    }

    fn coord_header(&self) -> &'static str {
        match self {
            BuiltOperator::Surface { .. } => "u,v",
            BuiltOperator::Slab { .. } => "u,v,x3",
        }
    }

    fn coord_rows(&self) -> Vec<String> {
        match self {
            BuiltOperator::Surface { grid, .. } => grid
                .samples
                .iter()
                .map(|s| format!("{:.17e},{:.17e}", s.u, s.v))
                .collect(),
            BuiltOperator::Slab { slab, .. } => {
                let mut rows = Vec::with_capacity(slab.len());
                for s in &slab.surface.samples {
                    for &x3 in &slab.x3 {
                        rows.push(format!("{:.17e},{:.17e},{:.17e}", s.u, s.v, x3));
                    }
                }
                rows
            }
        }
    }
}

/// Everything a run left on disk.
#[derive(Debug)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub manifest: PathBuf,
    pub files: Vec<PathBuf>,
    /// `false` means partial results were written (exit code 3).
    pub all_converged: bool,
}

/// Reproducibility record written next to every artifact set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub units: String,
    pub scenario: Scenario,
    pub grid_hash: String,
    pub slab_hash: Option<String>,
    /// Artifact file name → SHA-256 digest.
    pub outputs: BTreeMap<String, String>,
}

struct ArtifactSet {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl ArtifactSet {
    fn new(dir: &Path) -> Result<ArtifactSet> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(ArtifactSet { dir: dir.to_path_buf(), files: Vec::new() })
    }

    /// Reserve (and record) an artifact path.
    fn file(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn finish(
        self,
        sc: &Scenario,
        command: &str,
        grid_hash: String,
        slab_hash: Option<String>,
        all_converged: bool,
    ) -> Result<RunArtifacts> {
        let mut outputs = BTreeMap::new();
        for f in &self.files {
            let name = f
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            outputs.insert(name, file_digest(f)?);
        }
        let manifest = Manifest {
            tool: "thinwall".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            units: UNITS.into(),
            scenario: sc.clone(),
            grid_hash,
            slab_hash,
            outputs,
        };
        let mpath = self.dir.join("manifest.json");
        write_json(&mpath, &manifest)?;
        Ok(RunArtifacts {
            out_dir: self.dir,
            manifest: mpath,
            files: self.files,
            all_converged,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EgregiumSummary {
    pub points: usize,
    /// Defect stats with analytic second derivatives (absent for
    /// tabulated charts).
    pub analytic: Option<ColumnSummary>,
    /// Defect stats with finite-difference second derivatives.
    pub fd: ColumnSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometrySummary {
    pub label: String,
    pub chart: String,
    pub nodes: usize,
    pub mean_curv: ColumnSummary,
    pub gauss_curv: ColumnSummary,
    pub v0: ColumnSummary,
    pub det_g: ColumnSummary,
    pub egregium: EgregiumSummary,
}

fn egregium_summary(
    chart: &SurfaceChart,
    points: usize,
    seed: u64,
) -> Result<EgregiumSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, f64)> = (0..points)
        .map(|_| {
            let f = |d: usize, r: f64| {
                let [lo, hi] = chart.domain[d];
                lo + (hi - lo) * (0.02 + 0.96 * r)
            };
            (f(0, rng.gen::<f64>()), f(1, rng.gen::<f64>()))
        })
        .collect();
    let run = |c: &SurfaceChart| -> Result<ColumnSummary> {
        let mut defects = Vec::with_capacity(pts.len());
        for &(u, v) in &pts {
            defects.push(egregium_check(c, u, v)?.defect);
        }
        Ok(summarize(defects.into_iter()))
    };
    let analytic = if chart.has_analytic_jet() { Some(run(chart)?) } else { None };
    let fd = run(&chart.clone().with_fd_derivatives())?;
    Ok(EgregiumSummary { points: pts.len(), analytic, fd })
}

/// Curvature tables: `geometry.csv` with per-node `u, v, M, K_gauss,
/// V0, det_g`, plus a JSON summary holding column statistics and the
/// two-route Gaussian curvature consistency check at random points.
pub fn run_geometry(sc: &Scenario, out: &Path) -> Result<RunArtifacts> {
    sc.validate()?;
    let chart = sc.build_chart()?;
    let grid = sc.build_grid(&chart)?;
    let mut art = ArtifactSet::new(out)?;
    write_geometry_csv(&grid, sc.particle.mass, &art.file("geometry.csv"))?;
    let summary = GeometrySummary {
        label: sc.label.clone(),
        chart: chart.label.clone(),
        nodes: grid.len(),
        mean_curv: summarize(grid.samples.iter().map(|s| s.mean_curv)),
        gauss_curv: summarize(grid.samples.iter().map(|s| s.gauss_curv)),
        v0: summarize(grid.samples.iter().map(|s| geometric_potential(s, sc.particle.mass))),
        det_g: summarize(grid.samples.iter().map(|s| s.det_g)),
        egregium: egregium_summary(&chart, sc.analysis.egregium_points, sc.solver.seed)?,
    };
    write_json(&art.file("geometry_summary.json"), &summary)?;
    art.finish(sc, "geometry", grid.hash, None, true)
}

fn dump_spectrum(
    art: &mut ArtifactSet,
    built: &BuiltOperator,
    result: &SpectrumResult,
    sc: &Scenario,
) -> Result<()> {
    write_spectrum_csv(result, &art.file("spectrum.csv"))?;
    write_json(&art.file("spectrum.json"), result)?;
    let n_vec = sc.output.eigenvectors.min(result.eigenvectors.len());
    if n_vec > 0 {
        let coords = built.coord_rows();
        for i in 0..n_vec {
            write_eigenvector_csv(
                &art.file(&format!("eigenvector_{i:02}.csv")),
                built.coord_header(),
                &coords,
                &result.eigenvectors[i],
            )?;
        }
    }
    if sc.output.dump_operator {
        io::write_operator(built.operator(), &art.dir, "operator")?;
        art.files.push(art.dir.join("operator.json"));
        art.files.push(art.dir.join("operator.csv"));
    }
    Ok(())
}

/// Assemble and diagonalize the scenario's operator. Partial results
/// (unconverged pairs) are still written and flagged; the caller maps
/// `all_converged = false` to exit code 3.
pub fn run_spectrum(sc: &Scenario, out: &Path) -> Result<RunArtifacts> {
    let built = sc.assemble()?;
    let result = solve_lowest(built.operator(), &sc.solver)?;
    let mut art = ArtifactSet::new(out)?;
    dump_spectrum(&mut art, &built, &result, sc)?;
    let (gh, sh) = built.hashes();
    art.finish(sc, "spectrum", gh, sh, result.all_converged())
}

fn render_comparison(report: &ComparisonReport, coef_adv: f64) -> String {
    let mut t = String::new();
    t.push_str(&format!("variant comparison (coef_adv = {coef_adv})\n"));
    t.push_str(&format!(
        "  naive:       max |Im| = {:12.5e}   w-hermiticity defect = {:12.5e}   complex: {}\n",
        report.max_im_naive, report.hermiticity_naive, report.naive_complex
    ));
    t.push_str(&format!(
        "  variational: max |Im| = {:12.5e}   w-hermiticity defect = {:12.5e}   complex: {}\n\n",
        report.max_im_variational, report.hermiticity_variational, report.variational_complex
    ));
    t.push_str(&format!(
        "  {:>3}  {:>24} {:>24}  {:>24} {:>24}  {:>12}\n",
        "idx", "naive.re", "naive.im", "variational.re", "variational.im", "|diff|"
    ));
    for (i, row) in report.rows.iter().enumerate() {
        t.push_str(&format!(
            "  {:>3}  {:>24.16e} {:>24.16e}  {:>24.16e} {:>24.16e}  {:>12.4e}\n",
            i, row.naive.re, row.naive.im, row.variational.re, row.variational.im, row.diff
        ));
    }
    if let Some(profile) = &report.anomalous_profile {
        let s = summarize(profile.iter().copied());
        t.push_str(&format!(
            "\n  anomalous diagonal |H_naive - H_var|: min = {:.5e}  max = {:.5e}  mean = {:.5e}\n",
            s.min, s.max, s.mean
        ));
    }
    t
}

/// Build and solve both charged reductions on the same grid and field,
/// then tabulate them side by side. The anomalous difference operator
/// is attached whenever the advection coefficient is the standard 1.
pub fn run_compare(sc: &Scenario, out: &Path) -> Result<RunArtifacts> {
    sc.validate()?;
    if sc.operator.variant == Variant::Slab3d || sc.slab.is_some() {
        return Err(Error::Config(
            "compare contrasts the two surface reductions; drop the [slab] section".into(),
        ));
    }
    let chart = sc.build_chart()?;
    let grid = sc.build_grid(&chart)?;
    let particle = sc.particle()?;
    let field = sc.field.build()?;
    let naive = assemble_naive(&grid, particle, &field)?;
    let variational = assemble_variational(&grid, particle, &field, sc.operator.coef_adv)?;
    let res_naive = solve_lowest(&naive, &sc.solver)?;
    let res_var = solve_lowest(&variational, &sc.solver)?;
    let mut report = compare_variants(&res_naive, &res_var)?;
    if sc.operator.coef_adv == 1.0 {
        let delta = anomalous_delta(&naive, &variational)?;
        report = report.with_anomalous_profile(&delta);
    }
    let mut art = ArtifactSet::new(out)?;
    write_json(&art.file("compare.json"), &report)?;
    atomic_write(
        &art.file("compare.txt"),
        render_comparison(&report, sc.operator.coef_adv).as_bytes(),
    )?;
    write_spectrum_csv(&res_naive, &art.file("spectrum_naive.csv"))?;
    write_spectrum_csv(&res_var, &art.file("spectrum_variational.csv"))?;
    let ok = res_naive.all_converged() && res_var.all_converged();
    art.finish(sc, "compare", grid.hash, None, ok)
}

#[derive(Debug, Clone, Serialize)]
pub struct StateSchmidt {
    pub state: usize,
    pub eigenvalue: C,
    pub converged: bool,
    pub separability_index: f64,
    pub singular_values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparabilityReport {
    pub label: String,
    pub bc: String,
    pub eps: f64,
    pub n3: usize,
    pub states: Vec<StateSchmidt>,
}

/// Schmidt spectra of the lowest slab eigenstates across the
/// surface ⊗ transverse bipartition.
pub fn run_separability(sc: &Scenario, out: &Path) -> Result<RunArtifacts> {
    sc.validate()?;
    if sc.operator.variant != Variant::Slab3d {
        return Err(Error::Config(
            "separability needs the slab3d variant (surface states have no transverse factor)"
                .into(),
        ));
    }
    let built = sc.assemble()?;
    let (slab, op) = match &built {
        BuiltOperator::Slab { slab, op } => (slab, op),
        BuiltOperator::Surface { .. } => unreachable!("slab3d assembles a slab"),
    };
    let mut solver = sc.solver.clone();
    solver.k = solver.k.max(sc.analysis.schmidt_states);
    let result = solve_lowest(op, &solver)?;
    let n_states = sc.analysis.schmidt_states.min(result.eigenvalues.len());
    let mut states = Vec::with_capacity(n_states);
    let mut csv = String::from("state,k,sigma\n");
    for i in 0..n_states {
        let rep = schmidt_spectrum(&result.eigenvectors[i], slab, sc.analysis.schmidt_values)?;
        for (k, s) in rep.singular_values.iter().enumerate() {
            csv.push_str(&format!("{i},{k},{:.17e}\n", s));
        }
        states.push(StateSchmidt {
            state: i,
            eigenvalue: result.eigenvalues[i],
            converged: result.converged[i],
            separability_index: rep.separability_index,
            singular_values: rep.singular_values,
        });
    }
    let spec = sc.slab.as_ref().expect("validated");
    let report = SeparabilityReport {
        label: sc.label.clone(),
        bc: spec.bc.label(),
        eps: spec.eps,
        n3: spec.n3,
        states,
    };
    let mut art = ArtifactSet::new(out)?;
    write_json(&art.file("separability.json"), &report)?;
    atomic_write(&art.file("schmidt.csv"), csv.as_bytes())?;
    dump_spectrum(&mut art, &built, &result, sc)?;
    let (gh, sh) = built.hashes();
    art.finish(sc, "separability", gh, sh, result.all_converged())
}

#[derive(Debug, Clone, Serialize)]
pub struct GaugeReport {
    pub label: String,
    pub h: [f64; 2],
    pub h_fine: [f64; 2],
    pub nodes: usize,
    pub nodes_fine: usize,
    pub max_defect: f64,
    pub mean_defect: f64,
    /// Measure-weighted rms of the defect — the L2(surface) norm the
    /// identity converges in. The max can sit on a chart-degenerate
    /// edge ring (clipped sphere poles) that carries almost no area.
    pub wrms_defect: f64,
    pub max_defect_fine: f64,
    pub wrms_defect_fine: f64,
    /// `log2(wrms_defect / wrms_defect_fine)`; absent when both defects
    /// sit at the floating-point floor (flat charts).
    pub order: Option<f64>,
}

fn divergence_defects(
    grid: &SurfaceGrid,
    field: &VectorPotentialField,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let sf = sample_surface_field(grid, field)?;
    let div_par = surface_divergence(grid, &sf)?;
    let defects = (0..grid.len())
        .map(|p| {
            let identity = surface_divergence_identity(&sf[p], &grid.samples[p], div_par[p]);
            (identity - sf[p].div3).abs()
        })
        .collect();
    let div3 = sf.iter().map(|s| s.div3).collect();
    Ok((div_par, div3, defects))
}

fn refine_n(n: usize, rule: EdgeRule) -> usize {
    if n == 1 {
        return 1;
    }
    match rule {
        EdgeRule::Periodic | EdgeRule::ZeroFlux => 2 * n,
        EdgeRule::Dirichlet => 2 * n + 1,
    }
}

/// Check the surface form of the ambient divergence node by node, at
/// the configured grid and once more with the spacing halved.
pub fn run_gauge_check(sc: &Scenario, out: &Path) -> Result<RunArtifacts> {
    sc.validate()?;
    let chart = sc.build_chart()?;
    let grid = sc.build_grid(&chart)?;
    let field = sc.field.build()?;
    let edges = sc.grid.resolve_edges(&chart);
    let fine = SurfaceGrid::build(
        &chart,
        refine_n(sc.grid.n_u, edges[0]),
        refine_n(sc.grid.n_v, edges[1]),
        edges,
    )?;
    for d in 0..2 {
        if grid.active[d] {
            let ratio = grid.h[d] / fine.h[d];
            debug_assert!((ratio - 2.0).abs() < 1e-12, "refinement must halve h");
        }
    }
    let (div_par, div3, defects) = divergence_defects(&grid, &field)?;
    let (_, _, defects_fine) = divergence_defects(&fine, &field)?;
    let coarse = summarize(defects.iter().copied());
    let fine_max = summarize(defects_fine.iter().copied()).max;
    let wrms = |g: &SurfaceGrid, d: &[f64]| -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (w, x) in g.weights.iter().zip(d) {
            num += w * x * x;
            den += w;
        }
        (num / den.max(f64::MIN_POSITIVE)).sqrt()
    };
    let wrms_defect = wrms(&grid, &defects);
    let wrms_defect_fine = wrms(&fine, &defects_fine);
    // Below ~1e-12 the FD probes of div3 dominate and the ratio stops
    // measuring the stencil order.
    let order = if wrms_defect > 1e-12 && wrms_defect_fine > 1e-14 {
        Some((wrms_defect / wrms_defect_fine).log2())
    } else {
        None
    };
    let report = GaugeReport {
        label: sc.label.clone(),
        h: grid.h,
        h_fine: fine.h,
        nodes: grid.len(),
        nodes_fine: fine.len(),
        max_defect: coarse.max,
        mean_defect: coarse.mean,
        wrms_defect,
        max_defect_fine: fine_max,
        wrms_defect_fine,
        order,
    };
    let mut csv = String::from("u,v,div_par,div3,defect\n");
    for (p, s) in grid.samples.iter().enumerate() {
        csv.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            s.u, s.v, div_par[p], div3[p], defects[p]
        ));
    }
    let mut art = ArtifactSet::new(out)?;
    write_json(&art.file("gauge.json"), &report)?;
    atomic_write(&art.file("divergence.csv"), csv.as_bytes())?;
    art.finish(sc, "gauge-check", grid.hash, None, true)
}

#[derive(Debug, Clone, Serialize)]
pub struct XiReport {
    pub label: String,
    pub h3: f64,
    pub nodes: usize,
    pub max_defect: f64,
    pub max_defect_half: f64,
    /// `max_defect / max_defect_half`; ~4 for a second-order defect,
    /// absent when the defect is identically zero (flat charts).
    pub ratio: Option<f64>,
}

/// Smooth transverse probe with no special symmetry, so none of the
/// derivative terms in the reduction identity degenerate.
fn xi_probe(x: f64) -> f64 {
    (0.7 * x).exp() * (0.4 * x).cos()
}

/// Verify the thin-slab reduction identity node by node: the
/// measure-flattened transverse operator must equal the bare second
/// derivative plus the curvature potential, with a defect that shrinks
/// quadratically in the transverse step.
pub fn run_xi_check(sc: &Scenario, out: &Path) -> Result<RunArtifacts> {
    sc.validate()?;
    let spec = sc.slab.ok_or_else(|| {
        Error::Config("xi-check needs a [slab] section for the transverse step".into())
    })?;
    let chart = sc.build_chart()?;
    let grid = sc.build_grid(&chart)?;
    let slab = SlabGrid::build(grid, spec.eps, spec.n3)?;
    let h3 = slab.h3;
    let mut csv = String::from("u,v,defect,defect_half\n");
    let mut max_d = 0.0f64;
    let mut max_d2 = 0.0f64;
    for s in &slab.surface.samples {
        let d = xi_reduction_check(s, &xi_probe, h3);
        let d2 = xi_reduction_check(s, &xi_probe, 0.5 * h3);
        max_d = max_d.max(d);
        max_d2 = max_d2.max(d2);
        csv.push_str(&format!("{:.17e},{:.17e},{:.17e},{:.17e}\n", s.u, s.v, d, d2));
    }
    let ratio = if max_d2 > 0.0 { Some(max_d / max_d2) } else { None };
    let report = XiReport {
        label: sc.label.clone(),
        h3,
        nodes: slab.surface.len(),
        max_defect: max_d,
        max_defect_half: max_d2,
        ratio,
    };
    let mut art = ArtifactSet::new(out)?;
    write_json(&art.file("xi.json"), &report)?;
    atomic_write(&art.file("xi.csv"), csv.as_bytes())?;
    art.finish(sc, "xi-check", slab.surface.hash.clone(), Some(slab.hash.clone()), true)
}
