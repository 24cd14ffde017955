//! Regenerates `tests/fixtures/separability.json`: the coarse-grid dense
//! oracle behind the separability thresholds.
//!
//! For each surface a thin slab is assembled twice — Dirichlet walls and
//! the curvature-coupled constraint (d3 + 2M) chi = 0 — and the three
//! lowest states go through the surface x transverse Schmidt split. The
//! Dirichlet indices define a per-surface baseline for "numerically
//! separable at this resolution"; the constraint keeps constant-M
//! surfaces at the baseline and entangles the torus, whose mean
//! curvature varies around the tube.
//!
//! Dense full-spectrum solves make the numbers independent of the
//! iterative solver, so the fixture can sit in judgement over it.
//! Run with `--release`; the grids are chosen to keep the dense solves
//! around a minute total.

use std::path::Path;

use num_complex::Complex64;

use thinwall::analysis::schmidt_spectrum;
use thinwall::assembly::{
    assemble_slab, BoundaryCondition, Confinement, EdgeRule, ParticleParams, SlabGrid,
    SurfaceGrid,
};
use thinwall::geometry::{catenoid, cylinder, plane, sphere, torus, SurfaceChart};
use thinwall::solve::{solve_dense, SolverConfig};

const EPS: f64 = 0.05;
const N3: usize = 6;
const STATES: usize = 3;
const SCHMIDT_VALUES: usize = 6;

struct Case {
    name: &'static str,
    chart: SurfaceChart,
    n: [usize; 2],
    /// Below the bottom of the Dirichlet / constraint spectrum.
    shift: [f64; 2],
}

fn main() {
    let cases = [
        Case {
            name: "plane",
            chart: plane(1.2, 0.9).unwrap(),
            n: [10, 8],
            shift: [300.0, -30.0],
        },
        Case {
            name: "cylinder",
            chart: cylinder(1.0, 1.0).unwrap(),
            n: [12, 6],
            shift: [300.0, -30.0],
        },
        Case {
            name: "sphere",
            chart: sphere(1.0).unwrap(),
            n: [12, 12],
            shift: [300.0, -30.0],
        },
        Case {
            name: "catenoid",
            chart: catenoid(1.0, 1.0).unwrap(),
            n: [12, 10],
            shift: [300.0, -30.0],
        },
        Case {
            name: "torus",
            chart: torus(2.0, 1.0).unwrap(),
            n: [16, 10],
            shift: [300.0, -30.0],
        },
    ];

    let mut surfaces = Vec::new();
    for case in &cases {
        let edges = [
            edge_rule(&case.chart, 0),
            edge_rule(&case.chart, 1),
        ];
        let grid = SurfaceGrid::build(&case.chart, case.n[0], case.n[1], edges).unwrap();
        let slab = SlabGrid::build(grid, EPS, N3).unwrap();
        let dirichlet = states(&slab, BoundaryCondition::Dirichlet, case.shift[0]);
        let neumann = states(&slab, BoundaryCondition::neumann_default(), case.shift[1]);
        println!(
            "{:<9} dim {:>5}  dirichlet idx {:?}  constraint idx {:?}",
            case.name,
            slab.surface.len() * N3,
            dirichlet.1,
            neumann.1
        );
        surfaces.push(serde_json::json!({
            "name": case.name,
            "chart": case.chart.label,
            "grid": case.n,
            "dirichlet": { "shift": case.shift[0], "eigenvalues": dirichlet.0, "schmidt_index": dirichlet.1 },
            "constraint": { "shift": case.shift[1], "eigenvalues": neumann.0, "schmidt_index": neumann.1 },
        }));
    }

    let fixture = serde_json::json!({
        "eps": EPS,
        "n3": N3,
        "states": STATES,
        "constraint": { "c_a": 2.0, "c_m": 2.0 },
        "surfaces": surfaces,
    });
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/separability.json");
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(&path, serde_json::to_string_pretty(&fixture).unwrap()).unwrap();
    println!("wrote {}", path.display());
}

fn edge_rule(chart: &SurfaceChart, d: usize) -> EdgeRule {
    if chart.periodic[d] {
        EdgeRule::Periodic
    } else {
        EdgeRule::ZeroFlux
    }
}

/// Three lowest eigenvalues and their Schmidt indices, densely solved.
fn states(slab: &SlabGrid, bc: BoundaryCondition, shift: f64) -> (Vec<f64>, Vec<f64>) {
    let op = assemble_slab(slab, ParticleParams::default(), None, bc, Confinement::None).unwrap();
    let config = SolverConfig {
        k: STATES + 1,
        shift: Complex64::new(shift, 0.0),
        ..SolverConfig::default()
    };
    let result = solve_dense(&op, &config).unwrap();
    result.require_converged().unwrap();
    let mut eigenvalues = Vec::new();
    let mut indices = Vec::new();
    for i in 0..STATES {
        let rep = schmidt_spectrum(&result.eigenvectors[i], slab, SCHMIDT_VALUES).unwrap();
        eigenvalues.push(result.eigenvalues[i].re);
        indices.push(rep.separability_index);
    }
    (eigenvalues, indices)
}
