//! Regenerates the converged states under `tests/fixtures/`.
//!
//! Each state is found by tracing its branch, re-solved with Newton at the
//! fixture resolution and cross-checked against a solve at twice the nodes.
//!
//! ```text
//! cargo run --release --example make_fixtures
//! ```

use std::path::Path;

use vstate::cli::StateFile;
use vstate::continuation::{seed_from_bifurcation, states_at_omega, trace_branch};
use vstate::solver::newton_solve;
use vstate::{BranchSelector, ContinuationConfig, NewtonConfig, Result, Shape, SpectralGrid};

struct Case {
    name: &'static str,
    shape: Shape,
    m: usize,
    selector: BranchSelector,
    omega: f64,
    nodes: usize,
}

fn main() -> Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    std::fs::create_dir_all(&dir)?;
    let cases = [
        Case { name: "sc_m4_b0.8", shape: Shape::simply(0.8)?, m: 4, selector: BranchSelector::Sc, omega: 0.395, nodes: 256 },
        Case { name: "dc_m4_0.8_0.53", shape: Shape::doubly(0.8, 0.53)?, m: 4, selector: BranchSelector::Plus, omega: 0.15, nodes: 256 },
        Case { name: "sc_m3_b0.8", shape: Shape::simply(0.8)?, m: 3, selector: BranchSelector::Sc, omega: 0.3765, nodes: 768 },
    ];
    for case in cases {
        let coarse = SpectralGrid::new(96)?;
        let seed = seed_from_bifurcation(case.shape, case.m, case.selector, 1e-3, 0.0, &coarse)?;
        let cfg = ContinuationConfig { max_nodes: case.nodes, ..ContinuationConfig::for_shape(&case.shape) };
        let branch = trace_branch(&seed, &coarse, &cfg)?;
        let grid = SpectralGrid::new(case.nodes)?;
        let fine = SpectralGrid::new(2 * case.nodes)?;
        let newton = NewtonConfig { tol: 1e-13, ..NewtonConfig::for_problem(&branch.problem) };
        let states = states_at_omega(&branch, case.omega, &grid, &newton, 1e-3)?;
        println!("{}: {} states at omega {}", case.name, states.len(), case.omega);
        let p = branch.problem.with_omega(case.omega);
        let modes = p.modes(&grid)?;
        for (i, (x, report)) in states.iter().enumerate() {
            let curves = p.shape.curves();
            let mut padded = vec![0.0; p.unknowns(&fine)?];
            let fine_modes = p.modes(&fine)?;
            for c in 0..curves {
                padded[c * fine_modes..c * fine_modes + modes].copy_from_slice(&x[c * modes..(c + 1) * modes]);
            }
            let (y, r2) = newton_solve(&p, &padded, &fine, &newton)?;
            let drift = (0..curves)
                .flat_map(|c| (0..modes).map(move |k| (c, k)))
                .map(|(c, k)| (x[c * modes + k] - y[c * fine_modes + k]).abs())
                .fold(0.0f64, f64::max);
            println!(
                "  state {}: a1 {:.6} residual {:.2e}, at 2N residual {:.2e}, coefficient drift {:.2e}",
                i + 1,
                x[0],
                report.final_sup_norm,
                r2.final_sup_norm,
                drift
            );
            let file = StateFile { problem: p, nodes: case.nodes, contours: p.contours(x)?, report: report.clone() };
            let name = if states.len() > 1 { format!("{}_state{}.json", case.name, i + 1) } else { format!("{}.json", case.name) };
            std::fs::write(dir.join(name), serde_json::to_string_pretty(&file)?)?;
        }
    }
    Ok(())
}
