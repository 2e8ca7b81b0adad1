//! Scratch oracle freeze run (temporary).

use lticontrol::models::{double_integrator, scalar_system};
use lticontrol::norm::{minimal_norm, NormProblem, SolveOptions};
use lticontrol::oracle::{dual_grid_search, primal_grid_upper_bound, scalar_closed_form};
use lticontrol::system::TimeGrid;

fn main() {
    // scalar dual grid vs closed form
    for &(a, b, y0, t) in &[(1.0, 1.0, 1.0, 1.0), (-1.0, 1.0, 1.0, 1.0), (0.0, 1.0, 1.0, 2.0)] {
        let prob = NormProblem::new(scalar_system(a, b).unwrap(), vec![y0], t).unwrap();
        let quad = TimeGrid::new(t, 4096).unwrap();
        let lower = dual_grid_search(&prob, 128, &quad).unwrap();
        let cf = scalar_closed_form(a, y0, t, b);
        println!("scalar a={a} b={b} T={t}: dual_grid={lower:.15e} closed={cf:.15e} diff={:.2e}", (lower - cf).abs());
    }

    // primal upper bounds (spec example instances)
    let prob = NormProblem::new(scalar_system(0.0, 1.0).unwrap(), vec![1.0], 2.0).unwrap();
    let grid = TimeGrid::new(2.0, 64).unwrap();
    let (up, _) = primal_grid_upper_bound(&prob, &grid, 1200).unwrap();
    println!("primal a=0 T=2 K=64: upper={up:.12e} (target <= 0.501)");

    let prob = NormProblem::new(scalar_system(1.0, 1.0).unwrap(), vec![1.0], 1.0).unwrap();
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let (up, _) = primal_grid_upper_bound(&prob, &grid, 1200).unwrap();
    println!("primal a=1 T=1 K=256: upper={up:.12e} (target <= 1.585...)");

    // dint reference: y0=[1,0], T=2
    let dint = double_integrator();
    let prob = NormProblem::new(dint.clone(), vec![1.0, 0.0], 2.0).unwrap();
    let quad = TimeGrid::new(2.0, 4096).unwrap();
    let t0 = std::time::Instant::now();
    let lower = dual_grid_search(&prob, 10_000, &quad).unwrap();
    println!("dint dual 1e4 dirs: lower={lower:.15e}  ({:?})", t0.elapsed());
    let grid = TimeGrid::new(2.0, 256).unwrap();
    let t0 = std::time::Instant::now();
    let (up, _) = primal_grid_upper_bound(&prob, &grid, 1200).unwrap();
    println!("dint primal K=256: upper={up:.12e}  ({:?})", t0.elapsed());
    let sol = minimal_norm(&prob, &SolveOptions::default()).unwrap();
    println!("dint solver: {:.15e}", sol.value);

    // dint acceptance suite: 9 states x 4 horizons
    let states: [[f64; 2]; 9] = [
        [1.0, 0.0],
        [-1.0, 0.0],
        [0.0, 1.0],
        [0.0, -1.0],
        [1.0, 1.0],
        [1.0, -1.0],
        [-1.0, 1.0],
        [2.0, 0.5],
        [0.5, -2.0],
    ];
    let mut worst_gap = 0.0_f64;
    let mut worst_dev = 0.0_f64;
    let t_all = std::time::Instant::now();
    for y0 in &states {
        for &t in &[0.5, 1.0, 2.0, 4.0] {
            let prob = NormProblem::new(dint.clone(), y0.to_vec(), t).unwrap();
            let quad = TimeGrid::new(t, 2048).unwrap();
            let lower = dual_grid_search(&prob, 2000, &quad).unwrap();
            let grid = TimeGrid::new(t, 256).unwrap();
            let (upper, _) = primal_grid_upper_bound(&prob, &grid, 1500).unwrap();
            let sol = minimal_norm(&prob, &SolveOptions::default()).unwrap();
            let gap = (upper - lower) / lower;
            let mid = 0.5 * (lower + upper);
            let dev = (sol.value - mid).abs() - (upper - lower) / 2.0;
            worst_gap = worst_gap.max(gap);
            worst_dev = worst_dev.max(dev);
            if gap > 5e-3 || dev > 1e-4 {
                println!("  BAD y0={y0:?} T={t}: lower={lower:.9e} upper={upper:.9e} solver={:.9e} gap={gap:.3e} dev={dev:.3e}", sol.value);
            }
        }
    }
    println!("dint suite: worst rel gap={worst_gap:.3e} worst out-of-bracket dev={worst_dev:.3e}  ({:?})", t_all.elapsed());

    // heat J=4 x0=1: primal upper vs solver value
    let model = lticontrol::models::heat_point_control(1.0, 4).unwrap();
    let heat = lticontrol::models::truncate(&model).unwrap();
    let prob = NormProblem::new(heat, vec![1.0, 0.5, 0.25, 0.125], 1.0).unwrap();
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let (up, _) = primal_grid_upper_bound(&prob, &grid, 2000).unwrap();
    let sol = minimal_norm(&prob, &SolveOptions::default()).unwrap();
    println!("heat J=4: solver={:.12e} primal upper={up:.12e} rel gap={:.3e}", sol.value, (up - sol.value) / sol.value);

    // null-control cost for dint at T=2
    let cost = lticontrol::norm::null_control_cost(&dint, 2.0, &SolveOptions::default()).unwrap();
    println!("dint cost T=2: {:.12e} dirs={} argmax={:?}", cost.lower_bound, cost.directions_evaluated, cost.argmax_y0);
}
