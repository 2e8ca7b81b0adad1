//! Temporary oracle cross-check for the ladder repro instance.

use lticontrol::norm::{minimal_norm, NormProblem, SolveOptions};
use lticontrol::oracle::bracket;
use lticontrol::system::TimeGrid;
use lticontrol::{LtiSystem, Matrix};

fn main() {
    let a = Matrix::new(
        3,
        3,
        vec![
            0.07293774571203837,
            -0.24290899769083296,
            0.17014314881609893,
            0.5437015658044211,
            0.7902555067990806,
            -0.3835535474453131,
            0.985142743764043,
            -0.7915488613883999,
            -0.6039384607357152,
        ],
    )
    .unwrap();
    let b = Matrix::new(
        3,
        1,
        vec![-0.46182977527191316, 0.9632604974677741, 0.22102615477263843],
    )
    .unwrap();
    let y0 = vec![-0.7484707699996063, 0.5005426665804487, -0.4350270628233725];
    let opts = SolveOptions::default();
    for t in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        let sys = LtiSystem::new(a.clone(), b.clone()).unwrap();
        let prob = NormProblem::new(sys, y0.clone(), t).unwrap();
        let quad = TimeGrid::new(t, 4096).unwrap();
        let grid = TimeGrid::new(t, 512).unwrap();
        let br = bracket(&prob, 4000, &quad, &grid, 2000).unwrap();
        let sol = minimal_norm(&prob, &opts);
        match sol {
            Ok(s) => println!(
                "T={t}: solver {:.9e} oracle [{:.9e}, {:.9e}]",
                s.value, br.lower, br.upper
            ),
            Err(e) => println!(
                "T={t}: solver ERR {e}; oracle [{:.9e}, {:.9e}]",
                br.lower, br.upper
            ),
        }
    }
}
