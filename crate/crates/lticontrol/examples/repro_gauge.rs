//! Temporary: gauge quadrature diagnostics on the failing instance.

use lticontrol::matrix::{dot, expm, norm2};
use lticontrol::norm::{gauge, minimal_norm, NormProblem, SolveOptions};
use lticontrol::system::TimeGrid;
use lticontrol::{LtiSystem, Matrix};

fn main() {
    let a = Matrix::new(
        3,
        3,
        vec![
            -0.5613214076480563,
            -0.1799436339780651,
            -0.023146814161604343,
            -0.3722763375293698,
            -0.07012609987602084,
            -0.4213012851261823,
            0.15502800996149163,
            -0.29753381337640394,
            0.10908759607992677,
        ],
    )
    .unwrap();
    let b = Matrix::new(
        3,
        1,
        vec![0.20159470627364293, -0.2902143901514885, -0.31327500134792347],
    )
    .unwrap();
    let y0 = vec![-0.426894742838784, 0.6145548151629816, 0.663387712952691];
    let sys = LtiSystem::new(a.clone(), b).unwrap();
    for t in [1.0f64, 2.0, 4.0] {
        let prob = NormProblem::new(sys.clone(), y0.clone(), t).unwrap();
        let sol = minimal_norm(&prob, &SolveOptions::default()).unwrap();
        let cert = sol.certificate.as_ref().unwrap();
        let c = expm(&a, t).unwrap().mul_vec(&y0);
        println!(
            "T={t}: value={} quad_panels={} iters={} dot={}",
            sol.value,
            sol.quad_panels_used,
            sol.iterations,
            dot(&c, &cert.z)
        );
        for k in [512usize, 2048, 8192, 65536] {
            let g = gauge(&prob, &cert.z, &TimeGrid::new(t, k).unwrap());
            println!("  gauge at K={k}: {g}  ratio={}", dot(&c, &cert.z) / g);
        }
        println!("  z = {:?} (norm {})", cert.z, norm2(&cert.z));
    }
}
