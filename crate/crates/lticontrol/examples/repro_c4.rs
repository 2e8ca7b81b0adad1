//! Temporary repro harness for the roundtrip ladder failure.

use lticontrol::matrix::{default_rank_tol, norm2};
use lticontrol::system::reachable_subspace;
use lticontrol::time::{roundtrip_check, TimeOptions};
use lticontrol::{LtiSystem, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let opts = TimeOptions::default();
    let mut done = 0usize;
    while done < 50 {
        let n = rng.random_range(1..=3usize);
        let a_entries: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b_entries: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = Matrix::new(n, n, a_entries.clone()).unwrap();
        let b = Matrix::new(n, 1, b_entries.clone()).unwrap();
        let sys = match LtiSystem::new(a, b) {
            Ok(s) => s,
            Err(_) => continue,
        };
        if reachable_subspace(&sys, default_rank_tol(n)).dim() != n {
            continue;
        }
        let mut y0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y_norm = norm2(&y0);
        if y_norm < 0.1 {
            continue;
        }
        y0.iter_mut().for_each(|x| *x /= y_norm);
        let t = rng.random_range(0.5..2.0);
        match roundtrip_check(&sys, &y0, t, &opts) {
            Ok(rel) => {
                if rel > 1e-3 {
                    println!("instance {done} (n={n}, t={t}): rel {rel:.3e}");
                    println!("A={a_entries:?} B={b_entries:?} y0={y0:?}");
                }
            }
            Err(e) => {
                println!("instance {done} (n={n}, t={t}) failed: {e}");
                println!("A={a_entries:?}");
                println!("B={b_entries:?}");
                println!("y0={y0:?}");
                return;
            }
        }
        done += 1;
    }
    println!("all 50 ok");
}
