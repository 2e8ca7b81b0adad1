//! Temporary repro harness for the ladder monotonicity failure.

use lticontrol::classify::{classify_finite_dim, finite_dim_boundary_data, Query};
use lticontrol::matrix::{default_rank_tol, full_orthogonal_basis, norm2};
use lticontrol::norm::{minimal_norm, LimitOptions, NormProblem, SolveOptions};
use lticontrol::system::reachable_subspace;
use lticontrol::time::{minimal_time, TimeOptions, TimeProblem};
use lticontrol::{LtiSystem, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_entries(rng: &mut ChaCha8Rng, len: usize, lim: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-lim..lim)).collect()
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    loop {
        let m = Matrix::new(n, n, random_entries(rng, n * n, 1.0)).unwrap();
        let (q, rank) = full_orthogonal_basis(&m, default_rank_tol(n));
        if rank == n {
            return q;
        }
    }
}

struct Composed {
    sys: LtiSystem,
    q: Matrix,
    nc: usize,
    n: usize,
}

fn compose(rng: &mut ChaCha8Rng, n: usize, nc: usize, antistable: bool) -> Option<Composed> {
    let (ac, bc) = if antistable {
        let mut ac = Matrix::zeros(nc, nc);
        for i in 0..nc {
            ac.set(i, i, rng.random_range(0.5..1.5));
            for j in i + 1..nc {
                ac.set(i, j, rng.random_range(-0.5..0.5));
            }
        }
        let bc: Vec<f64> = (0..nc)
            .map(|_| {
                let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                s * rng.random_range(0.5..1.5)
            })
            .collect();
        (ac, bc)
    } else {
        let ac = Matrix::new(nc, nc, random_entries(rng, nc * nc, 0.7)).unwrap();
        let bc: Vec<f64> = (0..nc)
            .map(|_| {
                let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                s * rng.random_range(0.3..1.0)
            })
            .collect();
        (ac, bc)
    };
    let sub = LtiSystem::new(ac.clone(), Matrix::column(&bc).ok()?).ok()?;
    if reachable_subspace(&sub, default_rank_tol(nc)).dim() != nc {
        return None;
    }
    let mut blk = Matrix::zeros(n, n);
    for i in 0..nc {
        for j in 0..nc {
            blk.set(i, j, ac.get(i, j));
        }
    }
    let nu = n - nc;
    if nu > 0 {
        let au = random_entries(rng, nu * nu, 0.8);
        for i in 0..nu {
            for j in 0..nu {
                blk.set(nc + i, nc + j, au[i * nu + j]);
            }
        }
    }
    let mut bfull = vec![0.0; n];
    bfull[..nc].copy_from_slice(&bc);
    let q = random_orthogonal(rng, n);
    let a = q.mul(&blk).mul(&q.transpose());
    let b = q.mul(&Matrix::column(&bfull).ok()?);
    let sys = LtiSystem::new(a, b).ok()?;
    if reachable_subspace(&sys, default_rank_tol(n)).dim() != nc {
        return None;
    }
    Some(Composed { sys, q, nc, n })
}

fn mixed_state(rng: &mut ChaCha8Rng, c: &Composed, unreachable: bool) -> Vec<f64> {
    let mut v = vec![0.0; c.n];
    for x in v.iter_mut().take(c.nc) {
        let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        *x = s * rng.random_range(0.2..1.0);
    }
    if unreachable {
        for x in v.iter_mut().skip(c.nc) {
            let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            *x = s * rng.random_range(0.5..1.0);
        }
    }
    let mut y0 = c.q.mul_vec(&v);
    let norm = norm2(&y0);
    y0.iter_mut().for_each(|x| *x /= norm);
    y0
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let limit = LimitOptions::default();
    let solve = SolveOptions::default();
    let topts = TimeOptions::default();
    let mut i = 0usize;
    while i < 100 {
        let cat = i % 3;
        let n = rng.random_range(2..=4usize);
        let nc = match cat {
            0 => rng.random_range(1..n),
            _ => rng.random_range(1..=n),
        };
        let composed = match compose(&mut rng, n, nc, cat == 2) {
            Some(c) => c,
            None => continue,
        };
        let y0 = mixed_state(&mut rng, &composed, cat == 0);
        let outcome: Result<(), lticontrol::Error> = (|| {
            match cat {
                0 => {
                    for t in [0.5, 2.0] {
                        classify_finite_dim(&composed.sys, &y0, Query::Horizon(t), &limit)?;
                        minimal_norm(
                            &NormProblem::new(composed.sys.clone(), y0.clone(), t)?,
                            &solve,
                        )?;
                    }
                }
                1 => {
                    let n1 = minimal_norm(
                        &NormProblem::new(composed.sys.clone(), y0.clone(), 1.0)?,
                        &solve,
                    )?;
                    let m = 2.0 * n1.value;
                    classify_finite_dim(&composed.sys, &y0, Query::Bound(m), &limit)?;
                    minimal_time(&TimeProblem::new(composed.sys.clone(), y0.clone(), m)?, &topts)?;
                }
                _ => {
                    finite_dim_boundary_data(&composed.sys, &y0, &limit)?;
                }
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            println!("instance {i} cat {cat} n {n} nc {} failed: {e}", composed.nc);
            println!("A = {:?}", composed.sys.a());
            println!("B = {:?}", composed.sys.b());
            println!("y0 = {y0:?}");
            // dump a system file for CLI probing
            let a_flat: Vec<f64> = (0..composed.n)
                .flat_map(|r| (0..composed.n).map(move |c| (r, c)))
                .map(|(r, c)| composed.sys.a().get(r, c))
                .collect();
            let b_flat: Vec<f64> = (0..composed.n)
                .map(|r| composed.sys.b().get(r, 0))
                .collect();
            println!(
                "{{\"n\":{},\"m\":1,\"A\":{:?},\"B\":{:?}}}",
                composed.n, a_flat, b_flat
            );
            return;
        }
        i += 1;
    }
    println!("all instances passed");
}
