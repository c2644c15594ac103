//! Best diagonal preconditioner of a small symmetric matrix, and a check of
//! which diagonals satisfy `P^{-1} ⪰ A`.
//!
//! cargo run --example optimal_preconditioner [matrix-file]

use std::path::PathBuf;

use mdbt::oracle::{condition_number, is_valid_preconditioner, optimal_diag_precond, parse_dense_matrix, smoothness_l};

fn main() -> mdbt::Result<()> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/two_by_two.mat"));
    let text = std::fs::read_to_string(&path).map_err(|e| mdbt::Error::io(&path, e))?;
    let a = parse_dense_matrix(&text)?;

    let l = smoothness_l(&a)?;
    let rep = optimal_diag_precond(&a, 1e-10)?;
    println!("L = {l:.6}, so the best scalar step is 1/L = {:.6}", 1.0 / l);
    println!("p*     = {:?}", rep.p_star.as_slice());
    println!("kappa* = {:.6} ({})", rep.kappa_star, rep.method);
    if let Some(k) = rep.grid_kappa {
        println!("grid   = {k:.6}");
    }
    let identity = vec![1.0; a.n_rows()];
    println!("kappa(I) = {:.6}", condition_number(&a.to_dense(), &identity));

    for p in [rep.p_star.as_slice().to_vec(), vec![1.0 / l; a.n_rows()], vec![2.0; a.n_rows()]] {
        println!("valid {:?}: {}", p, is_valid_preconditioner(&a, &p));
    }
    Ok(())
}
