//! Composite trapezoid rule on the periodic hypercube `[0, 2π)^d`.
//!
//! For a periodic integrand the trapezoid rule reduces to the plain mean over
//! equally spaced nodes and converges geometrically for analytic integrands.
//! Grid values are evaluated in parallel and reduced by pairwise summation in
//! grid order, so results are bit-identical for a fixed node count.

use rayon::prelude::*;

use crate::{Error, Result};

/// Pairwise (cascade) summation in slice order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BASE: usize = 32;
    if values.len() <= BASE {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Mean of `K` integrands together with a resolution estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicMean<const K: usize> {
    pub mean: [f64; K],
    /// `|mean - mean on the half-resolution subgrid|`, per integrand.
    pub error_estimate: [f64; K],
    pub nodes: usize,
}

/// Averages `f` over `[0, 2π)^dims` with `nodes` points per dimension.
///
/// `f` receives the node angles, outermost dimension first. With an even
/// node count the half-resolution estimate reuses the even-index subgrid.
pub fn periodic_mean<const K: usize, F>(dims: usize, nodes: usize, f: F) -> Result<PeriodicMean<K>>
where
    F: Fn(&[f64]) -> Result<[f64; K]> + Sync,
{
    if dims == 0 {
        return Err(Error::Parameter("quadrature needs at least one dimension".into()));
    }
    if nodes < 2 {
        return Err(Error::Parameter(format!(
            "quadrature needs at least 2 nodes, got {nodes}"
        )));
    }
    let total = nodes
        .checked_pow(dims as u32)
        .filter(|&t| t <= 1 << 32)
        .ok_or_else(|| Error::Parameter(format!("{nodes}^{dims} quadrature nodes is too many")))?;
    let step = std::f64::consts::TAU / nodes as f64;

    let values: Vec<[f64; K]> = (0..total)
        .into_par_iter()
        .map_init(
            || vec![0.0; dims],
            |angles, flat| {
                let mut rest = flat;
                for d in (0..dims).rev() {
                    angles[d] = (rest % nodes) as f64 * step;
                    rest /= nodes;
                }
                f(angles)
            },
        )
        .collect::<Result<_>>()?;

    let coarse = nodes.is_multiple_of(2);
    let mut mean = [0.0; K];
    let mut error_estimate = [0.0; K];
    let mut column = Vec::with_capacity(total);
    let mut sub = Vec::new();
    for k in 0..K {
        column.clear();
        column.extend(values.iter().map(|v| v[k]));
        mean[k] = pairwise_sum(&column) / total as f64;
        if coarse {
            sub.clear();
            sub.extend(
                column
                    .iter()
                    .enumerate()
                    .filter(|(flat, _)| on_even_subgrid(*flat, dims, nodes))
                    .map(|(_, v)| *v),
            );
            error_estimate[k] = (mean[k] - pairwise_sum(&sub) / sub.len() as f64).abs();
        } else {
            error_estimate[k] = f64::NAN;
        }
    }
    Ok(PeriodicMean {
        mean,
        error_estimate,
        nodes,
    })
}

fn on_even_subgrid(mut flat: usize, dims: usize, nodes: usize) -> bool {
    for _ in 0..dims {
        if !(flat % nodes).is_multiple_of(2) {
            return false;
        }
        flat /= nodes;
    }
    true
}
