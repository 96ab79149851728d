//! Exhaustive simplex-grid oracles for capacity and secrecy capacity.
//!
//! Deliberately shares no code with the solvers: mutual information is
//! computed from joint entropies, and the maximum is a plain scan.

use serde::Serialize;

use crate::channels::{ChannelTriple, TransitionMatrix};
use crate::error::{Error, Result};

pub const MAX_INPUTS: usize = 4;

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub value: f64,
    pub argmax: Vec<f64>,
    /// Largest change of the objective between grid neighbours; bounds how
    /// far the grid maximum can sit below the true maximum.
    pub resolution: f64,
    pub grid_points: usize,
}

fn h(dist: &[f64]) -> f64 {
    dist.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

/// `H(X) + H(Y) - H(X,Y)` for input `p` through `ch`.
fn mi_by_entropies(p: &[f64], ch: &TransitionMatrix) -> f64 {
    let mut joint = Vec::with_capacity(p.len() * ch.outputs());
    let mut out = vec![0.0; ch.outputs()];
    for (x, &px) in p.iter().enumerate() {
        for y in 0..ch.outputs() {
            let m = px * ch.get(x, y);
            joint.push(m);
            out[y] += m;
        }
    }
    h(p) + h(&out) - h(&joint)
}

fn objective(p: &[f64], triple: &ChannelTriple) -> f64 {
    mi_by_entropies(p, triple.main()) - mi_by_entropies(p, triple.cascade())
}

/// All compositions of `total` into `parts` nonnegative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    (0..=total)
        .flat_map(|first| {
            compositions(total - first, parts - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// Maximum of `I(X;Y) - I(X;Z)` over the simplex grid with spacing
/// `grid_step` (rounded to `1 / round(1 / grid_step)`).
pub fn secrecy_capacity_oracle(triple: &ChannelTriple, grid_step: f64) -> Result<OracleResult> {
    grid_max(triple.main().inputs(), grid_step, |p| objective(p, triple))
}

/// Maximum of `I(X;Y)` over the simplex grid; the capacity of `ch` up to the
/// reported resolution.
pub fn capacity_oracle(ch: &TransitionMatrix, grid_step: f64) -> Result<OracleResult> {
    grid_max(ch.inputs(), grid_step, |p| mi_by_entropies(p, ch))
}

fn grid_max(inputs: usize, grid_step: f64, f: impl Fn(&[f64]) -> f64) -> Result<OracleResult> {
    if inputs > MAX_INPUTS {
        return Err(Error::invalid(format!(
            "grid oracle supports at most {MAX_INPUTS} inputs, got {inputs}"
        )));
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::invalid(format!("grid step must lie in (0, 1], got {grid_step}")));
    }
    let total = (1.0 / grid_step).round() as usize;
    let grid = compositions(total, inputs);
    let values: Vec<f64> = grid
        .iter()
        .map(|c| {
            let p: Vec<f64> = c.iter().map(|&k| k as f64 / total as f64).collect();
            f(&p)
        })
        .collect();

    let index: std::collections::HashMap<&[usize], usize> =
        grid.iter().enumerate().map(|(i, c)| (c.as_slice(), i)).collect();
    let mut resolution: f64 = 0.0;
    let mut neighbour = vec![0usize; inputs];
    for (i, c) in grid.iter().enumerate() {
        for from in 0..inputs {
            if c[from] == 0 {
                continue;
            }
            for to in 0..inputs {
                if to == from {
                    continue;
                }
                neighbour.copy_from_slice(c);
                neighbour[from] -= 1;
                neighbour[to] += 1;
                let j = index[neighbour.as_slice()];
                resolution = resolution.max((values[i] - values[j]).abs());
            }
        }
    }

    let (best, &value) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("grid is nonempty");
    Ok(OracleResult {
        value,
        argmax: grid[best].iter().map(|&k| k as f64 / total as f64).collect(),
        resolution,
        grid_points: grid.len(),
    })
}
