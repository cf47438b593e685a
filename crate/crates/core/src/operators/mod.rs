//! Summation-by-parts operator sets on uniform 1D grids.

mod bounded;
mod central;
mod conformance;
mod fourier;
mod stencil;
mod upwind;

pub use bounded::make_bounded_fd_sbp;
pub use central::make_central_fd;
pub use conformance::{sbp_conformance, sbp_conformance_seeded, ConformanceReport};
pub use fourier::{make_fourier, SpectralOp};
pub use upwind::make_upwind_fd;

use crate::error::{check_len, invalid, Result};
use crate::linalg::{compensated_sum, CsrMatrix};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub x_left: f64,
    pub x_right: f64,
    pub n_nodes: usize,
    pub periodic: bool,
    pub nodes: Vec<f64>,
    pub dx: f64,
}

impl Grid {
    pub fn periodic(n: usize, x_left: f64, x_right: f64) -> Result<Self> {
        Self::check(n, x_left, x_right)?;
        let dx = (x_right - x_left) / n as f64;
        let nodes = (0..n).map(|i| x_left + i as f64 * dx).collect();
        Ok(Self { x_left, x_right, n_nodes: n, periodic: true, nodes, dx })
    }

    pub fn bounded(n: usize, x_left: f64, x_right: f64) -> Result<Self> {
        Self::check(n, x_left, x_right)?;
        let dx = (x_right - x_left) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| x_left + i as f64 * dx).collect();
        nodes[n - 1] = x_right;
        Ok(Self { x_left, x_right, n_nodes: n, periodic: false, nodes, dx })
    }

    fn check(n: usize, x_left: f64, x_right: f64) -> Result<()> {
        if n < 2 {
            return invalid(format!("grid needs at least 2 nodes, got {n}"));
        }
        if !(x_left.is_finite() && x_right.is_finite() && x_right > x_left) {
            return invalid(format!("invalid domain [{x_left}, {x_right}]"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_nodes
    }

    pub fn is_empty(&self) -> bool {
        self.n_nodes == 0
    }

    pub fn length(&self) -> f64 {
        self.x_right - self.x_left
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Fourier,
    CentralFd,
    BoundedFdSbp,
    UpwindFd,
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Fourier => "fourier",
            Self::CentralFd => "central_fd",
            Self::BoundedFdSbp => "bounded_fd_sbp",
            Self::UpwindFd => "upwind_fd",
        })
    }
}

/// A real linear map `R^n -> R^n`, either stored sparse or applied through the FFT.
#[derive(Debug, Clone)]
pub enum LinearOp {
    Sparse(CsrMatrix),
    Spectral(SpectralOp),
}

impl LinearOp {
    pub fn dim(&self) -> usize {
        match self {
            Self::Sparse(a) => a.nrows(),
            Self::Spectral(s) => s.dim(),
        }
    }

    /// `y = A x`
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Self::Sparse(a) => a.matvec(x, y),
            Self::Spectral(s) => s.apply_into(x, y),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        y
    }

    /// Applies the operator to two vectors at once; spectral operators share one complex transform.
    pub fn apply_pair_into(&self, v: &[f64], w: &[f64], yv: &mut [f64], yw: &mut [f64]) {
        match self {
            Self::Sparse(a) => {
                a.matvec(v, yv);
                a.matvec(w, yw);
            }
            Self::Spectral(s) => s.apply_pair_into(v, w, yv, yw),
        }
    }

    pub fn as_sparse(&self) -> Option<&CsrMatrix> {
        match self {
            Self::Sparse(a) => Some(a),
            Self::Spectral(_) => None,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Self::Sparse(a) => a.to_dense(),
            Self::Spectral(s) => s.to_dense(),
        }
    }

    /// Sparse form, materializing spectral operators column by column.
    pub fn to_csr(&self) -> CsrMatrix {
        match self {
            Self::Sparse(a) => a.clone(),
            Self::Spectral(s) => CsrMatrix::from_dense(&s.to_dense()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UpwindPair<'a> {
    pub plus: &'a LinearOp,
    pub minus: &'a LinearOp,
}

#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub grid: Grid,
    pub mass_diag: Vec<f64>,
    pub d1: LinearOp,
    pub d2: LinearOp,
    pub a2: LinearOp,
    pub t_left: Vec<f64>,
    pub t_right: Vec<f64>,
    pub d_left: Vec<f64>,
    pub d_right: Vec<f64>,
    pub d_plus: Option<LinearOp>,
    pub d_minus: Option<LinearOp>,
    /// Interior order of accuracy; 0 for spectral operators.
    pub accuracy_order: usize,
    pub kind: OperatorKind,
    /// `D2 - M^{-1} t_R d_R^T + M^{-1} t_L d_L^T`, which equals `-M^{-1} A2`.
    dtilde: LinearOp,
}

impl OperatorSet {
    pub fn n(&self) -> usize {
        self.grid.n_nodes
    }

    pub fn is_periodic(&self) -> bool {
        self.grid.periodic
    }

    pub fn upwind(&self) -> Option<UpwindPair<'_>> {
        match (&self.d_plus, &self.d_minus) {
            (Some(plus), Some(minus)) => Some(UpwindPair { plus, minus }),
            _ => None,
        }
    }

    /// The second-derivative operator with the Neumann boundary corrections folded in.
    pub fn dtilde(&self) -> &LinearOp {
        &self.dtilde
    }

    pub fn dtilde_apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_len("dtilde_apply", z.len(), self.n())?;
        Ok(self.dtilde.apply(z))
    }

    /// `x^T M y`
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        compensated_sum(self.mass_diag.iter().zip(x).zip(y).map(|((m, a), b)| m * a * b))
    }

    pub fn norm_sq(&self, x: &[f64]) -> f64 {
        compensated_sum(self.mass_diag.iter().zip(x).map(|(m, a)| m * a * a))
    }

    /// Writes the dense form of one operator as CSV, for debugging.
    pub fn export_dense_csv(&self, which: &str, path: &Path) -> Result<()> {
        let dense = match which {
            "d1" => self.d1.to_dense(),
            "d2" => self.d2.to_dense(),
            "a2" => self.a2.to_dense(),
            "dtilde" => self.dtilde.to_dense(),
            "d_plus" | "d_minus" => {
                let op = if which == "d_plus" { &self.d_plus } else { &self.d_minus };
                match op {
                    Some(op) => op.to_dense(),
                    None => return invalid(format!("operator set has no {which}")),
                }
            }
            "mass" => DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.mass_diag.clone())),
            _ => return invalid(format!("unknown operator '{which}'")),
        };
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for i in 0..dense.nrows() {
            let row: Vec<String> = (0..dense.ncols()).map(|j| format!("{:.17e}", dense[(i, j)])).collect();
            writeln!(f, "{}", row.join(","))?;
        }
        Ok(())
    }

    fn assemble(parts: Parts) -> Self {
        let Parts { grid, mass_diag, d1, d2, a2, t_left, t_right, d_left, d_right, d_plus, d_minus, accuracy_order, kind } =
            parts;
        let dtilde = if grid.periodic {
            d2.clone()
        } else {
            let d2s = d2.as_sparse().expect("bounded operators are sparse");
            let n = grid.n_nodes;
            let mut t: Vec<(usize, usize, f64)> = d2s.triplets().collect();
            for j in 0..n {
                if d_right[j] != 0.0 {
                    t.push((n - 1, j, -t_right[n - 1] * d_right[j] / mass_diag[n - 1]));
                }
                if d_left[j] != 0.0 {
                    t.push((0, j, t_left[0] * d_left[j] / mass_diag[0]));
                }
            }
            LinearOp::Sparse(CsrMatrix::from_triplets(n, n, &t))
        };
        Self { grid, mass_diag, d1, d2, a2, t_left, t_right, d_left, d_right, d_plus, d_minus, accuracy_order, kind, dtilde }
    }
}

struct Parts {
    grid: Grid,
    mass_diag: Vec<f64>,
    d1: LinearOp,
    d2: LinearOp,
    a2: LinearOp,
    t_left: Vec<f64>,
    t_right: Vec<f64>,
    d_left: Vec<f64>,
    d_right: Vec<f64>,
    d_plus: Option<LinearOp>,
    d_minus: Option<LinearOp>,
    accuracy_order: usize,
    kind: OperatorKind,
}

/// Builds an operator set by kind; `order` is ignored for Fourier.
pub fn make_operator(kind: OperatorKind, order: usize, n: usize, x_left: f64, x_right: f64) -> Result<OperatorSet> {
    match kind {
        OperatorKind::Fourier => make_fourier(n, x_left, x_right),
        OperatorKind::CentralFd => make_central_fd(order, n, x_left, x_right),
        OperatorKind::BoundedFdSbp => make_bounded_fd_sbp(order, n, x_left, x_right),
        OperatorKind::UpwindFd => make_upwind_fd(order, n, x_left, x_right),
    }
}
