//! Linear algebra over prime fields GF(p): systems of equations, Gaussian
//! elimination with a fixed pivot rule, and recognition of simple affine
//! modules inside finite algebras.

mod module;

pub use module::{
    compile_binary_constraint, recognize_affine_module, AffineCoordinatization, Recognition,
};

use crate::error::{Error, Result};
use std::fmt::Write as _;

/// A prime modulus, checked at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p < 2 || (2..p).take_while(|d| d * d <= p).any(|d| p % d == 0) {
            return Err(Error::Precondition(format!("{p} is not prime")));
        }
        Ok(PrimeField { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.p
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.p - b % self.p) % self.p
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        (a * b) % self.p
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        (self.p - a % self.p) % self.p
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(&self, a: u64) -> u64 {
        assert!(a % self.p != 0, "inverse of zero");
        self.pow(a, self.p - 2)
    }

    fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        base %= self.p;
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }
}

/// A system of linear equations over GF(p): rows of coefficients with a
/// right-hand constant, all reduced mod p.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSystem {
    pub field: PrimeField,
    pub num_vars: usize,
    pub rows: Vec<(Vec<u64>, u64)>,
}

impl LinearSystem {
    pub fn new(field: PrimeField, num_vars: usize, rows: Vec<(Vec<u64>, u64)>) -> Result<Self> {
        let p = field.modulus();
        for (coeffs, c) in &rows {
            if coeffs.len() != num_vars {
                return Err(Error::Precondition(format!(
                    "row has {} coefficients, expected {num_vars}",
                    coeffs.len()
                )));
            }
            if coeffs.iter().any(|&a| a >= p) || *c >= p {
                return Err(Error::Precondition("entry not reduced mod p".into()));
            }
        }
        Ok(LinearSystem { field, num_vars, rows })
    }

    pub fn empty(field: PrimeField, num_vars: usize) -> Self {
        LinearSystem { field, num_vars, rows: Vec::new() }
    }

    pub fn push_row(&mut self, coeffs: Vec<u64>, constant: u64) {
        debug_assert_eq!(coeffs.len(), self.num_vars);
        self.rows.push((coeffs, constant));
    }

    /// The system extended by equations pinning single variables to values.
    pub fn with_fixed(&self, fixings: &[(usize, u64)]) -> Result<LinearSystem> {
        let mut out = self.clone();
        for &(var, value) in fixings {
            if var >= self.num_vars {
                return Err(Error::Precondition(format!(
                    "variable index {var} out of range (num_vars {})",
                    self.num_vars
                )));
            }
            let mut coeffs = vec![0u64; self.num_vars];
            coeffs[var] = 1;
            out.push_row(coeffs, value % self.field.modulus());
        }
        Ok(out)
    }

    /// Canonical text form: one row per line, coefficients then `| c`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (coeffs, c) in &self.rows {
            for (i, a) in coeffs.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{a}");
            }
            if coeffs.is_empty() {
                out.push('0');
            }
            let _ = writeln!(out, " | {c}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemStatus {
    Sat,
    Unsat,
}

/// The solution space of a linear system: a particular solution plus a
/// basis of the homogeneous kernel. When satisfiable the solution count is
/// `p^(num_vars - rank)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionSpace {
    pub status: SystemStatus,
    pub particular: Option<Vec<u64>>,
    pub basis: Vec<Vec<u64>>,
    pub rank: usize,
}

impl SolutionSpace {
    pub fn is_sat(&self) -> bool {
        self.status == SystemStatus::Sat
    }

    /// `p^(num_vars - rank)` when satisfiable, 0 otherwise.
    pub fn solution_count(&self, field: PrimeField, num_vars: usize) -> u128 {
        match self.status {
            SystemStatus::Unsat => 0,
            SystemStatus::Sat => {
                (0..num_vars - self.rank).fold(1u128, |acc, _| acc * field.modulus() as u128)
            }
        }
    }
}

/// Gaussian elimination with a fixed pivot rule (first nonzero column,
/// smallest row index), giving deterministic output for a given row order.
pub fn solve_system(sys: &LinearSystem) -> SolutionSpace {
    let p = sys.field;
    let n = sys.num_vars;
    let mut mat: Vec<(Vec<u64>, u64)> = sys.rows.clone();
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut row = 0usize;

    for col in 0..n {
        let Some(pivot) = (row..mat.len()).find(|&r| mat[r].0[col] != 0) else {
            continue;
        };
        mat.swap(row, pivot);
        let inv = p.inv(mat[row].0[col]);
        for c in col..n {
            mat[row].0[c] = p.mul(mat[row].0[c], inv);
        }
        mat[row].1 = p.mul(mat[row].1, inv);
        for r in 0..mat.len() {
            if r != row && mat[r].0[col] != 0 {
                let factor = mat[r].0[col];
                for c in col..n {
                    let delta = p.mul(factor, mat[row].0[c]);
                    mat[r].0[c] = p.sub(mat[r].0[c], delta);
                }
                let delta = p.mul(factor, mat[row].1);
                mat[r].1 = p.sub(mat[r].1, delta);
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == mat.len() {
            break;
        }
    }

    let rank = row;
    if mat[rank..].iter().any(|(_, c)| *c != 0) {
        return SolutionSpace { status: SystemStatus::Unsat, particular: None, basis: Vec::new(), rank };
    }

    // particular solution: free variables set to 0
    let mut particular = vec![0u64; n];
    for (r, &col) in pivot_cols.iter().enumerate() {
        particular[col] = mat[r].1;
    }

    // kernel basis: one vector per free column
    let mut basis = Vec::new();
    let mut is_pivot = vec![false; n];
    for &c in &pivot_cols {
        is_pivot[c] = true;
    }
    for free in (0..n).filter(|&c| !is_pivot[c]) {
        let mut vec_ = vec![0u64; n];
        vec_[free] = 1;
        for (r, &col) in pivot_cols.iter().enumerate() {
            vec_[col] = p.neg(mat[r].0[free]);
        }
        basis.push(vec_);
    }

    SolutionSpace { status: SystemStatus::Sat, particular: Some(particular), basis, rank }
}

/// True iff the system augmented with `x_var = value` stays satisfiable.
pub fn block_in_solution(sys: &LinearSystem, var: usize, value: u64) -> Result<bool> {
    let augmented = sys.with_fixed(&[(var, value)])?;
    Ok(solve_system(&augmented).is_sat())
}
