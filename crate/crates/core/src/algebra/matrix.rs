//! Rectangular matrices of rational functions.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::ratfun::RatFun;
use super::vars::{VarId, VarSpace};
use crate::error::{Error, Result};

/// Immutable-dimension matrix with `RatFun` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatRF {
    rows: usize,
    cols: usize,
    data: Vec<RatFun>,
}

impl MatRF {
    pub fn new(rows: usize, cols: usize, data: Vec<RatFun>) -> Result<MatRF> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(MatRF { rows, cols, data })
    }

    pub fn zero(space: &Arc<VarSpace>, rows: usize, cols: usize) -> MatRF {
        MatRF {
            rows,
            cols,
            data: vec![RatFun::zero(space); rows * cols],
        }
    }

    pub fn identity(space: &Arc<VarSpace>, n: usize) -> MatRF {
        let mut m = MatRF::zero(space, n, n);
        for i in 0..n {
            *m.entry_mut(i, i) = RatFun::one(space);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, r: usize, c: usize) -> &RatFun {
        &self.data[r * self.cols + c]
    }

    pub fn entry_mut(&mut self, r: usize, c: usize) -> &mut RatFun {
        &mut self.data[r * self.cols + c]
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), &RatFun)> {
        let cols = self.cols;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, f)| ((i / cols, i % cols), f))
    }

    pub fn map(&self, f: impl Fn(&RatFun) -> RatFun) -> MatRF {
        MatRF {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn try_map(&self, f: impl Fn(&RatFun) -> Result<RatFun>) -> Result<MatRF> {
        let data = self.data.iter().map(f).collect::<Result<Vec<_>>>()?;
        MatRF::new(self.rows, self.cols, data)
    }

    pub fn add(&self, other: &MatRF) -> MatRF {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        MatRF {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &MatRF) -> MatRF {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        MatRF {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn neg(&self) -> MatRF {
        self.map(|f| f.neg())
    }

    pub fn mul(&self, other: &MatRF) -> MatRF {
        assert_eq!(self.cols, other.rows, "matrix product shape");
        let space = self.data[0].space().clone();
        let mut out = MatRF::zero(&space, self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = RatFun::zero(&space);
                for k in 0..self.cols {
                    acc = acc.add(&self.entry(r, k).mul(other.entry(k, c)));
                }
                *out.entry_mut(r, c) = acc;
            }
        }
        out
    }

    pub fn scale_rf(&self, f: &RatFun) -> MatRF {
        self.map(|e| e.mul(f))
    }

    /// Commutator `[self, other] = self*other - other*self`.
    pub fn bracket(&self, other: &MatRF) -> MatRF {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn trace(&self) -> RatFun {
        assert_eq!(self.rows, self.cols);
        let mut acc = RatFun::zero(self.data[0].space());
        for i in 0..self.rows {
            acc = acc.add(self.entry(i, i));
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|f| f.is_zero())
    }

    /// First nonzero entry, if any.
    pub fn first_nonzero(&self) -> Option<(usize, usize, &RatFun)> {
        self.entries()
            .find(|(_, f)| !f.is_zero())
            .map(|((r, c), f)| (r, c, f))
    }

    pub fn diff(&self, v: VarId) -> MatRF {
        self.map(|f| f.diff(v))
    }

    /// Determinant by cofactor expansion (sizes here are at most 3 or 4).
    pub fn det(&self) -> RatFun {
        assert_eq!(self.rows, self.cols);
        let space = self.data[0].space().clone();
        match self.rows {
            1 => self.entry(0, 0).clone(),
            2 => self
                .entry(0, 0)
                .mul(self.entry(1, 1))
                .sub(&self.entry(0, 1).mul(self.entry(1, 0))),
            n => {
                let mut acc = RatFun::zero(&space);
                for c in 0..n {
                    let m = self.minor(0, c).det();
                    let t = self.entry(0, c).mul(&m);
                    acc = if c % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
                }
                acc
            }
        }
    }

    fn minor(&self, row: usize, col: usize) -> MatRF {
        let data = self
            .entries()
            .filter(|((r, c), _)| *r != row && *c != col)
            .map(|(_, f)| f.clone())
            .collect();
        MatRF {
            rows: self.rows - 1,
            cols: self.cols - 1,
            data,
        }
    }

    /// Inverse via the adjugate; errors when the determinant is zero.
    pub fn inverse(&self) -> Result<MatRF> {
        assert_eq!(self.rows, self.cols);
        let d = self.det();
        if d.is_zero() {
            return Err(Error::Invalid("matrix is singular".into()));
        }
        let n = self.rows;
        let space = self.data[0].space().clone();
        let mut adj = MatRF::zero(&space, n, n);
        for r in 0..n {
            for c in 0..n {
                let mut cof = if n == 1 {
                    RatFun::one(&space)
                } else {
                    self.minor(r, c).det()
                };
                if (r + c) % 2 == 1 {
                    cof = cof.neg();
                }
                *adj.entry_mut(c, r) = cof; // transpose
            }
        }
        adj.try_map(|e| e.div(&d))
    }

    pub fn lift(&self, space: &Arc<VarSpace>) -> MatRF {
        self.map(|f| f.clone().lift(space))
    }

    pub fn eval_map(&self, values: &HashMap<VarId, Complex64>) -> Result<Vec<Complex64>> {
        self.data.iter().map(|f| f.eval_map(values)).collect()
    }
}

impl fmt::Display for MatRF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            write!(f, "[")?;
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.entry(r, c))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}
