//! Exact rational sparse linear algebra.
//!
//! Everything here is deterministic: pivoting rules break ties on (row, col),
//! and all containers iterate in sorted order. Matrices are indexed against
//! explicitly ordered basis lists produced by the enumeration modules.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use thiserror::Error;

/// Arbitrary-precision rational scalar. Always kept in lowest terms with a
/// positive denominator.
pub type Rational = BigRational;

/// Sparse vector: strictly increasing column indices, no zero coefficients.
pub type SparseVec = Vec<(usize, Rational)>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinAlgError {
    #[error("dimension mismatch: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("index ({row}, {col}) out of range for {rows}x{cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("malformed matrix JSON: {0}")]
    BadJson(String),
}

pub fn rational(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Serializes as "num/den" in lowest terms, "0/1" for zero.
pub fn rational_to_string(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn rational_from_string(s: &str) -> Result<Rational, LinAlgError> {
    let (n, d) = s
        .split_once('/')
        .ok_or_else(|| LinAlgError::BadJson(format!("rational without '/': {s:?}")))?;
    let n: BigInt = n
        .parse()
        .map_err(|e| LinAlgError::BadJson(format!("bad numerator {n:?}: {e}")))?;
    let d: BigInt = d
        .parse()
        .map_err(|e| LinAlgError::BadJson(format!("bad denominator {d:?}: {e}")))?;
    if d.is_zero() {
        return Err(LinAlgError::BadJson(format!("zero denominator: {s:?}")));
    }
    Ok(Rational::new(n, d))
}

/// Sparse rational matrix with entries kept sorted by (row, col).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), Rational>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            entries: BTreeMap::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sets entry (r, c); inserting zero removes any stored entry.
    pub fn set(&mut self, r: usize, c: usize, v: Rational) -> Result<(), LinAlgError> {
        if r >= self.rows || c >= self.cols {
            return Err(LinAlgError::IndexOutOfRange {
                row: r,
                col: c,
                rows: self.rows,
                cols: self.cols,
            });
        }
        if v.is_zero() {
            self.entries.remove(&(r, c));
        } else {
            self.entries.insert((r, c), v);
        }
        Ok(())
    }

    pub fn get(&self, r: usize, c: usize) -> Rational {
        self.entries.get(&(r, c)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Rational)> {
        self.entries.iter().map(|(&(r, c), v)| (r, c, v))
    }

    pub fn from_columns(rows: usize, columns: &[SparseVec]) -> Self {
        let mut m = SparseMatrix::new(rows, columns.len());
        for (c, col) in columns.iter().enumerate() {
            for (r, v) in col {
                m.set(*r, c, v.clone()).expect("column entry in range");
            }
        }
        m
    }

    fn row_maps(&self) -> Vec<BTreeMap<usize, Rational>> {
        let mut rows: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); self.rows];
        for (&(r, c), v) in &self.entries {
            rows[r].insert(c, v.clone());
        }
        rows
    }

    /// Exact rank by Gaussian elimination. Pivots minimize the Markowitz
    /// fill estimate (row_nnz - 1) * (col_nnz - 1), ties broken on (row, col).
    pub fn rank(&self) -> usize {
        self.eliminate(false).pivots.len()
    }

    /// Basis of the right kernel, one vector per free column, ordered by free
    /// column index. Each vector is scaled so its first nonzero coordinate
    /// is +1.
    pub fn kernel_basis(&self) -> Vec<Vec<Rational>> {
        let elim = self.eliminate(true);
        let mut pivot_of_col: BTreeMap<usize, usize> = BTreeMap::new();
        for &(r, c) in &elim.pivots {
            pivot_of_col.insert(c, r);
        }
        let mut basis = Vec::new();
        for f in 0..self.cols {
            if pivot_of_col.contains_key(&f) {
                continue;
            }
            let mut v = vec![Rational::zero(); self.cols];
            v[f] = Rational::one();
            for (&c, &r) in &pivot_of_col {
                // Row r is normalized: 1 at column c, zero at other pivot cols.
                if let Some(coef) = elim.rows[r].get(&f) {
                    v[c] = -coef.clone();
                }
            }
            let lead = v
                .iter()
                .find(|x| !x.is_zero())
                .cloned()
                .expect("kernel vector is nonzero");
            for x in v.iter_mut() {
                if !x.is_zero() {
                    *x = &*x / &lead;
                }
            }
            basis.push(v);
        }
        basis
    }

    fn eliminate(&self, full: bool) -> Elimination {
        let mut rows = self.row_maps();
        let mut row_active = vec![true; self.rows];
        let mut col_active = vec![true; self.cols];
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        loop {
            // Markowitz scores over the active submatrix.
            let mut col_count = vec![0usize; self.cols];
            for (r, row) in rows.iter().enumerate() {
                if !row_active[r] {
                    continue;
                }
                for (&c, _) in row {
                    if col_active[c] {
                        col_count[c] += 1;
                    }
                }
            }
            let mut best: Option<(usize, usize, usize)> = None; // (score, row, col)
            for (r, row) in rows.iter().enumerate() {
                if !row_active[r] || row.is_empty() {
                    continue;
                }
                let rn = row.keys().filter(|&&c| col_active[c]).count();
                if rn == 0 {
                    continue;
                }
                for (&c, _) in row {
                    if !col_active[c] {
                        continue;
                    }
                    let score = (rn - 1) * (col_count[c] - 1);
                    let cand = (score, r, c);
                    if best.map_or(true, |b| cand < b) {
                        best = Some(cand);
                    }
                }
            }
            let Some((_, pr, pc)) = best else { break };
            pivots.push((pr, pc));
            row_active[pr] = false;
            col_active[pc] = false;
            let pivot_val = if full {
                // Normalize the pivot row so back-substituted rows reduce
                // against a unit pivot.
                let inv = rows[pr][&pc].clone();
                let prow = rows[pr].clone();
                rows[pr] = prow.iter().map(|(&c, v)| (c, v / &inv)).collect();
                Rational::one()
            } else {
                rows[pr][&pc].clone()
            };
            let prow = rows[pr].clone();
            for r in 0..self.rows {
                if r == pr {
                    continue;
                }
                if !full && !row_active[r] {
                    continue;
                }
                let Some(factor) = rows[r].get(&pc).cloned() else {
                    continue;
                };
                let scale = &factor / &pivot_val;
                for (&c, v) in &prow {
                    let delta = v * &scale;
                    let cur = rows[r].remove(&c).unwrap_or_else(Rational::zero);
                    let next = cur - delta;
                    if !next.is_zero() {
                        rows[r].insert(c, next);
                    }
                }
                debug_assert!(!rows[r].contains_key(&pc));
            }
        }
        pivots.sort_unstable();
        Elimination { pivots, rows }
    }

    pub fn matmul(&self, rhs: &SparseMatrix) -> Result<SparseMatrix, LinAlgError> {
        if self.cols != rhs.rows {
            return Err(LinAlgError::DimensionMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: rhs.rows,
                right_cols: rhs.cols,
            });
        }
        let rhs_rows = rhs.row_maps();
        let mut out: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
        for (&(r, k), a) in &self.entries {
            for (&c, b) in &rhs_rows[k] {
                let acc = out.entry((r, c)).or_insert_with(Rational::zero);
                *acc += a * b;
            }
        }
        out.retain(|_, v| !v.is_zero());
        Ok(SparseMatrix {
            rows: self.rows,
            cols: rhs.cols,
            entries: out,
        })
    }

    /// {"rows": R, "cols": C, "entries": [[r, c, "num/den"], ...]} with
    /// entries sorted by (row, col).
    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|(&(r, c), v)| json!([r, c, rational_to_string(v)]))
            .collect();
        json!({"rows": self.rows, "cols": self.cols, "entries": entries})
    }

    pub fn from_json(v: &Value) -> Result<Self, LinAlgError> {
        let bad = |m: &str| LinAlgError::BadJson(m.to_string());
        let rows = v["rows"].as_u64().ok_or_else(|| bad("missing rows"))? as usize;
        let cols = v["cols"].as_u64().ok_or_else(|| bad("missing cols"))? as usize;
        let mut m = SparseMatrix::new(rows, cols);
        for e in v["entries"].as_array().ok_or_else(|| bad("missing entries"))? {
            let t = e.as_array().filter(|t| t.len() == 3).ok_or_else(|| bad("entry is not a triple"))?;
            let r = t[0].as_u64().ok_or_else(|| bad("bad entry row"))? as usize;
            let c = t[1].as_u64().ok_or_else(|| bad("bad entry col"))? as usize;
            let q = rational_from_string(t[2].as_str().ok_or_else(|| bad("bad entry value"))?)?;
            m.set(r, c, q)?;
        }
        Ok(m)
    }
}

struct Elimination {
    pivots: Vec<(usize, usize)>,
    rows: Vec<BTreeMap<usize, Rational>>,
}

/// Integer row echelon accumulator. Rows are primitive integer vectors with
/// strictly increasing column indices; at most one stored row per leading
/// column. Suitable for streaming very large spanning sets: memory is
/// proportional to rank times fill.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    pivots: BTreeMap<usize, Vec<(usize, BigInt)>>,
}

fn normalize_int_row(mut row: Vec<(usize, BigInt)>) -> Vec<(usize, BigInt)> {
    row.retain(|(_, v)| !v.is_zero());
    if row.is_empty() {
        return row;
    }
    let mut g = BigInt::zero();
    for (_, v) in &row {
        g = g.gcd(v);
        if g.is_one() {
            break;
        }
    }
    if row[0].1.is_negative() {
        g = -g;
    }
    if !g.is_one() {
        for (_, v) in row.iter_mut() {
            *v = &*v / &g;
        }
    }
    row
}

/// lead(p) * r - lead(r) * p, assuming r and p share their leading column.
fn combine_rows(r: &[(usize, BigInt)], p: &[(usize, BigInt)]) -> Vec<(usize, BigInt)> {
    debug_assert_eq!(r[0].0, p[0].0);
    let a = &p[0].1;
    let b = &r[0].1;
    let mut out = Vec::with_capacity(r.len() + p.len());
    let (mut i, mut j) = (0, 0);
    while i < r.len() || j < p.len() {
        let take_r = j >= p.len() || (i < r.len() && r[i].0 < p[j].0);
        let take_p = i >= r.len() || (j < p.len() && p[j].0 < r[i].0);
        if take_r {
            out.push((r[i].0, a * &r[i].1));
            i += 1;
        } else if take_p {
            out.push((p[j].0, -(b * &p[j].1)));
            j += 1;
        } else {
            let v = a * &r[i].1 - b * &p[j].1;
            if !v.is_zero() {
                out.push((r[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

impl Echelon {
    pub fn new() -> Self {
        Echelon::default()
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivot_cols(&self) -> impl Iterator<Item = usize> + '_ {
        self.pivots.keys().copied()
    }

    /// Inserts an integer row; returns true if the rank grew.
    pub fn insert_int(&mut self, row: Vec<(usize, BigInt)>) -> bool {
        let mut row = normalize_int_row(row);
        loop {
            let Some(&(lead, _)) = row.first() else {
                return false;
            };
            match self.pivots.get(&lead) {
                Some(p) => {
                    row = normalize_int_row(combine_rows(&row, p));
                }
                None => {
                    self.pivots.insert(lead, row);
                    return true;
                }
            }
        }
    }

    /// Inserts a rational row (denominators are cleared first).
    pub fn insert(&mut self, row: &[(usize, Rational)]) -> bool {
        let mut lcm = BigInt::one();
        for (_, v) in row {
            lcm = lcm.lcm(v.denom());
        }
        let int_row: Vec<(usize, BigInt)> = row
            .iter()
            .map(|(c, v)| (*c, v.numer() * (&lcm / v.denom())))
            .collect();
        self.insert_int(int_row)
    }

    /// Remainder of v modulo the row span, supported on non-pivot columns
    /// only. Linear in v, kills the span, fixes vectors already supported on
    /// free columns.
    pub fn reduce(&self, v: &[(usize, Rational)]) -> SparseVec {
        let mut work: BTreeMap<usize, Rational> = v
            .iter()
            .filter(|(_, x)| !x.is_zero())
            .map(|(c, x)| (*c, x.clone()))
            .collect();
        loop {
            let hit = work
                .iter()
                .find(|(c, _)| self.pivots.contains_key(c))
                .map(|(&c, _)| c);
            let Some(c) = hit else { break };
            let coef = work.remove(&c).expect("entry present");
            let prow = &self.pivots[&c];
            let scale = coef / Rational::from(prow[0].1.clone());
            for (pc, pv) in &prow[1..] {
                let cur = work.remove(pc).unwrap_or_else(Rational::zero);
                let next = cur - &scale * Rational::from(pv.clone());
                if !next.is_zero() {
                    work.insert(*pc, next);
                }
            }
        }
        work.into_iter().collect()
    }
}

/// Quotient of an ambient coordinate space by the span of a set of vectors.
/// The classes of the standard basis vectors at the non-pivot (selected)
/// indices form a basis of the quotient.
#[derive(Clone, Debug)]
pub struct QuotientBasis {
    ambient_dim: usize,
    echelon: Echelon,
    selected: Vec<usize>,
    position: BTreeMap<usize, usize>,
}

impl QuotientBasis {
    pub fn from_echelon(ambient_dim: usize, echelon: Echelon) -> Self {
        let pivot_cols: Vec<usize> = echelon.pivot_cols().collect();
        debug_assert!(pivot_cols.iter().all(|&c| c < ambient_dim));
        let mut selected = Vec::with_capacity(ambient_dim - pivot_cols.len());
        let mut it = pivot_cols.iter().peekable();
        for c in 0..ambient_dim {
            if it.peek() == Some(&&c) {
                it.next();
            } else {
                selected.push(c);
            }
        }
        let position = selected.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        QuotientBasis {
            ambient_dim,
            echelon,
            selected,
            position,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.selected.len()
    }

    /// Ambient indices whose classes form the quotient basis, ascending.
    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn spanner_rank(&self) -> usize {
        self.echelon.rank()
    }

    /// Coordinates of the class of an ambient vector, sparse over positions
    /// into `selected()`.
    pub fn project_sparse(&self, v: &[(usize, Rational)]) -> SparseVec {
        self.echelon
            .reduce(v)
            .into_iter()
            .map(|(c, x)| (self.position[&c], x))
            .collect()
    }

    pub fn project(&self, v: &[(usize, Rational)]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.selected.len()];
        for (i, x) in self.project_sparse(v) {
            out[i] = x;
        }
        out
    }
}

/// Builds the quotient of an ambient_dim-dimensional space by the span of
/// the given vectors. Spanners are inserted in the order given; the result
/// does not depend on that order, only on the span.
pub fn quotient_basis<I>(ambient_dim: usize, spanners: I) -> QuotientBasis
where
    I: IntoIterator,
    I::Item: AsRef<[(usize, Rational)]>,
{
    let mut ech = Echelon::new();
    for s in spanners {
        ech.insert(s.as_ref());
    }
    QuotientBasis::from_echelon(ambient_dim, ech)
}
