//! Small exact linear algebra: rational elimination, integer lattice bases,
//! and dense complex solves for the numerical layer.
//!
//! Everything here is written for desk-scale inputs (n ≤ 4, m ≤ 12); no
//! attention is paid to asymptotics.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::scalar::{C64, Rat};

pub type QVec = Vec<Rat>;
pub type QMat = Vec<Vec<Rat>>;
pub type ZVec = Vec<BigInt>;
pub type ZMat = Vec<Vec<BigInt>>;

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dot_iz(a: &[i64], b: &[Rat]) -> Rat {
    a.iter()
        .zip(b)
        .map(|(x, y)| Rat::from_integer(BigInt::from(*x)) * y)
        .sum()
}

/// Reduced row echelon form; returns pivot column indices.
pub fn rref(mat: &mut QMat) -> Vec<usize> {
    let rows = mat.len();
    let cols = if rows == 0 { 0 } else { mat[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !mat[i][c].is_zero()) else {
            continue;
        };
        mat.swap(r, p);
        let inv = Rat::one() / mat[r][c].clone();
        for x in mat[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i != r && !mat[i][c].is_zero() {
                let f = mat[i][c].clone();
                for j in 0..cols {
                    let sub = &mat[r][j] * &f;
                    mat[i][j] = &mat[i][j] - &sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    pivots
}

pub fn rank(mat: &QMat) -> usize {
    let mut m = mat.clone();
    rref(&mut m).len()
}

/// Solves the square system A x = b exactly; `None` when A is singular.
pub fn solve_square(a: &QMat, b: &[Rat]) -> Option<QVec> {
    let n = a.len();
    let mut aug: QMat = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() != n || pivots.iter().any(|&c| c >= n) {
        return None;
    }
    Some((0..n).map(|i| aug[i][n].clone()).collect())
}

pub fn det(a: &QMat) -> Rat {
    let n = a.len();
    let mut m = a.clone();
    let mut d = Rat::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return Rat::zero();
        };
        if p != c {
            m.swap(c, p);
            d = -d;
        }
        d = &d * &m[c][c];
        let inv = Rat::one() / m[c][c].clone();
        for i in (c + 1)..n {
            if m[i][c].is_zero() {
                continue;
            }
            let f = &m[i][c] * &inv;
            for j in c..n {
                let sub = &m[c][j] * &f;
                m[i][j] = &m[i][j] - &sub;
            }
        }
    }
    d
}

/// Basis of the right null space {x : A x = 0}.
pub fn nullspace(a: &QMat) -> Vec<QVec> {
    let cols = if a.is_empty() { 0 } else { a[0].len() };
    let mut m = a.clone();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let mut basis = Vec::new();
    for &f in &free {
        let mut v = vec![Rat::zero(); cols];
        v[f] = Rat::one();
        for (r, &p) in pivots.iter().enumerate() {
            v[p] = -m[r][f].clone();
        }
        basis.push(v);
    }
    basis
}

pub fn inverse(a: &QMat) -> Option<QMat> {
    let n = a.len();
    let mut aug: QMat = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            for j in 0..n {
                r.push(if i == j { Rat::one() } else { Rat::zero() });
            }
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() != n || pivots.iter().any(|&c| c >= n) {
        return None;
    }
    Some(
        (0..n)
            .map(|i| aug[i][n..].to_vec())
            .collect(),
    )
}

/// Affine hull of a point set: a base point and independent direction
/// vectors spanning the hull.
pub fn affine_hull(points: &[QVec]) -> (QVec, Vec<QVec>) {
    assert!(!points.is_empty());
    let base = points[0].clone();
    let dirs: QMat = points[1..]
        .iter()
        .map(|p| p.iter().zip(&base).map(|(a, b)| a - b).collect())
        .collect();
    if dirs.is_empty() {
        return (base, Vec::new());
    }
    let mut m = dirs.clone();
    let pivots = rref(&mut m);
    // pick original direction rows that are independent
    let mut chosen: Vec<QVec> = Vec::new();
    for d in dirs {
        let mut probe: QMat = chosen.clone();
        probe.push(d.clone());
        if rank(&probe) > chosen.len() {
            chosen.push(d);
            if chosen.len() == pivots.len() {
                break;
            }
        }
    }
    (base, chosen)
}

// ---------------------------------------------------------------------------
// integer lattices
// ---------------------------------------------------------------------------

fn zmat_from_i64(rows: &[Vec<i64>]) -> ZMat {
    rows.iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect()
}

/// Column-style Hermite reduction of A, tracking unimodular column
/// operations: returns (H, U) with H = A·U. Kernel columns of H are zero.
fn column_hermite(a: &ZMat) -> (ZMat, ZMat) {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut h = a.to_vec();
    let mut u: ZMat = (0..cols)
        .map(|i| {
            (0..cols)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect();
    let mut pivot_row = 0;
    let mut pivot_col = 0;
    while pivot_row < rows && pivot_col < cols {
        // euclidean reduction across columns pivot_col..cols on pivot_row
        loop {
            let mut best: Option<usize> = None;
            for c in pivot_col..cols {
                if !h[pivot_row][c].is_zero() {
                    best = match best {
                        None => Some(c),
                        Some(b) => {
                            if h[pivot_row][c].magnitude() < h[pivot_row][b].magnitude() {
                                Some(c)
                            } else {
                                Some(b)
                            }
                        }
                    };
                }
            }
            let Some(b) = best else {
                break;
            };
            swap_cols(&mut h, &mut u, pivot_col, b);
            let mut done = true;
            for c in (pivot_col + 1)..cols {
                if h[pivot_row][c].is_zero() {
                    continue;
                }
                let q = floor_div(&h[pivot_row][c], &h[pivot_row][pivot_col]);
                if !q.is_zero() {
                    sub_col(&mut h, &mut u, c, pivot_col, &q);
                }
                if !h[pivot_row][c].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if !h[pivot_row][pivot_col].is_zero() {
            if h[pivot_row][pivot_col].is_negative() {
                neg_col(&mut h, &mut u, pivot_col);
            }
            pivot_col += 1;
        }
        pivot_row += 1;
    }
    (h, u)
}

fn swap_cols(h: &mut ZMat, u: &mut ZMat, a: usize, b: usize) {
    if a == b {
        return;
    }
    for row in h.iter_mut() {
        row.swap(a, b);
    }
    for row in u.iter_mut() {
        row.swap(a, b);
    }
}

fn neg_col(h: &mut ZMat, u: &mut ZMat, c: usize) {
    for row in h.iter_mut() {
        row[c] = -row[c].clone();
    }
    for row in u.iter_mut() {
        row[c] = -row[c].clone();
    }
}

fn sub_col(h: &mut ZMat, u: &mut ZMat, target: usize, source: usize, q: &BigInt) {
    for row in h.iter_mut() {
        let s = &row[source] * q;
        row[target] = &row[target] - &s;
    }
    for row in u.iter_mut() {
        let s = &row[source] * q;
        row[target] = &row[target] - &s;
    }
}

fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    // rounded-toward-nearest quotient keeps entries small enough here
    let (q, r) = (a / b, a % b);
    if (&r * 2i32).magnitude() > b.magnitude() {
        if (r.is_negative()) == (b.is_negative()) {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

/// Basis of the integer kernel {x ∈ ℤⁿ : A x = 0} for an integer matrix
/// given by rows of length n.
pub fn integer_kernel(a: &ZMat) -> Vec<ZVec> {
    let cols = if a.is_empty() { 0 } else { a[0].len() };
    if a.is_empty() {
        // whole lattice
        return (0..cols)
            .map(|i| {
                (0..cols)
                    .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                    .collect()
            })
            .collect();
    }
    let (h, u) = column_hermite(a);
    let mut kernel = Vec::new();
    for c in 0..cols {
        if h.iter().all(|row| row[c].is_zero()) {
            kernel.push((0..cols).map(|r| u[r][c].clone()).collect());
        }
    }
    kernel
}

/// Basis (rows) of the saturation of the lattice spanned by the given
/// integer rows: span_ℚ(rows) ∩ ℤⁿ.
pub fn saturation(rows: &[Vec<i64>]) -> Vec<ZVec> {
    if rows.is_empty() {
        return Vec::new();
    }
    let n = rows[0].len();
    let qmat: QMat = rows
        .iter()
        .map(|r| r.iter().map(|&x| Rat::from_integer(BigInt::from(x))).collect())
        .collect();
    // right kernel of the row matrix = orthogonal complement of the span
    let null = nullspace(&qmat);
    if null.is_empty() {
        // full span: saturation is ℤⁿ
        return (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                    .collect()
            })
            .collect();
    }
    // clear denominators of each kernel vector
    let cleared: ZMat = null
        .iter()
        .map(|v| {
            let lcm = v
                .iter()
                .fold(BigInt::one(), |acc, q| lcm_big(&acc, q.denom()));
            v.iter()
                .map(|q| q.numer() * (&lcm / q.denom()))
                .collect()
        })
        .collect();
    integer_kernel(&cleared)
}

fn lcm_big(a: &BigInt, b: &BigInt) -> BigInt {
    if a.is_zero() || b.is_zero() {
        return BigInt::zero();
    }
    let mut x = a.magnitude().clone();
    let mut y = b.magnitude().clone();
    while !y.is_zero() {
        let r = &x % &y;
        x = y;
        y = r;
    }
    BigInt::from((a.magnitude() * b.magnitude()) / x)
}

/// Smith normal form with transforms: returns (s, vinv) where s = U·A·V is
/// diagonal (padded with zeros) and `vinv` is V⁻¹. Row transforms are not
/// tracked; callers here only need V⁻¹.
pub fn snf_vinv(a: &ZMat) -> (ZMat, ZMat) {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut s = a.to_vec();
    let mut vinv: ZMat = (0..cols)
        .map(|i| {
            (0..cols)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect();
    let mut t = 0;
    while t < rows && t < cols {
        // find a nonzero pivot in the remaining block
        let Some((pi, pj)) = (t..rows)
            .flat_map(|i| (t..cols).map(move |j| (i, j)))
            .filter(|&(i, j)| !s[i][j].is_zero())
            .min_by_key(|&(i, j)| s[i][j].magnitude().clone())
        else {
            break;
        };
        s.swap(t, pi);
        // column swap: S := S·E, so V := V·E and V⁻¹ := E⁻¹·V⁻¹ = E·V⁻¹ (swap rows of V⁻¹)
        if pj != t {
            for row in s.iter_mut() {
                row.swap(t, pj);
            }
            vinv.swap(t, pj);
        }
        let mut clean = true;
        // clear row t by column ops
        for j in (t + 1)..cols {
            if s[t][j].is_zero() {
                continue;
            }
            let q = floor_div(&s[t][j], &s[t][t]);
            if !q.is_zero() {
                // col_j -= q col_t  ⇒ row_t of V⁻¹ += q row_j
                for row in s.iter_mut() {
                    let sub = &row[t] * &q;
                    row[j] = &row[j] - &sub;
                }
                for k in 0..cols {
                    let add = &vinv[j][k] * &q;
                    vinv[t][k] = &vinv[t][k] + &add;
                }
            }
            if !s[t][j].is_zero() {
                clean = false;
            }
        }
        // clear column t by row ops (V untouched)
        for i in (t + 1)..rows {
            if s[i][t].is_zero() {
                continue;
            }
            let q = floor_div(&s[i][t], &s[t][t]);
            if !q.is_zero() {
                for j in 0..cols {
                    let sub = &s[t][j] * &q;
                    s[i][j] = &s[i][j] - &sub;
                }
            }
            if !s[i][t].is_zero() {
                clean = false;
            }
        }
        if clean {
            if s[t][t].is_negative() {
                for row in s.iter_mut() {
                    row[t] = -row[t].clone();
                }
                for k in 0..cols {
                    vinv[t][k] = -vinv[t][k].clone();
                }
            }
            t += 1;
        }
    }
    (s, vinv)
}

/// Given rows spanning a saturated sublattice of ℤ^r (in coordinates of an
/// ambient basis), returns rows completing them to a basis of ℤ^r.
pub fn complete_saturated_basis(sub: &ZMat, r: usize) -> Vec<ZVec> {
    if sub.is_empty() {
        return (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                    .collect()
            })
            .collect();
    }
    let c = sub.len();
    let (s, vinv) = snf_vinv(sub);
    for (i, row) in s.iter().enumerate().take(c) {
        assert!(
            row[i].magnitude().is_one(),
            "sublattice is not saturated (invariant factor {})",
            row[i]
        );
    }
    // rows of V⁻¹ beyond the first c complete the basis
    (c..r).map(|i| vinv[i].clone()).collect()
}

/// Integer matrix determinant.
pub fn zdet(rows: &[Vec<i64>]) -> BigInt {
    let q: QMat = rows
        .iter()
        .map(|r| r.iter().map(|&x| Rat::from_integer(BigInt::from(x))).collect())
        .collect();
    let d = det(&q);
    assert!(d.is_integer());
    d.to_integer()
}

/// Expresses `v` in the row basis `basis` (square, unimodular expected);
/// returns integer coordinates or None when they are not integral.
pub fn integer_coords(v: &[i64], basis: &ZMat) -> Option<Vec<i64>> {
    let n = basis.len();
    // solve xᵀ·basis = v  ⇔  basisᵀ x = v
    let a: QMat = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Rat::from_integer(basis[j][i].clone()))
                .collect()
        })
        .collect();
    let b: QVec = v.iter().map(|&x| Rat::from_integer(BigInt::from(x))).collect();
    let x = solve_square(&a, &b)?;
    let mut out = Vec::with_capacity(n);
    for q in x {
        if !q.is_integer() {
            return None;
        }
        let z = q.to_integer();
        out.push(i64::try_from(&z).ok()?);
    }
    Some(out)
}

pub fn zmat_of(rows: &[Vec<i64>]) -> ZMat {
    zmat_from_i64(rows)
}

// ---------------------------------------------------------------------------
// dense complex helpers
// ---------------------------------------------------------------------------

/// Gaussian elimination with partial pivoting; `None` when numerically
/// singular below `tol`.
pub fn csolve(a: &[Vec<C64>], b: &[C64], tol: f64) -> Option<Vec<C64>> {
    let n = a.len();
    let mut m: Vec<Vec<C64>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(*rhs);
            r
        })
        .collect();
    for c in 0..n {
        let (p, mag) = (c..n)
            .map(|i| (i, m[i][c].norm()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if mag < tol {
            return None;
        }
        m.swap(c, p);
        let inv = m[c][c].finv();
        for j in c..=n {
            m[c][j] *= inv;
        }
        for i in 0..n {
            if i != c {
                let f = m[i][c];
                if f.norm() > 0.0 {
                    for j in c..=n {
                        let sub = m[c][j] * f;
                        m[i][j] -= sub;
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n]).collect())
}

pub fn cdet(a: &[Vec<C64>]) -> C64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut d = C64::new(1.0, 0.0);
    for c in 0..n {
        let (p, mag) = (c..n)
            .map(|i| (i, m[i][c].norm()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if mag == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if p != c {
            m.swap(c, p);
            d = -d;
        }
        d *= m[c][c];
        let inv = m[c][c].finv();
        for i in (c + 1)..n {
            let f = m[i][c] * inv;
            if f.norm() > 0.0 {
                for j in c..n {
                    let sub = m[c][j] * f;
                    m[i][j] -= sub;
                }
            }
        }
    }
    d
}
