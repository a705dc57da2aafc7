//! Location of the distinguished fiber by piecewise-linear max-min
//! optimization, and the level stratification of facet values at a point.
//!
//! The filtration repeatedly maximizes t subject to ℓ_i ≥ t over the current
//! face, restricted to facets that are not yet constant there. Each linear
//! program is solved exactly by vertex enumeration of the lifted (s,t)
//! polytope, so every S_k and the final point are exact rationals.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{self, QMat, QVec, ZMat};
use crate::polytope::MomentPolytope;
use crate::scalar::{fmt_rat, Rat};

/// One step of the filtration: the critical value S_k, the face P_k where it
/// is attained, and the facets I_k that sit at value S_k on that face.
#[derive(Clone, Debug)]
pub struct FiltrationStep {
    pub k: usize,
    pub s_value: Rat,
    pub face_vertices: Vec<QVec>,
    pub face_dim: usize,
    pub level_facets: Vec<usize>,
    /// d(k) = dim P_{k−1} − dim P_k.
    pub dim_drop: usize,
}

#[derive(Clone, Debug)]
pub struct Filtration {
    pub steps: Vec<FiltrationStep>,
    /// The distinguished point u₀ = P_K.
    pub center: QVec,
}

/// Runs the max-min filtration down to a single point.
pub fn run_filtration(p: &MomentPolytope) -> Result<Filtration> {
    let n = p.dim;
    let m = p.num_facets();
    let mut base = p.interior_point();
    let mut dirs: Vec<QVec> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| if i == j { Rat::one() } else { Rat::zero() })
                .collect()
        })
        .collect();
    let mut face_vertices = p.vertices.clone();
    let mut exhausted = vec![false; m];
    let mut steps: Vec<FiltrationStep> = Vec::new();
    let mut last_s: Option<Rat> = None;

    for k in 1..=(m + n + 2) {
        let frozen: Vec<bool> = (0..m)
            .map(|i| is_constant_on(&p.facets[i].normal, &dirs))
            .collect();
        let nonfrozen: Vec<usize> = (0..m).filter(|&i| !frozen[i]).collect();
        // constant facets not yet assigned to a level
        let const_min: Option<Rat> = (0..m)
            .filter(|&i| frozen[i] && !exhausted[i])
            .map(|i| p.ell(i, &base))
            .min();

        let lp = if dirs.is_empty() {
            None
        } else {
            Some(max_min_lp(p, &base, &dirs, &nonfrozen)?)
        };

        let (s_value, from_lp) = match (&const_min, &lp) {
            (Some(c), Some(l)) if *c < l.best => (c.clone(), false),
            (_, Some(l)) => (l.best.clone(), true),
            (Some(c), None) => (c.clone(), false),
            (None, None) => break,
        };
        if let Some(prev) = &last_s {
            if s_value <= *prev {
                return Err(Error::Internal(format!(
                    "filtration stalled at S = {}",
                    fmt_rat(&s_value)
                )));
            }
        }
        last_s = Some(s_value.clone());

        let dim_before = dirs.len();
        if from_lp {
            let l = lp.as_ref().unwrap();
            let (new_base, new_dirs) = linalg::affine_hull(&l.argmax);
            base = new_base;
            dirs = new_dirs;
            face_vertices = l.argmax.clone();
        }
        // facets constant on the (possibly shrunk) hull at exactly S_k
        let mut level_facets = Vec::new();
        for i in 0..m {
            if exhausted[i] {
                continue;
            }
            if is_constant_on(&p.facets[i].normal, &dirs) && p.ell(i, &base) == s_value {
                level_facets.push(i);
                exhausted[i] = true;
            }
        }
        if level_facets.is_empty() {
            return Err(Error::Internal(
                "filtration step produced an empty level".into(),
            ));
        }
        steps.push(FiltrationStep {
            k,
            s_value,
            face_vertices: face_vertices.clone(),
            face_dim: dirs.len(),
            level_facets,
            dim_drop: dim_before - dirs.len(),
        });
        if dirs.is_empty() {
            return Ok(Filtration {
                steps,
                center: base,
            });
        }
    }
    Err(Error::Internal("filtration failed to reach a point".into()))
}

fn is_constant_on(normal: &[i64], dirs: &[QVec]) -> bool {
    dirs.iter().all(|d| linalg::dot_iz(normal, d).is_zero())
}

struct LpOutcome {
    best: Rat,
    argmax: Vec<QVec>,
}

/// maximize t s.t. ℓ_i(base + Σ s_j dir_j) ≥ t for i in `active`,
/// by exact enumeration of the vertices of the lifted feasible set.
fn max_min_lp(
    p: &MomentPolytope,
    base: &QVec,
    dirs: &[QVec],
    active: &[usize],
) -> Result<LpOutcome> {
    let d = dirs.len();
    let vars = d + 1;
    // constraint rows: Σ_j ⟨v_i,dir_j⟩ s_j − t ≥ −ℓ_i(base)
    let rows: Vec<(QVec, Rat)> = active
        .iter()
        .map(|&i| {
            let mut row: QVec = dirs
                .iter()
                .map(|dir| linalg::dot_iz(&p.facets[i].normal, dir))
                .collect();
            row.push(-Rat::one());
            (row, -p.ell(i, base))
        })
        .collect();
    if rows.len() < vars {
        return Err(Error::Internal(
            "too few active constraints for a bounded max-min step".into(),
        ));
    }
    let mut best: Option<Rat> = None;
    let mut argmax: Vec<QVec> = Vec::new();
    for subset in subsets(rows.len(), vars) {
        let a: QMat = subset.iter().map(|&r| rows[r].0.clone()).collect();
        let b: QVec = subset.iter().map(|&r| rows[r].1.clone()).collect();
        let Some(x) = linalg::solve_square(&a, &b) else {
            continue;
        };
        if !rows
            .iter()
            .all(|(row, rhs)| linalg::dot(row, &x) >= *rhs)
        {
            continue;
        }
        let t = x[d].clone();
        let u: QVec = (0..base.len())
            .map(|c| {
                let mut acc = base[c].clone();
                for (j, dir) in dirs.iter().enumerate() {
                    acc += &x[j] * &dir[c];
                }
                acc
            })
            .collect();
        match &best {
            Some(cur) if t < *cur => {}
            Some(cur) if t == *cur => {
                if !argmax.contains(&u) {
                    argmax.push(u);
                }
            }
            _ => {
                best = Some(t);
                argmax = vec![u];
            }
        }
    }
    match best {
        Some(best) => Ok(LpOutcome { best, argmax }),
        None => Err(Error::Internal("max-min LP found no vertex".into())),
    }
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            if m - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    rec(0, m, k, &mut cur, &mut out);
    out
}

// ---------------------------------------------------------------------------
// level structure at a point
// ---------------------------------------------------------------------------

/// Facets grouped by the value of ℓ at a point, in increasing order.
#[derive(Clone, Debug)]
pub struct Level {
    pub s_value: Rat,
    pub facets: Vec<usize>,
    /// Rank gained by the span of normals when this level is added.
    pub new_rank: usize,
}

#[derive(Clone, Debug)]
pub struct LevelStructure {
    pub u: QVec,
    pub levels: Vec<Level>,
    /// 1-based index K of the first level at which the normals of levels
    /// ≤ K span ℝⁿ; `None` cannot happen for a valid polytope.
    pub full_rank_at: Option<usize>,
}

impl LevelStructure {
    pub fn rank_limit(&self) -> usize {
        self.full_rank_at.unwrap_or(self.levels.len())
    }
}

/// Groups ℓ_i(u) by value for interior u. All levels are kept, including
/// those beyond the full-rank index.
pub fn level_structure_at(p: &MomentPolytope, u: &QVec) -> Result<LevelStructure> {
    p.require_interior(u)?;
    Ok(level_structure_unchecked(p, u))
}

/// Same grouping without the interior check; used when probing candidate
/// positions that may fall outside the polytope.
pub fn level_structure_unchecked(p: &MomentPolytope, u: &QVec) -> LevelStructure {
    let mut by_value: BTreeMap<Rat, Vec<usize>> = BTreeMap::new();
    for i in 0..p.num_facets() {
        by_value.entry(p.ell(i, u)).or_default().push(i);
    }
    let mut levels = Vec::new();
    let mut span_rows: Vec<QVec> = Vec::new();
    let mut rank_so_far = 0;
    let mut full_rank_at = None;
    for (s_value, facets) in by_value {
        for &i in &facets {
            span_rows.push(
                p.facets[i]
                    .normal
                    .iter()
                    .map(|&x| Rat::from_integer(x.into()))
                    .collect(),
            );
        }
        let r = linalg::rank(&span_rows);
        let new_rank = r - rank_so_far;
        rank_so_far = r;
        levels.push(Level {
            s_value,
            facets,
            new_rank,
        });
        if full_rank_at.is_none() && rank_so_far == p.dim {
            full_rank_at = Some(levels.len());
        }
    }
    LevelStructure {
        u: u.clone(),
        levels,
        full_rank_at,
    }
}

// ---------------------------------------------------------------------------
// adapted integer basis
// ---------------------------------------------------------------------------

/// A ℤ-basis of ℤⁿ adapted to the level filtration: the rows assigned to
/// levels ≤ k form a basis of the saturation of span{v_i : i in levels ≤ k}.
/// Every facet normal has integer coordinates in this basis, vanishing on
/// rows of deeper levels than its own.
#[derive(Clone, Debug)]
pub struct LevelBasis {
    /// Basis vectors e*_{k,j} as rows, outer order by level.
    pub rows: Vec<Vec<i64>>,
    /// 0-based level index that introduced each row.
    pub level_of_row: Vec<usize>,
    /// Inverse of the row matrix (integer since the basis is unimodular).
    pub inv: Vec<Vec<i64>>,
}

impl LevelBasis {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Number of variables introduced at 0-based level k.
    pub fn d_of_level(&self, k: usize) -> usize {
        self.level_of_row.iter().filter(|&&l| l == k).count()
    }

    /// Row indices introduced at 0-based level k.
    pub fn rows_of_level(&self, k: usize) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&r| self.level_of_row[r] == k)
            .collect()
    }

    /// Level-variable exponents of the monomial y^v.
    pub fn to_level_exponents(&self, v: &[i64]) -> Result<Vec<i64>> {
        let rows: ZMat = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        linalg::integer_coords(v, &rows).ok_or_else(|| {
            Error::Internal(format!(
                "vector {v:?} has no integer coordinates in the level basis"
            ))
        })
    }

    /// Original-variable exponents of the level monomial y_level^c.
    pub fn from_level_exponents(&self, c: &[i64]) -> Vec<i64> {
        let n = self.n();
        (0..n)
            .map(|col| (0..n).map(|r| c[r] * self.rows[r][col]).sum())
            .collect()
    }
}

/// Builds an adapted basis by saturating the normal span level by level and
/// extending the previous basis inside each saturation.
pub fn integer_basis(p: &MomentPolytope, levels: &LevelStructure) -> Result<LevelBasis> {
    let n = p.dim;
    let mut chosen: Vec<Vec<i64>> = Vec::new();
    let mut level_of_row: Vec<usize> = Vec::new();
    let mut normals_so_far: Vec<Vec<i64>> = Vec::new();
    for (k, level) in levels.levels.iter().enumerate() {
        for &i in &level.facets {
            normals_so_far.push(p.facets[i].normal.clone());
        }
        let sat = linalg::saturation(&normals_so_far);
        if sat.len() == chosen.len() {
            continue;
        }
        // coordinates of the chosen rows in the saturation basis
        let sat_q: QMat = sat
            .iter()
            .map(|r| r.iter().map(|x| Rat::from_integer(x.clone())).collect())
            .collect();
        let mut coords: ZMat = Vec::new();
        for row in &chosen {
            let rhs: QVec = row.iter().map(|&x| Rat::from_integer(x.into())).collect();
            // solve cᵀ·sat = row  (sat has full row rank; use normal equations
            // via independent columns)
            let c = solve_in_row_basis(&sat_q, &rhs).ok_or_else(|| {
                Error::Internal("previous basis row escaped the saturation".into())
            })?;
            coords.push(c);
        }
        let completion = linalg::complete_saturated_basis(&coords, sat.len());
        for comp in completion {
            let vec: Vec<i64> = (0..n)
                .map(|col| {
                    let mut acc = BigInt::zero();
                    for (j, c) in comp.iter().enumerate() {
                        acc += c * &sat[j][col];
                    }
                    i64::try_from(&acc).unwrap()
                })
                .collect();
            chosen.push(vec);
            level_of_row.push(k);
        }
    }
    if chosen.len() != n {
        return Err(Error::Internal(format!(
            "level normals span rank {} < {n}",
            chosen.len()
        )));
    }
    let rows_q: QMat = chosen
        .iter()
        .map(|r| r.iter().map(|&x| Rat::from_integer(x.into())).collect())
        .collect();
    let inv_q = linalg::inverse(&rows_q)
        .ok_or_else(|| Error::Internal("level basis is singular".into()))?;
    let mut inv = Vec::with_capacity(n);
    for row in inv_q {
        let mut irow = Vec::with_capacity(n);
        for q in row {
            if !q.is_integer() {
                return Err(Error::Internal(
                    "level basis inverse is not integral; basis not unimodular".into(),
                ));
            }
            irow.push(i64::try_from(&q.to_integer()).unwrap());
        }
        inv.push(irow);
    }
    let basis = LevelBasis {
        rows: chosen,
        level_of_row,
        inv,
    };
    // integrality + triangularity of all facet normals w.r.t. the basis
    for (k, level) in levels.levels.iter().enumerate() {
        for &i in &level.facets {
            let c = basis.to_level_exponents(&p.facets[i].normal)?;
            for (r, &cr) in c.iter().enumerate() {
                if cr != 0 && basis.level_of_row[r] > k {
                    return Err(Error::Internal(format!(
                        "facet {i} at level {k} uses a basis row of level {}",
                        basis.level_of_row[r]
                    )));
                }
            }
        }
    }
    Ok(basis)
}

/// Solves cᵀ·rows = rhs for integer c, where `rows` has full row rank.
fn solve_in_row_basis(rows: &QMat, rhs: &QVec) -> Option<Vec<BigInt>> {
    let r = rows.len();
    let n = rows[0].len();
    // pick r independent columns
    let mut probe: QMat = Vec::new();
    let mut cols: Vec<usize> = Vec::new();
    for cidx in 0..n {
        let col: QVec = rows.iter().map(|row| row[cidx].clone()).collect();
        let mut attempt = probe.clone();
        attempt.push(col.clone());
        if linalg::rank(&attempt) > probe.len() {
            probe.push(col);
            cols.push(cidx);
            if probe.len() == r {
                break;
            }
        }
    }
    if probe.len() != r {
        return None;
    }
    // (rows[:, cols])ᵀ c = rhs[cols]
    let a: QMat = cols
        .iter()
        .map(|&cidx| rows.iter().map(|row| row[cidx].clone()).collect())
        .collect();
    let b: QVec = cols.iter().map(|&cidx| rhs[cidx].clone()).collect();
    let c = linalg::solve_square(&a, &b)?;
    // verify on all coordinates and require integrality
    for cidx in 0..n {
        let mut acc = Rat::zero();
        for (j, cj) in c.iter().enumerate() {
            acc += cj * &rows[j][cidx];
        }
        if acc != rhs[cidx] {
            return None;
        }
    }
    c.iter()
        .map(|q| q.is_integer().then(|| q.to_integer()))
        .collect()
}

/// Certificate behind the filtration (nonnegative spanning): every basis
/// vector of the saturated span at level ≤ k is a nonnegative combination
/// of the level normals up to k. Returns the first failing level.
pub fn nonnegative_span_certificate(
    p: &MomentPolytope,
    levels: &LevelStructure,
    basis: &LevelBasis,
) -> Option<usize> {
    let mut normals: Vec<Vec<i64>> = Vec::new();
    for (k, level) in levels.levels.iter().enumerate() {
        for &i in &level.facets {
            normals.push(p.facets[i].normal.clone());
        }
        if basis.d_of_level(k) == 0 {
            continue;
        }
        for &r in &basis.rows_of_level(k) {
            let target: QVec = basis.rows[r]
                .iter()
                .map(|&x| Rat::from_integer(x.into()))
                .collect();
            if !in_cone(&normals, &target) {
                return Some(k);
            }
        }
        if levels.full_rank_at == Some(k + 1) {
            break;
        }
    }
    None
}

fn in_cone(gens: &[Vec<i64>], target: &QVec) -> bool {
    let gmat: QMat = gens
        .iter()
        .map(|g| g.iter().map(|&x| Rat::from_integer(x.into())).collect())
        .collect();
    let r = linalg::rank(&gmat);
    for subset in subsets(gens.len(), r) {
        let sub: QMat = subset.iter().map(|&i| gmat[i].clone()).collect();
        if linalg::rank(&sub) < r {
            continue;
        }
        if let Some(c) = express_in_span(&sub, target) {
            if c.iter().all(|x| !x.is_negative()) {
                return true;
            }
        }
    }
    false
}

fn express_in_span(rows: &QMat, target: &QVec) -> Option<QVec> {
    let r = rows.len();
    let n = target.len();
    let mut probe: QMat = Vec::new();
    let mut cols = Vec::new();
    for cidx in 0..n {
        let col: QVec = rows.iter().map(|row| row[cidx].clone()).collect();
        let mut attempt = probe.clone();
        attempt.push(col.clone());
        if linalg::rank(&attempt) > probe.len() {
            probe.push(col);
            cols.push(cidx);
            if probe.len() == r {
                break;
            }
        }
    }
    let a: QMat = cols
        .iter()
        .map(|&cidx| rows.iter().map(|row| row[cidx].clone()).collect())
        .collect();
    let b: QVec = cols.iter().map(|&cidx| target[cidx].clone()).collect();
    let c = linalg::solve_square(&a, &b)?;
    for cidx in 0..n {
        let mut acc = Rat::zero();
        for (j, cj) in c.iter().enumerate() {
            acc += cj * &rows[j][cidx];
        }
        if acc != target[cidx] {
            return None;
        }
    }
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::fixtures::*;
    use crate::scalar::rat;

    #[test]
    fn rectangle_filtration() {
        let p = rectangle("1", "2");
        let f = run_filtration(&p).unwrap();
        assert_eq!(f.center, vec![rat(1, 2), rat(1, 1)]);
        assert_eq!(f.steps.len(), 2);
        assert_eq!(f.steps[0].s_value, rat(1, 2));
        assert_eq!(f.steps[1].s_value, rat(1, 1));
        // P₁ = {1/2} × [1/2, 3/2]
        let mut fv = f.steps[0].face_vertices.clone();
        fv.sort();
        assert_eq!(
            fv,
            vec![vec![rat(1, 2), rat(1, 2)], vec![rat(1, 2), rat(3, 2)]]
        );
        assert_eq!(f.steps[0].level_facets, vec![0, 2]);
        assert_eq!(f.steps[1].level_facets, vec![1, 3]);
    }

    #[test]
    fn cp2_filtration() {
        let p = cp2();
        let f = run_filtration(&p).unwrap();
        assert_eq!(f.center, vec![rat(1, 3), rat(1, 3)]);
        assert_eq!(f.steps.len(), 1);
        assert_eq!(f.steps[0].s_value, rat(1, 3));
        assert_eq!(f.steps[0].level_facets, vec![0, 1, 2]);
    }

    #[test]
    fn blowup_one_filtration_half() {
        // α = 1/2: S₁ = 1/4 on the segment [1/4,1/2]×{1/4}, then u₀ = (3/8, 1/4)
        let p = blowup_one("1/2");
        let f = run_filtration(&p).unwrap();
        assert_eq!(f.steps[0].s_value, rat(1, 4));
        assert_eq!(f.steps[1].s_value, rat(3, 8));
        assert_eq!(f.center, vec![rat(3, 8), rat(1, 4)]);
        let mut fv = f.steps[0].face_vertices.clone();
        fv.sort();
        assert_eq!(
            fv,
            vec![vec![rat(1, 4), rat(1, 4)], vec![rat(1, 2), rat(1, 4)]]
        );
    }

    #[test]
    fn filtration_commutes_with_translation() {
        let p = blowup_two("1/2");
        let f = run_filtration(&p).unwrap();
        let shift = vec![rat(3, 7), rat(-2, 5)];
        let q = p.translated(&shift);
        let g = run_filtration(&q).unwrap();
        let expect: Vec<Rat> = f
            .center
            .iter()
            .zip(&shift)
            .map(|(a, b)| a + b)
            .collect();
        assert_eq!(g.center, expect);
        for (a, b) in f.steps.iter().zip(&g.steps) {
            assert_eq!(a.s_value, b.s_value);
            assert_eq!(a.level_facets, b.level_facets);
        }
    }

    #[test]
    fn levels_at_off_center_point() {
        // CP¹×CP¹ sized [0,1]×[0,2] at (1/2, 3/4):
        // levels {1/2: {0,2}}, {3/4: {1}}, {5/4: {3}}, K = 2
        let p = rectangle("1", "2");
        let u = vec![rat(1, 2), rat(3, 4)];
        let ls = level_structure_at(&p, &u).unwrap();
        assert_eq!(ls.levels.len(), 3);
        assert_eq!(ls.levels[0].s_value, rat(1, 2));
        assert_eq!(ls.levels[0].facets, vec![0, 2]);
        assert_eq!(ls.levels[1].s_value, rat(3, 4));
        assert_eq!(ls.levels[1].facets, vec![1]);
        assert_eq!(ls.full_rank_at, Some(2));
        // basis: level 1 introduces e₁ direction, level 2 introduces e₂
        let basis = integer_basis(&p, &ls).unwrap();
        assert_eq!(basis.d_of_level(0), 1);
        assert_eq!(basis.d_of_level(1), 1);
        assert_eq!(basis.d_of_level(2), 0);
        assert_eq!(basis.rows[0][1], 0);
    }

    #[test]
    fn two_point_blowup_levels_at_diagonal() {
        // Example with α > 0 at u = (α,α): single level {2,3,4} of full rank
        let p = blowup_two("1/2");
        let u = vec![rat(1, 2), rat(1, 2)];
        let ls = level_structure_at(&p, &u).unwrap();
        assert_eq!(ls.levels[0].s_value, rat(1, 2));
        assert_eq!(ls.levels[0].facets, vec![2, 3, 4]);
        assert_eq!(ls.full_rank_at, Some(1));
    }

    #[test]
    fn interior_check_enforced() {
        let p = cp2();
        let r = level_structure_at(&p, &vec![rat(1, 1), rat(1, 1)]);
        assert!(matches!(r, Err(Error::NotInterior(_, _, _))));
    }

    #[test]
    fn identity_basis_for_full_rank_level() {
        let p = cp2();
        let u = vec![rat(1, 3), rat(1, 3)];
        let ls = level_structure_at(&p, &u).unwrap();
        assert_eq!(ls.full_rank_at, Some(1));
        let basis = integer_basis(&p, &ls).unwrap();
        assert_eq!(basis.d_of_level(0), 2);
        assert_eq!(basis.rows, vec![vec![1, 0], vec![0, 1]]);
        // round trip through level exponents
        for f in &p.facets {
            let c = basis.to_level_exponents(&f.normal).unwrap();
            assert_eq!(basis.from_level_exponents(&c), f.normal);
        }
    }

    #[test]
    fn blowup_cp3_level_profile() {
        // blow-up of CP³ along a line, α = 1/2, at u = (1/3, 1/3, 1/6):
        // level 1 = {3,4,5} of rank 2, level 2 = {1,2} completing the rank
        let p = crate::polytope::parse_polytope(
            r#"
name = "blow-up of CP3 along CP1"
dim = 3
[params]
alpha = "1/2"
[[facets]]
v = [1, 0, 0]
lambda = "0"
[[facets]]
v = [0, 1, 0]
lambda = "0"
[[facets]]
v = [0, 0, 1]
lambda = "0"
[[facets]]
v = [-1, -1, -1]
lambda = "-1"
[[facets]]
v = [1, 1, 0]
lambda = "alpha"
"#,
            &[],
        )
        .unwrap();
        let u = vec![rat(1, 3), rat(1, 3), rat(1, 6)];
        let ls = level_structure_at(&p, &u).unwrap();
        assert_eq!(ls.levels[0].s_value, rat(1, 6));
        assert_eq!(ls.levels[0].facets, vec![2, 3, 4]);
        assert_eq!(ls.levels[1].s_value, rat(1, 3));
        assert_eq!(ls.levels[1].facets, vec![0, 1]);
        assert_eq!(ls.full_rank_at, Some(2));
        let basis = integer_basis(&p, &ls).unwrap();
        assert_eq!(basis.d_of_level(0), 2);
        assert_eq!(basis.d_of_level(1), 1);
        // level-1 rows span the saturation of span{e₃, (−1,−1,−1), (1,1,0)}
        for &r in &basis.rows_of_level(0) {
            let row = &basis.rows[r];
            // orthogonal complement of that span is (1,−1,0)
            assert_eq!(row[0] - row[1], 0);
        }
    }

    #[test]
    fn nonnegative_span_holds_at_center() {
        for p in [cp2(), rectangle("1", "2"), blowup_one("1/2"), blowup_two("1/2")] {
            let f = run_filtration(&p).unwrap();
            let ls = level_structure_at(&p, &f.center).unwrap();
            let basis = integer_basis(&p, &ls).unwrap();
            assert_eq!(nonnegative_span_certificate(&p, &ls, &basis), None);
        }
    }
}
