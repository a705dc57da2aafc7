//! The leading-order potential as a Laurent polynomial over Novikov scalars,
//! its logarithmic gradient, and the per-level leading term systems.
//!
//! Everything is kept Laurent by differentiating with y·∂/∂y: the zero sets
//! over invertible coordinates agree with those of the plain gradient, and
//! the monomial identity y_j ∂(y^v T^ℓ)/∂y_j = v_j · y^v T^ℓ stays exact.

use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::QVec;
use crate::locator::{LevelBasis, LevelStructure};
use crate::novikov::{Exponent, NovikovSeries, Order};
use crate::polytope::MomentPolytope;
use crate::scalar::{Coeff, Rat, C64};

/// Laurent polynomial in y₁..y_n with Novikov-series coefficients, keyed by
/// integer exponent vectors.
#[derive(Clone, Debug)]
pub struct LaurentPolyNov<C: Coeff> {
    pub vars: Vec<String>,
    monos: BTreeMap<Vec<i64>, NovikovSeries<C>>,
}

impl<C: Coeff> LaurentPolyNov<C> {
    pub fn new(vars: Vec<String>) -> Self {
        LaurentPolyNov {
            vars,
            monos: BTreeMap::new(),
        }
    }

    pub fn add_term(&mut self, exps: Vec<i64>, coeff: NovikovSeries<C>) {
        assert_eq!(exps.len(), self.vars.len());
        let cur = match self.monos.remove(&exps) {
            Some(prev) => prev.add_ref(&coeff),
            None => coeff,
        };
        if !cur.is_zero_series() || *cur.trunc() != Order::Infinite {
            if cur.is_zero_series() && *cur.trunc() == Order::Infinite {
                return;
            }
            self.monos.insert(exps, cur);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &NovikovSeries<C>)> {
        self.monos.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.monos.len()
    }

    pub fn coeff(&self, exps: &[i64]) -> Option<&NovikovSeries<C>> {
        self.monos.get(exps)
    }

    pub fn is_zero(&self) -> bool {
        self.monos.values().all(|s| s.is_zero_series())
    }

    /// y_j ∂/∂y_j applied termwise.
    pub fn log_derivative(&self, j: usize) -> Self {
        let mut out = LaurentPolyNov::new(self.vars.clone());
        for (exps, coeff) in &self.monos {
            if exps[j] == 0 {
                continue;
            }
            out.add_term(exps.clone(), coeff.scale(&C::from_int(exps[j])));
        }
        out
    }

    /// All logarithmic partials (the critical-equation components).
    pub fn gradient(&self) -> Vec<Self> {
        (0..self.vars.len()).map(|j| self.log_derivative(j)).collect()
    }

    /// Substitutes series values for the variables. Negative exponents
    /// require unit values. Truncation orders propagate termwise, so a
    /// coefficient monomial T^S keeps its full shift: T^S times a unit
    /// known mod T^N is known mod T^{N+S}.
    pub fn eval_series(&self, values: &[NovikovSeries<C>]) -> Result<NovikovSeries<C>> {
        let mut acc: Option<NovikovSeries<C>> = None;
        for (exps, coeff) in &self.monos {
            let mut term = coeff.clone();
            for (v, &e) in values.iter().zip(exps) {
                if e != 0 {
                    term = term.mul_ref(&v.pow_i64(e)?);
                }
            }
            acc = Some(match acc {
                Some(a) => a.add_ref(&term),
                None => term,
            });
        }
        Ok(acc.unwrap_or_else(|| NovikovSeries::zero(Order::Infinite)))
    }

    /// Numeric evaluation with T ↦ t and y ↦ point (all coordinates and t
    /// nonzero when negative exponents appear).
    pub fn eval_numeric(&self, point: &[C64], t: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (exps, coeff) in &self.monos {
            let mut c = C64::new(0.0, 0.0);
            for (e, a) in coeff.terms() {
                c += a.approx() * C64::new(t.powf(e.to_f64()), 0.0);
            }
            for (z, &e) in point.iter().zip(exps) {
                c *= z.powi(e as i32);
            }
            acc += c;
        }
        acc
    }

    pub fn to_float(&self) -> LaurentPolyNov<C64> {
        let mut out = LaurentPolyNov::new(self.vars.clone());
        for (exps, coeff) in &self.monos {
            out.add_term(exps.clone(), coeff.to_float());
        }
        out
    }
}

impl<C: Coeff> fmt::Display for LaurentPolyNov<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.monos.is_empty() {
            return write!(f, "0");
        }
        for (i, (exps, coeff)) in self.monos.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({coeff})")?;
            for (name, &e) in self.vars.iter().zip(exps) {
                match e {
                    0 => {}
                    1 => write!(f, "*{name}")?,
                    _ => write!(f, "*{name}^{e}")?,
                }
            }
        }
        Ok(())
    }
}

/// Optional extra potential term beyond leading order: a rational
/// coefficient times Π z̄_i^{e_i} shifted by T^ρ with ρ > 0. Defaults to
/// none; callers with known higher corrections can pass them through.
#[derive(Clone, Debug)]
pub struct ExtraTerm {
    pub multidegree: Vec<u32>,
    pub coeff: Rat,
    pub rho: Rat,
}

/// PO₀ at the fiber over u: Σᵢ y^{vᵢ} T^{ℓᵢ(u)}. With `extras`, adds the
/// supplied higher-order terms.
pub fn build_po0<C: Coeff>(
    p: &MomentPolytope,
    u: &QVec,
    extras: &[ExtraTerm],
) -> Result<LaurentPolyNov<C>> {
    p.require_interior(u)?;
    Ok(build_po0_unchecked(p, u, extras))
}

/// Same construction without the interior test; exponents of T may then be
/// zero or negative (used when probing candidate positions outside P).
pub fn build_po0_unchecked<C: Coeff>(
    p: &MomentPolytope,
    u: &QVec,
    extras: &[ExtraTerm],
) -> LaurentPolyNov<C> {
    let vars = (0..p.dim).map(|i| format!("y{}", i + 1)).collect();
    let mut out = LaurentPolyNov::new(vars);
    for (i, f) in p.facets.iter().enumerate() {
        let _ = i;
        out.add_term(
            f.normal.clone(),
            NovikovSeries::monomial(C::one(), Exponent::new(f.ell(u))),
        );
    }
    for extra in extras {
        assert_eq!(extra.multidegree.len(), p.num_facets());
        let mut exps = vec![0i64; p.dim];
        let mut ell = extra.rho.clone();
        for (i, &e) in extra.multidegree.iter().enumerate() {
            if e == 0 {
                continue;
            }
            for (x, &v) in exps.iter_mut().zip(&p.facets[i].normal) {
                *x += v * e as i64;
            }
            ell += Rat::from_integer((e as i64).into()) * p.ell(i, u);
        }
        out.add_term(
            exps,
            NovikovSeries::monomial(C::from_rat(&extra.coeff), Exponent::new(ell)),
        );
    }
    out
}

/// Symbolic rendering of PO₀ with the exponents left as affine forms in u.
pub fn render_po0_symbolic(p: &MomentPolytope) -> String {
    let mut parts = Vec::new();
    for f in &p.facets {
        let mut mono = String::new();
        for (j, &v) in f.normal.iter().enumerate() {
            match v {
                0 => {}
                1 => mono.push_str(&format!("y{}*", j + 1)),
                _ => mono.push_str(&format!("y{}^{}*", j + 1, v)),
            }
        }
        let ell = {
            let mut s = String::new();
            for (j, &v) in f.normal.iter().enumerate() {
                match v {
                    0 => {}
                    1 => s.push_str(&format!("+u{}", j + 1)),
                    -1 => s.push_str(&format!("-u{}", j + 1)),
                    _ => s.push_str(&format!("{:+}*u{}", v, j + 1)),
                }
            }
            let off = -f.offset.clone();
            if !off.is_zero() || s.is_empty() {
                s.push_str(&format!("{:+}", crate::scalar::fmt_rat(&off)));
            }
            s.trim_start_matches('+').to_string()
        };
        parts.push(format!("{mono}T^({ell})"));
    }
    parts.join(" + ")
}

/// The monomials of one level, written in level coordinates.
#[derive(Clone, Debug)]
pub struct LevelBlock {
    /// 0-based level index.
    pub level: usize,
    /// T-exponent S_k at the base point.
    pub s_value: Rat,
    /// Monomials (exponent vectors over the n level variables, one per
    /// facet of the level; coefficient 1) plus any extra-term monomials
    /// landing at this exact T-exponent.
    pub monomials: Vec<(Vec<i64>, Rat)>,
    /// d(k): number of level variables introduced here.
    pub num_new_vars: usize,
    /// Index of the first variable of this level in the level ordering.
    pub first_var: usize,
}

/// The potential organized by T-exponent in level coordinates: the data of
/// the leading term equations plus the tail needed for lifting.
#[derive(Clone, Debug)]
pub struct LeadingTermSystem {
    pub u: QVec,
    pub blocks: Vec<LevelBlock>,
    /// 1-based count of blocks carrying equations (levels up to full rank).
    pub rank_limit: usize,
    pub basis: LevelBasis,
    pub var_names: Vec<String>,
}

impl LeadingTermSystem {
    pub fn n(&self) -> usize {
        self.basis.n()
    }

    /// Blocks whose level index is below the full-rank cutoff; only these
    /// contribute leading term equations.
    pub fn equation_blocks(&self) -> impl Iterator<Item = &LevelBlock> {
        self.blocks.iter().filter(move |b| b.level < self.rank_limit)
    }

    /// Variable indices (in level ordering) owned by block k.
    pub fn vars_of_block(&self, block: &LevelBlock) -> Vec<usize> {
        (block.first_var..block.first_var + block.num_new_vars).collect()
    }

    /// The leading term equation ∂F_k/∂(level var j), as a numeric Laurent
    /// polynomial over the level variables: y_var · ∂/∂y_var in log form.
    pub fn lte_equation(&self, block: &LevelBlock, var: usize) -> Vec<(C64, Vec<i64>)> {
        let mut out = Vec::new();
        for (exps, q) in &block.monomials {
            if exps[var] == 0 {
                continue;
            }
            out.push((
                C64::new(crate::scalar::rat_to_f64(q) * exps[var] as f64, 0.0),
                exps.clone(),
            ));
        }
        out
    }

    /// Hessian entry data for strong-nondegeneracy: the matrix
    /// Σ ∂²Y/∂y_{j1}∂y_{j2} over the block's monomials, evaluated at a
    /// point with nonzero coordinates.
    pub fn hessian_block(&self, block: &LevelBlock, point: &[C64]) -> Result<Vec<Vec<C64>>> {
        for (i, z) in point.iter().enumerate() {
            let used = block.monomials.iter().any(|(e, _)| e[i] != 0);
            if used && z.norm() == 0.0 {
                return Err(Error::ZeroCoordinate(i));
            }
        }
        let vars = self.vars_of_block(block);
        let d = vars.len();
        let mut h = vec![vec![C64::new(0.0, 0.0); d]; d];
        for (a, &ja) in vars.iter().enumerate() {
            for (b, &jb) in vars.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (exps, q) in &block.monomials {
                    let ea = exps[ja];
                    let eb = exps[jb];
                    let factor = if ja == jb { ea * (ea - 1) } else { ea * eb };
                    if factor == 0 {
                        continue;
                    }
                    let mut m = C64::new(crate::scalar::rat_to_f64(q) * factor as f64, 0.0);
                    for (v, &e) in point.iter().zip(exps) {
                        m *= v.powi(e as i32);
                    }
                    // divide the two differentiated coordinates back out
                    m *= (point[ja] * point[jb]).finv();
                    acc += m;
                }
                h[a][b] = acc;
            }
        }
        Ok(h)
    }
}

/// Rewrites PO₀ at u in the adapted level coordinates and groups monomials
/// by exact T-exponent.
pub fn leading_term_system(
    p: &MomentPolytope,
    u: &QVec,
    levels: &LevelStructure,
    basis: &LevelBasis,
    extras: &[ExtraTerm],
) -> Result<LeadingTermSystem> {
    let mut blocks: Vec<LevelBlock> = Vec::new();
    let mut first_var = 0usize;
    for (k, level) in levels.levels.iter().enumerate() {
        let mut monomials = Vec::new();
        for &i in &level.facets {
            monomials.push((basis.to_level_exponents(&p.facets[i].normal)?, Rat::one()));
        }
        let d = basis.d_of_level(k);
        blocks.push(LevelBlock {
            level: k,
            s_value: level.s_value.clone(),
            monomials,
            num_new_vars: d,
            first_var,
        });
        first_var += d;
    }
    // extra terms attach to the block with matching T-exponent, or create
    // their own trailing block (they never carry equations: rank_limit only
    // counts facet levels)
    for extra in extras {
        let mut exps = vec![0i64; p.dim];
        let mut ell = extra.rho.clone();
        for (i, &e) in extra.multidegree.iter().enumerate() {
            if e == 0 {
                continue;
            }
            for (x, &v) in exps.iter_mut().zip(&p.facets[i].normal) {
                *x += v * e as i64;
            }
            ell += Rat::from_integer((e as i64).into()) * p.ell(i, u);
        }
        let lexps = basis.to_level_exponents(&exps)?;
        if let Some(b) = blocks.iter_mut().find(|b| b.s_value == ell) {
            b.monomials.push((lexps, extra.coeff.clone()));
        } else {
            blocks.push(LevelBlock {
                level: usize::MAX,
                s_value: ell,
                monomials: vec![(lexps, extra.coeff.clone())],
                num_new_vars: 0,
                first_var,
            });
        }
    }
    blocks.sort_by(|a, b| a.s_value.cmp(&b.s_value));
    let var_names = basis
        .level_of_row
        .iter()
        .enumerate()
        .map(|(r, &lvl)| {
            let j = basis.rows_of_level(lvl).iter().position(|&x| x == r).unwrap();
            format!("w{}_{}", lvl + 1, j + 1)
        })
        .collect();
    Ok(LeadingTermSystem {
        u: u.clone(),
        blocks,
        rank_limit: levels.rank_limit(),
        basis: basis.clone(),
        var_names,
    })
}

/// PO₀ rewritten in the level variables, for round-trip checks and lifting.
pub fn po0_in_level_vars<C: Coeff>(sys: &LeadingTermSystem) -> LaurentPolyNov<C> {
    let mut out = LaurentPolyNov::new(sys.var_names.clone());
    for block in &sys.blocks {
        for (exps, q) in &block.monomials {
            out.add_term(
                exps.clone(),
                NovikovSeries::monomial(C::from_rat(q), Exponent::new(block.s_value.clone())),
            );
        }
    }
    out
}

/// Converts a point in original coordinates to level coordinates.
pub fn to_level_point(basis: &LevelBasis, y: &[C64]) -> Vec<C64> {
    basis
        .rows
        .iter()
        .map(|row| {
            let mut acc = C64::new(1.0, 0.0);
            for (v, &e) in y.iter().zip(row) {
                acc *= v.powi(e as i32);
            }
            acc
        })
        .collect()
}

/// Converts a point in level coordinates back to original coordinates.
pub fn from_level_point(basis: &LevelBasis, w: &[C64]) -> Vec<C64> {
    basis
        .inv
        .iter()
        .map(|row| {
            let mut acc = C64::new(1.0, 0.0);
            for (v, &e) in w.iter().zip(row) {
                acc *= v.powi(e as i32);
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locator::{integer_basis, level_structure_at, run_filtration};
    use crate::polytope::fixtures::*;
    use crate::scalar::{rat, GaussQ};
    use num_complex::Complex;

    fn gq(n: i64, d: i64) -> GaussQ {
        Complex::new(rat(n, d), rat(0, 1))
    }

    #[test]
    fn cp2_po0_shape() {
        let p = cp2();
        let u = vec![rat(1, 3), rat(1, 3)];
        let po: LaurentPolyNov<GaussQ> = build_po0(&p, &u, &[]).unwrap();
        assert_eq!(po.num_terms(), 3);
        let c = po.coeff(&[-1, -1]).unwrap();
        assert_eq!(c.leading().unwrap().0, &Exponent::new(rat(1, 3)));
        // gradient entry 1: y₁T^{u₁} − (y₁y₂)⁻¹T^{1−u₁−u₂}
        let g = po.log_derivative(0);
        assert_eq!(g.num_terms(), 2);
        assert_eq!(
            g.coeff(&[-1, -1]).unwrap().leading().unwrap().1,
            &gq(-1, 1)
        );
    }

    #[test]
    fn hirzebruch_po0_terms() {
        // F_n fixture with n=3: y₁T^{u₁}+y₂T^{u₂}+y₁⁻¹y₂⁻³T^{3−u₁−3u₂}+y₂⁻¹T^{1−α−u₂}
        let p = crate::polytope::parse_polytope(
            r#"
name = "F3"
dim = 2
[params]
alpha = "1/4"
[[facets]]
v = [1, 0]
lambda = "0"
[[facets]]
v = [0, 1]
lambda = "0"
[[facets]]
v = [-1, -3]
lambda = "-3"
[[facets]]
v = [0, -1]
lambda = "alpha - 1"
"#,
            &[],
        )
        .unwrap();
        let u = vec![rat(15, 16), rat(3, 8)];
        let po: LaurentPolyNov<GaussQ> = build_po0(&p, &u, &[]).unwrap();
        assert_eq!(po.num_terms(), 4);
        let c = po.coeff(&[-1, -3]).unwrap();
        assert_eq!(c.leading().unwrap().0, &Exponent::new(rat(15, 16)));
        // gradient identity: y_j ∂PO₀/∂y_j = Σ v_{i,j} z̄_i termwise
        for j in 0..2 {
            let g = po.log_derivative(j);
            for (i, f) in p.facets.iter().enumerate() {
                let _ = i;
                if f.normal[j] == 0 {
                    assert!(g.coeff(&f.normal).is_none());
                } else {
                    let got = g.coeff(&f.normal).unwrap().leading().unwrap().1.clone();
                    assert_eq!(got, gq(f.normal[j], 1));
                }
            }
        }
    }

    #[test]
    fn constant_polynomial_gradient_vanishes() {
        let mut c: LaurentPolyNov<GaussQ> = LaurentPolyNov::new(vec!["y1".into()]);
        c.add_term(vec![0], NovikovSeries::one());
        assert!(c.gradient().iter().all(|g| g.is_zero()));
    }

    #[test]
    fn blowup_one_lte_half() {
        // α = 1/2 at u₀ = (3/8, 1/4): level 1 gives 1 − w⁻² in the level
        // variable w = y₂, level 2 gives 1 − w₁⁻²w₂⁻¹-type equation.
        let p = blowup_one("1/2");
        let f = run_filtration(&p).unwrap();
        let ls = level_structure_at(&p, &f.center).unwrap();
        let basis = integer_basis(&p, &ls).unwrap();
        let sys = leading_term_system(&p, &f.center, &ls, &basis, &[]).unwrap();
        assert_eq!(sys.rank_limit, 2);
        let blocks: Vec<&LevelBlock> = sys.equation_blocks().collect();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].num_new_vars, 1);
        assert_eq!(blocks[1].num_new_vars, 1);
        // level 1 equation has two monomials with opposite exponent sign
        let eq = sys.lte_equation(blocks[0], 0);
        assert_eq!(eq.len(), 2);
    }

    #[test]
    fn level_rewrite_round_trips() {
        let p = blowup_two("1/2");
        let f = run_filtration(&p).unwrap();
        let ls = level_structure_at(&p, &f.center).unwrap();
        let basis = integer_basis(&p, &ls).unwrap();
        let sys = leading_term_system(&p, &f.center, &ls, &basis, &[]).unwrap();
        let po: LaurentPolyNov<GaussQ> = build_po0(&p, &f.center, &[]).unwrap();
        let lv: LaurentPolyNov<GaussQ> = po0_in_level_vars(&sys);
        // map each level monomial back and compare supports and exponents
        assert_eq!(po.num_terms(), lv.num_terms());
        for (exps, coeff) in lv.terms() {
            let orig = basis.from_level_exponents(exps);
            let c0 = po.coeff(&orig).expect("monomial must exist");
            assert_eq!(c0, coeff);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = blowup_two("1/2");
        let u = vec![rat(1, 8), rat(-1, 8)];
        let po: LaurentPolyNov<GaussQ> = build_po0(&p, &u, &[]).unwrap();
        let grads = po.gradient();
        let t = 0.17;
        let pts = [
            vec![C64::new(0.9, 0.3), C64::new(-0.7, 0.45)],
            vec![C64::new(1.1, -0.2), C64::new(0.4, 0.8)],
        ];
        let h = 1e-5;
        for y in pts {
            for j in 0..2 {
                // y_j d/dy_j f = d/dx_j f(e^{x}) at x_j = log y_j
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[j] *= C64::new(h, 0.0).exp();
                ym[j] *= C64::new(-h, 0.0).exp();
                let num =
                    (po.eval_numeric(&yp, t) - po.eval_numeric(&ym, t)) / C64::new(2.0 * h, 0.0);
                let sym = grads[j].eval_numeric(&y, t);
                assert!(
                    (num - sym).norm() / sym.norm().max(1.0) < 1e-6,
                    "fd mismatch: {num} vs {sym}"
                );
            }
        }
    }

    #[test]
    fn hessian_block_of_pure_linear_level_vanishes(){
        // Counterexample geometry: at (u₁, β₀) the second-level block is
        // degenerate in the new variable because both monomials are linear
        // in it.
        let p = crate::polytope::parse_polytope(
            r#"
name = "two-point blow-up, skew"
dim = 2
[params]
alpha = "1/2"
beta = "1/4"
[[facets]]
v = [1, 0]
lambda = "0"
[[facets]]
v = [0, 1]
lambda = "0"
[[facets]]
v = [0, -1]
lambda = "alpha - 1"
[[facets]]
v = [-1, -1]
lambda = "-1"
[[facets]]
v = [1, 1]
lambda = "beta"
"#,
            &[],
        )
        .unwrap();
        let u = vec![rat(3, 10), rat(1, 4)];
        let ls = level_structure_at(&p, &u).unwrap();
        let basis = integer_basis(&p, &ls).unwrap();
        let sys = leading_term_system(&p, &u, &ls, &basis, &[]).unwrap();
        let blocks: Vec<&LevelBlock> = sys.equation_blocks().collect();
        assert_eq!(blocks.len(), 2);
        // level 2 block: monomials y₁ and y₁y₂ are both degree 1 in the new
        // variable, so the 1×1 second-derivative block vanishes identically.
        let pt = to_level_point(&basis, &[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]);
        let h2 = sys.hessian_block(blocks[1], &pt).unwrap();
        assert!(h2[0][0].norm() < 1e-12);
        // CP² at (1,1): the full 2×2 block is invertible
        let q = cp2();
        let v = vec![rat(1, 3), rat(1, 3)];
        let lsq = level_structure_at(&q, &v).unwrap();
        let bq = integer_basis(&q, &lsq).unwrap();
        let sq = leading_term_system(&q, &v, &lsq, &bq, &[]).unwrap();
        let b0: Vec<&LevelBlock> = sq.equation_blocks().collect();
        let h = sq
            .hessian_block(b0[0], &[C64::new(1.0, 0.0), C64::new(1.0, 0.0)])
            .unwrap();
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        assert!(det.norm() > 1e-8);
    }
}
