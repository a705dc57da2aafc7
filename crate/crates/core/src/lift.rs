//! Lifting strongly nondegenerate leading-term solutions to truncated
//! Novikov-series critical points, and the solvability threshold of the
//! critical equations at a fiber.
//!
//! The correction exponents live in the monoid generated by the gaps
//! S_{k'} − S_k between level values (plus any extra-term shifts). At each
//! monoid element λ, walking levels from the bottom, the defect coefficient
//! of T^λ is killed by solving a constant linear system whose matrix is the
//! per-level Hessian at the leading coefficients; strong nondegeneracy is
//! exactly its invertibility, so the walk never stalls.

use num_traits::Zero;
use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::QVec;
use crate::locator::level_structure_unchecked;
use crate::lte::{self, Degeneracy, LTESolution, Tolerances};
use crate::novikov::{Exponent, NovikovSeries, Order, Valuation};
use crate::polytope::MomentPolytope;
use crate::potential::{
    build_po0_unchecked, leading_term_system, po0_in_level_vars, ExtraTerm, LaurentPolyNov,
    LeadingTermSystem,
};
use crate::scalar::{fmt_rat, recognize_gauss, Coeff, CoeffMode, GaussQ, Rat, C64};

/// The additive monoid of possible correction exponents.
#[derive(Clone, Debug)]
pub struct ExponentMonoid {
    generators: Vec<Rat>,
}

impl ExponentMonoid {
    pub fn new(mut generators: Vec<Rat>) -> Self {
        generators.retain(|g| g > &Rat::zero());
        generators.sort();
        generators.dedup();
        ExponentMonoid { generators }
    }

    /// Generators from the T-exponent gaps of a leading term system.
    pub fn from_system(sys: &LeadingTermSystem) -> Self {
        let mut gens = Vec::new();
        let eq_levels: Vec<&Rat> = sys
            .equation_blocks()
            .filter(|b| b.num_new_vars > 0)
            .map(|b| &b.s_value)
            .collect();
        for block in &sys.blocks {
            for s_k in &eq_levels {
                let gap = &block.s_value - *s_k;
                if gap > Rat::zero() {
                    gens.push(gap);
                }
            }
        }
        ExponentMonoid::new(gens)
    }

    pub fn generators(&self) -> &[Rat] {
        &self.generators
    }

    /// Sorted monoid elements strictly below `cap` (0 excluded), bounded in
    /// count as a safety net.
    pub fn elements_below(&self, cap: &Rat, max_count: usize) -> Vec<Rat> {
        let mut seen: BTreeSet<Rat> = BTreeSet::new();
        let mut frontier: BTreeSet<Rat> = self
            .generators
            .iter()
            .filter(|g| *g < cap)
            .cloned()
            .collect();
        while let Some(x) = frontier.iter().next().cloned() {
            frontier.remove(&x);
            if !seen.insert(x.clone()) {
                continue;
            }
            if seen.len() >= max_count {
                break;
            }
            for g in &self.generators {
                let y = &x + g;
                if &y < cap && !seen.contains(&y) {
                    frontier.insert(y);
                }
            }
        }
        seen.into_iter().collect()
    }
}

/// A truncated critical point of the potential at a fixed fiber.
#[derive(Clone, Debug)]
pub struct LiftedCriticalPoint<C: Coeff> {
    pub u: QVec,
    /// Critical coordinates in the original variables; units of Λ₀.
    pub y: Vec<NovikovSeries<C>>,
    /// Same point in the adapted level coordinates.
    pub y_level: Vec<NovikovSeries<C>>,
    /// Corrections were computed for all monoid exponents below this order.
    pub order: Exponent,
    /// Certified lower bound for the valuation of every component of the
    /// (raw) logarithmic gradient, verified by substitution.
    pub residual_valuation: Exponent,
    pub critical_value: NovikovSeries<C>,
    pub mode: CoeffMode,
}

impl<C: Coeff> fmt::Display for LiftedCriticalPoint<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, y) in self.y.iter().enumerate() {
            writeln!(f, "y{} = {}", i + 1, y)?;
        }
        write!(f, "value = {}", self.critical_value)
    }
}

/// Normalized level equations: for each equation variable (k,j), the
/// Laurent polynomial T^{−S_k} · y_{k,j} ∂PO₀/∂y_{k,j} in level variables.
fn normalized_equations<C: Coeff>(sys: &LeadingTermSystem) -> Vec<(usize, LaurentPolyNov<C>)> {
    let mut eqs = Vec::new();
    for block in sys.equation_blocks().filter(|b| b.num_new_vars > 0) {
        for var in sys.vars_of_block(block) {
            let mut poly = LaurentPolyNov::new(sys.var_names.clone());
            for other in &sys.blocks {
                let shift = &other.s_value - &block.s_value;
                for (exps, q) in &other.monomials {
                    if exps[var] == 0 {
                        continue;
                    }
                    let c = C::from_rat(&(q * Rat::from_integer(exps[var].into())));
                    poly.add_term(
                        exps.clone(),
                        NovikovSeries::monomial(c, Exponent::new(shift.clone())),
                    );
                }
            }
            eqs.push((var, poly));
        }
    }
    eqs
}

/// The per-level correction matrices ∂E_{k,j}/∂y_{k,j'} at the leading
/// coefficients (the T⁰ part of the linearization).
type BlockMatrix<C> = (Vec<usize>, Vec<Vec<C>>);

fn level_matrices<C: Coeff>(sys: &LeadingTermSystem, leading: &[C]) -> Result<Vec<BlockMatrix<C>>> {
    let mut out = Vec::new();
    for block in sys.equation_blocks().filter(|b| b.num_new_vars > 0) {
        let vars = sys.vars_of_block(block);
        let d = vars.len();
        let mut m = vec![vec![C::zero(); d]; d];
        for (r, &vr) in vars.iter().enumerate() {
            for (c, &vc) in vars.iter().enumerate() {
                let mut acc = C::zero();
                for (exps, q) in &block.monomials {
                    let f = exps[vr] * exps[vc];
                    if f == 0 {
                        continue;
                    }
                    let mut term = C::from_rat(&(q * Rat::from_integer(f.into())));
                    for (pos, &e) in exps.iter().enumerate() {
                        let mut ee = e;
                        if pos == vc {
                            ee -= 1;
                        }
                        term = term * coeff_powi(&leading[pos], ee)?;
                    }
                    acc = acc + term;
                }
                m[r][c] = acc;
            }
        }
        out.push((vars, m));
    }
    Ok(out)
}

fn coeff_powi<C: Coeff>(base: &C, e: i64) -> Result<C> {
    if e == 0 {
        return Ok(C::one());
    }
    let b = if e < 0 {
        base.coeff_inv()
            .ok_or(Error::ZeroCoordinate(usize::MAX))?
    } else {
        base.clone()
    };
    let mut acc = C::one();
    for _ in 0..e.unsigned_abs() {
        acc = acc * b.clone();
    }
    Ok(acc)
}

/// Dense Gaussian elimination over the coefficient field; pivots by the
/// float shadow of the entries.
fn solve_c<C: Coeff>(a: &[Vec<C>], b: &[C]) -> Option<Vec<C>> {
    let n = a.len();
    let mut m: Vec<Vec<C>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for c in 0..n {
        let (p, mag) = (c..n)
            .map(|i| (i, m[i][c].approx().norm()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())?;
        if mag < 1e-13 {
            return None;
        }
        m.swap(c, p);
        let inv = m[c][c].coeff_inv()?;
        for j in c..=n {
            m[c][j] = m[c][j].clone() * inv.clone();
        }
        for i in 0..n {
            if i != c && !m[i][c].is_negligible() {
                let f = m[i][c].clone();
                for j in c..=n {
                    let sub = m[c][j].clone() * f.clone();
                    m[i][j] = m[i][j].clone() - sub;
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n].clone()).collect())
}

fn det_c<C: Coeff>(a: &[Vec<C>]) -> C {
    let n = a.len();
    let mut m = a.to_vec();
    let mut d = C::one();
    for c in 0..n {
        let Some((p, mag)) = (c..n)
            .map(|i| (i, m[i][c].approx().norm()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
        else {
            return C::zero();
        };
        if mag == 0.0 {
            return C::zero();
        }
        if p != c {
            m.swap(c, p);
            d = -d;
        }
        d = d * m[c][c].clone();
        let Some(inv) = m[c][c].coeff_inv() else {
            return C::zero();
        };
        for i in (c + 1)..n {
            if m[i][c].is_negligible() {
                continue;
            }
            let f = m[i][c].clone() * inv.clone();
            for j in c..n {
                let sub = m[c][j].clone() * f.clone();
                m[i][j] = m[i][j].clone() - sub;
            }
        }
    }
    d
}

/// Core induction: corrects the leading coefficients over the monoid stream
/// until every normalized equation vanishes modulo T^order.
fn lift_core<C: Coeff>(
    sys: &LeadingTermSystem,
    leading: &[C],
    order: &Exponent,
) -> Result<Vec<NovikovSeries<C>>> {
    let work = Order::Finite(order.clone());
    let eqs: Vec<(usize, LaurentPolyNov<C>)> = normalized_equations(sys);
    let mats = level_matrices(sys, leading)?;
    // strong nondegeneracy of every block
    for (vars, m) in &mats {
        let d = det_c(m);
        if d.is_negligible() || d.approx().norm() < 1e-10 {
            return Err(Error::DegenerateHessian(vars[0], d.approx().norm()));
        }
    }
    let mut y: Vec<NovikovSeries<C>> = leading
        .iter()
        .map(|c| NovikovSeries::constant(c.clone()).truncate_to(work.clone()))
        .collect();
    let monoid = ExponentMonoid::from_system(sys);
    let lambdas = monoid.elements_below(order.rat(), 4096);
    for lambda in &lambdas {
        let le = Exponent::new(lambda.clone());
        for (vars, m) in &mats {
            // defect coefficients of T^λ for this block's equations
            let mut defect = Vec::with_capacity(vars.len());
            for &var in vars {
                let (_, poly) = eqs
                    .iter()
                    .find(|(v, _)| *v == var)
                    .expect("equation for variable");
                let val = poly.eval_series(&y)?;
                defect.push(val.coeff(&le));
            }
            if defect.iter().all(|c| c.is_negligible()) {
                continue;
            }
            let neg: Vec<C> = defect.into_iter().map(|c| -c).collect();
            let delta = solve_c(m, &neg).ok_or_else(|| {
                Error::Internal("level correction system became singular".into())
            })?;
            for (&var, dv) in vars.iter().zip(&delta) {
                y[var] = y[var]
                    .add_ref(&NovikovSeries::monomial(dv.clone(), le.clone()))
                    .truncate_to(work.clone());
            }
        }
    }
    // postcondition: all normalized equations ≡ 0 mod T^order
    for (var, poly) in &eqs {
        let val = poly.eval_series(&y)?;
        if !val.valuation().at_least(order) {
            return Err(Error::Internal(format!(
                "lift residual for variable {var} has valuation {} < {order}",
                val.valuation()
            )));
        }
    }
    Ok(y)
}

fn assemble<C: Coeff>(
    sys: &LeadingTermSystem,
    u: &QVec,
    y_level: Vec<NovikovSeries<C>>,
    order: &Exponent,
) -> Result<LiftedCriticalPoint<C>> {
    // back to original coordinates through the unimodular inverse
    let n = sys.n();
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = NovikovSeries::one().truncate_to(Order::Finite(order.clone()));
        for (r, w) in y_level.iter().enumerate() {
            let e = sys.basis.inv[i][r];
            if e != 0 {
                acc = acc.mul_ref(&w.pow_i64(e)?);
            }
        }
        y.push(acc);
    }
    let po_level: LaurentPolyNov<C> = po0_in_level_vars(sys);
    let critical_value = po_level.eval_series(&y_level)?;
    // residual bound: order + S₁ on the raw gradient (S₁ from the lowest
    // equation level)
    let s1 = sys
        .equation_blocks()
        .filter(|b| b.num_new_vars > 0)
        .map(|b| b.s_value.clone())
        .next()
        .unwrap_or_else(Rat::zero);
    Ok(LiftedCriticalPoint {
        u: u.clone(),
        y,
        y_level,
        order: order.clone(),
        residual_valuation: Exponent::new(order.rat() + &s1),
        critical_value,
        mode: C::MODE,
    })
}

/// Lifts a strongly nondegenerate numeric solution.
pub fn lift_numeric(
    sys: &LeadingTermSystem,
    sol: &LTESolution,
    order: &Exponent,
) -> Result<LiftedCriticalPoint<C64>> {
    if sol.degeneracy != Degeneracy::Strong {
        return Err(Error::NotStrong(sol.degeneracy.to_string()));
    }
    // re-polish to the convergence floor: the T⁰ defect of the induction is
    // whatever residual the leading coefficients carry
    let leading = match lte::polish_full(sys, &sol.values) {
        Some((polished, res)) if res < 1e-12 => polished,
        _ => sol.values.clone(),
    };
    let y_level = lift_core(sys, &leading, order)?;
    assemble(sys, &sys.u, y_level, order)
}

/// Lifts with exact Gaussian-rational arithmetic. The leading coefficients
/// must satisfy the leading term equations exactly.
pub fn lift_exact(
    sys: &LeadingTermSystem,
    leading: &[GaussQ],
    order: &Exponent,
) -> Result<LiftedCriticalPoint<GaussQ>> {
    for block in sys.equation_blocks().filter(|b| b.num_new_vars > 0) {
        for var in sys.vars_of_block(block) {
            let mut acc = GaussQ::zero();
            for (ccoeff, exps) in sys_lte_terms(block, var) {
                let mut term = ccoeff;
                for (pos, &e) in exps.iter().enumerate() {
                    term *= coeff_powi(&leading[pos], e)?;
                }
                acc += term;
            }
            if !acc.is_negligible() {
                return Err(Error::Internal(
                    "exact leading coefficients do not solve the leading term equations".into(),
                ));
            }
        }
    }
    let y_level = lift_core(sys, leading, order)?;
    assemble(sys, &sys.u, y_level, order)
}

fn sys_lte_terms(
    block: &crate::potential::LevelBlock,
    var: usize,
) -> Vec<(GaussQ, Vec<i64>)> {
    block
        .monomials
        .iter()
        .filter(|(e, _)| e[var] != 0)
        .map(|(e, q)| {
            (
                GaussQ::from_rat(&(q * Rat::from_integer(e[var].into()))),
                e.clone(),
            )
        })
        .collect()
}

/// Attempts to recognize a numeric solution as exact Gaussian rationals.
pub fn recognize_solution(sol: &LTESolution, max_den: u64) -> Option<Vec<GaussQ>> {
    sol.values
        .iter()
        .map(|z| recognize_gauss(*z, max_den, 1e-9))
        .collect()
}

// ---------------------------------------------------------------------------
// substitution check
// ---------------------------------------------------------------------------

/// Valuations of the logarithmic gradient of PO₀ at an explicit point.
#[derive(Clone, Debug)]
pub struct CheckMod {
    pub valuations: Vec<Valuation>,
    pub all_at_least: bool,
}

/// Substitutes y into the critical equations at u and reports whether each
/// partial vanishes modulo T^λ.
pub fn check_mod<C: Coeff>(
    p: &MomentPolytope,
    u: &QVec,
    y: &[NovikovSeries<C>],
    lambda: &Exponent,
    extras: &[ExtraTerm],
) -> Result<CheckMod> {
    for (i, yi) in y.iter().enumerate() {
        if !yi.is_unit() {
            return Err(Error::NotAUnit(format!("y{} has valuation {}", i + 1, yi.valuation())));
        }
    }
    let po: LaurentPolyNov<C> = build_po0_unchecked(p, u, extras);
    let mut valuations = Vec::with_capacity(p.dim);
    let mut ok = true;
    for j in 0..p.dim {
        let g = po.log_derivative(j).eval_series(y)?;
        // the congruence mod T^λ is only decidable when the substituted
        // gradient is known past λ
        if !g.trunc().covers(lambda) {
            return Err(Error::TruncationTooShort(
                g.trunc().to_string(),
                lambda.to_string(),
            ));
        }
        let v = g.valuation();
        if !v.at_least(lambda) {
            ok = false;
        }
        valuations.push(v);
    }
    Ok(CheckMod {
        valuations,
        all_at_least: ok,
    })
}

// ---------------------------------------------------------------------------
// threshold
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum ThresholdOutcome {
    /// The critical equations are solvable modulo T^λ exactly up to
    /// λ = s_value and no further: 𝔈(u) = s_value.
    Obstructed { level: usize, s_value: Rat },
    /// An exact critical point exists to the verification cap; the
    /// threshold is at least the cap (morally +∞).
    AtLeastCap { cap: Rat },
    /// Some level was solvable only degenerately; the supremum is not
    /// claimed. 𝔈(u) ≥ s_value holds.
    LowerBoundOnly { level: usize, s_value: Rat },
}

impl fmt::Display for ThresholdOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdOutcome::Obstructed { s_value, level } => {
                write!(f, "{} (first unsolvable level {})", fmt_rat(s_value), level + 1)
            }
            ThresholdOutcome::AtLeastCap { cap } => write!(f, ">= {} (balanced to cap)", fmt_rat(cap)),
            ThresholdOutcome::LowerBoundOnly { s_value, level } => write!(
                f,
                ">= {} (LOWER BOUND ONLY: level {} solvable but degenerate)",
                fmt_rat(s_value),
                level + 1
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ThresholdReport {
    pub u: QVec,
    pub outcome: ThresholdOutcome,
    /// Witness critical point when the fiber is balanced to the cap.
    pub witness: Option<LiftedCriticalPoint<C64>>,
}

/// Default verification order: the 10th monoid element or 3·S_K, whichever
/// is smaller (and 3·S_K when the monoid is trivial).
pub fn default_cap(sys: &LeadingTermSystem) -> Rat {
    let s_last = sys
        .blocks
        .iter()
        .filter(|b| b.level < sys.rank_limit)
        .map(|b| b.s_value.clone())
        .max()
        .unwrap_or_else(|| Rat::from_integer(1.into()));
    let cap3 = Rat::from_integer(3.into()) * s_last;
    let monoid = ExponentMonoid::from_system(sys);
    let elems = monoid.elements_below(&cap3, 10);
    match elems.last() {
        Some(last) if elems.len() >= 10 => last.clone(),
        _ => cap3,
    }
}

/// Walks the levels at u in increasing order, following every solution
/// branch, and reports the PO-threshold data of the fiber.
pub fn po_threshold(
    p: &MomentPolytope,
    u: &QVec,
    cap: Option<Rat>,
    tol: &Tolerances,
) -> Result<ThresholdReport> {
    p.require_interior(u)?;
    let levels = level_structure_unchecked(p, u);
    let basis = crate::locator::integer_basis(p, &levels)?;
    let sys = leading_term_system(p, u, &levels, &basis, &[])?;
    let cap = cap.unwrap_or_else(|| default_cap(&sys));
    let blocks: Vec<&crate::potential::LevelBlock> = sys
        .equation_blocks()
        .filter(|b| b.num_new_vars > 0)
        .collect();

    // DFS with obstruction tracking
    struct Walk<'a> {
        sys: &'a LeadingTermSystem,
        blocks: &'a [&'a crate::potential::LevelBlock],
        tol: &'a Tolerances,
        best_dead: Option<(usize, Rat)>,
        degenerate_seen: Option<(usize, Rat)>,
        strong_branch: Option<Vec<C64>>,
    }
    impl Walk<'_> {
        fn go(&mut self, level: usize, fixed: Vec<C64>, all_strong: bool) -> Result<()> {
            if self.strong_branch.is_some() {
                return Ok(());
            }
            if level == self.blocks.len() {
                if all_strong {
                    self.strong_branch = Some(fixed);
                }
                return Ok(());
            }
            let block = self.blocks[level];
            let (sols, _complete, family) =
                lte::solve_level(self.sys, block, &fixed, self.tol)?;
            if sols.is_empty() {
                let cand = (block.level, block.s_value.clone());
                if self
                    .best_dead
                    .as_ref()
                    .map(|(_, s)| cand.1 > *s)
                    .unwrap_or(true)
                {
                    self.best_dead = Some(cand);
                }
                return Ok(());
            }
            if family && self.degenerate_seen.is_none() {
                self.degenerate_seen = Some((block.level, block.s_value.clone()));
            }
            let vars = self.sys.vars_of_block(block);
            for w in sols {
                let mut next = fixed.clone();
                for (pos, &v) in vars.iter().enumerate() {
                    next[v] = w[pos];
                }
                // strongness of this link: invertible Hessian block
                let strong = if family {
                    false
                } else {
                    let h = self.sys.hessian_block(block, &next)?;
                    let scale = h
                        .iter()
                        .flat_map(|r| r.iter().map(|z| z.norm()))
                        .fold(1.0f64, f64::max);
                    crate::linalg::cdet(&h).norm() > self.tol.hessian * scale
                };
                self.go(level + 1, next, all_strong && strong)?;
                if self.strong_branch.is_some() {
                    return Ok(());
                }
            }
            Ok(())
        }
    }
    let mut walk = Walk {
        sys: &sys,
        blocks: &blocks,
        tol,
        best_dead: None,
        degenerate_seen: None,
        strong_branch: None,
    };
    walk.go(0, vec![C64::new(0.0, 0.0); sys.n()], true)?;

    if let Some(leading) = walk.strong_branch {
        let witness = {
            let sol = LTESolution {
                values: leading,
                residual: 0.0,
                degeneracy: Degeneracy::Strong,
                multiplicity: Some(1),
                family: false,
            };
            lift_numeric(&sys, &sol, &Exponent::new(cap.clone()))?
        };
        return Ok(ThresholdReport {
            u: u.clone(),
            outcome: ThresholdOutcome::AtLeastCap { cap },
            witness: Some(witness),
        });
    }
    if let Some((level, s_value)) = walk.best_dead {
        // a branch may also have passed through a degenerate level deeper
        // than the obstruction; prefer the honest lower bound in that case
        if let Some((dl, ds)) = walk.degenerate_seen {
            if ds >= s_value {
                return Ok(ThresholdReport {
                    u: u.clone(),
                    outcome: ThresholdOutcome::LowerBoundOnly {
                        level: dl,
                        s_value: ds,
                    },
                    witness: None,
                });
            }
        }
        return Ok(ThresholdReport {
            u: u.clone(),
            outcome: ThresholdOutcome::Obstructed { level, s_value },
            witness: None,
        });
    }
    let (dl, ds) = walk
        .degenerate_seen
        .ok_or_else(|| Error::Internal("threshold walk ended without outcome".into()))?;
    Ok(ThresholdReport {
        u: u.clone(),
        outcome: ThresholdOutcome::LowerBoundOnly {
            level: dl,
            s_value: ds,
        },
        witness: None,
    })
}

/// PO₀ evaluated at the critical point, to the lift order.
pub fn critical_value<C: Coeff>(
    po: &LaurentPolyNov<C>,
    y: &[NovikovSeries<C>],
) -> Result<NovikovSeries<C>> {
    po.eval_series(y)
}
