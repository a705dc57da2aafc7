//! Solving leading term systems over (ℂ*)^d and counting balanced fibers.
//!
//! Per level the system is polynomial after clearing denominators. The
//! solver dispatches on the number of unknowns:
//!   d = 1  all roots from companion-matrix eigenvalues;
//!   d = 2  resultant elimination (Sylvester determinant by evaluation and
//!          interpolation) followed by back-substitution;
//!   d ≥ 3  seeded multistart Newton — completeness is then not guaranteed
//!          and the result carries a flag saying so.
//! Every accepted root is polished by Newton and checked against all
//! equations of its level.

use nalgebra::DMatrix;
use num_traits::{Signed, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, QVec};
use crate::locator::{integer_basis, level_structure_unchecked};
use crate::polytope::MomentPolytope;
use crate::potential::{leading_term_system, LeadingTermSystem, LevelBlock};
use crate::scalar::{Rat, C64};

/// Numerical thresholds of the solving pipeline, all overridable.
#[derive(Clone, Debug)]
pub struct Tolerances {
    /// Max |equation| accepted for a root after polish.
    pub root_residual: f64,
    /// Minimum |det| of a per-level Hessian block to call it invertible.
    pub hessian: f64,
    /// Distance under which two roots are the same root.
    pub cluster: f64,
    /// Seed of the multistart generator (results are deterministic per seed).
    pub seed: u64,
    /// Number of Newton starts per system in the d ≥ 3 fallback.
    pub starts: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            root_residual: 1e-9,
            hessian: 1e-8,
            cluster: 1e-7,
            seed: 0,
            starts: 160,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Degeneracy {
    Strong,
    Weak,
    Degenerate,
}

impl fmt::Display for Degeneracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degeneracy::Strong => write!(f, "strong"),
            Degeneracy::Weak => write!(f, "weak"),
            Degeneracy::Degenerate => write!(f, "degenerate"),
        }
    }
}

/// One solution of the full leading term system, in level coordinates.
#[derive(Clone, Debug)]
pub struct LTESolution {
    pub values: Vec<C64>,
    pub residual: f64,
    pub degeneracy: Degeneracy,
    /// Exact multiplicity when the univariate reduction provides it.
    pub multiplicity: Option<usize>,
    /// Member of a positive-dimensional solution family (free coordinate).
    pub family: bool,
}

/// Solutions of the whole system plus solver bookkeeping.
#[derive(Clone, Debug)]
pub struct LTEOutcome {
    pub solutions: Vec<LTESolution>,
    /// False when a d ≥ 3 block was solved by multistart only.
    pub complete: bool,
    /// True when some branch ran into a free variable.
    pub has_family: bool,
}

type Term = (C64, Vec<i64>);

/// Equations of one block after substituting the fixed lower-level values:
/// terms carry exponents over the block's own unknowns only.
fn block_equations(
    sys: &LeadingTermSystem,
    block: &LevelBlock,
    fixed: &[C64],
) -> Vec<Vec<Term>> {
    let vars = sys.vars_of_block(block);
    let mut eqs = Vec::with_capacity(vars.len());
    for &var in &vars {
        let mut acc: BTreeMap<Vec<i64>, C64> = BTreeMap::new();
        for (coeff, exps) in sys.lte_equation(block, var) {
            let mut c = coeff;
            // substitute lower-level variables only; the block's own stay
            // symbolic
            for pos in 0..block.first_var {
                if exps[pos] != 0 {
                    c *= fixed[pos].powi(exps[pos] as i32);
                }
            }
            let key: Vec<i64> = vars.iter().map(|&v| exps[v]).collect();
            *acc.entry(key).or_insert_with(|| C64::new(0.0, 0.0)) += c;
        }
        let terms: Vec<Term> = acc
            .into_iter()
            .filter(|(_, c)| c.norm() > 1e-13)
            .map(|(e, c)| (c, e))
            .collect();
        eqs.push(terms);
    }
    eqs
}

fn eval_terms(terms: &[Term], w: &[C64]) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (c, exps) in terms {
        let mut m = *c;
        for (v, &e) in w.iter().zip(exps) {
            m *= v.powi(e as i32);
        }
        acc += m;
    }
    acc
}

/// ∂(terms)/∂w_j at w (coordinates nonzero).
fn eval_terms_d(terms: &[Term], w: &[C64], j: usize) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (c, exps) in terms {
        if exps[j] == 0 {
            continue;
        }
        let mut m = *c * C64::new(exps[j] as f64, 0.0);
        for (v, &e) in w.iter().zip(exps) {
            m *= v.powi(e as i32);
        }
        m *= w[j].finv();
        acc += m;
    }
    acc
}

fn newton_square(eqs: &[Vec<Term>], start: &[C64], iters: usize, tol: f64) -> Option<(Vec<C64>, f64)> {
    let d = start.len();
    let mut w = start.to_vec();
    for _ in 0..iters {
        let f: Vec<C64> = eqs.iter().map(|eq| eval_terms(eq, &w)).collect();
        let res = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if res < tol {
            return Some((w, res));
        }
        let jac: Vec<Vec<C64>> = eqs
            .iter()
            .map(|eq| (0..d).map(|j| eval_terms_d(eq, &w, j)).collect())
            .collect();
        let step = linalg::csolve(&jac, &f, 1e-14)?;
        for (wi, s) in w.iter_mut().zip(&step) {
            *wi -= s;
        }
        if w.iter().any(|z| !z.is_finite() || z.norm() < 1e-12) {
            return None;
        }
    }
    let res = eqs
        .iter()
        .map(|eq| eval_terms(eq, &w).norm())
        .fold(0.0, f64::max);
    Some((w, res))
}

// ---------------------------------------------------------------------------
// univariate machinery
// ---------------------------------------------------------------------------

/// All roots of Σ cᵢ xⁱ (ascending), companion matrix eigenvalues plus a
/// Newton polish. Roots at 0 are kept (the caller discards them).
pub fn univariate_roots(coeffs: &[C64]) -> Vec<C64> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    let mut cs: Vec<C64> = coeffs.iter().map(|c| c / scale).collect();
    while let Some(last) = cs.last() {
        if last.norm() < 1e-13 && cs.len() > 1 {
            cs.pop();
        } else {
            break;
        }
    }
    let deg = cs.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = cs[deg];
    let monic: Vec<C64> = cs.iter().map(|c| c / lead).collect();
    let mut roots: Vec<C64> = match deg {
        1 => vec![-monic[0]],
        2 => {
            let (b, c) = (monic[1], monic[0]);
            let disc = (b * b - C64::new(4.0, 0.0) * c).sqrt();
            vec![
                (-b + disc) / C64::new(2.0, 0.0),
                (-b - disc) / C64::new(2.0, 0.0),
            ]
        }
        _ => {
            let m = DMatrix::from_fn(deg, deg, |r, c| {
                if c == deg - 1 {
                    -monic[r]
                } else if r == c + 1 {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            match m.try_schur(1e-14, 4000) {
                Some(schur) => match schur.eigenvalues() {
                    Some(eig) => eig.iter().copied().collect(),
                    None => Vec::new(),
                },
                None => Vec::new(),
            }
        }
    };
    // polish on the original polynomial
    for r in roots.iter_mut() {
        for _ in 0..8 {
            let (mut p, mut dp) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            for c in cs.iter().rev() {
                dp = dp * *r + p;
                p = p * *r + c;
            }
            if dp.norm() < 1e-14 {
                break;
            }
            let step = p / dp;
            *r -= step;
            if step.norm() < 1e-15 {
                break;
            }
        }
    }
    roots
}

/// Clusters roots within `tol`; returns representatives with multiplicity.
fn cluster_roots(roots: &[C64], tol: f64) -> Vec<(C64, usize)> {
    let mut out: Vec<(C64, usize)> = Vec::new();
    for &r in roots {
        match out.iter_mut().find(|(c, _)| (*c - r).norm() < tol) {
            Some((_, m)) => *m += 1,
            None => out.push((r, 1)),
        }
    }
    out
}

/// Laurent terms in one variable → dense polynomial coefficients after
/// multiplying by x^{−min}.
fn laurent_to_poly(terms: &[(C64, i64)]) -> Vec<C64> {
    let min = terms.iter().map(|&(_, e)| e).min().unwrap_or(0);
    let max = terms.iter().map(|&(_, e)| e).max().unwrap_or(0);
    let mut coeffs = vec![C64::new(0.0, 0.0); (max - min + 1) as usize];
    for &(c, e) in terms {
        coeffs[(e - min) as usize] += c;
    }
    coeffs
}

// ---------------------------------------------------------------------------
// bivariate machinery: Sylvester resultant by evaluation/interpolation
// ---------------------------------------------------------------------------

struct BiPoly {
    // grid[(ex, ey)] with nonnegative exponents
    grid: BTreeMap<(i64, i64), C64>,
    degx: i64,
    degy: i64,
}

fn to_bipoly(terms: &[Term]) -> BiPoly {
    let minx = terms.iter().map(|(_, e)| e[0]).min().unwrap_or(0).min(0);
    let miny = terms.iter().map(|(_, e)| e[1]).min().unwrap_or(0).min(0);
    let mut grid = BTreeMap::new();
    let (mut degx, mut degy) = (0, 0);
    for (c, e) in terms {
        let ex = e[0] - minx;
        let ey = e[1] - miny;
        degx = degx.max(ex);
        degy = degy.max(ey);
        *grid.entry((ex, ey)).or_insert_with(|| C64::new(0.0, 0.0)) += *c;
    }
    BiPoly { grid, degx, degy }
}

impl BiPoly {
    /// Coefficients in y after substituting x = x0 (ascending in y).
    fn at_x(&self, x0: C64) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); (self.degy + 1) as usize];
        for (&(ex, ey), &c) in &self.grid {
            out[ey as usize] += c * x0.powi(ex as i32);
        }
        out
    }
}

fn sylvester_det(p: &[C64], q: &[C64]) -> C64 {
    let dp = p.len() - 1;
    let dq = q.len() - 1;
    if dp == 0 {
        return p[0].powi(dq as i32);
    }
    if dq == 0 {
        return q[0].powi(dp as i32);
    }
    let n = dp + dq;
    let mut m = vec![vec![C64::new(0.0, 0.0); n]; n];
    for row in 0..dq {
        for (i, c) in p.iter().enumerate() {
            m[row][row + dp - i] = *c;
        }
    }
    for row in 0..dp {
        for (i, c) in q.iter().enumerate() {
            m[dq + row][row + dq - i] = *c;
        }
    }
    linalg::cdet(&m)
}

/// Roots (x-values) of res_y(p, q) away from zero, by sampling the
/// determinant on a circle and interpolating the polynomial in x.
fn resultant_roots(p: &BiPoly, q: &BiPoly) -> Vec<C64> {
    let bound = (p.degx * q.degy + q.degx * p.degy) as usize;
    if bound == 0 {
        return Vec::new();
    }
    let samples = bound + 1;
    let mut xs = Vec::with_capacity(samples);
    let mut vals = Vec::with_capacity(samples);
    for k in 0..samples {
        let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.37) / samples as f64;
        let x0 = C64::new(1.2046 * theta.cos(), 1.2046 * theta.sin());
        xs.push(x0);
        vals.push(sylvester_det(&p.at_x(x0), &q.at_x(x0)));
    }
    // Vandermonde solve for the coefficients
    let vmat: Vec<Vec<C64>> = xs
        .iter()
        .map(|&x| (0..samples).map(|e| x.powi(e as i32)).collect())
        .collect();
    let Some(coeffs) = linalg::csolve(&vmat, &vals, 1e-300) else {
        return Vec::new();
    };
    univariate_roots(&coeffs)
}

// ---------------------------------------------------------------------------
// per-level solving
// ---------------------------------------------------------------------------

struct LevelSolutions {
    /// Solutions over the block's unknowns, with multiplicity when exact.
    sols: Vec<(Vec<C64>, Option<usize>)>,
    complete: bool,
    family: bool,
}

fn solve_block(eqs_in: &[Vec<Term>], d: usize, tol: &Tolerances) -> Result<LevelSolutions> {
    // prune trivially satisfied equations and detect dead constants
    let mut eqs: Vec<Vec<Term>> = Vec::new();
    for eq in eqs_in {
        if eq.is_empty() {
            continue;
        }
        if eq.iter().all(|(_, e)| e.iter().all(|&x| x == 0)) {
            let c: C64 = eq.iter().map(|(c, _)| *c).sum();
            if c.norm() > tol.root_residual.max(1e-9) {
                return Ok(LevelSolutions {
                    sols: Vec::new(),
                    complete: true,
                    family: false,
                });
            }
            continue;
        }
        eqs.push(eq.clone());
    }
    let used: Vec<usize> = (0..d)
        .filter(|&j| eqs.iter().any(|eq| eq.iter().any(|(_, e)| e[j] != 0)))
        .collect();
    let family = used.len() < d;
    if eqs.is_empty() {
        // every variable is free
        return Ok(LevelSolutions {
            sols: vec![(vec![C64::new(1.0, 0.0); d], None)],
            complete: true,
            family: true,
        });
    }
    // restrict exponents to used variables
    let proj = |eq: &Vec<Term>| -> Vec<Term> {
        eq.iter()
            .map(|(c, e)| (*c, used.iter().map(|&j| e[j]).collect()))
            .collect()
    };
    let peqs: Vec<Vec<Term>> = eqs.iter().map(proj).collect();
    let (sub_sols, complete) = match used.len() {
        1 => (solve_univariate_system(&peqs, tol), true),
        2 => (solve_bivariate_system(&peqs, tol), true),
        k => (solve_multistart(&peqs, k, tol), false),
    };
    // lift back to d coordinates, free variables pinned at 1
    let sols = sub_sols
        .into_iter()
        .map(|(vals, m)| {
            let mut w = vec![C64::new(1.0, 0.0); d];
            for (pos, &j) in used.iter().enumerate() {
                w[j] = vals[pos];
            }
            (w, if family { None } else { m })
        })
        .collect();
    Ok(LevelSolutions {
        sols,
        complete,
        family,
    })
}

fn solve_univariate_system(eqs: &[Vec<Term>], tol: &Tolerances) -> Vec<(Vec<C64>, Option<usize>)> {
    let main: Vec<(C64, i64)> = eqs[0].iter().map(|(c, e)| (*c, e[0])).collect();
    let coeffs = laurent_to_poly(&main);
    let roots = univariate_roots(&coeffs);
    let mut out = Vec::new();
    for (root, mult) in cluster_roots(&roots, tol.cluster) {
        if root.norm() < 1e-8 {
            continue; // artifact of clearing denominators
        }
        let Some((polished, res)) = newton_square(eqs, &[root], 24, tol.root_residual) else {
            continue;
        };
        if res < tol.root_residual
            && !out
                .iter()
                .any(|(w, _): &(Vec<C64>, Option<usize>)| (w[0] - polished[0]).norm() < tol.cluster)
        {
            out.push((polished, Some(mult)));
        }
    }
    out
}

fn solve_bivariate_system(eqs: &[Vec<Term>], tol: &Tolerances) -> Vec<(Vec<C64>, Option<usize>)> {
    let (p, q) = if eqs.len() >= 2 {
        (to_bipoly(&eqs[0]), to_bipoly(&eqs[1]))
    } else {
        // one equation in two unknowns: positive-dimensional; represent by
        // a single sample with a free flag handled upstream via family
        return Vec::new();
    };
    let mut out: Vec<(Vec<C64>, Option<usize>)> = Vec::new();
    let push = |w: Vec<C64>, out: &mut Vec<(Vec<C64>, Option<usize>)>| {
        if !out
            .iter()
            .any(|(v, _)| (v[0] - w[0]).norm() < tol.cluster && (v[1] - w[1]).norm() < tol.cluster)
        {
            out.push((w, Some(1)));
        }
    };
    for x in resultant_roots(&p, &q) {
        if x.norm() < 1e-8 {
            continue;
        }
        // back-substitute into whichever equation still depends on y
        let py = p.at_x(x);
        let qy = q.at_x(x);
        let mut cands: Vec<C64> = Vec::new();
        if py.len() > 1 {
            cands.extend(univariate_roots(&py));
        }
        if qy.len() > 1 {
            cands.extend(univariate_roots(&qy));
        }
        for y in cands {
            if y.norm() < 1e-8 {
                continue;
            }
            let Some((polished, res)) = newton_square(eqs, &[x, y], 32, tol.root_residual) else {
                continue;
            };
            if res < tol.root_residual {
                push(polished, &mut out);
            }
        }
    }
    // multiplicity from the clustered count is unreliable after the 2D
    // polish; report simple roots only when the Jacobian is nonsingular
    for (w, mult) in out.iter_mut() {
        let jac: Vec<Vec<C64>> = eqs
            .iter()
            .take(2)
            .map(|eq| (0..2).map(|j| eval_terms_d(eq, w, j)).collect())
            .collect();
        if linalg::cdet(&jac).norm() < tol.hessian {
            *mult = None;
        }
    }
    out
}

fn solve_multistart(eqs: &[Vec<Term>], d: usize, tol: &Tolerances) -> Vec<(Vec<C64>, Option<usize>)> {
    let mut rng = StdRng::seed_from_u64(tol.seed);
    let mut out: Vec<(Vec<C64>, Option<usize>)> = Vec::new();
    for _ in 0..tol.starts {
        let start: Vec<C64> = (0..d)
            .map(|_| {
                let r = 4.0f64.powf(rng.random_range(-1.0..1.0));
                let th = rng.random_range(0.0..(2.0 * std::f64::consts::PI));
                C64::new(r * th.cos(), r * th.sin())
            })
            .collect();
        let Some((w, res)) = newton_square(eqs, &start, 64, tol.root_residual) else {
            continue;
        };
        if res < tol.root_residual
            && w.iter().all(|z| z.norm() > 1e-8)
            && !out
                .iter()
                .any(|(v, _)| v.iter().zip(&w).all(|(a, b)| (a - b).norm() < tol.cluster))
        {
            out.push((w, None));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// full system
// ---------------------------------------------------------------------------

/// Solutions of a single level given fixed lower-level values.
pub fn solve_level(
    sys: &LeadingTermSystem,
    block: &LevelBlock,
    fixed: &[C64],
    tol: &Tolerances,
) -> Result<(Vec<Vec<C64>>, bool, bool)> {
    let eqs = block_equations(sys, block, fixed);
    let out = solve_block(&eqs, block.num_new_vars, tol)?;
    Ok((
        out.sols.into_iter().map(|(w, _)| w).collect(),
        out.complete,
        out.family,
    ))
}

/// Depth-first product of the per-level solution sets, classified by the
/// per-level Hessian blocks.
pub fn solve_full(sys: &LeadingTermSystem, tol: &Tolerances) -> Result<LTEOutcome> {
    let n = sys.n();
    let blocks: Vec<&LevelBlock> = sys
        .equation_blocks()
        .filter(|b| b.num_new_vars > 0)
        .collect();
    let mut solutions: Vec<LTESolution> = Vec::new();
    let mut complete = true;
    let mut has_family = false;

    struct Frame {
        fixed: Vec<C64>,
        mults: Vec<Option<usize>>,
        family: bool,
    }
    #[allow(clippy::too_many_arguments)]
    fn descend(
        sys: &LeadingTermSystem,
        blocks: &[&LevelBlock],
        level: usize,
        frame: Frame,
        tol: &Tolerances,
        complete: &mut bool,
        has_family: &mut bool,
        out: &mut Vec<LTESolution>,
    ) -> Result<()> {
        if level == blocks.len() {
            let values = frame.fixed;
            let mult = frame
                .mults
                .iter()
                .try_fold(1usize, |acc, m| m.map(|v| acc * v));
            let residual = full_residual(sys, blocks, &values);
            out.push(LTESolution {
                values,
                residual,
                degeneracy: Degeneracy::Degenerate, // classified later
                multiplicity: mult,
                family: frame.family,
            });
            return Ok(());
        }
        let block = blocks[level];
        let eqs = block_equations(sys, block, &frame.fixed);
        let solved = solve_block(&eqs, block.num_new_vars, tol)?;
        if !solved.complete {
            *complete = false;
        }
        if solved.family {
            *has_family = true;
        }
        let vars = sys.vars_of_block(block);
        for (w, m) in solved.sols {
            let mut fixed = frame.fixed.clone();
            for (pos, &v) in vars.iter().enumerate() {
                fixed[v] = w[pos];
            }
            let mut mults = frame.mults.clone();
            mults.push(m);
            descend(
                sys,
                blocks,
                level + 1,
                Frame {
                    fixed,
                    mults,
                    family: frame.family || solved.family,
                },
                tol,
                complete,
                has_family,
                out,
            )?;
        }
        Ok(())
    }
    descend(
        sys,
        &blocks,
        0,
        Frame {
            fixed: vec![C64::new(0.0, 0.0); n],
            mults: Vec::new(),
            family: false,
        },
        tol,
        &mut complete,
        &mut has_family,
        &mut solutions,
    )?;

    // classification
    for sol in solutions.iter_mut() {
        sol.degeneracy = classify(sys, &blocks, sol, tol)?;
    }
    Ok(LTEOutcome {
        solutions,
        complete,
        has_family,
    })
}

/// Newton-polishes a full solution vector on every leading term equation to
/// the quadratic-convergence floor; used before series lifting, where the
/// leading coefficients must solve the T⁰ system to machine precision.
pub fn polish_full(sys: &LeadingTermSystem, values: &[C64]) -> Option<(Vec<C64>, f64)> {
    let blocks: Vec<&LevelBlock> = sys
        .equation_blocks()
        .filter(|b| b.num_new_vars > 0)
        .collect();
    let eqs: Vec<Vec<Term>> = blocks
        .iter()
        .flat_map(|block| {
            sys.vars_of_block(block)
                .into_iter()
                .map(|var| sys.lte_equation(block, var))
                .collect::<Vec<_>>()
        })
        .collect();
    newton_square(&eqs, values, 40, 1e-14)
}

fn full_residual(sys: &LeadingTermSystem, blocks: &[&LevelBlock], w: &[C64]) -> f64 {
    let mut worst = 0.0f64;
    for block in blocks {
        for &var in &sys.vars_of_block(block) {
            let terms = sys.lte_equation(block, var);
            let mut acc = C64::new(0.0, 0.0);
            for (c, exps) in &terms {
                let mut m = *c;
                for (v, &e) in w.iter().zip(exps) {
                    m *= v.powi(e as i32);
                }
                acc += m;
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

fn classify(
    sys: &LeadingTermSystem,
    blocks: &[&LevelBlock],
    sol: &LTESolution,
    tol: &Tolerances,
) -> Result<Degeneracy> {
    if sol.family {
        return Ok(Degeneracy::Degenerate);
    }
    let mut strong = true;
    for block in blocks {
        let h = sys.hessian_block(block, &sol.values)?;
        let scale = h
            .iter()
            .flat_map(|r| r.iter().map(|z| z.norm()))
            .fold(1.0f64, f64::max);
        if linalg::cdet(&h).norm() < tol.hessian * scale {
            strong = false;
            break;
        }
    }
    if strong {
        return Ok(Degeneracy::Strong);
    }
    // Newton contraction basin check for isolation: perturb and see whether
    // the full system pulls back to the same point.
    let full_eqs: Vec<Vec<Term>> = blocks
        .iter()
        .flat_map(|block| {
            sys.vars_of_block(block)
                .into_iter()
                .map(|var| sys.lte_equation(block, var))
                .collect::<Vec<_>>()
        })
        .collect();
    // restrict to variables owned by equation blocks (= all, by construction)
    let n = sys.n();
    let mut isolated = true;
    let eps = 1e-4;
    for dir in 0..n {
        for sign in [1.0, -1.0] {
            let mut start = sol.values.clone();
            start[dir] *= C64::new(1.0 + sign * eps, sign * eps * 0.5);
            match newton_square(&full_eqs, &start, 48, tol.root_residual) {
                Some((w, res)) if res < tol.root_residual
                    && w.iter()
                        .zip(&sol.values)
                        .any(|(a, b)| (a - b).norm() > (tol.cluster * 10.0).max(eps * 3.0))
                    => {
                        isolated = false;
                    }
                _ => {
                    // no convergence from a perturbed start: treat as not
                    // contractive, keep checking other directions
                }
            }
            if !isolated {
                break;
            }
        }
        if !isolated {
            break;
        }
    }
    Ok(if isolated {
        Degeneracy::Weak
    } else {
        Degeneracy::Degenerate
    })
}

// ---------------------------------------------------------------------------
// fiber enumeration and counting
// ---------------------------------------------------------------------------

/// LTE outcome at a candidate fiber position.
#[derive(Clone, Debug)]
pub struct FiberReport {
    pub u: QVec,
    pub interior: bool,
    pub outcome: LTEOutcome,
    /// Solutions counted with multiplicity when every factor is exact.
    pub count: usize,
}

/// A one-dimensional stratum of the tie arrangement carrying leading-term
/// solutions; these never count as balanced fibers and are reported apart.
#[derive(Clone, Debug)]
pub struct DegenerateStratum {
    pub facet_pair: (usize, usize),
    pub witness: QVec,
    pub family: bool,
}

#[derive(Clone, Debug)]
pub struct BalancedCount {
    pub fibers: Vec<FiberReport>,
    pub strata: Vec<DegenerateStratum>,
    pub interior_total: usize,
    pub betti_sum: usize,
}

/// Solves the LTE at one explicit position (any dimension).
pub fn lte_at(p: &MomentPolytope, u: &QVec, tol: &Tolerances) -> Result<FiberReport> {
    let levels = level_structure_unchecked(p, u);
    let basis = integer_basis(p, &levels)?;
    let sys = leading_term_system(p, u, &levels, &basis, &[])?;
    let outcome = solve_full(&sys, tol)?;
    let count = outcome
        .solutions
        .iter()
        .filter(|s| !s.family)
        .map(|s| s.multiplicity.unwrap_or(1))
        .sum();
    Ok(FiberReport {
        u: u.clone(),
        interior: p.is_interior(u),
        outcome,
        count,
    })
}

/// Enumerates candidate fibers for n ≤ 2 over the arrangement
/// {ℓ_i = ℓ_j} (plus its extension outside P for non-Fano diagnostics),
/// solves the LTE on each, and reports totals.
pub fn count_balanced(p: &MomentPolytope, tol: &Tolerances) -> Result<BalancedCount> {
    let n = p.dim;
    if n > 2 {
        return Err(Error::DimensionUnsupported(n));
    }
    let m = p.num_facets();
    // tie hyperplanes: ⟨u, v_i − v_j⟩ = λ_i − λ_j
    let mut ties: Vec<(usize, usize, Vec<Rat>, Rat)> = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let w: Vec<Rat> = (0..n)
                .map(|c| {
                    Rat::from_integer((p.facets[i].normal[c] - p.facets[j].normal[c]).into())
                })
                .collect();
            if w.iter().all(|x| x.is_zero()) {
                continue;
            }
            let c = &p.facets[i].offset - &p.facets[j].offset;
            ties.push((i, j, w, c));
        }
    }
    // candidate points
    let mut candidates: Vec<QVec> = Vec::new();
    if n == 1 {
        for (_, _, w, c) in &ties {
            candidates.push(vec![c / &w[0]]);
        }
    } else {
        for a in 0..ties.len() {
            for b in (a + 1)..ties.len() {
                let mat = vec![ties[a].2.clone(), ties[b].2.clone()];
                let rhs = vec![ties[a].3.clone(), ties[b].3.clone()];
                if let Some(u) = linalg::solve_square(&mat, &rhs) {
                    if !candidates.contains(&u) {
                        candidates.push(u);
                    }
                }
            }
        }
    }
    candidates.sort();
    candidates.dedup();

    let mut fibers = Vec::new();
    for u in &candidates {
        let report = lte_at(p, u, tol)?;
        if report.count > 0 || report.outcome.has_family {
            fibers.push(report);
        }
    }

    // scan 1-dimensional strata inside Int P for solution families
    let mut strata = Vec::new();
    if n == 2 {
        for (i, j, w, c) in &ties {
            if let Some(witness) = stratum_witness(p, w, c, &candidates) {
                let report = lte_at(p, &witness, tol)?;
                if report.count > 0 || report.outcome.has_family {
                    strata.push(DegenerateStratum {
                        facet_pair: (*i, *j),
                        witness,
                        family: report.outcome.has_family,
                    });
                }
            }
        }
    }

    let interior_total = fibers
        .iter()
        .filter(|f| f.interior && !f.outcome.has_family)
        .map(|f| f.count)
        .sum();
    Ok(BalancedCount {
        fibers,
        strata,
        interior_total,
        betti_sum: p.betti_sum(),
    })
}

/// Picks a rational point on the tie line strictly inside P and distinct
/// from every candidate point, if the line meets Int P.
fn stratum_witness(
    p: &MomentPolytope,
    w: &[Rat],
    c: &Rat,
    avoid: &[QVec],
) -> Option<QVec> {
    // parametrize u(s) = base + s·dir with dir ⊥ w
    let dir = vec![-w[1].clone(), w[0].clone()];
    let base = if !w[0].is_zero() {
        vec![c / &w[0], Rat::zero()]
    } else {
        vec![Rat::zero(), c / &w[1]]
    };
    // clip by ℓ_i(u(s)) > 0
    let mut lo: Option<Rat> = None;
    let mut hi: Option<Rat> = None;
    for f in &p.facets {
        let a = linalg::dot_iz(&f.normal, &dir);
        let b = f.ell(&base);
        if a.is_zero() {
            if !b.is_positive() {
                return None;
            }
            continue;
        }
        let bound = -b / a.clone();
        if a.is_positive() {
            lo = Some(match lo {
                Some(x) => x.max(bound),
                None => bound,
            });
        } else {
            hi = Some(match hi {
                Some(x) => x.min(bound),
                None => bound,
            });
        }
    }
    let (lo, hi) = (lo?, hi?);
    if lo >= hi {
        return None;
    }
    // try a few interior parameters until one avoids the candidate set
    for (num, den) in [(1i64, 2i64), (1, 3), (2, 5), (3, 7), (5, 11)] {
        let s = &lo + (&hi - &lo) * Rat::new(num.into(), den.into());
        let u: QVec = base
            .iter()
            .zip(&dir)
            .map(|(b, d)| b + d * &s)
            .collect();
        if !avoid.contains(&u) && p.is_interior(&u) {
            return Some(u);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locator::run_filtration;
    use crate::polytope::fixtures::*;
    use crate::scalar::{fmt_rat, rat};

    fn sys_at(p: &MomentPolytope, u: &QVec) -> LeadingTermSystem {
        let levels = level_structure_unchecked(p, u);
        let basis = integer_basis(p, &levels).unwrap();
        leading_term_system(p, u, &levels, &basis, &[]).unwrap()
    }

    #[test]
    fn univariate_pm_one() {
        // 1 − x⁻² = 0 → {1, −1}
        let terms = vec![(C64::new(1.0, 0.0), 0i64), (C64::new(-1.0, 0.0), -2)];
        let coeffs = laurent_to_poly(&terms);
        let mut roots: Vec<C64> = univariate_roots(&coeffs)
            .into_iter()
            .filter(|r| r.norm() > 1e-8)
            .collect();
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert_eq!(roots.len(), 2);
        assert!((roots[0] + C64::new(1.0, 0.0)).norm() < 1e-10);
        assert!((roots[1] - C64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn cp2_three_cube_roots() {
        let p = cp2();
        let f = run_filtration(&p).unwrap();
        let sys = sys_at(&p, &f.center);
        let out = solve_full(&sys, &Tolerances::default()).unwrap();
        assert_eq!(out.solutions.len(), 3);
        assert!(out.complete);
        for s in &out.solutions {
            assert_eq!(s.degeneracy, Degeneracy::Strong);
            assert!(s.residual < 1e-9);
            // y₁ = y₂ = ζ with ζ³ = 1 (level coords here equal original)
            let z = s.values[0];
            assert!((z.powi(3) - C64::new(1.0, 0.0)).norm() < 1e-9);
            assert!((s.values[0] - s.values[1]).norm() < 1e-9);
        }
    }

    #[test]
    fn rectangle_four_sign_choices() {
        let p = rectangle("1", "2");
        let f = run_filtration(&p).unwrap();
        let sys = sys_at(&p, &f.center);
        let out = solve_full(&sys, &Tolerances::default()).unwrap();
        assert_eq!(out.solutions.len(), 4);
        for s in &out.solutions {
            assert_eq!(s.degeneracy, Degeneracy::Strong);
            for v in &s.values {
                assert!((v.powi(2) - C64::new(1.0, 0.0)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn two_point_blowup_monotone_quintic() {
        // α = 0: five solutions governed by y₁⁵+y₁⁴−2y₁³−2y₁²+1
        let p = blowup_two("0");
        let u = vec![rat(0, 1), rat(0, 1)];
        let report = lte_at(&p, &u, &Tolerances::default()).unwrap();
        assert_eq!(report.count, 5);
        assert!(report.outcome.complete);
        // in original coordinates the solutions satisfy y₂ = 1/(y₁² − 1) and
        // the quintic y₁⁵ + y₁⁴ − 2y₁³ − 2y₁² + 1 = 0
        let levels = level_structure_unchecked(&p, &u);
        let basis = integer_basis(&p, &levels).unwrap();
        for s in &report.outcome.solutions {
            assert_eq!(s.degeneracy, Degeneracy::Strong);
            let y = crate::potential::from_level_point(&basis, &s.values);
            let one = C64::new(1.0, 0.0);
            assert!((y[1] * (y[0] * y[0] - one) - one).norm() < 1e-8);
            let q = y[0].powi(5) + y[0].powi(4)
                - C64::new(2.0, 0.0) * y[0].powi(3)
                - C64::new(2.0, 0.0) * y[0].powi(2)
                + one;
            assert!(q.norm() < 1e-7, "quintic residual {q}");
        }
    }

    #[test]
    fn counts_match_betti_for_two_point_blowup() {
        for (alpha, expected_split) in [
            ("1/2", vec![1usize, 4]),
            ("0", vec![5]),
            ("-1/2", vec![1, 1, 3]),
        ] {
            let p = blowup_two(alpha);
            let count = count_balanced(&p, &Tolerances::default()).unwrap();
            let mut per_fiber: Vec<usize> = count
                .fibers
                .iter()
                .filter(|f| f.interior)
                .map(|f| f.count)
                .collect();
            per_fiber.sort();
            assert_eq!(per_fiber, expected_split, "alpha = {alpha}");
            assert_eq!(count.interior_total, 5, "alpha = {alpha}");
            assert_eq!(count.betti_sum, 5);
        }
    }

    #[test]
    fn one_point_blowup_regimes() {
        // α = 1/4 < 1/3: fibers (α, 1−2α) with 1 solution and (1/3,1/3) with 3
        let p = blowup_one("1/4");
        let count = count_balanced(&p, &Tolerances::default()).unwrap();
        let mut found = BTreeMap::new();
        for f in &count.fibers {
            if f.interior {
                found.insert(
                    f.u.iter().map(fmt_rat).collect::<Vec<_>>().join(","),
                    f.count,
                );
            }
        }
        assert_eq!(found.get("1/4,1/2"), Some(&1));
        assert_eq!(found.get("1/3,1/3"), Some(&3));
        assert_eq!(count.interior_total, 4);

        // α = 1/2 > 1/3: single fiber at (3/8, 1/4) with 4 solutions
        let p = blowup_one("1/2");
        let count = count_balanced(&p, &Tolerances::default()).unwrap();
        let interior: Vec<&FiberReport> =
            count.fibers.iter().filter(|f| f.interior).collect();
        assert_eq!(interior.len(), 1);
        assert_eq!(interior[0].u, vec![rat(3, 8), rat(1, 4)]);
        assert_eq!(interior[0].count, 4);
    }

    #[test]
    fn degenerate_family_detected_on_skew_blowup() {
        // counterexample polytope at (u₁, β₀): level 2 loses its variable,
        // solutions form a family ⇒ degenerate, excluded from totals
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
        let report = lte_at(&p, &u, &Tolerances::default()).unwrap();
        assert!(report.outcome.has_family);
        assert!(report
            .outcome
            .solutions
            .iter()
            .all(|s| s.degeneracy == Degeneracy::Degenerate));
        // and the stratum scan reports the segment
        let count = count_balanced(&p, &Tolerances::default()).unwrap();
        assert!(!count.strata.is_empty());
    }
}
