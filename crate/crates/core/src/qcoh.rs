//! Batyrev-style presentation of the quantum cohomology of the toric
//! manifold and the correspondence with the Jacobian ring of the potential:
//! the substitution z_i ↦ z̄_i(u) must turn every quantum Stanley-Reisner
//! relation into an exact identity of Laurent monomials and every linear
//! relation into a gradient component. All checks here are symbolic, with
//! zero remainder and no tolerance.

use num_traits::Zero;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, QMat, QVec};
use crate::lte::{count_balanced, BalancedCount, Tolerances};
use crate::novikov::{Exponent, NovikovSeries, Valuation};
use crate::polytope::{MomentPolytope, PrimitiveCollection};
use crate::potential::{build_po0, LaurentPolyNov};
use crate::scalar::{fmt_rat, Coeff, Rat};

/// One quantum Stanley-Reisner relation Π_{i∈𝒫} z_i = T^{ω(𝒫)} Π z_{i'}^{k_{i'}}.
#[derive(Clone, Debug)]
pub struct QSRRelation {
    pub collection: PrimitiveCollection,
}

impl fmt::Display for QSRRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lhs: Vec<String> = self
            .collection
            .indices
            .iter()
            .map(|i| format!("z{}", i + 1))
            .collect();
        let mut rhs = format!("T^({})", fmt_rat(&self.collection.area));
        for (i, k) in &self.collection.dual {
            if *k == 1 {
                rhs.push_str(&format!("*z{}", i + 1));
            } else {
                rhs.push_str(&format!("*z{}^{}", i + 1, k));
            }
        }
        write!(f, "{} = {}", lhs.join("*"), rhs)
    }
}

/// One linear relation Σ_i v_{i,j} z_i = 0.
#[derive(Clone, Debug)]
pub struct LinearRelation {
    pub direction: usize,
    pub coefficients: Vec<i64>,
}

impl fmt::Display for LinearRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.coefficients.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if first {
                write!(f, "{}", format_term(c, i))?;
                first = false;
            } else if c > 0 {
                write!(f, " + {}", format_term(c, i))?;
            } else {
                write!(f, " - {}", format_term(-c, i))?;
            }
        }
        write!(f, " = 0")
    }
}

fn format_term(c: i64, i: usize) -> String {
    if c == 1 {
        format!("z{}", i + 1)
    } else {
        format!("{}*z{}", c, i + 1)
    }
}

/// Generators of the quantum Stanley-Reisner ideal and the linear relation
/// ideal.
pub fn build_relations(
    p: &MomentPolytope,
) -> Result<(Vec<QSRRelation>, Vec<LinearRelation>)> {
    let qsr = p
        .primitive_collections()?
        .into_iter()
        .map(|collection| QSRRelation { collection })
        .collect();
    let linear = (0..p.dim)
        .map(|j| LinearRelation {
            direction: j,
            coefficients: p.facets.iter().map(|f| f.normal[j]).collect(),
        })
        .collect();
    Ok((qsr, linear))
}

/// The monomial z̄_i(u) as (exponent vector, T-exponent).
fn zbar(p: &MomentPolytope, i: usize, u: &QVec) -> (Vec<i64>, Rat) {
    (p.facets[i].normal.clone(), p.ell(i, u))
}

/// Verification report of the correspondence ψ_u at a point.
#[derive(Clone, Debug)]
pub struct PsiReport {
    pub u: QVec,
    pub qsr_checked: usize,
    pub linear_checked: usize,
}

/// Substitutes z_i ↦ z̄_i(u) into every relation and demands exact
/// identities: monomial exponents and T-exponents for the Stanley-Reisner
/// side, polynomial equality with y_j ∂PO₀/∂y_j for the linear side.
pub fn verify_psi(p: &MomentPolytope, u: &QVec) -> Result<PsiReport> {
    let (qsr, linear) = build_relations(p)?;
    verify_psi_with(p, u, &qsr, &linear)
}

/// Same check against externally supplied relation data; a corrupted area
/// or coefficient surfaces as `RelationFailed` with a witness.
pub fn verify_psi_with(
    p: &MomentPolytope,
    u: &QVec,
    qsr: &[QSRRelation],
    linear: &[LinearRelation],
) -> Result<PsiReport> {
    p.require_interior(u)?;
    for rel in qsr {
        let mut lhs_exp = vec![0i64; p.dim];
        let mut lhs_t = Rat::zero();
        for &i in &rel.collection.indices {
            let (e, t) = zbar(p, i, u);
            for (a, b) in lhs_exp.iter_mut().zip(&e) {
                *a += b;
            }
            lhs_t += t;
        }
        let mut rhs_exp = vec![0i64; p.dim];
        let mut rhs_t = rel.collection.area.clone();
        for (i, k) in &rel.collection.dual {
            let (e, t) = zbar(p, *i, u);
            for (a, b) in rhs_exp.iter_mut().zip(&e) {
                *a += b * k;
            }
            rhs_t += Rat::from_integer((*k).into()) * t;
        }
        if lhs_exp != rhs_exp || lhs_t != rhs_t {
            return Err(Error::RelationFailed(format!(
                "{rel} broke under substitution at u = ({}): lhs y^{lhs_exp:?} T^{}, rhs y^{rhs_exp:?} T^{}",
                fmt_u(u),
                fmt_rat(&lhs_t),
                fmt_rat(&rhs_t),
            )));
        }
    }
    // linear relations: Σ v_{i,j} z̄_i must equal y_j ∂PO₀/∂y_j as Laurent
    // polynomials over the Novikov scalars
    let po: LaurentPolyNov<crate::scalar::GaussQ> = build_po0(p, u, &[])?;
    for rel in linear {
        let mut sum: LaurentPolyNov<crate::scalar::GaussQ> =
            LaurentPolyNov::new(po.vars.clone());
        for (i, &c) in rel.coefficients.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let (e, t) = zbar(p, i, u);
            sum.add_term(
                e,
                NovikovSeries::monomial(
                    crate::scalar::GaussQ::from_rat(&Rat::from_integer(c.into())),
                    Exponent::new(t),
                ),
            );
        }
        let grad = po.log_derivative(rel.direction);
        if !laurent_equal(&sum, &grad) {
            return Err(Error::RelationFailed(format!(
                "linear relation {rel} does not match the gradient component {}",
                rel.direction + 1
            )));
        }
    }
    Ok(PsiReport {
        u: u.clone(),
        qsr_checked: qsr.len(),
        linear_checked: linear.len(),
    })
}

fn laurent_equal<C: Coeff>(a: &LaurentPolyNov<C>, b: &LaurentPolyNov<C>) -> bool {
    if a.num_terms() != b.num_terms() {
        return false;
    }
    a.terms().all(|(e, c)| match b.coeff(e) {
        Some(d) => c == d,
        None => false,
    })
}

fn fmt_u(u: &QVec) -> String {
    u.iter().map(fmt_rat).collect::<Vec<_>>().join(",")
}

/// Identity check for a general kernel relation r(A): given an integer
/// vector with Σ c_i v_i = 0, the two sides Π_{c_i>0} z̄_i^{c_i} and
/// T^{Σ c_i ℓ_i(u)} Π_{c_i<0} z̄_i^{−c_i} agree exactly.
pub fn verify_kernel_relation(p: &MomentPolytope, u: &QVec, c: &[i64]) -> Result<()> {
    let n = p.dim;
    for j in 0..n {
        let s: i64 = c
            .iter()
            .zip(&p.facets)
            .map(|(&ci, f)| ci * f.normal[j])
            .sum();
        if s != 0 {
            return Err(Error::Malformed(format!(
                "vector {c:?} is not in the kernel of the ray matrix"
            )));
        }
    }
    let mut lhs_exp = vec![0i64; n];
    let mut lhs_t = Rat::zero();
    let mut rhs_exp = vec![0i64; n];
    let mut rhs_t = Rat::zero();
    let mut shift = Rat::zero();
    for (i, &ci) in c.iter().enumerate() {
        let (e, t) = zbar(p, i, u);
        shift += Rat::from_integer(ci.into()) * &t;
        if ci > 0 {
            for (a, b) in lhs_exp.iter_mut().zip(&e) {
                *a += b * ci;
            }
            lhs_t += Rat::from_integer(ci.into()) * t;
        } else if ci < 0 {
            for (a, b) in rhs_exp.iter_mut().zip(&e) {
                *a += b * (-ci);
            }
            rhs_t += Rat::from_integer((-ci).into()) * t;
        }
    }
    if lhs_exp != rhs_exp || lhs_t != &shift + &rhs_t {
        return Err(Error::RelationFailed(format!(
            "kernel relation for {c:?} is not an identity"
        )));
    }
    Ok(())
}

/// Solves ℓ_i(u) = 𝔳_T(w_i) for i = 1..n; the first n facet normals must be
/// invertible (reorder the facet list otherwise).
pub fn valuation_to_position<C: Coeff>(
    p: &MomentPolytope,
    w: &[NovikovSeries<C>],
) -> Result<QVec> {
    let n = p.dim;
    assert_eq!(w.len(), n, "need one value per dimension");
    let a: QMat = (0..n)
        .map(|i| {
            p.facets[i]
                .normal
                .iter()
                .map(|&x| Rat::from_integer(x.into()))
                .collect()
        })
        .collect();
    let mut b: QVec = Vec::with_capacity(n);
    for (i, wi) in w.iter().enumerate() {
        match wi.valuation() {
            Valuation::Finite(e) => b.push(e.rat() + &p.facets[i].offset),
            Valuation::InfiniteToOrder(_) => {
                return Err(Error::NotAUnit(format!(
                    "w{} vanishes to its truncation order; no finite valuation",
                    i + 1
                )))
            }
        }
    }
    linalg::solve_square(&a, &b).ok_or(Error::SingularNormalMatrix)
}

/// Side-by-side count of leading-term solutions against the Betti sum.
#[derive(Clone, Debug)]
pub struct CountReport {
    pub count: BalancedCount,
    pub pass: bool,
}

/// Compares the interior critical-point count with Σ rank H^*(X;ℚ)
/// (= vertex count), the semi-simple expectation.
pub fn count_vs_betti(p: &MomentPolytope, tol: &Tolerances) -> Result<CountReport> {
    let count = count_balanced(p, tol)?;
    let pass = count.interior_total == count.betti_sum;
    Ok(CountReport { count, pass })
}
