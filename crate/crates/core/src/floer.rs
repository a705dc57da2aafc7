//! Floer-cohomology diagnostics for torus fibers of toric surfaces, via the
//! closed-form boundary operator on H(T²): m₁(e_i) = g_i e_∅,
//! m₁(e₁₂) = g₁e₂ − g₂e₁ with g_i the i-th critical-equation component at y.
//!
//! Over the valuation ring Λ₀ the homology of this four-dimensional complex
//! is Λ₀^4 when both g_i vanish, and Λ₀/(T^v) in each parity with
//! v = min(𝔳(g₁), 𝔳(g₂)) otherwise — the ideal (g₁, g₂) is principal and
//! generated by the element of smaller valuation.

use std::fmt;

use crate::error::{Error, Result};
use crate::lift::{po_threshold, ThresholdOutcome, ThresholdReport};
use crate::linalg::QVec;
use crate::lte::Tolerances;
use crate::novikov::{Exponent, NovikovSeries, Valuation};
use crate::polytope::MomentPolytope;
use crate::potential::{build_po0, LaurentPolyNov};
use crate::scalar::{fmt_rat, Coeff, Rat};

/// Structure report: HF ≅ Λ₀^a ⊕ ⊕_i Λ₀/(T^{λ_i}), split by parity.
#[derive(Clone, Debug)]
pub struct HFReport {
    /// Free rank a (0 or 4 here; 4 means nonvanishing verified to the cap).
    pub free_rank: usize,
    /// Torsion exponents, one per torsion summand (both parities listed).
    pub torsion: Vec<Exponent>,
    pub even_torsion: Option<Exponent>,
    pub odd_torsion: Option<Exponent>,
    /// Verification cap for the free case.
    pub cap: Exponent,
    /// Valuations of the two gradient components.
    pub gradient_valuations: Vec<Valuation>,
}

impl fmt::Display for HFReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.free_rank > 0 {
            write!(
                f,
                "HF = Λ₀^{} on {{e_∅, e₁, e₂, e₁₂}} (gradient ≡ 0 mod T^{})",
                self.free_rank, self.cap
            )
        } else {
            write!(
                f,
                "HF^even = HF^odd = Λ₀/(T^{}) (torsion from min gradient valuation)",
                self.even_torsion.as_ref().unwrap()
            )
        }
    }
}

/// Floer cohomology of (L(u), y) for a toric surface, to precision `cap`.
pub fn hf_t2<C: Coeff>(
    p: &MomentPolytope,
    u: &QVec,
    y: &[NovikovSeries<C>],
    cap: &Exponent,
) -> Result<HFReport> {
    if p.dim != 2 {
        return Err(Error::DimensionUnsupported(p.dim));
    }
    for (i, yi) in y.iter().enumerate() {
        if !yi.is_unit() {
            return Err(Error::NotAUnit(format!(
                "y{} has valuation {}",
                i + 1,
                yi.valuation()
            )));
        }
    }
    let po: LaurentPolyNov<C> = build_po0(p, u, &[])?;
    // g_i up to the unit y_i: valuations and ideals are unchanged
    let mut gvals = Vec::with_capacity(2);
    for j in 0..2 {
        let g = po.log_derivative(j).eval_series(y)?;
        if !g.trunc().covers(cap) {
            return Err(Error::TruncationTooShort(
                g.trunc().to_string(),
                cap.to_string(),
            ));
        }
        gvals.push(g.valuation());
    }
    let min_val = gvals
        .iter()
        .filter_map(|v| v.finite())
        .min()
        .cloned();
    match min_val {
        None => Ok(HFReport {
            free_rank: 4,
            torsion: Vec::new(),
            even_torsion: None,
            odd_torsion: None,
            cap: cap.clone(),
            gradient_valuations: gvals,
        }),
        Some(v) => Ok(HFReport {
            free_rank: 0,
            torsion: vec![v.clone(), v.clone()],
            even_torsion: Some(v.clone()),
            odd_torsion: Some(v),
            cap: cap.clone(),
            gradient_valuations: gvals,
        }),
    }
}

/// Displacement-energy consequences of the threshold at a fiber.
#[derive(Clone, Debug)]
pub struct DisplacementReport {
    pub threshold: ThresholdReport,
    /// Lower bound e(L(u)) ≥ 2π·bound, when finite.
    pub energy_bound: Option<Rat>,
    pub balanced_to_cap: bool,
    /// #(ψ(L) ∩ L) ≥ 2ⁿ for transversal Hamiltonian images, when balanced.
    pub intersection_bound: Option<usize>,
}

impl fmt::Display for DisplacementReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.energy_bound, self.balanced_to_cap) {
            (_, true) => write!(
                f,
                "balanced to cap: e(L(u)) bound grows with the verification order; {}",
                match self.intersection_bound {
                    Some(b) => format!("#(ψ(L)∩L) ≥ {b} for transversal ψ"),
                    None => String::new(),
                }
            ),
            (Some(b), false) => write!(f, "e(L(u)) ≥ 2π·{}", fmt_rat(b)),
            (None, false) => write!(f, "no finite bound derived"),
        }
    }
}

pub fn displacement_report(
    p: &MomentPolytope,
    u: &QVec,
    cap: Option<Rat>,
    tol: &Tolerances,
) -> Result<DisplacementReport> {
    let threshold = po_threshold(p, u, cap, tol)?;
    let (energy_bound, balanced) = match &threshold.outcome {
        ThresholdOutcome::Obstructed { s_value, .. } => (Some(s_value.clone()), false),
        ThresholdOutcome::AtLeastCap { cap } => (Some(cap.clone()), true),
        ThresholdOutcome::LowerBoundOnly { s_value, .. } => (Some(s_value.clone()), false),
    };
    let intersection_bound = balanced.then(|| 1usize << p.dim);
    Ok(DisplacementReport {
        threshold,
        energy_bound,
        balanced_to_cap: balanced,
        intersection_bound,
    })
}
