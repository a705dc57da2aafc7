//! Moment polytopes in facet presentation.
//!
//! A polytope is given by inward primitive integer normals v_i and rational
//! offsets λ_i, cutting out P = {u : ℓ_i(u) ≥ 0} with ℓ_i(u) = ⟨u,v_i⟩ − λ_i.
//! Parsing derives the vertex set exactly, checks boundedness, full
//! dimension, facet irredundancy and the Delzant smoothness condition, and
//! precomputes the combinatorics (vertex/facet incidences, primitive
//! collections of the normal fan).

use num_traits::{One, Signed, Zero};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, QMat, QVec};
use crate::scalar::{fmt_rat, parse_rat, rat_int, Rat};

#[derive(Clone, Debug)]
pub struct Facet {
    /// Inward primitive integer normal.
    pub normal: Vec<i64>,
    /// Offset: the facet lies on ⟨u, v⟩ = λ.
    pub offset: Rat,
}

impl Facet {
    /// ℓ(u) = ⟨u, v⟩ − λ.
    pub fn ell(&self, u: &[Rat]) -> Rat {
        linalg::dot_iz(&self.normal, u) - &self.offset
    }
}

#[derive(Clone, Debug)]
pub struct MomentPolytope {
    pub name: String,
    pub dim: usize,
    pub facets: Vec<Facet>,
    /// Derived vertex list.
    pub vertices: Vec<QVec>,
    /// For each vertex, the indices of facets active there (ℓ_i = 0).
    pub vertex_facets: Vec<Vec<usize>>,
    /// Resolved parameter values used while parsing.
    pub params: BTreeMap<String, Rat>,
}

/// One primitive collection 𝒫 of the normal fan together with the unique
/// cone data: Σ_{i∈𝒫} v_i = Σ_{i'∈𝒫'} k_{i'} v_{i'} and the symplectic area
/// weight ω(𝒫) > 0.
#[derive(Clone, Debug)]
pub struct PrimitiveCollection {
    pub indices: Vec<usize>,
    pub dual: Vec<(usize, i64)>,
    pub area: Rat,
}

#[derive(Deserialize)]
struct PolytopeFile {
    name: String,
    dim: usize,
    #[serde(default)]
    params: BTreeMap<String, String>,
    facets: Vec<FacetRow>,
}

#[derive(Deserialize)]
struct FacetRow {
    v: Vec<i64>,
    lambda: String,
}

/// Parses and fully validates a polytope from its structured-text form.
/// `overrides` substitute symbolic parameters before evaluation.
pub fn parse_polytope(source: &str, overrides: &[(String, Rat)]) -> Result<MomentPolytope> {
    let file: PolytopeFile =
        toml::from_str(source).map_err(|e| Error::Malformed(format!("polytope file: {e}")))?;
    let mut params: BTreeMap<String, Rat> = BTreeMap::new();
    for (k, v) in &file.params {
        params.insert(k.clone(), parse_rat(v)?);
    }
    for (k, v) in overrides {
        params.insert(k.clone(), v.clone());
    }
    let n = file.dim;
    if n == 0 {
        return Err(Error::Malformed("dim must be positive".into()));
    }
    let mut facets = Vec::with_capacity(file.facets.len());
    for (i, row) in file.facets.iter().enumerate() {
        if row.v.len() != n {
            return Err(Error::Malformed(format!(
                "facet {i}: normal has length {}, expected {n}",
                row.v.len()
            )));
        }
        if row.v.iter().all(|&x| x == 0) {
            return Err(Error::Malformed(format!("facet {i}: zero normal")));
        }
        facets.push(Facet {
            normal: row.v.clone(),
            offset: eval_expr(&row.lambda, &params)?,
        });
    }
    if facets.len() < n + 1 {
        return Err(Error::Malformed(format!(
            "{} facets cannot bound a {n}-dimensional polytope",
            facets.len()
        )));
    }
    build(file.name, n, facets, params)
}

fn build(
    name: String,
    n: usize,
    facets: Vec<Facet>,
    params: BTreeMap<String, Rat>,
) -> Result<MomentPolytope> {
    let m = facets.len();

    // boundedness: every ±eⱼ must lie in the cone spanned by the normals
    // (Carathéodory: it is then a nonnegative combination of an independent
    // n-subset).
    for j in 0..n {
        for sign in [1i64, -1] {
            let mut w = vec![Rat::zero(); n];
            w[j] = rat_int(sign);
            if !in_normal_cone(&facets, &w, n) {
                let dir: Vec<String> = w.iter().map(fmt_rat).collect();
                return Err(Error::Unbounded(dir.join(",")));
            }
        }
    }

    // vertex enumeration over all n-subsets of facet equalities
    let mut vertices: Vec<QVec> = Vec::new();
    let mut vertex_facets: Vec<Vec<usize>> = Vec::new();
    for subset in subsets_of_size(m, n) {
        let a: QMat = subset
            .iter()
            .map(|&i| {
                facets[i]
                    .normal
                    .iter()
                    .map(|&x| Rat::from_integer(x.into()))
                    .collect()
            })
            .collect();
        let b: QVec = subset.iter().map(|&i| facets[i].offset.clone()).collect();
        let Some(u) = linalg::solve_square(&a, &b) else {
            continue;
        };
        if facets.iter().any(|f| f.ell(&u).is_negative()) {
            continue;
        }
        if vertices.contains(&u) {
            continue;
        }
        let active: Vec<usize> = (0..m).filter(|&i| facets[i].ell(&u).is_zero()).collect();
        vertices.push(u);
        vertex_facets.push(active);
    }
    if vertices.is_empty() {
        return Err(Error::Malformed("no vertices: empty polytope".into()));
    }

    // full dimension
    let (_, dirs) = linalg::affine_hull(&vertices);
    if dirs.len() != n {
        return Err(Error::NotFullDim(dirs.len()));
    }

    // every facet must support an (n−1)-face
    for i in 0..m {
        let on_facet: Vec<QVec> = vertices
            .iter()
            .zip(&vertex_facets)
            .filter(|(_, act)| act.contains(&i))
            .map(|(v, _)| v.clone())
            .collect();
        if on_facet.is_empty() {
            return Err(Error::Malformed(format!("facet {i} supports no face")));
        }
        let (_, fdirs) = linalg::affine_hull(&on_facet);
        if fdirs.len() != n - 1 {
            return Err(Error::Malformed(format!(
                "facet {i} supports a face of dimension {} (needs {})",
                fdirs.len(),
                n - 1
            )));
        }
    }

    // Delzant smoothness: n incident facets per vertex with unimodular normals
    for (v, active) in vertices.iter().zip(&vertex_facets) {
        let coords: Vec<String> = v.iter().map(fmt_rat).collect();
        if active.len() != n {
            return Err(Error::NotSmooth(
                coords.join(","),
                format!("{} facets meet here, expected {n}", active.len()),
            ));
        }
        let rows: Vec<Vec<i64>> = active.iter().map(|&i| facets[i].normal.clone()).collect();
        let d = linalg::zdet(&rows);
        if !d.magnitude().is_one() {
            return Err(Error::NotSmooth(
                coords.join(","),
                format!("normal determinant {d}, expected ±1"),
            ));
        }
    }

    Ok(MomentPolytope {
        name,
        dim: n,
        facets,
        vertices,
        vertex_facets,
        params,
    })
}

fn in_normal_cone(facets: &[Facet], w: &[Rat], n: usize) -> bool {
    for subset in subsets_of_size(facets.len(), n) {
        // solve Σ cᵢ vᵢ = w over the subset
        let a: QMat = (0..n)
            .map(|row| {
                subset
                    .iter()
                    .map(|&i| Rat::from_integer(facets[i].normal[row].into()))
                    .collect()
            })
            .collect();
        if let Some(c) = linalg::solve_square(&a, w) {
            if c.iter().all(|x| !x.is_negative()) {
                return true;
            }
        }
    }
    false
}

fn subsets_of_size(m: usize, k: usize) -> Vec<Vec<usize>> {
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

impl MomentPolytope {
    /// ℓ_i(u), 0-based facet index.
    pub fn ell(&self, i: usize, u: &[Rat]) -> Rat {
        self.facets[i].ell(u)
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn contains(&self, u: &[Rat]) -> bool {
        self.facets.iter().all(|f| !f.ell(u).is_negative())
    }

    pub fn is_interior(&self, u: &[Rat]) -> bool {
        self.facets.iter().all(|f| f.ell(u).is_positive())
    }

    /// Errors with the first violated facet when `u` is not interior.
    pub fn require_interior(&self, u: &[Rat]) -> Result<()> {
        for (i, f) in self.facets.iter().enumerate() {
            let v = f.ell(u);
            if !v.is_positive() {
                let coords: Vec<String> = u.iter().map(fmt_rat).collect();
                return Err(Error::NotInterior(coords.join(","), i, fmt_rat(&v)));
            }
        }
        Ok(())
    }

    /// Vertex centroid; interior for a full-dimensional polytope.
    pub fn interior_point(&self) -> QVec {
        let n = self.dim;
        let k = rat_int(self.vertices.len() as i64);
        (0..n)
            .map(|j| {
                self.vertices
                    .iter()
                    .map(|v| v[j].clone())
                    .sum::<Rat>()
                    / k.clone()
            })
            .collect()
    }

    /// Number of vertices = Euler characteristic of the toric manifold.
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Σ rank H^k(X;ℚ): equals the vertex count for smooth toric X.
    pub fn betti_sum(&self) -> usize {
        self.vertex_count()
    }

    /// True when the index subset spans a cone of the normal fan, i.e. is
    /// contained in the active set of some vertex.
    pub fn is_fan_face(&self, subset: &[usize]) -> bool {
        self.vertex_facets
            .iter()
            .any(|act| subset.iter().all(|i| act.contains(i)))
    }

    /// All primitive collections: minimal index subsets spanning no cone.
    pub fn primitive_collections(&self) -> Result<Vec<PrimitiveCollection>> {
        let m = self.num_facets();
        let n = self.dim;
        let mut out = Vec::new();
        for size in 2..=m {
            for subset in subsets_of_size(m, size) {
                if self.is_fan_face(&subset) {
                    continue;
                }
                let minimal = subset.iter().all(|&skip| {
                    let sub: Vec<usize> =
                        subset.iter().copied().filter(|&i| i != skip).collect();
                    self.is_fan_face(&sub)
                });
                if !minimal {
                    continue;
                }
                let sigma: Vec<Rat> = (0..n)
                    .map(|j| {
                        subset
                            .iter()
                            .map(|&i| rat_int(self.facets[i].normal[j]))
                            .sum()
                    })
                    .collect();
                let dual = self.cone_decomposition(&sigma)?;
                let mut area = -subset
                    .iter()
                    .map(|&i| self.facets[i].offset.clone())
                    .sum::<Rat>();
                for (i, k) in &dual {
                    area += rat_int(*k) * &self.facets[*i].offset;
                }
                if !area.is_positive() {
                    return Err(Error::Internal(format!(
                        "primitive collection {subset:?} has non-positive area {}",
                        fmt_rat(&area)
                    )));
                }
                out.push(PrimitiveCollection {
                    indices: subset,
                    dual,
                    area,
                });
            }
        }
        Ok(out)
    }

    /// Writes σ as Σ k_{i'} v_{i'} over the rays of the fan cone whose
    /// relative interior contains σ; the weights are positive integers.
    fn cone_decomposition(&self, sigma: &[Rat]) -> Result<Vec<(usize, i64)>> {
        if sigma.iter().all(|x| x.is_zero()) {
            return Ok(Vec::new());
        }
        let n = self.dim;
        for active in &self.vertex_facets {
            let a: QMat = (0..n)
                .map(|row| {
                    active
                        .iter()
                        .map(|&i| rat_int(self.facets[i].normal[row]))
                        .collect()
                })
                .collect();
            let Some(c) = linalg::solve_square(&a, sigma) else {
                continue;
            };
            if c.iter().any(|x| x.is_negative()) {
                continue;
            }
            let mut dual = Vec::new();
            for (&i, k) in active.iter().zip(&c) {
                if k.is_zero() {
                    continue;
                }
                if !k.is_integer() {
                    return Err(Error::Internal(format!(
                        "non-integer cone weight {} on smooth fan",
                        fmt_rat(k)
                    )));
                }
                dual.push((i, i64::try_from(&k.to_integer()).unwrap()));
            }
            return Ok(dual);
        }
        Err(Error::Internal(
            "no fan cone contains the primitive-collection sum".into(),
        ))
    }

    /// Translates the polytope by `shift`: ℓ'_i(u + shift) = ℓ_i(u).
    pub fn translated(&self, shift: &[Rat]) -> MomentPolytope {
        let facets: Vec<Facet> = self
            .facets
            .iter()
            .map(|f| Facet {
                normal: f.normal.clone(),
                offset: &f.offset + &linalg::dot_iz(&f.normal, shift),
            })
            .collect();
        let vertices: Vec<QVec> = self
            .vertices
            .iter()
            .map(|v| v.iter().zip(shift).map(|(a, b)| a + b).collect())
            .collect();
        MomentPolytope {
            name: format!("{} (translated)", self.name),
            dim: self.dim,
            facets,
            vertices,
            vertex_facets: self.vertex_facets.clone(),
            params: self.params.clone(),
        }
    }
}

impl fmt::Display for MomentPolytope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} (dim {}, {} facets)", self.name, self.dim, self.facets.len())?;
        for (i, facet) in self.facets.iter().enumerate() {
            writeln!(
                f,
                "  ℓ_{} = <u,({})> - ({})",
                i + 1,
                facet
                    .normal
                    .iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
                fmt_rat(&facet.offset)
            )?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// offset expressions: rationals, parameters, + - * / and parentheses
// ---------------------------------------------------------------------------

fn eval_expr(src: &str, params: &BTreeMap<String, Rat>) -> Result<Rat> {
    let tokens = tokenize(src)?;
    let mut pos = 0;
    let v = parse_sum(&tokens, &mut pos, params, src)?;
    if pos != tokens.len() {
        return Err(Error::Malformed(format!("trailing input in {src:?}")));
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rat),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            _ if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push(Tok::Num(parse_rat(&s)?));
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            _ => {
                return Err(Error::Malformed(format!(
                    "unexpected character {c:?} in expression {src:?}"
                )))
            }
        }
    }
    Ok(out)
}

fn parse_sum(
    toks: &[Tok],
    pos: &mut usize,
    params: &BTreeMap<String, Rat>,
    src: &str,
) -> Result<Rat> {
    let mut acc = parse_product(toks, pos, params, src)?;
    while let Some(t) = toks.get(*pos) {
        match t {
            Tok::Plus => {
                *pos += 1;
                acc += parse_product(toks, pos, params, src)?;
            }
            Tok::Minus => {
                *pos += 1;
                acc -= parse_product(toks, pos, params, src)?;
            }
            _ => break,
        }
    }
    Ok(acc)
}

fn parse_product(
    toks: &[Tok],
    pos: &mut usize,
    params: &BTreeMap<String, Rat>,
    src: &str,
) -> Result<Rat> {
    let mut acc = parse_atom(toks, pos, params, src)?;
    while let Some(t) = toks.get(*pos) {
        match t {
            Tok::Star => {
                *pos += 1;
                acc *= parse_atom(toks, pos, params, src)?;
            }
            Tok::Slash => {
                *pos += 1;
                let d = parse_atom(toks, pos, params, src)?;
                if d.is_zero() {
                    return Err(Error::Malformed(format!("division by zero in {src:?}")));
                }
                acc /= d;
            }
            _ => break,
        }
    }
    Ok(acc)
}

fn parse_atom(
    toks: &[Tok],
    pos: &mut usize,
    params: &BTreeMap<String, Rat>,
    src: &str,
) -> Result<Rat> {
    match toks.get(*pos) {
        Some(Tok::Minus) => {
            *pos += 1;
            Ok(-parse_atom(toks, pos, params, src)?)
        }
        Some(Tok::Num(q)) => {
            *pos += 1;
            Ok(q.clone())
        }
        Some(Tok::Ident(name)) => {
            *pos += 1;
            params.get(name).cloned().ok_or_else(|| {
                Error::Malformed(format!("unknown parameter {name:?} in {src:?}"))
            })
        }
        Some(Tok::LParen) => {
            *pos += 1;
            let v = parse_sum(toks, pos, params, src)?;
            match toks.get(*pos) {
                Some(Tok::RParen) => {
                    *pos += 1;
                    Ok(v)
                }
                _ => Err(Error::Malformed(format!("missing ')' in {src:?}"))),
            }
        }
        _ => Err(Error::Malformed(format!("unexpected end of {src:?}"))),
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn load(text: &str) -> MomentPolytope {
        parse_polytope(text, &[]).unwrap()
    }

    pub fn cp2() -> MomentPolytope {
        load(
            r#"
name = "CP2"
dim = 2
[[facets]]
v = [1, 0]
lambda = "0"
[[facets]]
v = [0, 1]
lambda = "0"
[[facets]]
v = [-1, -1]
lambda = "-1"
"#,
        )
    }

    pub fn rectangle(a: &str, b: &str) -> MomentPolytope {
        load(&format!(
            r#"
name = "rectangle"
dim = 2
[params]
a = "{a}"
b = "{b}"
[[facets]]
v = [1, 0]
lambda = "0"
[[facets]]
v = [0, 1]
lambda = "0"
[[facets]]
v = [-1, 0]
lambda = "-a"
[[facets]]
v = [0, -1]
lambda = "-b"
"#
        ))
    }

    /// One-point blow-up of CP² with exceptional parameter α.
    pub fn blowup_one(alpha: &str) -> MomentPolytope {
        load(&format!(
            r#"
name = "one-point blow-up of CP2"
dim = 2
[params]
alpha = "{alpha}"
[[facets]]
v = [1, 0]
lambda = "0"
[[facets]]
v = [0, 1]
lambda = "0"
[[facets]]
v = [-1, -1]
lambda = "-1"
[[facets]]
v = [0, -1]
lambda = "alpha - 1"
"#
        ))
    }

    /// Two-point blow-up of CP²: the square [−1,1]² cut by u₁+u₂ ≤ 1+α.
    pub fn blowup_two(alpha: &str) -> MomentPolytope {
        load(&format!(
            r#"
name = "two-point blow-up of CP2"
dim = 2
[params]
alpha = "{alpha}"
[[facets]]
v = [1, 0]
lambda = "-1"
[[facets]]
v = [0, 1]
lambda = "-1"
[[facets]]
v = [-1, 0]
lambda = "-1"
[[facets]]
v = [0, -1]
lambda = "-1"
[[facets]]
v = [-1, -1]
lambda = "-(1 + alpha)"
"#
        ))
    }
}
