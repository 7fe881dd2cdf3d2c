//! Monomial spaces, the internal projection space, edge projector bases and quadrature.

pub mod quadrature;

use serde::{Deserialize, Serialize};

use crate::geometry::{Edge, Point, Polygon};

pub use quadrature::{edge_quadrature, gauss_legendre, triangle_quadrature, EdgeRule, TriangleRule};

/// The monomial `x^a y^b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Monomial2D {
    pub a: usize,
    pub b: usize,
}

impl Monomial2D {
    pub const fn new(a: usize, b: usize) -> Self {
        Monomial2D { a, b }
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        x.powi(self.a as i32) * y.powi(self.b as i32)
    }

    /// Degree in the tensor (max) sense.
    pub fn max_degree(&self) -> usize {
        self.a.max(self.b)
    }

    pub fn total_degree(&self) -> usize {
        self.a + self.b
    }
}

/// Descriptor of a monomial space. Indices of −1 denote the zero space.
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceDescriptor {
    /// `Q_k`: each variable of degree ≤ k.
    Q(i32),
    /// `Q_[k]`: max-degree exactly k.
    QExact(i32),
    /// `P_k`: total degree ≤ k.
    P(i32),
    /// `P_[k]`: homogeneous of total degree k.
    PExact(i32),
    /// `P_{a,b}`: degree ≤ a in x and ≤ b in y.
    Pab(i32, i32),
    Custom(Vec<Monomial2D>),
}

/// Ordered monomial basis: by degree (in the space's own sense), then by x-exponent.
pub fn monomial_basis(space: &SpaceDescriptor) -> Vec<Monomial2D> {
    let upto = |k: i32| if k < 0 { 0 } else { k as usize + 1 };
    let mut out = Vec::new();
    match *space {
        SpaceDescriptor::Q(k) => {
            for d in 0..upto(k) {
                out.extend(q_exact(d));
            }
        }
        SpaceDescriptor::QExact(k) => {
            if k >= 0 {
                out = q_exact(k as usize);
            }
        }
        SpaceDescriptor::P(k) => {
            for d in 0..upto(k) {
                out.extend((0..=d).rev().map(|a| Monomial2D::new(a, d - a)));
            }
        }
        SpaceDescriptor::PExact(k) => {
            if k >= 0 {
                let d = k as usize;
                out.extend((0..=d).rev().map(|a| Monomial2D::new(a, d - a)));
            }
        }
        SpaceDescriptor::Pab(a, b) => {
            for j in 0..upto(b) {
                for i in 0..upto(a) {
                    out.push(Monomial2D::new(i, j));
                }
            }
        }
        SpaceDescriptor::Custom(ref v) => out = v.clone(),
    }
    out
}

fn q_exact(d: usize) -> Vec<Monomial2D> {
    let mut v: Vec<Monomial2D> = (0..=d).map(|b| Monomial2D::new(d, b)).collect();
    v.extend((0..d).map(|a| Monomial2D::new(a, d)));
    v.sort_by_key(|m| (std::cmp::Reverse(m.a), m.b));
    v
}

/// Sparse bivariate polynomial.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Poly2 {
    pub terms: Vec<(Monomial2D, f64)>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Poly2::default()
    }

    pub fn monomial(m: Monomial2D, c: f64) -> Self {
        Poly2 { terms: vec![(m, c)] }.normalized()
    }

    pub fn constant(c: f64) -> Self {
        Poly2::monomial(Monomial2D::new(0, 0), c)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Merges duplicate monomials and drops exact zeros.
    pub fn normalized(mut self) -> Self {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(Monomial2D, f64)> = Vec::with_capacity(self.terms.len());
        for (m, c) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == m => last.1 += c,
                _ => out.push((m, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        Poly2 { terms: out }
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.eval(p[0], p[1])).sum()
    }

    pub fn add(&self, o: &Poly2) -> Poly2 {
        let mut t = self.terms.clone();
        t.extend_from_slice(&o.terms);
        Poly2 { terms: t }.normalized()
    }

    pub fn scale(&self, s: f64) -> Poly2 {
        Poly2 { terms: self.terms.iter().map(|&(m, c)| (m, c * s)).collect() }.normalized()
    }

    pub fn mul(&self, o: &Poly2) -> Poly2 {
        let mut t = Vec::with_capacity(self.terms.len() * o.terms.len());
        for &(m, c) in &self.terms {
            for &(n, d) in &o.terms {
                t.push((Monomial2D::new(m.a + n.a, m.b + n.b), c * d));
            }
        }
        Poly2 { terms: t }.normalized()
    }

    pub fn dx(&self) -> Poly2 {
        Poly2 {
            terms: self
                .terms
                .iter()
                .filter(|t| t.0.a > 0)
                .map(|&(m, c)| (Monomial2D::new(m.a - 1, m.b), c * m.a as f64))
                .collect(),
        }
        .normalized()
    }

    pub fn dy(&self) -> Poly2 {
        Poly2 {
            terms: self
                .terms
                .iter()
                .filter(|t| t.0.b > 0)
                .map(|&(m, c)| (Monomial2D::new(m.a, m.b - 1), c * m.b as f64))
                .collect(),
        }
        .normalized()
    }

    pub fn total_degree(&self) -> Option<usize> {
        self.terms.iter().map(|t| t.0.total_degree()).max()
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.terms.iter().map(|t| t.0.max_degree()).max()
    }

    /// Restriction to `x(s) = p + s·v`, as a polynomial in `s`.
    pub fn restrict_to_line(&self, p: Point, v: Point) -> Poly1 {
        let x = Poly1::new(vec![p[0], v[0]]);
        let y = Poly1::new(vec![p[1], v[1]]);
        let mut out = Poly1::zero();
        for &(m, c) in &self.terms {
            out = out.add(&x.pow(m.a).mul(&y.pow(m.b)).scale(c));
        }
        out
    }
}

/// Univariate polynomial in monomial coefficients, lowest degree first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Poly1 {
    pub coeffs: Vec<f64>,
}

impl Poly1 {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Poly1 { coeffs }
    }

    pub fn zero() -> Self {
        Poly1 { coeffs: vec![] }
    }

    pub fn constant(c: f64) -> Self {
        Poly1 { coeffs: vec![c] }
    }

    pub fn monomial(k: usize) -> Self {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        Poly1 { coeffs: c }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|&c| c != 0.0)
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    pub fn add(&self, o: &Poly1) -> Poly1 {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly1 {
            coeffs: (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&0.0) + o.coeffs.get(i).unwrap_or(&0.0))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Poly1 {
        Poly1 { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn mul(&self, o: &Poly1) -> Poly1 {
        if self.coeffs.is_empty() || o.coeffs.is_empty() {
            return Poly1::zero();
        }
        let mut c = vec![0.0; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly1 { coeffs: c }
    }

    pub fn pow(&self, k: usize) -> Poly1 {
        (0..k).fold(Poly1::constant(1.0), |acc, _| acc.mul(self))
    }

    pub fn derivative(&self) -> Poly1 {
        Poly1 {
            coeffs: self.coeffs.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect(),
        }
    }

    /// Exact `∫_{−1}^{1} p(s) ds`.
    pub fn integral(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| i % 2 == 0)
            .map(|(i, c)| 2.0 * c / (i + 1) as f64)
            .sum()
    }

    /// Mean over `[−1, 1]`.
    pub fn mean(&self) -> f64 {
        0.5 * self.integral()
    }
}

/// Family of 1D polynomials used for edge kernels and boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProjectorKind {
    /// Raw powers of an ambient coordinate restricted to the edge (see [`edge_basis`]);
    /// `s^j` when used through [`family`].
    Monomial,
    /// Legendre polynomials.
    Orthogonal,
    /// Probabilists' Hermite polynomials `He_j`.
    #[default]
    Hermite,
}

impl std::str::FromStr for ProjectorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "monomial" => Ok(ProjectorKind::Monomial),
            "orthogonal" | "legendre" => Ok(ProjectorKind::Orthogonal),
            "hermite" => Ok(ProjectorKind::Hermite),
            other => Err(format!("unknown projector kind `{other}`")),
        }
    }
}

impl std::fmt::Display for ProjectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProjectorKind::Monomial => "monomial",
            ProjectorKind::Orthogonal => "orthogonal",
            ProjectorKind::Hermite => "hermite",
        })
    }
}

/// The first `degree + 1` members of a family, in monomial coefficients of `s ∈ [−1, 1]`.
pub fn family(kind: ProjectorKind, degree: usize) -> Vec<Poly1> {
    let s = Poly1::monomial(1);
    let mut out = vec![Poly1::constant(1.0)];
    if degree >= 1 {
        out.push(s.clone());
    }
    for n in 1..degree {
        let next = match kind {
            ProjectorKind::Monomial => Poly1::monomial(n + 1),
            // (n+1) P_{n+1} = (2n+1) s P_n − n P_{n−1}
            ProjectorKind::Orthogonal => s
                .mul(&out[n])
                .scale((2 * n + 1) as f64)
                .add(&out[n - 1].scale(-(n as f64)))
                .scale(1.0 / (n + 1) as f64),
            // He_{n+1} = s He_n − n He_{n−1}
            ProjectorKind::Hermite => s.mul(&out[n]).add(&out[n - 1].scale(-(n as f64))),
        };
        out.push(next);
    }
    out
}

/// A polynomial living on one polygon edge, in the mapped parameter `s = 2t − 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgePolynomial {
    pub edge: usize,
    pub kind: ProjectorKind,
    pub degree: usize,
    pub poly: Poly1,
}

impl EdgePolynomial {
    /// Value at the edge parameter `t ∈ [0, 1]`.
    #[inline]
    pub fn eval_t(&self, t: f64) -> f64 {
        self.poly.eval(2.0 * t - 1.0)
    }
}

/// `degree + 1` linearly independent polynomials on `edge`.
pub fn projector_basis(edge: usize, degree: usize, kind: ProjectorKind) -> Vec<EdgePolynomial> {
    family(kind, degree)
        .into_iter()
        .enumerate()
        .map(|(j, poly)| EdgePolynomial { edge, kind, degree: j, poly })
        .collect()
}

/// Basis of degree-≤`degree` polynomials on edge `edge` of `p`. Orthogonal and
/// Hermite kinds live on the mapped parameter; the monomial kind uses raw powers of
/// the local coordinate `x_d − origin_d` along which the edge extends most.
pub fn edge_basis(p: &Polygon, origin: Point, edge: usize, degree: usize, kind: ProjectorKind) -> Vec<EdgePolynomial> {
    match kind {
        ProjectorKind::Monomial => {
            let e = p.edge(edge);
            let along_x = e.tangent[0].abs() >= e.tangent[1].abs();
            (0..=degree)
                .map(|j| {
                    let m = if along_x { Monomial2D::new(j, 0) } else { Monomial2D::new(0, j) };
                    EdgePolynomial { edge, kind, degree: j, poly: ambient_on_edge(e, origin, m) }
                })
                .collect()
        }
        _ => projector_basis(edge, degree, kind),
    }
}

/// The ambient monomial `(x − origin)^a (y − origin)^b` restricted to an edge, in `s`.
pub fn ambient_on_edge(e: &Edge, origin: Point, m: Monomial2D) -> Poly1 {
    let mid = e.midpoint();
    let half = [(e.end[0] - e.start[0]) / 2.0, (e.end[1] - e.start[1]) / 2.0];
    Poly2::monomial(m, 1.0).restrict_to_line([mid[0] - origin[0], mid[1] - origin[1]], half)
}

/// The symmetric internal projection space for order `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSpaceP {
    pub k: usize,
    pub pairs: Vec<[Poly2; 2]>,
}

impl ProjectionSpaceP {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Largest per-variable degree among all components.
    pub fn max_degree(&self) -> Option<usize> {
        self.pairs.iter().flat_map(|p| p.iter().filter_map(|c| c.max_degree())).max()
    }
}

/// `(P_{k,k−1} × P_{k−1,k})` without the top pair, plus the coupled pair
/// `(x^k y^{k−1}, x^{k−1} y^k)`.
#[allow(non_snake_case)]
pub fn build_projection_space_P(k: usize) -> ProjectionSpaceP {
    let mut pairs = Vec::new();
    if k == 0 {
        return ProjectionSpaceP { k, pairs };
    }
    for m in 0..k {
        for l in 0..=k {
            if (l, m) == (k, k - 1) {
                continue;
            }
            pairs.push([Poly2::monomial(Monomial2D::new(l, m), 1.0), Poly2::zero()]);
            pairs.push([Poly2::zero(), Poly2::monomial(Monomial2D::new(m, l), 1.0)]);
        }
    }
    pairs.push([
        Poly2::monomial(Monomial2D::new(k, k - 1), 1.0),
        Poly2::monomial(Monomial2D::new(k - 1, k), 1.0),
    ]);
    ProjectionSpaceP { k, pairs }
}
