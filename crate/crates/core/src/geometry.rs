//! Polygons, shape admissibility and triangulated sub-meshes.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[inline]
pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    let d = sub(a, b);
    d[0].hypot(d[1])
}

/// Twice the signed area of the triangle (a, b, c).
#[inline]
pub(crate) fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

/// One straight face of a polygon, parametrized by `t ∈ [0, 1]` from `start` to `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub start: Point,
    pub end: Point,
    /// Unit tangent, pointing from `start` to `end`.
    pub tangent: Point,
    /// Unit outward normal.
    pub normal: Point,
    pub length: f64,
}

impl Edge {
    fn new(start: Point, end: Point) -> Self {
        let d = sub(end, start);
        let length = d[0].hypot(d[1]);
        let tangent = [d[0] / length, d[1] / length];
        // counter-clockwise loop: the outward side is to the right of the tangent
        let normal = [tangent[1], -tangent[0]];
        Edge { start, end, tangent, normal, length }
    }

    pub fn point(&self, t: f64) -> Point {
        [
            self.start[0] + t * (self.end[0] - self.start[0]),
            self.start[1] + t * (self.end[1] - self.start[1]),
        ]
    }

    pub fn midpoint(&self) -> Point {
        self.point(0.5)
    }

    /// Distance from `p` to the closed segment, and the clamped parameter of the foot point.
    pub fn distance(&self, p: Point) -> (f64, f64) {
        let t = (dot(sub(p, self.start), self.tangent) / self.length).clamp(0.0, 1.0);
        (dist(p, self.point(t)), t)
    }
}

/// A simple polygon with counter-clockwise vertex order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polygon {
    vertices: Vec<Point>,
    #[serde(skip)]
    edges: Vec<Edge>,
}

#[derive(Deserialize)]
struct PolygonDoc {
    vertices: Vec<Point>,
}

impl<'de> Deserialize<'de> for Polygon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = PolygonDoc::deserialize(d)?;
        Polygon::new(doc.vertices).map_err(serde::de::Error::custom)
    }
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Point, q: Point, r: Point, o: f64| {
        o == 0.0
            && r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

impl Polygon {
    /// Validates a vertex loop, flipping it to counter-clockwise order if needed.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::Geometry(format!("need at least 3 vertices, got {n}")));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Geometry("non-finite coordinate".into()));
        }
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::Geometry(format!(
                    "duplicate consecutive vertices at index {i}"
                )));
            }
        }
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            for j in i + 1..n {
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // neighbours share a vertex; they only clash when folding back onto each other
                    let shared = if j == i + 1 { b } else { a };
                    let (p, q) = if j == i + 1 { (a, d) } else { (b, c) };
                    let u = sub(p, shared);
                    let v = sub(q, shared);
                    if cross(u, v) == 0.0 && dot(u, v) > 0.0 {
                        return Err(Error::Geometry(format!("edges {i} and {j} overlap")));
                    }
                } else if segments_intersect(a, b, c, d) {
                    return Err(Error::Geometry(format!(
                        "self-intersecting loop: edges {i} and {j} cross"
                    )));
                }
            }
        }
        let area2: f64 = (0..n).map(|i| cross(vertices[i], vertices[(i + 1) % n])).sum();
        if area2 == 0.0 {
            return Err(Error::Geometry("zero enclosed area".into()));
        }
        if area2 < 0.0 {
            vertices.reverse();
        }
        let edges = (0..n)
            .map(|i| Edge::new(vertices[i], vertices[(i + 1) % n]))
            .collect();
        Ok(Polygon { vertices, edges })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: PolygonDoc = serde_json::from_str(text)?;
        Polygon::new(doc.vertices)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("polygon serializes")
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    /// Number of faces 𝔫.
    pub fn n_faces(&self) -> usize {
        self.vertices.len()
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| cross(self.vertices[i], self.vertices[(i + 1) % n]))
            .sum::<f64>()
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point {
        let n = self.vertices.len();
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let (p, q) = (self.vertices[i], self.vertices[(i + 1) % n]);
            let c = cross(p, q);
            cx += (p[0] + q[0]) * c;
            cy += (p[1] + q[1]) * c;
        }
        let a6 = 6.0 * self.area();
        [cx / a6, cy / a6]
    }

    pub fn perimeter(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, &p) in self.vertices.iter().enumerate() {
            for &q in &self.vertices[i + 1..] {
                d = d.max(dist(p, q));
            }
        }
        d
    }

    /// Crossing-number test; points on the boundary may go either way.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        let n = self.vertices.len();
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.edges
            .iter()
            .map(|e| e.distance(p).0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Signed distance: positive inside, negative outside.
    pub fn signed_distance(&self, p: Point) -> f64 {
        let d = self.boundary_distance(p);
        if self.contains(p) {
            d
        } else {
            -d
        }
    }

    /// Applies an affine map `x ↦ A x + b`, renormalizing orientation.
    pub fn transformed(&self, a: [[f64; 2]; 2], b: Point) -> Result<Polygon> {
        Polygon::new(
            self.vertices
                .iter()
                .map(|p| {
                    [
                        a[0][0] * p[0] + a[0][1] * p[1] + b[0],
                        a[1][0] * p[0] + a[1][1] * p[1] + b[1],
                    ]
                })
                .collect(),
        )
    }
}

pub fn load_polygon(path: &Path) -> Result<Polygon> {
    Polygon::from_json_str(&std::fs::read_to_string(path)?)
}

/// Default tolerance for axis-parallel edge detection, in radians.
pub const DEFAULT_TOL_ANGLE: f64 = 1e-9;
/// Edges this close to an axis trigger a conditioning warning.
pub const NEAR_PARALLEL_ANGLE: f64 = 1e-3;
/// Minimal |(x_f − c)·n_f| / diameter for the face-wise `x·n` factor to be usable.
pub const MIN_SUPPORT_OFFSET: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub axis_parallel_edges: Vec<usize>,
    /// Edges within [`NEAR_PARALLEL_ANGLE`] of an axis (superset of the axis-parallel ones).
    pub near_parallel_edges: Vec<usize>,
    /// Circumscribed over inscribed circle radius.
    pub aspect_ratio: f64,
    pub ok_for_coordinate_dofs: bool,
    /// `(x_f − c)·n_f` per edge, with `c` the area centroid.
    pub support_offsets: Vec<f64>,
    /// Edges whose supporting line passes (numerically) through the centroid.
    pub degenerate_support_edges: Vec<usize>,
    pub warnings: Vec<String>,
}

fn axis_angle(e: &Edge) -> f64 {
    // angle to the nearest coordinate axis
    let a = e.tangent[0].abs().min(e.tangent[1].abs());
    a.clamp(0.0, 1.0).asin()
}

pub fn check_admissibility(p: &Polygon, tol_angle: f64) -> AdmissibilityReport {
    let mut axis = Vec::new();
    let mut near = Vec::new();
    for (i, e) in p.edges().iter().enumerate() {
        let a = axis_angle(e);
        if a <= tol_angle {
            axis.push(i);
        }
        if a <= NEAR_PARALLEL_ANGLE {
            near.push(i);
        }
    }
    let c = p.centroid();
    let diam = p.diameter();
    let offsets: Vec<f64> = p
        .edges()
        .iter()
        .map(|e| dot(sub(e.midpoint(), c), e.normal))
        .collect();
    let degenerate: Vec<usize> = offsets
        .iter()
        .enumerate()
        .filter(|(_, o)| o.abs() < MIN_SUPPORT_OFFSET * diam)
        .map(|(i, _)| i)
        .collect();
    let mut warnings = Vec::new();
    for &i in &near {
        if !axis.contains(&i) {
            warnings.push(format!(
                "edge {i} is nearly parallel to a coordinate axis; coordinate-wise moments will be ill-conditioned"
            ));
        }
    }
    for &i in &degenerate {
        warnings.push(format!("the supporting line of edge {i} passes through the centroid"));
    }
    let inradius = inscribed_radius(p);
    let aspect_ratio = enclosing_radius(p.vertices()) / inradius;
    AdmissibilityReport {
        ok_for_coordinate_dofs: axis.is_empty(),
        axis_parallel_edges: axis,
        near_parallel_edges: near,
        aspect_ratio,
        support_offsets: offsets,
        degenerate_support_edges: degenerate,
        warnings,
    }
}

fn circle_two(a: Point, b: Point) -> (Point, f64) {
    let c = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    (c, dist(a, c))
}

fn circle_three(a: Point, b: Point, c: Point) -> Option<(Point, f64)> {
    let d = 2.0 * orient(a, b, c);
    if d.abs() < 1e-300 {
        return None;
    }
    let (a2, b2, c2) = (dot(a, a), dot(b, b), dot(c, c));
    let ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d;
    let uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d;
    let o = [ux, uy];
    Some((o, dist(o, a)))
}

/// Radius of the minimum enclosing circle (brute force; polygons are small).
fn enclosing_radius(pts: &[Point]) -> f64 {
    let covers = |c: Point, r: f64| pts.iter().all(|&p| dist(p, c) <= r * (1.0 + 1e-12));
    let mut best = f64::INFINITY;
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            let (c, r) = circle_two(pts[i], pts[j]);
            if r < best && covers(c, r) {
                best = r;
            }
            for k in j + 1..n {
                if let Some((c, r)) = circle_three(pts[i], pts[j], pts[k]) {
                    if r < best && covers(c, r) {
                        best = r;
                    }
                }
            }
        }
    }
    best
}

/// Radius of the largest inscribed circle (pole of inaccessibility by cell subdivision).
fn inscribed_radius(p: &Polygon) -> f64 {
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Cell {
        c: Point,
        h: f64,
        d: f64,
        pot: f64,
    }
    impl Eq for Cell {}
    impl PartialOrd for Cell {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Cell {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            self.pot.total_cmp(&o.pot)
        }
    }
    let cell = |c: Point, h: f64| {
        let d = p.signed_distance(c);
        Cell { c, h, d, pot: d + h * std::f64::consts::SQRT_2 }
    };

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in p.vertices() {
        for d in 0..2 {
            lo[d] = lo[d].min(v[d]);
            hi[d] = hi[d].max(v[d]);
        }
    }
    let size = (hi[0] - lo[0]).min(hi[1] - lo[1]);
    let precision = 1e-7 * p.diameter();
    let mut heap = BinaryHeap::new();
    let h = size / 2.0;
    let mut x = lo[0];
    while x < hi[0] {
        let mut y = lo[1];
        while y < hi[1] {
            heap.push(cell([x + h, y + h], h));
            y += size;
        }
        x += size;
    }
    let mut best = p.signed_distance(p.centroid());
    let mut budget = 1_000_000usize;
    while let Some(c) = heap.pop() {
        best = best.max(c.d);
        if c.pot - best <= precision || budget == 0 {
            break;
        }
        budget -= 1;
        let h2 = c.h / 2.0;
        for (dx, dy) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
            heap.push(cell([c.c[0] + dx * h2, c.c[1] + dy * h2], h2));
        }
    }
    best
}

/// Where a sub-mesh node sits relative to the polygon boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryTag {
    Interior,
    /// Strictly inside polygon edge `edge`, at parameter `t`.
    OnEdge { edge: usize, t: f64 },
    /// At polygon vertex `vertex` (start of edge `vertex`, end of edge `vertex − 1`).
    Corner { vertex: usize },
}

impl BoundaryTag {
    pub fn is_boundary(&self) -> bool {
        !matches!(self, BoundaryTag::Interior)
    }

    /// Parameter of this node along polygon edge `edge`, if it lies on that edge.
    pub fn param_on(&self, edge: usize, n_faces: usize) -> Option<f64> {
        match *self {
            BoundaryTag::Interior => None,
            BoundaryTag::OnEdge { edge: e, t } => (e == edge).then_some(t),
            BoundaryTag::Corner { vertex } => {
                if vertex == edge {
                    Some(0.0)
                } else if (vertex + n_faces - 1) % n_faces == edge {
                    Some(1.0)
                } else {
                    None
                }
            }
        }
    }

    /// Polygon edges this node touches.
    pub fn edges(&self, n_faces: usize) -> Vec<usize> {
        match *self {
            BoundaryTag::Interior => vec![],
            BoundaryTag::OnEdge { edge, .. } => vec![edge],
            BoundaryTag::Corner { vertex } => vec![vertex, (vertex + n_faces - 1) % n_faces],
        }
    }
}

/// The polygon edge shared by two boundary tags, with both parameters along it.
pub(crate) fn common_edge(a: BoundaryTag, b: BoundaryTag, n: usize) -> Option<(usize, f64, f64)> {
    for e in a.edges(n) {
        if let (Some(ta), Some(tb)) = (a.param_on(e, n), b.param_on(e, n)) {
            return Some((e, ta, tb));
        }
    }
    None
}

/// Conforming triangulation of a polygon.
#[derive(Debug)]
pub struct SubMesh {
    pub polygon: Polygon,
    pub nodes: Vec<Point>,
    /// Counter-clockwise triangles.
    pub triangles: Vec<[usize; 3]>,
    pub tags: Vec<BoundaryTag>,
    /// Largest triangle diameter.
    pub h: f64,
    locator: OnceLock<Locator>,
}

fn tri_diameter(p: [Point; 3]) -> f64 {
    dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0]))
}

fn tri_min_angle(a: Point, b: Point, c: Point) -> f64 {
    let ang = |p: Point, q: Point, r: Point| {
        let u = sub(q, p);
        let v = sub(r, p);
        cross(u, v).abs().atan2(dot(u, v))
    };
    ang(a, b, c).min(ang(b, c, a)).min(ang(c, a, b))
}

fn point_in_triangle(p: Point, a: Point, b: Point, c: Point) -> bool {
    orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0
}

/// Ear clipping; among the valid ears the one with the best minimum angle is cut first.
fn ear_clip(p: &Polygon) -> Result<Vec<[usize; 3]>> {
    let v = p.vertices();
    let mut ring: Vec<usize> = (0..v.len()).collect();
    let mut tris = Vec::with_capacity(v.len() - 2);
    while ring.len() > 3 {
        let m = ring.len();
        let mut best: Option<(usize, f64)> = None;
        for i in 0..m {
            let (ia, ib, ic) = (ring[(i + m - 1) % m], ring[i], ring[(i + 1) % m]);
            let (a, b, c) = (v[ia], v[ib], v[ic]);
            if orient(a, b, c) <= 0.0 {
                continue;
            }
            let blocked = ring.iter().any(|&j| {
                j != ia && j != ib && j != ic && v[j] != a && v[j] != b && v[j] != c
                    && point_in_triangle(v[j], a, b, c)
            });
            if blocked {
                continue;
            }
            let q = tri_min_angle(a, b, c);
            if best.map_or(true, |(_, bq)| q > bq) {
                best = Some((i, q));
            }
        }
        let (i, _) = best.ok_or_else(|| Error::Mesh("no ear found; polygon not simple?".into()))?;
        tris.push([ring[(i + m - 1) % m], ring[i], ring[(i + 1) % m]]);
        ring.remove(i);
    }
    tris.push([ring[0], ring[1], ring[2]]);
    Ok(tris)
}

/// Ear-clips the polygon and refines uniformly (4-way midpoint split) until `h ≤ h_target`.
pub fn triangulate(p: &Polygon, h_target: f64) -> Result<SubMesh> {
    if !(h_target > 0.0) {
        return Err(Error::Mesh(format!("h_target must be positive, got {h_target}")));
    }
    let n = p.n_faces();
    let mut nodes: Vec<Point> = p.vertices().to_vec();
    let mut tags: Vec<BoundaryTag> = (0..n).map(|vertex| BoundaryTag::Corner { vertex }).collect();
    let mut triangles = ear_clip(p)?;
    let area = p.area();
    for t in &triangles {
        let a = 0.5 * orient(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
        if a < 1e-14 * area {
            return Err(Error::Mesh(format!("degenerate triangle of area {a:e}")));
        }
    }
    let diam = |tris: &[[usize; 3]], nodes: &[Point]| {
        tris.iter()
            .map(|t| tri_diameter([nodes[t[0]], nodes[t[1]], nodes[t[2]]]))
            .fold(0.0, f64::max)
    };
    let mut h = diam(&triangles, &nodes);
    while h > h_target {
        if triangles.len() > 4_000_000 {
            return Err(Error::Mesh(format!("h_target = {h_target:e} needs too many triangles")));
        }
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(4 * triangles.len());
        for t in &triangles {
            let mut m = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                m[k] = *mids.entry(key).or_insert_with(|| {
                    let (pa, pb) = (nodes[a], nodes[b]);
                    nodes.push([(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0]);
                    tags.push(match common_edge(tags[a], tags[b], n) {
                        Some((edge, ta, tb)) => BoundaryTag::OnEdge { edge, t: (ta + tb) / 2.0 },
                        None => BoundaryTag::Interior,
                    });
                    nodes.len() - 1
                });
            }
            next.push([t[0], m[0], m[2]]);
            next.push([m[0], t[1], m[1]]);
            next.push([m[2], m[1], t[2]]);
            next.push([m[0], m[1], m[2]]);
        }
        triangles = next;
        h /= 2.0;
    }
    let h = diam(&triangles, &nodes);
    Ok(SubMesh { polygon: p.clone(), nodes, triangles, tags, h, locator: OnceLock::new() })
}

#[derive(Debug)]
struct Locator {
    lo: Point,
    cell: f64,
    dims: [usize; 2],
    buckets: Vec<Vec<u32>>,
}

impl SubMesh {
    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, i: usize) -> [Point; 3] {
        let t = self.triangles[i];
        [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]]
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangle_points(i);
        0.5 * orient(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.triangle_area(i)).sum()
    }

    fn locator(&self) -> &Locator {
        self.locator.get_or_init(|| {
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for v in &self.nodes {
                for d in 0..2 {
                    lo[d] = lo[d].min(v[d]);
                    hi[d] = hi[d].max(v[d]);
                }
            }
            let ext = [(hi[0] - lo[0]).max(1e-300), (hi[1] - lo[1]).max(1e-300)];
            let target = (self.triangles.len() as f64 / 2.0).max(1.0);
            let cell = (ext[0] * ext[1] / target).sqrt();
            let dims = [
                ((ext[0] / cell).ceil() as usize).max(1),
                ((ext[1] / cell).ceil() as usize).max(1),
            ];
            let mut buckets = vec![Vec::new(); dims[0] * dims[1]];
            let idx = |x: f64, d: usize| (((x - lo[d]) / cell).floor().max(0.0) as usize).min(dims[d] - 1);
            for (ti, _) in self.triangles.iter().enumerate() {
                let pts = self.triangle_points(ti);
                let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
                for q in pts {
                    for d in 0..2 {
                        a[d] = a[d].min(q[d]);
                        b[d] = b[d].max(q[d]);
                    }
                }
                for i in idx(a[0], 0)..=idx(b[0], 0) {
                    for j in idx(a[1], 1)..=idx(b[1], 1) {
                        buckets[j * dims[0] + i].push(ti as u32);
                    }
                }
            }
            Locator { lo, cell, dims, buckets }
        })
    }

    /// Barycentric coordinates of `p` in triangle `ti`.
    pub fn barycentric(&self, ti: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.triangle_points(ti);
        let det = orient(a, b, c);
        let l1 = orient(p, b, c) / det;
        let l2 = orient(a, p, c) / det;
        [l1, l2, 1.0 - l1 - l2]
    }

    /// Finds a triangle containing `p` (closure, with a small tolerance), returning the
    /// triangle index and the reference coordinates `(ξ, η)` of `p` in it.
    pub fn locate(&self, p: Point) -> Result<(usize, [f64; 2])> {
        let diam = self.polygon.diameter();
        if self.polygon.signed_distance(p) < -1e-10 * diam {
            return Err(Error::Domain(format!("({}, {}) lies outside the polygon", p[0], p[1])));
        }
        let loc = self.locator();
        let ci = |d: usize| {
            let f = ((p[d] - loc.lo[d]) / loc.cell).floor();
            (f.max(0.0) as usize).min(loc.dims[d] - 1)
        };
        let (i0, j0) = (ci(0), ci(1));
        let mut best: Option<(usize, f64)> = None;
        for ring in 0..3usize {
            let (ia, ib) = (i0.saturating_sub(ring), (i0 + ring).min(loc.dims[0] - 1));
            let (ja, jb) = (j0.saturating_sub(ring), (j0 + ring).min(loc.dims[1] - 1));
            for i in ia..=ib {
                for j in ja..=jb {
                    for &t in &loc.buckets[j * loc.dims[0] + i] {
                        let l = self.barycentric(t as usize, p);
                        let m = l[0].min(l[1]).min(l[2]);
                        if m >= -1e-12 {
                            return Ok((t as usize, [l[1], l[2]]));
                        }
                        if best.map_or(true, |(_, bm)| m > bm) {
                            best = Some((t as usize, m));
                        }
                    }
                }
            }
            if ring == 0 && best.is_some() && best.unwrap().1 > -1e-8 {
                break;
            }
        }
        let (t, _) = best.ok_or_else(|| Error::Domain("point location failed".into()))?;
        // clamp onto the closest triangle (points within tolerance of the boundary)
        let l = self.barycentric(t, p);
        let c: Vec<f64> = l.iter().map(|x| x.max(0.0)).collect();
        let s: f64 = c.iter().sum();
        Ok((t, [c[1] / s, c[2] / s]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> Polygon {
        Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap()
    }

    #[test]
    fn right_triangle_edges() {
        let p = tri();
        assert_eq!(p.n_faces(), 3);
        let l: Vec<f64> = p.edges().iter().map(|e| e.length).collect();
        assert!((l[0] - 1.0).abs() < 1e-15);
        assert!((l[1] - 2f64.sqrt()).abs() < 1e-15);
        assert!((l[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn clockwise_input_is_flipped() {
        let cw = Polygon::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(cw.area() > 0.0);
        let same: Vec<_> = cw.vertices().to_vec();
        // same vertex set in counter-clockwise order
        assert!(same.contains(&[1.0, 0.0]) && same.contains(&[0.0, 1.0]));
        assert!((cw.area() - tri().area()).abs() < 1e-15);
    }

    #[test]
    fn figure_eight_rejected() {
        let e = Polygon::new(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).unwrap_err();
        assert_eq!(e.kind(), "GeometryError");
    }

    #[test]
    fn duplicate_vertices_rejected() {
        let e = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap_err();
        assert_eq!(e.kind(), "GeometryError");
    }

    #[test]
    fn normals_orthogonal_and_unit() {
        let p = Polygon::new(vec![[0.0, 0.0], [3.0, 4.0], [-1.0, 5.0], [-2.0, 1.0]]).unwrap();
        for e in p.edges() {
            assert!(dot(e.normal, e.tangent).abs() < 1e-14);
            assert!((e.normal[0].hypot(e.normal[1]) - 1.0).abs() < 1e-14);
            // outward: the centroid is on the inner side
            assert!(dot(sub(e.midpoint(), p.centroid()), e.normal) > 0.0);
        }
    }

    #[test]
    fn square_admissibility() {
        let sq = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let r = check_admissibility(&sq, DEFAULT_TOL_ANGLE);
        assert_eq!(r.axis_parallel_edges, vec![0, 1, 2, 3]);
        assert!(!r.ok_for_coordinate_dofs);
        // circumradius √2/2 over inradius 1/2
        assert!((r.aspect_ratio - 2f64.sqrt()).abs() < 1e-5, "{}", r.aspect_ratio);

        let (s, c) = (20f64.to_radians().sin(), 20f64.to_radians().cos());
        let rot = sq.transformed([[c, -s], [s, c]], [0.0, 0.0]).unwrap();
        let r = check_admissibility(&rot, DEFAULT_TOL_ANGLE);
        assert!(r.axis_parallel_edges.is_empty());
        assert!(r.ok_for_coordinate_dofs);
    }

    #[test]
    fn coarse_triangle_mesh_is_itself() {
        let p = tri();
        let m = triangulate(&p, 10.0).unwrap();
        assert_eq!(m.n_triangles(), 1);
    }

    #[test]
    fn one_refinement_gives_four_congruent() {
        let p = tri();
        let m = triangulate(&p, 0.75).unwrap();
        assert_eq!(m.n_triangles(), 4);
        for i in 0..4 {
            assert!((m.triangle_area(i) - 0.125).abs() < 1e-15);
        }
        assert!((m.total_area() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn nonconvex_mesh_area_and_tags() {
        let p = Polygon::new(vec![
            [0.0, 0.0],
            [2.0, 0.3],
            [1.0, 0.9],
            [2.1, 1.8],
            [0.2, 1.5],
        ])
        .unwrap();
        let m = triangulate(&p, p.diameter() / 16.0).unwrap();
        assert!(m.h <= p.diameter() / 16.0);
        assert!(((m.total_area() - p.area()) / p.area()).abs() < 1e-12);
        for (i, tag) in m.tags.iter().enumerate() {
            let x = m.nodes[i];
            match *tag {
                BoundaryTag::OnEdge { edge, t } => {
                    assert!(dist(p.edge(edge).point(t), x) < 1e-13);
                }
                BoundaryTag::Corner { vertex } => assert_eq!(p.vertices()[vertex], x),
                BoundaryTag::Interior => assert!(p.boundary_distance(x) > 1e-12),
            }
        }
    }

    #[test]
    fn locate_inside_and_outside() {
        let p = tri();
        let m = triangulate(&p, 0.2).unwrap();
        let (t, xi) = m.locate([0.3, 0.2]).unwrap();
        let [a, b, c] = m.triangle_points(t);
        let x = [
            a[0] + xi[0] * (b[0] - a[0]) + xi[1] * (c[0] - a[0]),
            a[1] + xi[0] * (b[1] - a[1]) + xi[1] * (c[1] - a[1]),
        ];
        assert!(dist(x, [0.3, 0.2]) < 1e-14);
        assert_eq!(m.locate([0.8, 0.8]).unwrap_err().kind(), "DomainError");
        assert!(m.locate([1.0, 0.0]).is_ok());
    }
}
