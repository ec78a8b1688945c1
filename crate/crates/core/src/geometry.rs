//! Tree-simplex construction, products of configurations, cuboid
//! decomposition, and exact distance verification.
//!
//! A tree-simplex realizes a rooted tree as points with two exact distance
//! guarantees: siblings sit at distance `a` and ancestor-descendant pairs at
//! distance `b`. The construction is inductive. A single vertex becomes a
//! single point; to extend a leaf `v` with `k` children, an apex `x` is
//! placed equidistant from the chain through `v` (distance `b/√2` from each
//! chain point), and child `i` is
//!
//! ```text
//! wᵢ = x + √((b² − a²)/2)·e_height + (a/√2)·e_child_i
//! ```
//!
//! on fresh axes. The apex is fixed deterministically as the chain centroid
//! offset by `b/√(2m)` on a fresh axis, `m` being the chain length: the
//! chain is a regular simplex of side `b`, whose circumradius squared is
//! `b²(m−1)/(2m)`, leaving exact height `b²/(2m)`. Leaves are extended in
//! depth-first preorder and every extension consumes `2 + k` fresh axes
//! (apex, height, children); dimension is never compacted.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{radical_sqrt, ratio_serde, sq_norm_diff, RadicalScalar};
use crate::trees::{ProductShape, ProductVertex, Relation, TreeAddress, TreeShape, VertexId};

/// Cap on materialized decomposition size (total repeated sides).
const DECOMPOSITION_CAP: u64 = 100_000;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("side parameters must satisfy 0 < a² ≤ b², got a²={a2}, b²={b2}")]
    InvalidSides { a2: BigRational, b2: BigRational },
    #[error("cuboid sides must all be positive, got {0}")]
    NonPositiveSide(BigRational),
    #[error("empty factor list")]
    EmptyProduct,
    #[error("materializing {needed} items exceeds the budget of {budget}")]
    BudgetExceeded { needed: BigUint, budget: u64 },
    #[error("expected {expected} corners, got {got}")]
    WrongCornerCount { expected: usize, got: usize },
    #[error("point index {0} out of range")]
    BadPointIndex(usize),
    #[error("configuration is not a pure tree product")]
    NotTreeProduct,
    #[error("malformed configuration: {0}")]
    Malformed(String),
    #[error(transparent)]
    Tree(#[from] crate::trees::TreeError),
}

/// A finite list of points with exact coordinates, all of one dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSet {
    dimension: usize,
    points: Vec<Vec<RadicalScalar>>,
}

impl PointSet {
    pub fn new(dimension: usize, points: Vec<Vec<RadicalScalar>>) -> Self {
        debug_assert!(points.iter().all(|p| p.len() == dimension));
        PointSet { dimension, points }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[RadicalScalar] {
        &self.points[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<RadicalScalar>> {
        self.points.iter()
    }

    pub fn sq_dist(&self, i: usize, j: usize) -> RadicalScalar {
        sq_norm_diff(&self.points[i], &self.points[j])
    }

    /// `k` points pairwise at distance `√side2`: point `i` is `√(side2/2)`
    /// on its own axis.
    pub fn regular_simplex(k: usize, side2: &BigRational) -> Result<PointSet, GeometryError> {
        if !side2.is_positive() {
            return Err(GeometryError::NonPositiveSide(side2.clone()));
        }
        let two = BigRational::from_integer(BigInt::from(2));
        let offset = radical_sqrt(&(side2 / &two)).expect("nonnegative");
        let points = (0..k)
            .map(|i| {
                let mut p = vec![RadicalScalar::zero(); k];
                p[i] = offset.clone();
                p
            })
            .collect();
        Ok(PointSet::new(k, points))
    }

    /// Floating-point image of every point, for reports.
    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .map(|p| p.iter().map(RadicalScalar::to_f64).collect())
            .collect()
    }
}

/// One extension step of the inductive construction, kept for re-checking
/// the apex identities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionRecord {
    /// The leaf that received children.
    pub vertex: VertexId,
    /// Chain root → … → vertex whose points the apex is equidistant from.
    pub chain: Vec<VertexId>,
    /// The apex point itself (not part of the configuration).
    pub apex: Vec<RadicalScalar>,
    pub apex_axis: usize,
    pub height_axis: usize,
    pub child_axes: Vec<usize>,
}

/// A rooted tree realized as an exact point set: siblings at distance `a`,
/// ancestor-descendant pairs at distance `b`, one point per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeSimplex {
    pub shape: TreeShape,
    pub a2: BigRational,
    pub b2: BigRational,
    pub points: PointSet,
    pub extensions: Vec<ExtensionRecord>,
}

fn pad_to(v: &mut Vec<RadicalScalar>, dim: usize) {
    while v.len() < dim {
        v.push(RadicalScalar::zero());
    }
}

/// Builds the tree-simplex for `shape` with sibling distance squared `a2`
/// and ancestor distance squared `b2`. Requires `0 < a² ≤ b²`.
pub fn build_tree_simplex(
    shape: &TreeShape,
    a2: &BigRational,
    b2: &BigRational,
) -> Result<TreeSimplex, GeometryError> {
    if !a2.is_positive() || !b2.is_positive() || a2 > b2 {
        return Err(GeometryError::InvalidSides {
            a2: a2.clone(),
            b2: b2.clone(),
        });
    }
    let n = shape.vertex_count();
    let two = BigRational::from_integer(BigInt::from(2));
    let height_offset = radical_sqrt(&((b2 - a2) / &two)).expect("b² ≥ a²");
    let child_offset = radical_sqrt(&(a2 / &two)).expect("a² > 0");

    let mut pts: Vec<Vec<RadicalScalar>> = vec![Vec::new(); n];
    let mut extensions: Vec<ExtensionRecord> = Vec::new();
    let mut dim = 0usize;

    for v in shape.preorder() {
        if shape.is_leaf(v) {
            continue;
        }
        let chain = shape.chain_from_root(v);
        let m = chain.len();
        let inv_m = BigRational::new(BigInt::one(), BigInt::from(m));

        // Apex: chain centroid plus the exact height on a fresh axis.
        let apex_axis = dim;
        let mut apex: Vec<RadicalScalar> = vec![RadicalScalar::zero(); dim + 1];
        for &s in &chain {
            for (j, c) in pts[s].iter().enumerate() {
                if !c.is_zero() {
                    apex[j] += c;
                }
            }
        }
        for c in apex.iter_mut() {
            *c = c.scaled(&inv_m);
        }
        let two_m = BigRational::from_integer(BigInt::from(2 * m));
        apex[apex_axis] = radical_sqrt(&(b2 / &two_m)).expect("positive");

        let height_axis = dim + 1;
        let kids = shape.children(v).to_vec();
        let mut child_axes = Vec::with_capacity(kids.len());
        for (i, &c) in kids.iter().enumerate() {
            let child_axis = dim + 2 + i;
            let mut w = apex.clone();
            pad_to(&mut w, child_axis + 1);
            w[height_axis] = height_offset.clone();
            w[child_axis] = child_offset.clone();
            pts[c] = w;
            child_axes.push(child_axis);
        }
        extensions.push(ExtensionRecord {
            vertex: v,
            chain,
            apex,
            apex_axis,
            height_axis,
            child_axes,
        });
        dim += 2 + kids.len();
    }

    for p in pts.iter_mut() {
        pad_to(p, dim);
    }
    for e in extensions.iter_mut() {
        pad_to(&mut e.apex, dim);
    }
    Ok(TreeSimplex {
        shape: shape.clone(),
        a2: a2.clone(),
        b2: b2.clone(),
        points: PointSet::new(dim, pts),
        extensions,
    })
}

/// A single distance or structure violation, with the offending pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Violation {
    SiblingDistance {
        u: VertexId,
        v: VertexId,
        #[serde(with = "ratio_serde::rational")]
        expected: BigRational,
        actual: RadicalScalar,
    },
    AncestorDistance {
        u: VertexId,
        v: VertexId,
        #[serde(with = "ratio_serde::rational")]
        expected: BigRational,
        actual: RadicalScalar,
    },
    /// No axis exists on which this vertex is nonzero while every
    /// non-descendant is zero.
    PrivateAxis { vertex: VertexId },
    ApexDistance {
        extension: usize,
        to: VertexId,
        actual: RadicalScalar,
    },
    ApexHeight {
        extension: usize,
        actual: RadicalScalar,
    },
}

/// Outcome of exact verification of a tree-simplex.
#[derive(Clone, Debug, Serialize)]
pub struct InvariantReport {
    pub violations: Vec<Violation>,
    pub sibling_pairs: usize,
    pub ancestor_pairs: usize,
    pub unconstrained_pairs: usize,
    pub extensions_checked: usize,
    pub affine_rank: usize,
    pub affine_rank_expected: usize,
}

impl InvariantReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.affine_rank == self.affine_rank_expected
    }
}

fn eq_rational(x: &RadicalScalar, r: &BigRational) -> bool {
    *x == RadicalScalar::from_rational(r.clone())
}

/// Finds an axis on which `v` is the unique nonzero entry among all
/// vertices that are not strict descendants of `v`. Every non-root vertex
/// of a built tree-simplex owns one (its child axis); together these give
/// an echelon structure that forces affine independence.
pub fn find_private_axis(points: &PointSet, shape: &TreeShape, v: VertexId) -> Option<usize> {
    let pv = points.point(v);
    'axes: for (axis, c) in pv.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        for u in shape.vertices() {
            if u == v || shape.is_strict_ancestor(v, u) {
                continue;
            }
            if !points.point(u)[axis].is_zero() {
                continue 'axes;
            }
        }
        return Some(axis);
    }
    None
}

/// Rank of a float matrix by Gaussian elimination with the given pivot
/// tolerance.
pub fn float_rank(mut rows: Vec<Vec<f64>>, tol: f64) -> usize {
    let nrows = rows.len();
    if nrows == 0 {
        return 0;
    }
    let ncols = rows[0].len();
    let mut rank = 0;
    let mut row = 0;
    for col in 0..ncols {
        if row >= nrows {
            break;
        }
        let (best, best_val) = (row..nrows)
            .map(|r| (r, rows[r][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if best_val <= tol {
            continue;
        }
        rows.swap(row, best);
        for r in row + 1..nrows {
            let factor = rows[r][col] / rows[row][col];
            for c in col..ncols {
                rows[r][c] -= factor * rows[row][c];
            }
        }
        rank += 1;
        row += 1;
    }
    rank
}

/// Exactly re-checks every invariant of a tree-simplex: sibling pairs at
/// `a²`, ancestor pairs at `b²`, a private axis for every non-root vertex,
/// the apex identities of every recorded extension, and (numerically) full
/// affine rank.
pub fn verify_tree_simplex(ts: &TreeSimplex) -> InvariantReport {
    let shape = &ts.shape;
    let n = shape.vertex_count();
    let mut violations = Vec::new();
    let mut sibling_pairs = 0;
    let mut ancestor_pairs = 0;
    let mut unconstrained_pairs = 0;

    for u in 0..n {
        for v in u + 1..n {
            match shape.relation_ids(u, v) {
                Relation::Siblings => {
                    sibling_pairs += 1;
                    let d = ts.points.sq_dist(u, v);
                    if !eq_rational(&d, &ts.a2) {
                        violations.push(Violation::SiblingDistance {
                            u,
                            v,
                            expected: ts.a2.clone(),
                            actual: d,
                        });
                    }
                }
                Relation::AncestorDescendant => {
                    ancestor_pairs += 1;
                    let d = ts.points.sq_dist(u, v);
                    if !eq_rational(&d, &ts.b2) {
                        violations.push(Violation::AncestorDistance {
                            u,
                            v,
                            expected: ts.b2.clone(),
                            actual: d,
                        });
                    }
                }
                Relation::Other => unconstrained_pairs += 1,
                Relation::Equal => unreachable!("u < v"),
            }
        }
    }

    for v in shape.vertices() {
        if v == shape.root() {
            continue;
        }
        if find_private_axis(&ts.points, shape, v).is_none() {
            violations.push(Violation::PrivateAxis { vertex: v });
        }
    }

    let two = BigRational::from_integer(BigInt::from(2));
    let half_b2 = &ts.b2 / &two;
    for (idx, ext) in ts.extensions.iter().enumerate() {
        for &s in &ext.chain {
            let d = sq_norm_diff(&ext.apex, ts.points.point(s));
            if !eq_rational(&d, &half_b2) {
                violations.push(Violation::ApexDistance {
                    extension: idx,
                    to: s,
                    actual: d,
                });
            }
        }
        let m = ext.chain.len();
        let h = &ext.apex[ext.apex_axis];
        let h2 = h * h;
        let expected = &ts.b2 / BigRational::from_integer(BigInt::from(2 * m));
        if !eq_rational(&h2, &expected) {
            violations.push(Violation::ApexHeight {
                extension: idx,
                actual: h2,
            });
        }
    }

    let root = shape.root();
    let rows: Vec<Vec<f64>> = shape
        .vertices()
        .filter(|&v| v != root)
        .map(|v| {
            ts.points
                .point(v)
                .iter()
                .zip(ts.points.point(root))
                .map(|(a, b)| a.to_f64() - b.to_f64())
                .collect()
        })
        .collect();
    let affine_rank = float_rank(rows, 1e-6);

    InvariantReport {
        violations,
        sibling_pairs,
        ancestor_pairs,
        unconstrained_pairs,
        extensions_checked: ts.extensions.len(),
        affine_rank,
        affine_rank_expected: n - 1,
    }
}

/// One factor of a configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum FactorKind {
    Tree(TreeSimplex),
    Plain(PointSet),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub kind: FactorKind,
    pub axis_offset: usize,
}

impl Factor {
    pub fn point_set(&self) -> &PointSet {
        match &self.kind {
            FactorKind::Tree(ts) => &ts.points,
            FactorKind::Plain(ps) => ps,
        }
    }

    pub fn count(&self) -> usize {
        self.point_set().len()
    }

    pub fn dimension(&self) -> usize {
        self.point_set().dimension()
    }
}

/// A finite point set together with the factor structure that generated it.
///
/// Cells are tuples of per-factor vertex ids, indexed row-major with the
/// last factor varying fastest; the point of a cell is the concatenation of
/// the factor points on disjoint axis blocks, so squared distances add
/// across factors.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    dimension: usize,
    points: PointSet,
    factors: Vec<Factor>,
    strides: Vec<usize>,
}

impl Configuration {
    pub fn from_tree_simplex(ts: TreeSimplex) -> Self {
        let points = ts.points.clone();
        let dimension = points.dimension();
        Configuration {
            dimension,
            points,
            factors: vec![Factor {
                kind: FactorKind::Tree(ts),
                axis_offset: 0,
            }],
            strides: vec![1],
        }
    }

    pub fn from_point_set(ps: PointSet) -> Self {
        let dimension = ps.dimension();
        Configuration {
            dimension,
            points: ps.clone(),
            factors: vec![Factor {
                kind: FactorKind::Plain(ps),
                axis_offset: 0,
            }],
            strides: vec![1],
        }
    }

    /// Cartesian product on disjoint axis blocks. Refuses to materialize
    /// more than `budget` points.
    pub fn product(parts: &[Configuration], budget: u64) -> Result<Self, GeometryError> {
        if parts.is_empty() {
            return Err(GeometryError::EmptyProduct);
        }
        let mut needed = BigUint::one();
        for part in parts {
            needed *= BigUint::from(part.points.len());
        }
        if needed > BigUint::from(budget) {
            return Err(GeometryError::BudgetExceeded { needed, budget });
        }

        let mut factors = Vec::new();
        let mut axis_offset = 0usize;
        for part in parts {
            for f in &part.factors {
                factors.push(Factor {
                    kind: f.kind.clone(),
                    axis_offset,
                });
                axis_offset += f.dimension();
            }
        }
        let dimension = axis_offset;
        Self::assemble(dimension, factors)
    }

    fn assemble(dimension: usize, factors: Vec<Factor>) -> Result<Self, GeometryError> {
        let counts: Vec<usize> = factors.iter().map(Factor::count).collect();
        let mut strides = vec![1usize; factors.len()];
        let mut total = 1usize;
        for i in (0..factors.len()).rev() {
            strides[i] = total;
            total = total
                .checked_mul(counts[i])
                .ok_or(GeometryError::BudgetExceeded {
                    needed: counts.iter().map(|&c| BigUint::from(c)).product(),
                    budget: usize::MAX as u64,
                })?;
        }

        let mut points = Vec::with_capacity(total);
        let mut coords = vec![0usize; factors.len()];
        for _ in 0..total {
            let mut p = vec![RadicalScalar::zero(); dimension];
            for (f, &v) in factors.iter().zip(&coords) {
                for (j, c) in f.point_set().point(v).iter().enumerate() {
                    if !c.is_zero() {
                        p[f.axis_offset + j] = c.clone();
                    }
                }
            }
            points.push(p);
            // Odometer, last factor fastest.
            for i in (0..factors.len()).rev() {
                coords[i] += 1;
                if coords[i] < counts[i] {
                    break;
                }
                coords[i] = 0;
            }
        }
        Ok(Configuration {
            dimension,
            points: PointSet::new(dimension, points),
            factors,
            strides,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor_counts(&self) -> Vec<usize> {
        self.factors.iter().map(Factor::count).collect()
    }

    pub fn cell_index(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.factors.len());
        coords
            .iter()
            .zip(&self.strides)
            .map(|(&v, &s)| v * s)
            .sum()
    }

    pub fn coords_of(&self, mut idx: usize) -> Vec<usize> {
        let mut coords = vec![0; self.factors.len()];
        for i in 0..self.factors.len() {
            coords[i] = idx / self.strides[i];
            idx %= self.strides[i];
        }
        coords
    }

    pub fn sq_dist(&self, i: usize, j: usize) -> RadicalScalar {
        self.points.sq_dist(i, j)
    }

    /// The tree product underlying this configuration; fails if any factor
    /// is a plain point set.
    pub fn product_shape(&self) -> Result<ProductShape, GeometryError> {
        let mut shapes = Vec::with_capacity(self.factors.len());
        for f in &self.factors {
            match &f.kind {
                FactorKind::Tree(ts) => shapes.push(ts.shape.clone()),
                FactorKind::Plain(_) => return Err(GeometryError::NotTreeProduct),
            }
        }
        Ok(ProductShape::new(shapes)?)
    }

    /// Address tuple of a cell. Plain factors use the single-step address
    /// `[i]` for their `i`-th point.
    pub fn product_vertex_of(&self, idx: usize) -> ProductVertex {
        let coords = self.coords_of(idx);
        ProductVertex(
            coords
                .iter()
                .zip(&self.factors)
                .map(|(&v, f)| match &f.kind {
                    FactorKind::Tree(ts) => ts.shape.address(v).clone(),
                    FactorKind::Plain(_) => TreeAddress(vec![v as u32]),
                })
                .collect(),
        )
    }

    pub fn cell_of_product_vertex(&self, pv: &ProductVertex) -> Result<usize, GeometryError> {
        if pv.0.len() != self.factors.len() {
            return Err(GeometryError::Malformed(format!(
                "product vertex has {} coordinates, expected {}",
                pv.0.len(),
                self.factors.len()
            )));
        }
        let mut coords = Vec::with_capacity(pv.0.len());
        for (addr, f) in pv.0.iter().zip(&self.factors) {
            match &f.kind {
                FactorKind::Tree(ts) => coords.push(ts.shape.vertex_at(addr)?),
                FactorKind::Plain(ps) => {
                    if addr.0.len() != 1 || addr.0[0] as usize >= ps.len() {
                        return Err(GeometryError::Malformed(format!(
                            "address {} is not a point of a plain factor",
                            addr
                        )));
                    }
                    coords.push(addr.0[0] as usize);
                }
            }
        }
        Ok(self.cell_index(&coords))
    }

    /// The common sibling-distance parameter when every factor is a
    /// tree-simplex built with the same `a²`.
    pub fn common_a2(&self) -> Option<BigRational> {
        let mut a2: Option<BigRational> = None;
        for f in &self.factors {
            match &f.kind {
                FactorKind::Tree(ts) => match &a2 {
                    None => a2 = Some(ts.a2.clone()),
                    Some(existing) if *existing == ts.a2 => {}
                    Some(_) => return None,
                },
                FactorKind::Plain(_) => return None,
            }
        }
        a2
    }
}

/// Product-level verification report.
#[derive(Clone, Debug, Serialize)]
pub struct ConfigReport {
    /// Per-factor invariant reports; `None` for plain factors.
    pub factor_reports: Vec<Option<InvariantReport>>,
    /// Cells whose axis blocks disagree with the factor points.
    pub block_violations: usize,
    /// Sampled product pairs whose squared distance differs from the sum of
    /// per-factor squared distances.
    pub sample_violations: usize,
    pub samples_checked: usize,
}

impl ConfigReport {
    pub fn is_clean(&self) -> bool {
        self.block_violations == 0
            && self.sample_violations == 0
            && self
                .factor_reports
                .iter()
                .flatten()
                .all(InvariantReport::is_clean)
    }
}

/// Verifies a configuration: factor invariants exactly, block consistency
/// of every cell exactly, and the distance-sum property on sampled pairs.
pub fn verify_configuration(cfg: &Configuration, samples: usize, seed: u64) -> ConfigReport {
    let factor_reports = cfg
        .factors
        .iter()
        .map(|f| match &f.kind {
            FactorKind::Tree(ts) => Some(verify_tree_simplex(ts)),
            FactorKind::Plain(_) => None,
        })
        .collect();

    let mut block_violations = 0;
    for idx in 0..cfg.num_points() {
        let coords = cfg.coords_of(idx);
        let p = cfg.points.point(idx);
        for (f, &v) in cfg.factors.iter().zip(&coords) {
            let fp = f.point_set().point(v);
            let block = &p[f.axis_offset..f.axis_offset + f.dimension()];
            if block != fp {
                block_violations += 1;
                break;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.num_points();
    let mut sample_violations = 0;
    let mut samples_checked = 0;
    if n >= 2 {
        for _ in 0..samples {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i == j {
                continue;
            }
            samples_checked += 1;
            let whole = cfg.sq_dist(i, j);
            let ci = cfg.coords_of(i);
            let cj = cfg.coords_of(j);
            let mut parts = RadicalScalar::zero();
            for (f, (&vi, &vj)) in cfg.factors.iter().zip(ci.iter().zip(cj.iter())) {
                parts += &f.point_set().sq_dist(vi, vj);
            }
            if whole != parts {
                sample_violations += 1;
            }
        }
    }

    ConfigReport {
        factor_reports,
        block_violations,
        sample_violations,
        samples_checked,
    }
}

/// A cuboid `{0,b₁} × … × {0,b_s}` given by its squared side lengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuboidSpec {
    #[serde(with = "ratio_serde::rational_vec")]
    pub sides2: Vec<BigRational>,
}

impl CuboidSpec {
    pub fn new(sides2: Vec<BigRational>) -> Result<Self, GeometryError> {
        if sides2.is_empty() {
            return Err(GeometryError::EmptyProduct);
        }
        for s in &sides2 {
            if !s.is_positive() {
                return Err(GeometryError::NonPositiveSide(s.clone()));
            }
        }
        Ok(CuboidSpec { sides2 })
    }

    pub fn dim(&self) -> usize {
        self.sides2.len()
    }
}

/// Replacement of a cuboid by one with all sides at most the shortest side,
/// together with the diagonal embedding of the original corners.
#[derive(Clone, Debug, Serialize)]
pub struct Decomposition {
    /// Number of repeats per original side: `tᵢ = ⌈bᵢ²/b_min²⌉`.
    #[serde(with = "ratio_serde::biguint_vec")]
    pub t: Vec<BigUint>,
    /// Repeated squared side per original side: `bᵢ²/tᵢ`.
    #[serde(with = "ratio_serde::rational_vec")]
    pub block_side2: Vec<BigRational>,
    /// All squared sides of the replacement cuboid, flattened.
    #[serde(with = "ratio_serde::rational_vec")]
    pub a2: Vec<BigRational>,
    /// The `2^s` embedded corners of the original cuboid inside the
    /// replacement: block `i` is all-zero or all `bᵢ/√tᵢ`.
    pub corners: Vec<Vec<RadicalScalar>>,
}

/// Computes the decomposition of `spec` into a cuboid whose sides are all
/// at most the shortest side of `spec`, with the explicit diagonal
/// embedding of the original corner set.
pub fn decompose_cuboid(spec: &CuboidSpec) -> Result<Decomposition, GeometryError> {
    let s = spec.dim();
    let bmin2 = spec.sides2.iter().min().expect("nonempty").clone();
    let mut t = Vec::with_capacity(s);
    let mut block_side2 = Vec::with_capacity(s);
    let mut total: u64 = 0;
    for b2 in &spec.sides2 {
        let ratio = b2 / &bmin2;
        let ti_int = ratio.ceil().to_integer();
        let ti = ti_int.magnitude().clone();
        let ti_u64 = ti.to_u64().filter(|&x| x <= DECOMPOSITION_CAP).ok_or(
            GeometryError::BudgetExceeded {
                needed: ti.clone(),
                budget: DECOMPOSITION_CAP,
            },
        )?;
        total += ti_u64;
        if total > DECOMPOSITION_CAP {
            return Err(GeometryError::BudgetExceeded {
                needed: BigUint::from(total),
                budget: DECOMPOSITION_CAP,
            });
        }
        let a2 = b2 / BigRational::from_integer(ti_int);
        debug_assert!(a2 <= bmin2);
        t.push(ti);
        block_side2.push(a2);
    }

    let mut a2 = Vec::with_capacity(total as usize);
    for (ti, side) in t.iter().zip(&block_side2) {
        let reps = ti.to_u64().expect("capped") as usize;
        for _ in 0..reps {
            a2.push(side.clone());
        }
    }

    if s > 20 {
        return Err(GeometryError::BudgetExceeded {
            needed: BigUint::from(2u32).pow(s as u32),
            budget: 1 << 20,
        });
    }
    let entries: Vec<RadicalScalar> = block_side2
        .iter()
        .map(|v| radical_sqrt(v).expect("positive"))
        .collect();
    let dim = total as usize;
    let mut corners = Vec::with_capacity(1 << s);
    for mask in 0..(1usize << s) {
        let mut corner = vec![RadicalScalar::zero(); dim];
        let mut offset = 0usize;
        for i in 0..s {
            let reps = t[i].to_u64().expect("capped") as usize;
            if mask & (1 << i) != 0 {
                for j in 0..reps {
                    corner[offset + j] = entries[i].clone();
                }
            }
            offset += reps;
        }
        corners.push(corner);
    }

    Ok(Decomposition {
        t,
        block_side2,
        a2,
        corners,
    })
}

/// Expected squared distance between two cuboid corners that differ in the
/// coordinate set given by `mask_xor`.
pub fn expected_corner_distance2(sides2: &[BigRational], mask_xor: usize) -> BigRational {
    let mut sum = BigRational::zero();
    for (i, s) in sides2.iter().enumerate() {
        if mask_xor & (1 << i) != 0 {
            sum += s;
        }
    }
    sum
}

/// True iff `corners`, indexed by subsets of the side set, realize the
/// cuboid exactly: every pair differing in index set `J` sits at squared
/// distance `Σ_{j∈J} bⱼ²`.
pub fn cuboid_distance_profile(
    corners: &[Vec<RadicalScalar>],
    spec: &CuboidSpec,
) -> Result<bool, GeometryError> {
    let s = spec.dim();
    let expected_count = 1usize << s;
    if corners.len() != expected_count {
        return Err(GeometryError::WrongCornerCount {
            expected: expected_count,
            got: corners.len(),
        });
    }
    for m1 in 0..expected_count {
        for m2 in m1 + 1..expected_count {
            let expected = expected_corner_distance2(&spec.sides2, m1 ^ m2);
            let actual = sq_norm_diff(&corners[m1], &corners[m2]);
            if !eq_rational(&actual, &expected) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
