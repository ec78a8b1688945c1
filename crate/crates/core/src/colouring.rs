//! Colourings, monochromatic/rainbow predicates, structured copies, and
//! independently verifiable certificates.
//!
//! Colour ids are opaque: only equality matters. A *structured* copy of a
//! target is the only kind enumerated here — a distance pair, a clique of a
//! fixed distance, or a corner set realizing a cuboid's distance profile —
//! general congruent-copy detection is out of scope.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{ratio_serde, RadicalScalar};
use crate::geometry::{expected_corner_distance2, PointSet};
use crate::trees::{FactorCopy, ProductShape, TreeShape, VertexId};

pub type ColourId = u64;

/// Guard on exhaustive colouring enumeration in [`arrow_check`].
pub const ARROW_ENUMERATION_GUARD: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum ColouringError {
    #[error("colouring covers {got} points but the carrier has {expected}")]
    NotTotal { expected: usize, got: usize },
    #[error("enumerating {needed} colourings exceeds the guard of {guard}")]
    EnumerationGuard { needed: BigUint, guard: u64 },
    #[error("colour budget must be positive")]
    ZeroColours,
    #[error(transparent)]
    Tree(#[from] crate::trees::TreeError),
}

/// A total map from point (or cell) index to an opaque colour id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Colouring {
    colours: Vec<ColourId>,
}

impl Colouring {
    pub fn new(colours: Vec<ColourId>) -> Self {
        Colouring { colours }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> ColourId) -> Self {
        Colouring {
            colours: (0..n).map(f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.colours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colours.is_empty()
    }

    pub fn get(&self, i: usize) -> ColourId {
        self.colours[i]
    }

    pub fn colours(&self) -> &[ColourId] {
        &self.colours
    }

    pub fn set(&mut self, i: usize, c: ColourId) {
        self.colours[i] = c;
    }

    pub fn max_colour(&self) -> Option<ColourId> {
        self.colours.iter().copied().max()
    }

    pub fn ensure_total_for(&self, n: usize) -> Result<(), ColouringError> {
        if self.colours.len() != n {
            return Err(ColouringError::NotTotal {
                expected: n,
                got: self.colours.len(),
            });
        }
        Ok(())
    }
}

/// A colouring of a grid `B₁ × … × B_s`, indexed row-major with the last
/// axis varying fastest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridColouring {
    pub dims: Vec<usize>,
    pub colours: Vec<ColourId>,
}

impl GridColouring {
    pub fn from_fn(dims: &[usize], f: impl Fn(&[usize]) -> ColourId) -> Self {
        let total: usize = dims.iter().product();
        let mut colours = Vec::with_capacity(total);
        let mut coords = vec![0usize; dims.len()];
        for _ in 0..total {
            colours.push(f(&coords));
            for i in (0..dims.len()).rev() {
                coords[i] += 1;
                if coords[i] < dims[i] {
                    break;
                }
                coords[i] = 0;
            }
        }
        GridColouring {
            dims: dims.to_vec(),
            colours,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.dims.len());
        let mut idx = 0;
        for (i, &c) in coords.iter().enumerate() {
            debug_assert!(c < self.dims[i]);
            idx = idx * self.dims[i] + c;
        }
        idx
    }

    pub fn colour(&self, coords: &[usize]) -> ColourId {
        self.colours[self.index(coords)]
    }

    /// The sub-grid obtained by fixing the last coordinate to `y`.
    pub fn slice_last(&self, y: usize) -> GridColouring {
        let s = self.dims.len();
        debug_assert!(s >= 2);
        let inner: usize = self.dims[..s - 1].iter().product();
        let last = self.dims[s - 1];
        let mut colours = Vec::with_capacity(inner);
        for outer in 0..inner {
            colours.push(self.colours[outer * last + y]);
        }
        GridColouring {
            dims: self.dims[..s - 1].to_vec(),
            colours,
        }
    }

    pub fn ensure_total(&self) -> Result<(), ColouringError> {
        if self.colours.len() != self.cell_count() {
            return Err(ColouringError::NotTotal {
                expected: self.cell_count(),
                got: self.colours.len(),
            });
        }
        Ok(())
    }
}

/// All unordered pairs at exact squared distance `d2` sharing a colour.
/// An empty result certifies the absence of a monochromatic distance pair.
pub fn find_mono_pairs_at(
    points: &PointSet,
    colouring: &Colouring,
    d2: &BigRational,
) -> Result<Vec<(usize, usize)>, ColouringError> {
    colouring.ensure_total_for(points.len())?;
    let target = RadicalScalar::from_rational(d2.clone());
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if colouring.get(i) == colouring.get(j) && points.sq_dist(i, j) == target {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

/// A sibling pair sharing a colour inside one copy of one factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiblingViolation {
    pub factor: usize,
    pub context: Vec<VertexId>,
    pub parent: VertexId,
    pub u: VertexId,
    pub v: VertexId,
    pub colour: ColourId,
}

/// Searches every copy of every factor for a same-coloured sibling pair.
pub fn sibling_violation(
    shape: &ProductShape,
    colouring: &Colouring,
) -> Result<Option<SiblingViolation>, ColouringError> {
    colouring.ensure_total_for(shape.cell_count())?;
    for factor in 0..shape.factor_count() {
        let tree = shape.factor(factor);
        for copy in shape.copies_of_factor(factor)? {
            for parent in tree.vertices() {
                let kids = tree.children(parent);
                for (i, &u) in kids.iter().enumerate() {
                    let cu = colouring.get(copy.cell(shape, u));
                    for &v in &kids[i + 1..] {
                        let cv = colouring.get(copy.cell(shape, v));
                        if cu == cv {
                            return Ok(Some(SiblingViolation {
                                factor,
                                context: copy.context.clone(),
                                parent,
                                u,
                                v,
                                colour: cu,
                            }));
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

/// True iff in every copy of every factor no two siblings share a colour.
pub fn is_sibling_proper(
    shape: &ProductShape,
    colouring: &Colouring,
) -> Result<bool, ColouringError> {
    Ok(sibling_violation(shape, colouring)?.is_none())
}

/// A properness violation inside one tree copy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProperViolation {
    Siblings { u: VertexId, v: VertexId },
    Ancestor { ancestor: VertexId, vertex: VertexId },
}

/// Checks one tree under a colour probe: no two siblings share a colour and
/// no vertex shares a colour with any of its ancestors.
pub fn proper_violation(
    tree: &TreeShape,
    colour_of: impl Fn(VertexId) -> ColourId,
) -> Option<ProperViolation> {
    for parent in tree.vertices() {
        let kids = tree.children(parent);
        for (i, &u) in kids.iter().enumerate() {
            for &v in &kids[i + 1..] {
                if colour_of(u) == colour_of(v) {
                    return Some(ProperViolation::Siblings { u, v });
                }
            }
        }
    }
    for v in tree.vertices() {
        let cv = colour_of(v);
        for anc in tree.ancestors(v) {
            if colour_of(anc) == cv {
                return Some(ProperViolation::Ancestor {
                    ancestor: anc,
                    vertex: v,
                });
            }
        }
    }
    None
}

/// True iff the given copy of a factor is properly coloured: siblings all
/// differ and every vertex differs from all its ancestors.
pub fn is_proper_tree_colouring(
    shape: &ProductShape,
    copy: &FactorCopy,
    colouring: &Colouring,
) -> Result<bool, ColouringError> {
    colouring.ensure_total_for(shape.cell_count())?;
    let tree = shape.factor(copy.factor);
    Ok(proper_violation(tree, |v| colouring.get(copy.cell(shape, v))).is_none())
}

/// The structured targets a copy search understands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum CopySpec {
    /// A pair `{0, d}`: any two points at exact squared distance `d2`.
    Pair {
        #[serde(with = "ratio_serde::rational")]
        d2: BigRational,
    },
    /// `k` points pairwise at exact squared distance `d2`.
    Simplex {
        k: usize,
        #[serde(with = "ratio_serde::rational")]
        d2: BigRational,
    },
    /// A corner set realizing the cuboid distance profile of `sides2`.
    Cuboid {
        #[serde(with = "ratio_serde::rational_vec")]
        sides2: Vec<BigRational>,
    },
}

/// Enumerates the structured copies of `spec` in `points` as sorted point
/// sets, deduplicated.
pub fn enumerate_structured_copies(points: &PointSet, spec: &CopySpec) -> Vec<Vec<usize>> {
    match spec {
        CopySpec::Pair { d2 } => {
            let target = RadicalScalar::from_rational(d2.clone());
            let mut out = Vec::new();
            for i in 0..points.len() {
                for j in i + 1..points.len() {
                    if points.sq_dist(i, j) == target {
                        out.push(vec![i, j]);
                    }
                }
            }
            out
        }
        CopySpec::Simplex { k, d2 } => {
            let target = RadicalScalar::from_rational(d2.clone());
            let n = points.len();
            let adj: Vec<Vec<bool>> = (0..n)
                .map(|i| (0..n).map(|j| i != j && points.sq_dist(i, j) == target).collect())
                .collect();
            let mut out = Vec::new();
            let mut current: Vec<usize> = Vec::new();
            fn cliques(
                n: usize,
                k: usize,
                start: usize,
                adj: &[Vec<bool>],
                current: &mut Vec<usize>,
                out: &mut Vec<Vec<usize>>,
            ) {
                if current.len() == k {
                    out.push(current.clone());
                    return;
                }
                for v in start..n {
                    if current.iter().all(|&u| adj[u][v]) {
                        current.push(v);
                        cliques(n, k, v + 1, adj, current, out);
                        current.pop();
                    }
                }
            }
            cliques(n, *k, 0, &adj, &mut current, &mut out);
            out
        }
        CopySpec::Cuboid { sides2 } => {
            let s = sides2.len();
            let corners = 1usize << s;
            let n = points.len();
            let mut out: BTreeSet<Vec<usize>> = BTreeSet::new();
            let mut assignment: Vec<usize> = Vec::with_capacity(corners);
            fn assign(
                n: usize,
                corners: usize,
                sides2: &[BigRational],
                points: &PointSet,
                assignment: &mut Vec<usize>,
                out: &mut BTreeSet<Vec<usize>>,
            ) {
                if assignment.len() == corners {
                    let mut sorted = assignment.clone();
                    sorted.sort_unstable();
                    out.insert(sorted);
                    return;
                }
                let mask = assignment.len();
                'candidates: for p in 0..n {
                    if assignment.contains(&p) {
                        continue;
                    }
                    for (prev_mask, &q) in assignment.iter().enumerate() {
                        let expected = expected_corner_distance2(sides2, mask ^ prev_mask);
                        if points.sq_dist(p, q) != RadicalScalar::from_rational(expected) {
                            continue 'candidates;
                        }
                    }
                    assignment.push(p);
                    assign(n, corners, sides2, points, assignment, out);
                    assignment.pop();
                }
            }
            assign(n, corners, sides2, points, &mut assignment, &mut out);
            out.into_iter().collect()
        }
    }
}

/// True iff every `r`-colouring of `points` contains a monochromatic
/// structured copy of `target`. Exhaustive over all `r^n` colourings,
/// guarded by [`ARROW_ENUMERATION_GUARD`].
pub fn arrow_check(
    points: &PointSet,
    r: u64,
    target: &CopySpec,
) -> Result<bool, ColouringError> {
    if r == 0 {
        return Err(ColouringError::ZeroColours);
    }
    let n = points.len();
    let needed = BigUint::from(r).pow(n as u32);
    if needed > BigUint::from(ARROW_ENUMERATION_GUARD) {
        return Err(ColouringError::EnumerationGuard {
            needed,
            guard: ARROW_ENUMERATION_GUARD,
        });
    }
    let copies = enumerate_structured_copies(points, target);
    let mut colours = vec![0u64; n];
    loop {
        let has_mono = copies
            .iter()
            .any(|copy| copy.windows(2).all(|w| colours[w[0]] == colours[w[1]]));
        if !has_mono {
            return Ok(false);
        }
        // Advance the odometer.
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(true);
            }
            i -= 1;
            colours[i] += 1;
            if colours[i] < r {
                break;
            }
            colours[i] = 0;
        }
    }
}

/// A self-contained, re-checkable witness of a monochromatic or rainbow
/// structured copy. Verification recomputes every claim from scratch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// Two same-coloured points at exact squared distance `d2`.
    MonoPair {
        points: Vec<usize>,
        #[serde(with = "ratio_serde::rational")]
        d2: BigRational,
    },
    /// A same-coloured corner set realizing a cuboid profile. Corners are
    /// indexed by subsets of the side set.
    MonoBox {
        corners: Vec<usize>,
        #[serde(with = "ratio_serde::rational_vec")]
        sides2: Vec<BigRational>,
    },
    /// An all-distinct-coloured corner set realizing a cuboid profile.
    RainbowCuboid {
        corners: Vec<usize>,
        #[serde(with = "ratio_serde::rational_vec")]
        sides2: Vec<BigRational>,
    },
    /// A rainbow sub-box of a grid colouring: the chosen indices per axis.
    RainbowGridBox { axes: Vec<Vec<usize>> },
}

#[derive(Debug, Error, PartialEq)]
pub enum CertificateError {
    #[error("certificate references point {0}, which does not exist")]
    BadIndex(usize),
    #[error("expected {expected} corners, got {got}")]
    WrongCornerCount { expected: usize, got: usize },
    #[error("points {i} and {j} should share a colour but differ")]
    ColoursDiffer { i: usize, j: usize },
    #[error("points {i} and {j} should have distinct colours but share {colour}")]
    ColoursClash { i: usize, j: usize, colour: ColourId },
    #[error("distance between {i} and {j} is {actual}, expected {expected}")]
    DistanceMismatch {
        i: usize,
        j: usize,
        expected: BigRational,
        actual: RadicalScalar,
    },
    #[error("this certificate kind needs a grid carrier")]
    NeedsGrid,
    #[error("this certificate kind needs a point-set carrier")]
    NeedsPoints,
    #[error("axis {axis} selects index {index} outside the grid")]
    BadAxisIndex { axis: usize, index: usize },
    #[error(transparent)]
    Colouring(#[from] ColouringError),
}

fn check_index(points: &PointSet, i: usize) -> Result<(), CertificateError> {
    if i >= points.len() {
        return Err(CertificateError::BadIndex(i));
    }
    Ok(())
}

fn check_profile(
    points: &PointSet,
    corners: &[usize],
    sides2: &[BigRational],
) -> Result<(), CertificateError> {
    let expected_count = 1usize << sides2.len();
    if corners.len() != expected_count {
        return Err(CertificateError::WrongCornerCount {
            expected: expected_count,
            got: corners.len(),
        });
    }
    for &c in corners {
        check_index(points, c)?;
    }
    for m1 in 0..corners.len() {
        for m2 in m1 + 1..corners.len() {
            let expected = expected_corner_distance2(sides2, m1 ^ m2);
            let actual = points.sq_dist(corners[m1], corners[m2]);
            if actual != RadicalScalar::from_rational(expected.clone()) {
                return Err(CertificateError::DistanceMismatch {
                    i: corners[m1],
                    j: corners[m2],
                    expected,
                    actual,
                });
            }
        }
    }
    Ok(())
}

/// Re-checks a geometric certificate against its carrier from scratch.
pub fn verify_certificate(
    points: &PointSet,
    colouring: &Colouring,
    cert: &Certificate,
) -> Result<(), CertificateError> {
    colouring.ensure_total_for(points.len())?;
    match cert {
        Certificate::MonoPair { points: pair, d2 } => {
            if pair.len() != 2 {
                return Err(CertificateError::WrongCornerCount {
                    expected: 2,
                    got: pair.len(),
                });
            }
            let (i, j) = (pair[0], pair[1]);
            check_index(points, i)?;
            check_index(points, j)?;
            if colouring.get(i) != colouring.get(j) {
                return Err(CertificateError::ColoursDiffer { i, j });
            }
            let actual = points.sq_dist(i, j);
            if actual != RadicalScalar::from_rational(d2.clone()) {
                return Err(CertificateError::DistanceMismatch {
                    i,
                    j,
                    expected: d2.clone(),
                    actual,
                });
            }
            Ok(())
        }
        Certificate::MonoBox { corners, sides2 } => {
            check_profile(points, corners, sides2)?;
            for w in corners.windows(2) {
                if colouring.get(w[0]) != colouring.get(w[1]) {
                    return Err(CertificateError::ColoursDiffer { i: w[0], j: w[1] });
                }
            }
            Ok(())
        }
        Certificate::RainbowCuboid { corners, sides2 } => {
            check_profile(points, corners, sides2)?;
            for a in 0..corners.len() {
                for b in a + 1..corners.len() {
                    if colouring.get(corners[a]) == colouring.get(corners[b]) {
                        return Err(CertificateError::ColoursClash {
                            i: corners[a],
                            j: corners[b],
                            colour: colouring.get(corners[a]),
                        });
                    }
                }
            }
            Ok(())
        }
        Certificate::RainbowGridBox { .. } => Err(CertificateError::NeedsGrid),
    }
}

/// Re-checks a grid certificate: the selected sub-box must be rainbow.
pub fn verify_grid_certificate(
    grid: &GridColouring,
    cert: &Certificate,
) -> Result<(), CertificateError> {
    grid.ensure_total()?;
    let axes = match cert {
        Certificate::RainbowGridBox { axes } => axes,
        _ => return Err(CertificateError::NeedsPoints),
    };
    if axes.len() != grid.dims.len() {
        return Err(CertificateError::WrongCornerCount {
            expected: grid.dims.len(),
            got: axes.len(),
        });
    }
    for (axis, choice) in axes.iter().enumerate() {
        for &index in choice {
            if index >= grid.dims[axis] {
                return Err(CertificateError::BadAxisIndex { axis, index });
            }
        }
    }
    // Materialize the sub-box cells.
    let mut cells: Vec<(Vec<usize>, ColourId)> = Vec::new();
    let sizes: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().product();
    let mut pick = vec![0usize; axes.len()];
    for _ in 0..total {
        let coords: Vec<usize> = pick.iter().zip(axes).map(|(&p, a)| a[p]).collect();
        let colour = grid.colour(&coords);
        cells.push((coords, colour));
        for i in (0..axes.len()).rev() {
            pick[i] += 1;
            if pick[i] < sizes[i] {
                break;
            }
            pick[i] = 0;
        }
    }
    for a in 0..cells.len() {
        for b in a + 1..cells.len() {
            if cells[a].1 == cells[b].1 {
                return Err(CertificateError::ColoursClash {
                    i: grid.index(&cells[a].0),
                    j: grid.index(&cells[b].0),
                    colour: cells[a].1,
                });
            }
        }
    }
    Ok(())
}
