//! Seeded adversarial generators, brute-force oracles, and the mutation
//! suite that stress-tests certificate verification.
//!
//! Everything here is reproducible from `(seed, parameters)`: randomness
//! comes from ChaCha8 streams keyed by 64-bit seeds.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colouring::{
    enumerate_structured_copies, find_mono_pairs_at, verify_certificate, verify_grid_certificate,
    Certificate, ColourId, Colouring, ColouringError, CopySpec, GridColouring,
};
use crate::exact::RadicalScalar;
use crate::extraction::{build_aux_colouring, promote_mono_box, ExtractError};
use crate::geometry::{Configuration, GeometryError, PointSet};
use crate::trees::{ProductShape, TreeShape};

/// Point cap for the exhaustive set-partition oracles.
pub const ORACLE_MAX_POINTS: usize = 10;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("palette of {palette} colours is too small, need at least {needed}")]
    PaletteTooSmall { palette: u64, needed: u64 },
    #[error("{got} points exceed the exhaustive-oracle cap of {max}")]
    TooManyPoints { got: usize, max: usize },
    #[error("surrogate instances support 2 to 4 copies, got {0}")]
    BadCopyCount(usize),
    #[error(transparent)]
    Colouring(#[from] ColouringError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// A uniformly random colouring with the given palette.
pub fn gen_uniform(n: usize, palette: u64, seed: u64) -> Colouring {
    let mut rng = seeded_rng(seed);
    Colouring::from_fn(n, |_| rng.gen_range(0..palette))
}

/// A random sibling-proper colouring of a tree product, rejection-free.
///
/// Each factor assigns its vertices values below the palette with a random
/// injection per sibling family; a cell is coloured by the sum of its
/// factor values modulo the palette. Within any copy of any factor, sibling
/// cells then differ in exactly one summand drawn from an injection, so no
/// two siblings collide. Requires the palette to be at least every arity.
pub fn gen_sibling_proper(
    shape: &ProductShape,
    palette: u64,
    seed: u64,
) -> Result<Colouring, HarnessError> {
    let mut max_arity = 0u64;
    for tree in shape.factors() {
        for v in tree.vertices() {
            max_arity = max_arity.max(tree.children(v).len() as u64);
        }
    }
    if palette < max_arity.max(1) {
        return Err(HarnessError::PaletteTooSmall {
            palette,
            needed: max_arity.max(1),
        });
    }
    let mut rng = seeded_rng(seed);
    let palette_usize = usize::try_from(palette).unwrap_or(usize::MAX);

    let mut values: Vec<Vec<u64>> = Vec::with_capacity(shape.factor_count());
    for tree in shape.factors() {
        let mut f = vec![0u64; tree.vertex_count()];
        f[tree.root()] = rng.gen_range(0..palette);
        for v in tree.vertices() {
            let kids = tree.children(v);
            if kids.is_empty() {
                continue;
            }
            let draw = sample(&mut rng, palette_usize, kids.len());
            for (&c, pick) in kids.iter().zip(draw.iter()) {
                f[c] = pick as u64;
            }
        }
        values.push(f);
    }

    let colours = (0..shape.cell_count())
        .map(|idx| {
            let coords = shape.coords_of(idx);
            let sum: u64 = coords
                .iter()
                .enumerate()
                .map(|(i, &v)| values[i][v] % palette)
                .fold(0u64, |acc, x| (acc + x) % palette);
            sum
        })
        .collect();
    Ok(Colouring::new(colours))
}

/// A greedy proper colouring of the graph whose edges are the exact
/// distance-`d²` pairs, visited in a seeded random order; the output never
/// contains a monochromatic pair at that distance.
pub fn gen_no_mono_pair(points: &PointSet, d2: &BigRational, seed: u64) -> Colouring {
    let n = points.len();
    let target = RadicalScalar::from_rational(d2.clone());
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if points.sq_dist(i, j) == target {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
    }
    let mut rng = seeded_rng(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut colours: Vec<Option<ColourId>> = vec![None; n];
    for &v in &order {
        let forbidden: HashSet<ColourId> = adjacency[v]
            .iter()
            .filter_map(|&u| colours[u])
            .collect();
        let mut c = 0u64;
        while forbidden.contains(&c) {
            c += 1;
        }
        colours[v] = Some(c);
    }
    Colouring::new(colours.into_iter().map(Option::unwrap).collect())
}

/// A random grid colouring in which cells differing in exactly one
/// coordinate always differ in colour. Cells are filled in index order,
/// choosing uniformly among the colours unused on the cell's lines so far;
/// the palette must exceed the total line length `Σ (dims[i] − 1)`.
pub fn gen_differ_one(
    dims: &[usize],
    palette: u64,
    seed: u64,
) -> Result<GridColouring, HarnessError> {
    let needed: u64 = dims.iter().map(|&d| d as u64 - 1).sum::<u64>() + 1;
    if palette < needed {
        return Err(HarnessError::PaletteTooSmall { palette, needed });
    }
    let mut rng = seeded_rng(seed);
    let total: usize = dims.iter().product();
    let mut colours: Vec<ColourId> = Vec::with_capacity(total);
    let grid_index = |coords: &[usize]| -> usize {
        let mut idx = 0;
        for (i, &c) in coords.iter().enumerate() {
            idx = idx * dims[i] + c;
        }
        idx
    };
    let mut coords = vec![0usize; dims.len()];
    for _ in 0..total {
        let mut forbidden: HashSet<ColourId> = HashSet::new();
        for axis in 0..dims.len() {
            for v in 0..coords[axis] {
                let mut peer = coords.clone();
                peer[axis] = v;
                forbidden.insert(colours[grid_index(&peer)]);
            }
        }
        let allowed = palette - forbidden.len() as u64;
        let mut pick = rng.gen_range(0..allowed);
        let mut chosen = None;
        for c in 0..palette {
            if forbidden.contains(&c) {
                continue;
            }
            if pick == 0 {
                chosen = Some(c);
                break;
            }
            pick -= 1;
        }
        colours.push(chosen.expect("allowed colour exists"));
        for i in (0..dims.len()).rev() {
            coords[i] += 1;
            if coords[i] < dims[i] {
                break;
            }
            coords[i] = 0;
        }
    }
    Ok(GridColouring {
        dims: dims.to_vec(),
        colours,
    })
}

/// A uniformly random rooted tree on 1 to `max_nodes` vertices: each vertex
/// attaches to a uniformly random earlier vertex.
pub fn gen_random_tree(max_nodes: usize, seed: u64) -> TreeShape {
    let mut rng = seeded_rng(seed);
    let n = rng.gen_range(1..=max_nodes.max(1));
    let mut parents: Vec<Option<usize>> = Vec::with_capacity(n);
    parents.push(None);
    for v in 1..n {
        parents.push(Some(rng.gen_range(0..v)));
    }
    TreeShape::from_parents(&parents).expect("construction is a tree")
}

/// Random positive rationals `a² ≤ b²` with small numerators and
/// denominators.
pub fn random_sides(seed: u64) -> (BigRational, BigRational) {
    let mut rng = seeded_rng(seed);
    let mut draw = |_: ()| rat(rng.gen_range(1..=20), rng.gen_range(1..=6));
    let x = draw(());
    let y = draw(());
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}

/// Iterator over set partitions of `{0..n}` as restricted growth strings,
/// using at most `max_parts` parts. Covers all partitions when
/// `max_parts ≥ n`.
pub struct SetPartitions {
    n: usize,
    max_parts: usize,
    labels: Vec<usize>,
    started: bool,
    done: bool,
}

impl SetPartitions {
    pub fn new(n: usize, max_parts: usize) -> Self {
        SetPartitions {
            n,
            max_parts: max_parts.max(1),
            labels: vec![0; n],
            started: false,
            done: n == 0,
        }
    }
}

impl Iterator for SetPartitions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.labels.clone());
        }
        let mut i = self.n;
        loop {
            if i <= 1 {
                self.done = true;
                return None;
            }
            i -= 1;
            let prefix_max = self.labels[..i].iter().copied().max().unwrap();
            let cap = (prefix_max + 1).min(self.max_parts - 1);
            if self.labels[i] < cap {
                self.labels[i] += 1;
                for j in i + 1..self.n {
                    self.labels[j] = 0;
                }
                return Some(self.labels.clone());
            }
        }
    }
}

/// Outcome of an exhaustive oracle run.
#[derive(Clone, Debug, Serialize)]
pub struct OracleOutcome {
    pub holds: bool,
    /// A partition (as colour labels) witnessing failure, when one exists.
    pub counterexample: Option<Vec<usize>>,
    pub partitions_checked: u64,
}

fn copy_is_mono(copy: &[usize], labels: &[usize]) -> bool {
    copy.windows(2).all(|w| labels[w[0]] == labels[w[1]])
}

fn copy_is_rainbow(copy: &[usize], labels: &[usize]) -> bool {
    for a in 0..copy.len() {
        for b in a + 1..copy.len() {
            if labels[copy[a]] == labels[copy[b]] {
                return false;
            }
        }
    }
    true
}

/// Exhaustively decides whether every colouring of `points`, with any
/// number of colours, contains a monochromatic structured copy of `mono`
/// or a rainbow structured copy of `rainbow`. Enumerates set partitions —
/// both predicates are invariant under renaming colours — which keeps ten
/// points feasible.
pub fn oracle_exhaustive_mr(
    points: &PointSet,
    mono: &CopySpec,
    rainbow: &CopySpec,
) -> Result<OracleOutcome, HarnessError> {
    if points.len() > ORACLE_MAX_POINTS {
        return Err(HarnessError::TooManyPoints {
            got: points.len(),
            max: ORACLE_MAX_POINTS,
        });
    }
    let mono_copies = enumerate_structured_copies(points, mono);
    let rainbow_copies = enumerate_structured_copies(points, rainbow);
    let mut checked = 0u64;
    for labels in SetPartitions::new(points.len(), points.len()) {
        checked += 1;
        let ok = mono_copies.iter().any(|c| copy_is_mono(c, &labels))
            || rainbow_copies.iter().any(|c| copy_is_rainbow(c, &labels));
        if !ok {
            return Ok(OracleOutcome {
                holds: false,
                counterexample: Some(labels),
                partitions_checked: checked,
            });
        }
    }
    Ok(OracleOutcome {
        holds: true,
        counterexample: None,
        partitions_checked: checked,
    })
}

/// Exhaustively decides whether every colouring of `points` with at most
/// `r` colours contains a monochromatic structured copy of `target`,
/// enumerating partitions into at most `r` parts. This is the independent
/// oracle for the colouring-enumeration arrow check.
pub fn oracle_arrow(
    points: &PointSet,
    r: u64,
    target: &CopySpec,
) -> Result<OracleOutcome, HarnessError> {
    if points.len() > ORACLE_MAX_POINTS {
        return Err(HarnessError::TooManyPoints {
            got: points.len(),
            max: ORACLE_MAX_POINTS,
        });
    }
    let copies = enumerate_structured_copies(points, target);
    let mut checked = 0u64;
    for labels in SetPartitions::new(points.len(), r as usize) {
        checked += 1;
        if !copies.iter().any(|c| copy_is_mono(c, &labels)) {
            return Ok(OracleOutcome {
                holds: false,
                counterexample: Some(labels),
                partitions_checked: checked,
            });
        }
    }
    Ok(OracleOutcome {
        holds: true,
        counterexample: None,
        partitions_checked: checked,
    })
}

/// A certificate together with the carrier it was issued against.
pub enum MutationTarget<'a> {
    Points {
        points: &'a PointSet,
        colouring: &'a Colouring,
        certificate: &'a Certificate,
    },
    Grid {
        grid: &'a GridColouring,
        certificate: &'a Certificate,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct MutationRecord {
    pub case_index: usize,
    pub kind: String,
    pub rejected: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MutationReport {
    pub cases: usize,
    pub mutants: usize,
    pub accepted: usize,
    pub records: Vec<MutationRecord>,
}

fn cert_point_list(cert: &Certificate) -> Vec<usize> {
    match cert {
        Certificate::MonoPair { points, .. } => points.clone(),
        Certificate::MonoBox { corners, .. } | Certificate::RainbowCuboid { corners, .. } => {
            corners.clone()
        }
        Certificate::RainbowGridBox { .. } => Vec::new(),
    }
}

/// Perturbs certified outputs and asserts the verifier rejects every
/// mutant. Mutations are constructed to definitely falsify the claim:
/// merging two colours of a rainbow witness, splitting a colour of a
/// monochromatic witness, or swapping in a point at a provably different
/// exact distance. Accepted mutants are reported; any acceptance is a
/// verifier bug.
pub fn mutation_suite(
    targets: &[MutationTarget<'_>],
    mutants_per_case: usize,
    seed: u64,
) -> MutationReport {
    let mut rng = seeded_rng(seed);
    let mut records = Vec::new();
    let mut accepted = 0usize;

    for (case_index, target) in targets.iter().enumerate() {
        match target {
            MutationTarget::Points {
                points,
                colouring,
                certificate,
            } => {
                verify_certificate(points, colouring, certificate)
                    .expect("mutation suite needs valid inputs");
                let involved = cert_point_list(certificate);
                let is_mono = matches!(
                    certificate,
                    Certificate::MonoPair { .. } | Certificate::MonoBox { .. }
                );
                for _ in 0..mutants_per_case {
                    let (kind, mutated_col, mutated_cert) = if rng.gen_bool(0.5) {
                        // Recolour one involved point so the pattern breaks.
                        let mut col = (*colouring).clone();
                        let pick = involved[rng.gen_range(0..involved.len())];
                        if is_mono {
                            let fresh = col.max_colour().unwrap_or(0) + 1 + rng.gen_range(0..8);
                            col.set(pick, fresh);
                        } else {
                            let other = loop {
                                let o = involved[rng.gen_range(0..involved.len())];
                                if o != pick {
                                    break o;
                                }
                            };
                            col.set(pick, col.get(other));
                        }
                        ("recolour", Some(col), None)
                    } else if let Some(cert) =
                        swap_in_breaking_point(points, certificate, &mut rng)
                    {
                        ("point-swap", None, Some(cert))
                    } else {
                        // No distance-breaking replacement exists; recolour.
                        let mut col = (*colouring).clone();
                        let pick = involved[rng.gen_range(0..involved.len())];
                        if is_mono {
                            col.set(pick, col.max_colour().unwrap_or(0) + 1);
                        } else {
                            let other = involved[(involved.iter().position(|&p| p == pick).unwrap()
                                + 1)
                                % involved.len()];
                            col.set(pick, col.get(other));
                        }
                        ("recolour", Some(col), None)
                    };
                    let col = mutated_col.as_ref().unwrap_or(colouring);
                    let cert = mutated_cert.as_ref().unwrap_or(certificate);
                    let rejected = verify_certificate(points, col, cert).is_err();
                    if !rejected {
                        accepted += 1;
                    }
                    records.push(MutationRecord {
                        case_index,
                        kind: kind.into(),
                        rejected,
                    });
                }
            }
            MutationTarget::Grid { grid, certificate } => {
                verify_grid_certificate(grid, certificate)
                    .expect("mutation suite needs valid inputs");
                let axes = match certificate {
                    Certificate::RainbowGridBox { axes } => axes.clone(),
                    _ => panic!("grid targets carry grid certificates"),
                };
                for _ in 0..mutants_per_case {
                    // Merge the colours of two box cells in a cloned grid.
                    let mut mutated = (*grid).clone();
                    let c1 = random_box_cell(&axes, &mut rng);
                    let c2 = loop {
                        let c = random_box_cell(&axes, &mut rng);
                        if c != c1 {
                            break c;
                        }
                    };
                    let donor = mutated.colour(&c2);
                    let idx = mutated.index(&c1);
                    mutated.colours[idx] = donor;
                    let rejected = verify_grid_certificate(&mutated, certificate).is_err();
                    if !rejected {
                        accepted += 1;
                    }
                    records.push(MutationRecord {
                        case_index,
                        kind: "grid-recolour".into(),
                        rejected,
                    });
                }
            }
        }
    }

    MutationReport {
        cases: targets.len(),
        mutants: records.len(),
        accepted,
        records,
    }
}

fn random_box_cell(axes: &[Vec<usize>], rng: &mut ChaCha8Rng) -> Vec<usize> {
    axes.iter()
        .map(|choice| choice[rng.gen_range(0..choice.len())])
        .collect()
}

/// Replaces one certificate point with a point whose exact distance to
/// another certificate point provably differs from the claim. Returns
/// `None` when no such replacement exists.
fn swap_in_breaking_point(
    points: &PointSet,
    certificate: &Certificate,
    rng: &mut ChaCha8Rng,
) -> Option<Certificate> {
    let (list, expected): (Vec<usize>, Box<dyn Fn(usize, usize) -> BigRational>) =
        match certificate {
            Certificate::MonoPair { points: pair, d2 } => {
                let d2 = d2.clone();
                (pair.clone(), Box::new(move |_, _| d2.clone()))
            }
            Certificate::MonoBox { corners, sides2 }
            | Certificate::RainbowCuboid { corners, sides2 } => {
                let sides2 = sides2.clone();
                (
                    corners.clone(),
                    Box::new(move |m1, m2| {
                        crate::geometry::expected_corner_distance2(&sides2, m1 ^ m2)
                    }),
                )
            }
            Certificate::RainbowGridBox { .. } => return None,
        };
    let slot = rng.gen_range(0..list.len());
    let peer_slot = if slot == 0 { list.len() - 1 } else { 0 };
    let peer = list[peer_slot];
    let want = RadicalScalar::from_rational(expected(slot, peer_slot));
    let start = rng.gen_range(0..points.len());
    for step in 0..points.len() {
        let candidate = (start + step) % points.len();
        if list.contains(&candidate) {
            continue;
        }
        if points.sq_dist(candidate, peer) != want {
            let mut new_list = list.clone();
            new_list[slot] = candidate;
            return Some(match certificate {
                Certificate::MonoPair { d2, .. } => Certificate::MonoPair {
                    points: new_list,
                    d2: d2.clone(),
                },
                Certificate::MonoBox { sides2, .. } => Certificate::MonoBox {
                    corners: new_list,
                    sides2: sides2.clone(),
                },
                Certificate::RainbowCuboid { sides2, .. } => Certificate::RainbowCuboid {
                    corners: new_list,
                    sides2: sides2.clone(),
                },
                Certificate::RainbowGridBox { .. } => unreachable!(),
            });
        }
    }
    None
}

/// A two-factor product instance for exercising the induction step: the
/// first factor carries a small list of structured distance pairs, the
/// second is a simplex with one more point than there are copies, so the
/// auxiliary colouring is forced to repeat on some pair.
pub struct SurrogateInstance {
    pub product: Configuration,
    pub colouring: Colouring,
    /// Structured copies of the first factor, as point-index pairs.
    pub copies: Vec<Vec<usize>>,
    pub a_count: usize,
    pub b_count: usize,
    pub a1_2: BigRational,
    pub a2_2: BigRational,
}

/// Builds the first factor with exactly `n_copies` distance pairs:
/// two separated segments, a triangle, or a square.
fn surrogate_first_factor(
    n_copies: usize,
    a1_2: &BigRational,
) -> Result<PointSet, HarnessError> {
    let a = crate::exact::radical_sqrt(a1_2).expect("positive");
    match n_copies {
        2 => {
            // Two segments on disjoint axes, the second shifted far away.
            let c = crate::exact::radical_sqrt(&(a1_2 / rat(2, 1))).expect("positive");
            let shift = a.scaled(&rat(3, 1));
            let z = RadicalScalar::zero();
            let points = vec![
                vec![c.clone(), z.clone(), z.clone(), z.clone(), z.clone()],
                vec![z.clone(), c.clone(), z.clone(), z.clone(), z.clone()],
                vec![z.clone(), z.clone(), c.clone(), z.clone(), shift.clone()],
                vec![z.clone(), z.clone(), z.clone(), c.clone(), shift.clone()],
            ];
            Ok(PointSet::new(5, points))
        }
        3 => Ok(PointSet::regular_simplex(3, a1_2)?),
        4 => {
            // The four corners of a square of side a: the edges are the
            // distance-a pairs, the diagonals are longer.
            let z = RadicalScalar::zero();
            let points = vec![
                vec![z.clone(), z.clone()],
                vec![a.clone(), z.clone()],
                vec![z.clone(), a.clone()],
                vec![a.clone(), a.clone()],
            ];
            Ok(PointSet::new(2, points))
        }
        other => Err(HarnessError::BadCopyCount(other)),
    }
}

/// Constructs a surrogate instance with a seeded colouring in which every
/// column makes exactly one listed copy monochromatic, in a colour that
/// depends only on the copy. Two columns that agree on the auxiliary
/// colouring then agree on the common colour, so promotion always succeeds.
pub fn gen_theorem1_surrogate(
    n_copies: usize,
    a1_2: &BigRational,
    a2_2: &BigRational,
    seed: u64,
) -> Result<SurrogateInstance, HarnessError> {
    let a_points = surrogate_first_factor(n_copies, a1_2)?;
    let copies = enumerate_structured_copies(&a_points, &CopySpec::Pair { d2: a1_2.clone() });
    assert_eq!(copies.len(), n_copies, "factor has the advertised copies");
    let a_count = a_points.len();
    let b_points = PointSet::regular_simplex(n_copies + 1, a2_2)?;
    let b_count = b_points.len();
    let product = Configuration::product(
        &[
            Configuration::from_point_set(a_points),
            Configuration::from_point_set(b_points),
        ],
        100_000,
    )?;

    let mut rng = seeded_rng(seed);
    let mut colours = vec![0u64; product.num_points()];
    let mut fresh = n_copies as u64;
    for x in 0..b_count {
        let designated = rng.gen_range(0..n_copies);
        let members: HashSet<usize> = copies[designated].iter().copied().collect();
        for r in 0..a_count {
            let cell = product.cell_index(&[r, x]);
            if members.contains(&r) {
                colours[cell] = designated as u64;
            } else {
                colours[cell] = fresh;
                fresh += 1;
            }
        }
    }
    Ok(SurrogateInstance {
        product,
        colouring: Colouring::new(colours),
        copies,
        a_count,
        b_count,
        a1_2: a1_2.clone(),
        a2_2: a2_2.clone(),
    })
}

pub struct InductionOutcome {
    pub chi: Colouring,
    pub witness: (usize, usize),
    pub copy_index: usize,
    pub certificate: Certificate,
}

/// Runs the induction step on a surrogate instance: builds the auxiliary
/// colouring, finds the first repeated value (forced because the second
/// factor has one more point than there are copies), and promotes the
/// repeated copy with that pair to a monochromatic box certificate.
pub fn run_theorem1_induction(
    inst: &SurrogateInstance,
) -> Result<InductionOutcome, ExtractError> {
    let chi = build_aux_colouring(
        inst.a_count,
        inst.b_count,
        |r, x| inst.colouring.get(inst.product.cell_index(&[r, x])),
        &inst.copies,
    )?;
    let mut witness = None;
    'outer: for x1 in 0..inst.b_count {
        for x2 in x1 + 1..inst.b_count {
            if chi.get(x1) == chi.get(x2) {
                witness = Some((x1, x2));
                break 'outer;
            }
        }
    }
    let (x1, x2) = witness.ok_or_else(|| {
        ExtractError::Internal("pigeonhole failed: auxiliary colouring is injective".into())
    })?;
    let copy_index = chi.get(x1) as usize;
    let certificate = promote_mono_box(
        &inst.product,
        &inst.colouring,
        &inst.copies[copy_index],
        &[inst.a1_2.clone()],
        (x1, x2),
        &inst.a2_2,
    )?;
    Ok(InductionOutcome {
        chi,
        witness: (x1, x2),
        copy_index,
        certificate,
    })
}

/// One line of a JSONL fuzzing report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialReport {
    pub seed: u64,
    pub params: serde_json::Value,
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
}

/// Verifies a generated colouring really avoids monochromatic pairs at the
/// given distance, as the generator promises.
pub fn check_no_mono_pair(
    points: &PointSet,
    colouring: &Colouring,
    d2: &BigRational,
) -> Result<bool, ColouringError> {
    Ok(find_mono_pairs_at(points, colouring, d2)?.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colouring::is_sibling_proper;
    use crate::extraction::differ_one_violation;

    #[test]
    fn partitions_hit_bell_numbers() {
        let bell = [1usize, 1, 2, 5, 15, 52, 203];
        for (n, &expected) in bell.iter().enumerate() {
            if n == 0 {
                continue;
            }
            assert_eq!(SetPartitions::new(n, n).count(), expected, "n={}", n);
        }
        // Partitions of 4 into at most 2 parts: S(4,1)+S(4,2) = 1+7.
        assert_eq!(SetPartitions::new(4, 2).count(), 8);
    }

    #[test]
    fn sibling_proper_generator_valid_across_seeds() {
        let shape = ProductShape::new(vec![
            TreeShape::complete(3, 2).unwrap(),
            TreeShape::complete(2, 2).unwrap(),
        ])
        .unwrap();
        for seed in 0..200 {
            let col = gen_sibling_proper(&shape, 13, seed).unwrap();
            assert!(is_sibling_proper(&shape, &col).unwrap(), "seed {}", seed);
        }
        // Palette exactly the maximum arity still works.
        for seed in 0..50 {
            let col = gen_sibling_proper(&shape, 3, seed).unwrap();
            assert!(is_sibling_proper(&shape, &col).unwrap(), "seed {}", seed);
        }
        assert!(matches!(
            gen_sibling_proper(&shape, 2, 0),
            Err(HarnessError::PaletteTooSmall { .. })
        ));
    }

    #[test]
    fn no_mono_pair_generator_verified() {
        let shape = TreeShape::complete(3, 2).unwrap();
        let ts = crate::geometry::build_tree_simplex(&shape, &rat(1, 1), &rat(4, 1)).unwrap();
        for seed in 0..100 {
            let col = gen_no_mono_pair(&ts.points, &rat(1, 1), seed);
            assert!(check_no_mono_pair(&ts.points, &col, &rat(1, 1)).unwrap());
        }
        // A configuration with no distance-d pairs may be coloured freely;
        // the greedy then uses a single colour.
        let simplex = PointSet::regular_simplex(4, &rat(1, 1)).unwrap();
        let col = gen_no_mono_pair(&simplex, &rat(7, 1), 3);
        assert_eq!(col.max_colour(), Some(0));
        // On a clique every point needs its own colour.
        let col = gen_no_mono_pair(&simplex, &rat(1, 1), 3);
        let mut seen: Vec<u64> = col.colours().to_vec();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn differ_one_generator_valid() {
        for seed in 0..100 {
            let grid = gen_differ_one(&[2, 8], 16, seed).unwrap();
            assert!(differ_one_violation(&grid).is_none(), "seed {}", seed);
        }
        assert!(matches!(
            gen_differ_one(&[2, 8], 8, 0),
            Err(HarnessError::PaletteTooSmall { .. })
        ));
    }

    #[test]
    fn random_trees_are_trees() {
        for seed in 0..50 {
            let t = gen_random_tree(60, seed);
            assert!(t.vertex_count() >= 1 && t.vertex_count() <= 60);
        }
    }

    #[test]
    fn oracle_on_two_points() {
        let pair = PointSet::regular_simplex(2, &rat(1, 1)).unwrap();
        let spec = CopySpec::Pair { d2: rat(1, 1) };
        let out = oracle_exhaustive_mr(&pair, &spec, &spec).unwrap();
        assert!(out.holds);
        assert_eq!(out.partitions_checked, 2);
    }

    #[test]
    fn oracle_false_when_no_copies_exist() {
        // Three points with no distance-1 pair; the rainbow target needs
        // four points, so no copy of either exists.
        let ps = PointSet::regular_simplex(3, &rat(5, 1)).unwrap();
        let mono = CopySpec::Pair { d2: rat(1, 1) };
        let rainbow = CopySpec::Simplex { k: 4, d2: rat(5, 1) };
        let out = oracle_exhaustive_mr(&ps, &mono, &rainbow).unwrap();
        assert!(!out.holds);
        assert!(out.counterexample.is_some());
    }

    #[test]
    fn oracle_four_simplex_both_targets() {
        // With both targets the full 4-simplex, any partition either
        // repeats a colour on some pair (monochromatic pair exists only if
        // the target is a pair, not the full simplex) — decided here by
        // enumeration rather than by hand.
        let ps = PointSet::regular_simplex(4, &rat(1, 1)).unwrap();
        let mono = CopySpec::Pair { d2: rat(1, 1) };
        let rainbow = CopySpec::Simplex { k: 4, d2: rat(1, 1) };
        let out = oracle_exhaustive_mr(&ps, &mono, &rainbow).unwrap();
        // A partition into parts of sizes {2,2} has no rainbow 4-set but
        // has a monochromatic pair; a partition into 4 singletons is
        // rainbow; sizes {2,1,1} give a monochromatic pair.
        assert!(out.holds);
        assert_eq!(out.partitions_checked, 15);
    }

    #[test]
    fn oracle_guard() {
        let ps = PointSet::regular_simplex(11, &rat(1, 1)).unwrap();
        let spec = CopySpec::Pair { d2: rat(1, 1) };
        assert!(matches!(
            oracle_exhaustive_mr(&ps, &spec, &spec),
            Err(HarnessError::TooManyPoints { .. })
        ));
    }

    #[test]
    fn oracle_agrees_with_arrow_check_on_simplices() {
        let d2 = rat(1, 1);
        let spec = CopySpec::Pair { d2: d2.clone() };
        for m in 2..=4usize {
            let forcing = PointSet::regular_simplex(m + 1, &d2).unwrap();
            assert!(oracle_arrow(&forcing, m as u64, &spec).unwrap().holds);
            assert!(crate::colouring::arrow_check(&forcing, m as u64, &spec).unwrap());
            let free = PointSet::regular_simplex(m, &d2).unwrap();
            assert!(!oracle_arrow(&free, m as u64, &spec).unwrap().holds);
            assert!(!crate::colouring::arrow_check(&free, m as u64, &spec).unwrap());
        }
    }

    #[test]
    fn surrogate_instances_promote() {
        for (i, n_copies) in [2usize, 3, 4].iter().enumerate() {
            let inst =
                gen_theorem1_surrogate(*n_copies, &rat(1, 1), &rat(1, 1), i as u64).unwrap();
            let out = run_theorem1_induction(&inst).unwrap();
            verify_certificate(inst.product.points(), &inst.colouring, &out.certificate)
                .unwrap();
            assert!(out.chi.max_colour().unwrap() < *n_copies as u64);
        }
    }

    #[test]
    fn mutation_suite_rejects_everything() {
        let inst = gen_theorem1_surrogate(3, &rat(1, 1), &rat(1, 1), 5).unwrap();
        let out = run_theorem1_induction(&inst).unwrap();
        let grid = GridColouring::from_fn(&[2, 8], |c| (c[0] + c[1]) as u64);
        let rbox = crate::extraction::extract_rainbow_box(&grid, &[2, 2]).unwrap();
        let targets = vec![
            MutationTarget::Points {
                points: inst.product.points(),
                colouring: &inst.colouring,
                certificate: &out.certificate,
            },
            MutationTarget::Grid {
                grid: &grid,
                certificate: &rbox.certificate,
            },
        ];
        let report = mutation_suite(&targets, 50, 99);
        assert_eq!(report.mutants, 100);
        assert_eq!(report.accepted, 0);
    }
}
