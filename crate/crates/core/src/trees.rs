//! Rooted trees, tree addresses, subtree embeddings, and products of trees.
//!
//! Trees are immutable after construction. A vertex is named either by its
//! dense id or by its [`TreeAddress`], the sequence of child indices from
//! the root. Products of trees are never materialized as vertex lists;
//! copies of a factor are streamed as context tuples.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type VertexId = usize;

/// Hard cap on materialized tree sizes; symbolic counts go through
/// [`complete_vertex_count`] instead.
pub const MATERIALIZE_CAP: usize = 5_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("address {0} is not a vertex of this tree")]
    InvalidAddress(TreeAddress),
    #[error("vertex id {0} out of range")]
    InvalidVertex(VertexId),
    #[error("arity must be positive")]
    ZeroArity,
    #[error("tree with {count} vertices exceeds the materialization cap {cap}")]
    TooLarge { count: BigUint, cap: usize },
    #[error("parent array is not a rooted tree: {0}")]
    BadParentArray(String),
    #[error("factor index {index} out of range for a product of {len} trees")]
    BadFactor { index: usize, len: usize },
    #[error("product index space overflows usize")]
    ProductOverflow,
    #[error("embedding is not structure-preserving: {0}")]
    BadEmbedding(String),
}

/// A vertex of a rooted tree as the child-index path from the root.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TreeAddress(pub Vec<u32>);

impl TreeAddress {
    pub fn root() -> Self {
        TreeAddress(Vec::new())
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn child(&self, index: u32) -> Self {
        let mut path = self.0.clone();
        path.push(index);
        TreeAddress(path)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.0.is_empty() {
            None
        } else {
            Some(TreeAddress(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn is_strict_prefix_of(&self, other: &TreeAddress) -> bool {
        self.0.len() < other.0.len() && other.0[..self.0.len()] == self.0[..]
    }
}

impl fmt::Debug for TreeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for TreeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", c)?;
        }
        write!(f, "]")
    }
}

/// How two distinct vertices of one tree relate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Equal,
    Siblings,
    AncestorDescendant,
    Other,
}

/// Classifies a pair of addresses; pure path logic, no shape required.
pub fn classify_relation(u: &TreeAddress, v: &TreeAddress) -> Relation {
    if u == v {
        Relation::Equal
    } else if u.depth() == v.depth()
        && u.depth() > 0
        && u.0[..u.depth() - 1] == v.0[..v.depth() - 1]
    {
        Relation::Siblings
    } else if u.is_strict_prefix_of(v) || v.is_strict_prefix_of(u) {
        Relation::AncestorDescendant
    } else {
        Relation::Other
    }
}

/// Number of vertices of the complete `arity`-ary tree of height `height`.
pub fn complete_vertex_count(arity: &BigUint, height: u32) -> BigUint {
    if arity.is_one() {
        return BigUint::from(height as u64 + 1);
    }
    (arity.pow(height + 1) - BigUint::one()) / (arity - BigUint::one())
}

/// An immutable rooted tree.
///
/// Supports complete n-ary trees of a given height and arbitrary explicit
/// trees given as parent arrays. Vertex ids are dense; for complete trees
/// they follow depth-first preorder.
#[derive(Clone, PartialEq, Eq)]
pub struct TreeShape {
    children: Vec<Vec<VertexId>>,
    parent: Vec<Option<VertexId>>,
    depth: Vec<u32>,
    address: Vec<TreeAddress>,
    addr_index: BTreeMap<TreeAddress, VertexId>,
    root: VertexId,
    height: u32,
}

impl TreeShape {
    /// Complete `arity`-ary tree of the given height: every vertex at depth
    /// less than `height` has exactly `arity` children.
    pub fn complete(arity: usize, height: u32) -> Result<Self, TreeError> {
        if arity == 0 {
            return Err(TreeError::ZeroArity);
        }
        let count = complete_vertex_count(&BigUint::from(arity), height);
        if count > BigUint::from(MATERIALIZE_CAP) {
            return Err(TreeError::TooLarge {
                count,
                cap: MATERIALIZE_CAP,
            });
        }
        let n: usize = count.try_into().expect("count fits after cap check");
        let mut children: Vec<Vec<VertexId>> = vec![Vec::new(); n];
        let mut parent: Vec<Option<VertexId>> = vec![None; n];
        let mut depth: Vec<u32> = vec![0; n];
        let mut address: Vec<TreeAddress> = vec![TreeAddress::root(); n];

        // DFS preorder allocation.
        let mut next: VertexId = 1;
        let mut stack: Vec<VertexId> = vec![0];
        while let Some(v) = stack.pop() {
            if depth[v] == height {
                continue;
            }
            for i in 0..arity {
                let c = next;
                next += 1;
                parent[c] = Some(v);
                depth[c] = depth[v] + 1;
                address[c] = address[v].child(i as u32);
                children[v].push(c);
            }
            // Push in reverse so child 0 is visited first.
            for &c in children[v].iter().rev() {
                stack.push(c);
            }
        }
        debug_assert_eq!(next, n);
        let addr_index = address
            .iter()
            .enumerate()
            .map(|(v, a)| (a.clone(), v))
            .collect();
        Ok(TreeShape {
            children,
            parent,
            depth,
            address,
            addr_index,
            root: 0,
            height,
        })
    }

    /// Builds a tree from a parent array: exactly one entry must be `None`
    /// (the root) and every vertex must reach the root. Children are ordered
    /// by vertex id.
    pub fn from_parents(parents: &[Option<usize>]) -> Result<Self, TreeError> {
        let n = parents.len();
        if n == 0 {
            return Err(TreeError::BadParentArray("empty".into()));
        }
        let mut root = None;
        let mut children: Vec<Vec<VertexId>> = vec![Vec::new(); n];
        for (v, &p) in parents.iter().enumerate() {
            match p {
                None => {
                    if root.replace(v).is_some() {
                        return Err(TreeError::BadParentArray("multiple roots".into()));
                    }
                }
                Some(p) => {
                    if p >= n {
                        return Err(TreeError::BadParentArray(format!(
                            "parent {} of vertex {} out of range",
                            p, v
                        )));
                    }
                    if p == v {
                        return Err(TreeError::BadParentArray(format!("vertex {} is its own parent", v)));
                    }
                    children[p].push(v);
                }
            }
        }
        let root = root.ok_or_else(|| TreeError::BadParentArray("no root".into()))?;

        let mut depth = vec![u32::MAX; n];
        let mut address = vec![TreeAddress::root(); n];
        depth[root] = 0;
        let mut stack = vec![root];
        let mut seen = 1usize;
        while let Some(v) = stack.pop() {
            for (i, &c) in children[v].iter().enumerate() {
                if depth[c] != u32::MAX {
                    return Err(TreeError::BadParentArray(format!("vertex {} revisited", c)));
                }
                depth[c] = depth[v] + 1;
                address[c] = address[v].child(i as u32);
                seen += 1;
                stack.push(c);
            }
        }
        if seen != n {
            return Err(TreeError::BadParentArray(
                "some vertices are unreachable from the root".into(),
            ));
        }
        let height = depth.iter().copied().max().unwrap_or(0);
        let addr_index = address
            .iter()
            .enumerate()
            .map(|(v, a)| (a.clone(), v))
            .collect();
        Ok(TreeShape {
            children,
            parent: parents.to_vec(),
            depth,
            address,
            addr_index,
            root,
            height,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.children.len()
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.children[v]
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.parent[v]
    }

    pub fn depth(&self, v: VertexId) -> u32 {
        self.depth[v]
    }

    pub fn is_leaf(&self, v: VertexId) -> bool {
        self.children[v].is_empty()
    }

    pub fn address(&self, v: VertexId) -> &TreeAddress {
        &self.address[v]
    }

    pub fn vertex_at(&self, addr: &TreeAddress) -> Result<VertexId, TreeError> {
        self.addr_index
            .get(addr)
            .copied()
            .ok_or_else(|| TreeError::InvalidAddress(addr.clone()))
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        0..self.vertex_count()
    }

    /// Vertices in depth-first preorder starting at the root.
    pub fn preorder(&self) -> Vec<VertexId> {
        let mut out = Vec::with_capacity(self.vertex_count());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            for &c in self.children[v].iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Strict ancestors of `v`, nearest first.
    pub fn ancestors(&self, v: VertexId) -> AncestorIter<'_> {
        AncestorIter {
            shape: self,
            current: self.parent[v],
        }
    }

    /// The chain root → … → v, root first.
    pub fn chain_from_root(&self, v: VertexId) -> Vec<VertexId> {
        let mut chain: Vec<VertexId> = self.ancestors(v).collect();
        chain.reverse();
        chain.push(v);
        chain
    }

    /// Relation between two vertices given by address, validating both.
    pub fn relation(&self, u: &TreeAddress, v: &TreeAddress) -> Result<Relation, TreeError> {
        self.vertex_at(u)?;
        self.vertex_at(v)?;
        Ok(classify_relation(u, v))
    }

    pub fn relation_ids(&self, u: VertexId, v: VertexId) -> Relation {
        classify_relation(&self.address[u], &self.address[v])
    }

    /// True when `u` is a strict ancestor of `v`.
    pub fn is_strict_ancestor(&self, u: VertexId, v: VertexId) -> bool {
        self.address[u].is_strict_prefix_of(&self.address[v])
    }
}

impl fmt::Debug for TreeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TreeShape({} vertices, height {})",
            self.vertex_count(),
            self.height
        )
    }
}

pub struct AncestorIter<'a> {
    shape: &'a TreeShape,
    current: Option<VertexId>,
}

impl Iterator for AncestorIter<'_> {
    type Item = VertexId;

    fn next(&mut self) -> Option<VertexId> {
        let v = self.current?;
        self.current = self.shape.parent(v);
        Some(v)
    }
}

/// An injection of a smaller tree into a host tree that preserves the root
/// and the parent relation, so the image is a genuine subtree selection.
#[derive(Clone, Debug)]
pub struct TreeEmbedding {
    pub sub: TreeShape,
    /// `map[v]` is the host vertex that sub-vertex `v` selects.
    pub map: Vec<VertexId>,
}

impl TreeEmbedding {
    pub fn identity(shape: &TreeShape) -> Self {
        TreeEmbedding {
            sub: shape.clone(),
            map: (0..shape.vertex_count()).collect(),
        }
    }

    pub fn image(&self) -> &[VertexId] {
        &self.map
    }

    /// Checks injectivity, root preservation, and parent preservation
    /// against the host tree.
    pub fn verify(&self, host: &TreeShape) -> Result<(), TreeError> {
        if self.map.len() != self.sub.vertex_count() {
            return Err(TreeError::BadEmbedding("map length mismatch".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &h in &self.map {
            if h >= host.vertex_count() {
                return Err(TreeError::BadEmbedding(format!("image {} out of range", h)));
            }
            if !seen.insert(h) {
                return Err(TreeError::BadEmbedding(format!("image {} repeated", h)));
            }
        }
        if self.map[self.sub.root()] != host.root() {
            return Err(TreeError::BadEmbedding("root not preserved".into()));
        }
        for v in self.sub.vertices() {
            if let Some(p) = self.sub.parent(v) {
                if host.parent(self.map[v]) != Some(self.map[p]) {
                    return Err(TreeError::BadEmbedding(format!(
                        "parent of sub-vertex {} not preserved",
                        v
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A point of a product of trees: one address per factor.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProductVertex(pub Vec<TreeAddress>);

/// A product `T₁ × … × T_s` addressed by per-factor vertex ids.
///
/// Cells are indexed row-major with the last factor varying fastest; the
/// index space is arithmetic only, nothing is allocated per cell.
#[derive(Clone, Debug)]
pub struct ProductShape {
    factors: Vec<TreeShape>,
    strides: Vec<usize>,
    cell_count: usize,
}

impl ProductShape {
    pub fn new(factors: Vec<TreeShape>) -> Result<Self, TreeError> {
        if factors.is_empty() {
            return Err(TreeError::BadFactor { index: 0, len: 0 });
        }
        let mut strides = vec![1usize; factors.len()];
        let mut total: usize = 1;
        for i in (0..factors.len()).rev() {
            strides[i] = total;
            total = total
                .checked_mul(factors[i].vertex_count())
                .ok_or(TreeError::ProductOverflow)?;
        }
        Ok(ProductShape {
            factors,
            strides,
            cell_count: total,
        })
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    pub fn factor(&self, i: usize) -> &TreeShape {
        &self.factors[i]
    }

    pub fn factors(&self) -> &[TreeShape] {
        &self.factors
    }

    pub fn cell_count(&self) -> usize {
        self.cell_count
    }

    pub fn cell_index(&self, coords: &[VertexId]) -> usize {
        debug_assert_eq!(coords.len(), self.factors.len());
        coords
            .iter()
            .zip(&self.strides)
            .map(|(&v, &s)| v * s)
            .sum()
    }

    pub fn coords_of(&self, mut idx: usize) -> Vec<VertexId> {
        let mut coords = vec![0; self.factors.len()];
        for i in 0..self.factors.len() {
            coords[i] = idx / self.strides[i];
            idx %= self.strides[i];
        }
        coords
    }

    pub fn product_vertex(&self, coords: &[VertexId]) -> ProductVertex {
        ProductVertex(
            coords
                .iter()
                .zip(&self.factors)
                .map(|(&v, t)| t.address(v).clone())
                .collect(),
        )
    }

    pub fn cell_of_product_vertex(&self, pv: &ProductVertex) -> Result<usize, TreeError> {
        if pv.0.len() != self.factors.len() {
            return Err(TreeError::BadFactor {
                index: pv.0.len(),
                len: self.factors.len(),
            });
        }
        let mut coords = Vec::with_capacity(pv.0.len());
        for (addr, t) in pv.0.iter().zip(&self.factors) {
            coords.push(t.vertex_at(addr)?);
        }
        Ok(self.cell_index(&coords))
    }

    /// Streams the copies of factor `i`: every fixing of the coordinates
    /// `j ≠ i` yields one copy.
    pub fn copies_of_factor(&self, i: usize) -> Result<CopiesOfFactor<'_>, TreeError> {
        if i >= self.factors.len() {
            return Err(TreeError::BadFactor {
                index: i,
                len: self.factors.len(),
            });
        }
        Ok(CopiesOfFactor {
            shape: self,
            factor: i,
            context: vec![0; self.factors.len()],
            done: false,
        })
    }

    pub fn copy_count_of_factor(&self, i: usize) -> Result<BigUint, TreeError> {
        if i >= self.factors.len() {
            return Err(TreeError::BadFactor {
                index: i,
                len: self.factors.len(),
            });
        }
        let mut count = BigUint::one();
        for (j, t) in self.factors.iter().enumerate() {
            if j != i {
                count *= BigUint::from(t.vertex_count());
            }
        }
        Ok(count)
    }
}

/// One copy of a factor inside a product: the fixed context for the other
/// coordinates. The entry at `factor` itself is a placeholder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorCopy {
    pub factor: usize,
    pub context: Vec<VertexId>,
}

impl FactorCopy {
    /// Cell index of this copy's cell at factor-vertex `v`.
    pub fn cell(&self, shape: &ProductShape, v: VertexId) -> usize {
        let mut coords = self.context.clone();
        coords[self.factor] = v;
        shape.cell_index(&coords)
    }
}

pub struct CopiesOfFactor<'a> {
    shape: &'a ProductShape,
    factor: usize,
    context: Vec<VertexId>,
    done: bool,
}

impl Iterator for CopiesOfFactor<'_> {
    type Item = FactorCopy;

    fn next(&mut self) -> Option<FactorCopy> {
        if self.done {
            return None;
        }
        let item = FactorCopy {
            factor: self.factor,
            context: self.context.clone(),
        };
        // Odometer over all factors except `factor`, last varying fastest.
        let mut i = self.shape.factors.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if i == self.factor {
                continue;
            }
            self.context[i] += 1;
            if self.context[i] < self.shape.factors[i].vertex_count() {
                break;
            }
            self.context[i] = 0;
        }
        Some(item)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn addr(path: &[u32]) -> TreeAddress {
        TreeAddress(path.to_vec())
    }

    #[test]
    fn relation_examples() {
        let t = TreeShape::complete(2, 2).unwrap();
        assert_eq!(t.relation(&addr(&[0]), &addr(&[1])).unwrap(), Relation::Siblings);
        assert_eq!(
            t.relation(&addr(&[]), &addr(&[0, 1])).unwrap(),
            Relation::AncestorDescendant
        );
        assert_eq!(t.relation(&addr(&[0, 0]), &addr(&[1, 0])).unwrap(), Relation::Other);
        assert_eq!(t.relation(&addr(&[0]), &addr(&[0])).unwrap(), Relation::Equal);
        assert!(t.relation(&addr(&[0, 0, 0]), &addr(&[0])).is_err());
    }

    #[test]
    fn complete_counts_match_closed_form() {
        for n in 1..=10usize {
            for h in 0..=6u32 {
                let expected = complete_vertex_count(&BigUint::from(n), h);
                // Independent recount by levels: Σ n^d.
                let mut total = BigUint::default();
                for d in 0..=h {
                    total += BigUint::from(n).pow(d);
                }
                assert_eq!(expected, total, "n={} h={}", n, h);
                // Materialized check where cheap.
                if expected <= BigUint::from(20_000u32) {
                    let t = TreeShape::complete(n, h).unwrap();
                    assert_eq!(BigUint::from(t.vertex_count()), expected);
                    assert_eq!(t.height(), h);
                }
            }
        }
    }

    #[test]
    fn complete_tree_child_discipline() {
        let t = TreeShape::complete(3, 2).unwrap();
        assert_eq!(t.vertex_count(), 13);
        for v in t.vertices() {
            if t.depth(v) < 2 {
                assert_eq!(t.children(v).len(), 3);
            } else {
                assert!(t.is_leaf(v));
            }
        }
    }

    #[test]
    fn parent_array_roundtrip() {
        // 0 is the root; 1,2 children of 0; 3 child of 2.
        let t = TreeShape::from_parents(&[None, Some(0), Some(0), Some(2)]).unwrap();
        assert_eq!(t.vertex_count(), 4);
        assert_eq!(t.height(), 2);
        assert_eq!(t.vertex_at(&addr(&[1, 0])).unwrap(), 3);
        assert_eq!(t.relation_ids(1, 2), Relation::Siblings);
        assert_eq!(t.relation_ids(0, 3), Relation::AncestorDescendant);
        assert_eq!(t.relation_ids(1, 3), Relation::Other);
    }

    #[test]
    fn parent_array_rejects_cycles_and_forests() {
        assert!(TreeShape::from_parents(&[Some(1), Some(0)]).is_err());
        assert!(TreeShape::from_parents(&[None, None]).is_err());
        assert!(TreeShape::from_parents(&[None, Some(2), Some(1)]).is_err());
    }

    #[test]
    fn copies_of_factor_counts() {
        let t1 = TreeShape::complete(1, 2).unwrap(); // 3 vertices
        let t2 = TreeShape::complete(3, 2).unwrap(); // 13 vertices
        let p = ProductShape::new(vec![t1.clone(), t2.clone()]).unwrap();
        assert_eq!(p.copies_of_factor(0).unwrap().count(), 13);
        assert_eq!(p.copies_of_factor(1).unwrap().count(), 3);

        let single = ProductShape::new(vec![t2.clone()]).unwrap();
        assert_eq!(single.copies_of_factor(0).unwrap().count(), 1);

        let t57 = TreeShape::complete(7, 2).unwrap(); // 57 vertices
        let p2 = ProductShape::new(vec![t57, t2]).unwrap();
        assert_eq!(p2.copies_of_factor(1).unwrap().count(), 57);
        assert_eq!(
            p2.copy_count_of_factor(1).unwrap(),
            BigUint::from(57u32)
        );
    }

    #[test]
    fn cell_indexing_roundtrip() {
        let p = ProductShape::new(vec![
            TreeShape::complete(2, 1).unwrap(),
            TreeShape::complete(3, 1).unwrap(),
        ])
        .unwrap();
        assert_eq!(p.cell_count(), 12);
        for idx in 0..p.cell_count() {
            let coords = p.coords_of(idx);
            assert_eq!(p.cell_index(&coords), idx);
            let pv = p.product_vertex(&coords);
            assert_eq!(p.cell_of_product_vertex(&pv).unwrap(), idx);
        }
    }

    #[test]
    fn embedding_verifies() {
        let host = TreeShape::complete(3, 2).unwrap();
        let id = TreeEmbedding::identity(&host);
        id.verify(&host).unwrap();

        // A unary branch: root → child 1 → grandchild 0 under it.
        let sub = TreeShape::complete(1, 2).unwrap();
        let c1 = host.vertex_at(&addr(&[1])).unwrap();
        let gc = host.vertex_at(&addr(&[1, 0])).unwrap();
        let emb = TreeEmbedding {
            sub,
            map: vec![0, c1, gc],
        };
        emb.verify(&host).unwrap();

        // Breaking the parent relation is caught.
        let sub = TreeShape::complete(1, 1).unwrap();
        let bad = TreeEmbedding {
            sub,
            map: vec![0, gc],
        };
        assert!(bad.verify(&host).is_err());
    }

    fn arb_tree() -> impl Strategy<Value = TreeShape> {
        (1usize..=40).prop_flat_map(|n| {
            let parents = (1..n)
                .map(|v| (0..v).prop_map(Some).boxed())
                .collect::<Vec<_>>();
            parents.prop_map(move |mut ps| {
                let mut all = vec![None];
                all.append(&mut ps);
                TreeShape::from_parents(&all).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn every_pair_has_exactly_one_relation(t in arb_tree()) {
            for u in t.vertices() {
                for v in t.vertices() {
                    let r = t.relation_ids(u, v);
                    let s = t.relation_ids(v, u);
                    match r {
                        Relation::Equal => prop_assert!(u == v && s == Relation::Equal),
                        Relation::Siblings => {
                            prop_assert_eq!(s, Relation::Siblings);
                            prop_assert_eq!(t.parent(u), t.parent(v));
                            prop_assert!(u != v);
                        }
                        Relation::AncestorDescendant => {
                            prop_assert_eq!(s, Relation::AncestorDescendant);
                            prop_assert!(
                                t.is_strict_ancestor(u, v) ^ t.is_strict_ancestor(v, u)
                            );
                        }
                        Relation::Other => prop_assert_eq!(s, Relation::Other),
                    }
                }
            }
        }

        #[test]
        fn chain_from_root_is_a_path(t in arb_tree()) {
            for v in t.vertices() {
                let chain = t.chain_from_root(v);
                prop_assert_eq!(chain[0], t.root());
                prop_assert_eq!(*chain.last().unwrap(), v);
                for w in chain.windows(2) {
                    prop_assert_eq!(t.parent(w[1]), Some(w[0]));
                }
            }
        }
    }
}
