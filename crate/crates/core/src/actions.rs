//! Affine actions `σ(s)v = π(s)v + b(s)` on finitely supported coefficient
//! spaces, and the checks run against them.
//!
//! Vectors are [`SparseVector`]s over a structured [`Index`] universe. Norms
//! are handled as `p`-th powers so every comparison stays exact; for `p = 1`
//! this is the norm itself. The free-space action measures vectors with the
//! transport norm of its graph instead of an `ℓᵖ` norm.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::corpus::{random_rational, CorpusRng};
use crate::free_space::{free_norm_dual, free_norm_flow, FreeSpaceError, FreeVector};
use crate::graph::PointedGraph;
use crate::groups::{
    cayley_ball, translate_vertex, tree_vertex, BassSerreBall, CayleyBall, CosetSection, GroupElement, GroupError,
    GroupHandle, TreeVertex,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("generator {generator} does not act by a graph automorphism: {detail}")]
    NotAutomorphism { generator: String, detail: String },
    #[error("{element} moves vertex {vertex} outside the materialized ball")]
    OrbitEscapesBall { element: String, vertex: String },
    #[error("letters {position} and {next} of the word are not reduced", next = position + 1)]
    NotReducedWord { position: usize },
    #[error("{side} factor action is not isometric (bound {bound})")]
    NotIsometric { side: &'static str, bound: String },
    #[error("exponent mismatch: expected p = {expected}, found {found}")]
    ExponentMismatch { expected: u32, found: u32 },
    #[error("element {element} is outside the action's domain")]
    UnknownElement { element: String },
    #[error("index {index} is not part of this coefficient space")]
    BadIndex { index: String },
    #[error("invalid matrix data: {detail}")]
    BadMatrix { detail: String },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    FreeSpace(#[from] FreeSpaceError),
}

/// Coordinates of the coefficient spaces.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Index {
    Vertex(usize),
    Int(i64),
    Elem(GroupElement),
    Coset(usize),
    /// Summand `tag` of a direct sum.
    Tagged(u32, Box<Index>),
    /// Fiber coordinate `(outer, inner)` of a space of functions `outer → inner`.
    Pair(Box<Index>, Box<Index>),
}

impl Index {
    pub fn tagged(tag: u32, inner: Index) -> Index {
        Index::Tagged(tag, Box::new(inner))
    }

    pub fn pair(outer: Index, inner: Index) -> Index {
        Index::Pair(Box::new(outer), Box::new(inner))
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Vertex(v) => write!(f, "v{v}"),
            Index::Int(k) => write!(f, "{k}"),
            Index::Elem(g) => write!(f, "[{g}]"),
            Index::Coset(c) => write!(f, "c{c}"),
            Index::Tagged(t, i) => write!(f, "{t}:{i}"),
            Index::Pair(a, b) => write!(f, "<{a};{b}>"),
        }
    }
}

/// Finitely supported vector with no stored zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseVector<T> {
    entries: BTreeMap<Index, T>,
}

impl<T: Scalar> Default for SparseVector<T> {
    fn default() -> Self {
        SparseVector {
            entries: BTreeMap::new(),
        }
    }
}

impl<T: Scalar> SparseVector<T> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(i: Index) -> Self {
        Self::from_pairs([(i, T::one())])
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Index, T)>) -> Self {
        let mut v = Self::zero();
        for (i, a) in pairs {
            v.add_at(i, a);
        }
        v
    }

    pub fn add_at(&mut self, i: Index, a: T) {
        if a.negligible() {
            return;
        }
        match self.entries.get_mut(&i) {
            Some(cur) => {
                *cur = cur.clone() + a;
                if cur.negligible() {
                    self.entries.remove(&i);
                }
            }
            None => {
                self.entries.insert(i, a);
            }
        }
    }

    pub fn get(&self, i: &Index) -> T {
        self.entries.get(i).cloned().unwrap_or_else(T::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Index, &T)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scaled(&self, c: &T) -> Self {
        Self::from_pairs(self.entries.iter().map(|(i, a)| (i.clone(), a.clone() * c.clone())))
    }

    /// `Σ |v_i|^p`.
    pub fn norm_pow(&self, p: u32) -> T {
        self.entries.values().fold(T::zero(), |acc, a| acc + a.abs().pow_u32(p))
    }

    pub fn reindex(&self, f: impl Fn(&Index) -> Index) -> Self {
        Self::from_pairs(self.entries.iter().map(|(i, a)| (f(i), a.clone())))
    }

    /// Wraps every index as summand `tag`.
    pub fn tag(&self, tag: u32) -> Self {
        self.reindex(|i| Index::tagged(tag, i.clone()))
    }

    /// Splits a direct-sum vector into its summands.
    pub fn by_tag(&self) -> Result<BTreeMap<u32, SparseVector<T>>, ActionError> {
        let mut out: BTreeMap<u32, SparseVector<T>> = BTreeMap::new();
        for (i, a) in &self.entries {
            let Index::Tagged(t, inner) = i else {
                return Err(ActionError::BadIndex { index: i.to_string() });
            };
            out.entry(*t).or_default().add_at((**inner).clone(), a.clone());
        }
        Ok(out)
    }

    /// Splits a function-valued vector into its fibers.
    pub fn fibers(&self) -> Result<BTreeMap<Index, SparseVector<T>>, ActionError> {
        let mut out: BTreeMap<Index, SparseVector<T>> = BTreeMap::new();
        for (i, a) in &self.entries {
            let Index::Pair(outer, inner) = i else {
                return Err(ActionError::BadIndex { index: i.to_string() });
            };
            out.entry((**outer).clone())
                .or_default()
                .add_at((**inner).clone(), a.clone());
        }
        Ok(out)
    }

    pub fn from_free_vector(mu: &FreeVector<T>) -> Self {
        Self::from_pairs(mu.iter().map(|(x, a)| (Index::Vertex(x), a.clone())))
    }

    pub fn to_free_vector(&self, basepoint: usize) -> Result<FreeVector<T>, ActionError> {
        let mut pairs = Vec::with_capacity(self.len());
        for (i, a) in &self.entries {
            let Index::Vertex(x) = i else {
                return Err(ActionError::BadIndex { index: i.to_string() });
            };
            pairs.push((*x, a.clone()));
        }
        Ok(FreeVector::from_pairs(basepoint, pairs))
    }

    /// Entries as `(index, exact value)` strings.
    pub fn to_strings(&self) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .map(|(i, a)| (i.to_string(), a.to_exact_string()))
            .collect()
    }
}

impl<T: Scalar> Add for &SparseVector<T> {
    type Output = SparseVector<T>;

    fn add(self, rhs: Self) -> SparseVector<T> {
        let mut out = self.clone();
        for (i, a) in &rhs.entries {
            out.add_at(i.clone(), a.clone());
        }
        out
    }
}

impl<T: Scalar> Neg for &SparseVector<T> {
    type Output = SparseVector<T>;

    fn neg(self) -> SparseVector<T> {
        SparseVector {
            entries: self.entries.iter().map(|(i, a)| (i.clone(), -a.clone())).collect(),
        }
    }
}

impl<T: Scalar> Sub for &SparseVector<T> {
    type Output = SparseVector<T>;

    fn sub(self, rhs: Self) -> SparseVector<T> {
        self + &(-rhs)
    }
}

/// Affine action `σ(s)v = π(s)v + b(s)` with `sup_s ‖π(s)‖ ≤ C`.
pub trait AffineAction<T: Scalar>: Send + Sync {
    fn describe(&self) -> String;

    /// Exponent `p` of the norm; [`AffineAction::norm_pow`] returns `‖v‖^p`.
    fn exponent(&self) -> u32;

    /// The constant `C`.
    fn lipschitz_bound(&self) -> T;

    /// `π(s)v`.
    fn apply_linear(&self, s: &GroupElement, v: &SparseVector<T>) -> Result<SparseVector<T>, ActionError>;

    /// `b(s) = σ(s)0`.
    fn cocycle(&self, s: &GroupElement) -> Result<SparseVector<T>, ActionError>;

    fn norm_pow(&self, v: &SparseVector<T>) -> Result<T, ActionError>;

    fn apply(&self, s: &GroupElement, v: &SparseVector<T>) -> Result<SparseVector<T>, ActionError> {
        Ok(&self.apply_linear(s, v)? + &self.cocycle(s)?)
    }
}

pub type SharedAction<T> = Arc<dyn AffineAction<T>>;

/// How the group moves the vertices of the graph.
#[derive(Debug, Clone)]
enum VertexAction {
    /// One permutation per element of a finite group.
    Permutations(BTreeMap<GroupElement, Vec<usize>>),
    /// Left multiplication on a Cayley ball; partial near the boundary.
    LeftMultiplication(CayleyBall),
}

/// Isometric action on the free space `F(X)` induced by an action on the
/// pointed graph `X`: `π(s)δ_x = δ_{s·x} − δ_{s·o}` and `b(s) = δ_{s·o}`.
#[derive(Debug, Clone)]
pub struct FreeSpaceAction {
    group: GroupHandle,
    graph: PointedGraph,
    vertices: VertexAction,
}

fn is_automorphism(graph: &PointedGraph, perm: &[usize]) -> Result<(), String> {
    let n = graph.vertex_count();
    if perm.len() != n {
        return Err(format!("expected {n} entries, found {}", perm.len()));
    }
    let mut hit = vec![false; n];
    for &x in perm {
        if x >= n || std::mem::replace(&mut hit[x], true) {
            return Err("not a permutation of the vertices".into());
        }
    }
    for &(u, v) in graph.edges() {
        if !graph.graph().has_edge(perm[u], perm[v]) {
            return Err(format!("edge ({u}, {v}) is not preserved"));
        }
    }
    Ok(())
}

impl FreeSpaceAction {
    /// Finite group acting through one vertex permutation per generator,
    /// listed in the order of `group.generators()`. The permutations must be
    /// graph automorphisms and must define an action of the group.
    pub fn from_generator_permutations(
        group: GroupHandle,
        graph: PointedGraph,
        perms: &[Vec<usize>],
    ) -> Result<Self, ActionError> {
        let gens = group.generators().to_vec();
        if perms.len() != gens.len() {
            return Err(ActionError::NotAutomorphism {
                generator: "-".into(),
                detail: format!("{} permutations for {} generators", perms.len(), gens.len()),
            });
        }
        for (s, perm) in gens.iter().zip(perms) {
            is_automorphism(&graph, perm).map_err(|detail| ActionError::NotAutomorphism {
                generator: s.to_string(),
                detail,
            })?;
        }
        let order = group.order().ok_or_else(|| GroupError::InfiniteGroup {
            group: group.name().to_string(),
        })?;
        let e = group.identity();
        let mut table = BTreeMap::from([(e.clone(), (0..graph.vertex_count()).collect::<Vec<_>>())]);
        let mut queue = vec![e];
        let mut head = 0;
        while head < queue.len() {
            let g = queue[head].clone();
            head += 1;
            for (s, perm_s) in gens.iter().zip(perms) {
                let gs = group.multiply(&g, s);
                let perm_g = &table[&g];
                let composed: Vec<usize> = perm_s.iter().map(|&x| perm_g[x]).collect();
                match table.get(&gs) {
                    Some(existing) if *existing != composed => {
                        return Err(ActionError::NotAutomorphism {
                            generator: s.to_string(),
                            detail: format!("permutations do not respect the relations at {gs}"),
                        });
                    }
                    Some(_) => {}
                    None => {
                        table.insert(gs.clone(), composed);
                        queue.push(gs);
                    }
                }
            }
        }
        debug_assert_eq!(table.len(), order);
        Ok(FreeSpaceAction {
            group,
            graph,
            vertices: VertexAction::Permutations(table),
        })
    }

    /// `Z/n` rotating the cycle `C_n` (from [`crate::corpus::cycle`]).
    pub fn cyclic_rotation(n: usize) -> Result<Self, ActionError> {
        let group = crate::groups::make_cyclic_group(n)?;
        let graph = crate::corpus::cycle(n);
        let perms: Vec<Vec<usize>> = group
            .generators()
            .iter()
            .map(|g| match g {
                GroupElement::Finite(k) => (0..n).map(|x| (x + k) % n).collect(),
                _ => unreachable!("cyclic groups use table elements"),
            })
            .collect();
        Self::from_generator_permutations(group, graph, &perms)
    }

    /// The group acting on its own Cayley ball by left multiplication.
    pub fn on_cayley_ball(group: GroupHandle, radius: u32, cap: usize) -> Result<Self, ActionError> {
        let ball = cayley_ball(&group, radius, cap)?;
        Ok(FreeSpaceAction {
            graph: ball.graph.clone(),
            group,
            vertices: VertexAction::LeftMultiplication(ball),
        })
    }

    pub fn graph(&self) -> &PointedGraph {
        &self.graph
    }

    pub fn group(&self) -> &GroupHandle {
        &self.group
    }

    pub fn cayley(&self) -> Option<&CayleyBall> {
        match &self.vertices {
            VertexAction::LeftMultiplication(ball) => Some(ball),
            VertexAction::Permutations(_) => None,
        }
    }

    /// `s · x`.
    pub fn move_vertex(&self, s: &GroupElement, x: usize) -> Result<usize, ActionError> {
        match &self.vertices {
            VertexAction::Permutations(table) => table
                .get(s)
                .map(|perm| perm[x])
                .ok_or_else(|| ActionError::UnknownElement { element: s.to_string() }),
            VertexAction::LeftMultiplication(ball) => {
                let target = self.group.multiply(s, ball.element(x));
                ball.vertex_of(&target).ok_or_else(|| ActionError::OrbitEscapesBall {
                    element: s.to_string(),
                    vertex: ball.element(x).to_string(),
                })
            }
        }
    }

    /// Transport norm by linear programming, for cross-checking the flow
    /// value used by [`AffineAction::norm_pow`].
    pub fn dual_norm<T: Scalar>(&self, v: &SparseVector<T>) -> Result<T, ActionError> {
        Ok(free_norm_dual(&v.to_free_vector(self.graph.basepoint())?, &self.graph)?.value)
    }
}

impl<T: Scalar> AffineAction<T> for FreeSpaceAction {
    fn describe(&self) -> String {
        format!(
            "free-space action of {} on a graph with {} vertices",
            self.group.name(),
            self.graph.vertex_count()
        )
    }

    fn exponent(&self) -> u32 {
        1
    }

    fn lipschitz_bound(&self) -> T {
        T::one()
    }

    fn apply_linear(&self, s: &GroupElement, v: &SparseVector<T>) -> Result<SparseVector<T>, ActionError> {
        let o = self.graph.basepoint();
        let mu = v.to_free_vector(o)?;
        let so = self.move_vertex(s, o)?;
        let mut out = FreeVector::zero(o);
        for (x, a) in mu.iter() {
            out.add_at(self.move_vertex(s, x)?, a.clone());
            out.add_at(so, -a.clone());
        }
        Ok(SparseVector::from_free_vector(&out))
    }

    fn cocycle(&self, s: &GroupElement) -> Result<SparseVector<T>, ActionError> {
        let o = self.graph.basepoint();
        Ok(SparseVector::from_free_vector(&FreeVector::delta(
            self.move_vertex(s, o)?,
            o,
        )))
    }

    fn norm_pow(&self, v: &SparseVector<T>) -> Result<T, ActionError> {
        Ok(free_norm_flow(&v.to_free_vector(self.graph.basepoint())?, &self.graph)?.value)
    }
}

pub type Homomorphism = Arc<dyn Fn(&GroupElement) -> Option<i64> + Send + Sync>;

/// Action through a homomorphism `φ` to `Z`: translation on `ℓᵖ(Z)` with the
/// interval cocycle `b(s) = scale · ±1_{[0, φ(s))}`, so `‖b(s)‖₁ = scale·|φ(s)|`.
#[derive(Clone)]
pub struct TranslationAction<T> {
    hom: Homomorphism,
    scale: T,
    p: u32,
    label: String,
}

impl<T: Scalar> TranslationAction<T> {
    pub fn new(hom: Homomorphism, scale: T, p: u32, label: impl Into<String>) -> Self {
        TranslationAction {
            hom,
            scale,
            p,
            label: label.into(),
        }
    }

    /// `Z = free:1` acting by itself.
    pub fn integers(scale: T, p: u32) -> Self {
        let hom: Homomorphism = Arc::new(|g| match g {
            GroupElement::Free(w) if w.iter().all(|&k| k.abs() == 1) => Some(w.iter().map(|&k| k as i64).sum()),
            _ => None,
        });
        Self::new(hom, scale, p, "Z")
    }

    fn shift(&self, s: &GroupElement) -> Result<i64, ActionError> {
        (self.hom)(s).ok_or_else(|| ActionError::UnknownElement { element: s.to_string() })
    }
}

/// `⟨ab⟩ ≅ Z` inside `D∞`: `(ab)ⁿ ↦ n`, odd-length elements are outside.
pub fn dihedral_rotation_hom() -> Homomorphism {
    Arc::new(|g| {
        let w = g.letters();
        if w.len() % 2 == 1 {
            return None;
        }
        let n = (w.len() / 2) as i64;
        Some(if w.first().is_some_and(|(side, _)| *side == 1) {
            -n
        } else {
            n
        })
    })
}

impl<T: Scalar> AffineAction<T> for TranslationAction<T> {
    fn describe(&self) -> String {
        format!(
            "translation action of {} on l^{}(Z), scale {}",
            self.label,
            self.p,
            self.scale.to_exact_string()
        )
    }

    fn exponent(&self) -> u32 {
        self.p
    }

    fn lipschitz_bound(&self) -> T {
        T::one()
    }

    fn apply_linear(&self, s: &GroupElement, v: &SparseVector<T>) -> Result<SparseVector<T>, ActionError> {
        let n = self.shift(s)?;
        let mut out = SparseVector::zero();
        for (i, a) in v.iter() {
            let Index::Int(k) = i else {
                return Err(ActionError::BadIndex { index: i.to_string() });
            };
            out.add_at(Index::Int(k + n), a.clone());
        }
        Ok(out)
    }

    fn cocycle(&self, s: &GroupElement) -> Result<SparseVector<T>, ActionError> {
        let n = self.shift(s)?;
        let (range, sign) = if n >= 0 { (0..n, T::one()) } else { (n..0, -T::one()) };
        let c = self.scale.clone() * sign;
        Ok(SparseVector::from_pairs(range.map(|k| (Index::Int(k), c.clone()))))
    }

    fn norm_pow(&self, v: &SparseVector<T>) -> Result<T, ActionError> {
        Ok(v.norm_pow(self.p))
    }
}

/// Left regular representation on `ℓᵖ(G)` with `b(s) = δ_s − δ_e`.
#[derive(Debug, Clone)]
pub struct RegularAction {
    group: GroupHandle,
    p: u32,
}

impl RegularAction {
    pub fn new(group: GroupHandle, p: u32) -> Self {
        RegularAction { group, p }
    }
}

impl<T: Scalar> AffineAction<T> for RegularAction {
    fn describe(&self) -> String {
        format!("regular action of {} on l^{}", self.group.name(), self.p)
    }

    fn exponent(&self) -> u32 {
        self.p
    }

    fn lipschitz_bound(&self) -> T {
        T::one()
    }

    fn apply_linear(&self, s: &GroupElement, v: &SparseVector<T>) -> Result<SparseVector<T>, ActionError> {
        let mut out = SparseVector::zero();
        for (i, a) in v.iter() {
            let Index::Elem(g) = i else {
                return Err(ActionError::BadIndex { index: i.to_string() });
            };
            out.add_at(Index::Elem(self.group.multiply(s, g)), a.clone());
        }
        Ok(out)
    }

    fn cocycle(&self, s: &GroupElement) -> Result<SparseVector<T>, ActionError> {
        Ok(SparseVector::from_pairs([
            (Index::Elem(s.clone()), T::one()),
            (Index::Elem(self.group.identity()), -T::one()),
        ]))
    }

    fn norm_pow(&self, v: &SparseVector<T>) -> Result<T, ActionError> {
        Ok(v.norm_pow(self.p))
    }
}

/// Trivial action: `π = id`, `b = 0`.
#[derive(Debug, Clone, Default)]
pub struct TrivialAction {
    pub p: u32,
}

impl<T: Scalar> AffineAction<T> for TrivialAction {
    fn describe(&self) -> String {
        "trivial action".into()
    }

    fn exponent(&self) -> u32 {
        self.p.max(1)
    }

    fn lipschitz_bound(&self) -> T {
        T::one()
    }

    fn apply_linear(&self, _: &GroupElement, v: &SparseVector<T>) -> Result<SparseVector<T>, ActionError> {
        Ok(v.clone())
    }

    fn cocycle(&self, _: &GroupElement) -> Result<SparseVector<T>, ActionError> {
        Ok(SparseVector::zero())
    }

    fn norm_pow(&self, v: &SparseVector<T>) -> Result<T, ActionError> {
        Ok(v.norm_pow(AffineAction::<T>::exponent(self)))
    }
}

/// Action of `G` induced from an action of a finite-index subgroup `H` on
/// `ℓᵖ(G/H; E)`: `(π̃(s)f)(x) = π(α(s, s⁻¹x)) f(s⁻¹x)` and
/// `b̃(s)(x) = b(α(s, s⁻¹x))`. Indices are `Pair(Coset(x), inner)`.
pub struct InducedAction<T> {
    section: CosetSection,
    inner: SharedAction<T>,
}

impl<T: Scalar> InducedAction<T> {
    pub fn new(section: CosetSection, inner: SharedAction<T>) -> Self {
        InducedAction { section, inner }
    }

    pub fn section(&self) -> &CosetSection {
        &self.section
    }

    /// `B̃ = B + D` with `D = max{|ω⁻¹| : ω ∈ Ω}`.
    pub fn lower_bound_constant(&self, inner_b: &T) -> T {
        inner_b.clone() + T::from_int(self.section.inverse_representative_bound() as i64)
    }
}

impl<T: Scalar> AffineAction<T> for InducedAction<T> {
    fn describe(&self) -> String {
        format!(
            "action of {} induced from an index-{} subgroup ({})",
            self.section.group().name(),
            self.section.index(),
            self.inner.describe()
        )
    }

    fn exponent(&self) -> u32 {
        self.inner.exponent()
    }

    fn lipschitz_bound(&self) -> T {
        self.inner.lipschitz_bound()
    }

    fn apply_linear(&self, s: &GroupElement, v: &SparseVector<T>) -> Result<SparseVector<T>, ActionError> {
        let mut out = SparseVector::zero();
        for (outer, fiber) in v.fibers()? {
            let Index::Coset(y) = outer else {
                return Err(ActionError::BadIndex {
                    index: outer.to_string(),
                });
            };
            if y >= self.section.index() {
                return Err(ActionError::BadIndex {
                    index: outer.to_string(),
                });
            }
            let x = self.section.act(s, y)?;
            let moved = self.inner.apply_linear(&self.section.alpha(s, y)?, &fiber)?;
            for (i, a) in moved.iter() {
                out.add_at(Index::pair(Index::Coset(x), i.clone()), a.clone());
            }
        }
        Ok(out)
    }

    fn cocycle(&self, s: &GroupElement) -> Result<SparseVector<T>, ActionError> {
        let mut out = SparseVector::zero();
        for y in 0..self.section.index() {
            let x = self.section.act(s, y)?;
            let b = self.inner.cocycle(&self.section.alpha(s, y)?)?;
            for (i, a) in b.iter() {
                out.add_at(Index::pair(Index::Coset(x), i.clone()), a.clone());
            }
        }
        Ok(out)
    }

    fn norm_pow(&self, v: &SparseVector<T>) -> Result<T, ActionError> {
        let mut total = T::zero();
        for (_, fiber) in v.fibers()? {
            total = total + self.inner.norm_pow(&fiber)?;
        }
        Ok(total)
    }
}

/// Isometric action of `Γ ∗ Λ` on `ℓᵖ(T; E ⊕ F ⊕ ℓᵖ(Γ) ⊕ ℓᵖ(Λ))` over the
/// Bass–Serre tree `T`, built from isometric actions on `E` and `F`.
///
/// Fiber summands are tagged 0 (`E`), 1 (`F`), 2 (`ℓᵖ(Γ)`) and 3 (`ℓᵖ(Λ)`);
/// tree vertices are `Tagged(side, Elem(rep))`. Only vertices with a nonzero
/// fiber are stored.
pub struct FreeProductAction<T> {
    group: GroupHandle,
    left: SharedAction<T>,
    right: SharedAction<T>,
    p: u32,
    tree: Option<BassSerreBall>,
}

fn vertex_index(v: &TreeVertex) -> Index {
    Index::tagged(v.side as u32, Index::Elem(v.rep.clone()))
}

fn index_vertex(i: &Index) -> Option<TreeVertex> {
    match i {
        Index::Tagged(side @ (0 | 1), inner) => match &**inner {
            Index::Elem(rep) => Some(TreeVertex {
                side: *side as u8,
                rep: rep.clone(),
            }),
            _ => None,
        },
        _ => None,
    }
}

impl<T: Scalar> FreeProductAction<T> {
    pub fn new(
        group: GroupHandle,
        left: SharedAction<T>,
        right: SharedAction<T>,
        p: u32,
        tree: Option<BassSerreBall>,
    ) -> Result<Self, ActionError> {
        if group.free_factors().is_none() {
            return Err(GroupError::WrongKind {
                expected: "free product",
            }
            .into());
        }
        for (side, action) in [("left", &left), ("right", &right)] {
            if action.exponent() != p {
                return Err(ActionError::ExponentMismatch {
                    expected: p,
                    found: action.exponent(),
                });
            }
            let bound = action.lipschitz_bound();
            if bound != T::one() {
                return Err(ActionError::NotIsometric {
                    side,
                    bound: bound.to_exact_string(),
                });
            }
        }
        Ok(FreeProductAction {
            group,
            left,
            right,
            p,
            tree,
        })
    }

    fn factor(&self, side: u8) -> &GroupHandle {
        let (a, b) = self.group.free_factors().expect("checked at construction");
        if side == 0 {
            a
        } else {
            b
        }
    }

    /// Images of `w` under the two projections `Γ ∗ Λ → Γ` and `→ Λ`.
    fn projections(&self, w: &GroupElement) -> [GroupElement; 2] {
        let mut out = [self.factor(0).identity(), self.factor(1).identity()];
        for (side, x) in w.letters() {
            let s = *side as usize;
            out[s] = self.factor(*side).multiply(&out[s], x);
        }
        out
    }

    /// `π(w)` on one fiber.
    fn fiber_linear(&self, proj: &[GroupElement; 2], fiber: &SparseVector<T>) -> Result<SparseVector<T>, ActionError> {
        let mut out = SparseVector::zero();
        for (tag, part) in fiber.by_tag()? {
            let moved = match tag {
                0 => self.left.apply_linear(&proj[0], &part)?,
                1 => self.right.apply_linear(&proj[1], &part)?,
                2 | 3 => {
                    let side = (tag - 2) as u8;
                    part.reindex(|i| match i {
                        Index::Elem(g) => Index::Elem(self.factor(side).multiply(&proj[side as usize], g)),
                        other => other.clone(),
                    })
                }
                _ => {
                    return Err(ActionError::BadIndex {
                        index: format!("{tag}:*"),
                    })
                }
            };
            for (i, a) in moved.iter() {
                out.add_at(Index::tagged(tag, i.clone()), a.clone());
            }
        }
        Ok(out)
    }

    /// `b̃` of a single letter, supported on the vertex `Γ` or `Λ`.
    fn letter_cocycle(&self, side: u8, x: &GroupElement) -> Result<SparseVector<T>, ActionError> {
        let factor = self.factor(side);
        let inner = if side == 0 { &self.left } else { &self.right };
        let regular = SparseVector::from_pairs([
            (Index::Elem(x.clone()), T::one()),
            (Index::Elem(factor.identity()), -T::one()),
        ]);
        let fiber = &inner.cocycle(x)?.tag(side as u32) + &regular.tag(2 + side as u32);
        let vertex = vertex_index(&tree_vertex(&self.group.identity(), side));
        Ok(fiber.reindex(|i| Index::pair(vertex.clone(), i.clone())))
    }

    /// `b̃(s₁⋯s_n)` from an explicit letter sequence, rejecting sequences that
    /// are not reduced.
    pub fn cocycle_of_word(&self, letters: &[(u8, GroupElement)]) -> Result<SparseVector<T>, ActionError> {
        for (i, (side, x)) in letters.iter().enumerate() {
            if *side > 1 || self.factor(*side).is_identity(x) {
                return Err(ActionError::NotReducedWord { position: i });
            }
            if letters.get(i + 1).is_some_and(|(next, _)| next == side) {
                return Err(ActionError::NotReducedWord { position: i });
            }
        }
        self.cocycle(&self.group.from_letters(letters))
    }

    /// `Σᵢ ‖b(sᵢ)‖^p` over the letters of `w`.
    pub fn letter_norms(&self, w: &GroupElement) -> Result<T, ActionError> {
        let mut total = T::zero();
        for (side, x) in w.letters() {
            let inner = if *side == 0 { &self.left } else { &self.right };
            total = total + inner.norm_pow(&inner.cocycle(x)?)?;
        }
        Ok(total)
    }
}

impl<T: Scalar> AffineAction<T> for FreeProductAction<T> {
    fn describe(&self) -> String {
        format!(
            "free-product action of {} over its Bass-Serre tree, p = {} ({}; {})",
            self.group.name(),
            self.p,
            self.left.describe(),
            self.right.describe()
        )
    }

    fn exponent(&self) -> u32 {
        self.p
    }

    fn lipschitz_bound(&self) -> T {
        T::one()
    }

    fn apply_linear(&self, s: &GroupElement, v: &SparseVector<T>) -> Result<SparseVector<T>, ActionError> {
        let proj = self.projections(s);
        let mut out = SparseVector::zero();
        for (outer, fiber) in v.fibers()? {
            let vertex = index_vertex(&outer).ok_or_else(|| ActionError::BadIndex {
                index: outer.to_string(),
            })?;
            let target = translate_vertex(&self.group, s, &vertex);
            if let Some(tree) = &self.tree {
                if tree.vertex_of(&target).is_none() {
                    return Err(ActionError::OrbitEscapesBall {
                        element: s.to_string(),
                        vertex: vertex.to_string(),
                    });
                }
            }
            let target = vertex_index(&target);
            for (i, a) in self.fiber_linear(&proj, &fiber)?.iter() {
                out.add_at(Index::pair(target.clone(), i.clone()), a.clone());
            }
        }
        Ok(out)
    }

    /// `b̃(s₁⋯s_n) = Σᵢ π̃(s₁⋯s_{i−1}) b̃(sᵢ)`, the unrolled inductive
    /// definition.
    fn cocycle(&self, s: &GroupElement) -> Result<SparseVector<T>, ActionError> {
        let mut total = SparseVector::zero();
        let mut prefix = self.group.identity();
        for (side, x) in s.letters() {
            let term = self.apply_linear(&prefix, &self.letter_cocycle(*side, x)?)?;
            total = &total + &term;
            prefix = self
                .group
                .multiply(&prefix, &self.group.from_letters(&[(*side, x.clone())]));
        }
        Ok(total)
    }

    fn norm_pow(&self, v: &SparseVector<T>) -> Result<T, ActionError> {
        let mut total = T::zero();
        for (_, fiber) in v.fibers()? {
            for (tag, part) in fiber.by_tag()? {
                total = total
                    + match tag {
                        0 => self.left.norm_pow(&part)?,
                        1 => self.right.norm_pow(&part)?,
                        _ => part.norm_pow(self.p),
                    };
            }
        }
        Ok(total)
    }
}

/// `ℓ¹`-direct sum of actions of the same group; summand `i` is tagged `i`.
pub struct DirectSumAction<T> {
    parts: Vec<SharedAction<T>>,
}

impl<T: Scalar> DirectSumAction<T> {
    pub fn new(parts: Vec<SharedAction<T>>) -> Result<Self, ActionError> {
        if let Some(bad) = parts.iter().find(|a| a.exponent() != 1) {
            return Err(ActionError::ExponentMismatch {
                expected: 1,
                found: bad.exponent(),
            });
        }
        Ok(DirectSumAction { parts })
    }

    pub fn parts(&self) -> &[SharedAction<T>] {
        &self.parts
    }

    fn split(&self, v: &SparseVector<T>) -> Result<BTreeMap<u32, SparseVector<T>>, ActionError> {
        let parts = v.by_tag()?;
        if let Some(&t) = parts.keys().find(|&&t| t as usize >= self.parts.len()) {
            return Err(ActionError::BadIndex {
                index: format!("{t}:*"),
            });
        }
        Ok(parts)
    }
}

impl<T: Scalar> AffineAction<T> for DirectSumAction<T> {
    fn describe(&self) -> String {
        let names: Vec<String> = self.parts.iter().map(|a| a.describe()).collect();
        format!("l^1 direct sum of [{}]", names.join("; "))
    }

    fn exponent(&self) -> u32 {
        1
    }

    fn lipschitz_bound(&self) -> T {
        self.parts.iter().map(|a| a.lipschitz_bound()).fold(T::one(), T::max_of)
    }

    fn apply_linear(&self, s: &GroupElement, v: &SparseVector<T>) -> Result<SparseVector<T>, ActionError> {
        let mut out = SparseVector::zero();
        for (t, part) in self.split(v)? {
            out = &out + &self.parts[t as usize].apply_linear(s, &part)?.tag(t);
        }
        Ok(out)
    }

    fn cocycle(&self, s: &GroupElement) -> Result<SparseVector<T>, ActionError> {
        let mut out = SparseVector::zero();
        for (t, action) in self.parts.iter().enumerate() {
            out = &out + &action.cocycle(s)?.tag(t as u32);
        }
        Ok(out)
    }

    fn norm_pow(&self, v: &SparseVector<T>) -> Result<T, ActionError> {
        let mut total = T::zero();
        for (t, part) in self.split(v)? {
            total = total + self.parts[t as usize].norm_pow(&part)?;
        }
        Ok(total)
    }
}

type Matrix<T> = Vec<Vec<T>>;

fn mat_vec<T: Scalar>(m: &Matrix<T>, v: &[T]) -> Vec<T> {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
        })
        .collect()
}

fn mat_mul<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let n = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| {
                    row.iter()
                        .zip(b)
                        .fold(T::zero(), |acc, (x, r)| acc + x.clone() * r[j].clone())
                })
                .collect()
        })
        .collect()
}

/// Finite group acting on `ℓᵖ` of dimension `d` (indices `Int(0..d)`) by
/// matrices, with a cocycle given on generators.
#[derive(Debug, Clone)]
pub struct MatrixAction<T> {
    group: GroupHandle,
    dim: usize,
    p: u32,
    bound: T,
    matrices: BTreeMap<GroupElement, Matrix<T>>,
    cocycles: BTreeMap<GroupElement, Vec<T>>,
}

impl<T: Scalar> MatrixAction<T> {
    /// `generator_data[i]` is `(π(sᵢ), b(sᵢ))` for the `i`-th generator.
    /// The data must extend to a representation and a cocycle over the whole
    /// (finite) group. For `p = 1` the bound is checked against the exact
    /// operator norms (largest absolute column sum).
    pub fn new(
        group: GroupHandle,
        generator_data: Vec<(Matrix<T>, Vec<T>)>,
        p: u32,
        bound: T,
    ) -> Result<Self, ActionError> {
        let bad = |detail: String| ActionError::BadMatrix { detail };
        let gens = group.generators().to_vec();
        if generator_data.len() != gens.len() {
            return Err(bad(format!(
                "{} matrices for {} generators",
                generator_data.len(),
                gens.len()
            )));
        }
        let dim = generator_data.first().map_or(0, |(m, _)| m.len());
        if generator_data
            .iter()
            .any(|(m, b)| b.len() != dim || m.len() != dim || m.iter().any(|r| r.len() != dim))
        {
            return Err(bad(format!("all matrices must be {dim}x{dim} with {dim}-vectors")));
        }
        group.order().ok_or_else(|| GroupError::InfiniteGroup {
            group: group.name().to_string(),
        })?;
        let e = group.identity();
        let identity: Matrix<T> = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { T::one() } else { T::zero() }).collect())
            .collect();
        let mut matrices = BTreeMap::from([(e.clone(), identity)]);
        let mut cocycles = BTreeMap::from([(e.clone(), vec![T::zero(); dim])]);
        let mut queue = vec![e];
        let mut head = 0;
        while head < queue.len() {
            let g = queue[head].clone();
            head += 1;
            for (s, (m_s, b_s)) in gens.iter().zip(&generator_data) {
                let gs = group.multiply(&g, s);
                let m = mat_mul(&matrices[&g], m_s);
                let b: Vec<T> = mat_vec(&matrices[&g], b_s)
                    .into_iter()
                    .zip(&cocycles[&g])
                    .map(|(x, y)| x + y.clone())
                    .collect();
                match (matrices.get(&gs), cocycles.get(&gs)) {
                    (Some(m0), Some(b0)) => {
                        if *m0 != m {
                            return Err(bad(format!("matrices violate the group relations at {gs}")));
                        }
                        if *b0 != b {
                            return Err(bad(format!("cocycle data is inconsistent at {gs}")));
                        }
                    }
                    _ => {
                        matrices.insert(gs.clone(), m);
                        cocycles.insert(gs.clone(), b);
                        queue.push(gs);
                    }
                }
            }
        }
        if p == 1 {
            for (g, m) in &matrices {
                let norm = (0..dim)
                    .map(|j| m.iter().fold(T::zero(), |acc, row| acc + row[j].abs()))
                    .fold(T::zero(), T::max_of);
                if norm > bound {
                    return Err(bad(format!(
                        "operator norm {} of {g} exceeds the bound",
                        norm.to_exact_string()
                    )));
                }
            }
        }
        Ok(MatrixAction {
            group,
            dim,
            p,
            bound,
            matrices,
            cocycles,
        })
    }

    /// `Z/2` acting on `ℓ¹` of dimension 2 by `t(x, y) = (2y, x/2)` — a
    /// diagonal scaling composed with the coordinate swap, `C = 2` — with the
    /// cocycle `b(t) = (2, −1)`.
    pub fn swap_scaling() -> Self {
        let group = crate::groups::make_cyclic_group(2).expect("order 2 is valid");
        let m = vec![vec![T::zero(), T::from_int(2)], vec![T::ratio(1, 2), T::zero()]];
        let b = vec![T::from_int(2), T::from_int(-1)];
        Self::new(group, vec![(m, b)], 1, T::from_int(2)).expect("t² acts trivially")
    }

    pub fn group(&self) -> &GroupHandle {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn dense(&self, v: &SparseVector<T>) -> Result<Vec<T>, ActionError> {
        let mut out = vec![T::zero(); self.dim];
        for (i, a) in v.iter() {
            match i {
                Index::Int(k) if *k >= 0 && (*k as usize) < self.dim => out[*k as usize] = a.clone(),
                _ => return Err(ActionError::BadIndex { index: i.to_string() }),
            }
        }
        Ok(out)
    }

    fn sparse(v: Vec<T>) -> SparseVector<T> {
        SparseVector::from_pairs(v.into_iter().enumerate().map(|(k, a)| (Index::Int(k as i64), a)))
    }
}

impl<T: Scalar> AffineAction<T> for MatrixAction<T> {
    fn describe(&self) -> String {
        format!(
            "matrix action of {} on l^{} of dimension {}",
            self.group.name(),
            self.p,
            self.dim
        )
    }

    fn exponent(&self) -> u32 {
        self.p
    }

    fn lipschitz_bound(&self) -> T {
        self.bound.clone()
    }

    fn apply_linear(&self, s: &GroupElement, v: &SparseVector<T>) -> Result<SparseVector<T>, ActionError> {
        let m = self
            .matrices
            .get(s)
            .ok_or_else(|| ActionError::UnknownElement { element: s.to_string() })?;
        Ok(Self::sparse(mat_vec(m, &self.dense(v)?)))
    }

    fn cocycle(&self, s: &GroupElement) -> Result<SparseVector<T>, ActionError> {
        let b = self
            .cocycles
            .get(s)
            .ok_or_else(|| ActionError::UnknownElement { element: s.to_string() })?;
        Ok(Self::sparse(b.clone()))
    }

    fn norm_pow(&self, v: &SparseVector<T>) -> Result<T, ActionError> {
        Ok(v.norm_pow(self.p))
    }
}

/// `max_{s ∈ G} ‖π(s)v‖^p` over the listed elements of a finite group.
pub fn renorm_sup<T: Scalar>(
    action: &dyn AffineAction<T>,
    elements: &[GroupElement],
    v: &SparseVector<T>,
) -> Result<T, ActionError> {
    let mut best = T::zero();
    for s in elements {
        best = best.max_of(action.norm_pow(&action.apply_linear(s, v)?)?);
    }
    Ok(best)
}

/// The same affine action measured in the norm `‖v‖_E = max_s ‖π(s)v‖`,
/// which makes `π` isometric.
pub struct RenormedAction<T> {
    inner: SharedAction<T>,
    elements: Vec<GroupElement>,
}

impl<T: Scalar> RenormedAction<T> {
    pub fn new(inner: SharedAction<T>, group: &GroupHandle) -> Result<Self, ActionError> {
        Ok(RenormedAction {
            inner,
            elements: group.elements()?,
        })
    }
}

impl<T: Scalar> AffineAction<T> for RenormedAction<T> {
    fn describe(&self) -> String {
        format!("renormed {}", self.inner.describe())
    }

    fn exponent(&self) -> u32 {
        self.inner.exponent()
    }

    fn lipschitz_bound(&self) -> T {
        T::one()
    }

    fn apply_linear(&self, s: &GroupElement, v: &SparseVector<T>) -> Result<SparseVector<T>, ActionError> {
        self.inner.apply_linear(s, v)
    }

    fn cocycle(&self, s: &GroupElement) -> Result<SparseVector<T>, ActionError> {
        self.inner.cocycle(s)
    }

    fn norm_pow(&self, v: &SparseVector<T>) -> Result<T, ActionError> {
        renorm_sup(self.inner.as_ref(), &self.elements, v)
    }
}

/// A failed identity with both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch<T> {
    pub elements: Vec<GroupElement>,
    pub lhs: SparseVector<T>,
    pub rhs: SparseVector<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport<T> {
    pub checked: usize,
    pub failures: Vec<Mismatch<T>>,
}

impl<T> IdentityReport<T> {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// `b(st) = π(s)b(t) + b(s)` on every listed pair, plus `b(e) = 0`.
pub fn verify_cocycle<T: Scalar>(
    action: &dyn AffineAction<T>,
    group: &GroupHandle,
    pairs: &[(GroupElement, GroupElement)],
) -> Result<IdentityReport<T>, ActionError> {
    let mut failures = Vec::new();
    let e = group.identity();
    let be = action.cocycle(&e)?;
    if !be.is_zero() {
        failures.push(Mismatch {
            elements: vec![e],
            lhs: be,
            rhs: SparseVector::zero(),
        });
    }
    for (s, t) in pairs {
        let lhs = action.cocycle(&group.multiply(s, t))?;
        let rhs = &action.apply_linear(s, &action.cocycle(t)?)? + &action.cocycle(s)?;
        if lhs != rhs {
            failures.push(Mismatch {
                elements: vec![s.clone(), t.clone()],
                lhs,
                rhs,
            });
        }
    }
    Ok(IdentityReport {
        checked: pairs.len() + 1,
        failures,
    })
}

/// `π(e)v = v` and `π(st)v = π(s)π(t)v` on every listed pair and vector.
pub fn verify_representation<T: Scalar>(
    action: &dyn AffineAction<T>,
    group: &GroupHandle,
    pairs: &[(GroupElement, GroupElement)],
    vectors: &[SparseVector<T>],
) -> Result<IdentityReport<T>, ActionError> {
    let mut failures = Vec::new();
    let mut checked = 0;
    let e = group.identity();
    for v in vectors {
        checked += 1;
        let same = action.apply_linear(&e, v)?;
        if same != *v {
            failures.push(Mismatch {
                elements: vec![e.clone()],
                lhs: same,
                rhs: v.clone(),
            });
        }
        for (s, t) in pairs {
            checked += 1;
            let lhs = action.apply_linear(&group.multiply(s, t), v)?;
            let rhs = action.apply_linear(s, &action.apply_linear(t, v)?)?;
            if lhs != rhs {
                failures.push(Mismatch {
                    elements: vec![s.clone(), t.clone()],
                    lhs,
                    rhs,
                });
            }
        }
    }
    Ok(IdentityReport { checked, failures })
}

/// Largest observed `‖π(s)v‖^p / ‖v‖^p` and whether it stays within `C^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzSample<T> {
    pub checked: usize,
    pub max_ratio_pow: T,
    pub bound_pow: T,
    pub violations: Vec<(GroupElement, SparseVector<T>)>,
}

pub fn sample_operator_norms<T: Scalar>(
    action: &dyn AffineAction<T>,
    elements: &[GroupElement],
    vectors: &[SparseVector<T>],
) -> Result<LipschitzSample<T>, ActionError> {
    let p = action.exponent();
    let bound_pow = action.lipschitz_bound().pow_u32(p);
    let mut max_ratio_pow = T::zero();
    let mut violations = Vec::new();
    let mut checked = 0;
    for v in vectors {
        let base = action.norm_pow(v)?;
        if !base.strictly_positive() {
            continue;
        }
        for s in elements {
            checked += 1;
            let moved = action.norm_pow(&action.apply_linear(s, v)?)?;
            if moved > bound_pow.clone() * base.clone() {
                violations.push((s.clone(), v.clone()));
            }
            max_ratio_pow = max_ratio_pow.max_of(moved / base.clone());
        }
    }
    Ok(LipschitzSample {
        checked,
        max_ratio_pow,
        bound_pow,
        violations,
    })
}

/// Random vector with up to `max_support` entries drawn from `pool`.
pub fn random_vector<T: Scalar>(pool: &[Index], max_support: usize, rng: &mut CorpusRng) -> SparseVector<T> {
    if pool.is_empty() {
        return SparseVector::zero();
    }
    let size = rng.gen_range(1..=max_support.clamp(1, pool.len()));
    let picks = rand::seq::index::sample(rng, pool.len(), size);
    let mut v = SparseVector::zero();
    for k in picks.iter() {
        v.add_at(pool[k].clone(), random_rational(rng));
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRow<T> {
    pub length: u32,
    pub count: usize,
    pub min_norm_pow: T,
    pub max_norm_pow: T,
}

/// Orbit norms `‖σ(s)0‖` grouped by word length. This is finite-ball
/// evidence for a quasi-isometric orbit map, not a proof.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitGrowth<T> {
    pub p: u32,
    pub rows: Vec<GrowthRow<T>>,
    /// Least `A ≥ 1` with `‖σ(s)0‖ ≥ |s|/A − A` on the ball, or `None` when a
    /// nonidentity element has a zero orbit norm.
    pub fitted_a: Option<f64>,
    /// Exact check of `‖σ(s)0‖ ≥ |s| − 1`, i.e. `A = 1`.
    pub unit_constant_holds: bool,
}

impl<T> OrbitGrowth<T> {
    pub fn proper_evidence(&self) -> bool {
        self.fitted_a.is_some()
    }
}

pub fn orbit_growth_report<T: Scalar>(
    action: &dyn AffineAction<T>,
    group: &GroupHandle,
    radius: u32,
    cap: usize,
) -> Result<OrbitGrowth<T>, ActionError> {
    let p = action.exponent();
    let mut rows: Vec<GrowthRow<T>> = Vec::new();
    let mut fitted: Option<f64> = Some(1.0);
    let mut unit = true;
    for (s, len) in group.ball(radius, cap)? {
        let n = action.norm_pow(&action.cocycle(&s)?)?;
        match rows.last_mut() {
            Some(row) if row.length == len => {
                row.count += 1;
                if n < row.min_norm_pow {
                    row.min_norm_pow = n.clone();
                }
                if n > row.max_norm_pow {
                    row.max_norm_pow = n.clone();
                }
            }
            _ => rows.push(GrowthRow {
                length: len,
                count: 1,
                min_norm_pow: n.clone(),
                max_norm_pow: n.clone(),
            }),
        }
        if len > 0 {
            if n.negligible() {
                fitted = None;
            }
            let floor = T::from_int(len as i64 - 1).pow_u32(p);
            if n < floor {
                unit = false;
            }
            if let Some(a) = fitted.as_mut() {
                let norm = n.to_f64_lossy().powf(1.0 / p as f64);
                let l = len as f64;
                let need = (-norm + (norm * norm + 4.0 * l).sqrt()) / 2.0;
                *a = a.max(need);
            }
        }
    }
    Ok(OrbitGrowth {
        p,
        rows,
        fitted_a: fitted,
        unit_constant_holds: unit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::seeded_rng;
    use crate::groups::{
        bass_serre_ball, dihedral_rotation_section, infinite_dihedral, make_cyclic_group, make_free_group,
        make_free_product, DEFAULT_BALL_CAP,
    };
    use crate::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_int(n)
    }

    fn all_pairs(g: &GroupHandle, radius: u32) -> Vec<(GroupElement, GroupElement)> {
        let ball: Vec<_> = g
            .ball(radius, DEFAULT_BALL_CAP)
            .unwrap()
            .into_iter()
            .map(|(x, _)| x)
            .collect();
        ball.iter()
            .flat_map(|s| ball.iter().map(move |t| (s.clone(), t.clone())))
            .collect()
    }

    #[test]
    fn sparse_vector_basics() {
        let mut v = SparseVector::<Rational>::from_pairs([(Index::Int(1), q(2)), (Index::Int(-1), q(-3))]);
        assert_eq!(v.norm_pow(1), q(5));
        assert_eq!(v.norm_pow(2), q(13));
        v.add_at(Index::Int(1), q(-2));
        assert_eq!(v.len(), 1);
        assert!((&v - &v).is_zero());
        let tagged = v.tag(3);
        assert_eq!(tagged.by_tag().unwrap()[&3], v);
        assert!(v.fibers().is_err());
    }

    #[test]
    fn cyclic_rotation_norms() {
        let action = FreeSpaceAction::cyclic_rotation(6).unwrap();
        let z6 = action.group().clone();
        for s in z6.elements().unwrap() {
            let b: SparseVector<Rational> = action.cocycle(&s).unwrap();
            let so = action.move_vertex(&s, 0).unwrap();
            assert_eq!(action.norm_pow(&b).unwrap(), q(action.graph().dist(so, 0) as i64));
        }
        let two = GroupElement::Finite(2);
        assert_eq!(
            AffineAction::<Rational>::norm_pow(&action, &action.cocycle(&two).unwrap()).unwrap(),
            q(2)
        );
        assert!(verify_cocycle::<Rational>(&action, &z6, &all_pairs(&z6, 3))
            .unwrap()
            .passed());
    }

    #[test]
    fn bad_permutations() {
        let z6 = make_cyclic_group(6).unwrap();
        let c6 = crate::corpus::cycle(6);
        let swap = vec![1, 0, 2, 3, 4, 5];
        let err = FreeSpaceAction::from_generator_permutations(z6.clone(), c6.clone(), &[swap.clone(), swap]);
        assert!(matches!(err, Err(ActionError::NotAutomorphism { .. })));
        // both generators rotate forward, so 1 + 5 = 0 acts as a rotation by 2
        let forward: Vec<usize> = (0..6).map(|x| (x + 1) % 6).collect();
        let err = FreeSpaceAction::from_generator_permutations(z6.clone(), c6.clone(), &[forward.clone(), forward]);
        assert!(matches!(err, Err(ActionError::NotAutomorphism { .. })));
        // a reflection for both generators factors through Z/6 → Z/2 and is fine
        let reflect: Vec<usize> = (0..6).map(|x| (6 - x) % 6).collect();
        assert!(FreeSpaceAction::from_generator_permutations(z6, c6, &[reflect.clone(), reflect]).is_ok());
    }

    #[test]
    fn cayley_action_and_escape() {
        let f2 = make_free_group(2).unwrap();
        let action = FreeSpaceAction::on_cayley_ball(f2.clone(), 3, DEFAULT_BALL_CAP).unwrap();
        for (s, len) in f2.ball(2, 100).unwrap() {
            let b: SparseVector<Rational> = action.cocycle(&s).unwrap();
            assert_eq!(action.norm_pow(&b).unwrap(), q(len as i64));
        }
        let far = GroupElement::Free(vec![1, 1, 1, 1]);
        assert!(matches!(
            AffineAction::<Rational>::cocycle(&action, &far),
            Err(ActionError::OrbitEscapesBall { .. })
        ));
    }

    #[test]
    fn translation_cocycle() {
        let z = make_free_group(1).unwrap();
        let action = TranslationAction::<Rational>::integers(q(1), 1);
        assert!(verify_cocycle(&action, &z, &all_pairs(&z, 4)).unwrap().passed());
        let minus3 = GroupElement::Free(vec![-1, -1, -1]);
        assert_eq!(action.norm_pow(&action.cocycle(&minus3).unwrap()).unwrap(), q(3));
    }

    #[test]
    fn induced_dihedral() {
        let d = infinite_dihedral();
        let section = dihedral_rotation_section(&d).unwrap();
        let inner: SharedAction<Rational> = Arc::new(TranslationAction::new(dihedral_rotation_hom(), q(2), 1, "<ab>"));
        let induced = InducedAction::new(section, inner);
        assert!(verify_cocycle(&induced, &d, &all_pairs(&d, 4)).unwrap().passed());
        let b_tilde = induced.lower_bound_constant(&q(0));
        assert_eq!(b_tilde, q(1));
        for (s, len) in d.ball(8, 1000).unwrap() {
            let n = induced.norm_pow(&induced.cocycle(&s).unwrap()).unwrap();
            assert!(n >= q(len as i64) - b_tilde.clone(), "{s}: {n}");
        }
    }

    #[test]
    fn index_one_induction_is_the_same_action() {
        let z = make_free_group(1).unwrap();
        let section = CosetSection::new(z.clone(), Arc::new(|_| true), 1, 0, 10).unwrap();
        let inner: SharedAction<Rational> = Arc::new(TranslationAction::integers(q(1), 1));
        let induced = InducedAction::new(section, inner.clone());
        for (s, _) in z.ball(4, 100).unwrap() {
            let lifted = inner
                .cocycle(&s)
                .unwrap()
                .reindex(|i| Index::pair(Index::Coset(0), i.clone()));
            assert_eq!(induced.cocycle(&s).unwrap(), lifted);
        }
        assert_eq!(induced.lower_bound_constant(&q(0)), q(0));
    }

    fn regular_free_product(p: u32) -> (GroupHandle, FreeProductAction<Rational>) {
        let (a, b) = (make_cyclic_group(2).unwrap(), make_cyclic_group(3).unwrap());
        let g = make_free_product(a.clone(), b.clone());
        let left: SharedAction<Rational> = Arc::new(RegularAction::new(a, p));
        let right: SharedAction<Rational> = Arc::new(RegularAction::new(b, p));
        let action = FreeProductAction::new(g.clone(), left, right, p, None).unwrap();
        (g, action)
    }

    #[test]
    fn free_product_norm_identity() {
        for p in [1, 2] {
            let (g, action) = regular_free_product(p);
            for (w, _) in g.ball(6, 10_000).unwrap() {
                let n = action.norm_pow(&action.cocycle(&w).unwrap()).unwrap();
                let len = w.letters().len() as i64;
                assert_eq!(n, action.letter_norms(&w).unwrap() + q(2 * len));
                assert_eq!(n, q(4 * len));
            }
            assert!(verify_cocycle(&action, &g, &all_pairs(&g, 3)).unwrap().passed());
        }
    }

    #[test]
    fn free_product_word_errors() {
        let (_, action) = regular_free_product(1);
        let a = GroupElement::Finite(1);
        let at = [(0, a.clone()), (1, GroupElement::Finite(1))];
        assert_eq!(action.norm_pow(&action.cocycle_of_word(&at).unwrap()).unwrap(), q(8));
        assert_eq!(
            action.cocycle_of_word(&[(0, a.clone()), (0, a.clone())]),
            Err(ActionError::NotReducedWord { position: 0 })
        );
        assert_eq!(
            action.cocycle_of_word(&[(1, GroupElement::Finite(0))]),
            Err(ActionError::NotReducedWord { position: 0 })
        );
        assert!(action.cocycle_of_word(&[]).unwrap().is_zero());
    }

    #[test]
    fn free_product_tree_guard() {
        let (a, b) = (make_cyclic_group(2).unwrap(), make_cyclic_group(2).unwrap());
        let g = make_free_product(a.clone(), b.clone());
        let tree = bass_serre_ball(&g, 3, 100).unwrap();
        let left: SharedAction<Rational> = Arc::new(RegularAction::new(a, 1));
        let right: SharedAction<Rational> = Arc::new(RegularAction::new(b, 1));
        let action = FreeProductAction::new(g.clone(), left, right, 1, Some(tree)).unwrap();
        let short = g.ball(2, 100).unwrap().pop().unwrap().0;
        assert!(action.cocycle(&short).is_ok());
        let long = g.ball(5, 100).unwrap().pop().unwrap().0;
        assert!(matches!(
            action.cocycle(&long),
            Err(ActionError::OrbitEscapesBall { .. })
        ));
    }

    #[test]
    fn free_product_rejects_non_isometric() {
        let z2 = make_cyclic_group(2).unwrap();
        let g = make_free_product(z2.clone(), z2.clone());
        let swap: SharedAction<Rational> = Arc::new(MatrixAction::swap_scaling());
        let regular: SharedAction<Rational> = Arc::new(RegularAction::new(z2.clone(), 1));
        let err = FreeProductAction::new(g.clone(), swap.clone(), regular.clone(), 1, None);
        assert!(matches!(err, Err(ActionError::NotIsometric { side: "left", .. })));
        let renormed: SharedAction<Rational> = Arc::new(RenormedAction::new(swap, &z2).unwrap());
        assert!(FreeProductAction::new(g, renormed, regular, 1, None).is_ok());
    }

    #[test]
    fn direct_sums() {
        let z = make_free_group(1).unwrap();
        let one: SharedAction<Rational> = Arc::new(TranslationAction::integers(q(1), 1));
        let sum = DirectSumAction::new(vec![one.clone(), one.clone()]).unwrap();
        for (s, len) in z.ball(5, 100).unwrap() {
            assert_eq!(sum.norm_pow(&sum.cocycle(&s).unwrap()).unwrap(), q(2 * len as i64));
        }
        assert!(verify_cocycle(&sum, &z, &all_pairs(&z, 3)).unwrap().passed());
        let squared: SharedAction<Rational> = Arc::new(TranslationAction::integers(q(1), 2));
        assert!(matches!(
            DirectSumAction::new(vec![one, squared]),
            Err(ActionError::ExponentMismatch { .. })
        ));
    }

    #[test]
    fn swap_scaling_renorming() {
        let action = MatrixAction::<Rational>::swap_scaling();
        let z2 = action.group().clone();
        let elements = z2.elements().unwrap();
        let t = GroupElement::Finite(1);
        let v = SparseVector::from_pairs([(Index::Int(0), q(1)), (Index::Int(1), q(1))]);
        assert_eq!(
            action.norm_pow(&action.apply_linear(&t, &v).unwrap()).unwrap(),
            Rational::ratio(5, 2)
        );
        assert_eq!(renorm_sup(&action, &elements, &v).unwrap(), Rational::ratio(5, 2));
        assert_eq!(renorm_sup(&action, &elements, &SparseVector::zero()).unwrap(), q(0));
        assert!(verify_cocycle(&action, &z2, &all_pairs(&z2, 1)).unwrap().passed());

        let shared: SharedAction<Rational> = Arc::new(action);
        let renormed = RenormedAction::new(shared, &z2).unwrap();
        let sample = sample_operator_norms(&renormed, &elements, &[v]).unwrap();
        assert_eq!(sample.max_ratio_pow, q(1));
    }

    #[test]
    fn matrix_validation() {
        let z2 = make_cyclic_group(2).unwrap();
        let m = vec![vec![q(0), q(3)], vec![Rational::ratio(1, 2), q(0)]];
        let err = MatrixAction::new(z2.clone(), vec![(m, vec![q(0), q(0)])], 1, q(3));
        assert!(matches!(err, Err(ActionError::BadMatrix { .. })));
        let swap = vec![vec![q(0), q(1)], vec![q(1), q(0)]];
        let err = MatrixAction::new(z2, vec![(swap, vec![q(1), q(0)])], 1, q(1));
        assert!(matches!(err, Err(ActionError::BadMatrix { .. })));
    }

    #[test]
    fn orbit_growth() {
        let f2 = make_free_group(2).unwrap();
        let action = FreeSpaceAction::on_cayley_ball(f2.clone(), 3, DEFAULT_BALL_CAP).unwrap();
        let report = orbit_growth_report::<Rational>(&action, &f2, 3, DEFAULT_BALL_CAP).unwrap();
        for row in &report.rows {
            assert_eq!(row.min_norm_pow, q(row.length as i64));
            assert_eq!(row.max_norm_pow, q(row.length as i64));
        }
        assert_eq!(report.fitted_a, Some(1.0));
        assert!(report.unit_constant_holds);

        let trivial = orbit_growth_report::<Rational>(&TrivialAction { p: 1 }, &f2, 2, 100).unwrap();
        assert!(!trivial.proper_evidence());
        assert!(!trivial.unit_constant_holds);
    }

    #[test]
    fn random_vectors_use_pool() {
        let pool: Vec<Index> = (0..5).map(Index::Int).collect();
        let mut rng = seeded_rng(3);
        for _ in 0..20 {
            let v: SparseVector<Rational> = random_vector(&pool, 3, &mut rng);
            assert!(!v.is_zero() && v.len() <= 3);
            assert!(v.iter().all(|(i, _)| pool.contains(i)));
        }
    }
}
