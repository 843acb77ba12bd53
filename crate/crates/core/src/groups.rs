//! Groups as normal-form machines: finite groups given by tables, free groups
//! on reduced words, free products on alternating reduced sequences, and
//! direct products. Also Cayley-graph balls, coset sections with the
//! `α`-cocycle, and balls in the Bass–Serre tree of a free product.
//!
//! Balls are truncations. Metric quantities read off a ball are exact only
//! for pairs whose geodesics stay inside it; callers assert on the inner half.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{build_pointed_graph, PointedGraph};

pub const DEFAULT_BALL_CAP: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("not a group: {axiom}")]
    NotAGroup { axiom: String },
    #[error("generators {detail}")]
    BadGenerators { detail: String },
    #[error("ball exceeds the size cap of {cap} elements")]
    BallTooLarge { cap: usize },
    #[error("{element} is not in the subgroup")]
    NotInSubgroup { element: String },
    #[error("coset section found {found} of {index} cosets within radius {radius}")]
    IncompleteSection { found: usize, index: usize, radius: usize },
    #[error("operation needs a {expected}")]
    WrongKind { expected: &'static str },
    #[error("group {group} is infinite")]
    InfiniteGroup { group: String },
    #[error("invalid group spec {spec:?}: {reason}")]
    InvalidSpec { spec: String, reason: String },
}

/// Normal-form element. Equality is structural because every constructor
/// and every operation keeps the normal form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupElement {
    /// Row index into a multiplication table.
    Finite(usize),
    /// Reduced word; letter `k` is the generator `a_k`, `-k` its inverse.
    Free(Vec<i32>),
    /// Reduced alternating word of a free product; side 0 is the left factor.
    Alternating(Vec<(u8, GroupElement)>),
    Pair(Box<GroupElement>, Box<GroupElement>),
}

impl GroupElement {
    /// Letters of a free-product element (empty for anything else).
    pub fn letters(&self) -> &[(u8, GroupElement)] {
        match self {
            GroupElement::Alternating(w) => w,
            _ => &[],
        }
    }
}

fn free_letter(k: i32) -> String {
    let idx = k.unsigned_abs() as usize - 1;
    if idx < 26 {
        let c = (b'a' + idx as u8) as char;
        if k > 0 {
            c.to_string()
        } else {
            c.to_ascii_uppercase().to_string()
        }
    } else if k > 0 {
        format!("x{}", idx + 1)
    } else {
        format!("X{}", idx + 1)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Finite(i) => write!(f, "{i}"),
            GroupElement::Free(w) if w.is_empty() => write!(f, "e"),
            GroupElement::Free(w) => {
                let s: Vec<String> = w.iter().map(|&k| free_letter(k)).collect();
                write!(f, "{}", s.join(""))
            }
            GroupElement::Alternating(w) if w.is_empty() => write!(f, "e"),
            GroupElement::Alternating(w) => {
                let parts: Vec<String> = w
                    .iter()
                    .map(|(side, x)| {
                        let tag = if *side == 0 { 'L' } else { 'R' };
                        let inner = x.to_string();
                        if inner.contains(['.', ',']) {
                            format!("{tag}({inner})")
                        } else {
                            format!("{tag}{inner}")
                        }
                    })
                    .collect();
                write!(f, "{}", parts.join("."))
            }
            GroupElement::Pair(a, b) => write!(f, "({a},{b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Kind {
    Finite {
        table: Vec<Vec<usize>>,
        identity: usize,
        inverse: Vec<usize>,
        lengths: Vec<u32>,
    },
    Free {
        rank: usize,
    },
    FreeProduct(Box<GroupHandle>, Box<GroupHandle>),
    Direct(Box<GroupHandle>, Box<GroupHandle>),
}

/// A concrete group with a symmetric generating set `S` and the word length
/// `|·|_S`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupHandle {
    kind: Kind,
    generators: Vec<GroupElement>,
    name: String,
}

fn validate_table(table: &[Vec<usize>]) -> Result<(usize, Vec<usize>), GroupError> {
    let n = table.len();
    let fail = |axiom: String| Err(GroupError::NotAGroup { axiom });
    if n == 0 {
        return fail("empty table".into());
    }
    for (i, row) in table.iter().enumerate() {
        if row.len() != n {
            return fail(format!("closure: row {i} has {} entries, expected {n}", row.len()));
        }
        if let Some(&bad) = row.iter().find(|&&x| x >= n) {
            return fail(format!("closure: entry {bad} in row {i} is out of range"));
        }
    }
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if table[table[a][b]][c] != table[a][table[b][c]] {
                    return fail(format!("associativity fails for ({a}, {b}, {c})"));
                }
            }
        }
    }
    let Some(identity) = (0..n).find(|&e| (0..n).all(|x| table[e][x] == x && table[x][e] == x)) else {
        return fail("identity: no two-sided identity".into());
    };
    let mut inverse = vec![0; n];
    for (x, inv) in inverse.iter_mut().enumerate() {
        match (0..n).find(|&y| table[x][y] == identity && table[y][x] == identity) {
            Some(y) => *inv = y,
            None => return fail(format!("inverses: element {x} has no inverse")),
        }
    }
    Ok((identity, inverse))
}

/// Finite group from a multiplication table (`table[a][b] = a·b`), generated
/// by all non-identity elements.
pub fn make_finite_group(table: Vec<Vec<usize>>) -> Result<GroupHandle, GroupError> {
    let (identity, _) = validate_table(&table)?;
    let gens: Vec<usize> = (0..table.len()).filter(|&x| x != identity).collect();
    let name = format!("finite:{}", table.len());
    make_finite_group_with_generators(table, &gens, name)
}

/// Finite group with an explicit generating set. The set must be symmetric,
/// avoid the identity, and generate.
pub fn make_finite_group_with_generators(
    table: Vec<Vec<usize>>,
    generators: &[usize],
    name: String,
) -> Result<GroupHandle, GroupError> {
    let (identity, inverse) = validate_table(&table)?;
    let n = table.len();
    let gens: BTreeSet<usize> = generators.iter().copied().collect();
    if gens.iter().any(|&g| g >= n || g == identity) {
        return Err(GroupError::BadGenerators {
            detail: "must be non-identity elements of the group".into(),
        });
    }
    if gens.iter().any(|&g| !gens.contains(&inverse[g])) {
        return Err(GroupError::BadGenerators {
            detail: "are not closed under inversion".into(),
        });
    }
    let mut lengths = vec![u32::MAX; n];
    lengths[identity] = 0;
    let mut queue = VecDeque::from([identity]);
    while let Some(x) = queue.pop_front() {
        for &g in generators {
            let y = table[x][g];
            if lengths[y] == u32::MAX {
                lengths[y] = lengths[x] + 1;
                queue.push_back(y);
            }
        }
    }
    if lengths.contains(&u32::MAX) {
        return Err(GroupError::BadGenerators {
            detail: "do not generate the group".into(),
        });
    }
    let mut ordered = Vec::new();
    for &g in generators {
        if !ordered.contains(&GroupElement::Finite(g)) {
            ordered.push(GroupElement::Finite(g));
        }
    }
    Ok(GroupHandle {
        kind: Kind::Finite {
            table,
            identity,
            inverse,
            lengths,
        },
        generators: ordered,
        name,
    })
}

/// `Z/n` with `S = {1, n - 1}`.
pub fn make_cyclic_group(n: usize) -> Result<GroupHandle, GroupError> {
    if n < 2 {
        return Err(GroupError::InvalidSpec {
            spec: format!("cyclic:{n}"),
            reason: "order must be at least 2".into(),
        });
    }
    let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
    make_finite_group_with_generators(table, &[1, n - 1], format!("cyclic:{n}"))
}

/// Free group `F_rank` with `S = {a_i^{±1}}`.
pub fn make_free_group(rank: usize) -> Result<GroupHandle, GroupError> {
    if rank == 0 {
        return Err(GroupError::InvalidSpec {
            spec: "free:0".into(),
            reason: "rank must be at least 1".into(),
        });
    }
    let generators = (1..=rank as i32)
        .flat_map(|k| [GroupElement::Free(vec![k]), GroupElement::Free(vec![-k])])
        .collect();
    Ok(GroupHandle {
        kind: Kind::Free { rank },
        generators,
        name: format!("free:{rank}"),
    })
}

/// `A ∗ B` generated by the union of the factor generating sets.
pub fn make_free_product(a: GroupHandle, b: GroupHandle) -> GroupHandle {
    let mut generators: Vec<GroupElement> = a
        .generators
        .iter()
        .map(|g| GroupElement::Alternating(vec![(0, g.clone())]))
        .collect();
    generators.extend(
        b.generators
            .iter()
            .map(|g| GroupElement::Alternating(vec![(1, g.clone())])),
    );
    let name = format!("product({},{})", a.name, b.name);
    GroupHandle {
        kind: Kind::FreeProduct(Box::new(a), Box::new(b)),
        generators,
        name,
    }
}

/// `A × B` generated by `{(s, e)} ∪ {(e, t)}`.
pub fn make_direct_product(a: GroupHandle, b: GroupHandle) -> GroupHandle {
    let (ea, eb) = (a.identity(), b.identity());
    let mut generators: Vec<GroupElement> = a
        .generators
        .iter()
        .map(|g| GroupElement::Pair(Box::new(g.clone()), Box::new(eb.clone())))
        .collect();
    generators.extend(
        b.generators
            .iter()
            .map(|g| GroupElement::Pair(Box::new(ea.clone()), Box::new(g.clone()))),
    );
    let name = format!("direct({},{})", a.name, b.name);
    GroupHandle {
        kind: Kind::Direct(Box::new(a), Box::new(b)),
        generators,
        name,
    }
}

/// `D∞ = Z/2 ∗ Z/2` with generators `a = L1`, `b = R1`.
pub fn infinite_dihedral() -> GroupHandle {
    make_free_product(make_cyclic_group(2).unwrap(), make_cyclic_group(2).unwrap())
}

fn split_top_level(s: &str) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => return Some((&s[..i], &s[i + 1..])),
            _ => {}
        }
        if depth < 0 {
            return None;
        }
    }
    None
}

/// Parses `free:k`, `cyclic:n`, `product(A,B)` (free product) and
/// `direct(A,B)`.
pub fn parse_group_spec(spec: &str) -> Result<GroupHandle, GroupError> {
    let s = spec.trim();
    let bad = |reason: &str| GroupError::InvalidSpec {
        spec: spec.to_string(),
        reason: reason.to_string(),
    };
    let number = |rest: &str| {
        rest.trim()
            .parse::<usize>()
            .map_err(|_| bad("expected a nonnegative integer"))
    };
    if let Some(rest) = s.strip_prefix("free:") {
        return make_free_group(number(rest)?);
    }
    if let Some(rest) = s.strip_prefix("cyclic:") {
        return make_cyclic_group(number(rest)?);
    }
    for (prefix, free) in [("product(", true), ("direct(", false)] {
        if let Some(rest) = s.strip_prefix(prefix) {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| bad("missing closing parenthesis"))?;
            let (left, right) = split_top_level(inner).ok_or_else(|| bad("expected two comma-separated factors"))?;
            let (a, b) = (parse_group_spec(left)?, parse_group_spec(right)?);
            return Ok(if free {
                make_free_product(a, b)
            } else {
                make_direct_product(a, b)
            });
        }
    }
    Err(bad("unknown group family"))
}

impl GroupHandle {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn identity(&self) -> GroupElement {
        match &self.kind {
            Kind::Finite { identity, .. } => GroupElement::Finite(*identity),
            Kind::Free { .. } => GroupElement::Free(Vec::new()),
            Kind::FreeProduct(..) => GroupElement::Alternating(Vec::new()),
            Kind::Direct(a, b) => GroupElement::Pair(Box::new(a.identity()), Box::new(b.identity())),
        }
    }

    pub fn is_identity(&self, g: &GroupElement) -> bool {
        *g == self.identity()
    }

    /// Left and right factors of a free product.
    pub fn free_factors(&self) -> Option<(&GroupHandle, &GroupHandle)> {
        match &self.kind {
            Kind::FreeProduct(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn direct_factors(&self) -> Option<(&GroupHandle, &GroupHandle)> {
        match &self.kind {
            Kind::Direct(a, b) => Some((a, b)),
            _ => None,
        }
    }

    /// Whether `g` is a well-formed normal form for this group.
    pub fn contains(&self, g: &GroupElement) -> bool {
        match (&self.kind, g) {
            (Kind::Finite { table, .. }, GroupElement::Finite(i)) => *i < table.len(),
            (Kind::Free { rank }, GroupElement::Free(w)) => {
                w.iter().all(|&k| k != 0 && k.unsigned_abs() as usize <= *rank) && w.windows(2).all(|p| p[0] != -p[1])
            }
            (Kind::FreeProduct(a, b), GroupElement::Alternating(w)) => {
                w.iter().all(|(side, x)| {
                    let f = if *side == 0 { a } else { b };
                    *side <= 1 && f.contains(x) && !f.is_identity(x)
                }) && w.windows(2).all(|p| p[0].0 != p[1].0)
            }
            (Kind::Direct(a, b), GroupElement::Pair(x, y)) => a.contains(x) && b.contains(y),
            _ => false,
        }
    }

    pub fn multiply(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        match (&self.kind, g, h) {
            (Kind::Finite { table, .. }, GroupElement::Finite(a), GroupElement::Finite(b)) => {
                GroupElement::Finite(table[*a][*b])
            }
            (Kind::Free { .. }, GroupElement::Free(a), GroupElement::Free(b)) => {
                let mut out = a.clone();
                for &k in b {
                    if out.last() == Some(&-k) {
                        out.pop();
                    } else {
                        out.push(k);
                    }
                }
                GroupElement::Free(out)
            }
            (Kind::FreeProduct(..), GroupElement::Alternating(a), GroupElement::Alternating(b)) => {
                let mut out = a.clone();
                for (side, x) in b {
                    self.push_letter(&mut out, *side, x);
                }
                GroupElement::Alternating(out)
            }
            (Kind::Direct(fa, fb), GroupElement::Pair(a1, b1), GroupElement::Pair(a2, b2)) => {
                GroupElement::Pair(Box::new(fa.multiply(a1, a2)), Box::new(fb.multiply(b1, b2)))
            }
            _ => panic!("elements {g} and {h} do not belong to {}", self.name),
        }
    }

    fn push_letter(&self, word: &mut Vec<(u8, GroupElement)>, side: u8, x: &GroupElement) {
        let (a, b) = self.free_factors().expect("free product");
        let factor = if side == 0 { a } else { b };
        match word.last() {
            Some((last_side, y)) if *last_side == side => {
                let merged = factor.multiply(y, x);
                word.pop();
                if !factor.is_identity(&merged) {
                    word.push((side, merged));
                }
            }
            _ => {
                if !factor.is_identity(x) {
                    word.push((side, x.clone()));
                }
            }
        }
    }

    /// Builds a free-product element from a letter sequence, reducing as it
    /// goes. Letters may be adjacent on the same side or trivial.
    pub fn from_letters(&self, letters: &[(u8, GroupElement)]) -> GroupElement {
        let mut out = Vec::new();
        for (side, x) in letters {
            self.push_letter(&mut out, *side, x);
        }
        GroupElement::Alternating(out)
    }

    pub fn invert(&self, g: &GroupElement) -> GroupElement {
        match (&self.kind, g) {
            (Kind::Finite { inverse, .. }, GroupElement::Finite(a)) => GroupElement::Finite(inverse[*a]),
            (Kind::Free { .. }, GroupElement::Free(w)) => GroupElement::Free(w.iter().rev().map(|k| -k).collect()),
            (Kind::FreeProduct(a, b), GroupElement::Alternating(w)) => GroupElement::Alternating(
                w.iter()
                    .rev()
                    .map(|(side, x)| (*side, if *side == 0 { a.invert(x) } else { b.invert(x) }))
                    .collect(),
            ),
            (Kind::Direct(fa, fb), GroupElement::Pair(x, y)) => {
                GroupElement::Pair(Box::new(fa.invert(x)), Box::new(fb.invert(y)))
            }
            _ => panic!("element {g} does not belong to {}", self.name),
        }
    }

    /// Word length with respect to the handle's generating set.
    pub fn word_length(&self, g: &GroupElement) -> u32 {
        match (&self.kind, g) {
            (Kind::Finite { lengths, .. }, GroupElement::Finite(a)) => lengths[*a],
            (Kind::Free { .. }, GroupElement::Free(w)) => w.len() as u32,
            (Kind::FreeProduct(a, b), GroupElement::Alternating(w)) => w
                .iter()
                .map(|(side, x)| if *side == 0 { a.word_length(x) } else { b.word_length(x) })
                .sum(),
            (Kind::Direct(fa, fb), GroupElement::Pair(x, y)) => fa.word_length(x) + fb.word_length(y),
            _ => panic!("element {g} does not belong to {}", self.name),
        }
    }

    pub fn order(&self) -> Option<usize> {
        match &self.kind {
            Kind::Finite { table, .. } => Some(table.len()),
            Kind::Free { .. } => None,
            Kind::FreeProduct(a, b) => match (a.order(), b.order()) {
                (Some(1), other) | (other, Some(1)) => other,
                _ => None,
            },
            Kind::Direct(a, b) => Some(a.order()? * b.order()?),
        }
    }

    /// Elements of word length at most `radius` in shortlex order (breadth
    /// first, generators tried in handle order), each with its length.
    pub fn ball(&self, radius: u32, cap: usize) -> Result<Vec<(GroupElement, u32)>, GroupError> {
        let e = self.identity();
        let mut seen = BTreeSet::from([e.clone()]);
        let mut out = vec![(e, 0)];
        let mut head = 0;
        while head < out.len() {
            let (g, len) = out[head].clone();
            head += 1;
            if len == radius {
                continue;
            }
            for s in &self.generators {
                let h = self.multiply(&g, s);
                if seen.insert(h.clone()) {
                    if out.len() == cap {
                        return Err(GroupError::BallTooLarge { cap });
                    }
                    out.push((h, len + 1));
                }
            }
        }
        Ok(out)
    }

    /// All elements of a finite group in shortlex order.
    pub fn elements(&self) -> Result<Vec<GroupElement>, GroupError> {
        let n = self.order().ok_or_else(|| GroupError::InfiniteGroup {
            group: self.name.clone(),
        })?;
        let ball = self.ball(n as u32, n.max(1))?;
        Ok(ball.into_iter().map(|(g, _)| g).collect())
    }
}

/// Ball in the Cayley graph `Cay(G, S)` around the identity (vertex 0).
#[derive(Debug, Clone)]
pub struct CayleyBall {
    pub graph: PointedGraph,
    pub elements: Vec<GroupElement>,
    pub lengths: Vec<u32>,
    index: BTreeMap<GroupElement, usize>,
}

impl CayleyBall {
    pub fn vertex_of(&self, g: &GroupElement) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn element(&self, v: usize) -> &GroupElement {
        &self.elements[v]
    }
}

/// Edges join `u` and `v` when `u⁻¹v ∈ S`. Distances inside the ball agree
/// with word length from the identity; between other pairs they can be too
/// large when geodesics leave the ball.
pub fn cayley_ball(g: &GroupHandle, radius: u32, cap: usize) -> Result<CayleyBall, GroupError> {
    let ball = g.ball(radius, cap)?;
    let (elements, lengths): (Vec<_>, Vec<_>) = ball.into_iter().unzip();
    let index: BTreeMap<GroupElement, usize> = elements.iter().cloned().enumerate().map(|(i, x)| (x, i)).collect();
    let mut edges = BTreeSet::new();
    for (u, x) in elements.iter().enumerate() {
        for s in g.generators() {
            if let Some(&v) = index.get(&g.multiply(x, s)) {
                edges.insert((u.min(v), u.max(v)));
            }
        }
    }
    let edges: Vec<_> = edges.into_iter().collect();
    let graph = build_pointed_graph(elements.len(), &edges, 0).expect("balls are connected");
    Ok(CayleyBall {
        graph,
        elements,
        lengths,
        index,
    })
}

pub type Membership = Arc<dyn Fn(&GroupElement) -> bool + Send + Sync>;

/// Section `ω: G/H → G` of a finite-index subgroup, with `ω(H) = e`.
/// Cosets are left cosets `gH`, indexed `0..index` with `0` for `H`;
/// `G = ⊔_{ω ∈ Ω} ωH`.
#[derive(Clone)]
pub struct CosetSection {
    group: GroupHandle,
    membership: Membership,
    representatives: Vec<GroupElement>,
}

impl fmt::Debug for CosetSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CosetSection")
            .field("group", &self.group.name)
            .field("representatives", &self.representatives)
            .finish()
    }
}

impl CosetSection {
    /// Picks shortlex-least representatives by scanning the ball of
    /// `search_radius`.
    pub fn new(
        group: GroupHandle,
        membership: Membership,
        index: usize,
        search_radius: u32,
        cap: usize,
    ) -> Result<Self, GroupError> {
        let e = group.identity();
        if !membership(&e) {
            return Err(GroupError::NotInSubgroup { element: e.to_string() });
        }
        let mut section = CosetSection {
            group,
            membership,
            representatives: Vec::new(),
        };
        for (g, _) in section.group.ball(search_radius, cap)? {
            if section.representatives.len() == index {
                break;
            }
            if section.find_coset(&g).is_none() {
                section.representatives.push(g);
            }
        }
        if section.representatives.len() < index {
            return Err(GroupError::IncompleteSection {
                found: section.representatives.len(),
                index,
                radius: search_radius as usize,
            });
        }
        Ok(section)
    }

    pub fn group(&self) -> &GroupHandle {
        &self.group
    }

    pub fn index(&self) -> usize {
        self.representatives.len()
    }

    pub fn representatives(&self) -> &[GroupElement] {
        &self.representatives
    }

    pub fn representative(&self, coset: usize) -> &GroupElement {
        &self.representatives[coset]
    }

    pub fn in_subgroup(&self, g: &GroupElement) -> bool {
        (self.membership)(g)
    }

    fn find_coset(&self, g: &GroupElement) -> Option<usize> {
        self.representatives
            .iter()
            .position(|w| (self.membership)(&self.group.multiply(&self.group.invert(w), g)))
    }

    pub fn coset_of(&self, g: &GroupElement) -> Result<usize, GroupError> {
        self.find_coset(g)
            .ok_or_else(|| GroupError::NotInSubgroup { element: g.to_string() })
    }

    /// Left action `s · x` on cosets.
    pub fn act(&self, s: &GroupElement, coset: usize) -> Result<usize, GroupError> {
        self.coset_of(&self.group.multiply(s, &self.representatives[coset]))
    }

    /// `α(s, x) = ω(sx)⁻¹ s ω(x)`, checked to lie in `H`.
    pub fn alpha(&self, s: &GroupElement, coset: usize) -> Result<GroupElement, GroupError> {
        let target = self.act(s, coset)?;
        let g = &self.group;
        let a = g.multiply(
            &g.invert(&self.representatives[target]),
            &g.multiply(s, &self.representatives[coset]),
        );
        if self.in_subgroup(&a) {
            Ok(a)
        } else {
            Err(GroupError::NotInSubgroup { element: a.to_string() })
        }
    }

    /// `g = ω(x) · t` with `t ∈ H`.
    pub fn decompose(&self, g: &GroupElement) -> Result<(usize, GroupElement), GroupError> {
        let c = self.coset_of(g)?;
        let t = self.group.multiply(&self.group.invert(&self.representatives[c]), g);
        Ok((c, t))
    }

    /// `D = max{|ω⁻¹| : ω ∈ Ω}`.
    pub fn inverse_representative_bound(&self) -> u32 {
        self.representatives
            .iter()
            .map(|w| self.group.word_length(&self.group.invert(w)))
            .max()
            .unwrap_or(0)
    }
}

/// The index-2 subgroup `⟨ab⟩ ⊂ D∞` of even-length elements, `Ω = {e, a}`.
pub fn dihedral_rotation_section(d: &GroupHandle) -> Result<CosetSection, GroupError> {
    let handle = d.clone();
    let membership: Membership = Arc::new(move |g| handle.word_length(g).is_multiple_of(2));
    CosetSection::new(d.clone(), membership, 2, 1, DEFAULT_BALL_CAP)
}

/// Vertex `rep · Γ` (side 0) or `rep · Λ` (side 1) of the Bass–Serre tree.
/// `rep` never ends with a letter from the vertex's own side.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TreeVertex {
    pub side: u8,
    pub rep: GroupElement,
}

impl fmt::Display for TreeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}·{}", self.rep, if self.side == 0 { "Γ" } else { "Λ" })
    }
}

/// Coset `s Γ` or `s Λ` in canonical form.
pub fn tree_vertex(s: &GroupElement, side: u8) -> TreeVertex {
    let mut letters = s.letters().to_vec();
    if letters.last().is_some_and(|(last, _)| *last == side) {
        letters.pop();
    }
    TreeVertex {
        side,
        rep: GroupElement::Alternating(letters),
    }
}

/// Left multiplication `s · v`.
pub fn translate_vertex(g: &GroupHandle, s: &GroupElement, v: &TreeVertex) -> TreeVertex {
    tree_vertex(&g.multiply(s, &v.rep), v.side)
}

#[derive(Debug, Clone)]
pub struct BassSerreBall {
    pub graph: PointedGraph,
    pub vertices: Vec<TreeVertex>,
    pub labels: Vec<String>,
    index: BTreeMap<TreeVertex, usize>,
}

impl BassSerreBall {
    pub fn vertex_of(&self, v: &TreeVertex) -> Option<usize> {
        self.index.get(v).copied()
    }

    /// Checks that `s` acts as a partial automorphism: vertices whose images
    /// stay in the ball map injectively, and adjacency among them is
    /// preserved in both directions.
    pub fn left_action_preserves_edges(&self, g: &GroupHandle, s: &GroupElement) -> bool {
        let image: Vec<Option<usize>> = self
            .vertices
            .iter()
            .map(|v| self.vertex_of(&translate_vertex(g, s, v)))
            .collect();
        let mapped: Vec<usize> = (0..self.vertices.len()).filter(|&v| image[v].is_some()).collect();
        let targets: BTreeSet<usize> = mapped.iter().map(|&v| image[v].unwrap()).collect();
        if targets.len() != mapped.len() {
            return false;
        }
        let graph = self.graph.graph();
        mapped.iter().all(|&u| {
            mapped
                .iter()
                .all(|&v| graph.has_edge(u, v) == graph.has_edge(image[u].unwrap(), image[v].unwrap()))
        })
    }
}

/// Finite piece of the Bass–Serre tree of `Γ ∗ Λ`: the union of the edges
/// `{sΓ, sΛ}` over all `s` with fewer than `radius` letters, rooted at the
/// vertex `Γ`. A vertex whose representative has `m` letters keeps its full
/// degree `|Γ|` or `|Λ|` when `m + 1 < radius`. Both factors must be finite.
pub fn bass_serre_ball(g: &GroupHandle, radius: u32, cap: usize) -> Result<BassSerreBall, GroupError> {
    let (a, b) = g.free_factors().ok_or(GroupError::WrongKind {
        expected: "free product",
    })?;
    let sides = [a.elements()?, b.elements()?];
    let root = tree_vertex(&g.identity(), 0);
    let mut index = BTreeMap::from([(root.clone(), 0usize)]);
    let mut vertices = vec![root];
    let mut edges = BTreeSet::new();
    let mut head = 0;
    while head < vertices.len() {
        let v = vertices[head].clone();
        let u = head;
        head += 1;
        for x in &sides[v.side as usize] {
            let s = g.multiply(&v.rep, &g.from_letters(&[(v.side, x.clone())]));
            if s.letters().len() as u32 >= radius {
                continue;
            }
            let w = tree_vertex(&s, 1 - v.side);
            let id = match index.get(&w) {
                Some(&id) => id,
                None => {
                    if vertices.len() == cap {
                        return Err(GroupError::BallTooLarge { cap });
                    }
                    index.insert(w.clone(), vertices.len());
                    vertices.push(w);
                    vertices.len() - 1
                }
            };
            edges.insert((u.min(id), u.max(id)));
        }
    }
    let edges: Vec<_> = edges.into_iter().collect();
    assert_eq!(edges.len() + 1, vertices.len(), "coset graph ball must be a tree");
    let graph = build_pointed_graph(vertices.len(), &edges, 0).expect("breadth-first ball is connected");
    let labels = vertices.iter().map(|v| v.to_string()).collect();
    Ok(BassSerreBall {
        graph,
        vertices,
        labels,
        index,
    })
}

impl BassSerreBall {
    /// Vertices that keep all their tree neighbours inside the ball.
    pub fn is_interior(&self, v: usize, radius: u32) -> bool {
        (self.vertices[v].rep.letters().len() as u32) + 1 < radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2() -> GroupHandle {
        make_cyclic_group(2).unwrap()
    }

    #[test]
    fn finite_tables() {
        let g = make_finite_group(vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(g.word_length(&GroupElement::Finite(1)), 1);
        let z3 = make_finite_group(vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]]).unwrap();
        assert_eq!(z3.ball(1, 10).unwrap().len(), 3);
        // 0 is the identity, but 1·1 = 1 and 2·2 = 1 make it non-associative
        let bad = vec![vec![0, 1, 2], vec![1, 1, 0], vec![2, 0, 1]];
        let err = make_finite_group(bad).unwrap_err();
        assert!(
            matches!(err, GroupError::NotAGroup { ref axiom } if axiom.starts_with("associativity")),
            "{err}"
        );
        assert!(matches!(
            make_finite_group(vec![vec![0, 1], vec![1, 1]]),
            Err(GroupError::NotAGroup { .. })
        ));
        assert!(matches!(
            make_finite_group(vec![vec![0, 2], vec![1, 0]]),
            Err(GroupError::NotAGroup { .. })
        ));
    }

    #[test]
    fn free_reduction() {
        let f2 = make_free_group(2).unwrap();
        let a = GroupElement::Free(vec![1]);
        let a_inv = f2.invert(&a);
        assert_eq!(f2.multiply(&a, &a_inv), f2.identity());
        let w = GroupElement::Free(vec![1, 2, -1]);
        assert_eq!(f2.multiply(&w, &f2.invert(&w)), f2.identity());
        assert_eq!(w.to_string(), "abA");
    }

    #[test]
    fn free_product_normal_forms() {
        let d = infinite_dihedral();
        let (a, b) = (d.generators()[0].clone(), d.generators()[1].clone());
        let ab = d.multiply(&a, &b);
        let mut w = d.identity();
        for n in 1..=5u32 {
            w = d.multiply(&w, &ab);
            assert_eq!(d.word_length(&w), 2 * n);
        }
        assert_eq!(d.multiply(&a, &a), d.identity());

        let g = make_free_product(z2(), make_cyclic_group(3).unwrap());
        let letters = [
            (0, GroupElement::Finite(1)),
            (1, GroupElement::Finite(1)),
            (0, GroupElement::Finite(1)),
            (1, GroupElement::Finite(2)),
        ];
        let w = g.from_letters(&letters);
        assert_eq!(w.letters().len(), 4);
        assert_eq!(g.word_length(&w), 4);
        assert!(g.contains(&w));
        // t · t² collapses, leaving a · a = e
        let collapse = g.from_letters(&[
            letters[0].clone(),
            letters[1].clone(),
            letters[3].clone(),
            letters[0].clone(),
        ]);
        assert_eq!(collapse, g.identity());
    }

    #[test]
    fn direct_products() {
        let g = make_direct_product(make_cyclic_group(2).unwrap(), make_free_group(1).unwrap());
        assert_eq!(g.generators().len(), 3);
        assert_eq!(g.ball(2, 100).unwrap().len(), 1 + 3 + 4);
        assert_eq!(g.order(), None);
        let h = make_direct_product(z2(), make_cyclic_group(3).unwrap());
        assert_eq!(h.elements().unwrap().len(), 6);
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(parse_group_spec("free:2").unwrap().name(), "free:2");
        let g = parse_group_spec("product(cyclic:2,direct(cyclic:2,free:1))").unwrap();
        assert_eq!(g.name(), "product(cyclic:2,direct(cyclic:2,free:1))");
        for bad in [
            "free:x",
            "cyclic:1",
            "product(free:1)",
            "torus:3",
            "direct(free:1,free:2",
        ] {
            assert!(
                matches!(parse_group_spec(bad), Err(GroupError::InvalidSpec { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn cayley_balls() {
        let f2 = make_free_group(2).unwrap();
        let ball = cayley_ball(&f2, 2, DEFAULT_BALL_CAP).unwrap();
        assert_eq!(ball.elements.len(), 17);
        assert_eq!(ball.graph.edges().len(), 16);
        for (v, x) in ball.elements.iter().enumerate() {
            assert_eq!(ball.graph.depth(v), f2.word_length(x));
        }

        let z = make_free_group(1).unwrap();
        let line = cayley_ball(&z, 3, 100).unwrap();
        assert_eq!(line.elements.len(), 7);
        assert_eq!(line.graph.diameter(), 6);

        let z6 = make_cyclic_group(6).unwrap();
        let cycle = cayley_ball(&z6, 3, 100).unwrap();
        assert_eq!(cycle.elements.len(), 6);
        assert!((0..6).all(|v| cycle.graph.graph().degree(v) == 2));

        assert_eq!(
            cayley_ball(&f2, 10, 1000).unwrap_err(),
            GroupError::BallTooLarge { cap: 1000 }
        );
    }

    #[test]
    fn shortlex_ball_order() {
        let f2 = make_free_group(2).unwrap();
        let ball = f2.ball(1, 10).unwrap();
        let names: Vec<String> = ball.iter().map(|(g, _)| g.to_string()).collect();
        assert_eq!(names, ["e", "a", "A", "b", "B"]);
    }

    #[test]
    fn dihedral_section() {
        let d = infinite_dihedral();
        let sec = dihedral_rotation_section(&d).unwrap();
        let a = d.generators()[0].clone();
        assert_eq!(sec.representatives(), &[d.identity(), a.clone()]);
        assert_eq!(sec.inverse_representative_bound(), 1);
        assert_eq!(sec.alpha(&d.identity(), 1).unwrap(), d.identity());
        assert_eq!(sec.alpha(&a, 0).unwrap(), d.identity());
        assert_eq!(sec.alpha(&a, 1).unwrap(), d.identity());
        let ab = d.multiply(&a, &d.generators()[1]);
        assert_eq!(sec.alpha(&ab, 0).unwrap(), ab);

        let ball = d.ball(4, 1000).unwrap();
        for (s, _) in &ball {
            for (t, _) in &ball {
                let st = d.multiply(s, t);
                for x in 0..2 {
                    let lhs = sec.alpha(&st, x).unwrap();
                    let rhs = d.multiply(
                        &sec.alpha(s, sec.act(t, x).unwrap()).unwrap(),
                        &sec.alpha(t, x).unwrap(),
                    );
                    assert_eq!(lhs, rhs);
                }
            }
            let (c, h) = sec.decompose(s).unwrap();
            assert!(sec.in_subgroup(&h));
            assert_eq!(d.multiply(sec.representative(c), &h), *s);
            let others = (0..2)
                .filter(|&x| sec.in_subgroup(&d.multiply(&d.invert(sec.representative(x)), s)))
                .count();
            assert_eq!(others, 1);
        }
    }

    #[test]
    fn trivial_section() {
        let f2 = make_free_group(2).unwrap();
        let sec = CosetSection::new(f2.clone(), Arc::new(|_| true), 1, 0, 10).unwrap();
        let s = GroupElement::Free(vec![1, 2]);
        assert_eq!(sec.alpha(&s, 0).unwrap(), s);
        assert_eq!(sec.inverse_representative_bound(), 0);
        let missing = CosetSection::new(f2, Arc::new(|g: &GroupElement| g.letters().is_empty()), 3, 0, 10);
        assert!(matches!(missing, Err(GroupError::IncompleteSection { .. })));
    }

    #[test]
    fn bass_serre_examples() {
        let d = infinite_dihedral();
        let one = bass_serre_ball(&d, 1, 100).unwrap();
        assert_eq!(one.vertices.len(), 2);
        assert_eq!(one.graph.edges().len(), 1);

        let line = bass_serre_ball(&d, 6, 100).unwrap();
        // edges are the 11 elements with at most 5 letters
        assert_eq!(line.vertices.len(), 12);
        for v in 0..12 {
            let degree = line.graph.graph().degree(v);
            if line.is_interior(v, 6) {
                assert_eq!(degree, 2);
            } else {
                assert_eq!(degree, 1);
            }
        }

        let g = make_free_product(z2(), make_cyclic_group(3).unwrap());
        let tree = bass_serre_ball(&g, 5, 1000).unwrap();
        let mut interior = 0;
        for (v, tv) in tree.vertices.iter().enumerate() {
            if tree.is_interior(v, 5) {
                interior += 1;
                assert_eq!(tree.graph.graph().degree(v), if tv.side == 0 { 2 } else { 3 });
            }
        }
        assert!(interior > 10);
        for (s, _) in g.ball(3, 1000).unwrap() {
            assert!(tree.left_action_preserves_edges(&g, &s));
        }
        assert!(matches!(
            bass_serre_ball(&make_free_group(2).unwrap(), 2, 10),
            Err(GroupError::WrongKind { .. })
        ));
    }
}
