//! Lipschitz-free space of a finite pointed graph.
//!
//! A [`FreeVector`] is a finite combination `Σ a_x δ_x` with `δ_o = 0`. Its
//! norm is computed two independent ways:
//!
//! * [`free_norm_dual`]: the linear program `max Σ a_x f(x)` over functions
//!   with `f(o) = 0` and `|f(u) - f(v)| ≤ 1` on every edge (edge constraints
//!   suffice on graphs, see [`lip_norm`]);
//! * [`free_norm_flow`]: the transport cost of moving the positive part onto
//!   the negative part, with the missing mass balanced at the basepoint.
//!
//! Strong duality makes the two agree exactly over an exact field.

pub mod flow;
pub mod simplex;

use std::collections::BTreeMap;
use std::ops::{Add, Neg, Sub};

use thiserror::Error;

use crate::graph::PointedGraph;
use crate::kerr::{QuotientMetric, RightInverse};
use crate::scalar::Scalar;

pub use flow::{Transshipment, TransshipmentSolution};
pub use simplex::{LpSolution, SimplexError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FreeSpaceError {
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("vector is based at {found}, graph at {expected}")]
    BasepointMismatch { expected: usize, found: usize },
    #[error("Lipschitz function takes value {value} at the basepoint")]
    NonZeroAtBasepoint { value: String },
    #[error("function has {found} values for {expected} vertices")]
    LengthMismatch { expected: usize, found: usize },
    #[error("function does not vanish at vertex {vertex} of the right-inverse image")]
    NotInKernel { vertex: usize },
    #[error("function is identically zero")]
    ZeroFunction,
    #[error("LP solver failed: {0}")]
    SolverFailure(#[from] SimplexError),
    #[error("bound violated: {detail}")]
    BoundViolation { detail: String },
}

/// Finitely supported element of the free space, basepoint entry excluded.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FreeVector<T> {
    basepoint: usize,
    coeffs: BTreeMap<usize, T>,
}

impl<T: Scalar> FreeVector<T> {
    pub fn zero(basepoint: usize) -> Self {
        FreeVector {
            basepoint,
            coeffs: BTreeMap::new(),
        }
    }

    /// `δ_x`; the zero vector when `x` is the basepoint.
    pub fn delta(x: usize, basepoint: usize) -> Self {
        Self::from_pairs(basepoint, [(x, T::one())])
    }

    /// Sums repeated entries and drops zeros and the basepoint.
    pub fn from_pairs(basepoint: usize, pairs: impl IntoIterator<Item = (usize, T)>) -> Self {
        let mut v = Self::zero(basepoint);
        for (x, a) in pairs {
            v.add_at(x, a);
        }
        v
    }

    pub fn add_at(&mut self, x: usize, a: T) {
        if x == self.basepoint || a.negligible() {
            return;
        }
        let updated = match self.coeffs.remove(&x) {
            Some(old) => old + a,
            None => a,
        };
        if !updated.negligible() {
            self.coeffs.insert(x, updated);
        }
    }

    pub fn basepoint(&self) -> usize {
        self.basepoint
    }

    pub fn get(&self, x: usize) -> T {
        self.coeffs.get(&x).cloned().unwrap_or_else(T::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &T)> {
        self.coeffs.iter().map(|(x, a)| (*x, a))
    }

    pub fn support(&self) -> Vec<usize> {
        self.coeffs.keys().copied().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scaled(&self, c: &T) -> Self {
        Self::from_pairs(self.basepoint, self.iter().map(|(x, a)| (x, a.clone() * c.clone())))
    }

    /// Same coefficients read over another index set via `map`; entries
    /// landing on the new basepoint vanish.
    pub fn map_points(&self, new_basepoint: usize, map: impl Fn(usize) -> usize) -> Self {
        Self::from_pairs(new_basepoint, self.iter().map(|(x, a)| (map(x), a.clone())))
    }

    pub fn total_mass(&self) -> T {
        self.coeffs.values().cloned().fold(T::zero(), |acc, a| acc + a)
    }

    fn check_against(&self, pg: &PointedGraph) -> Result<(), FreeSpaceError> {
        if self.basepoint != pg.basepoint() {
            return Err(FreeSpaceError::BasepointMismatch {
                expected: pg.basepoint(),
                found: self.basepoint,
            });
        }
        let n = pg.vertex_count();
        match self.coeffs.keys().find(|&&x| x >= n) {
            Some(&vertex) => Err(FreeSpaceError::VertexOutOfRange { vertex, n }),
            None => Ok(()),
        }
    }
}

impl<T: Scalar> Add for &FreeVector<T> {
    type Output = FreeVector<T>;
    fn add(self, rhs: Self) -> FreeVector<T> {
        debug_assert_eq!(self.basepoint, rhs.basepoint);
        let mut out = self.clone();
        for (x, a) in rhs.iter() {
            out.add_at(x, a.clone());
        }
        out
    }
}

impl<T: Scalar> Neg for &FreeVector<T> {
    type Output = FreeVector<T>;
    fn neg(self) -> FreeVector<T> {
        self.scaled(&-T::one())
    }
}

impl<T: Scalar> Sub for &FreeVector<T> {
    type Output = FreeVector<T>;
    fn sub(self, rhs: Self) -> FreeVector<T> {
        self + &(-rhs)
    }
}

/// Real function on vertices vanishing at the basepoint.
#[derive(Debug, Clone, PartialEq)]
pub struct LipFunction<T> {
    basepoint: usize,
    values: Vec<T>,
}

impl<T: Scalar> LipFunction<T> {
    pub fn new(values: Vec<T>, basepoint: usize) -> Result<Self, FreeSpaceError> {
        let n = values.len();
        let at_base = values
            .get(basepoint)
            .ok_or(FreeSpaceError::VertexOutOfRange { vertex: basepoint, n })?;
        if !at_base.negligible() {
            return Err(FreeSpaceError::NonZeroAtBasepoint {
                value: at_base.to_exact_string(),
            });
        }
        Ok(LipFunction { basepoint, values })
    }

    /// `x ↦ d(x, o)`.
    pub fn distance_to_base(pg: &PointedGraph) -> Self {
        let values = (0..pg.vertex_count())
            .map(|v| T::from_int(pg.depth(v) as i64))
            .collect();
        LipFunction {
            basepoint: pg.basepoint(),
            values,
        }
    }

    pub fn value(&self, x: usize) -> &T {
        &self.values[x]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `⟨μ, f⟩ = Σ μ(x) f(x)`.
    pub fn pair(&self, mu: &FreeVector<T>) -> T {
        mu.iter()
            .fold(T::zero(), |acc, (x, a)| acc + a.clone() * self.values[x].clone())
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, v| acc.max_of(v.abs()))
    }

    fn check_against(&self, pg: &PointedGraph) -> Result<(), FreeSpaceError> {
        if self.values.len() != pg.vertex_count() {
            return Err(FreeSpaceError::LengthMismatch {
                expected: pg.vertex_count(),
                found: self.values.len(),
            });
        }
        if self.basepoint != pg.basepoint() {
            return Err(FreeSpaceError::BasepointMismatch {
                expected: pg.basepoint(),
                found: self.basepoint,
            });
        }
        Ok(())
    }
}

/// Lipschitz constant as the largest jump across an edge. On a graph this is
/// the global constant: any geodesic splits into unit steps.
pub fn lip_norm<T: Scalar>(f: &LipFunction<T>, pg: &PointedGraph) -> T {
    pg.edges().iter().fold(T::zero(), |acc, &(u, v)| {
        acc.max_of((f.value(u).clone() - f.value(v).clone()).abs())
    })
}

/// `max |f(x) - f(y)| / d(x, y)` over all pairs.
pub fn lip_norm_all_pairs<T: Scalar>(f: &LipFunction<T>, pg: &PointedGraph) -> T {
    let n = pg.vertex_count();
    let mut best = T::zero();
    for x in 0..n {
        for y in x + 1..n {
            let ratio = (f.value(x).clone() - f.value(y).clone()).abs() / T::from_int(pg.dist(x, y) as i64);
            best = best.max_of(ratio);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution<T> {
    pub value: T,
    /// Maximizing 1-Lipschitz function.
    pub certificate: LipFunction<T>,
    pub pivots: usize,
}

/// Free norm as the optimum of the Lipschitz-dual LP.
///
/// Substituting `y_v = f(v) + d(v, o) ≥ 0` turns the box `|f(u) - f(v)| ≤ 1`
/// into `y_u - y_v ≤ 1 + d(u, o) - d(v, o)`, whose right-hand sides are
/// nonnegative, so `y = 0` is a feasible start.
pub fn free_norm_dual<T: Scalar>(mu: &FreeVector<T>, pg: &PointedGraph) -> Result<DualSolution<T>, FreeSpaceError> {
    mu.check_against(pg)?;
    let n = pg.vertex_count();
    let o = pg.basepoint();
    let var = |v: usize| if v < o { v } else { v - 1 };
    let vars = n - 1;

    let mut objective = vec![T::zero(); vars];
    let mut shift = T::zero();
    for (x, a) in mu.iter() {
        objective[var(x)] = a.clone();
        shift = shift + a.clone() * T::from_int(pg.depth(x) as i64);
    }

    let mut rows = Vec::with_capacity(2 * pg.edges().len());
    let mut rhs = Vec::with_capacity(2 * pg.edges().len());
    for &(u, v) in pg.edges() {
        for (a, b) in [(u, v), (v, u)] {
            let mut row = Vec::with_capacity(2);
            if a != o {
                row.push((var(a), T::one()));
            }
            if b != o {
                row.push((var(b), -T::one()));
            }
            rows.push(row);
            rhs.push(T::from_int(1 + pg.depth(a) as i64 - pg.depth(b) as i64));
        }
    }

    let LpSolution { value, x, pivots } = simplex::maximize(&objective, &rows, &rhs)?;
    let values = (0..n)
        .map(|v| {
            if v == o {
                T::zero()
            } else {
                x[var(v)].clone() - T::from_int(pg.depth(v) as i64)
            }
        })
        .collect();
    let certificate = LipFunction::new(values, o)?;
    Ok(DualSolution {
        value: value - shift,
        certificate,
        pivots,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution<T> {
    pub value: T,
    /// Net flow on each edge of `pg.edges()`, oriented from the smaller vertex.
    pub edge_flow: Vec<T>,
}

/// Free norm as a min-cost transshipment with unit edge costs; the basepoint
/// absorbs `-Σ μ` so the supplies balance.
pub fn free_norm_flow<T: Scalar>(mu: &FreeVector<T>, pg: &PointedGraph) -> Result<FlowSolution<T>, FreeSpaceError> {
    mu.check_against(pg)?;
    let n = pg.vertex_count();
    let mut supply = vec![T::zero(); n];
    for (x, a) in mu.iter() {
        supply[x] = a.clone();
    }
    supply[pg.basepoint()] = -mu.total_mass();
    let mut net = Transshipment::new(n);
    for &(u, v) in pg.edges() {
        net.add_edge(u, v, 1);
    }
    let sol = net.solve(&supply);
    Ok(FlowSolution {
        value: sol.cost,
        edge_flow: sol.edge_flow,
    })
}

/// `φ_g`: coefficients summed per class, base class dropped.
pub fn pushforward<T: Scalar>(qm: &QuotientMetric, mu: &FreeVector<T>) -> FreeVector<T> {
    mu.map_points(qm.base_class(), |x| qm.class_of(x))
}

/// `φ_h`: class coefficients moved to their representative vertices.
pub fn pull_back<T: Scalar>(h: &RightInverse, basepoint: usize, nu: &FreeVector<T>) -> FreeVector<T> {
    nu.map_points(basepoint, |c| h.of(c))
}

/// `P = φ_h ∘ φ_g`, an idempotent whose kernel is the kernel of `φ_g`.
pub fn projection<T: Scalar>(qm: &QuotientMetric, h: &RightInverse, mu: &FreeVector<T>) -> FreeVector<T> {
    pull_back(h, mu.basepoint(), &pushforward(qm, mu))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelBounds<T> {
    pub sup_norm: T,
    pub lip: T,
    /// `‖f‖_∞ / Lip(f)`
    pub ratio: T,
    /// `max_x d(x, h(g(x)))`
    pub delta_eff: u32,
}

/// For `f` vanishing on the image of `h`, checks
/// `Lip(f) / 2 ≤ ‖f‖_∞ ≤ Δ_eff · Lip(f)` with `Δ_eff = max_x d(x, h(g(x)))`.
pub fn ker_dual_bounds<T: Scalar>(
    f: &LipFunction<T>,
    pg: &PointedGraph,
    qm: &QuotientMetric,
    h: &RightInverse,
) -> Result<KernelBounds<T>, FreeSpaceError> {
    f.check_against(pg)?;
    if let Some(&vertex) = h.representatives().iter().find(|&&v| !f.value(v).negligible()) {
        return Err(FreeSpaceError::NotInKernel { vertex });
    }
    let sup_norm = f.sup_norm();
    if sup_norm.negligible() {
        return Err(FreeSpaceError::ZeroFunction);
    }
    let lip = lip_norm(f, pg);
    let delta_eff = h.displacement(pg, qm);
    let half = T::ratio(1, 2);
    if lip.clone() * half > sup_norm {
        return Err(FreeSpaceError::BoundViolation {
            detail: format!(
                "Lip(f)/2 > sup: {} vs {}",
                lip.to_exact_string(),
                sup_norm.to_exact_string()
            ),
        });
    }
    if sup_norm > T::from_int(delta_eff as i64) * lip.clone() {
        return Err(FreeSpaceError::BoundViolation {
            detail: format!(
                "sup > Δ_eff·Lip(f): {} vs {}·{}",
                sup_norm.to_exact_string(),
                delta_eff,
                lip.to_exact_string()
            ),
        });
    }
    let ratio = sup_norm.clone() / lip.clone();
    Ok(KernelBounds {
        sup_norm,
        lip,
        ratio,
        delta_eff,
    })
}

/// One sample of the splitting `μ ↦ (φ_g μ, μ - Pμ)`: the norms on both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSample<T> {
    pub norm: T,
    pub image_norm: T,
    pub kernel_norm: T,
}

impl<T: Scalar> SplitSample<T> {
    /// `(‖φ_g μ‖ + ‖μ - Pμ‖) / ‖μ‖`, or `None` for `μ = 0`.
    pub fn ratio(&self) -> Option<T> {
        if self.norm.negligible() {
            None
        } else {
            Some((self.image_norm.clone() + self.kernel_norm.clone()) / self.norm.clone())
        }
    }
}

/// Norms entering the finite-scale splitting of `F(X)`; `quotient_graph`
/// must be [`QuotientMetric::unit_graph`] of `qm`.
pub fn split_sample<T: Scalar>(
    pg: &PointedGraph,
    qm: &QuotientMetric,
    quotient_graph: &PointedGraph,
    h: &RightInverse,
    mu: &FreeVector<T>,
) -> Result<SplitSample<T>, FreeSpaceError> {
    let norm = free_norm_flow(mu, pg)?.value;
    let image_norm = free_norm_flow(&pushforward(qm, mu), quotient_graph)?.value;
    let kernel = mu - &projection(qm, h, mu);
    let kernel_norm = free_norm_flow(&kernel, pg)?.value;
    Ok(SplitSample {
        norm,
        image_norm,
        kernel_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{cycle, path, random_connected, seeded_rng, star};
    use crate::kerr::{build_quotient, right_inverse_h};
    use crate::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_int(n)
    }

    fn both_norms(mu: &FreeVector<Rational>, pg: &PointedGraph) -> Rational {
        let dual = free_norm_dual(mu, pg).unwrap();
        let flow = free_norm_flow(mu, pg).unwrap();
        assert_eq!(dual.value, flow.value);
        assert_eq!(dual.certificate.pair(mu), dual.value);
        assert!(lip_norm(&dual.certificate, pg) <= q(1));
        dual.value
    }

    #[test]
    fn lipschitz_constants() {
        let p3 = path(3);
        let zero = LipFunction::new(vec![q(0); 3], 0).unwrap();
        assert_eq!(lip_norm(&zero, &p3), q(0));
        let f = LipFunction::new(vec![q(0), q(1), q(3)], 0).unwrap();
        assert_eq!(lip_norm(&f, &p3), q(2));
        assert_eq!(lip_norm_all_pairs(&f, &p3), q(2));
        let c5 = cycle(5);
        assert_eq!(lip_norm(&LipFunction::<Rational>::distance_to_base(&c5), &c5), q(1));
        assert!(LipFunction::new(vec![q(1), q(0)], 0).is_err());
    }

    #[test]
    fn deltas_are_isometric() {
        let c5 = cycle(5);
        for x in 0..5 {
            assert_eq!(both_norms(&FreeVector::delta(x, 0), &c5), q(c5.depth(x) as i64));
            for y in 0..5 {
                let d = &FreeVector::delta(x, 0) - &FreeVector::delta(y, 0);
                assert_eq!(both_norms(&d, &c5), q(c5.dist(x, y) as i64));
            }
        }
    }

    #[test]
    fn star_example() {
        let s = star(3);
        let mu = FreeVector::from_pairs(0, [(1, q(1)), (2, q(1)), (3, q(-2))]);
        assert_eq!(both_norms(&mu, &s), q(4));
    }

    #[test]
    fn homogeneity_and_positive_mass() {
        let p3 = path(3);
        let mu = FreeVector::from_pairs(0, [(1, q(1)), (2, q(1))]);
        assert_eq!(both_norms(&mu, &p3), q(3));
        let c = Rational::ratio(-7, 3);
        assert_eq!(
            both_norms(&FreeVector::delta(2, 0).scaled(&c), &p3),
            Rational::ratio(14, 3)
        );
    }

    #[test]
    fn canonical_form() {
        let mu = FreeVector::from_pairs(1, [(0, q(2)), (1, q(5)), (0, q(-2)), (3, q(1))]);
        assert_eq!(mu.support(), vec![3]);
        assert!(FreeVector::<Rational>::delta(4, 4).is_zero());
        let err = free_norm_flow(&FreeVector::<Rational>::delta(9, 0), &path(3)).unwrap_err();
        assert_eq!(err, FreeSpaceError::VertexOutOfRange { vertex: 9, n: 3 });
        let err = free_norm_dual(&FreeVector::<Rational>::delta(1, 2), &path(3)).unwrap_err();
        assert_eq!(err, FreeSpaceError::BasepointMismatch { expected: 0, found: 2 });
    }

    #[test]
    fn random_duality() {
        let mut rng = seeded_rng(11);
        for _ in 0..30 {
            let pg = random_connected(12, 6, &mut rng);
            let mu = crate::corpus::random_free_vector(&pg, 5, &mut rng);
            both_norms(&mu, &pg);
        }
    }

    #[test]
    fn pushforward_and_projection_on_c4() {
        let c4 = cycle(4);
        let qm = build_quotient(&c4).unwrap();
        let h = right_inverse_h(&c4, &qm).unwrap();
        let d1 = FreeVector::<Rational>::delta(1, 0);
        let d3 = FreeVector::<Rational>::delta(3, 0);
        assert!(pushforward(&qm, &(&d1 - &d3)).is_zero());
        assert_eq!(
            pushforward(&qm, &(&d1 + &d3)),
            FreeVector::from_pairs(0, [(qm.class_of(1), q(2))])
        );
        assert!(pushforward(&qm, &FreeVector::<Rational>::delta(0, 0)).is_zero());
        assert_eq!(projection(&qm, &h, &d3), d1);
        assert!(projection(&qm, &h, &(&d3 - &d1)).is_zero());
        let on_image = FreeVector::from_pairs(0, [(1, q(3)), (2, q(-1))]);
        assert_eq!(projection(&qm, &h, &on_image), on_image);
    }

    #[test]
    fn kernel_bounds_c4() {
        let c4 = cycle(4);
        let qm = build_quotient(&c4).unwrap();
        let h = right_inverse_h(&c4, &qm).unwrap();
        let f = LipFunction::new(vec![q(0), q(0), q(0), q(-5)], 0).unwrap();
        let b = ker_dual_bounds(&f, &c4, &qm, &h).unwrap();
        assert_eq!(b.ratio, q(1));
        assert_eq!(b.delta_eff, 2);
        let zero = LipFunction::new(vec![q(0); 4], 0).unwrap();
        assert_eq!(ker_dual_bounds(&zero, &c4, &qm, &h), Err(FreeSpaceError::ZeroFunction));
        let off = LipFunction::new(vec![q(0), q(1), q(0), q(0)], 0).unwrap();
        assert_eq!(
            ker_dual_bounds(&off, &c4, &qm, &h),
            Err(FreeSpaceError::NotInKernel { vertex: 1 })
        );
    }

    #[test]
    fn split_sample_on_cycle() {
        let c6 = cycle(6);
        let qm = build_quotient(&c6).unwrap();
        let qg = qm.unit_graph().unwrap();
        let h = right_inverse_h(&c6, &qm).unwrap();
        let mu = FreeVector::from_pairs(0, [(2, q(1)), (4, q(-1))]);
        let s = split_sample(&c6, &qm, &qg, &h, &mu).unwrap();
        // 2 and 4 share a class: image vanishes and the whole vector is kernel
        assert_eq!(s.image_norm, q(0));
        assert_eq!(s.kernel_norm, s.norm);
        assert_eq!(s.ratio(), Some(q(1)));
    }
}
