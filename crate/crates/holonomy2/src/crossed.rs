//! Lie crossed modules: a boundary homomorphism from a fiber group into a
//! base group together with a base action by automorphisms, satisfying the
//! equivariance and Peiffer identities at both group and algebra level.
//!
//! Built-in modules:
//!
//! * `u1-exp` — exp: (i·R, +) -> U(1), trivial action (the abelian pair used
//!   by the integer-labelled sphere holonomies);
//! * `su2-so3` — the double cover SU(2) -> SO(3), SO(3) acting through its
//!   quaternion lift;
//! * `heis-r2` — the Heisenberg group over its abelianization R^2;
//! * `ad-heis` — Ad: H -> Aut(H) with Aut(H) realized on Lie-algebra
//!   coordinates;
//! * `g-adjoint` — the identity module (id: G -> G, conjugation) at G = SO(3).

use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::groups::{
    c, heis_alg, heis_alg_entries, heis_group, heis_group_entries, quat_to_su2, r2_alg,
    r2_entries_alg, r2_entries_group, r2_group, random_algebra, random_group, rotation_to_quat,
    so3_from_vec, so3_to_vec, su2_from_vec, su2_to_vec, AlgebraElement, CMat, GroupElement,
    GroupKind,
};

/// Tolerance at which the crossed-module axioms must hold for valid modules.
pub const AXIOM_TOL: f64 = 1e-10;

type GroupMap = fn(&GroupElement) -> GroupElement;
type AlgMap = fn(&AlgebraElement) -> AlgebraElement;
type GroupAction = fn(&GroupElement, &GroupElement) -> GroupElement;
type AlgAction = fn(&AlgebraElement, &AlgebraElement) -> AlgebraElement;
type MixedAction = fn(&GroupElement, &AlgebraElement) -> AlgebraElement;

/// A crossed module of Lie groups together with its differential.
///
/// All five maps are total on valid elements of the declared kinds; the
/// public methods check kinds before dispatching.
pub struct CrossedModule {
    name: &'static str,
    base: GroupKind,
    fiber: GroupKind,
    boundary_group: GroupMap,
    boundary_alg: AlgMap,
    act_group: GroupAction,
    act_alg: AlgAction,
    act_group_alg: MixedAction,
    /// Right inverse of the algebra boundary on its image, when one is
    /// registered; used to manufacture connection data with exact
    /// fake-curvature.
    section_alg: Option<AlgMap>,
}

impl std::fmt::Debug for CrossedModule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CrossedModule")
            .field("name", &self.name)
            .field("base", &self.base)
            .field("fiber", &self.fiber)
            .finish()
    }
}

impl CrossedModule {
    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn base(&self) -> GroupKind {
        self.base
    }

    pub fn fiber(&self) -> GroupKind {
        self.fiber
    }

    fn want(&self, kind: GroupKind, got: GroupKind) -> Result<()> {
        if kind != got {
            return Err(Error::KindMismatch {
                expected: kind,
                got,
            });
        }
        Ok(())
    }

    /// Boundary homomorphism on group elements.
    pub fn boundary_group(&self, e: &GroupElement) -> Result<GroupElement> {
        self.want(self.fiber, e.kind())?;
        Ok((self.boundary_group)(e))
    }

    /// Boundary homomorphism on algebra elements.
    pub fn boundary_alg(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        self.want(self.fiber, x.kind())?;
        Ok((self.boundary_alg)(x))
    }

    /// Base-group action on the fiber group.
    pub fn act_group(&self, g: &GroupElement, e: &GroupElement) -> Result<GroupElement> {
        self.want(self.base, g.kind())?;
        self.want(self.fiber, e.kind())?;
        Ok((self.act_group)(g, e))
    }

    /// Derived base-algebra action on the fiber algebra.
    pub fn act_alg(&self, x: &AlgebraElement, e: &AlgebraElement) -> Result<AlgebraElement> {
        self.want(self.base, x.kind())?;
        self.want(self.fiber, e.kind())?;
        Ok((self.act_alg)(x, e))
    }

    /// Base-group action on the fiber algebra (the differential of
    /// [`act_group`] in the fiber slot); this is what transport integrands
    /// apply to form values.
    pub fn act_group_alg(&self, g: &GroupElement, xi: &AlgebraElement) -> Result<AlgebraElement> {
        self.want(self.base, g.kind())?;
        self.want(self.fiber, xi.kind())?;
        Ok((self.act_group_alg)(g, xi))
    }

    /// Right inverse of the algebra boundary on its image.
    pub fn section_alg(&self, a: &AlgebraElement) -> Result<AlgebraElement> {
        self.want(self.base, a.kind())?;
        match self.section_alg {
            Some(f) => Ok(f(a)),
            None => Err(Error::Unsupported(format!(
                "module `{}` has no registered boundary section",
                self.name
            ))),
        }
    }

    pub fn has_section(&self) -> bool {
        self.section_alg.is_some()
    }
}

// ---------------------------------------------------------------------------
// u1-exp
// ---------------------------------------------------------------------------

fn u1_boundary_group(e: &GroupElement) -> GroupElement {
    let z = e.matrix()[(0, 0)];
    GroupElement::from_matrix(GroupKind::U1, CMat::from_element(1, 1, z.exp()))
        .expect("1x1 shape")
}

fn u1_boundary_alg(x: &AlgebraElement) -> AlgebraElement {
    AlgebraElement::from_matrix(GroupKind::U1, x.matrix().clone()).expect("1x1 shape")
}

fn u1_act_group(_g: &GroupElement, e: &GroupElement) -> GroupElement {
    e.clone()
}

fn u1_act_alg(_x: &AlgebraElement, _e: &AlgebraElement) -> AlgebraElement {
    AlgebraElement::zero(GroupKind::ImLine)
}

fn u1_act_group_alg(_g: &GroupElement, xi: &AlgebraElement) -> AlgebraElement {
    xi.clone()
}

fn u1_section(a: &AlgebraElement) -> AlgebraElement {
    AlgebraElement::from_matrix(GroupKind::ImLine, a.matrix().clone()).expect("1x1 shape")
}

// ---------------------------------------------------------------------------
// su2-so3
// ---------------------------------------------------------------------------

fn so3_quaternion_lift(g: &GroupElement) -> CMat {
    let q = rotation_to_quat(g.matrix());
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    quat_to_su2([q[0] / n, q[1] / n, q[2] / n, q[3] / n])
}

fn su2_boundary_group(e: &GroupElement) -> GroupElement {
    let q = crate::groups::su2_to_quat(e.matrix());
    GroupElement::from_matrix(GroupKind::So3, crate::groups::quat_to_rotation(q))
        .expect("3x3 shape")
}

fn su2_boundary_alg(x: &AlgebraElement) -> AlgebraElement {
    so3_from_vec(su2_to_vec(x))
}

fn su2_act_group(g: &GroupElement, e: &GroupElement) -> GroupElement {
    let lift = so3_quaternion_lift(g);
    GroupElement::from_matrix(GroupKind::Su2, &lift * e.matrix() * lift.adjoint())
        .expect("2x2 shape")
}

fn su2_act_alg(x: &AlgebraElement, e: &AlgebraElement) -> AlgebraElement {
    // Transfer X through the algebra isomorphism and bracket.
    let lifted = su2_from_vec(so3_to_vec(x));
    lifted.bracket(e).expect("matching kinds")
}

fn su2_act_group_alg(g: &GroupElement, xi: &AlgebraElement) -> AlgebraElement {
    let lift = so3_quaternion_lift(g);
    AlgebraElement::from_matrix(GroupKind::Su2, &lift * xi.matrix() * lift.adjoint())
        .expect("2x2 shape")
}

fn su2_section(a: &AlgebraElement) -> AlgebraElement {
    su2_from_vec(so3_to_vec(a))
}

// ---------------------------------------------------------------------------
// heis-r2
// ---------------------------------------------------------------------------

fn heis_boundary_group(e: &GroupElement) -> GroupElement {
    let (a, _b, h) = heis_group_entries(e);
    r2_group(a, h)
}

fn heis_boundary_alg(x: &AlgebraElement) -> AlgebraElement {
    let (a, _b, h) = heis_alg_entries(x);
    r2_alg(a, h)
}

fn heis_act_group(g: &GroupElement, e: &GroupElement) -> GroupElement {
    let (alpha, gamma) = r2_entries_group(g);
    let (a, b, h) = heis_group_entries(e);
    heis_group(a, b + alpha * h - gamma * a, h)
}

fn heis_act_group_alg(g: &GroupElement, xi: &AlgebraElement) -> AlgebraElement {
    let (alpha, gamma) = r2_entries_group(g);
    let (a, b, h) = heis_alg_entries(xi);
    heis_alg(a, b + alpha * h - gamma * a, h)
}

fn heis_act_alg(x: &AlgebraElement, e: &AlgebraElement) -> AlgebraElement {
    let (alpha, gamma) = r2_entries_alg(x);
    let (a, _b, h) = heis_alg_entries(e);
    heis_alg(0.0, alpha * h - gamma * a, 0.0)
}

fn heis_section(a: &AlgebraElement) -> AlgebraElement {
    let (alpha, gamma) = r2_entries_alg(a);
    heis_alg(alpha, 0.0, gamma)
}

// ---------------------------------------------------------------------------
// ad-heis
// ---------------------------------------------------------------------------

/// Heisenberg algebra coordinates in the ordered basis (X, Y, Z) with
/// [X, Y] = Z: the stored entries (a, b, h) sit at X=a, Y=h, Z=b.
fn heis_coords(x: &AlgebraElement) -> [f64; 3] {
    let (a, b, h) = heis_alg_entries(x);
    [a, h, b]
}

fn heis_from_coords(v: [f64; 3]) -> AlgebraElement {
    heis_alg(v[0], v[2], v[1])
}

fn apply3(m: &CMat, v: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = (0..3).map(|j| m[(i, j)].re * v[j]).sum();
    }
    out
}

fn ad_heis_boundary_group(e: &GroupElement) -> GroupElement {
    let (a, _b, h) = heis_group_entries(e);
    let mut m = CMat::identity(3, 3);
    m[(2, 0)] = c(-h);
    m[(2, 1)] = c(a);
    GroupElement::from_matrix(GroupKind::HeisAut, m).expect("3x3 shape")
}

fn ad_heis_boundary_alg(x: &AlgebraElement) -> AlgebraElement {
    let [p, q, _r] = heis_coords(x);
    let mut m = CMat::zeros(3, 3);
    m[(2, 0)] = c(-q);
    m[(2, 1)] = c(p);
    AlgebraElement::from_matrix(GroupKind::HeisAut, m).expect("3x3 shape")
}

fn ad_heis_act_group(g: &GroupElement, e: &GroupElement) -> GroupElement {
    let xi = e.log().expect("nilpotent log is total");
    heis_from_coords(apply3(g.matrix(), heis_coords(&xi))).exp()
}

fn ad_heis_act_group_alg(g: &GroupElement, xi: &AlgebraElement) -> AlgebraElement {
    heis_from_coords(apply3(g.matrix(), heis_coords(xi)))
}

fn ad_heis_act_alg(d: &AlgebraElement, xi: &AlgebraElement) -> AlgebraElement {
    heis_from_coords(apply3(d.matrix(), heis_coords(xi)))
}

fn ad_heis_section(a: &AlgebraElement) -> AlgebraElement {
    let w1 = a.matrix()[(2, 0)].re;
    let w2 = a.matrix()[(2, 1)].re;
    heis_from_coords([w2, -w1, 0.0])
}

// ---------------------------------------------------------------------------
// g-adjoint (instantiated at SO(3))
// ---------------------------------------------------------------------------

fn adjoint_identity_group(e: &GroupElement) -> GroupElement {
    e.clone()
}

fn adjoint_identity_alg(x: &AlgebraElement) -> AlgebraElement {
    x.clone()
}

fn adjoint_act_group(g: &GroupElement, e: &GroupElement) -> GroupElement {
    g.conjugate(e).expect("matching kinds")
}

fn adjoint_act_alg(x: &AlgebraElement, e: &AlgebraElement) -> AlgebraElement {
    x.bracket(e).expect("matching kinds")
}

fn adjoint_act_group_alg(g: &GroupElement, xi: &AlgebraElement) -> AlgebraElement {
    AlgebraElement::from_matrix(
        GroupKind::So3,
        g.matrix() * xi.matrix() * g.inverse().matrix(),
    )
    .expect("3x3 shape")
}

// ---------------------------------------------------------------------------
// Corrupted action (negative control): the acting rotation is transposed.
// ---------------------------------------------------------------------------

fn corrupt_act_group(g: &GroupElement, e: &GroupElement) -> GroupElement {
    let flipped = GroupElement::from_matrix(GroupKind::So3, g.matrix().transpose())
        .expect("3x3 shape");
    su2_act_group(&flipped, e)
}

fn corrupt_act_alg(x: &AlgebraElement, e: &AlgebraElement) -> AlgebraElement {
    su2_act_alg(&x.scale(-1.0), e)
}

fn corrupt_act_group_alg(g: &GroupElement, xi: &AlgebraElement) -> AlgebraElement {
    let flipped = GroupElement::from_matrix(GroupKind::So3, g.matrix().transpose())
        .expect("3x3 shape");
    su2_act_group_alg(&flipped, xi)
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

static REGISTRY: OnceLock<Vec<CrossedModule>> = OnceLock::new();
static CORRUPTED: OnceLock<CrossedModule> = OnceLock::new();

/// The built-in, axiom-satisfying crossed modules.
pub fn registry() -> &'static [CrossedModule] {
    REGISTRY.get_or_init(|| {
        vec![
            CrossedModule {
                name: "u1-exp",
                base: GroupKind::U1,
                fiber: GroupKind::ImLine,
                boundary_group: u1_boundary_group,
                boundary_alg: u1_boundary_alg,
                act_group: u1_act_group,
                act_alg: u1_act_alg,
                act_group_alg: u1_act_group_alg,
                section_alg: Some(u1_section),
            },
            CrossedModule {
                name: "su2-so3",
                base: GroupKind::So3,
                fiber: GroupKind::Su2,
                boundary_group: su2_boundary_group,
                boundary_alg: su2_boundary_alg,
                act_group: su2_act_group,
                act_alg: su2_act_alg,
                act_group_alg: su2_act_group_alg,
                section_alg: Some(su2_section),
            },
            CrossedModule {
                name: "heis-r2",
                base: GroupKind::R2,
                fiber: GroupKind::Heis,
                boundary_group: heis_boundary_group,
                boundary_alg: heis_boundary_alg,
                act_group: heis_act_group,
                act_alg: heis_act_alg,
                act_group_alg: heis_act_group_alg,
                section_alg: Some(heis_section),
            },
            CrossedModule {
                name: "ad-heis",
                base: GroupKind::HeisAut,
                fiber: GroupKind::Heis,
                boundary_group: ad_heis_boundary_group,
                boundary_alg: ad_heis_boundary_alg,
                act_group: ad_heis_act_group,
                act_alg: ad_heis_act_alg,
                act_group_alg: ad_heis_act_group_alg,
                section_alg: Some(ad_heis_section),
            },
            CrossedModule {
                name: "g-adjoint",
                base: GroupKind::So3,
                fiber: GroupKind::So3,
                boundary_group: adjoint_identity_group,
                boundary_alg: adjoint_identity_alg,
                act_group: adjoint_act_group,
                act_alg: adjoint_act_alg,
                act_group_alg: adjoint_act_group_alg,
                section_alg: Some(adjoint_identity_alg),
            },
        ]
    })
}

/// Negative control: `su2-so3` with a deliberately transposed action.  Not
/// part of [`registry`] — it violates the axioms by construction.
pub fn corrupted_su2_so3() -> &'static CrossedModule {
    CORRUPTED.get_or_init(|| CrossedModule {
        name: "su2-so3-corrupt",
        base: GroupKind::So3,
        fiber: GroupKind::Su2,
        boundary_group: su2_boundary_group,
        boundary_alg: su2_boundary_alg,
        act_group: corrupt_act_group,
        act_alg: corrupt_act_alg,
        act_group_alg: corrupt_act_group_alg,
        section_alg: Some(su2_section),
    })
}

/// Looks up a module by name, including the corrupted negative control.
pub fn by_name(name: &str) -> Result<&'static CrossedModule> {
    registry()
        .iter()
        .find(|m| m.name == name)
        .or_else(|| (name == "su2-so3-corrupt").then(corrupted_su2_so3))
        .ok_or_else(|| Error::UnknownModule(name.to_string()))
}

// ---------------------------------------------------------------------------
// Axiom checking
// ---------------------------------------------------------------------------

/// One axiom row: a label and the maximal residual observed over the samples.
#[derive(Debug, Clone)]
pub struct AxiomRow {
    pub name: &'static str,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct AxiomReport {
    pub module: &'static str,
    pub samples: usize,
    pub rows: Vec<AxiomRow>,
}

impl AxiomReport {
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.residual))
    }
}

/// Evaluates every crossed-module axiom (group level and algebra level) on
/// seeded random samples and reports the worst residual per axiom.
pub fn check_crossed_axioms(
    module: &'static CrossedModule,
    samples: usize,
    seed: u64,
) -> Result<AxiomReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = vec![
        AxiomRow { name: "boundary-equivariance", residual: 0.0 },
        AxiomRow { name: "peiffer-group", residual: 0.0 },
        AxiomRow { name: "boundary-homomorphism", residual: 0.0 },
        AxiomRow { name: "action-automorphism", residual: 0.0 },
        AxiomRow { name: "action-composition", residual: 0.0 },
        AxiomRow { name: "derivation", residual: 0.0 },
        AxiomRow { name: "representation", residual: 0.0 },
        AxiomRow { name: "boundary-equivariance-alg", residual: 0.0 },
        AxiomRow { name: "peiffer-alg", residual: 0.0 },
        AxiomRow { name: "exp-naturality", residual: 0.0 },
    ];
    let bump = |idx: usize, v: f64, rows: &mut Vec<AxiomRow>| {
        if v > rows[idx].residual {
            rows[idx].residual = v;
        }
    };

    for _ in 0..samples {
        let g = random_group(module.base(), &mut rng, 0.8);
        let h = random_group(module.base(), &mut rng, 0.8);
        let e = random_group(module.fiber(), &mut rng, 0.8);
        let f = random_group(module.fiber(), &mut rng, 0.8);
        let xx = random_algebra(module.base(), &mut rng, 0.7);
        let yy = random_algebra(module.base(), &mut rng, 0.7);
        let ee = random_algebra(module.fiber(), &mut rng, 0.7);
        let ff = random_algebra(module.fiber(), &mut rng, 0.7);

        // boundary(g |> e) = g boundary(e) g^-1
        let lhs = module.boundary_group(&module.act_group(&g, &e)?)?;
        let rhs = g.conjugate(&module.boundary_group(&e)?)?;
        bump(0, lhs.distance(&rhs), &mut rows);

        // boundary(e) |> f = e f e^-1
        let lhs = module.act_group(&module.boundary_group(&e)?, &f)?;
        let rhs = e.conjugate(&f)?;
        bump(1, lhs.distance(&rhs), &mut rows);

        // boundary(e f) = boundary(e) boundary(f)
        let lhs = module.boundary_group(&e.mul(&f)?)?;
        let rhs = module.boundary_group(&e)?.mul(&module.boundary_group(&f)?)?;
        bump(2, lhs.distance(&rhs), &mut rows);

        // g |> (e f) = (g |> e)(g |> f)
        let lhs = module.act_group(&g, &e.mul(&f)?)?;
        let rhs = module.act_group(&g, &e)?.mul(&module.act_group(&g, &f)?)?;
        bump(3, lhs.distance(&rhs), &mut rows);

        // (g h) |> e = g |> (h |> e)
        let lhs = module.act_group(&g.mul(&h)?, &e)?;
        let rhs = module.act_group(&g, &module.act_group(&h, &e)?)?;
        bump(4, lhs.distance(&rhs), &mut rows);

        // X |> [e, f] = [X |> e, f] + [e, X |> f]
        let lhs = module.act_alg(&xx, &ee.bracket(&ff)?)?;
        let rhs = module
            .act_alg(&xx, &ee)?
            .bracket(&ff)?
            .add(&ee.bracket(&module.act_alg(&xx, &ff)?)?)?;
        bump(5, lhs.distance(&rhs), &mut rows);

        // [X, Y] |> e = X |> (Y |> e) - Y |> (X |> e)
        let lhs = module.act_alg(&xx.bracket(&yy)?, &ee)?;
        let rhs = module
            .act_alg(&xx, &module.act_alg(&yy, &ee)?)?
            .sub(&module.act_alg(&yy, &module.act_alg(&xx, &ee)?)?)?;
        bump(6, lhs.distance(&rhs), &mut rows);

        // boundary(X |> e) = [X, boundary(e)]
        let lhs = module.boundary_alg(&module.act_alg(&xx, &ee)?)?;
        let rhs = xx.bracket(&module.boundary_alg(&ee)?)?;
        bump(7, lhs.distance(&rhs), &mut rows);

        // boundary(e) |> f = [e, f]
        let lhs = module.act_alg(&module.boundary_alg(&ee)?, &ff)?;
        let rhs = ee.bracket(&ff)?;
        bump(8, lhs.distance(&rhs), &mut rows);

        // boundary(exp e) = exp(boundary e)  and  g |> exp(e) = exp(g |> e)
        let lhs = module.boundary_group(&ee.exp())?;
        let rhs = module.boundary_alg(&ee)?.exp();
        let mut nat = lhs.distance(&rhs);
        let lhs = module.act_group(&g, &ee.exp())?;
        let rhs = module.act_group_alg(&g, &ee)?.exp();
        nat = nat.max(lhs.distance(&rhs));
        bump(9, nat, &mut rows);
    }

    Ok(AxiomReport {
        module: module.name(),
        samples,
        rows,
    })
}

/// Central finite difference of the mixed action at the identity against the
/// derived algebra action: d/dt|0  exp(tX) |> xi  vs  X |> xi.
pub fn check_derived_action_fd(
    module: &'static CrossedModule,
    samples: usize,
    seed: u64,
    step: f64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = random_algebra(module.base(), &mut rng, 0.7);
        let xi = random_algebra(module.fiber(), &mut rng, 0.7);
        let plus = module.act_group_alg(&x.scale(step).exp(), &xi)?;
        let minus = module.act_group_alg(&x.scale(-step).exp(), &xi)?;
        let fd = plus.sub(&minus)?.scale(0.5 / step);
        let exact = module.act_alg(&x, &xi)?;
        worst = worst.max(fd.distance(&exact));
    }
    Ok(worst)
}
