//! The categorical group (strict 2-group) associated with a crossed module.
//!
//! Objects are base-group elements; a morphism is a pair `(x, e)` of a source
//! object `x` and a fiber element `e`, pointing from `x` to `boundary(e)^-1 x`.
//! Morphisms compose vertically (end to end, multiplying fiber parts) and
//! carry a monoidal product inherited from the base group.  The interchange
//! law ties the two together and is checked numerically rather than assumed.

use crate::crossed::CrossedModule;
use crate::error::{Error, Result};
use crate::groups::GroupElement;

/// Default tolerance for the end-to-end matching required by vertical
/// composition.
pub const COMPOSE_TOL: f64 = 1e-8;

/// A morphism `x -> boundary(e)^-1 x` in the categorical group.
#[derive(Debug, Clone)]
pub struct CatMorphism {
    module: &'static CrossedModule,
    x: GroupElement,
    e: GroupElement,
}

impl CatMorphism {
    /// Builds a morphism with source object `x` and fiber part `e`,
    /// validating kinds and group membership.
    pub fn new(
        module: &'static CrossedModule,
        x: GroupElement,
        e: GroupElement,
    ) -> Result<Self> {
        if x.kind() != module.base() {
            return Err(Error::KindMismatch {
                expected: module.base(),
                got: x.kind(),
            });
        }
        if e.kind() != module.fiber() {
            return Err(Error::KindMismatch {
                expected: module.fiber(),
                got: e.kind(),
            });
        }
        x.validate(crate::groups::MEMBERSHIP_TOL)?;
        e.validate(crate::groups::MEMBERSHIP_TOL)?;
        Ok(Self { module, x, e })
    }

    /// The identity morphism at the object `x`.
    pub fn identity(module: &'static CrossedModule, x: GroupElement) -> Result<Self> {
        let e = GroupElement::identity(module.fiber());
        Self::new(module, x, e)
    }

    pub fn module(&self) -> &'static CrossedModule {
        self.module
    }

    /// The underlying object part (equal to [`source`](Self::source)).
    pub fn x(&self) -> &GroupElement {
        &self.x
    }

    /// The fiber part.
    pub fn e(&self) -> &GroupElement {
        &self.e
    }

    pub fn source(&self) -> GroupElement {
        self.x.clone()
    }

    pub fn target(&self) -> GroupElement {
        self.module
            .boundary_group(&self.e)
            .expect("fiber kind verified at construction")
            .inverse()
            .mul(&self.x)
            .expect("base kinds match")
    }

    fn same_module(&self, other: &Self) -> Result<()> {
        if !std::ptr::eq(self.module, other.module) {
            return Err(Error::Config(format!(
                "cannot combine morphisms over `{}` and `{}`",
                self.module.name(),
                other.module.name()
            )));
        }
        Ok(())
    }

    /// Vertical composition: `self` followed by `other`, defined when the
    /// target of `self` matches the source of `other` within `tol`.
    pub fn compose(&self, other: &Self, tol: f64) -> Result<Self> {
        self.same_module(other)?;
        let defect = self.target().distance(&other.source());
        if defect > tol {
            return Err(Error::Composability { defect, tol });
        }
        Ok(Self {
            module: self.module,
            x: self.x.clone(),
            e: self.e.mul(&other.e)?,
        })
    }

    /// Monoidal product `(x, e) ⊗ (y, f) = (x y, (x ▷ f) e)`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        self.same_module(other)?;
        let acted = self.module.act_group(&self.x, &other.e)?;
        Ok(Self {
            module: self.module,
            x: self.x.mul(&other.x)?,
            e: acted.mul(&self.e)?,
        })
    }

    /// Inverse for vertical composition: the same 2-cell traversed backwards.
    pub fn vertical_inverse(&self) -> Self {
        Self {
            module: self.module,
            x: self.target(),
            e: self.e.inverse(),
        }
    }

    /// Inverse for the monoidal product: `(x^-1, x^-1 ▷ e^-1)`.
    pub fn tensor_inverse(&self) -> Self {
        let xinv = self.x.inverse();
        let e = self
            .module
            .act_group(&xinv, &self.e.inverse())
            .expect("kinds verified at construction");
        Self {
            module: self.module,
            x: xinv,
            e,
        }
    }

    /// The action of a base element by conjugation on objects and through
    /// the crossed-module action on fiber parts.
    pub fn gauge_transform(&self, g: &GroupElement) -> Result<Self> {
        Ok(Self {
            module: self.module,
            x: g.conjugate(&self.x)?,
            e: self.module.act_group(g, &self.e)?,
        })
    }

    /// Largest of the object-part and fiber-part distances.
    pub fn distance(&self, other: &Self) -> f64 {
        self.x.distance(&other.x).max(self.e.distance(&other.e))
    }

    /// Distance from the identity morphism at the own source.
    pub fn is_identity(&self, tol: f64) -> bool {
        self.e.is_identity(tol)
    }
}

/// Residual of the interchange law on a 2x2 grid of morphisms: composing
/// vertically and then tensoring must agree with tensoring and then
/// composing.  `m11 -> m12` and `m21 -> m22` must each be composable.
pub fn check_interchange(
    m11: &CatMorphism,
    m12: &CatMorphism,
    m21: &CatMorphism,
    m22: &CatMorphism,
    tol: f64,
) -> Result<f64> {
    let left = m11.compose(m12, tol)?.tensor(&m21.compose(m22, tol)?)?;
    let right = m11.tensor(m21)?.compose(&m12.tensor(m22)?, tol)?;
    Ok(left.distance(&right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crossed::{by_name, registry};
    use crate::groups::{
        heis_group, im_line_group, quat_to_rotation, r2_group, random_group, su2_to_quat,
        GroupKind,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_morphism(
        module: &'static crate::crossed::CrossedModule,
        rng: &mut ChaCha8Rng,
    ) -> CatMorphism {
        let x = random_group(module.base(), rng, 0.8);
        let e = random_group(module.fiber(), rng, 0.8);
        CatMorphism::new(module, x, e).unwrap()
    }

    /// A morphism starting where `m` ends.
    fn continuation(m: &CatMorphism, rng: &mut ChaCha8Rng) -> CatMorphism {
        let e = random_group(m.module().fiber(), rng, 0.8);
        CatMorphism::new(m.module(), m.target(), e).unwrap()
    }

    #[test]
    fn u1_target_of_half_turn_is_minus_one() {
        let module = by_name("u1-exp").unwrap();
        let m = CatMorphism::new(
            module,
            GroupElement::identity(GroupKind::U1),
            im_line_group(std::f64::consts::PI),
        )
        .unwrap();
        let t = m.target();
        // boundary(i pi)^-1 = (-1)^-1 = -1.
        assert!((t.matrix()[(0, 0)].re + 1.0).abs() < 1e-14);
        assert!(t.matrix()[(0, 0)].im.abs() < 1e-14);
    }

    #[test]
    fn su2_target_matches_quaternion_oracle() {
        let module = by_name("su2-so3").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let m = random_morphism(module, &mut rng);
            // Conjugate quaternion <-> inverse rotation, composed with x.
            let q = su2_to_quat(m.e().matrix());
            let qc = [q[0], -q[1], -q[2], -q[3]];
            let oracle = GroupElement::from_matrix(GroupKind::So3, quat_to_rotation(qc))
                .unwrap()
                .mul(m.x())
                .unwrap();
            assert!(m.target().distance(&oracle) < 1e-12);
        }
    }

    #[test]
    fn composition_multiplies_fiber_parts_and_respects_endpoints() {
        let module = by_name("heis-r2").unwrap();
        let m1 = CatMorphism::new(module, r2_group(0.5, -0.25), heis_group(1.0, 2.0, 3.0))
            .unwrap();
        let m2 = CatMorphism::new(module, m1.target(), heis_group(-0.5, 1.0, 0.5)).unwrap();
        let m = m1.compose(&m2, COMPOSE_TOL).unwrap();
        let expected = heis_group(1.0, 2.0, 3.0)
            .mul(&heis_group(-0.5, 1.0, 0.5))
            .unwrap();
        assert!(m.e().distance(&expected) < 1e-14);
        assert!(m.source().distance(&m1.source()) < 1e-14);
        assert!(m.target().distance(&m2.target()) < 1e-14);

        // Far-apart endpoints refuse to compose.
        let stray = CatMorphism::new(module, r2_group(9.0, 9.0), heis_group(0.0, 0.0, 0.1))
            .unwrap();
        assert!(matches!(
            m1.compose(&stray, COMPOSE_TOL),
            Err(Error::Composability { .. })
        ));
    }

    #[test]
    fn tensor_is_associative_and_compatible_with_endpoints() {
        for module in registry() {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..15 {
                let a = random_morphism(module, &mut rng);
                let b = random_morphism(module, &mut rng);
                let c = random_morphism(module, &mut rng);
                let left = a.tensor(&b).unwrap().tensor(&c).unwrap();
                let right = a.tensor(&b.tensor(&c).unwrap()).unwrap();
                assert!(
                    left.distance(&right) < 1e-10,
                    "{}: tensor associativity residual {}",
                    module.name(),
                    left.distance(&right)
                );

                let ab = a.tensor(&b).unwrap();
                assert!(ab.source().distance(&a.source().mul(&b.source()).unwrap()) < 1e-10);
                assert!(ab.target().distance(&a.target().mul(&b.target()).unwrap()) < 1e-10);
            }
        }
    }

    #[test]
    fn inverses_cancel() {
        for module in registry() {
            let mut rng = ChaCha8Rng::seed_from_u64(23);
            for _ in 0..10 {
                let m = random_morphism(module, &mut rng);

                let v = m.compose(&m.vertical_inverse(), COMPOSE_TOL).unwrap();
                assert!(v.is_identity(1e-10));
                assert!(v.source().distance(&m.source()) < 1e-10);

                let t = m.tensor(&m.tensor_inverse()).unwrap();
                assert!(t.is_identity(1e-10));
                assert!(t.source().distance(&GroupElement::identity(module.base())) < 1e-10);
            }
        }
    }

    #[test]
    fn interchange_holds_on_random_grids() {
        for module in registry() {
            let mut rng = ChaCha8Rng::seed_from_u64(37);
            for _ in 0..10 {
                let m11 = random_morphism(module, &mut rng);
                let m12 = continuation(&m11, &mut rng);
                let m21 = random_morphism(module, &mut rng);
                let m22 = continuation(&m21, &mut rng);
                let residual = check_interchange(&m11, &m12, &m21, &m22, COMPOSE_TOL).unwrap();
                assert!(
                    residual < 1e-10,
                    "{}: interchange residual {}",
                    module.name(),
                    residual
                );
            }
        }
    }

    #[test]
    fn gauge_transform_is_tensor_conjugation() {
        for module in registry() {
            let mut rng = ChaCha8Rng::seed_from_u64(41);
            for _ in 0..10 {
                let m = random_morphism(module, &mut rng);
                let g = random_group(module.base(), &mut rng, 0.8);
                let direct = m.gauge_transform(&g).unwrap();
                let sandwich = CatMorphism::identity(module, g.clone())
                    .unwrap()
                    .tensor(&m)
                    .unwrap()
                    .tensor(&CatMorphism::identity(module, g.inverse()).unwrap())
                    .unwrap();
                assert!(
                    direct.distance(&sandwich) < 1e-10,
                    "{}: gauge/tensor mismatch {}",
                    module.name(),
                    direct.distance(&sandwich)
                );
            }
        }
    }

    #[test]
    fn mixed_module_combinations_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_morphism(by_name("g-adjoint").unwrap(), &mut rng);
        let b = random_morphism(by_name("su2-so3").unwrap(), &mut rng);
        assert!(a.tensor(&b).is_err());
        assert!(a.compose(&b, 1e3).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn coord() -> impl Strategy<Value = f64> {
            -1.5f64..1.5
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            /// Interchange on the Heisenberg module with arbitrary
            /// coordinates (everything here is exact polynomial algebra, so
            /// the residual is pure floating-point noise).
            #[test]
            fn interchange_heis(
                (xa, xg) in (coord(), coord()),
                (ya, yg) in (coord(), coord()),
                e1 in prop::array::uniform3(coord()),
                e2 in prop::array::uniform3(coord()),
                f1 in prop::array::uniform3(coord()),
                f2 in prop::array::uniform3(coord()),
            ) {
                let module = by_name("heis-r2").unwrap();
                let m11 = CatMorphism::new(module, r2_group(xa, xg),
                    heis_group(e1[0], e1[1], e1[2])).unwrap();
                let m12 = CatMorphism::new(module, m11.target(),
                    heis_group(e2[0], e2[1], e2[2])).unwrap();
                let m21 = CatMorphism::new(module, r2_group(ya, yg),
                    heis_group(f1[0], f1[1], f1[2])).unwrap();
                let m22 = CatMorphism::new(module, m21.target(),
                    heis_group(f2[0], f2[1], f2[2])).unwrap();
                let residual = check_interchange(&m11, &m12, &m21, &m22, COMPOSE_TOL).unwrap();
                prop_assert!(residual < 1e-9);
            }

            /// Vertical composition is associative whenever defined.
            #[test]
            fn compose_associative_heis(
                (xa, xg) in (coord(), coord()),
                e1 in prop::array::uniform3(coord()),
                e2 in prop::array::uniform3(coord()),
                e3 in prop::array::uniform3(coord()),
            ) {
                let module = by_name("heis-r2").unwrap();
                let m1 = CatMorphism::new(module, r2_group(xa, xg),
                    heis_group(e1[0], e1[1], e1[2])).unwrap();
                let m2 = CatMorphism::new(module, m1.target(),
                    heis_group(e2[0], e2[1], e2[2])).unwrap();
                let m3 = CatMorphism::new(module, m2.target(),
                    heis_group(e3[0], e3[1], e3[2])).unwrap();
                let left = m1.compose(&m2, COMPOSE_TOL).unwrap()
                    .compose(&m3, COMPOSE_TOL).unwrap();
                let right = m1.compose(&m2.compose(&m3, COMPOSE_TOL).unwrap(),
                    COMPOSE_TOL).unwrap();
                prop_assert!(left.distance(&right) < 1e-9);
            }
        }
    }
}
