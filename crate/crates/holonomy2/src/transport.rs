//! Parallel transport along paths and surfaces.
//!
//! Two engines live here.  The line engine integrates the local
//! horizontality equation `a′(t) = −ω(γ′(t))·a(t)`, `a(0) = 1`, whose end
//! frame `g_γ = a(1)` defines the path holonomy `F¹(γ) = g_γ⁻¹`.  The
//! surface engine integrates the fiber equation
//!
//! `e′(s) = e(s) · ∫₀¹ a_s(t)⁻¹ ▷ m(∂_tΓ, ∂_sΓ) dt`, `e(0) = 1`,
//!
//! whose solution at `s = 1` is the surface element `e_Γ`; together with
//! the bottom holonomy it forms the morphism `(g_{γ₀}⁻¹, e_Γ)` of the
//! categorical group.  Both equations are stepped with a commutator-free
//! fourth-order scheme on Gauss nodes (a midpoint exponential at order
//! two), with the inner `t`-quadrature done by composite Simpson on the
//! shared frame samples.
//!
//! The family engine differentiates `e_{Γˣ}` across a one-parameter family
//! of surfaces and compares against the 2-curvature triple integral
//! `e_{Γˣ} · ∬ ℳ(∂ₓ~, ∂_t~, ∂_s~) dt ds`, the identity that makes the
//! surface holonomy depend only on the rank-2 homotopy class.

use crate::catgroup::CatMorphism;
use crate::crossed::CrossedModule;
use crate::error::{Error, Result};
use crate::forms::{GaugeMap, LocalConnection};
use crate::groups::{AlgebraElement, GroupElement};
use crate::paths::{hconcat2, whisker, Path1, Path2, Path3, ENDPOINT_TOL};

/// Frames are re-projected onto the group manifold after this many
/// integrator steps, curbing constraint drift on long integrations.
pub const REPROJECT_INTERVAL: usize = 64;

/// Collar grid used when validating that side edges stay put.
const EDGE_GRID: usize = 48;

/// Absolute drift allowed on the side edges of a swept surface.
const EDGE_TOL: f64 = 1e-9;

/// Largest 2×2 minor allowed on the `(t, x)` Jacobian of a family along
/// its bottom and top edges (the rank-1 hypothesis of the derivative
/// identity).
const EDGE_RANK_TOL: f64 = 1e-6;

/// Stepping order for the group-valued integrators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegratorOrder {
    Two,
    Four,
}

impl IntegratorOrder {
    pub fn as_u32(self) -> u32 {
        match self {
            IntegratorOrder::Two => 2,
            IntegratorOrder::Four => 4,
        }
    }

    pub fn from_u32(n: u32) -> Result<Self> {
        match n {
            2 => Ok(IntegratorOrder::Two),
            4 => Ok(IntegratorOrder::Four),
            other => Err(Error::Config(format!(
                "integrator order must be 2 or 4, got {other}"
            ))),
        }
    }
}

/// Resolution and stepping choices for the transport engines.
#[derive(Debug, Clone, Copy)]
pub struct TransportConfig {
    pub steps_t: usize,
    pub steps_s: usize,
    pub steps_x: usize,
    pub order: IntegratorOrder,
    /// Central-difference step for the family-derivative comparison.
    pub fd_step: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            steps_t: 256,
            steps_s: 256,
            steps_x: 64,
            order: IntegratorOrder::Four,
            fd_step: 1e-3,
        }
    }
}

impl TransportConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps_t < 8 || self.steps_s < 8 || self.steps_x < 8 {
            return Err(Error::Config(format!(
                "step counts must be at least 8 (got t={}, s={}, x={})",
                self.steps_t, self.steps_s, self.steps_x
            )));
        }
        if self.steps_t % 2 != 0 || self.steps_s % 2 != 0 {
            return Err(Error::Config(
                "steps_t and steps_s must be even for the composite Simpson rule".into(),
            ));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::Config("fd_step must be positive".into()));
        }
        Ok(())
    }

    /// Convenience constructor with every count set to `n` (order four).
    pub fn with_steps(n: usize) -> Self {
        Self {
            steps_t: n,
            steps_s: n,
            steps_x: n.max(8),
            order: IntegratorOrder::Four,
            fd_step: 1e-3,
        }
    }

    /// Expected integration tolerance at this resolution: `1e-6` at the
    /// default 256-point grids, scaling with the integrator order as the
    /// grids coarsen or refine.
    pub fn tol(&self) -> f64 {
        let n = self.steps_t.min(self.steps_s) as f64;
        1e-6 * (256.0 / n).powi(self.order.as_u32() as i32)
    }
}

fn cf4_weights() -> (f64, f64, f64, f64) {
    // Gauss nodes c = 1/2 ∓ √3/6 and the commutator-free combination
    // weights 1/4 ± √3/6.
    let w = 3f64.sqrt() / 6.0;
    (0.5 - w, 0.5 + w, 0.25 + w, 0.25 - w)
}

/// One step of `a′ = A(t)·a` over `[t, t+h]` (new factors multiply on the
/// left).
fn step_left<F>(order: IntegratorOrder, a: &GroupElement, eval: F, t: f64, h: f64) -> GroupElement
where
    F: Fn(f64) -> AlgebraElement,
{
    match order {
        IntegratorOrder::Two => {
            let mid = eval(t + 0.5 * h).scale(h);
            mid.exp().mul(a).expect("uniform kind")
        }
        IntegratorOrder::Four => {
            let (c1, c2, al, be) = cf4_weights();
            let a1 = eval(t + c1 * h);
            let a2 = eval(t + c2 * h);
            let b1 = a1.scale(al * h).add(&a2.scale(be * h)).expect("uniform kind");
            let b2 = a1.scale(be * h).add(&a2.scale(al * h)).expect("uniform kind");
            let first = b1.exp().mul(a).expect("uniform kind");
            b2.exp().mul(&first).expect("uniform kind")
        }
    }
}

/// One step of `e′ = e·V(s)` over `[s, s+h]` (new factors multiply on the
/// right).
fn step_right<F>(order: IntegratorOrder, e: &GroupElement, eval: F, s: f64, h: f64) -> GroupElement
where
    F: Fn(f64) -> AlgebraElement,
{
    match order {
        IntegratorOrder::Two => {
            let mid = eval(s + 0.5 * h).scale(h);
            e.mul(&mid.exp()).expect("uniform kind")
        }
        IntegratorOrder::Four => {
            let (c1, c2, al, be) = cf4_weights();
            let v1 = eval(s + c1 * h);
            let v2 = eval(s + c2 * h);
            let d1 = v1.scale(al * h).add(&v2.scale(be * h)).expect("uniform kind");
            let d2 = v1.scale(be * h).add(&v2.scale(al * h)).expect("uniform kind");
            e.mul(&d1.exp())
                .expect("uniform kind")
                .mul(&d2.exp())
                .expect("uniform kind")
        }
    }
}

/// Frames of the horizontality equation `a′ = −ω(γ′)·a`, `a(0) = start`,
/// sampled on the uniform `t`-grid with `cfg.steps_t` steps.
fn line_frames(
    conn: &LocalConnection,
    path: &Path1,
    start: &GroupElement,
    cfg: &TransportConfig,
) -> Vec<GroupElement> {
    let n = cfg.steps_t;
    let h = 1.0 / n as f64;
    let eval = |t: f64| {
        let p = path.eval(t);
        let v = path.velocity(t);
        conn.omega.eval(&p, &[&v]).scale(-1.0)
    };
    let mut frames = Vec::with_capacity(n + 1);
    frames.push(start.clone());
    let mut a = start.clone();
    for k in 0..n {
        a = step_left(cfg.order, &a, eval, k as f64 * h, h);
        if (k + 1) % REPROJECT_INTERVAL == 0 {
            a = a.project();
        }
        frames.push(a.clone());
    }
    frames
}

/// Transports the identity frame along `γ` and returns the sampled frame
/// curve `a(t_k)`, `t_k = k/steps_t`.  The end frame `a(1)` is the element
/// `g_γ` characterized by the horizontal lift of `γ` through `(γ(0), 1)`
/// ending at `(γ(1), g_γ)`.
pub fn line_transport(
    conn: &LocalConnection,
    path: &Path1,
    cfg: &TransportConfig,
) -> Result<Vec<GroupElement>> {
    cfg.validate()?;
    if path.chart_dim != conn.chart_dim {
        return Err(Error::DimensionMismatch {
            expected: format!("chart dimension {}", conn.chart_dim),
            got: format!("path in dimension {}", path.chart_dim),
        });
    }
    Ok(line_frames(conn, path, &GroupElement::identity(conn.module.base()), cfg))
}

/// Path holonomy of a loop: `F¹(γ) = a(1)⁻¹`.
pub fn line_holonomy(
    conn: &LocalConnection,
    path: &Path1,
    cfg: &TransportConfig,
) -> Result<GroupElement> {
    let start = path.start();
    let end = path.end();
    let defect = start
        .iter()
        .zip(&end)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if defect > ENDPOINT_TOL {
        return Err(Error::BoundaryMismatch {
            defect,
            tol: ENDPOINT_TOL,
        });
    }
    let frames = line_transport(conn, path, cfg)?;
    Ok(frames.last().expect("nonempty frame curve").inverse())
}

/// Composite Simpson sum of an algebra-valued integrand sampled at
/// `k/n`, `k = 0..=n` (`n` even).
fn simpson_sum<F>(n: usize, sample: F) -> AlgebraElement
where
    F: Fn(usize) -> AlgebraElement,
{
    debug_assert!(n % 2 == 0);
    let h = 1.0 / n as f64;
    let mut acc = sample(0);
    acc = acc.add(&sample(n)).expect("uniform kind");
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc = acc.add(&sample(k).scale(w)).expect("uniform kind");
    }
    acc.scale(h / 3.0)
}

/// The inner integrand of the fiber equation at sweep value `s`: Simpson
/// over `t` of `(a_s(t)·b)⁻¹ ▷ m(∂_tΓ, ∂_sΓ)`, where `a_s` is the frame
/// curve along `γ_s` and `b` an ambient start frame (identity for based
/// surfaces).
fn sweep_rate(
    conn: &LocalConnection,
    surface: &Path2,
    start_frame: &GroupElement,
    s: f64,
    cfg: &TransportConfig,
) -> AlgebraElement {
    let frames = line_frames(conn, &surface.path_at(s), start_frame, cfg);
    let n = cfg.steps_t;
    simpson_sum(n, |k| {
        let t = k as f64 / n as f64;
        let p = surface.eval(t, s);
        let dt = surface.d_t(t, s);
        let ds = surface.d_s(t, s);
        let value = conn.m.eval(&p, &[&dt, &ds]);
        conn.module
            .act_group_alg(&frames[k].inverse(), &value)
            .expect("kinds fixed by the connection")
    })
}

/// Surface transport output: the boundary frames, the fiber element, and
/// the categorical morphism they assemble into.
#[derive(Debug, Clone)]
pub struct SurfaceHolonomy {
    module: &'static CrossedModule,
    /// End frame `g_{γ₀}` of the bottom edge.
    pub g0: GroupElement,
    /// End frame `g_{γ₁}` of the top edge.
    pub g1: GroupElement,
    /// The fiber element `e_Γ`.
    pub e: GroupElement,
    /// Sampled solution curve `(s_k, e_Γ(s_k))`.
    pub s_trace: Vec<(f64, GroupElement)>,
}

impl SurfaceHolonomy {
    pub fn module(&self) -> &'static CrossedModule {
        self.module
    }

    /// Holonomy of the bottom edge, `F¹(γ₀) = g_{γ₀}⁻¹`.
    pub fn holonomy_bottom(&self) -> GroupElement {
        self.g0.inverse()
    }

    /// Holonomy of the top edge, `F¹(γ₁) = g_{γ₁}⁻¹`.
    pub fn holonomy_top(&self) -> GroupElement {
        self.g1.inverse()
    }

    /// The categorical morphism `(g_{γ₀}⁻¹, e_Γ)`.
    pub fn morphism(&self) -> Result<CatMorphism> {
        CatMorphism::new(self.module, self.holonomy_bottom(), self.e.clone())
    }

    /// Residual of the target relation `∂(e_Γ)·g_{γ₁}⁻¹ = g_{γ₀}⁻¹`
    /// (equivalently `g_{γ₁} = g_{γ₀}·∂(e_Γ)`).
    pub fn target_defect(&self) -> f64 {
        let lhs = self
            .module
            .boundary_group(&self.e)
            .expect("fiber element")
            .mul(&self.holonomy_top())
            .expect("uniform kind");
        lhs.distance(&self.holonomy_bottom())
    }

    /// The same holonomy observed from a gauge-moved base frame: every
    /// base component conjugates by `g` and the fiber components move by
    /// the action.
    pub fn gauge_transform(&self, g: &GroupElement) -> Result<SurfaceHolonomy> {
        let conj = |x: &GroupElement| -> Result<GroupElement> {
            g.mul(x)?.mul(&g.inverse())
        };
        let mut trace = Vec::with_capacity(self.s_trace.len());
        for (s, e) in &self.s_trace {
            trace.push((*s, self.module.act_group(g, e)?));
        }
        Ok(SurfaceHolonomy {
            module: self.module,
            g0: conj(&self.g0)?,
            g1: conj(&self.g1)?,
            e: self.module.act_group(g, &self.e)?,
            s_trace: trace,
        })
    }
}

/// Surface transport with an ambient start frame `b`: the frame curve
/// along every swept path starts at `b` instead of the identity, exactly
/// as when the base point of a family has been translated along a
/// connecting path.
pub fn surface_holonomy_from_frame(
    conn: &LocalConnection,
    surface: &Path2,
    start_frame: &GroupElement,
    cfg: &TransportConfig,
) -> Result<SurfaceHolonomy> {
    cfg.validate()?;
    if surface.chart_dim != conn.chart_dim {
        return Err(Error::DimensionMismatch {
            expected: format!("chart dimension {}", conn.chart_dim),
            got: format!("surface in dimension {}", surface.chart_dim),
        });
    }
    surface.check_edges_constant(EDGE_GRID)?;

    let n = cfg.steps_s;
    let h = 1.0 / n as f64;
    let rate = |s: f64| sweep_rate(conn, surface, start_frame, s, cfg);
    let mut e = GroupElement::identity(conn.module.fiber());
    let mut trace = Vec::with_capacity(n + 1);
    trace.push((0.0, e.clone()));
    for k in 0..n {
        e = step_right(cfg.order, &e, rate, k as f64 * h, h);
        if (k + 1) % REPROJECT_INTERVAL == 0 {
            e = e.project();
        }
        trace.push(((k + 1) as f64 * h, e.clone()));
    }

    let bottom = line_frames(conn, &surface.bottom(), start_frame, cfg);
    let top = line_frames(conn, &surface.top(), start_frame, cfg);
    Ok(SurfaceHolonomy {
        module: conn.module,
        g0: bottom.last().expect("nonempty").clone(),
        g1: top.last().expect("nonempty").clone(),
        e,
        s_trace: trace,
    })
}

/// Integrates the fiber equation across the sweep of `Γ` and returns the
/// boundary frames together with `e_Γ`.
pub fn surface_holonomy(
    conn: &LocalConnection,
    surface: &Path2,
    cfg: &TransportConfig,
) -> Result<SurfaceHolonomy> {
    surface_holonomy_from_frame(
        conn,
        surface,
        &GroupElement::identity(conn.module.base()),
        cfg,
    )
}

/// The categorical morphism of a surface, with the target relation
/// enforced: a defect beyond `100 × tol` means the connection data do not
/// satisfy the fake-curvature constraint and the morphism is rejected.
pub fn categorical_holonomy(
    conn: &LocalConnection,
    surface: &Path2,
    cfg: &TransportConfig,
) -> Result<CatMorphism> {
    let hol = surface_holonomy(conn, surface, cfg)?;
    let defect = hol.target_defect();
    let gate = 100.0 * cfg.tol();
    if defect > gate {
        return Err(Error::FakeCurvatureViolation { defect, gate });
    }
    hol.morphism()
}

/// Residual of the vertical composition law `e_{Γ¹∘ᵥΓ²} = e_{Γ¹}·e_{Γ²}`
/// at the morphism level.
pub fn check_vertical_functoriality(
    conn: &LocalConnection,
    lower: &Path2,
    upper: &Path2,
    cfg: &TransportConfig,
) -> Result<f64> {
    let stacked = crate::paths::vconcat2(lower, upper, EDGE_GRID)?;
    let tl = surface_holonomy(conn, lower, cfg)?;
    let tu = surface_holonomy(conn, upper, cfg)?;
    let tv = surface_holonomy(conn, &stacked, cfg)?;
    let seam_tol = (100.0 * cfg.tol()).max(1e-6);
    let composed = tl.morphism()?.compose(&tu.morphism()?, seam_tol)?;
    Ok(tv.morphism()?.distance(&composed))
}

/// Residual of the tensor law `F²(Γ¹∘ₕΓ²) = F²(Γ¹) ⊗ F²(Γ²)`, whose fiber
/// part reads `e = (g_{γ¹₀}⁻¹ ▷ e_{Γ²})·e_{Γ¹}`.
pub fn check_horizontal_monoidality(
    conn: &LocalConnection,
    first: &Path2,
    second: &Path2,
    cfg: &TransportConfig,
) -> Result<f64> {
    let joined = hconcat2(first, second, EDGE_GRID)?;
    let t1 = surface_holonomy(conn, first, cfg)?;
    let t2 = surface_holonomy(conn, second, cfg)?;
    let th = surface_holonomy(conn, &joined, cfg)?;
    let tensored = t1.morphism()?.tensor(&t2.morphism()?)?;
    Ok(th.morphism()?.distance(&tensored))
}

/// Residual of the interchange law on a 2×2 grid of surfaces: composing
/// vertically then tensoring equals tensoring then composing vertically,
/// and both match the transport of the assembled grid.
pub fn check_interchange_transport(
    conn: &LocalConnection,
    m11: &Path2,
    m12: &Path2,
    m21: &Path2,
    m22: &Path2,
    cfg: &TransportConfig,
) -> Result<f64> {
    let bottom_row = hconcat2(m11, m12, EDGE_GRID)?;
    let top_row = hconcat2(m21, m22, EDGE_GRID)?;
    let grid = crate::paths::vconcat2(&bottom_row, &top_row, EDGE_GRID)?;
    let t = |p: &Path2| -> Result<CatMorphism> { surface_holonomy(conn, p, cfg)?.morphism() };
    let seam_tol = (100.0 * cfg.tol()).max(1e-6);
    let rows_then_stack = t(&bottom_row)?.compose(&t(&top_row)?, seam_tol)?;
    let columns_then_tensor = t(&crate::paths::vconcat2(m11, m21, EDGE_GRID)?)?
        .tensor(&t(&crate::paths::vconcat2(m12, m22, EDGE_GRID)?)?)?;
    let assembled = t(&grid)?;
    Ok(assembled
        .distance(&rows_then_stack)
        .max(assembled.distance(&columns_then_tensor)))
}

/// Residual of invariance under endpoint-fixed reparametrization of both
/// the sweep and the path parameter.
pub fn check_reparametrization_invariance(
    conn: &LocalConnection,
    surface: &Path2,
    cfg: &TransportConfig,
) -> Result<f64> {
    let f = |u: f64| u + 0.10 * (std::f64::consts::TAU * u).sin();
    let re_s = crate::paths::reparametrize_s(surface, f)?;
    let re_t = crate::paths::reparametrize_t(surface, f)?;
    let base = surface_holonomy(conn, surface, cfg)?;
    let mut worst = 0.0f64;
    for other in [
        surface_holonomy(conn, &re_s, cfg)?,
        surface_holonomy(conn, &re_t, cfg)?,
    ] {
        worst = worst
            .max(base.e.distance(&other.e))
            .max(base.g0.distance(&other.g0))
            .max(base.g1.distance(&other.g1));
    }
    Ok(worst)
}

/// Residual of the vertical inverse law: sweeping backwards inverts the
/// morphism.
pub fn check_vertical_inverse(
    conn: &LocalConnection,
    surface: &Path2,
    cfg: &TransportConfig,
) -> Result<f64> {
    let forward = surface_holonomy(conn, surface, cfg)?;
    let backward = surface_holonomy(conn, &surface.reverse_s(), cfg)?;
    let predicted = forward.morphism()?.vertical_inverse();
    Ok(backward.morphism()?.distance(&predicted))
}

/// Residual of gauge covariance: transporting in the transformed
/// connection agrees with acting on the result by `φ(*)⁻¹`.
pub fn check_gauge_covariance(
    conn: &LocalConnection,
    surface: &Path2,
    map: &GaugeMap,
    cfg: &TransportConfig,
) -> Result<f64> {
    let transformed = crate::forms::gauge_transform_connection(conn, map)?;
    let plain = surface_holonomy(conn, surface, cfg)?;
    let moved = surface_holonomy(&transformed, surface, cfg)?;
    let at_base = map.eval(&surface.basepoint()).inverse();
    let predicted = plain.gauge_transform(&at_base)?;
    Ok(moved
        .e
        .distance(&predicted.e)
        .max(moved.g0.distance(&predicted.g0))
        .max(moved.g1.distance(&predicted.g1)))
}

/// Compares the surface holonomy of `Γ` (based at `μ(0)`) against the
/// holonomy of the conjugated surface `Γ_{μ⁻¹} ∘ₕ Γ ∘ₕ Γ_μ` (based at
/// `μ(1)`): the fiber parts must agree through the action of the
/// connecting holonomy.  Returns the fiber-norm defect.
pub fn translate_basepoint_check(
    conn: &LocalConnection,
    surface: &Path2,
    mu: &Path1,
    cfg: &TransportConfig,
) -> Result<f64> {
    let base = surface.basepoint();
    let start = mu.start();
    let defect = base
        .iter()
        .zip(&start)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if defect > 1e-9 {
        return Err(Error::BoundaryMismatch { defect, tol: 1e-9 });
    }
    let mu_back = mu.reverse();
    let conjugated = hconcat2(
        &hconcat2(&whisker(&mu_back), surface, EDGE_GRID)?,
        &whisker(mu),
        EDGE_GRID,
    )?;
    let at_y = surface_holonomy(conn, surface, cfg)?;
    let at_x = surface_holonomy(conn, &conjugated, cfg)?;
    let back_frames = line_transport(conn, &mu_back, cfg)?;
    let connecting = back_frames.last().expect("nonempty").inverse();
    let predicted = conn.module.act_group(&connecting, &at_y.e)?;
    Ok(at_x.e.distance(&predicted))
}

fn minor_norm(u: &[f64], v: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..u.len() {
        for j in (i + 1)..u.len() {
            worst = worst.max((u[i] * v[j] - u[j] * v[i]).abs());
        }
    }
    worst
}

fn family_hypotheses(family: &Path3, cfg: &TransportConfig) -> Result<()> {
    let grid = 24usize;
    for i in 0..=grid {
        let x = i as f64 / grid as f64;
        let left = family.eval(0.0, 0.0, x);
        for j in 0..=grid {
            let s = j as f64 / grid as f64;
            let dl = dist(&family.eval(0.0, s, x), &left);
            let dr = dist(&family.eval(1.0, s, x), &left);
            if dl.max(dr) > EDGE_TOL {
                return Err(Error::HypothesisViolation {
                    detail: format!(
                        "side edges must follow a single connecting curve \
                         (drift {:.2e} at s = {s}, x = {x})",
                        dl.max(dr)
                    ),
                });
            }
        }
    }
    for &s in &[0.0, 1.0] {
        for i in 0..=grid {
            let t = i as f64 / grid as f64;
            for j in 0..=grid {
                let x = j as f64 / grid as f64;
                let dt = family.d_t(t, s, x);
                let dx = family.d_x(t, s, x);
                let minor = minor_norm(&dt, &dx);
                if minor > EDGE_RANK_TOL {
                    return Err(Error::HypothesisViolation {
                        detail: format!(
                            "bottom/top edge sweeps area with the family parameter \
                             (minor {minor:.2e} at t = {t}, s = {s}, x = {x})"
                        ),
                    });
                }
            }
        }
    }
    let _ = cfg;
    Ok(())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Frame transported along the connecting curve `q(x') = J(0, 0, x')` up
/// to parameter `x`.
fn connecting_frame(
    conn: &LocalConnection,
    family: &Path3,
    x: f64,
    cfg: &TransportConfig,
) -> GroupElement {
    let fam = family.clone();
    let q = Path1::from_closure(family.chart_dim, move |tau| fam.eval(0.0, 0.0, tau * x));
    let frames = line_frames(conn, &q, &GroupElement::identity(conn.module.base()), cfg);
    frames.last().expect("nonempty").clone()
}

/// Fiber element of the family member at `x`, computed from the
/// transported frame as the derivative identity prescribes.
fn family_member(
    conn: &LocalConnection,
    family: &Path3,
    x: f64,
    cfg: &TransportConfig,
) -> Result<GroupElement> {
    let b = connecting_frame(conn, family, x, cfg);
    Ok(surface_holonomy_from_frame(conn, &family.at_x(x), &b, cfg)?.e)
}

/// Triple Simpson quadrature of the dressed 2-curvature over the member
/// surface at `x`: `∬ (a_s(t)·b)⁻¹ ▷ ℳ(∂ₓJ, ∂_tJ, ∂_sJ) dt ds`.
fn two_curvature_integral(
    conn: &LocalConnection,
    family: &Path3,
    x: f64,
    cfg: &TransportConfig,
) -> AlgebraElement {
    let mm = conn.two_curvature();
    let surface = family.at_x(x);
    let b = connecting_frame(conn, family, x, cfg);
    let ns = cfg.steps_s;
    let nt = cfg.steps_t;
    simpson_sum(ns, |j| {
        let s = j as f64 / ns as f64;
        let frames = line_frames(conn, &surface.path_at(s), &b, cfg);
        simpson_sum(nt, |k| {
            let t = k as f64 / nt as f64;
            let p = family.eval(t, s, x);
            let dx = family.d_x(t, s, x);
            let dt = family.d_t(t, s, x);
            let ds = family.d_s(t, s, x);
            let value = mm.eval(&p, &[&dx, &dt, &ds]);
            conn.module
                .act_group_alg(&frames[k].inverse(), &value)
                .expect("kinds fixed by the connection")
        })
    })
}

/// Checks the derivative identity `de_{Γˣ}/dx = e_{Γˣ} · ∬ ℳ(∂ₓ~, ∂_t~, ∂_s~)`
/// across the family: left side by central differences, right side by
/// quadrature.  Returns the largest relative defect over the `x`-samples.
pub fn family_derivative_check(
    conn: &LocalConnection,
    family: &Path3,
    cfg: &TransportConfig,
) -> Result<f64> {
    cfg.validate()?;
    family_hypotheses(family, cfg)?;
    let delta = cfg.fd_step;
    let mut defects = Vec::new();
    let mut scale = 1.0f64;
    for i in 0..cfg.steps_x {
        let x = (i as f64 + 0.5) / cfg.steps_x as f64;
        let e_plus = family_member(conn, family, (x + delta).min(1.0), cfg)?;
        let e_minus = family_member(conn, family, (x - delta).max(0.0), cfg)?;
        let width = (x + delta).min(1.0) - (x - delta).max(0.0);
        let lhs = (e_plus.matrix() - e_minus.matrix()) / crate::groups::c(width);
        let e_here = family_member(conn, family, x, cfg)?;
        let integral = two_curvature_integral(conn, family, x, cfg);
        let rhs = e_here.matrix() * integral.matrix();
        scale = scale.max(rhs.norm());
        defects.push((lhs - rhs).norm());
    }
    Ok(defects.into_iter().fold(0.0f64, f64::max) / scale)
}
