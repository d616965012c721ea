//! Parametrized paths, surfaces and surface families on chart domains.
//!
//! Every builtin parametrization is smooth and *sits* near parameter
//! endpoints (it is constant on a collar), so that concatenations in either
//! direction stay smooth and endpoint velocities vanish.  Surfaces are maps
//! `Γ(t, s)` where `t` runs along each swept path and `s` sweeps between the
//! bottom (`s = 0`) and top (`s = 1`) paths; the `t = 0` and `t = 1` edges
//! must be constant in `s`.  Families add a third parameter `x` varying the
//! surface while keeping all four edges effectively rigid.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Width of the sitting collar used by the builtin parametrizations.
pub const SITTING_MARGIN: f64 = 0.1;
/// Step for finite-difference parameter velocities.
pub const FD_VELOCITY_H: f64 = 1e-6;
/// Two parametrization endpoints are "the same point" below this distance.
pub const ENDPOINT_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Smooth warp with sitting collars
// ---------------------------------------------------------------------------

fn bump_h(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

fn bump_h_prime(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp() / (x * x)
    } else {
        0.0
    }
}

/// Smooth step: 0 for `u <= 0`, 1 for `u >= 1`, strictly increasing between.
fn smooth_step(u: f64) -> f64 {
    let a = bump_h(u);
    let b = bump_h(1.0 - u);
    if a + b == 0.0 {
        // Unreachable for u in (0, 1); settle ties at the boundary.
        return if u >= 1.0 { 1.0 } else { 0.0 };
    }
    a / (a + b)
}

fn smooth_step_prime(u: f64) -> f64 {
    let a = bump_h(u);
    let b = bump_h(1.0 - u);
    let denom = (a + b) * (a + b);
    if denom == 0.0 {
        return 0.0;
    }
    (bump_h_prime(u) * b + a * bump_h_prime(1.0 - u)) / denom
}

/// Monotone smooth reparametrization of `[0, 1]` that is constant near both
/// ends (on collars of width [`SITTING_MARGIN`]).
pub fn warp(t: f64) -> f64 {
    smooth_step((t - SITTING_MARGIN) / (1.0 - 2.0 * SITTING_MARGIN))
}

pub fn warp_prime(t: f64) -> f64 {
    smooth_step_prime((t - SITTING_MARGIN) / (1.0 - 2.0 * SITTING_MARGIN))
        / (1.0 - 2.0 * SITTING_MARGIN)
}

// ---------------------------------------------------------------------------
// Paths
// ---------------------------------------------------------------------------

type Map1 = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// A smooth path `[0, 1] -> chart`.
#[derive(Clone)]
pub struct Path1 {
    pub chart_dim: usize,
    map: Arc<Map1>,
    velocity: Option<Arc<Map1>>,
}

impl Path1 {
    pub fn from_closure<F>(chart_dim: usize, f: F) -> Self
    where
        F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            chart_dim,
            map: Arc::new(f),
            velocity: None,
        }
    }

    pub fn with_velocity<F>(mut self, f: F) -> Self
    where
        F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        self.velocity = Some(Arc::new(f));
        self
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        (self.map)(t)
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        if let Some(v) = &self.velocity {
            return v(t);
        }
        let h = FD_VELOCITY_H;
        let plus = (self.map)(t + h);
        let minus = (self.map)(t - h);
        plus.iter()
            .zip(&minus)
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect()
    }

    pub fn start(&self) -> Vec<f64> {
        self.eval(0.0)
    }

    pub fn end(&self) -> Vec<f64> {
        self.eval(1.0)
    }

    pub fn is_loop(&self) -> bool {
        dist(&self.start(), &self.end()) <= ENDPOINT_TOL
    }

    /// The same trace walked backwards.
    pub fn reverse(&self) -> Self {
        let map = self.map.clone();
        let vel = self.velocity.clone();
        let mut out = Self {
            chart_dim: self.chart_dim,
            map: Arc::new(move |t| map(1.0 - t)),
            velocity: None,
        };
        if let Some(v) = vel {
            out.velocity = Some(Arc::new(move |t| {
                v(1.0 - t).into_iter().map(|x| -x).collect()
            }));
        }
        out
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// End-to-end concatenation at `t = 1/2`; the sitting collars of the two
/// pieces keep the composite smooth.
pub fn concat1(p: &Path1, q: &Path1) -> Result<Path1> {
    let defect = dist(&p.end(), &q.start());
    if defect > ENDPOINT_TOL {
        return Err(Error::BoundaryMismatch {
            defect,
            tol: ENDPOINT_TOL,
        });
    }
    let (pm, qm) = (p.map.clone(), q.map.clone());
    let mut out = Path1 {
        chart_dim: p.chart_dim,
        map: Arc::new(move |t| {
            if t < 0.5 {
                pm(2.0 * t)
            } else {
                qm(2.0 * t - 1.0)
            }
        }),
        velocity: None,
    };
    if p.velocity.is_some() || q.velocity.is_some() {
        let (pv, qv) = (p.clone(), q.clone());
        out.velocity = Some(Arc::new(move |t| {
            let v = if t < 0.5 {
                pv.velocity(2.0 * t)
            } else {
                qv.velocity(2.0 * t - 1.0)
            };
            v.into_iter().map(|x| 2.0 * x).collect()
        }));
    }
    Ok(out)
}

/// The constant path at a point.
pub fn constant_path(point: Vec<f64>) -> Path1 {
    let dim = point.len();
    let p2 = point.clone();
    Path1::from_closure(dim, move |_| point.clone())
        .with_velocity(move |_| vec![0.0; p2.len()])
}

/// Straight segment from `a` to `b`, warped to sit at both ends.
pub fn segment(a: Vec<f64>, b: Vec<f64>) -> Path1 {
    assert_eq!(a.len(), b.len());
    let (a2, b2) = (a.clone(), b.clone());
    let dim = a.len();
    Path1::from_closure(dim, move |t| {
        let u = warp(t);
        a.iter().zip(&b).map(|(x, y)| x + u * (y - x)).collect()
    })
    .with_velocity(move |t| {
        let du = warp_prime(t);
        a2.iter().zip(&b2).map(|(x, y)| du * (y - x)).collect()
    })
}

/// A closed loop: circle of radius `r` in the coordinate plane
/// `(axes.0, axes.1)`, based at `center + r e_{axes.0}`, traversed
/// counterclockwise `turns` times (negative for clockwise).
pub fn circle_loop(center: Vec<f64>, axes: (usize, usize), r: f64, turns: f64) -> Path1 {
    let dim = center.len();
    let c2 = center.clone();
    Path1::from_closure(dim, move |t| {
        let phi = std::f64::consts::TAU * turns * warp(t);
        let mut p = center.clone();
        p[axes.0] += r * phi.cos();
        p[axes.1] += r * phi.sin();
        p
    })
    .with_velocity(move |t| {
        let phi = std::f64::consts::TAU * turns * warp(t);
        let dphi = std::f64::consts::TAU * turns * warp_prime(t);
        let mut v = vec![0.0; c2.len()];
        v[axes.0] = -r * phi.sin() * dphi;
        v[axes.1] = r * phi.cos() * dphi;
        v
    })
}

// ---------------------------------------------------------------------------
// Surfaces
// ---------------------------------------------------------------------------

type Map2 = dyn Fn(f64, f64) -> Vec<f64> + Send + Sync;

/// A smooth surface `Γ(t, s)` sweeping the path parameter `t` through the
/// sweep parameter `s`.
#[derive(Clone)]
pub struct Path2 {
    pub chart_dim: usize,
    map: Arc<Map2>,
    d_t: Option<Arc<Map2>>,
    d_s: Option<Arc<Map2>>,
}

impl Path2 {
    pub fn from_closure<F>(chart_dim: usize, f: F) -> Self
    where
        F: Fn(f64, f64) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            chart_dim,
            map: Arc::new(f),
            d_t: None,
            d_s: None,
        }
    }

    pub fn with_d_t<F>(mut self, f: F) -> Self
    where
        F: Fn(f64, f64) -> Vec<f64> + Send + Sync + 'static,
    {
        self.d_t = Some(Arc::new(f));
        self
    }

    pub fn with_d_s<F>(mut self, f: F) -> Self
    where
        F: Fn(f64, f64) -> Vec<f64> + Send + Sync + 'static,
    {
        self.d_s = Some(Arc::new(f));
        self
    }

    pub fn eval(&self, t: f64, s: f64) -> Vec<f64> {
        (self.map)(t, s)
    }

    pub fn d_t(&self, t: f64, s: f64) -> Vec<f64> {
        match &self.d_t {
            Some(f) => f(t, s),
            None => fd2(&self.map, t, s, true),
        }
    }

    pub fn d_s(&self, t: f64, s: f64) -> Vec<f64> {
        match &self.d_s {
            Some(f) => f(t, s),
            None => fd2(&self.map, t, s, false),
        }
    }

    /// The swept path at a fixed sweep parameter.
    pub fn path_at(&self, s: f64) -> Path1 {
        let map = self.map.clone();
        let mut out = Path1 {
            chart_dim: self.chart_dim,
            map: Arc::new(move |t| map(t, s)),
            velocity: None,
        };
        if let Some(dt) = &self.d_t {
            let dt = dt.clone();
            out.velocity = Some(Arc::new(move |t| dt(t, s)));
        }
        out
    }

    pub fn bottom(&self) -> Path1 {
        self.path_at(0.0)
    }

    pub fn top(&self) -> Path1 {
        self.path_at(1.0)
    }

    /// Basepoint: the (constant) `t = 0` edge at `s = 0`.
    pub fn basepoint(&self) -> Vec<f64> {
        self.eval(0.0, 0.0)
    }

    /// Verifies that the `t = 0` and `t = 1` edges are constant in `s`.
    pub fn check_edges_constant(&self, grid: usize) -> Result<()> {
        let p0 = self.eval(0.0, 0.0);
        let p1 = self.eval(1.0, 0.0);
        for i in 0..=grid {
            let s = i as f64 / grid as f64;
            let d0 = dist(&self.eval(0.0, s), &p0);
            let d1 = dist(&self.eval(1.0, s), &p1);
            if d0.max(d1) > 1e-10 {
                return Err(Error::CollarViolation {
                    detail: format!(
                        "side edge moves with the sweep parameter (s = {s}, drift {:.2e})",
                        d0.max(d1)
                    ),
                });
            }
        }
        Ok(())
    }

    /// Sweep walked backwards (top and bottom exchanged).
    pub fn reverse_s(&self) -> Self {
        let map = self.map.clone();
        let mut out = Self::from_closure(self.chart_dim, move |t, s| map(t, 1.0 - s));
        if let Some(dt) = &self.d_t {
            let dt = dt.clone();
            out.d_t = Some(Arc::new(move |t, s| dt(t, 1.0 - s)));
        }
        if let Some(ds) = &self.d_s {
            let ds = ds.clone();
            out.d_s = Some(Arc::new(move |t, s| {
                ds(t, 1.0 - s).into_iter().map(|x| -x).collect()
            }));
        }
        out
    }

    /// Every swept path walked backwards.
    pub fn reverse_t(&self) -> Self {
        let map = self.map.clone();
        let mut out = Self::from_closure(self.chart_dim, move |t, s| map(1.0 - t, s));
        if let Some(dt) = &self.d_t {
            let dt = dt.clone();
            out.d_t = Some(Arc::new(move |t, s| {
                dt(1.0 - t, s).into_iter().map(|x| -x).collect()
            }));
        }
        if let Some(ds) = &self.d_s {
            let ds = ds.clone();
            out.d_s = Some(Arc::new(move |t, s| ds(1.0 - t, s)));
        }
        out
    }
}

fn fd2(map: &Arc<Map2>, t: f64, s: f64, along_t: bool) -> Vec<f64> {
    let h = FD_VELOCITY_H;
    let (plus, minus) = if along_t {
        (map(t + h, s), map(t - h, s))
    } else {
        (map(t, s + h), map(t, s - h))
    };
    plus.iter()
        .zip(&minus)
        .map(|(a, b)| (a - b) / (2.0 * h))
        .collect()
}

/// A path viewed as a surface constant in the sweep direction.
pub fn whisker(path: &Path1) -> Path2 {
    let map = path.map.clone();
    let mut out = Path2::from_closure(path.chart_dim, move |t, _| map(t));
    let dim = path.chart_dim;
    if let Some(v) = &path.velocity {
        let v = v.clone();
        out.d_t = Some(Arc::new(move |t, _| v(t)));
    }
    out.d_s = Some(Arc::new(move |_, _| vec![0.0; dim]));
    out
}

/// Vertical stacking: sweep through `lower` first, then `upper`.  The top
/// path of `lower` must coincide with the bottom path of `upper`.
pub fn vconcat2(lower: &Path2, upper: &Path2, grid: usize) -> Result<Path2> {
    let mut defect = 0.0f64;
    for i in 0..=grid {
        let t = i as f64 / grid as f64;
        defect = defect.max(dist(&lower.eval(t, 1.0), &upper.eval(t, 0.0)));
    }
    if defect > ENDPOINT_TOL {
        return Err(Error::BoundaryMismatch {
            defect,
            tol: ENDPOINT_TOL,
        });
    }
    let (lm, um) = (lower.map.clone(), upper.map.clone());
    let mut out = Path2::from_closure(lower.chart_dim, move |t, s| {
        if s < 0.5 {
            lm(t, 2.0 * s)
        } else {
            um(t, 2.0 * s - 1.0)
        }
    });
    let (lc, uc) = (lower.clone(), upper.clone());
    out.d_t = Some(Arc::new(move |t, s| {
        if s < 0.5 {
            lc.d_t(t, 2.0 * s)
        } else {
            uc.d_t(t, 2.0 * s - 1.0)
        }
    }));
    let (lc, uc) = (lower.clone(), upper.clone());
    out.d_s = Some(Arc::new(move |t, s| {
        let v = if s < 0.5 {
            lc.d_s(t, 2.0 * s)
        } else {
            uc.d_s(t, 2.0 * s - 1.0)
        };
        v.into_iter().map(|x| 2.0 * x).collect()
    }));
    Ok(out)
}

/// Horizontal pasting: every swept path of `first` continues into the swept
/// path of `second`.  The `t = 1` edge of `first` must meet the `t = 0`
/// edge of `second`.
pub fn hconcat2(first: &Path2, second: &Path2, grid: usize) -> Result<Path2> {
    let mut defect = 0.0f64;
    for i in 0..=grid {
        let s = i as f64 / grid as f64;
        defect = defect.max(dist(&first.eval(1.0, s), &second.eval(0.0, s)));
    }
    if defect > ENDPOINT_TOL {
        return Err(Error::BoundaryMismatch {
            defect,
            tol: ENDPOINT_TOL,
        });
    }
    let (fm, sm) = (first.map.clone(), second.map.clone());
    let mut out = Path2::from_closure(first.chart_dim, move |t, s| {
        if t < 0.5 {
            fm(2.0 * t, s)
        } else {
            sm(2.0 * t - 1.0, s)
        }
    });
    let (fc, sc) = (first.clone(), second.clone());
    out.d_t = Some(Arc::new(move |t, s| {
        let v = if t < 0.5 {
            fc.d_t(2.0 * t, s)
        } else {
            sc.d_t(2.0 * t - 1.0, s)
        };
        v.into_iter().map(|x| 2.0 * x).collect()
    }));
    let (fc, sc) = (first.clone(), second.clone());
    out.d_s = Some(Arc::new(move |t, s| {
        if t < 0.5 {
            fc.d_s(2.0 * t, s)
        } else {
            sc.d_s(2.0 * t - 1.0, s)
        }
    }));
    Ok(out)
}

type Reparam = dyn Fn(f64) -> f64 + Send + Sync;

fn validate_reparam(f: &Arc<Reparam>, grid: usize) -> Result<()> {
    if f(0.0).abs() > 1e-9 || (f(1.0) - 1.0).abs() > 1e-9 {
        return Err(Error::BadReparametrization {
            detail: "must fix both endpoints of [0, 1]".into(),
        });
    }
    let mut prev = f(0.0);
    for i in 1..=grid {
        let u = i as f64 / grid as f64;
        let cur = f(u);
        if cur < prev - 1e-12 {
            return Err(Error::BadReparametrization {
                detail: format!("not monotone near u = {u}"),
            });
        }
        prev = cur;
    }
    Ok(())
}

/// Reparametrizes the sweep direction by an endpoint-fixing monotone map.
pub fn reparametrize_s<F>(surface: &Path2, f: F) -> Result<Path2>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let f: Arc<Reparam> = Arc::new(f);
    validate_reparam(&f, 128)?;
    let map = surface.map.clone();
    let f2 = f.clone();
    let mut out = Path2::from_closure(surface.chart_dim, move |t, s| map(t, f2(s)));
    let (sc, f2) = (surface.clone(), f.clone());
    out.d_t = Some(Arc::new(move |t, s| sc.d_t(t, f2(s))));
    let sc = surface.clone();
    out.d_s = Some(Arc::new(move |t, s| {
        let h = FD_VELOCITY_H;
        let df = (f(s + h) - f(s - h)) / (2.0 * h);
        sc.d_s(t, f(s)).into_iter().map(|x| x * df).collect()
    }));
    Ok(out)
}

/// Reparametrizes the path direction of every swept path at once.
pub fn reparametrize_t<F>(surface: &Path2, f: F) -> Result<Path2>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let f: Arc<Reparam> = Arc::new(f);
    validate_reparam(&f, 128)?;
    let map = surface.map.clone();
    let f2 = f.clone();
    let mut out = Path2::from_closure(surface.chart_dim, move |t, s| map(f2(t), s));
    let (sc, f2) = (surface.clone(), f.clone());
    out.d_s = Some(Arc::new(move |t, s| sc.d_s(f2(t), s)));
    let sc = surface.clone();
    out.d_t = Some(Arc::new(move |t, s| {
        let h = FD_VELOCITY_H;
        let df = (f(t + h) - f(t - h)) / (2.0 * h);
        sc.d_t(f(t), s).into_iter().map(|x| x * df).collect()
    }));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Surface families
// ---------------------------------------------------------------------------

type Map3 = dyn Fn(f64, f64, f64) -> Vec<f64> + Send + Sync;

/// A one-parameter family of surfaces `J(t, s, x)`.
#[derive(Clone)]
pub struct Path3 {
    pub chart_dim: usize,
    map: Arc<Map3>,
}

impl Path3 {
    pub fn from_closure<F>(chart_dim: usize, f: F) -> Self
    where
        F: Fn(f64, f64, f64) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            chart_dim,
            map: Arc::new(f),
        }
    }

    pub fn eval(&self, t: f64, s: f64, x: f64) -> Vec<f64> {
        (self.map)(t, s, x)
    }

    pub fn at_x(&self, x: f64) -> Path2 {
        let map = self.map.clone();
        Path2::from_closure(self.chart_dim, move |t, s| map(t, s, x))
    }

    pub fn d_t(&self, t: f64, s: f64, x: f64) -> Vec<f64> {
        let h = FD_VELOCITY_H;
        diff(&self.eval(t + h, s, x), &self.eval(t - h, s, x), h)
    }

    pub fn d_s(&self, t: f64, s: f64, x: f64) -> Vec<f64> {
        let h = FD_VELOCITY_H;
        diff(&self.eval(t, s + h, x), &self.eval(t, s - h, x), h)
    }

    pub fn d_x(&self, t: f64, s: f64, x: f64) -> Vec<f64> {
        let h = FD_VELOCITY_H;
        diff(&self.eval(t, s, x + h), &self.eval(t, s, x - h), h)
    }
}

fn diff(plus: &[f64], minus: &[f64], h: f64) -> Vec<f64> {
    plus.iter()
        .zip(minus)
        .map(|(a, b)| (a - b) / (2.0 * h))
        .collect()
}

// ---------------------------------------------------------------------------
// Builtin surfaces
// ---------------------------------------------------------------------------

/// Which part of the sweep a balloon surface covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepRange {
    Full,
    LowerHalf,
    UpperHalf,
}

impl SweepRange {
    fn profile(self, s: f64) -> f64 {
        match self {
            SweepRange::Full => warp(s),
            SweepRange::LowerHalf => 0.5 * warp(s),
            SweepRange::UpperHalf => 0.5 + 0.5 * warp(s),
        }
    }

    fn profile_prime(self, s: f64) -> f64 {
        match self {
            SweepRange::Full => warp_prime(s),
            SweepRange::LowerHalf | SweepRange::UpperHalf => 0.5 * warp_prime(s),
        }
    }
}

/// A based-loop sweep ("balloon"): grows a loop out of the basepoint at the
/// origin, bulging into extra axes on the way.  The swept loop at sweep
/// value `v` traces
///
/// `x0 = a v (cos(2πu) - 1)`, `x1 = a v sin(2πu)`,
/// `x_axis = amp v (1 - v) (1 - cos(2πu))` per bulge axis,
///
/// with `u = warp(t)`, so every swept path is a loop based at the origin and
/// all four edges sit.  Splitting the sweep into halves yields two exactly
/// stackable surfaces.
pub fn balloon(
    chart_dim: usize,
    a: f64,
    bulges: &[(usize, f64)],
    range: SweepRange,
) -> Path2 {
    assert!(chart_dim >= 2);
    assert!(bulges.iter().all(|&(axis, _)| axis >= 2 && axis < chart_dim));
    let bulges = bulges.to_vec();
    let b2 = bulges.clone();
    let point = move |t: f64, s: f64| {
        let u = warp(t);
        let v = range.profile(s);
        let phi = std::f64::consts::TAU * u;
        let mut p = vec![0.0; chart_dim];
        p[0] = a * v * (phi.cos() - 1.0);
        p[1] = a * v * phi.sin();
        for &(axis, amp) in &bulges {
            p[axis] = amp * v * (1.0 - v) * (1.0 - phi.cos());
        }
        p
    };
    let bulges = b2;
    let b3 = bulges.clone();
    Path2::from_closure(chart_dim, point)
        .with_d_t(move |t, s| {
            let u = warp(t);
            let du = warp_prime(t);
            let v = range.profile(s);
            let phi = std::f64::consts::TAU * u;
            let dphi = std::f64::consts::TAU * du;
            let mut p = vec![0.0; chart_dim];
            p[0] = -a * v * phi.sin() * dphi;
            p[1] = a * v * phi.cos() * dphi;
            for &(axis, amp) in &bulges {
                p[axis] = amp * v * (1.0 - v) * phi.sin() * dphi;
            }
            p
        })
        .with_d_s(move |t, s| {
            let u = warp(t);
            let v = range.profile(s);
            let dv = range.profile_prime(s);
            let phi = std::f64::consts::TAU * u;
            let mut p = vec![0.0; chart_dim];
            p[0] = a * dv * (phi.cos() - 1.0);
            p[1] = a * dv * phi.sin();
            for &(axis, amp) in &b3 {
                p[axis] = amp * (1.0 - 2.0 * v) * dv * (1.0 - phi.cos());
            }
            p
        })
}

/// Sphere sweep: a family of based loops covering the unit sphere once.
/// The swept path at sweep value `s` descends the `φ = 0` meridian from the
/// north pole to colatitude `Θ(s) = π warp(s)`, swings once around in
/// azimuth, and climbs back up the same meridian.  All four edges sit at
/// the north pole, and the surface covers the sphere with degree one.
/// An optional rotation matrix (given row-major) re-orients the sphere.
pub fn sphere_sweep(rotation: Option<[[f64; 3]; 3]>) -> Path2 {
    let rot = move |p: [f64; 3]| -> Vec<f64> {
        match rotation {
            None => p.to_vec(),
            Some(r) => (0..3)
                .map(|i| r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2])
                .collect(),
        }
    };
    // Colatitude/azimuth schedule over the three t-legs.
    let angles = |t: f64, s: f64| -> (f64, f64) {
        let theta_max = std::f64::consts::PI * warp(s);
        if t < 1.0 / 3.0 {
            (theta_max * warp(3.0 * t), 0.0)
        } else if t < 2.0 / 3.0 {
            (theta_max, std::f64::consts::TAU * warp(3.0 * t - 1.0))
        } else {
            (theta_max * (1.0 - warp(3.0 * t - 2.0)), 0.0)
        }
    };
    let angles_d = move |t: f64, s: f64| -> (f64, f64, f64, f64) {
        // (dθ/dt, dφ/dt, dθ/ds, dφ/ds)
        let theta_max = std::f64::consts::PI * warp(s);
        let dtheta_max = std::f64::consts::PI * warp_prime(s);
        if t < 1.0 / 3.0 {
            let u = warp(3.0 * t);
            (theta_max * warp_prime(3.0 * t) * 3.0, 0.0, dtheta_max * u, 0.0)
        } else if t < 2.0 / 3.0 {
            (
                0.0,
                std::f64::consts::TAU * warp_prime(3.0 * t - 1.0) * 3.0,
                dtheta_max,
                0.0,
            )
        } else {
            let u = 1.0 - warp(3.0 * t - 2.0);
            (
                -theta_max * warp_prime(3.0 * t - 2.0) * 3.0,
                0.0,
                dtheta_max * u,
                0.0,
            )
        }
    };
    let rot2 = rot;
    let ang2 = angles;
    Path2::from_closure(3, move |t, s| {
        let (theta, phi) = angles(t, s);
        rot([
            theta.sin() * phi.cos(),
            theta.sin() * phi.sin(),
            theta.cos(),
        ])
    })
    .with_d_t(move |t, s| {
        let (theta, phi) = ang2(t, s);
        let (dth, dph, _, _) = angles_d(t, s);
        rot2([
            theta.cos() * phi.cos() * dth - theta.sin() * phi.sin() * dph,
            theta.cos() * phi.sin() * dth + theta.sin() * phi.cos() * dph,
            -theta.sin() * dth,
        ])
    })
    .with_d_s(move |t, s| {
        let (theta, phi) = ang2(t, s);
        let (_, _, dth, dph) = angles_d(t, s);
        rot2([
            theta.cos() * phi.cos() * dth - theta.sin() * phi.sin() * dph,
            theta.cos() * phi.sin() * dth + theta.sin() * phi.cos() * dph,
            -theta.sin() * dth,
        ])
    })
}

/// Balloon family: the balloon surface with an interior deformation that
/// grows with the family parameter but vanishes on all four edges, leaving
/// every edge independent of `x`.
pub fn balloon_family(
    chart_dim: usize,
    a: f64,
    bulges: &[(usize, f64)],
    deform_axis: usize,
    deform_amp: f64,
) -> Path3 {
    assert!(deform_axis < chart_dim);
    let base = balloon(chart_dim, a, bulges, SweepRange::Full);
    Path3::from_closure(chart_dim, move |t, s, x| {
        let mut p = base.eval(t, s);
        let interior = (std::f64::consts::PI * warp(s)).sin()
            * (1.0 - (std::f64::consts::TAU * warp(t)).cos());
        p[deform_axis] += x * deform_amp * interior;
        p
    })
}

/// Control family: constant in the family parameter.
pub fn constant_family(surface: &Path2) -> Path3 {
    let map = surface.map.clone();
    Path3::from_closure(surface.chart_dim, move |t, s, _| map(t, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warp_sits_and_rises_monotonically() {
        assert_eq!(warp(0.0), 0.0);
        assert_eq!(warp(0.05), 0.0);
        assert_eq!(warp(SITTING_MARGIN), 0.0);
        assert_eq!(warp(1.0 - SITTING_MARGIN), 1.0);
        assert_eq!(warp(1.0), 1.0);
        let mut prev = 0.0;
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let v = warp(t);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
        assert!((warp(0.5) - 0.5).abs() < 1e-12, "odd symmetry about 1/2");
    }

    #[test]
    fn warp_derivative_matches_finite_difference() {
        for i in 1..40 {
            let t = i as f64 / 40.0;
            let h = 1e-6;
            let fd = (warp(t + h) - warp(t - h)) / (2.0 * h);
            assert!(
                (warp_prime(t) - fd).abs() < 1e-7,
                "warp' mismatch at t = {t}"
            );
        }
        assert_eq!(warp_prime(0.02), 0.0);
        assert_eq!(warp_prime(0.98), 0.0);
    }

    #[test]
    fn segment_sits_at_both_ends() {
        let seg = segment(vec![1.0, 2.0], vec![3.0, -1.0]);
        assert!(dist(&seg.eval(0.03), &[1.0, 2.0]) == 0.0);
        assert!(dist(&seg.eval(0.97), &[3.0, -1.0]) == 0.0);
        let v = seg.velocity(0.5);
        let fd_v = Path1::from_closure(2, {
            let m = seg.map.clone();
            move |t| m(t)
        })
        .velocity(0.5);
        assert!(dist(&v, &fd_v) < 1e-7);
    }

    #[test]
    fn circle_closes_and_velocity_is_consistent() {
        let loop1 = circle_loop(vec![0.5, 0.0, 0.0], (0, 1), 2.0, 1.0);
        assert!(loop1.is_loop());
        assert!(dist(&loop1.start(), &[2.5, 0.0, 0.0]) < 1e-15);
        for i in [7, 19, 31] {
            let t = i as f64 / 40.0;
            let stripped = Path1 {
                chart_dim: 3,
                map: loop1.map.clone(),
                velocity: None,
            };
            assert!(dist(&loop1.velocity(t), &stripped.velocity(t)) < 1e-6);
        }
    }

    #[test]
    fn concat_demands_matching_endpoints() {
        let a = segment(vec![0.0], vec![1.0]);
        let b = segment(vec![1.0], vec![3.0]);
        let c = segment(vec![2.0], vec![3.0]);
        let ab = concat1(&a, &b).unwrap();
        assert!(dist(&ab.eval(0.25), &a.eval(0.5)) < 1e-15);
        assert!(dist(&ab.eval(0.75), &b.eval(0.5)) < 1e-15);
        assert!(matches!(
            concat1(&a, &c),
            Err(Error::BoundaryMismatch { .. })
        ));
    }

    #[test]
    fn balloon_edges_are_based_at_the_origin() {
        let surf = balloon(3, 1.2, &[(2, 0.7)], SweepRange::Full);
        surf.check_edges_constant(16).unwrap();
        let origin = vec![0.0; 3];
        for i in 0..=10 {
            let s = i as f64 / 10.0;
            assert!(dist(&surf.eval(0.0, s), &origin) < 1e-15);
            assert!(dist(&surf.eval(1.0, s), &origin) < 1e-15);
            // Bottom path is the constant path.
            assert!(dist(&surf.eval(i as f64 / 10.0, 0.0), &origin) < 1e-15);
        }
        // Analytic partials agree with finite differences.
        for (t, s) in [(0.3, 0.4), (0.55, 0.7), (0.72, 0.5)] {
            let bare = Path2::from_closure(3, {
                let m = surf.map.clone();
                move |t, s| m(t, s)
            });
            assert!(dist(&surf.d_t(t, s), &bare.d_t(t, s)) < 1e-6);
            assert!(dist(&surf.d_s(t, s), &bare.d_s(t, s)) < 1e-6);
        }
    }

    #[test]
    fn balloon_halves_stack_exactly() {
        let lower = balloon(3, 1.2, &[(2, 0.7)], SweepRange::LowerHalf);
        let upper = balloon(3, 1.2, &[(2, 0.7)], SweepRange::UpperHalf);
        let stacked = vconcat2(&lower, &upper, 32).unwrap();
        stacked.check_edges_constant(16).unwrap();
        // The seam is the shared middle loop.
        for i in 0..=8 {
            let t = i as f64 / 8.0;
            assert!(dist(&stacked.eval(t, 0.5), &lower.eval(t, 1.0)) < 1e-15);
        }
    }

    #[test]
    fn sphere_sweep_lies_on_the_unit_sphere() {
        let surf = sphere_sweep(None);
        surf.check_edges_constant(16).unwrap();
        for i in 0..=20 {
            for j in 0..=20 {
                let (t, s) = (i as f64 / 20.0, j as f64 / 20.0);
                let p = surf.eval(t, s);
                let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((r - 1.0).abs() < 1e-13);
            }
        }
        // Bottom path sits at the north pole; edges too.
        for i in 0..=10 {
            assert!(dist(&surf.eval(i as f64 / 10.0, 0.0), &[0.0, 0.0, 1.0]) < 1e-13);
        }
        // Closed-form partials match finite differences away from the legs'
        // switching points.
        let bare = Path2::from_closure(3, {
            let m = surf.map.clone();
            move |t, s| m(t, s)
        });
        for (t, s) in [(0.15, 0.5), (0.5, 0.45), (0.85, 0.62), (0.5, 0.9)] {
            assert!(dist(&surf.d_t(t, s), &bare.d_t(t, s)) < 1e-6, "d_t at ({t},{s})");
            assert!(dist(&surf.d_s(t, s), &bare.d_s(t, s)) < 1e-6, "d_s at ({t},{s})");
        }
    }

    #[test]
    fn family_edges_do_not_move_with_the_parameter() {
        let family = balloon_family(3, 1.1, &[(2, 0.6)], 2, 0.5);
        for x in [-0.4, 0.0, 0.7] {
            let surf = family.at_x(x);
            surf.check_edges_constant(12).unwrap();
            for i in 0..=10 {
                let w = i as f64 / 10.0;
                // Bottom and top paths are x-independent.
                assert!(dist(&family.eval(w, 0.0, x), &family.eval(w, 0.0, 0.0)) < 1e-15);
                assert!(dist(&family.eval(w, 1.0, x), &family.eval(w, 1.0, 0.0)) < 1e-15);
                // And the family velocity vanishes along every edge.
                assert!(family.d_x(w, 0.0, x).iter().all(|c| c.abs() < 1e-9));
                assert!(family.d_x(w, 1.0, x).iter().all(|c| c.abs() < 1e-9));
                assert!(family.d_x(0.0, w, x).iter().all(|c| c.abs() < 1e-9));
                assert!(family.d_x(1.0, w, x).iter().all(|c| c.abs() < 1e-9));
            }
        }
    }

    #[test]
    fn reparametrization_validation() {
        let surf = balloon(3, 1.0, &[], SweepRange::Full);
        assert!(reparametrize_s(&surf, |s| s * s).is_ok());
        assert!(reparametrize_t(&surf, warp).is_ok());
        assert!(matches!(
            reparametrize_s(&surf, |s| 1.0 - s),
            Err(Error::BadReparametrization { .. })
        ));
        assert!(matches!(
            reparametrize_s(&surf, |s| (std::f64::consts::TAU * s).sin()),
            Err(Error::BadReparametrization { .. })
        ));
    }

    #[test]
    fn whisker_and_reverse_bookkeeping() {
        let seg = segment(vec![0.0, 0.0], vec![1.0, 2.0]);
        let w = whisker(&seg);
        for s in [0.0, 0.3, 1.0] {
            assert!(dist(&w.eval(0.4, s), &seg.eval(0.4)) < 1e-15);
            assert!(w.d_s(0.4, s).iter().all(|c| *c == 0.0));
        }
        let surf = balloon(3, 1.0, &[(2, 0.4)], SweepRange::Full);
        let rs = surf.reverse_s();
        assert!(dist(&rs.eval(0.3, 0.2), &surf.eval(0.3, 0.8)) < 1e-15);
        let expect: Vec<f64> = surf.d_s(0.3, 0.8).iter().map(|x| -x).collect();
        assert!(dist(&rs.d_s(0.3, 0.2), &expect) < 1e-12);
        let rt = surf.reverse_t();
        assert!(dist(&rt.eval(0.3, 0.2), &surf.eval(0.7, 0.2)) < 1e-15);
    }
}
