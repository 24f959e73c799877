//! N-function catalog and Orlicz-space primitives.
//!
//! An N-function `G` is carried through its derivative `g = G'`. The catalog
//! covers the families
//!
//! - `power`: `g(t) = t^p`,
//! - `power_log`: `g(t) = t^a ln(b t + c)`,
//! - `double_power`: `g(t) = a t^p + b t^q`,
//!
//! together with sums, products, compositions and positive scalings of
//! catalog entries. Each value holds its Lieberman constants `(δ₀, g₀)`
//! bounding `t g'(t)/g(t)`, assigned by the algebra rules:
//! product adds the constants, composition multiplies them, and positive
//! linear combinations take the conservative `(min δ₀, max g₀)` envelope.

use crate::mesh::Mesh;
use crate::scalar::{cst, Scalar};
use crate::{Error, Result};

/// Primitive evaluation strategy for `G(t) = ∫₀ᵗ g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrimitiveMode {
    ClosedForm,
    Quadrature,
}

/// Expression tree for the derivative `g`.
#[derive(Clone, Debug)]
enum GExpr<S> {
    /// `t^p`
    Power { p: S },
    /// `t^a ln(b t + c)`
    PowerLog { a: S, b: S, c: S },
    /// `a t^p + b t^q`
    DoublePower { a: S, b: S, p: S, q: S },
    Sum(Box<GExpr<S>>, Box<GExpr<S>>),
    Product(Box<GExpr<S>>, Box<GExpr<S>>),
    Composition(Box<GExpr<S>>, Box<GExpr<S>>),
    Scale { coeff: S, inner: Box<GExpr<S>> },
    /// `g(K t)/g(K)` (normalization of Remark-type rescaling)
    Normalized { k: S, gk: S, inner: Box<GExpr<S>> },
}

impl<S: Scalar> GExpr<S> {
    fn g(&self, t: S) -> S {
        match self {
            GExpr::Power { p } => t.powf(*p),
            GExpr::PowerLog { a, b, c } => t.powf(*a) * ln_affine(*b, *c, t),
            GExpr::DoublePower { a, b, p, q } => *a * t.powf(*p) + *b * t.powf(*q),
            GExpr::Sum(f1, f2) => f1.g(t) + f2.g(t),
            GExpr::Product(f1, f2) => f1.g(t) * f2.g(t),
            GExpr::Composition(f1, f2) => f1.g(f2.g(t)),
            GExpr::Scale { coeff, inner } => *coeff * inner.g(t),
            GExpr::Normalized { k, gk, inner } => inner.g(*k * t) / *gk,
        }
    }

    fn g_prime(&self, t: S) -> S {
        match self {
            GExpr::Power { p } => *p * t.powf(*p - S::one()),
            GExpr::PowerLog { a, b, c } => {
                let bt_c = *b * t + *c;
                *a * t.powf(*a - S::one()) * ln_affine(*b, *c, t) + t.powf(*a) * *b / bt_c
            }
            GExpr::DoublePower { a, b, p, q } => {
                *a * *p * t.powf(*p - S::one()) + *b * *q * t.powf(*q - S::one())
            }
            GExpr::Sum(f1, f2) => f1.g_prime(t) + f2.g_prime(t),
            GExpr::Product(f1, f2) => f1.g_prime(t) * f2.g(t) + f1.g(t) * f2.g_prime(t),
            GExpr::Composition(f1, f2) => f1.g_prime(f2.g(t)) * f2.g_prime(t),
            GExpr::Scale { coeff, inner } => *coeff * inner.g_prime(t),
            GExpr::Normalized { k, gk, inner } => *k * inner.g_prime(*k * t) / *gk,
        }
    }

    /// Closed-form primitive, when the family admits one.
    fn big_g_closed(&self, t: S) -> Option<S> {
        match self {
            GExpr::Power { p } => Some(t.powf(*p + S::one()) / (*p + S::one())),
            GExpr::DoublePower { a, b, p, q } => Some(
                *a * t.powf(*p + S::one()) / (*p + S::one())
                    + *b * t.powf(*q + S::one()) / (*q + S::one()),
            ),
            GExpr::Scale { coeff, inner } => inner.big_g_closed(t).map(|v| *coeff * v),
            GExpr::Sum(f1, f2) => match (f1.big_g_closed(t), f2.big_g_closed(t)) {
                (Some(v1), Some(v2)) => Some(v1 + v2),
                _ => None,
            },
            _ => None,
        }
    }
}

/// An N-function `G` with derivative `g` and Lieberman constants.
#[derive(Clone, Debug)]
pub struct NFunction<S> {
    expr: GExpr<S>,
    delta0: S,
    g0: S,
    primitive_mode: PrimitiveMode,
    memo: PrimitiveMemo<S>,
}

/// Lazily built cumulative-integral table for quadrature-mode primitives.
///
/// `cum[k] = G(t_min · r^k)` on a geometric node ladder; a `big_g` call then
/// only integrates the short partial cell above the nearest node instead of
/// the whole of `[0, t]`. Cloning yields a fresh (empty) table so the cache
/// never aliases across instances.
struct PrimitiveMemo<S> {
    cum: std::sync::Mutex<Vec<S>>,
}

/// Lowest table node; arguments below are integrated directly.
const MEMO_T_MIN: f64 = 1e-8;
/// `ln` of the geometric node ratio (`2^{1/16}`).
const MEMO_LN_RATIO: f64 = std::f64::consts::LN_2 / 16.0;

impl<S> Default for PrimitiveMemo<S> {
    fn default() -> Self {
        Self {
            cum: std::sync::Mutex::new(Vec::new()),
        }
    }
}

impl<S> Clone for PrimitiveMemo<S> {
    fn clone(&self) -> Self {
        Self::default()
    }
}

impl<S> std::fmt::Debug for PrimitiveMemo<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("PrimitiveMemo")
    }
}

/// Combination operations closed under condition (H1).
#[derive(Clone, Copy, Debug)]
pub enum CombineOp<S> {
    Sum,
    Product,
    Composition,
    PositiveScale(S),
}

fn require_positive<S: Scalar>(name: &str, v: S) -> Result<()> {
    if v > S::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: name.into(),
            reason: format!("must be positive and finite, got {v}"),
        })
    }
}

impl<S: Scalar> NFunction<S> {
    /// `g(t) = t^p`, with `δ₀ = g₀ = p`.
    pub fn power(p: S) -> Result<Self> {
        require_positive("p", p)?;
        Ok(Self {
            expr: GExpr::Power { p },
            delta0: p,
            g0: p,
            primitive_mode: PrimitiveMode::ClosedForm,
            memo: PrimitiveMemo::default(),
        })
    }

    /// `g(t) = t^a ln(b t + c)`, with `δ₀ = a`, `g₀ = a + 1`.
    ///
    /// `c ≥ 1` is required so that `g ≥ 0` near the origin; for `c ≠ 1` the
    /// assigned constants are a conservative envelope.
    pub fn power_log(a: S, b: S, c: S) -> Result<Self> {
        require_positive("a", a)?;
        require_positive("b", b)?;
        require_positive("c", c)?;
        if c < S::one() {
            return Err(Error::InvalidParameter {
                name: "c".into(),
                reason: format!("must be >= 1 so that g stays nonnegative, got {c}"),
            });
        }
        Ok(Self {
            expr: GExpr::PowerLog { a, b, c },
            delta0: a,
            g0: a + S::one(),
            primitive_mode: PrimitiveMode::Quadrature,
            memo: PrimitiveMemo::default(),
        })
    }

    /// `g(t) = a t^p + b t^q`, with `δ₀ = min{p,q}`, `g₀ = max{p,q}`.
    pub fn double_power(a: S, b: S, p: S, q: S) -> Result<Self> {
        require_positive("a", a)?;
        require_positive("b", b)?;
        require_positive("p", p)?;
        require_positive("q", q)?;
        Ok(Self {
            expr: GExpr::DoublePower { a, b, p, q },
            delta0: p.min(q),
            g0: p.max(q),
            primitive_mode: PrimitiveMode::ClosedForm,
            memo: PrimitiveMemo::default(),
        })
    }

    /// Catalog constructor keyed by name, for config files.
    pub fn from_catalog(kind: &str, params: &[(&str, S)]) -> Result<Self> {
        let get = |name: &str| -> Result<S> {
            params
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::InvalidParameter {
                    name: name.into(),
                    reason: "missing".into(),
                })
        };
        match kind {
            "power" => Self::power(get("p")?),
            "power_log" => Self::power_log(get("a")?, get("b")?, get("c")?),
            "double_power" => Self::double_power(get("a")?, get("b")?, get("p")?, get("q")?),
            other => Err(Error::UnknownKind(other.into())),
        }
    }

    /// Combine two N-functions; the constants follow the (H1) closure rules.
    pub fn combine(op: CombineOp<S>, f1: &Self, f2: &Self) -> Result<Self> {
        match op {
            CombineOp::Sum => Ok(Self {
                expr: GExpr::Sum(Box::new(f1.expr.clone()), Box::new(f2.expr.clone())),
                delta0: f1.delta0.min(f2.delta0),
                g0: f1.g0.max(f2.g0),
                primitive_mode: PrimitiveMode::Quadrature,
                memo: PrimitiveMemo::default(),
            }),
            CombineOp::Product => Ok(Self {
                expr: GExpr::Product(Box::new(f1.expr.clone()), Box::new(f2.expr.clone())),
                delta0: f1.delta0 + f2.delta0,
                g0: f1.g0 + f2.g0,
                primitive_mode: PrimitiveMode::Quadrature,
                memo: PrimitiveMemo::default(),
            }),
            CombineOp::Composition => Ok(Self {
                expr: GExpr::Composition(Box::new(f1.expr.clone()), Box::new(f2.expr.clone())),
                delta0: f1.delta0 * f2.delta0,
                g0: f1.g0 * f2.g0,
                primitive_mode: PrimitiveMode::Quadrature,
                memo: PrimitiveMemo::default(),
            }),
            CombineOp::PositiveScale(coeff) => {
                require_positive("coeff", coeff)?;
                Ok(Self {
                    expr: GExpr::Scale {
                        coeff,
                        inner: Box::new(f1.expr.clone()),
                    },
                    delta0: f1.delta0,
                    g0: f1.g0,
                    primitive_mode: f1.primitive_mode,
                    memo: PrimitiveMemo::default(),
                })
            }
        }
    }

    /// `g*(t) = g(K t)/g(K)`; same Lieberman constants as `g`.
    pub fn normalized(&self, k: S) -> Result<Self> {
        require_positive("K", k)?;
        let gk = self.g(k);
        Ok(Self {
            expr: GExpr::Normalized {
                k,
                gk,
                inner: Box::new(self.expr.clone()),
            },
            delta0: self.delta0,
            g0: self.g0,
            primitive_mode: PrimitiveMode::Quadrature,
            memo: PrimitiveMemo::default(),
        })
    }

    pub fn delta0(&self) -> S {
        self.delta0
    }

    pub fn g0(&self) -> S {
        self.g0
    }

    pub fn primitive_mode(&self) -> PrimitiveMode {
        self.primitive_mode
    }

    /// `g(t)`.
    pub fn g(&self, t: S) -> S {
        if t == S::zero() {
            return S::zero();
        }
        self.expr.g(t)
    }

    /// `g'(t)` for `t > 0`.
    pub fn g_prime(&self, t: S) -> S {
        self.expr.g_prime(t)
    }

    /// `G(t) = ∫₀ᵗ g(s) ds`, by closed form when available, else adaptive
    /// Simpson quadrature with absolute tolerance `1e-12`.
    pub fn big_g(&self, t: S) -> S {
        if t == S::zero() {
            return S::zero();
        }
        match self.primitive_mode {
            PrimitiveMode::ClosedForm => self
                .expr
                .big_g_closed(t)
                .expect("closed-form mode implies a closed-form primitive"),
            PrimitiveMode::Quadrature => self.big_g_quadrature(t),
        }
    }

    /// Quadrature evaluation of `G`, regardless of the declared mode.
    ///
    /// Uses the memoized node ladder so that repeated evaluations (every
    /// triangle of every line-search energy) integrate only a short partial
    /// cell. Tolerances are relative to the crude bound `t g(t)` so that
    /// large arguments do not force the adaptive rule to its maximal depth.
    pub fn big_g_quadrature(&self, t: S) -> S {
        let t_min = cst::<S>(MEMO_T_MIN);
        let scale = S::one().max(t * self.g(t));
        if t <= t_min {
            return adaptive_simpson(|s| self.g(s), S::zero(), t, cst::<S>(1e-14) * scale);
        }
        let ln_ratio = cst::<S>(MEMO_LN_RATIO);
        let k = ((t / t_min).ln() / ln_ratio)
            .to_f64()
            .expect("finite node index")
            .floor() as usize;
        let node = t_min * (ln_ratio * cst::<S>(k as f64)).exp();
        let base = self.memo_cum(k, t_min, ln_ratio);
        base + adaptive_simpson(|s| self.g(s), node, t, cst::<S>(1e-14) * scale)
    }

    /// `G` at the `k`-th table node, extending the cumulative table on demand.
    fn memo_cum(&self, k: usize, t_min: S, ln_ratio: S) -> S {
        let mut cum = self.memo.cum.lock().expect("primitive table lock");
        while cum.len() <= k {
            let i = cum.len();
            let lo = if i == 0 {
                S::zero()
            } else {
                t_min * (ln_ratio * cst::<S>((i - 1) as f64)).exp()
            };
            let hi = t_min * (ln_ratio * cst::<S>(i as f64)).exp();
            let prev = if i == 0 { S::zero() } else { cum[i - 1] };
            let tol = cst::<S>(1e-15) * (S::one() + hi * self.g(hi));
            let inc = adaptive_simpson(|s| self.g(s), lo, hi, tol);
            cum.push(prev + inc);
        }
        cum[k]
    }

    /// Regularized flux coefficient `h_ε(t) = g(√(t²+ε²)) / √(t²+ε²)`.
    ///
    /// At `ε = 0` and `t` below `1e-300` the coefficient is taken as zero
    /// (valid for post-hoc diagnostics; the solver always keeps `ε > 0`).
    pub fn flux_coeff(&self, t: S, epsilon: S) -> S {
        let r = (t * t + epsilon * epsilon).sqrt();
        if r < cst(1e-300) {
            return S::zero();
        }
        self.g(r) / r
    }
}

/// `ln(b t + c)` for `c ≥ 1`, accurate for `b t` far below machine epsilon
/// (plain `ln(1 + bt)` rounds to zero there).
fn ln_affine<S: Scalar>(b: S, c: S, t: S) -> S {
    c.ln() + (b * t / c).ln_1p()
}

fn simpson<S: Scalar, F: Fn(S) -> S>(f: &F, a: S, b: S) -> S {
    let two = cst::<S>(2.0);
    let mid = (a + b) / two;
    (b - a) / cst(6.0) * (f(a) + cst::<S>(4.0) * f(mid) + f(b))
}

fn adaptive_simpson_rec<S: Scalar, F: Fn(S) -> S>(
    f: &F,
    a: S,
    b: S,
    whole: S,
    tol: S,
    depth: usize,
) -> S {
    let mid = (a + b) / cst(2.0);
    let left = simpson(f, a, mid);
    let right = simpson(f, mid, b);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= cst::<S>(15.0) * tol {
        return left + right + err / cst(15.0);
    }
    adaptive_simpson_rec(f, a, mid, left, tol / cst(2.0), depth - 1)
        + adaptive_simpson_rec(f, mid, b, right, tol / cst(2.0), depth - 1)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<S: Scalar, F: Fn(S) -> S>(f: F, a: S, b: S, tol: S) -> S {
    if a == b {
        return S::zero();
    }
    let whole = simpson(&f, a, b);
    adaptive_simpson_rec(&f, a, b, whole, tol, 48)
}

/// Empirical `(min, max)` of `t g'(t)/g(t)` over a positive grid.
pub fn lieberman_estimate<S: Scalar>(f: &NFunction<S>, t_grid: &[S]) -> Result<(S, S)> {
    if t_grid.is_empty() {
        return Err(Error::Domain("empty Lieberman grid".into()));
    }
    let mut lo = S::infinity();
    let mut hi = S::neg_infinity();
    for &t in t_grid {
        if !(t > S::zero()) || !t.is_finite() {
            return Err(Error::Domain(format!("grid point {t} is not positive")));
        }
        let gt = f.g(t);
        if gt == S::zero() {
            return Err(Error::Domain(format!("g({t}) = 0, ratio undefined")));
        }
        let ratio = t * f.g_prime(t) / gt;
        if !ratio.is_finite() {
            return Err(Error::Domain(format!("ratio not finite at t = {t}")));
        }
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok((lo, hi))
}

/// Log-spaced grid on `[lo, hi]`, the documented validation range being
/// `[1e-6, 1e6]`.
pub fn log_grid<S: Scalar>(lo: S, hi: S, n: usize) -> Vec<S> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            let f = cst::<S>(i as f64) / cst((n - 1) as f64);
            (llo + (lhi - llo) * f).exp()
        })
        .collect()
}

/// Modular `ρ_G(h) = ∫ G(|h|)` of a per-triangle magnitude field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModularValue<S>(pub S);

/// Modular of a per-triangle magnitude field over a mesh, by one-point
/// (midpoint) quadrature: exact when `|h|` is constant per triangle.
pub fn modular<S: Scalar>(
    m: &Mesh<S>,
    tri_abs: &[S],
    f: &NFunction<S>,
) -> Result<ModularValue<S>> {
    if tri_abs.len() != m.num_triangles() {
        return Err(Error::Shape(format!(
            "magnitude field has {} entries, mesh has {} triangles",
            tri_abs.len(),
            m.num_triangles()
        )));
    }
    let mut total = S::zero();
    for (t, &h) in tri_abs.iter().enumerate() {
        if !h.is_finite() {
            return Err(Error::Domain(format!("non-finite magnitude at triangle {t}")));
        }
        total += m.triangle_area(t) * f.big_g(h.abs());
    }
    Ok(ModularValue(total))
}

/// Luxemburg norm `inf{ t > 0 : ρ_G(h/t) ≤ 1 }` of a per-triangle magnitude
/// field, by bracketing bisection to relative tolerance `1e-10`.
pub fn luxemburg_norm<S: Scalar>(m: &Mesh<S>, tri_abs: &[S], f: &NFunction<S>) -> Result<S> {
    let sup = tri_abs
        .iter()
        .try_fold(S::zero(), |acc, &h| {
            if h.is_finite() {
                Ok(acc.max(h.abs()))
            } else {
                Err(Error::Domain("non-finite magnitude".into()))
            }
        })?;
    if sup == S::zero() {
        return Ok(S::zero());
    }
    let rho = |t: S| -> Result<S> {
        let scaled: Vec<S> = tri_abs.iter().map(|&h| h / t).collect();
        modular(m, &scaled, f).map(|v| v.0)
    };
    // Bracket rho(t) = 1: rho is nonincreasing in t.
    let mut t_hi = sup;
    while rho(t_hi)? > S::one() {
        t_hi = t_hi * cst(2.0);
    }
    let mut t_lo = t_hi;
    while rho(t_lo)? <= S::one() && t_lo > cst(1e-300) {
        t_lo = t_lo / cst(2.0);
    }
    let tol = cst::<S>(1e-10);
    while (t_hi - t_lo) > tol * t_hi {
        let mid = (t_lo + t_hi) / cst(2.0);
        if rho(mid)? <= S::one() {
            t_hi = mid;
        } else {
            t_lo = mid;
        }
    }
    Ok(t_hi)
}
