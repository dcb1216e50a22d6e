//! Finite-size kernel machinery: the ingredients of Theorems 1.1 and 1.2
//! and everything assembled from them.
//!
//! All ingredients are contour integrals of Laurent-type integrands over
//! the contour enclosing `{0, a}` (possibly nested pairs of such contours
//! coupled by a Cauchy factor). They are described once as [`LaurentExpr`]
//! data and evaluated through an [`Evaluator`] backend:
//!
//! * [`ResidueEval`] computes residue sums in the coefficient field — with
//!   `Rat` this is the exact oracle, every value a closed-form rational;
//! * [`QuadEval`] runs the node-doubling trapezoid rule on actual circles,
//!   an independent numerical route.
//!
//! The resolvent inner products of the kernels look infinite but are not:
//! the kernel `K_n(j,k)` vanishes for `k > n` (its w-integrand becomes
//! entire), so on the window `j,k >= n-rho+1` it has column support of size
//! `rho`, and the paired `B`-type vectors have finite support for the same
//! reason. Every inner product here is therefore an exactly finite sum plus
//! a rho x rho solve; the support bounds are certified at runtime by
//! checking the first entries past them.

use crate::contour::laurent::{CoeffToF64, ExactDouble, LaurentExpr, Pole};
use crate::contour::{self, integrate_circle, integrate_double, ContourSpec, QuadOpts};
use crate::error::{Error, Result};
use crate::linalg;
use crate::region::{in_blacks, DiamondParams};
use crate::scalar::{neg_one_pow, Coeff, Gaussian, Pivot};
use num_traits::{One, Zero};
use crate::{Complexd, Rat};

/// A nested double contour integral in separated form.
pub struct DoubleSpec<V> {
    pub inner: LaurentExpr<V>,
    pub outer: LaurentExpr<V>,
    /// Sign of the Cauchy kernel `sign/(x_inner - y_outer)`.
    pub sign: i64,
    /// True when the inner variable's contour encloses the outer one
    /// (contour of the form Gamma_{0,a,y}).
    pub inner_encloses_outer: bool,
}

/// Backend evaluating the contour integrals in some scalar `V`.
pub trait Evaluator {
    type V: Coeff + Pivot + CoeffToF64;

    /// Whether values are exact (affects support certificates).
    const EXACT: bool;

    fn weight(&self) -> Self::V;
    fn weight_f64(&self) -> f64;
    /// `(1/2 pi i) \oint_{Gamma_{0,a}} e(z) dz`.
    fn single(&self, e: &LaurentExpr<Self::V>) -> Result<Self::V>;
    fn double(&self, d: &DoubleSpec<Self::V>) -> Result<Self::V>;

    fn is_negligible(&self, v: &Self::V) -> bool;
}

/// Exact (or fast approximate) residue backend.
#[derive(Clone, Debug)]
pub struct ResidueEval<T> {
    a: T,
    a_f64: f64,
}

impl ResidueEval<Rat> {
    pub fn new(a: Rat) -> Self {
        let a_f64 = crate::scalar::rat_to_f64(&a);
        ResidueEval { a, a_f64 }
    }
}

impl ResidueEval<f64> {
    pub fn new_f64(a: f64) -> Self {
        ResidueEval { a, a_f64: a }
    }
}

impl<T: Coeff + Pivot + CoeffToF64> Evaluator for ResidueEval<T> {
    type V = T;
    const EXACT: bool = true;

    fn weight(&self) -> T {
        self.a.clone()
    }

    fn weight_f64(&self) -> f64 {
        self.a_f64
    }

    fn single(&self, e: &LaurentExpr<T>) -> Result<T> {
        Ok(e.integral(&[Pole::Origin, Pole::A]))
    }

    fn double(&self, d: &DoubleSpec<T>) -> Result<T> {
        Ok(ExactDouble {
            inner: &d.inner,
            outer: &d.outer,
            sign: d.sign,
            inner_encloses_outer: d.inner_encloses_outer,
        }
        .eval())
    }

    fn is_negligible(&self, v: &T) -> bool {
        if std::mem::size_of::<T>() == std::mem::size_of::<f64>() {
            v.to_f64().abs() < 1e-9
        } else {
            v.is_zero()
        }
    }
}

/// Trapezoid-quadrature backend on the Gamma_{0,a} circle pair.
#[derive(Clone, Debug)]
pub struct QuadEval {
    a: f64,
    opts: QuadOpts,
}

impl QuadEval {
    pub fn new(a: f64, tol: f64) -> Self {
        QuadEval {
            a,
            opts: QuadOpts::with_tol(tol),
        }
    }

    fn realify(&self, v: Complexd, err: f64) -> Result<f64> {
        let allow = (1e-8f64).max(err * 100.0).max(1e-8 * v.re.abs());
        if v.im.abs() > allow {
            return Err(Error::NonFinite("imaginary residue in a real kernel value"));
        }
        Ok(v.re)
    }
}

impl Evaluator for QuadEval {
    type V = f64;
    const EXACT: bool = false;

    fn weight(&self) -> f64 {
        self.a
    }

    fn weight_f64(&self) -> f64 {
        self.a
    }

    fn single(&self, e: &LaurentExpr<f64>) -> Result<f64> {
        let q = integrate_circle(
            |z| e.eval_complexd(self.a, z),
            &contour::gamma_0a(self.a),
            &self.opts,
        )?;
        self.realify(q.value, q.est_error)
    }

    fn double(&self, d: &DoubleSpec<f64>) -> Result<f64> {
        let small = ContourSpec::Circle(contour::gamma_0a(self.a));
        let big = ContourSpec::Circle(contour::gamma_0a_outer(self.a));
        let (ci, co) = if d.inner_encloses_outer {
            (big, small)
        } else {
            (small, big)
        };
        let q = integrate_double(
            |z| d.inner.eval_complexd(self.a, z),
            |w| d.outer.eval_complexd(self.a, w),
            &ci,
            &co,
            d.sign as f64,
            &self.opts,
        )?;
        self.realify(q.value, q.est_error)
    }

    fn is_negligible(&self, v: &f64) -> bool {
        v.abs() < 1e-9
    }
}

/// Which of the two printed decompositions of `a`/`b` to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    /// Double integral with the v-contour enclosing the u-contour.
    First,
    /// Contours swapped, plus the single-integral correction.
    Second,
}

fn split(j: i64) -> (i64, i64) {
    (j.div_euclid(2), j.rem_euclid(2))
}

/// Precomputed rho x rho block of `I - K_n` on the column support
/// `S = {n-rho+1, ..., n}` of the resolvent window.
pub struct Resolvent<V> {
    pub s_lo: i64,
    pub s_hi: i64,
    i_minus_k_ss: Vec<Vec<V>>,
    /// Cached `K_n(k, l)` for `k` in `[s_lo, cache_hi]`, `l` in `S`.
    k_rows: Vec<Vec<V>>,
    cache_hi: i64,
}

/// Eynard-Mehta data: inverse of `A = (psi~_{0,2n+1}(i-m-1, j-m-1))`.
pub struct EmData<V> {
    a_inv: Vec<Vec<V>>,
}

/// The finite-size kernel engine for one parameter set and backend.
pub struct FiniteKernel<E: Evaluator> {
    pub params: DiamondParams,
    pub n: i64,
    pub m: i64,
    pub rho: i64,
    ev: E,
    resolvent: Resolvent<E::V>,
    em: EmData<E::V>,
}

/// Exact kernel engine over big rationals.
pub type ExactKernel = FiniteKernel<ResidueEval<Rat>>;
/// Quadrature kernel engine.
pub type QuadKernel = FiniteKernel<QuadEval>;

impl ExactKernel {
    pub fn exact(params: &DiamondParams) -> Result<Self> {
        let a = params.a_rational()?;
        FiniteKernel::with_evaluator(params, ResidueEval::new(a))
    }
}

impl QuadKernel {
    pub fn quadrature(params: &DiamondParams, tol: f64) -> Result<Self> {
        FiniteKernel::with_evaluator(params, QuadEval::new(params.a_value(), tol))
    }
}

impl<E: Evaluator> FiniteKernel<E> {
    pub fn with_evaluator(params: &DiamondParams, ev: E) -> Result<Self> {
        let (n, m, rho) = (params.n, params.m(), params.rho);
        let mut kernel = FiniteKernel {
            params: params.clone(),
            n,
            m,
            rho,
            ev,
            resolvent: Resolvent {
                s_lo: 2 * m + 1,
                s_hi: n,
                i_minus_k_ss: Vec::new(),
                k_rows: Vec::new(),
                cache_hi: 2 * n + 2 * m + 4,
            },
            em: EmData { a_inv: Vec::new() },
        };
        kernel.build_resolvent()?;
        kernel.build_em()?;
        Ok(kernel)
    }

    fn expr(&self, c: E::V, p: i64, q: i64, r: i64) -> LaurentExpr<E::V> {
        LaurentExpr::term(self.ev.weight(), c, p, q, r)
    }

    fn one_expr(&self, p: i64, q: i64, r: i64) -> LaurentExpr<E::V> {
        self.expr(E::V::one(), p, q, r)
    }

    pub fn evaluator(&self) -> &E {
        &self.ev
    }

    // ----- single-contour ingredients -------------------------------------

    /// `psi_{j1,j2}(x,y)` of Eq. (K12), general line parities.
    pub fn psi(&self, j1: i64, j2: i64, x: i64, y: i64) -> Result<E::V> {
        let (r1, e1) = split(j1);
        let (s1, e2) = split(j2);
        let d = s1 - r1;
        let e = e2 - e1;
        self.ev
            .single(&self.one_expr(d, -(d + e), x - y - 1 + d + e))
    }

    /// `psi` with the strict time-order indicator `1_{j1 < j2}`.
    pub fn psi_tilde(&self, j1: i64, j2: i64, x: i64, y: i64) -> Result<E::V> {
        if j1 < j2 {
            self.psi(j1, j2, x, y)
        } else {
            Ok(E::V::zero())
        }
    }

    /// The four-term combination that collapses the interior case of the
    /// inverse-Kasteleyn identity; identically zero for `r < s`.
    pub fn psi_four_term(&self, r: i64, s: i64, x1: i64, x2: i64) -> Result<E::V> {
        let a = self.ev.weight();
        let t1 = self.psi_tilde(2 * r, 2 * s + 1, x1, x2)?;
        let t2 = self.psi_tilde(2 * r, 2 * s + 1, x1, x2 + 1)?;
        let t3 = self.psi_tilde(2 * r, 2 * s + 3, x1, x2 + 1)?;
        let t4 = self.psi_tilde(2 * r, 2 * s + 3, x1, x2 + 2)?;
        Ok(a.clone() * t1 + t2 - t3 + a * t4)
    }

    /// `S(j1, x; j2, y)` of Eq. (K12), including its `(-1)^{x-y}` prefactor.
    pub fn s_func(&self, j1: i64, x: i64, j2: i64, y: i64) -> Result<E::V> {
        let n = self.n;
        let m = self.m;
        let (r, e1) = split(j1);
        let (s, e2) = split(j2);
        let inner = self.one_expr(-r, -(n - r + 1 - e1), x - m - 1 + (n - r + 1 - e1));
        let outer = self.one_expr(s, n - s + 1 - e2, m - y - (n - s + 1 - e2));
        let d = self.ev.double(&DoubleSpec {
            inner,
            outer,
            sign: 1,
            inner_encloses_outer: true,
        })?;
        Ok(neg_one_pow::<E::V>(x - y) * d)
    }

    /// Resolvent kernel `K_n(j,k)` of Eq. (oneAzt).
    pub fn k_n(&self, j: i64, k: i64) -> Result<E::V> {
        let n = self.n;
        let inner = self.one_expr(-n, -(n + 1), n - j);
        let outer = self.one_expr(n, n + 1, k - n - 1);
        let d = self.ev.double(&DoubleSpec {
            inner,
            outer,
            sign: 1,
            inner_encloses_outer: true,
        })?;
        Ok(neg_one_pow::<E::V>(j + k) * d)
    }

    /// `A_{xi1,eta1}(k)` of Eq. (oneAzt): double integral minus the
    /// single-integral correction.
    pub fn a_cap(&self, xi1: i64, eta1: i64, k: i64) -> Result<E::V> {
        let n = self.n;
        let inner = self.one_expr(-n, -(n + 1), n - k);
        let outer = self.one_expr((eta1 - 1) / 2, n - (eta1 + 1) / 2, xi1 / 2 - n);
        let d = self.ev.double(&DoubleSpec {
            inner,
            outer,
            sign: 1,
            inner_encloses_outer: true,
        })?;
        let single = self.ev.single(&self.one_expr(
            -(n - (eta1 - 1) / 2),
            -(eta1 + 3) / 2,
            xi1 / 2 - k,
        ))?;
        Ok(neg_one_pow::<E::V>(k) * (d - single))
    }

    /// `B_{xi2,eta2}(k)` of Eq. (oneAzt): double integral plus the
    /// single-integral correction; vanishes for `k > max(n, xi2/2)`.
    pub fn b_cap(&self, xi2: i64, eta2: i64, k: i64) -> Result<E::V> {
        let n = self.n;
        let inner = self.one_expr(-(eta2 + 1) / 2, -(n - (eta2 - 1) / 2), n - xi2 / 2);
        let outer = self.one_expr(n, n + 1, k - n - 1);
        let d = self.ev.double(&DoubleSpec {
            inner,
            outer,
            sign: -1,
            inner_encloses_outer: true,
        })?;
        let single = self.ev.single(&self.one_expr(
            n - (eta2 + 1) / 2,
            (eta2 + 1) / 2,
            k - 1 - xi2 / 2,
        ))?;
        Ok(neg_one_pow::<E::V>(k) * (d + single))
    }

    pub fn b_cap_support_hi(&self, xi2: i64) -> i64 {
        self.n.max(xi2.div_euclid(2))
    }

    /// `a_{x, j}(k)` of Eq. (K12), either printed form.
    pub fn a_small(&self, x: i64, j: i64, k: i64, form: Form) -> Result<E::V> {
        let n = self.n;
        let m = self.m;
        let (s, e) = split(j);
        let p_v = self.one_expr(s, n - s + 1 - e, x + m - (n - s + 1 - e));
        let p_u = self.one_expr(-n, -(n + 1), n - k);
        let pref = neg_one_pow::<E::V>(k - x);
        match form {
            Form::First => {
                // kernel 1/(u-v) = -1/(v-u); v encloses u.
                let d = self.ev.double(&DoubleSpec {
                    inner: p_v,
                    outer: p_u,
                    sign: -1,
                    inner_encloses_outer: true,
                })?;
                Ok(pref * d)
            }
            Form::Second => {
                let d = self.ev.double(&DoubleSpec {
                    inner: p_u,
                    outer: p_v,
                    sign: 1,
                    inner_encloses_outer: true,
                })?;
                let single = self.ev.single(&self.one_expr(
                    s - n,
                    -(s + e),
                    x + m - k - 1 + s + e,
                ))?;
                Ok(pref * (d - single))
            }
        }
    }

    /// `b_{y, j}(l)` of Eq. (K12), either printed form; vanishes for
    /// `l > max(n, r+y+m+e)` where `j = 2r+e`.
    pub fn b_small(&self, y: i64, j: i64, l: i64, form: Form) -> Result<E::V> {
        let n = self.n;
        let m = self.m;
        let (r, e) = split(j);
        let p_v = self.one_expr(n, n + 1, l - n - 1);
        let p_u = self.one_expr(-r, -(n - r + 1 - e), n - r - e - y - m);
        let pref = neg_one_pow::<E::V>(l - y);
        match form {
            Form::First => {
                let d = self.ev.double(&DoubleSpec {
                    inner: p_v,
                    outer: p_u,
                    sign: 1,
                    inner_encloses_outer: true,
                })?;
                Ok(pref * d)
            }
            Form::Second => {
                let d = self.ev.double(&DoubleSpec {
                    inner: p_u,
                    outer: p_v,
                    sign: -1,
                    inner_encloses_outer: true,
                })?;
                let single = self.ev.single(&self.one_expr(
                    n - r,
                    r + e,
                    l - y - m - 1 - (r + e),
                ))?;
                Ok(pref * (d + single))
            }
        }
    }

    pub fn b_small_support_hi(&self, y: i64, j: i64) -> i64 {
        let (r, e) = split(j);
        self.n.max(r + y + self.m + e)
    }

    /// Evaluate both printed forms and insist they agree.
    pub fn a_small_checked(&self, x: i64, j: i64, k: i64) -> Result<E::V> {
        let v1 = self.a_small(x, j, k, Form::First)?;
        let v2 = self.a_small(x, j, k, Form::Second)?;
        self.require_agreement("a_func", &v1, &v2)?;
        Ok(v1)
    }

    pub fn b_small_checked(&self, y: i64, j: i64, l: i64) -> Result<E::V> {
        let v1 = self.b_small(y, j, l, Form::First)?;
        let v2 = self.b_small(y, j, l, Form::Second)?;
        self.require_agreement("b_func", &v1, &v2)?;
        Ok(v1)
    }

    fn require_agreement(&self, name: &'static str, v1: &E::V, v2: &E::V) -> Result<()> {
        let d = v1.clone() - v2.clone();
        let scale = 1.0 + v1.to_f64().abs();
        let ok = if E::EXACT {
            d.is_zero() || d.to_f64().abs() < 1e-30 * scale
        } else {
            d.to_f64().abs() < 1e-7 * scale
        };
        if ok {
            Ok(())
        } else {
            Err(Error::FormMismatch {
                name,
                lhs: v1.to_f64(),
                rhs: v2.to_f64(),
            })
        }
    }

    /// The unperturbed kernel `L^(0)_n` of Theorem 1.1.
    pub fn l0(&self, p1: (i64, i64), p2: (i64, i64)) -> Result<E::V> {
        let (xi1, eta1) = p1;
        let (xi2, eta2) = p2;
        let n = self.n;
        let mut total = E::V::zero();
        if xi1 < xi2 {
            let s = self.ev.single(&self.one_expr(
                (eta1 - eta2) / 2 - 1,
                -((eta1 - eta2) / 2 + 1),
                (xi1 - xi2) / 2,
            ))?;
            total = total - s;
        }
        let inner = self.one_expr(-(eta2 + 1) / 2, -(n - (eta2 - 1) / 2), n - xi2 / 2);
        let outer = self.one_expr((eta1 - 1) / 2, n - (eta1 + 1) / 2, xi1 / 2 - n);
        let d = self.ev.double(&DoubleSpec {
            inner,
            outer,
            sign: 1,
            inner_encloses_outer: true,
        })?;
        Ok(total + d)
    }

    // ----- resolvent -------------------------------------------------------

    fn build_resolvent(&mut self) -> Result<()> {
        let (lo, hi) = (self.resolvent.s_lo, self.resolvent.s_hi);
        let size = (hi - lo + 1) as usize;
        let mut mat = vec![vec![E::V::zero(); size]; size];
        for (i, j) in (lo..=hi).enumerate() {
            for (c, k) in (lo..=hi).enumerate() {
                let kv = self.k_n(j, k)?;
                mat[i][c] = if i == c { E::V::one() - kv } else { -kv };
            }
        }
        // Column-support certificate: K_n(., k) vanishes for k > n.
        for k in [hi + 1, hi + 2] {
            let v = self.k_n(lo, k)?;
            if !self.ev.is_negligible(&v) {
                return Err(Error::TruncationCertificate(format!(
                    "K_n({lo},{k}) = {:.3e} expected to vanish",
                    v.to_f64()
                )));
            }
        }
        self.resolvent.i_minus_k_ss = mat;
        let mut rows = Vec::new();
        for k in lo..=self.resolvent.cache_hi {
            let mut row = Vec::with_capacity(size);
            for l in lo..=hi {
                row.push(self.k_n(k, l)?);
            }
            rows.push(row);
        }
        self.resolvent.k_rows = rows;
        Ok(())
    }

    fn k_n_cached(&self, k: i64, l: i64) -> Result<E::V> {
        let lo = self.resolvent.s_lo;
        if k >= lo && k <= self.resolvent.cache_hi && l >= lo && l <= self.resolvent.s_hi {
            Ok(self.resolvent.k_rows[(k - lo) as usize][(l - lo) as usize].clone())
        } else {
            self.k_n(k, l)
        }
    }

    /// `x = (I - K_n)^{-1} f` on the window, returned on `[s_lo, hi]`.
    fn resolvent_apply<Fa>(&self, f: Fa, hi: i64) -> Result<Vec<E::V>>
    where
        Fa: Fn(i64) -> Result<E::V>,
    {
        let (lo, s_hi) = (self.resolvent.s_lo, self.resolvent.s_hi);
        let f_vals: Vec<E::V> = (lo..=hi.max(s_hi)).map(&f).collect::<Result<_>>()?;
        let f_s: Vec<E::V> = f_vals[..(s_hi - lo + 1) as usize].to_vec();
        let xs = linalg::solve(&self.resolvent.i_minus_k_ss, &[f_s])?.remove(0);
        let mut out = Vec::with_capacity((hi.max(s_hi) - lo + 1) as usize);
        for k in lo..=hi.max(s_hi) {
            let mut xk = f_vals[(k - lo) as usize].clone();
            for (c, l) in (lo..=s_hi).enumerate() {
                xk = xk + self.k_n_cached(k, l)? * xs[c].clone();
            }
            out.push(xk);
        }
        Ok(out)
    }

    /// `<(I - K_n)^{-1} f, g>` over the window `k >= n-rho+1`, where `g`
    /// has finite support bounded by `g_supp_hi`.
    pub fn resolvent_ip<Fa, Fb>(&self, f: Fa, g: Fb, g_supp_hi: i64) -> Result<E::V>
    where
        Fa: Fn(i64) -> Result<E::V>,
        Fb: Fn(i64) -> Result<E::V>,
    {
        let lo = self.resolvent.s_lo;
        let top = self.resolvent.s_hi.max(g_supp_hi);
        let x = self.resolvent_apply(f, top)?;
        let mut acc = E::V::zero();
        for k in lo..=top {
            let gk = g(k)?;
            if gk.is_zero() {
                continue;
            }
            acc = acc + x[(k - lo) as usize].clone() * gk;
        }
        // Support certificate on the paired vector.
        for k in [top + 1, top + 2] {
            let v = g(k)?;
            if !self.ev.is_negligible(&v) {
                return Err(Error::TruncationCertificate(format!(
                    "paired vector at k={k} is {:.3e}, expected to vanish",
                    v.to_f64()
                )));
            }
        }
        Ok(acc)
    }

    /// L-kernel on a grid of argument pairs, sharing the resolvent-applied
    /// A-vectors per row point and the B-vectors per column point.
    pub fn l_kernel_matrix(
        &self,
        pts1: &[(i64, i64)],
        pts2: &[(i64, i64)],
    ) -> Result<Vec<Vec<E::V>>> {
        let a = self.ev.weight();
        let one_a2 = E::V::one() + a.clone() * a;
        let lo = self.resolvent.s_lo;
        let top = pts2
            .iter()
            .map(|p| self.b_cap_support_hi(p.0))
            .fold(self.resolvent.s_hi, i64::max);
        let xs: Vec<Vec<E::V>> = pts1
            .iter()
            .map(|p| self.resolvent_apply(|k| self.a_cap(p.0, p.1, k), top))
            .collect::<Result<_>>()?;
        let bs: Vec<Vec<E::V>> = pts2
            .iter()
            .map(|p| {
                (lo..=top)
                    .map(|k| self.b_cap(p.0, p.1, k))
                    .collect::<Result<_>>()
            })
            .collect::<Result<_>>()?;
        let mut out = vec![vec![E::V::zero(); pts2.len()]; pts1.len()];
        for (i, p1) in pts1.iter().enumerate() {
            for (j, p2) in pts2.iter().enumerate() {
                let mut ip = E::V::zero();
                for k in 0..xs[i].len() {
                    ip = ip + xs[i][k].clone() * bs[j][k].clone();
                }
                out[i][j] = one_a2.clone() * (self.l0(*p1, *p2)? - ip);
            }
        }
        Ok(out)
    }

    // ----- assembled kernels ------------------------------------------------

    /// The L-kernel of Theorem 1.1 at black squares `p = (xi, eta)`.
    pub fn l_kernel(&self, p1: (i64, i64), p2: (i64, i64)) -> Result<E::V> {
        let a = self.ev.weight();
        let one_a2 = E::V::one() + a.clone() * a;
        let l0 = self.l0(p1, p2)?;
        let ip = self.resolvent_ip(
            |k| self.a_cap(p1.0, p1.1, k),
            |k| self.b_cap(p2.0, p2.1, k),
            self.b_cap_support_hi(p2.0),
        )?;
        Ok(one_a2 * (l0 - ip))
    }

    /// The K-kernel of Theorem 1.2 in diamond coordinates, general line
    /// parities. `K(j1, x; j2, y)` with `j = 2r + eps`.
    pub fn k_kernel(&self, j1: i64, x: i64, j2: i64, y: i64) -> Result<E::V> {
        let mut total = E::V::zero();
        if j2 < j1 {
            total = total - self.psi(j1, j2, x, y)?;
        }
        let sgn = neg_one_pow::<E::V>(x - y);
        total = total + sgn.clone() * self.s_func(j1, x, j2, y)?;
        let ip = self.resolvent_ip(
            |k| self.a_small(-y, j2, k, Form::First),
            |k| self.b_small(-x, j1, k, Form::First),
            self.b_small_support_hi(-x, j1),
        )?;
        Ok(total - sgn * ip)
    }

    /// The unperturbed one-Aztec part `K_n^0` via the reflection identity
    /// of Eq. (K13) (right-hand form).
    pub fn k0(&self, j1: i64, x: i64, j2: i64, y: i64) -> Result<E::V> {
        let mut total = self.s_func(j1, x, j2, y)?;
        if j2 < j1 {
            total = total - neg_one_pow::<E::V>(x - y) * self.psi(j1, j2, x, y)?;
        }
        Ok(total)
    }

    /// Direct evaluation of the single-Aztec-diamond kernel of size `nn`.
    pub fn one_aztec(&self, nn: i64, j1: i64, x: i64, j2: i64, y: i64) -> Result<E::V> {
        assert!(j1 % 2 == 0 && j2 % 2 == 0, "one-Aztec kernel takes even lines");
        let (r, s) = (j1 / 2, j2 / 2);
        // The v-contour encloses the u-contour (gamma_{r_2} outside
        // gamma_{r_3}), pinned against the reflection identity of Eq. (K13).
        let inner = self.one_expr(-(nn - r), -r, r - x);
        let outer = self.one_expr(nn - s, s, y - 1 - s);
        let d = self.ev.double(&DoubleSpec {
            inner,
            outer,
            sign: 1,
            inner_encloses_outer: true,
        })?;
        let mut total = neg_one_pow::<E::V>(x - y) * d;
        if s > r {
            total = total - self.psi(2 * r, 2 * s, x, y)?;
        }
        Ok(total)
    }

    // ----- Eynard-Mehta form -----------------------------------------------

    fn build_em(&mut self) -> Result<()> {
        let m = self.m;
        let n = self.n;
        let size = (2 * m + 1) as usize;
        let mut a_mat = vec![vec![E::V::zero(); size]; size];
        for i in 1..=(2 * m + 1) {
            for j in 1..=(2 * m + 1) {
                a_mat[(i - 1) as usize][(j - 1) as usize] =
                    self.psi_tilde(0, 2 * n + 1, i - m - 1, j - m - 1)?;
            }
        }
        let a_inv = linalg::inverse(&a_mat).map_err(|_| Error::Singular {
            context: "Eynard-Mehta matrix A",
            cond: condition_estimate(&a_mat),
        })?;
        self.em = EmData { a_inv };
        Ok(())
    }

    /// Inverse-Kasteleyn entry via the finite Eynard-Mehta form
    /// `f~_1 + f~_2`; `w`, `b` in Kasteleyn coordinates.
    pub fn em_inverse_entry(&self, w: (i64, i64), b: (i64, i64)) -> Result<Gaussian<E::V>> {
        let m = self.m;
        let n = self.n;
        let u1 = w.1 + 1;
        let u2 = (w.1 - w.0 + 2 * m + 1).div_euclid(2);
        let v1 = b.1 + 1;
        let v2 = (b.1 - b.0 + 2 * m + 1).div_euclid(2);
        let sgn = Gaussian::<E::V>::i_pow((w.0 - w.1 + b.0 - b.1 + 2).div_euclid(2));
        let f1 = -self.psi_tilde(v1, u1, v2, u2)?;
        let mut f2 = E::V::zero();
        for i in 1..=(2 * m + 1) {
            let left = self.psi_tilde(v1, 2 * n + 1, v2, i - m - 1)?;
            if left.is_zero() {
                continue;
            }
            for j in 1..=(2 * m + 1) {
                let right = self.psi_tilde(0, u1, j - m - 1, u2)?;
                f2 = f2
                    + left.clone()
                        * self.em.a_inv[(i - 1) as usize][(j - 1) as usize].clone()
                        * right;
            }
        }
        Ok(sgn.scale(&(f1 + f2)))
    }

    /// Inverse-Kasteleyn entry through the K-kernel route of Theorem 2.3.
    pub fn k_inverse_entry(&self, w: (i64, i64), b: (i64, i64)) -> Result<Gaussian<E::V>> {
        let m = self.m;
        let u1 = w.1 + 1;
        let u2 = (w.1 - w.0 + 2 * m + 1).div_euclid(2);
        let v1 = b.1 + 1;
        let v2 = (b.1 - b.0 + 2 * m + 1).div_euclid(2);
        let sgn = Gaussian::<E::V>::i_pow((w.0 - w.1 + b.0 - b.1 + 2).div_euclid(2));
        let kk = self.k_kernel(v1, v2, u1, u2)?;
        Ok((-sgn).scale(&kk))
    }

    // ----- derived quantities -----------------------------------------------

    /// Gap probability: Fredholm determinant `det(I - chi L chi)` over the
    /// finite set of black squares in the given eta-intervals.
    pub fn gap_probability(&self, lines: &[(i64, i64, i64)]) -> Result<E::V> {
        let mut points = Vec::new();
        for &(s, k, l) in lines {
            let mut eta = if k.rem_euclid(2) == 1 { k } else { k + 1 };
            while eta <= l {
                points.push((2 * s, eta));
                eta += 2;
            }
        }
        if points.is_empty() {
            return Ok(E::V::one());
        }
        let size = points.len();
        let l = self.l_kernel_matrix(&points, &points)?;
        let mut mat = vec![vec![E::V::zero(); size]; size];
        for i in 0..size {
            for j in 0..size {
                mat[i][j] = if i == j {
                    E::V::one() - l[i][j].clone()
                } else {
                    -l[i][j].clone()
                };
            }
        }
        Ok(linalg::determinant(&mat))
    }

    /// Residual of the KL relation at the pair of black squares.
    pub fn kl_residual(&self, p1: (i64, i64), p2: (i64, i64)) -> Result<E::V> {
        let (xi1, eta1) = p1;
        let (xi2, eta2) = p2;
        let mm = 2 * self.m + 1;
        let l = self.l_kernel(p1, p2)?;
        let k1 = self.k_kernel(
            eta2 + 1,
            (eta2 - xi2 + mm).div_euclid(2),
            eta1 + 2,
            (eta1 - xi1 + mm).div_euclid(2),
        )?;
        let k2 = self.k_kernel(
            eta2 + 1,
            (eta2 - xi2 + mm).div_euclid(2),
            eta1,
            (eta1 - xi1 + mm - 2).div_euclid(2),
        )?;
        Ok(l - (k1 - self.ev.weight() * k2))
    }

    /// Sum of the diagonal L-kernel over all black squares of the line
    /// `xi = 2s`; reproduces the deterministic per-line particle count.
    pub fn trace_line(&self, s: i64) -> Result<E::V> {
        let mut acc = E::V::zero();
        for eta in -1..=(2 * self.n - 1) {
            if in_blacks(&self.params, 2 * s, eta) {
                acc = acc + self.l_kernel((2 * s, eta), (2 * s, eta))?;
            }
        }
        Ok(acc)
    }
}

fn condition_estimate<V: CoeffToF64>(m: &[Vec<V>]) -> f64 {
    let n = m.len();
    let f = nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j].to_f64());
    let svd = f.svd(false, false);
    let max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let min = svd.singular_values.iter().cloned().fold(f64::MAX, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::DiamondParams;
    use num_traits::One;

    fn rat(p: i64, q: i64) -> Rat {
        Rat::new(p.into(), q.into())
    }

    fn exact(n: i64, rho: i64, num: i64, den: i64) -> ExactKernel {
        let p = DiamondParams::with_rational_a(n, rho, num, den).unwrap();
        FiniteKernel::exact(&p).unwrap()
    }

    #[test]
    fn psi_delta_and_closed_forms() {
        let k = exact(4, 2, 1, 3);
        // Same line: psi_{2r,2r}(x,y) = delta_{x,y}.
        for x in -3..3 {
            for y in -3..3 {
                let v = k.psi(6, 6, x, y).unwrap();
                let expect = if x == y { Rat::one() } else { Rat::zero() };
                assert_eq!(v, expect);
            }
        }
        // psi_{0,2}(0,0) = 1 + a^2 for any rational a.
        for (num, den) in [(1, 3), (1, 2), (1, 1), (5, 4)] {
            let k = exact(4, 2, num, den);
            let a = rat(num, den);
            assert_eq!(k.psi(0, 2, 0, 0).unwrap(), Rat::one() + a.clone() * a);
        }
    }

    #[test]
    fn four_term_identity_exactly_zero() {
        let k = exact(4, 2, 2, 5);
        for r in -2..4 {
            for s in (r + 1)..5 {
                for x1 in -3..4 {
                    for x2 in -3..4 {
                        let v = k.psi_four_term(r, s, x1, x2).unwrap();
                        assert!(v.is_zero(), "r={r} s={s} x1={x1} x2={x2}: {v:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn b_vectors_vanish_past_support() {
        let k = exact(4, 2, 1, 2);
        let (xi2, eta2) = (6, 5);
        let hi = k.b_cap_support_hi(xi2);
        for kk in (hi + 1)..(hi + 4) {
            assert!(k.b_cap(xi2, eta2, kk).unwrap().is_zero());
        }
        let (y, j) = (-1, 7);
        let hi = k.b_small_support_hi(y, j);
        for l in (hi + 1)..(hi + 4) {
            assert!(k.b_small(y, j, l, Form::First).unwrap().is_zero());
        }
    }

    #[test]
    fn both_forms_of_a_and_b_agree_exactly() {
        let k = exact(4, 2, 1, 2);
        for j in [3i64, 4, 7, 8] {
            for x in [-2i64, 0, 1] {
                for kk in [5i64, 6, 8] {
                    k.a_small_checked(x, j, kk).unwrap();
                    k.b_small_checked(x, j, kk).unwrap();
                }
            }
        }
    }

    #[test]
    fn quadrature_matches_exact_oracle() {
        let n = 4;
        let rho = 2;
        let pq = DiamondParams::with_rational_a(n, rho, 1, 2).unwrap();
        let kq = FiniteKernel::quadrature(&pq, 1e-12).unwrap();
        let ke = exact(n, rho, 1, 2);
        let close = |a: f64, b: &Rat| (a - crate::scalar::rat_to_f64(b)).abs() < 1e-10;
        for (j1, x, j2, y) in [(8, 1, 6, 0), (4, -1, 7, 2), (6, 2, 6, 1)] {
            assert!(close(
                kq.s_func(j1, x, j2, y).unwrap(),
                &ke.s_func(j1, x, j2, y).unwrap()
            ));
        }
        for (j, kk) in [(5, 6), (6, 5), (8, 8)] {
            assert!(close(kq.k_n(j, kk).unwrap(), &ke.k_n(j, kk).unwrap()));
        }
        for kk in 5..9 {
            assert!(close(
                kq.a_cap(6, 3, kk).unwrap(),
                &ke.a_cap(6, 3, kk).unwrap()
            ));
            assert!(close(
                kq.b_cap(8, 5, kk).unwrap(),
                &ke.b_cap(8, 5, kk).unwrap()
            ));
        }
        let l_q = kq.l_kernel((4, 3), (6, 5)).unwrap();
        let l_e = ke.l_kernel((4, 3), (6, 5)).unwrap();
        assert!(close(l_q, &l_e));
        let k_q = kq.k_kernel(4, 1, 6, 0).unwrap();
        let k_e = ke.k_kernel(4, 1, 6, 0).unwrap();
        assert!(close(k_q, &k_e));
    }

    #[test]
    fn one_aztec_reflection_identity() {
        // K_n^0(2r, x; 2s, y) = K_{n+1}^{OneAzt}(2(n-r+1), m-x+1; 2(n-s+1), m-y+1).
        let k = exact(4, 2, 1, 2);
        let (n, m) = (k.n, k.m);
        for (r, s) in [(1i64, 1), (2, 1), (1, 3), (3, 2)] {
            for (x, y) in [(0i64, 0), (1, 0), (-1, 2)] {
                let lhs = k.k0(2 * r, x, 2 * s, y).unwrap();
                let rhs = k
                    .one_aztec(
                        n + 1,
                        2 * (n - r + 1),
                        m - x + 1,
                        2 * (n - s + 1),
                        m - y + 1,
                    )
                    .unwrap();
                assert_eq!(lhs, rhs, "r={r} s={s} x={x} y={y}");
            }
        }
    }

    #[test]
    fn empty_gap_is_certain() {
        let k = exact(2, 2, 1, 1);
        assert_eq!(k.gap_probability(&[]).unwrap(), Rat::one());
    }
}
