//! Functionals of the weighted relative-entropy method.
//!
//! Terms without a diffusive flux use the trapezoid rule on the solver grid,
//! with the shifted composite wave Ũ^{X₁,X₂} and weights sampled at the
//! nodes and wave derivatives taken from the profiles' closed forms.
//!
//! The diffusive group (D, B3, B4, B5) is summed over cell faces in the same
//! flux form the solver uses, f_{j+½} = avg(v^β)(p_{j+1} − p_j)/dx. Summation
//! by parts then matches the solver's dissipation exactly, and the budget
//! residual along a run is left with the time-stepping error plus an O(dx²)
//! part that is small against it.

use crate::error::{Error, Result};
use crate::gas_core::GasModel;
use crate::ns_solver::{Field, Variables};
use crate::wave_profiles::{gradient, CompositePoint, CompositeWave};
use crate::weights_shifts::{Branch, ShiftState, WeightPair, WeightValues};

/// Default truncation level δ₁.
pub const DEFAULT_DELTA1: f64 = 0.05;

/// Relative tolerance of the quadratic-completion identity.
pub const DECOMPOSITION_TOL: f64 = 1e-10;

/// A field together with the wave, weights and shifts it is compared to.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub field: &'a Field,
    pub wave: &'a CompositeWave,
    pub weights: &'a WeightPair,
    pub x1: f64,
    pub x2: f64,
}

impl<'a> Snapshot<'a> {
    pub fn new(field: &'a Field, wave: &'a CompositeWave, weights: &'a WeightPair, shifts: &ShiftState) -> Self {
        Self { field, wave, weights, x1: shifts.x1(), x2: shifts.x2() }
    }
}

/// Nodal data shared by all functionals.
#[derive(Debug, Clone)]
pub struct NodeData {
    pub dx: f64,
    pub quad: Vec<f64>,
    pub c: Vec<CompositePoint>,
    pub w: Vec<WeightValues>,
    /// p(v) − p(ṽ).
    pub pd: Vec<f64>,
    /// p(ṽ) and p'(ṽ).
    pub pt: Vec<f64>,
    pub dpt: Vec<f64>,
    /// Q(v|ṽ) and p(v|ṽ).
    pub qrel: Vec<f64>,
    pub prel: Vec<f64>,
    /// v^β and ṽ^β.
    pub vb: Vec<f64>,
    pub vtb: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub sigma: [f64; 2],
}

impl NodeData {
    pub fn compute(s: &Snapshot) -> Result<Self> {
        if s.field.vars != Variables::Bd {
            return Err(Error::Validation("functionals need (v,h) variables".into()));
        }
        let g = *s.wave.gas();
        let f = s.field;
        let n = f.v.len();
        let t = f.t;
        let dx = f.grid.dx;
        let mut quad = vec![dx; n];
        quad[0] *= 0.5;
        quad[n - 1] *= 0.5;
        let mut c = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        let mut pd = Vec::with_capacity(n);
        let mut pt = Vec::with_capacity(n);
        let mut dpt = Vec::with_capacity(n);
        let mut qrel = Vec::with_capacity(n);
        let mut prel = Vec::with_capacity(n);
        let mut vb = Vec::with_capacity(n);
        let mut vtb = Vec::with_capacity(n);
        let mut e1 = Vec::with_capacity(n);
        let mut e2 = Vec::with_capacity(n);
        for i in 0..n {
            let cp = s.wave.point(t, f.grid.x(i), s.x1, s.x2);
            let kc = g.kernels(cp.v);
            let (d, q, r) = g.rel_triple(f.v[i], cp.v, kc.p);
            w.push(s.weights.at_point(&cp));
            pd.push(d);
            qrel.push(q);
            prel.push(r);
            pt.push(kc.p);
            dpt.push(kc.dp);
            vb.push(g.v_beta(f.v[i]));
            vtb.push(kc.vb);
            // Ẽ₁ = ∂x(k(ṽ)ṽ_x) − Σ ∂x(k(ṽ_i)ṽ_i'), Ẽ₂ = p'(ṽ)ṽ_x − Σ p'(ṽ_i)ṽ_i'.
            let vx = cp.dv();
            let mut ee1 = kc.dk * vx * vx + kc.k * cp.d2v();
            let mut ee2 = kc.dp * vx;
            for wi in [&cp.w1, &cp.w2] {
                ee1 -= wi.kern.dk * wi.dv * wi.dv + wi.kern.k * wi.d2v;
                ee2 -= wi.kern.dp * wi.dv;
            }
            e1.push(ee1);
            e2.push(ee2);
            c.push(cp);
        }
        Ok(Self { dx, quad, c, w, pd, pt, dpt, qrel, prel, vb, vtb, e1, e2, sigma: [s.wave.p1.sigma, s.wave.p2.sigma] })
    }
}

/// Y₁, Y₂.
pub fn compute_y(s: &Snapshot) -> Result<(f64, f64)> {
    let nd = NodeData::compute(s)?;
    Ok(y_from_nodes(s, &nd))
}

fn y_from_nodes(s: &Snapshot, nd: &NodeData) -> (f64, f64) {
    let f = s.field;
    let mut y = [0.0; 2];
    for j in 0..f.v.len() {
        let c = &nd.c[j];
        let dh = f.h[j] - c.h;
        let eta = 0.5 * dh * dh + nd.qrel[j];
        let hess_v = -nd.dpt[j] * (f.v[j] - c.v);
        for i in 0..2 {
            let wi = c.component(i + 1);
            y[i] += nd.quad[j] * (-nd.w[j].da(i + 1) * eta + nd.w[j].a * (wi.dv * hess_v + wi.dh * dh));
        }
    }
    (y[0], y[1])
}

/// All budget terms at one instant. Per-family terms are indexed 0 ↔ i=1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EntropyReport {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub delta1: f64,
    /// ∫ a η(U|Ũ) dx.
    pub entropy: f64,
    pub y1: f64,
    pub y2: f64,
    pub jbad: f64,
    pub jgood: f64,
    /// ∫(a_i)_x (p−p̃)(h−h̃), the term split by the quadratic completion.
    pub cross: [f64; 2],
    /// σ_i/2 ∫(a_i)_x |h−h̃|².
    pub good_h: [f64; 2],
    pub b1: [f64; 2],
    pub b2_minus: [f64; 2],
    pub b2_plus: [f64; 2],
    pub b3: [f64; 2],
    pub b4: [f64; 2],
    pub b5: f64,
    pub b6: f64,
    pub g1_minus: [f64; 2],
    pub g1_plus: [f64; 2],
    pub g2: [f64; 2],
    pub d: f64,
    pub b_total: f64,
    pub g_total: f64,
    /// ∫|Ẽ₁| dx and ∫|Ẽ₂| dx.
    pub e1_norm: f64,
    pub e2_norm: f64,
}

impl EntropyReport {
    /// Named columns in a fixed order.
    pub fn columns(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("t", self.t),
            ("X1", self.x1),
            ("X2", self.x2),
            ("delta1", self.delta1),
            ("entropy", self.entropy),
            ("Y1", self.y1),
            ("Y2", self.y2),
            ("Jbad", self.jbad),
            ("Jgood", self.jgood),
            ("B11", self.b1[0]),
            ("B12", self.b1[1]),
            ("B21_minus", self.b2_minus[0]),
            ("B22_minus", self.b2_minus[1]),
            ("B21_plus", self.b2_plus[0]),
            ("B22_plus", self.b2_plus[1]),
            ("B31", self.b3[0]),
            ("B32", self.b3[1]),
            ("B41", self.b4[0]),
            ("B42", self.b4[1]),
            ("B5", self.b5),
            ("B6", self.b6),
            ("G11_minus", self.g1_minus[0]),
            ("G12_minus", self.g1_minus[1]),
            ("G11_plus", self.g1_plus[0]),
            ("G12_plus", self.g1_plus[1]),
            ("G21", self.g2[0]),
            ("G22", self.g2[1]),
            ("D", self.d),
            ("B_total", self.b_total),
            ("G_total", self.g_total),
            ("E1_norm", self.e1_norm),
            ("E2_norm", self.e2_norm),
        ]
    }

    /// Every good term, for sign checks.
    pub fn good_terms(&self) -> Vec<f64> {
        let mut v = Vec::new();
        v.extend(self.g1_minus);
        v.extend(self.g1_plus);
        v.extend(self.g2);
        v.push(self.d);
        v
    }

    /// Relative mismatch of J^bad − J^good against B_δ − G_δ.
    pub fn decomposition_error(&self) -> f64 {
        let lhs = self.jbad - self.jgood;
        let rhs = self.b_total - self.g_total;
        let scale = self.jbad.abs() + self.jgood.abs() + self.b_total.abs() + self.g_total.abs();
        if scale == 0.0 {
            0.0
        } else {
            (lhs - rhs).abs() / scale
        }
    }

    /// Right-hand side of the entropy identity for given shift rates.
    pub fn budget_rhs(&self, dx1: f64, dx2: f64) -> f64 {
        dx1 * self.y1 + dx2 * self.y2 + self.jbad - self.jgood
    }
}

/// Checks the quadratic-completion identity and the sign of the good terms.
pub fn check_decomposition(r: &EntropyReport) -> Result<()> {
    let err = r.decomposition_error();
    if !(err <= DECOMPOSITION_TOL) {
        return Err(Error::Internal(format!("Jbad - Jgood != B - G: relative mismatch {err:e}")));
    }
    if let Some(g) = r.good_terms().into_iter().find(|g| !(*g >= 0.0)) {
        return Err(Error::Internal(format!("negative good term {g:e}")));
    }
    Ok(())
}

/// Evaluates every budget term and checks the decomposition identity.
pub fn compute_budget(s: &Snapshot, delta1: f64) -> Result<EntropyReport> {
    let r = compute_budget_unchecked(s, delta1)?;
    check_decomposition(&r)?;
    Ok(r)
}

/// As [`compute_budget`] without the final consistency check.
pub fn compute_budget_unchecked(s: &Snapshot, delta1: f64) -> Result<EntropyReport> {
    if !(delta1 > 0.0) {
        return Err(Error::Validation(format!("delta1 must be positive, got {delta1}")));
    }
    let nd = NodeData::compute(s)?;
    let f = s.field;
    let (y1, y2) = y_from_nodes(s, &nd);
    let mut r = EntropyReport { t: f.t, x1: s.x1, x2: s.x2, delta1, y1, y2, ..Default::default() };
    for j in 0..f.v.len() {
        let q = nd.quad[j];
        let c = &nd.c[j];
        let w = &nd.w[j];
        let pd = nd.pd[j];
        let dh = f.h[j] - c.h;
        let (prel, qrel) = (nd.prel[j], nd.qrel[j]);
        let in_omega = pd <= delta1;
        r.entropy += q * w.a * (0.5 * dh * dh + qrel);
        for i in 0..2 {
            let sg = nd.sigma[i];
            let da = w.da(i + 1);
            let wi = c.component(i + 1);
            r.cross[i] += q * da * pd * dh;
            r.good_h[i] += q * 0.5 * sg * da * dh * dh;
            r.b1[i] += q * sg * w.a * wi.dv * prel;
            r.g2[i] += q * sg * da * qrel;
            if in_omega {
                r.b2_plus[i] += q * da * pd * pd / (2.0 * sg);
                let m = dh - pd / sg;
                r.g1_plus[i] += q * 0.5 * sg * da * m * m;
            } else {
                r.b2_minus[i] += q * da * pd * dh;
                r.g1_minus[i] += q * 0.5 * sg * da * dh * dh;
            }
        }
        r.b6 += q * w.a * (pd * nd.e1[j] - dh * nd.e2[j]);
        r.e1_norm += q * nd.e1[j].abs();
        r.e2_norm += q * nd.e2[j].abs();
    }
    // Δ(a pd) = avg(a) Δpd + avg(pd) Δa splits the face sum into D, B3, B4, B5.
    let dx = nd.dx;
    for j in 0..f.v.len() - 1 {
        let k = j + 1;
        let vb = 0.5 * (nd.vb[j] + nd.vb[k]);
        let dvb = vb - 0.5 * (nd.vtb[j] + nd.vtb[k]);
        let gpd = (nd.pd[k] - nd.pd[j]) / dx;
        let gpt = (nd.pt[k] - nd.pt[j]) / dx;
        let pd = 0.5 * (nd.pd[j] + nd.pd[k]);
        let a = 0.5 * (nd.w[j].a + nd.w[k].a);
        for i in 0..2 {
            let da = if i == 0 { nd.w[k].a1 - nd.w[j].a1 } else { nd.w[k].a2 - nd.w[j].a2 };
            r.b3[i] -= da * vb * pd * gpd;
            r.b4[i] -= da * pd * dvb * gpt;
        }
        r.b5 -= dx * a * gpd * dvb * gpt;
        r.d += dx * a * vb * gpd * gpd;
    }
    let sum2 = |a: [f64; 2]| a[0] + a[1];
    r.jbad = sum2(r.cross) + sum2(r.b1) + sum2(r.b3) + sum2(r.b4) + r.b5 + r.b6;
    r.jgood = sum2(r.good_h) + sum2(r.g2) + r.d;
    r.b_total = sum2(r.b1) + sum2(r.b2_minus) + sum2(r.b2_plus) + sum2(r.b3) + sum2(r.b4) + r.b5 + r.b6;
    r.g_total = sum2(r.g1_minus) + sum2(r.g1_plus) + sum2(r.g2) + r.d;
    Ok(r)
}

/// The two interaction functionals ∫|∂ṽ₁||ṽ − ṽ₁| dx and ∫|∂ṽ₁||∂ṽ₂| dx of
/// the shifted composite wave, by trapezoid on `grid_x`.
pub fn interaction_functionals(wave: &CompositeWave, t: f64, x1: f64, x2: f64, xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n < 2 {
        return (0.0, 0.0);
    }
    let dx = xs[1] - xs[0];
    let (mut a, mut b) = (0.0, 0.0);
    for (j, &x) in xs.iter().enumerate() {
        let c = wave.point(t, x, x1, x2);
        let q = if j == 0 || j == n - 1 { 0.5 * dx } else { dx };
        a += q * c.w1.dv.abs() * (c.v - c.w1.v).abs();
        b += q * c.w1.dv.abs() * c.w2.dv.abs();
    }
    (a, b)
}

/// Truncation of p(v) − p(ṽ) at level ±δ₁ and its one-sided variants.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedField {
    pub delta1: f64,
    /// Two-sided truncation.
    pub bar_v: Vec<f64>,
    /// Upper truncation only, ψ_s(y) = min(δ₁, y).
    pub bar_v_s: Vec<f64>,
    /// Lower truncation only, ψ_b(y) = max(−δ₁, y).
    pub bar_v_b: Vec<f64>,
    /// Ω = {p(v) − p(ṽ) ≤ δ₁}.
    pub omega: Vec<bool>,
    /// ṽ at the nodes.
    pub v_tilde: Vec<f64>,
}

fn truncate_one(g: &GasModel, v: f64, vt: f64, pd: f64, lo: f64, hi: f64) -> f64 {
    if pd >= lo && pd <= hi {
        v
    } else {
        g.p_inv(g.p(vt) + pd.clamp(lo, hi))
    }
}

pub fn truncate(s: &Snapshot, delta1: f64) -> Result<TruncatedField> {
    if !(delta1 > 0.0) {
        return Err(Error::Validation(format!("delta1 must be positive, got {delta1}")));
    }
    let g = s.wave.gas();
    let f = s.field;
    let n = f.v.len();
    let mut out = TruncatedField {
        delta1,
        bar_v: Vec::with_capacity(n),
        bar_v_s: Vec::with_capacity(n),
        bar_v_b: Vec::with_capacity(n),
        omega: Vec::with_capacity(n),
        v_tilde: Vec::with_capacity(n),
    };
    for i in 0..n {
        let vt = s.wave.point(f.t, f.grid.x(i), s.x1, s.x2).v;
        let v = f.v[i];
        let pd = g.p_diff(v, vt);
        out.bar_v.push(truncate_one(g, v, vt, pd, -delta1, delta1));
        out.bar_v_s.push(truncate_one(g, v, vt, pd, f64::NEG_INFINITY, delta1));
        out.bar_v_b.push(truncate_one(g, v, vt, pd, -delta1, f64::INFINITY));
        out.omega.push(pd <= delta1);
        out.v_tilde.push(vt);
    }
    Ok(out)
}

/// D = ∫ a v^β |∂x(p(w) − p(ṽ))|² for a volume field `w`, with the
/// diffusion weight v^β taken from `v_weight`. Face form, as in the budget.
pub fn diffusion_term(s: &Snapshot, w: &[f64], v_weight: &[f64]) -> Result<f64> {
    let g = *s.wave.gas();
    let f = s.field;
    let n = f.v.len();
    if w.len() != n || v_weight.len() != n {
        return Err(Error::Validation("diffusion_term inputs do not match the grid".into()));
    }
    let mut pd = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    for i in 0..n {
        let c = s.wave.point(f.t, f.grid.x(i), s.x1, s.x2);
        pd.push(g.p_diff(w[i], c.v));
        a.push(s.weights.at_point(&c).a);
    }
    let dx = f.grid.dx;
    let mut acc = 0.0;
    for j in 0..n - 1 {
        let d = (pd[j + 1] - pd[j]) / dx;
        let vb = 0.5 * (g.v_beta(v_weight[j]) + g.v_beta(v_weight[j + 1]));
        acc += 0.5 * (a[j] + a[j + 1]) * vb * d * d;
    }
    Ok(acc * dx)
}

/// Piecewise-linear partition of unity separating the two waves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partition {
    /// φ₁ = 1 left of this point.
    pub left: f64,
    /// φ₁ = 0 right of this point.
    pub right: f64,
}

impl Partition {
    pub fn phi1(&self, x: f64) -> f64 {
        if x <= self.left {
            1.0
        } else if x >= self.right {
            0.0
        } else {
            (self.right - x) / (self.right - self.left)
        }
    }

    pub fn phi2(&self, x: f64) -> f64 {
        1.0 - self.phi1(x)
    }

    pub fn phi(&self, i: usize, x: f64) -> f64 {
        if i == 1 {
            self.phi1(x)
        } else {
            self.phi2(x)
        }
    }

    /// |∂xφ_i| inside the transition zone.
    pub fn slope(&self) -> f64 {
        1.0 / (self.right - self.left)
    }
}

/// Partition with transition zone between the midpoints (X_i + σ_i t)/2.
pub fn partition_phi(shifts: &ShiftState) -> Result<Partition> {
    let (f1, f2) = shifts.fronts();
    let (left, right) = (0.5 * f1, 0.5 * f2);
    if !(left < right) {
        return Err(Error::Structural(format!("partition midpoints not ordered: {left} >= {right}")));
    }
    Ok(Partition { left, right })
}

/// Localized functionals of one wave family.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Localized {
    pub yg: f64,
    pub i1: f64,
    pub i2: f64,
    pub g2: f64,
    pub d: f64,
}

/// Per-family functionals of the truncated volume, each localized by φ_i
/// and measured against the single profile ṽ_i.
pub fn localized_functionals(s: &Snapshot, trunc: &TruncatedField, part: &Partition) -> Result<[Localized; 2]> {
    let g = *s.wave.gas();
    let f = s.field;
    let n = f.v.len();
    if trunc.bar_v.len() != n {
        return Err(Error::Validation("truncated field does not match the grid".into()));
    }
    let dx = f.grid.dx;
    let gm = g.gamma;
    let mut out = [Localized::default(); 2];
    let pts: Vec<CompositePoint> = (0..n).map(|j| s.wave.point(f.t, f.grid.x(j), s.x1, s.x2)).collect();
    for i in 0..2 {
        let sg = if i == 0 { s.wave.p1.sigma } else { s.wave.p2.sigma };
        let phi: Vec<f64> = (0..n).map(|j| part.phi(i + 1, f.grid.x(j))).collect();
        let loc: Vec<f64> = (0..n).map(|j| phi[j] * g.p_diff(trunc.bar_v[j], pts[j].component(i + 1).v)).collect();
        let dloc = gradient(&loc, dx);
        let mut l = Localized::default();
        for j in 0..n {
            let q = if j == 0 || j == n - 1 { 0.5 * dx } else { dx };
            let c = &pts[j];
            let wi = c.component(i + 1);
            let w = s.weights.at_point(c);
            let da = w.da(i + 1);
            let vb = trunc.bar_v[j];
            let pdi = g.p_diff(vb, wi.v);
            let ph = phi[j];
            let ph2 = ph * ph;
            let pt = g.p(wi.v);
            l.yg += q
                * (-da * ph2 * pdi * pdi / (2.0 * sg * sg)
                    - da * ph2 * g.q_rel(vb, wi.v)
                    - w.a * g.dp(wi.v) * wi.dv * ph * (vb - wi.v)
                    + w.a * wi.dh * ph * pdi / sg);
            l.i1 += q * sg * w.a * wi.dv * ph2 * g.p_rel(vb, wi.v);
            l.i2 += q * da * ph2 * pdi * pdi / (2.0 * sg);
            l.g2 += q
                * sg
                * da
                * (pt.powf(-1.0 / gm - 1.0) / (2.0 * gm) * ph2 * pdi * pdi
                    - (1.0 + gm) / (3.0 * gm * gm) * pt.powf(-1.0 / gm - 2.0) * ph2 * ph * pdi * pdi * pdi);
            l.d += q * w.a * g.v_beta(vb) * dloc[j] * dloc[j];
        }
        out[i] = l;
    }
    Ok(out)
}

/// Residual bookkeeping for the entropy identity along a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContractionMonitor {
    prev: Option<(f64, f64, f64)>,
    entropy0: Option<f64>,
    acc_goods: f64,
    /// |(E_{k+1} − E_k)/Δt − rhs_k| per step.
    pub residuals: Vec<f64>,
    /// (entropy(t) + ∫₀ᵗ G_δ) / (entropy(0) + 1).
    pub ledger_ratio: Vec<f64>,
}

impl ContractionMonitor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a report together with the shift rates used from it.
    pub fn push(&mut self, r: &EntropyReport, dx1: f64, dx2: f64) {
        let rhs = r.budget_rhs(dx1, dx2);
        if let Some((t0, e0, rhs0)) = self.prev {
            let dt = r.t - t0;
            if dt > 0.0 {
                self.residuals.push(((r.entropy - e0) / dt - rhs0).abs());
                self.acc_goods += dt * r.g_total;
            }
        }
        let e_init = *self.entropy0.get_or_insert(r.entropy);
        self.ledger_ratio.push((r.entropy + self.acc_goods) / (e_init + 1.0));
        self.prev = Some((r.t, r.entropy, rhs));
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean_residual(&self) -> f64 {
        if self.residuals.is_empty() {
            0.0
        } else {
            self.residuals.iter().sum::<f64>() / self.residuals.len() as f64
        }
    }

    /// Fitted ledger constant: the smallest C with entropy(t) + goods ≤ C(entropy(0) + 1).
    pub fn ledger_constant(&self) -> f64 {
        self.ledger_ratio.iter().copied().fold(0.0, f64::max)
    }
}

/// Occupancy counts of the four shift branches for one family.
pub fn branch_histogram(branches: &[Branch]) -> [usize; 4] {
    let mut h = [0; 4];
    for b in branches {
        h[*b as usize] += 1;
    }
    h
}
