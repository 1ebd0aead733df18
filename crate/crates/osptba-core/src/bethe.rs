//! Q-functions, vacuum parts, box functions and the Bethe ansatz equations.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::combinat::{Symbol, SymbolKind};
use crate::error::{Error, Result};
use crate::params::ModelParams;

pub type C = Complex64;

pub const I: C = C::new(0.0, 1.0);
const HALF_I: C = C::new(0.0, 0.5);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `phi_pm(v) = (v pm i u)^(N/2)`.
pub fn phi(params: &ModelParams, v: C, sign: Sign) -> C {
    (v + I * (sign.value() * params.u)).powi((params.n / 2) as i32)
}

/// Cartan-type data of the equations: `B`, the index map `sigma` and the
/// incidence matrix `I` of the Y-system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CartanData {
    pub s: usize,
}

impl CartanData {
    pub fn new(s: usize) -> Self {
        CartanData { s }
    }

    /// `B_ad = 2 delta_ad - delta_{a,d+1} - delta_{a,d-1}` for `a <= s`, `d <= s+1`.
    pub fn b(&self, a: usize, d: usize) -> i64 {
        2 * i64::from(a == d) - i64::from(a == d + 1) - i64::from(a + 1 == d)
    }

    pub fn sigma(&self, d: usize) -> usize {
        d.min(self.s)
    }

    /// `I_ad = delta_{a,d-1} + delta_{a,d+1} + delta_ad delta_as`.
    pub fn incidence(&self, a: usize, d: usize) -> i64 {
        i64::from(a + 1 == d) + i64::from(a == d + 1) + i64::from(a == d && a == self.s)
    }
}

/// Inhomogeneity `w_j` of the first color (the other colors carry none).
pub fn inhomogeneity(params: &ModelParams, j: usize) -> C {
    if j % 2 == 0 {
        I * params.u
    } else {
        I * (params.g() as f64 / 2.0 - params.u)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetheState {
    pub params: ModelParams,
    /// `roots[a-1]` holds the roots of color `a`.
    pub roots: Vec<Vec<C>>,
}

impl BetheState {
    pub fn new(params: ModelParams, roots: Vec<Vec<C>>) -> Result<Self> {
        if roots.len() != params.s {
            return Err(Error::InvalidParams(format!(
                "expected {} root colors, got {}",
                params.s,
                roots.len()
            )));
        }
        Ok(BetheState { params, roots })
    }

    /// State with no roots: every Q-function is one.
    pub fn vacuum(params: ModelParams) -> Self {
        BetheState {
            params,
            roots: vec![Vec::new(); params.s],
        }
    }

    /// Off-shell state with roots uniform in `[-scale, scale]^2`.
    pub fn random<R: Rng>(params: ModelParams, counts: &[usize], scale: f64, rng: &mut R) -> Self {
        let roots = counts
            .iter()
            .map(|&m| {
                (0..m)
                    .map(|_| C::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)))
                    .collect()
            })
            .collect();
        BetheState { params, roots }
    }

    pub fn s(&self) -> usize {
        self.params.s
    }

    /// `M_a`, with `M_0 = N`.
    pub fn multiplicity(&self, a: usize) -> usize {
        if a == 0 {
            self.params.n
        } else {
            self.roots[a - 1].len()
        }
    }

    pub fn num_roots(&self) -> usize {
        self.roots.iter().map(Vec::len).sum()
    }

    pub fn flat_roots(&self) -> Vec<C> {
        self.roots.iter().flatten().copied().collect()
    }

    fn with_flat(&self, z: &[C]) -> Self {
        let mut roots = self.roots.clone();
        let mut it = z.iter();
        for col in roots.iter_mut() {
            for r in col.iter_mut() {
                *r = *it.next().expect("length matches");
            }
        }
        BetheState {
            params: self.params,
            roots,
        }
    }

    /// `Q_a(v) = prod_k (v - v_k^(a))`, `Q_0 = 1`.
    pub fn q(&self, a: usize, v: C) -> Result<C> {
        if a > self.s() {
            return Err(Error::ColorOutOfRange(a));
        }
        Ok(self.q_unchecked(a, v))
    }

    fn q_unchecked(&self, a: usize, v: C) -> C {
        if a == 0 {
            return C::new(1.0, 0.0);
        }
        self.roots[a - 1].iter().map(|&r| v - r).product()
    }

    /// Roots of one color mapped by `r -> -conj(r)`, and the reflection about
    /// `Im v = g/4`, both match the original set within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let h = self.params.g() as f64 / 2.0;
        let same = |a: &[C], f: &dyn Fn(C) -> C| {
            a.iter().all(|&r| a.iter().any(|&q| (f(r) - q).norm() < tol))
        };
        self.roots.iter().all(|col| {
            same(col, &|r: C| -r.conj()) && same(col, &|r: C| C::new(r.re, h - r.im))
        })
    }

    pub fn to_json(&self) -> BetheStateJson {
        BetheStateJson {
            s: self.params.s,
            n: self.params.n,
            u: self.params.u,
            m: (1..=self.s()).map(|a| self.multiplicity(a)).collect(),
            roots: self
                .roots
                .iter()
                .map(|c| c.iter().map(|z| RootJson { re: z.re, im: z.im }).collect())
                .collect(),
        }
    }

    pub fn from_json(j: &BetheStateJson) -> Result<Self> {
        let params = ModelParams::new(j.s, j.n, j.u)?;
        let roots: Vec<Vec<C>> = j
            .roots
            .iter()
            .map(|c| c.iter().map(|z| C::new(z.re, z.im)).collect())
            .collect();
        if j.m.len() != j.s || roots.iter().zip(&j.m).any(|(c, &m)| c.len() != m) {
            return Err(Error::InvalidParams("multiplicities do not match roots".into()));
        }
        BetheState::new(params, roots)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootJson {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetheStateJson {
    pub s: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub u: f64,
    #[serde(rename = "M")]
    pub m: Vec<usize>,
    pub roots: Vec<Vec<RootJson>>,
}

fn parity_sign(e: i64) -> f64 {
    if e.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Phase factor `zeta_a`.
pub fn zeta(b: Symbol, state: &BetheState) -> f64 {
    let s = state.s();
    let m = |a: usize| state.multiplicity(a) as i64;
    match b.kind(s) {
        SymbolKind::Zero => 1.0,
        SymbolKind::Unbarred(1) | SymbolKind::Barred(1) => parity_sign(m(0) - m(1)),
        SymbolKind::Unbarred(a) | SymbolKind::Barred(a) => parity_sign(m(a - 1) - m(a)),
    }
}

fn checked_div(num: C, den: C, v: C) -> Result<C> {
    if den == C::new(0.0, 0.0) {
        return Err(Error::Pole(v));
    }
    Ok(num / den)
}

/// Vacuum part `psi_a(v)`.
pub fn psi_vac(b: Symbol, v: C, state: &BetheState) -> Result<C> {
    let p = &state.params;
    let s = p.s as f64;
    let z = zeta(b, state);
    match b.kind(p.s) {
        SymbolKind::Unbarred(1) => {
            let num = phi(p, v, Sign::Plus)
                * phi(p, v + I, Sign::Minus)
                * phi(p, v - I * ((2.0 * s - 1.0) / 2.0), Sign::Plus);
            let den = phi(p, v - I * ((2.0 * s + 1.0) / 2.0), Sign::Plus);
            Ok(checked_div(num, den, v)? * z)
        }
        SymbolKind::Barred(1) => {
            let num = phi(p, v, Sign::Minus)
                * phi(p, v - I, Sign::Plus)
                * phi(p, v + I * ((2.0 * s - 1.0) / 2.0), Sign::Minus);
            let den = phi(p, v + I * ((2.0 * s + 1.0) / 2.0), Sign::Minus);
            Ok(checked_div(num, den, v)? * z)
        }
        _ => Ok(phi(p, v, Sign::Plus) * phi(p, v, Sign::Minus) * z),
    }
}

/// Shifted Q-factors `(color, shift)` of a box function: the value is
/// `psi * prod_num Q(v + shift) / prod_den Q(v + shift)`.
pub struct BoxFactors {
    pub num: [(usize, C); 2],
    pub den: [(usize, C); 2],
}

pub fn box_factors(b: Symbol, s: usize) -> BoxFactors {
    let h = |x: i64| HALF_I * x as f64;
    let si = s as i64;
    match b.kind(s) {
        SymbolKind::Unbarred(a) => {
            let a = a as i64;
            BoxFactors {
                num: [(a as usize - 1, h(a + 1)), (a as usize, h(a - 2))],
                den: [(a as usize - 1, h(a - 1)), (a as usize, h(a))],
            }
        }
        SymbolKind::Zero => BoxFactors {
            num: [(s, h(si - 1)), (s, h(si + 2))],
            den: [(s, h(si + 1)), (s, h(si))],
        },
        SymbolKind::Barred(a) => {
            let a = a as i64;
            BoxFactors {
                num: [(a as usize - 1, -h(a - 2 * si)), (a as usize, -h(a - 2 * si - 3))],
                den: [(a as usize - 1, -h(a - 2 * si - 2)), (a as usize, -h(a - 2 * si - 1))],
            }
        }
    }
}

/// Box function `[b]_v`.
pub fn box_value(b: Symbol, v: C, state: &BetheState) -> Result<C> {
    let f = box_factors(b, state.s());
    let num: C = f.num.iter().map(|&(a, d)| state.q_unchecked(a, v + d)).product();
    let den: C = f.den.iter().map(|&(a, d)| state.q_unchecked(a, v + d)).product();
    Ok(psi_vac(b, v, state)? * checked_div(num, den, v)?)
}

fn rhs_sign(state: &BetheState, a: usize) -> f64 {
    let cd = CartanData::new(state.s());
    let e = state.multiplicity(a - 1) as i64 - state.multiplicity(cd.sigma(a + 1)) as i64;
    -parity_sign(e)
}

/// `|LHS / RHS - 1|` per root, colors in order.
pub fn bae_residual(state: &BetheState) -> Result<Vec<f64>> {
    let s = state.s();
    let cd = CartanData::new(s);
    let p = &state.params;
    let mut out = Vec::with_capacity(state.num_roots());
    for a in 1..=s {
        for (k, &v) in state.roots[a - 1].iter().enumerate() {
            let mut lhs = C::new(1.0, 0.0);
            if a == 1 {
                for j in 1..=p.n {
                    let w = inhomogeneity(p, j);
                    lhs *= (v - w + HALF_I) / (v - w - HALF_I);
                }
            }
            let mut rhs = C::new(rhs_sign(state, a), 0.0);
            for d in 1..=s + 1 {
                let bad = cd.b(a, d);
                if bad == 0 {
                    continue;
                }
                let sh = HALF_I * bad as f64;
                let c = cd.sigma(d);
                for (l, &x) in state.roots[c - 1].iter().enumerate() {
                    if c == a && l == k {
                        rhs = -rhs;
                        continue;
                    }
                    let den = v - x - sh;
                    if den.norm() < 1e-300 {
                        return Err(Error::SingularRoots(format!(
                            "root {v} of color {a} collides with shifted root {x} of color {c}"
                        )));
                    }
                    rhs *= (v - x + sh) / den;
                }
            }
            out.push((lhs / rhs - 1.0).norm());
        }
    }
    Ok(out)
}

pub fn max_residual(state: &BetheState) -> Result<f64> {
    Ok(bae_residual(state)?.into_iter().fold(0.0, f64::max))
}

/// Linear factor `z_k - z_other + c` (or `z_k + c` without `other`).
#[derive(Clone, Copy)]
struct Lin {
    other: Option<usize>,
    c: C,
}

impl Lin {
    fn eval(&self, k: usize, z: &[C]) -> C {
        z[k] - self.other.map_or(C::new(0.0, 0.0), |o| z[o]) + self.c
    }
}

struct PolyRow {
    k: usize,
    sign: f64,
    t1: Vec<Lin>,
    t2: Vec<Lin>,
}

/// Cleared-denominator equations `t1 - sign * t2 = 0`, one row per root.
fn poly_rows(state: &BetheState) -> Vec<PolyRow> {
    let s = state.s();
    let cd = CartanData::new(s);
    let p = &state.params;
    let offsets: Vec<usize> = (0..s)
        .scan(0, |acc, a| {
            let o = *acc;
            *acc += state.roots[a].len();
            Some(o)
        })
        .collect();
    let mut rows = Vec::new();
    for a in 1..=s {
        for k in 0..state.roots[a - 1].len() {
            let me = offsets[a - 1] + k;
            let mut row = PolyRow {
                k: me,
                sign: rhs_sign(state, a),
                t1: Vec::new(),
                t2: Vec::new(),
            };
            if a == 1 {
                for j in 1..=p.n {
                    let w = inhomogeneity(p, j);
                    row.t1.push(Lin { other: None, c: -w + HALF_I });
                    row.t2.push(Lin { other: None, c: -w - HALF_I });
                }
            }
            for d in 1..=s + 1 {
                let bad = cd.b(a, d);
                if bad == 0 {
                    continue;
                }
                let sh = HALF_I * bad as f64;
                let c = cd.sigma(d);
                for l in 0..state.roots[c - 1].len() {
                    let o = offsets[c - 1] + l;
                    if o == me {
                        row.sign = -row.sign;
                        continue;
                    }
                    row.t1.push(Lin { other: Some(o), c: -sh });
                    row.t2.push(Lin { other: Some(o), c: sh });
                }
            }
            rows.push(row);
        }
    }
    rows
}

fn product_and_gradient(k: usize, factors: &[Lin], z: &[C], grad: &mut [C], scale: C) -> C {
    let vals: Vec<C> = factors.iter().map(|f| f.eval(k, z)).collect();
    let n = vals.len();
    let mut prefix = vec![C::new(1.0, 0.0); n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] * vals[i];
    }
    let mut suffix = C::new(1.0, 0.0);
    for i in (0..n).rev() {
        let without = prefix[i] * suffix;
        grad[k] += scale * without;
        if let Some(o) = factors[i].other {
            grad[o] -= scale * without;
        }
        suffix *= vals[i];
    }
    prefix[n]
}

fn poly_system(rows: &[PolyRow], z: &[C]) -> (DVector<C>, DMatrix<C>) {
    let n = z.len();
    let mut f = DVector::zeros(n);
    let mut jac = DMatrix::zeros(n, n);
    let mut grad = vec![C::new(0.0, 0.0); n];
    for (r, row) in rows.iter().enumerate() {
        grad.iter_mut().for_each(|g| *g = C::new(0.0, 0.0));
        let t1 = product_and_gradient(row.k, &row.t1, z, &mut grad, C::new(1.0, 0.0));
        let t2 = product_and_gradient(row.k, &row.t2, z, &mut grad, C::new(-row.sign, 0.0));
        f[r] = t1 - row.sign * t2;
        for (c, g) in grad.iter().enumerate() {
            jac[(r, c)] = *g;
        }
    }
    (f, jac)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-12,
            max_iter: 100,
            max_halvings: 30,
        }
    }
}

/// Damped Newton iteration on the cleared-denominator form of the equations.
/// Steps are halved until the residual norm decreases.
pub fn solve_bae(seed: &BetheState, opts: NewtonOptions) -> Result<BetheState> {
    check_collisions(seed)?;
    let rows = poly_rows(seed);
    let mut z = seed.flat_roots();
    if z.is_empty() {
        return Ok(seed.clone());
    }
    let (mut f, mut jac) = poly_system(&rows, &z);
    for _ in 0..opts.max_iter {
        let state = seed.with_flat(&z);
        if let Ok(r) = max_residual(&state) {
            if r < opts.tol {
                check_collisions(&state)?;
                return Ok(state);
            }
        }
        let step = jac.clone().lu().solve(&(-&f)).ok_or(Error::SingularJacobian)?;
        if step.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularJacobian);
        }
        let f0 = f.norm();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<C> = z.iter().zip(step.iter()).map(|(a, d)| a + d * t).collect();
            let (ft, jt) = poly_system(&rows, &trial);
            if ft.norm() < f0 {
                z = trial;
                f = ft;
                jac = jt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let state = seed.with_flat(&z);
    let residual = max_residual(&state).unwrap_or(f64::INFINITY);
    if residual < opts.tol {
        check_collisions(&state)?;
        return Ok(state);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

fn check_collisions(state: &BetheState) -> Result<()> {
    for (a, col) in state.roots.iter().enumerate() {
        for i in 0..col.len() {
            for j in 0..i {
                if (col[i] - col[j]).norm() < 1e-10 {
                    return Err(Error::SingularRoots(format!(
                        "coinciding roots {} and {} in color {}",
                        col[i],
                        col[j],
                        a + 1
                    )));
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedOptions {
    pub eps: f64,
    pub dx: f64,
}

impl Default for SeedOptions {
    fn default() -> Self {
        SeedOptions { eps: 0.1, dx: 0.1 }
    }
}

/// Two-string seed in the sector `M_1 = ... = M_s = N`. Color `a` gets `N/2`
/// pairs `x_n + i (g/4 pm y_a)` with `y_a = (1 - eps)/2 + (s - a)/2`.
pub fn two_string_seed(params: &ModelParams, opts: SeedOptions) -> BetheState {
    let s = params.s;
    let centre = params.g() as f64 / 4.0;
    let half = params.n / 2;
    let roots = (1..=s)
        .map(|a| {
            let y = (1.0 - opts.eps) / 2.0 + (s - a) as f64 / 2.0;
            (0..half)
                .flat_map(|n| {
                    let x = opts.dx * (n as f64 - (half as f64 - 1.0) / 2.0);
                    [C::new(x, centre + y), C::new(x, centre - y)]
                })
                .collect()
        })
        .collect();
    BetheState {
        params: *params,
        roots,
    }
}

/// Solves the two-string state by continuation in `u` from near zero.
pub fn solve_two_string(params: &ModelParams, step: f64, opts: NewtonOptions) -> Result<BetheState> {
    let mut state = two_string_seed(params, SeedOptions::default());
    let target = params.u;
    let n = (target.abs() / step).ceil().max(1.0) as usize;
    for k in 1..=n {
        let u = target.signum() * (step * k as f64).min(target.abs());
        state.params = params.with_u(u);
        state = solve_bae(&state, opts)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinat::alphabet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn params(s: usize, n: usize, u: f64) -> ModelParams {
        ModelParams::new(s, n, u).unwrap()
    }

    #[test]
    fn phi_examples() {
        let p = params(1, 4, 0.1);
        assert_eq!(phi(&p, c(0.0, -0.1), Sign::Plus).norm(), 0.0);
        let q = phi(&p, c(1.0, 0.0), Sign::Plus);
        let want = c(1.0, 0.1) * c(1.0, 0.1);
        assert!((q - want).norm() < 1e-15);
        let p0 = params(1, 2, 0.0);
        assert_eq!(phi(&p0, c(0.3, 0.7), Sign::Plus), c(0.3, 0.7));
    }

    #[test]
    fn q_examples() {
        let st = BetheState::new(params(1, 2, 0.0), vec![vec![c(0.0, 0.5), c(0.0, -0.5)]]).unwrap();
        assert_eq!(st.q(0, c(3.0, 1.0)).unwrap(), c(1.0, 0.0));
        assert!((st.q(1, c(0.0, 0.0)).unwrap() - c(0.25, 0.0)).norm() < 1e-15);
        assert_eq!(st.q(1, c(0.0, 0.5)).unwrap().norm(), 0.0);
        assert_eq!(st.q(2, c(0.0, 0.0)), Err(Error::ColorOutOfRange(2)));
    }

    #[test]
    fn zeta_examples() {
        let p = params(2, 2, 0.0);
        let st = BetheState::new(p, vec![vec![c(0.1, 0.0), c(0.2, 0.0)], vec![c(0.0, 1.0), c(1.0, 0.0)]]).unwrap();
        assert_eq!(zeta(Symbol::zero(2), &st), 1.0);
        assert_eq!(zeta(Symbol(1), &st), 1.0);
        assert_eq!(zeta(Symbol(2), &st), 1.0);
        let odd = BetheState::new(p, vec![vec![c(0.1, 0.0)], vec![]]).unwrap();
        assert_eq!(zeta(Symbol(1), &odd), -1.0);
        assert_eq!(zeta(Symbol::barred(1, 2), &odd), -1.0);
        assert_eq!(zeta(Symbol(2), &odd), -1.0);
    }

    #[test]
    fn psi_generic_and_zero() {
        let p = params(2, 2, 0.07);
        let st = BetheState::vacuum(p);
        let v = c(0.3, 0.2);
        let want = phi(&p, v, Sign::Plus) * phi(&p, v, Sign::Minus);
        assert!((psi_vac(Symbol(2), v, &st).unwrap() - want).norm() < 1e-15);
        let half = BetheState::vacuum(params(2, 2, 0.5));
        assert!(psi_vac(Symbol(1), c(0.0, 1.0), &half).unwrap().norm() < 1e-15);
        assert!(matches!(psi_vac(Symbol(1), c(0.0, 2.0), &half), Err(Error::Pole(_))));
    }

    #[test]
    fn psi_reflections() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in 1..=3 {
            let p = params(s, 4, -0.08);
            let st = BetheState::vacuum(p);
            let top = Symbol::barred(1, s);
            for _ in 0..10 {
                let v = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let a = psi_vac(Symbol(1), v, &st).unwrap();
                let b = psi_vac(top, -v, &st).unwrap();
                assert!((a - b).norm() <= 1e-12 * a.norm());
                for sym in alphabet(s) {
                    let f = psi_vac(sym, v, &st).unwrap();
                    let g = psi_vac(sym, -v.conj(), &st).unwrap().conj();
                    assert!((f - g).norm() <= 1e-12 * f.norm());
                }
            }
        }
    }

    #[test]
    fn box_without_roots_is_vacuum() {
        let p = params(2, 2, 0.05);
        let st = BetheState::vacuum(p);
        let v = c(0.4, -0.3);
        for b in alphabet(2) {
            assert_eq!(box_value(b, v, &st).unwrap(), psi_vac(b, v, &st).unwrap());
        }
    }

    #[test]
    fn zero_box_s1_matches_display() {
        let p = params(1, 2, -0.05);
        let st = BetheState::new(p, vec![vec![c(0.2, 0.4), c(-0.3, 1.1)]]).unwrap();
        let v = c(0.37, 0.11);
        let q = |w: C| st.q(1, w).unwrap();
        let want = psi_vac(Symbol(2), v, &st).unwrap() * q(v) * q(v + I * 1.5)
            / (q(v + I) * q(v + I * 0.5));
        assert!((box_value(Symbol(2), v, &st).unwrap() - want).norm() < 1e-13 * want.norm());
    }

    #[test]
    fn cartan_data() {
        let cd = CartanData::new(3);
        assert_eq!(cd.b(3, 4), -1);
        assert_eq!(cd.b(2, 2), 2);
        assert_eq!(cd.b(1, 3), 0);
        assert_eq!(cd.sigma(4), 3);
        for a in 1..=3 {
            for d in 1..=3 {
                assert_eq!(cd.incidence(a, d), cd.incidence(d, a));
                assert_eq!(cd.b(a, d), cd.b(d, a));
            }
        }
        assert_eq!(cd.incidence(3, 3), 1);
        assert_eq!(cd.incidence(2, 2), 0);
    }

    #[test]
    fn inhomogeneities() {
        let p = params(2, 4, 0.1);
        assert_eq!(inhomogeneity(&p, 2), c(0.0, 0.1));
        assert_eq!(inhomogeneity(&p, 1), c(0.0, 2.4));
    }

    #[test]
    fn empty_residual() {
        let st = BetheState::vacuum(params(2, 2, 0.1));
        assert!(bae_residual(&st).unwrap().is_empty());
    }

    #[test]
    fn self_interaction_on_last_color() {
        // for s = 1 the right-hand side is Q(v+i)Q(v-i/2) / (Q(v-i)Q(v+i/2))
        let p = params(1, 2, 0.0);
        let roots = vec![c(0.3, 0.2), c(-0.5, 0.9)];
        let st = BetheState::new(p, vec![roots.clone()]).unwrap();
        let v = roots[0];
        let x = roots[1];
        let mut lhs = C::new(1.0, 0.0);
        for j in 1..=2 {
            let w = inhomogeneity(&p, j);
            lhs *= (v - w + HALF_I) / (v - w - HALF_I);
        }
        let ratio = (v - x + I) * (v - x - HALF_I) / ((v - x - I) * (v - x + HALF_I));
        let rhs = -1.0 * ratio; // two self factors cancel; sign is -(-1)^(N - M_1)
        let want = (lhs / rhs - 1.0).norm();
        assert!((bae_residual(&st).unwrap()[0] - want).abs() < 1e-12);
    }

    #[test]
    fn analytic_jacobian_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = params(2, 2, -0.05);
        let st = BetheState::random(p, &[2, 2], 1.0, &mut rng);
        let rows = poly_rows(&st);
        let z = st.flat_roots();
        let (f0, jac) = poly_system(&rows, &z);
        let h = 1e-6;
        for l in 0..z.len() {
            let mut zp = z.clone();
            zp[l] += h;
            let mut zm = z.clone();
            zm[l] -= h;
            let fd = (poly_system(&rows, &zp).0 - poly_system(&rows, &zm).0) / C::new(2.0 * h, 0.0);
            for r in 0..z.len() {
                assert!((fd[r] - jac[(r, l)]).norm() < 1e-6 * (1.0 + f0.norm()));
            }
        }
    }

    #[test]
    fn solve_smallest_case() {
        let p = params(1, 2, -0.05);
        let st = solve_two_string(&p, 0.01, NewtonOptions::default()).unwrap();
        assert!(max_residual(&st).unwrap() < 1e-10);
        let mut ims: Vec<f64> = st.roots[0].iter().map(|z| z.im).collect();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] - 0.485).abs() < 1e-3 && (ims[1] - 1.015).abs() < 1e-3);
        assert!(st.is_symmetric(1e-8));
    }

    #[test]
    fn on_shell_input_is_fixed_point() {
        let p = params(2, 2, -0.05);
        let st = solve_two_string(&p, 0.01, NewtonOptions::default()).unwrap();
        let again = solve_bae(&st, NewtonOptions::default()).unwrap();
        for (a, b) in st.flat_roots().iter().zip(again.flat_roots()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn bad_seed_reports_failure() {
        let p = params(1, 2, -0.05);
        let seed = BetheState::new(p, vec![vec![c(1e3, 0.0), c(1e3, 1e-12)]]).unwrap();
        assert!(solve_bae(&seed, NewtonOptions::default()).is_err());
    }

    #[test]
    fn coinciding_roots_rejected() {
        let p = params(1, 2, -0.05);
        let seed = BetheState::new(p, vec![vec![c(0.0, 0.5), c(0.0, 0.5)]]).unwrap();
        assert!(matches!(solve_bae(&seed, NewtonOptions::default()), Err(Error::SingularRoots(_))));
    }

    #[test]
    fn seed_geometry() {
        let p = params(2, 2, -0.05);
        let st = two_string_seed(&p, SeedOptions::default());
        assert_eq!(st.roots[1], vec![c(0.0, 1.25 + 0.45), c(0.0, 1.25 - 0.45)]);
        assert_eq!(st.roots[0], vec![c(0.0, 1.25 + 0.95), c(0.0, 1.25 - 0.95)]);
        assert!(st.is_symmetric(1e-12));
    }

    #[test]
    fn json_round_trip() {
        let p = params(2, 2, -0.05);
        let st = two_string_seed(&p, SeedOptions::default());
        let back = BetheState::from_json(&st.to_json()).unwrap();
        assert_eq!(back, st);
    }
}
