//! Thermodynamic Bethe ansatz: kernels, the constant Y-system, the truncated
//! fixed-point solver and the free energy.
//!
//! Temperatures are in units with `k_B = 1`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::bethe::{phi, Sign, C};
use crate::dvf::Dvf;
use crate::error::{Error, Result};
use crate::special::digamma;

/// Uniform symmetric grid with trapezoid weights; `v = 0` is always a node.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub v_max: f64,
    pub step: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(v_max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(v_max > step) {
            return Err(Error::InvalidParams(format!("bad grid v_max={v_max} step={step}")));
        }
        let half = (v_max / step).round() as i64;
        let nodes: Vec<f64> = (-half..=half).map(|k| k as f64 * step).collect();
        let mut weights = vec![step; nodes.len()];
        weights[0] = step / 2.0;
        *weights.last_mut().expect("nonempty grid") = step / 2.0;
        Ok(Grid {
            v_max: half as f64 * step,
            step,
            nodes,
            weights,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trapezoid integral of grid samples.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid::new(20.0, 0.05).expect("default grid")
    }
}

/// `K(v) = 1 / (2 cosh(pi v))`.
pub fn kernel_k(v: f64) -> f64 {
    0.5 / (PI * v).cosh()
}

/// `int_{-inf}^x K`.
pub fn cdf_k(x: f64) -> f64 {
    (PI * x).exp().atan() / PI
}

fn g_theta(a: usize, s: usize) -> f64 {
    let g = (2 * s + 1) as f64;
    (g - 2.0 * a as f64) * PI / g
}

/// `G_a(v)`; defined for `1 <= a <= 2s`.
pub fn kernel_g(a: usize, v: f64, s: usize) -> f64 {
    let g = (2 * s + 1) as f64;
    let th = g_theta(a, s);
    let x = 2.0 * PI * v / g;
    if x.abs() > 350.0 {
        return 0.0;
    }
    4.0 / g * (th / 2.0).cos() * x.cosh() / (th.cos() + (2.0 * x).cosh())
}

/// `int_{-inf}^x G_a`; the total mass is one.
pub fn cdf_g(a: usize, x: f64, s: usize) -> f64 {
    let g = (2 * s + 1) as f64;
    let th = g_theta(a, s);
    ((2.0 * PI * x / g).sinh() / (th / 2.0).cos()).atan() / PI + 0.5
}

fn c_indices(a: usize, d: usize) -> impl Iterator<Item = usize> {
    (1..=a.min(d)).map(move |l| a.abs_diff(d) + 2 * l - 1)
}

/// `C_ad(v) = sum_{l=1}^{min(a,d)} G_{|a-d|+2l-1}(v)`.
pub fn kernel_c(a: usize, d: usize, v: f64, s: usize) -> f64 {
    c_indices(a, d).map(|b| kernel_g(b, v, s)).sum()
}

pub fn cdf_c(a: usize, d: usize, x: f64, s: usize) -> f64 {
    c_indices(a, d).map(|b| cdf_g(b, x, s)).sum()
}

/// Incidence `I_ad` of the tadpole diagram: neighbours, plus a loop at `a = d = s`.
pub fn incidence(a: usize, d: usize, s: usize) -> f64 {
    let mut v = 0.0;
    if a + 1 == d || d + 1 == a {
        v += 1.0;
    }
    if a == d && a == s {
        v += 1.0;
    }
    v
}

/// `D̂_cd(k) = 2 delta_cd cosh(k/2) - I_cd`.
pub fn d_hat(c: usize, d: usize, k: f64, s: usize) -> f64 {
    let diag = if c == d { 2.0 * (k / 2.0).cosh() } else { 0.0 };
    diag - incidence(c, d, s)
}

/// `sup_k max |Ĉ(k) D̂(k) - 1|`, with `Ĉ` by trapezoid quadrature of `C` on
/// `[-v_max, v_max]`.
pub fn fourier_relation_residual(s: usize, ks: &[f64], v_max: f64, step: f64) -> Result<f64> {
    let grid = Grid::new(v_max, step)?;
    let mut worst: f64 = 0.0;
    for &k in ks {
        let mut ch = vec![vec![0.0; s]; s];
        for (a, row) in ch.iter_mut().enumerate() {
            for (d, x) in row.iter_mut().enumerate() {
                let f: Vec<f64> = grid.nodes().iter().map(|&v| kernel_c(a + 1, d + 1, v, s) * (k * v).cos()).collect();
                *x = grid.integrate(&f);
            }
        }
        for a in 0..s {
            for d in 0..s {
                let prod: f64 = (0..s).map(|c| ch[a][c] * d_hat(c + 1, d + 1, k, s)).sum();
                let target = if a == d { 1.0 } else { 0.0 };
                worst = worst.max((prod - target).abs());
            }
        }
    }
    Ok(worst)
}

/// `m (g + m) / (a (g - a))`; zero at `m = 0`.
pub fn constant_y(a: usize, m: usize, s: usize) -> f64 {
    let g = (2 * s + 1) as f64;
    let (a, m) = (a as f64, m as f64);
    m * (g + m) / (a * (g - a))
}

/// Largest relative residual of the constant Y-system for `a <= s`, `1 <= m <= m_max`.
pub fn check_constant_ysystem(s: usize, m_max: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 1..=s {
        for m in 1..=m_max {
            let y = constant_y(a, m, s);
            let mut rhs = (1.0 + constant_y(a, m - 1, s)) * (1.0 + constant_y(a, m + 1, s));
            for d in 1..=s {
                rhs /= (1.0 + 1.0 / constant_y(d, m, s)).powf(incidence(a, d, s));
            }
            worst = worst.max(((y * y - rhs) / (y * y)).abs());
        }
    }
    worst
}

/// Trapezoid convolution `(h * f)(v_i)` against an even kernel on a grid.
///
/// `f` is split into its asymptotic value, integrated against the exact
/// kernel mass, and a remainder that decays inside the grid.
#[derive(Debug, Clone)]
pub struct Convolver {
    n: usize,
    weights: Vec<f64>,
    kern: Vec<f64>,
    mass: f64,
}

impl Convolver {
    pub fn new(grid: &Grid, kernel: impl Fn(f64) -> f64, cdf: impl Fn(f64) -> f64) -> Self {
        let n = grid.len();
        let h = grid.step;
        let kern = (0..2 * n - 1).map(|k| kernel((k as f64 - (n - 1) as f64) * h)).collect();
        Convolver {
            n,
            weights: grid.weights().to_vec(),
            kern,
            mass: cdf(f64::INFINITY),
        }
    }

    pub fn apply(&self, f: &[f64], f_inf: f64) -> Vec<f64> {
        let wf: Vec<f64> = f.iter().zip(&self.weights).map(|(a, w)| (a - f_inf) * w).collect();
        (0..self.n)
            .map(|i| {
                // k[j] = kernel(v_j - v_i), equal to kernel(v_i - v_j) for even kernels
                let k = &self.kern[self.n - 1 - i..2 * self.n - 1 - i];
                let s: f64 = k.iter().zip(&wf).map(|(a, b)| a * b).sum();
                s + self.mass * f_inf
            })
            .collect()
    }
}

/// `f * h` with `h = K`.
pub fn convolve_k(grid: &Grid, f: &[f64], f_inf: f64) -> Vec<f64> {
    Convolver::new(grid, kernel_k, cdf_k).apply(f, f_inf)
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Driving {
    /// `pi J beta / cosh(pi v)` on level `(1, 1)`.
    TrotterLimit { coupling: f64, beta: f64 },
    /// Finite Trotter number: the `log tanh tanh` term on level `(1, 1)`.
    FiniteN { n: usize, u: f64 },
}

impl Driving {
    fn samples(&self, grid: &Grid) -> Result<Vec<f64>> {
        match *self {
            Driving::TrotterLimit { coupling, beta } => {
                Ok(grid.nodes().iter().map(|&v| PI * coupling * beta / (PI * v).cosh()).collect())
            }
            Driving::FiniteN { n, u } => {
                if u.abs() >= 0.5 {
                    return Err(Error::Domain(format!("finite-N driving needs |u| < 1/2, got {u}")));
                }
                let sg = if -u > 0.0 { 1.0 } else { -1.0 };
                let c = 0.5 + sg * u;
                Ok(grid
                    .nodes()
                    .iter()
                    .map(|&v| {
                        let t = (C::new(v, c) * (PI / 2.0)).tanh();
                        -sg * n as f64 / 2.0 * t.norm_sqr().ln()
                    })
                    .collect())
            }
        }
    }
}

/// Which fixed-point equation is iterated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TbaForm {
    /// `K * log[(1+Y_{m-1})(1+Y_{m+1}) / prod_d (1+1/Y^d_m)^{I_ad}]`.
    Standard,
    /// `2 pi beta J delta_{m1} G_a + sum_b C_ab * log[(1+Y_{m-1})(1+Y_{m+1}) / prod_d (1+Y^d_m)^{I_bd}]`.
    Rewritten,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TbaOptions {
    pub m_max: usize,
    pub relax: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TbaOptions {
    fn default() -> Self {
        TbaOptions {
            m_max: 12,
            relax: 0.5,
            tol: 1e-10,
            max_iter: 20000,
        }
    }
}

/// `log Y^(a)_m` on a grid for `1 <= a <= s`, `1 <= m <= m_max`; level
/// `m_max + 1` is held at the constant solution.
#[derive(Debug, Clone, PartialEq)]
pub struct YField {
    pub grid: Grid,
    pub s: usize,
    pub m_max: usize,
    pub driving: Driving,
    pub form: TbaForm,
    pub iterations: usize,
    pub final_change: f64,
    log_y: Vec<Vec<Vec<f64>>>,
}

impl YField {
    /// Constant solution on every level.
    pub fn constant(grid: Grid, s: usize, m_max: usize, driving: Driving, form: TbaForm) -> Self {
        let n = grid.len();
        let log_y = (1..=s)
            .map(|a| (1..=m_max).map(|m| vec![constant_y(a, m, s).ln(); n]).collect())
            .collect();
        YField {
            grid,
            s,
            m_max,
            driving,
            form,
            iterations: 0,
            final_change: f64::NAN,
            log_y,
        }
    }

    pub fn log_y(&self, a: usize, m: usize) -> &[f64] {
        &self.log_y[a - 1][m - 1]
    }

    pub fn y(&self, a: usize, m: usize) -> Vec<f64> {
        self.log_y(a, m).iter().map(|x| x.exp()).collect()
    }

    /// Multiplies one level by `factor`.
    pub fn perturbed(&self, a: usize, m: usize, factor: f64) -> Self {
        let mut f = self.clone();
        for x in &mut f.log_y[a - 1][m - 1] {
            *x += factor.ln();
        }
        f
    }

    /// Replaces level `(a, m)` by externally computed positive samples.
    pub fn with_level(&self, a: usize, m: usize, y: &[f64]) -> Result<Self> {
        if y.len() != self.grid.len() {
            return Err(Error::InvalidParams("sample count does not match grid".into()));
        }
        if y.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::NonPositiveY);
        }
        let mut f = self.clone();
        f.log_y[a - 1][m - 1] = y.iter().map(|x| x.ln()).collect();
        Ok(f)
    }

    pub fn is_even(&self, tol: f64) -> bool {
        self.log_y
            .iter()
            .flatten()
            .all(|lv| lv.iter().zip(lv.iter().rev()).all(|(a, b)| (a - b).abs() <= tol))
    }
}

struct FixedPointMap {
    s: usize,
    m_max: usize,
    form: TbaForm,
    k: Convolver,
    c: Vec<Vec<Convolver>>,
    drive: Vec<Vec<f64>>,
}

impl FixedPointMap {
    fn new(grid: &Grid, s: usize, m_max: usize, driving: Driving, form: TbaForm) -> Result<Self> {
        let k = Convolver::new(grid, kernel_k, cdf_k);
        let (c, drive) = match form {
            TbaForm::Standard => {
                let mut d = vec![vec![0.0; grid.len()]; s];
                d[0] = driving.samples(grid)?;
                (Vec::new(), d)
            }
            TbaForm::Rewritten => {
                let Driving::TrotterLimit { coupling, beta } = driving else {
                    return Err(Error::InvalidParams("the rewritten form needs the Trotter-limit driving".into()));
                };
                let c = (1..=s)
                    .map(|a| {
                        (1..=s)
                            .map(|b| Convolver::new(grid, |v| kernel_c(a, b, v, s), |x| cdf_c(a, b, x, s)))
                            .collect()
                    })
                    .collect();
                let d = (1..=s)
                    .map(|a| grid.nodes().iter().map(|&v| 2.0 * PI * beta * coupling * kernel_g(a, v, s)).collect())
                    .collect();
                (c, d)
            }
        };
        Ok(FixedPointMap {
            s,
            m_max,
            form,
            k,
            c,
            drive,
        })
    }

    fn level<'a>(&self, l: &'a [Vec<Vec<f64>>], closure: &'a [Vec<f64>], a: usize, m: usize) -> &'a [f64] {
        if m == self.m_max + 1 {
            &closure[a - 1]
        } else {
            &l[a - 1][m - 1]
        }
    }

    fn apply(&self, l: &[Vec<Vec<f64>>], n: usize) -> Vec<Vec<Vec<f64>>> {
        let s = self.s;
        let closure: Vec<Vec<f64>> = (1..=s).map(|a| vec![constant_y(a, self.m_max + 1, s).ln(); n]).collect();
        // bracket for colour `b` at level `m`, with its asymptotic value
        let bracket = |b: usize, m: usize| -> (Vec<f64>, f64) {
            let mut f = vec![0.0; n];
            let mut finf = 0.0;
            if m > 1 {
                for (x, y) in f.iter_mut().zip(self.level(l, &closure, b, m - 1)) {
                    *x += softplus(*y);
                }
                finf += constant_y(b, m - 1, s).ln_1p();
            }
            for (x, y) in f.iter_mut().zip(self.level(l, &closure, b, m + 1)) {
                *x += softplus(*y);
            }
            finf += constant_y(b, m + 1, s).ln_1p();
            for d in 1..=s {
                let w = incidence(b, d, s);
                if w == 0.0 {
                    continue;
                }
                let cd = constant_y(d, m, s);
                for (x, y) in f.iter_mut().zip(&l[d - 1][m - 1]) {
                    *x -= w * match self.form {
                        TbaForm::Standard => softplus(-*y),
                        TbaForm::Rewritten => softplus(*y),
                    };
                }
                finf -= w * match self.form {
                    TbaForm::Standard => (1.0 / cd).ln_1p(),
                    TbaForm::Rewritten => cd.ln_1p(),
                };
            }
            (f, finf)
        };
        let mut out = vec![vec![Vec::new(); self.m_max]; s];
        for m in 1..=self.m_max {
            let brackets: Vec<(Vec<f64>, f64)> = (1..=s).map(|b| bracket(b, m)).collect();
            for a in 1..=s {
                let mut val = match self.form {
                    TbaForm::Standard => self.k.apply(&brackets[a - 1].0, brackets[a - 1].1),
                    TbaForm::Rewritten => {
                        let mut acc = vec![0.0; n];
                        for b in 1..=s {
                            for (x, y) in acc.iter_mut().zip(self.c[a - 1][b - 1].apply(&brackets[b - 1].0, brackets[b - 1].1)) {
                                *x += y;
                            }
                        }
                        acc
                    }
                };
                let drives = match self.form {
                    TbaForm::Standard => a == 1 && m == 1,
                    TbaForm::Rewritten => m == 1,
                };
                if drives {
                    for (x, d) in val.iter_mut().zip(&self.drive[a - 1]) {
                        *x += d;
                    }
                }
                out[a - 1][m - 1] = val;
            }
        }
        out
    }
}

fn sup_diff(a: &[Vec<Vec<f64>>], b: &[Vec<Vec<f64>>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

/// Damped fixed-point iteration from the constant solution.
pub fn tba_solve(grid: &Grid, s: usize, driving: Driving, form: TbaForm, opts: TbaOptions) -> Result<YField> {
    if opts.m_max < 2 {
        return Err(Error::InvalidParams("m_max must be at least 2".into()));
    }
    if s == 0 {
        return Err(Error::InvalidParams("s must be positive".into()));
    }
    let map = FixedPointMap::new(grid, s, opts.m_max, driving, form)?;
    let mut field = YField::constant(grid.clone(), s, opts.m_max, driving, form);
    let n = grid.len();
    for it in 1..=opts.max_iter {
        let new = map.apply(&field.log_y, n);
        if new.iter().flatten().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonPositiveY);
        }
        let diff = sup_diff(&new, &field.log_y);
        for (old, nw) in field.log_y.iter_mut().flatten().zip(new.iter().flatten()) {
            for (x, y) in old.iter_mut().zip(nw) {
                *x += opts.relax * (y - *x);
            }
        }
        field.iterations = it;
        field.final_change = diff;
        if diff < opts.tol {
            return Ok(field);
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: field.final_change,
    })
}

/// Sup-norm residual of the field's own fixed-point equation.
pub fn y_system_residual(field: &YField) -> Result<f64> {
    let map = FixedPointMap::new(&field.grid, field.s, field.m_max, field.driving, field.form)?;
    let new = map.apply(&field.log_y, field.grid.len());
    Ok(sup_diff(&new, &field.log_y))
}

/// `J {(2/g)(2 log 2 - psi(1/g) + psi((3+2s)/(2+4s))) - 1}`.
pub fn ground_energy_const(s: usize, coupling: f64) -> Result<f64> {
    let g = (2 * s + 1) as f64;
    let sf = s as f64;
    let bracket = 2.0 * std::f64::consts::LN_2 - digamma(1.0 / g)? + digamma((3.0 + 2.0 * sf) / (2.0 + 4.0 * sf))?;
    Ok(coupling * (2.0 / g * bracket - 1.0))
}

/// `sum_a (G_a * log(1 + Y^(a)_1))(v0)`, the asymptotic constant taken
/// against the full kernel mass.
pub fn g_convolution_at(field: &YField, v0: f64) -> f64 {
    let grid = &field.grid;
    (1..=field.s)
        .map(|a| {
            let c = constant_y(a, 1, field.s).ln_1p();
            let f: Vec<f64> = field
                .log_y(a, 1)
                .iter()
                .zip(grid.nodes())
                .map(|(l, &v)| kernel_g(a, v0 - v, field.s) * (softplus(*l) - c))
                .collect();
            grid.integrate(&f) + c
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermoResult {
    pub s: usize,
    pub coupling: f64,
    pub beta: f64,
    pub free_energy: f64,
    pub ground_energy: f64,
    pub iterations: usize,
    pub final_change: f64,
}

/// Free energy from a Trotter-limit field at the field's own `J` and `beta`.
pub fn free_energy(field: &YField) -> Result<ThermoResult> {
    let Driving::TrotterLimit { coupling, beta } = field.driving else {
        return Err(Error::InvalidParams("free energy needs a Trotter-limit field".into()));
    };
    let e0 = ground_energy_const(field.s, coupling)?;
    let f = e0 - g_convolution_at(field, 0.0) / beta;
    Ok(ThermoResult {
        s: field.s,
        coupling,
        beta,
        free_energy: f,
        ground_energy: e0,
        iterations: field.iterations,
        final_change: field.final_change,
    })
}

/// `N int_0^{k_max} 2 e^{-k/2} sinh(k u) cos(k v) cosh((2s-1)k/4) / (k cosh((2s+1)k/4)) dk`,
/// trapezoid with step `dk`.
pub fn k_integral(s: usize, n: usize, u: f64, v: f64, k_max: f64, dk: f64) -> f64 {
    let sf = s as f64;
    let integrand = |k: f64| {
        if k == 0.0 {
            return 2.0 * u;
        }
        let ratio = ((2.0 * sf - 1.0) * k / 4.0).cosh() / ((2.0 * sf + 1.0) * k / 4.0).cosh();
        2.0 * (-k / 2.0).exp() * (k * u).sinh() * (k * v).cos() * ratio / k
    };
    let steps = (k_max / dk).round() as usize;
    let mut acc = 0.5 * (integrand(0.0) + integrand(steps as f64 * dk));
    for j in 1..steps {
        acc += integrand(j as f64 * dk);
    }
    n as f64 * acc * dk
}

/// Right-hand side of the `log T^(1)_1` relation at a real point, given the
/// first-level Y functions.
pub fn log_t11_rhs(field: &YField, n: usize, u: f64, v0: f64, k_max: f64) -> Result<f64> {
    let p = crate::params::ModelParams::new(field.s, n, u)?;
    let vac = phi(&p, C::new(v0, 1.0), Sign::Minus) * phi(&p, C::new(v0, -1.0), Sign::Plus);
    if !(vac.re > 0.0) {
        return Err(Error::Domain("vacuum term is not positive on the real axis".into()));
    }
    Ok(vac.re.ln() + g_convolution_at(field, v0) + k_integral(field.s, n, u, v0, k_max, field.grid.step))
}

pub const DEFAULT_K_MAX: f64 = 80.0;

/// Sup over `points` of `|log T^(1)_1(v) - rhs(v)|` where both `T` and the
/// `Y^(a)_1` samples on the grid come from the state's DVF.
pub fn log_t11_identity_check(dvf: &Dvf, grid: &Grid, points: &[f64], k_max: f64) -> Result<f64> {
    let p = *dvf.params();
    let s = p.s;
    let mut field = YField::constant(grid.clone(), s, 2, Driving::FiniteN { n: p.n, u: p.u }, TbaForm::Standard);
    for a in 1..=s {
        let y = grid
            .nodes()
            .iter()
            .map(|&v| dvf.y(a, 1, C::new(v, 0.0)).map(|z| z.re))
            .collect::<Result<Vec<f64>>>()?;
        field = field.with_level(a, 1, &y)?;
    }
    let mut worst: f64 = 0.0;
    for &v0 in points {
        let t = dvf.t_norm(1, 1, C::new(v0, 0.0))?;
        let rhs = log_t11_rhs(&field, p.n, p.u, v0, k_max)?;
        worst = worst.max((t.ln() - C::new(rhs, 0.0)).norm());
    }
    Ok(worst)
}
