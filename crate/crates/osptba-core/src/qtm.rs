//! Explicit Ř, R and R̃ matrices, the chain Hamiltonian and the staggered
//! quantum transfer matrix for small Trotter numbers.
//!
//! Two-site operators are `d^2 x d^2` matrices with element
//! `<c d| X |a b>` at `(c*d + d', a*d + b)`, local indices `0..2s` in
//! alphabet order. Multi-site index layout is row-major with factor 0 most
//! significant.

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bethe::{solve_two_string, NewtonOptions, C};
use crate::dvf::Dvf;
use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Dense operator on `factors` tensor factors of local dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub d: usize,
    pub factors: usize,
    pub matrix: DMatrix<C>,
}

impl DenseOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Little-endian dump: `u64` rows, `u64` cols, then row-major
    /// interleaved `(re, im)` doubles.
    pub fn write_le<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.matrix.nrows() as u64).to_le_bytes())?;
        w.write_all(&(self.matrix.ncols() as u64).to_le_bytes())?;
        for r in 0..self.matrix.nrows() {
            for c in 0..self.matrix.ncols() {
                let z = self.matrix[(r, c)];
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

fn parity(i: usize, s: usize) -> i32 {
    i32::from(i != s)
}

fn two_site(s: usize, f: impl Fn(usize, usize, usize, usize) -> C) -> DenseOperator {
    let d = 2 * s + 1;
    let mut m = DMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for e in 0..d {
                    m[(c * d + e, a * d + b)] = f(a, b, c, e);
                }
            }
        }
    }
    DenseOperator { d, factors: 2, matrix: m }
}

/// Anti-diagonal pairing, `+1` on unbarred and zero rows, `-1` on barred rows.
pub fn alpha(s: usize) -> DMatrix<f64> {
    let d = 2 * s + 1;
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        a[(i, d - 1 - i)] = if i <= s { 1.0 } else { -1.0 };
    }
    a
}

/// Graded permutation `P^{cd}_{ab} = (-1)^{p(a)p(b)} delta_ad delta_bc`.
pub fn build_p(s: usize) -> DenseOperator {
    two_site(s, |a, b, c, e| {
        if a == e && b == c {
            C::new(if parity(a, s) * parity(b, s) == 1 { -1.0 } else { 1.0 }, 0.0)
        } else {
            C::new(0.0, 0.0)
        }
    })
}

/// `E^{cd}_{ab} = alpha_ab (alpha^{-1})_cd`.
pub fn build_e(s: usize) -> DenseOperator {
    let al = alpha(s);
    let inv = al.transpose();
    two_site(s, |a, b, c, e| C::new(al[(a, b)] * inv[(c, e)], 0.0))
}

/// `Ř(v) = I + v P - 2v/(2v - g) E`.
pub fn build_rcheck(v: C, s: usize) -> Result<DenseOperator> {
    let g = (2 * s + 1) as f64;
    let den = v * 2.0 - g;
    if den.norm() < 1e-14 {
        return Err(Error::Pole(v));
    }
    let p = build_p(s).matrix;
    let e = build_e(s).matrix;
    let d = 2 * s + 1;
    let m = DMatrix::identity(d * d, d * d) + p * v - e * (v * 2.0 / den);
    Ok(DenseOperator { d, factors: 2, matrix: m })
}

/// `R^{cd}_{ab}(v) = Ř^{cd}_{ba}(v)`.
pub fn build_r(v: C, s: usize) -> Result<DenseOperator> {
    let rc = build_rcheck(v, s)?;
    let d = rc.d;
    Ok(two_site(s, |a, b, c, e| rc.matrix[(c * d + e, b * d + a)]))
}

/// `R̃ = R` with the first tensor factor transposed.
pub fn build_rtilde(v: C, s: usize) -> Result<DenseOperator> {
    let r = build_r(v, s)?;
    let d = r.d;
    Ok(two_site(s, |a, b, c, e| r.matrix[(a * d + e, c * d + b)]))
}

/// Embeds a two-site operator on factors `(x, y)` of an `n`-fold product.
pub fn embed(op: &DenseOperator, x: usize, y: usize, n: usize) -> DenseOperator {
    let d = op.d;
    let sparse = Sparse2::from_dense(op);
    let dim = d.pow(n as u32);
    let mut out = DMatrix::zeros(dim, dim);
    let mut col = vec![C::new(0.0, 0.0); dim];
    let mut res = vec![C::new(0.0, 0.0); dim];
    for j in 0..dim {
        col.iter_mut().for_each(|z| *z = C::new(0.0, 0.0));
        col[j] = C::new(1.0, 0.0);
        sparse.apply(x, y, n, &col, &mut res);
        for i in 0..dim {
            out[(i, j)] = res[i];
        }
    }
    DenseOperator { d, factors: n, matrix: out }
}

/// Nonzero entries of a two-site operator grouped by input pair.
#[derive(Debug, Clone)]
struct Sparse2 {
    d: usize,
    cols: Vec<Vec<(usize, usize, C)>>,
}

impl Sparse2 {
    fn from_dense(op: &DenseOperator) -> Self {
        let d = op.d;
        let mut cols = vec![Vec::new(); d * d];
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        let z = op.matrix[(c * d + e, a * d + b)];
                        if z != C::new(0.0, 0.0) {
                            cols[a * d + b].push((c, e, z));
                        }
                    }
                }
            }
        }
        Sparse2 { d, cols }
    }

    /// `out = X_{xy} input` on `n` factors.
    fn apply(&self, x: usize, y: usize, n: usize, input: &[C], out: &mut [C]) {
        let d = self.d;
        let sx = d.pow((n - 1 - x) as u32);
        let sy = d.pow((n - 1 - y) as u32);
        out.iter_mut().for_each(|z| *z = C::new(0.0, 0.0));
        for (idx, &val) in input.iter().enumerate() {
            if val == C::new(0.0, 0.0) {
                continue;
            }
            let a = (idx / sx) % d;
            let b = (idx / sy) % d;
            let base = idx - a * sx - b * sy;
            for &(c, e, z) in &self.cols[a * d + b] {
                out[base + c * sx + e * sy] += z * val;
            }
        }
    }
}

/// `J sum_k (P + (2/g) E)_{k,k+1}` on `l` sites with periodic wrap.
pub fn build_hamiltonian(l: usize, s: usize, coupling: f64, cap: usize) -> Result<DenseOperator> {
    if l < 2 {
        return Err(Error::InvalidParams("chain length must be at least 2".into()));
    }
    let d = 2 * s + 1;
    let dim = d.checked_pow(l as u32).unwrap_or(usize::MAX);
    if dim > cap {
        return Err(Error::SizeCap { dim, cap });
    }
    let g = (2 * s + 1) as f64;
    let h2 = DenseOperator {
        d,
        factors: 2,
        matrix: (build_p(s).matrix + build_e(s).matrix * C::new(2.0 / g, 0.0)) * C::new(coupling, 0.0),
    };
    let mut m = DMatrix::zeros(dim, dim);
    for k in 0..l {
        m += embed(&h2, k, (k + 1) % l, l).matrix;
    }
    Ok(DenseOperator { d, factors: l, matrix: m })
}

/// Cyclic shift of `l` sites: `|i_0 ... i_{l-1}> -> |i_{l-1} i_0 ...>`.
pub fn cyclic_shift(l: usize, s: usize) -> DenseOperator {
    let d = 2 * s + 1;
    let dim = d.pow(l as u32);
    let mut m = DMatrix::zeros(dim, dim);
    for idx in 0..dim {
        let last = idx % d;
        let rest = idx / d;
        m[(last * d.pow(l as u32 - 1) + rest, idx)] = C::new(1.0, 0.0);
    }
    DenseOperator { d, factors: l, matrix: m }
}

/// Staggered transfer matrix at spectral point `v`, applied matrix-free.
///
/// Factor 0 is the auxiliary space, factors `1..=N` the Trotter sites;
/// the monodromy is `prod_k R_{2k,aux}(u + iv) R̃_{aux,2k-1}(u - iv)`
/// followed by an ordinary trace over the auxiliary space.
#[derive(Debug, Clone)]
pub struct Qtm {
    pub params: ModelParams,
    pub v: C,
    r: Sparse2,
    rt: Sparse2,
}

impl Qtm {
    pub fn new(params: ModelParams, v: C) -> Result<Self> {
        let s = params.s;
        let u = C::new(params.u, 0.0);
        let i = C::new(0.0, 1.0);
        let r = Sparse2::from_dense(&build_r(u + i * v, s)?);
        let rt = Sparse2::from_dense(&build_rtilde(u - i * v, s)?);
        Ok(Qtm { params, v, r, rt })
    }

    pub fn local_dim(&self) -> usize {
        self.params.g()
    }

    pub fn dim(&self) -> usize {
        self.local_dim().pow(self.params.n as u32)
    }

    pub fn apply(&self, x: &[C], y: &mut [C]) {
        let d = self.local_dim();
        let n = self.params.n + 1;
        let dim = self.dim();
        let mut buf = vec![C::new(0.0, 0.0); dim * d];
        let mut tmp = vec![C::new(0.0, 0.0); dim * d];
        y.iter_mut().for_each(|z| *z = C::new(0.0, 0.0));
        for aux in 0..d {
            buf.iter_mut().for_each(|z| *z = C::new(0.0, 0.0));
            buf[aux * dim..(aux + 1) * dim].copy_from_slice(x);
            for k in (1..=self.params.n / 2).rev() {
                self.rt.apply(0, 2 * k - 1, n, &buf, &mut tmp);
                self.r.apply(2 * k, 0, n, &tmp, &mut buf);
            }
            for (yi, bi) in y.iter_mut().zip(&buf[aux * dim..(aux + 1) * dim]) {
                *yi += bi;
            }
        }
    }

    /// Dense matrix, refused above `cap` rows.
    pub fn to_dense(&self, cap: usize) -> Result<DenseOperator> {
        let dim = self.dim();
        if dim > cap {
            return Err(Error::SizeCap { dim, cap });
        }
        let mut m = DMatrix::zeros(dim, dim);
        let mut e = vec![C::new(0.0, 0.0); dim];
        let mut col = vec![C::new(0.0, 0.0); dim];
        for j in 0..dim {
            e[j] = C::new(1.0, 0.0);
            self.apply(&e, &mut col);
            e[j] = C::new(0.0, 0.0);
            for i in 0..dim {
                m[(i, j)] = col[i];
            }
        }
        Ok(DenseOperator {
            d: self.local_dim(),
            factors: self.params.n,
            matrix: m,
        })
    }
}

/// Dense build of the transfer matrix; the default caps are `N <= 8` at
/// `s = 1` and `N <= 4` at `s = 2`.
pub fn build_qtm(params: ModelParams, v: C) -> Result<DenseOperator> {
    Qtm::new(params, v)?.to_dense(DEFAULT_DENSE_CAP)
}

pub const DEFAULT_DENSE_CAP: usize = 6561;
const DENSE_FALLBACK: usize = 512;

/// All eigenvalues of a dense operator, sorted by decreasing modulus.
pub fn dense_spectrum(op: &DenseOperator) -> Result<Vec<C>> {
    // the default tolerance of the complex Schur iteration can stall on
    // degenerate spectra, so bound it explicitly
    let ev = op
        .matrix
        .clone()
        .try_schur(64.0 * f64::EPSILON, 100_000)
        .and_then(|s| s.eigenvalues())
        .ok_or(Error::NoConvergence {
            iterations: 100_000,
            residual: f64::NAN,
        })?;
    let mut v: Vec<C> = ev.iter().copied().collect();
    v.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            tol: 1e-13,
            max_iter: 20000,
            seed: 7,
        }
    }
}

/// Dominant eigenvalue of a linear map by power iteration.
pub fn power_iteration<F>(apply: F, dim: usize, opts: PowerOptions) -> Result<C>
where
    F: Fn(&[C], &mut [C]),
{
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<C> = (0..dim).map(|_| C::new(1.0 + 0.1 * rng.gen::<f64>(), 0.0)).collect();
    let nrm = |z: &[C]| z.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
    let n0 = nrm(&x);
    x.iter_mut().for_each(|z| *z /= n0);
    let mut y = vec![C::new(0.0, 0.0); dim];
    let mut last = C::new(f64::NAN, 0.0);
    for it in 0..opts.max_iter {
        apply(&x, &mut y);
        let lam: C = x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
        let res = y.iter().zip(&x).map(|(b, a)| (b - lam * a).norm_sqr()).sum::<f64>().sqrt();
        let ny = nrm(&y);
        if ny == 0.0 || !ny.is_finite() {
            return Err(Error::NoConvergence { iterations: it, residual: f64::NAN });
        }
        if res <= opts.tol * lam.norm() && (lam - last).norm() <= opts.tol * lam.norm() {
            return Ok(lam);
        }
        last = lam;
        for (a, b) in x.iter_mut().zip(&y) {
            *a = b / ny;
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: (last).norm(),
    })
}

/// Eigenvalue of maximal modulus: power iteration, falling back to a full
/// dense decomposition for small operators.
pub fn largest_eigenvalue(op: &DenseOperator) -> Result<C> {
    let m = &op.matrix;
    let run = power_iteration(
        |x, y| {
            for i in 0..m.nrows() {
                y[i] = (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum();
            }
        },
        op.dim(),
        PowerOptions::default(),
    );
    match run {
        Ok(l) => Ok(l),
        Err(e) if op.dim() <= DENSE_FALLBACK => {
            let _ = e;
            Ok(dense_spectrum(op)?[0])
        }
        Err(e) => Err(e),
    }
}

/// Largest eigenvalue of the transfer matrix at `v`, matrix-free.
pub fn qtm_largest(params: ModelParams, v: C, opts: PowerOptions) -> Result<C> {
    let q = Qtm::new(params, v)?;
    power_iteration(|x, y| q.apply(x, y), q.dim(), opts)
}

/// `-log(Lambda_N(0)) / beta` in the physical regime.
pub fn qtm_free_energy(s: usize, n: usize, coupling: f64, beta: f64) -> Result<f64> {
    let p = ModelParams::physical(s, n, coupling, beta)?;
    let lam = qtm_largest(p, C::new(0.0, 0.0), PowerOptions::default())?;
    Ok(-lam.re.ln() / beta)
}

/// Same as [`qtm_free_energy`] with every R factor divided by `sqrt(f(u))`,
/// where `Ř(u)Ř(-u) = f(u) I`.
pub fn qtm_free_energy_unitary(s: usize, n: usize, coupling: f64, beta: f64) -> Result<f64> {
    let p = ModelParams::physical(s, n, coupling, beta)?;
    let (f, _) = unitarity(C::new(p.u, 0.0), s)?;
    Ok(qtm_free_energy(s, n, coupling, beta)? + n as f64 / (2.0 * beta) * f.re.ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OraclePoint {
    pub v: C,
    pub dvf: C,
    /// Nearest transfer-matrix eigenvalue.
    pub qtm: C,
    pub rel_dev: f64,
    pub is_largest: bool,
}

/// Solves the two-string state, evaluates the normalized `T^(1)_1` at each
/// point and compares with the exact spectrum of a transfer matrix of at
/// most `cap` rows.
pub fn qtm_vs_dvf(params: ModelParams, points: &[C], cap: usize) -> Result<Vec<OraclePoint>> {
    let state = solve_two_string(&params, 0.01, NewtonOptions::default())?;
    let dvf = Dvf::new(state);
    let mut out = Vec::new();
    for &v in points {
        let t = dvf.t_norm(1, 1, v)?;
        let spec = dense_spectrum(&Qtm::new(params, v)?.to_dense(cap)?)?;
        let (idx, near) = spec
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).norm().total_cmp(&(b.1 - t).norm()))
            .map(|(i, z)| (i, *z))
            .expect("nonempty spectrum");
        out.push(OraclePoint {
            v,
            dvf: t,
            qtm: near,
            rel_dev: (near - t).norm() / t.norm(),
            is_largest: idx == 0 || (spec[0].norm() - near.norm()).abs() <= 1e-12 * near.norm(),
        });
    }
    Ok(out)
}

/// `|Ř12(v)Ř23(v+w)Ř12(w) - Ř23(w)Ř12(v+w)Ř23(v)|_max`.
pub fn yang_baxter_residual(v: C, w: C, s: usize) -> Result<f64> {
    let r12 = |x: C| -> Result<DMatrix<C>> { Ok(embed(&build_rcheck(x, s)?, 0, 1, 3).matrix) };
    let r23 = |x: C| -> Result<DMatrix<C>> { Ok(embed(&build_rcheck(x, s)?, 1, 2, 3).matrix) };
    let lhs = r12(v)? * r23(v + w)? * r12(w)?;
    let rhs = r23(w)? * r12(v + w)? * r23(v)?;
    Ok((lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Scalar `f` in `Ř(v)Ř(-v) = f I` and the distance from that form.
pub fn unitarity(v: C, s: usize) -> Result<(C, f64)> {
    let a = build_rcheck(v, s)?.matrix * build_rcheck(-v, s)?.matrix;
    let f = a[(0, 0)];
    let n = a.nrows();
    let dev = (a - DMatrix::identity(n, n) * f).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok((f, dev))
}
