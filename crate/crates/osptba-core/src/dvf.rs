//! Dressed vacuum forms: tableau sums of box functions, the determinant
//! formula, normalized rectangular functions and their functional relations.
//!
//! Functions are represented by exact pointwise evaluation; identities are
//! checked at sample points with a scale taken from the largest term.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;

use crate::bethe::{box_factors, box_value, phi, psi_vac, BetheState, CartanData, Sign, C, I};
use crate::combinat::{alphabet, cell_shift_index, enumerate_tableaux, Partition, SkewShape, Symbol};
use crate::contour::{self, Rect, ResidueEstimate};
use crate::error::{Error, Result};
use crate::params::ModelParams;

fn shift(n: i64) -> C {
    -I * (0.5 * n as f64)
}

/// Admissible tableaux of one shape, stored as symbol codes per cell together
/// with each cell's shift index.
#[derive(Debug, Clone)]
pub struct TableauSum {
    shape: SkewShape,
    s: usize,
    /// Distinct shift indices; cells refer to them by position.
    shifts: Vec<i64>,
    cell_slot: Vec<usize>,
    fillings: Vec<Vec<u8>>,
}

impl TableauSum {
    pub fn new(shape: &SkewShape, s: usize) -> Self {
        let cells = shape.cells();
        let ns: Vec<i64> = cells
            .iter()
            .map(|&(j, k)| cell_shift_index(shape, j, k).expect("cell of the shape"))
            .collect();
        let mut shifts = ns.clone();
        shifts.sort_unstable();
        shifts.dedup();
        let cell_slot = ns.iter().map(|n| shifts.binary_search(n).unwrap()).collect();
        let fillings = enumerate_tableaux(shape, s)
            .into_iter()
            .map(|t| t.entries.iter().map(|b| b.0 as u8).collect())
            .collect();
        TableauSum {
            shape: shape.clone(),
            s,
            shifts,
            cell_slot,
            fillings,
        }
    }

    pub fn shape(&self) -> &SkewShape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.fillings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fillings.is_empty()
    }

    pub fn shifts(&self) -> &[i64] {
        &self.shifts
    }

    /// Value and the sum of term moduli.
    pub fn eval_with_scale(&self, v: C, state: &BetheState) -> Result<(C, f64)> {
        let g = 2 * self.s + 1;
        let mut table: Vec<Option<Result<C>>> = vec![None; self.shifts.len() * g];
        let mut total = C::new(0.0, 0.0);
        let mut scale = 0.0;
        for f in &self.fillings {
            let mut prod = C::new(1.0, 0.0);
            for (cell, &b) in f.iter().enumerate() {
                let slot = self.cell_slot[cell];
                let idx = slot * g + (b as usize - 1);
                let val = table[idx]
                    .get_or_insert_with(|| box_value(Symbol(b as usize), v + shift(self.shifts[slot]), state))
                    .clone()?;
                prod *= val;
            }
            total += prod;
            scale += prod.norm();
        }
        Ok((total, scale))
    }

    pub fn eval(&self, v: C, state: &BetheState) -> Result<C> {
        Ok(self.eval_with_scale(v, state)?.0)
    }

    /// Candidate poles: each Bethe root moved by the shift of every box
    /// denominator at every cell.
    pub fn candidate_poles(&self, state: &BetheState) -> Vec<C> {
        let mut out: Vec<C> = Vec::new();
        for &n in &self.shifts {
            for b in alphabet(self.s) {
                for &(color, d) in &box_factors(b, self.s).den {
                    if color == 0 {
                        continue;
                    }
                    for &r in &state.roots[color - 1] {
                        // Q(v + shift(n) + d) = 0
                        let p = r - d - shift(n);
                        if out.iter().all(|q| (q - p).norm() > 1e-9) {
                            out.push(p);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Which function a handle evaluates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TKind {
    Skew(SkewShape),
    /// Raw `T^(a)_m`, equal to one when `a = 0` or `m = 0`.
    Rect { a: usize, m: usize },
    /// `T^(a)_m / N^(a)_m` with the boundary values at `a = 0` or `m = 0`.
    Normalized { a: usize, m: usize },
}

/// Relative size of a functional-relation residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub value: C,
    pub scale: f64,
}

impl Residual {
    fn of(lhs: C, terms: &[C]) -> Self {
        let rhs: C = terms.iter().sum();
        let scale = terms.iter().map(|t| t.norm()).fold(lhs.norm(), f64::max);
        Residual {
            value: lhs - rhs,
            scale,
        }
    }

    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.value.norm()
        } else {
            self.value.norm() / self.scale
        }
    }
}

/// `N^(a)_m(v)`.
pub fn norm_factor(a: usize, m: usize, v: C, p: &ModelParams) -> C {
    let (ai, mi) = (a as f64, m as f64);
    let mut num = C::new(1.0, 0.0);
    for j in 1..=m {
        for k in 1..=a {
            let x = v - I * ((mi - ai - 2.0 * j as f64 + 2.0 * k as f64) / 2.0);
            num *= phi(p, x, Sign::Minus) * phi(p, x, Sign::Plus);
        }
    }
    num / (phi(p, v - I * ((mi - ai) / 2.0), Sign::Minus) * phi(p, v + I * ((mi - ai) / 2.0), Sign::Plus))
}

/// `g^(s)_m(v)`.
pub fn g_factor(m: usize, v: C, p: &ModelParams) -> Result<C> {
    let t = (m + p.s) as f64;
    let num = phi(p, v + I * ((t + 1.0) / 2.0), Sign::Minus) * phi(p, v - I * ((t + 1.0) / 2.0), Sign::Plus);
    let den = phi(p, v + I * (t / 2.0), Sign::Minus) * phi(p, v - I * (t / 2.0), Sign::Plus);
    if den == C::new(0.0, 0.0) {
        return Err(Error::Pole(v));
    }
    Ok(num / den)
}

/// Evaluator of dressed vacuum forms for one Bethe state. Tableau sets are
/// built on first use and shared.
#[derive(Debug)]
pub struct Dvf {
    state: BetheState,
    cache: Mutex<HashMap<SkewShape, Arc<TableauSum>>>,
}

impl Dvf {
    pub fn new(state: BetheState) -> Self {
        Dvf {
            state,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn state(&self) -> &BetheState {
        &self.state
    }

    pub fn params(&self) -> &ModelParams {
        &self.state.params
    }

    pub fn s(&self) -> usize {
        self.state.s()
    }

    pub fn tableau_sum(&self, shape: &SkewShape) -> Arc<TableauSum> {
        let mut cache = self.cache.lock().expect("cache lock");
        cache
            .entry(shape.clone())
            .or_insert_with(|| Arc::new(TableauSum::new(shape, self.state.s())))
            .clone()
    }

    pub fn t_skew(&self, shape: &SkewShape, v: C) -> Result<C> {
        self.tableau_sum(shape).eval(v, &self.state)
    }

    pub fn t_skew_with_scale(&self, shape: &SkewShape, v: C) -> Result<(C, f64)> {
        self.tableau_sum(shape).eval_with_scale(v, &self.state)
    }

    /// Raw `T^(a)_m(v)`; one for an empty rectangle.
    pub fn t_rect(&self, a: usize, m: usize, v: C) -> Result<C> {
        if a == 0 || m == 0 {
            return Ok(C::new(1.0, 0.0));
        }
        self.t_skew(&SkewShape::straight(Partition::rectangle(a, m)), v)
    }

    /// Determinant of single-row functions. Entry `(j,k)` is
    /// `T^(mu_k - lambda_j + j - k)_1` at `v - (i/2)(-mu_1 + mu'_1 + mu_k + lambda_j - j - k + 1)`,
    /// with `T^(0)_1 = 1` and `T^(a)_1 = 0` for `a < 0`.
    pub fn t_jacobi_trudi(&self, shape: &SkewShape, v: C) -> Result<C> {
        let mu = shape.outer();
        let lam = shape.inner();
        let n = mu.len();
        if n == 0 {
            return Ok(C::new(1.0, 0.0));
        }
        let mu1 = mu.part(1) as i64;
        let mut mat = DMatrix::<C>::zeros(n, n);
        for j in 1..=n {
            for k in 1..=n {
                let (ji, ki) = (j as i64, k as i64);
                let (mk, lj) = (mu.part(k) as i64, lam.part(j) as i64);
                let a = mk - lj + ji - ki;
                let arg = v + shift(-mu1 + n as i64 + mk + lj - ji - ki + 1);
                mat[(j - 1, k - 1)] = match a {
                    a if a < 0 => C::new(0.0, 0.0),
                    0 => C::new(1.0, 0.0),
                    a => self.t_rect(a as usize, 1, arg)?,
                };
            }
        }
        Ok(mat.determinant())
    }

    /// Normalized `T^(a)_m`, including the boundary functions.
    pub fn t_norm(&self, a: usize, m: usize, v: C) -> Result<C> {
        let p = self.params();
        if m == 0 {
            let ai = a as f64 / 2.0;
            return Ok(phi(p, v + I * ai, Sign::Minus) * phi(p, v - I * ai, Sign::Plus));
        }
        if a == 0 {
            let mi = m as f64 / 2.0;
            return Ok(phi(p, v - I * mi, Sign::Minus) * phi(p, v + I * mi, Sign::Plus));
        }
        let nf = norm_factor(a, m, v, p);
        if nf == C::new(0.0, 0.0) {
            return Err(Error::Pole(v));
        }
        Ok(self.t_rect(a, m, v)? / nf)
    }

    pub fn eval(&self, kind: &TKind, v: C) -> Result<C> {
        match kind {
            TKind::Skew(sh) => self.t_skew(sh, v),
            TKind::Rect { a, m } => self.t_rect(*a, *m, v),
            TKind::Normalized { a, m } => self.t_norm(*a, *m, v),
        }
    }

    /// Factor relating `T^(a)_m` to `T^(2s-a+1)_m`.
    pub fn dual_factor(&self, a: usize, m: usize, v: C) -> Result<C> {
        let s = self.s() as f64;
        let (ai, mi) = (a as f64, m as f64);
        let psi1 = |w: C| psi_vac(Symbol(1), w, &self.state);
        let psi2 = |w: C| psi_vac(Symbol(2), w, &self.state);
        let at = |x: f64| v - I * (x / 2.0);
        let mut out = C::new(1.0, 0.0);
        for j in 1..=m {
            let jf = j as f64;
            out *= psi1(at(mi - ai - 2.0 * jf + 2.0))? / psi1(at(mi - 2.0 * s + ai - 2.0 * jf + 1.0))?;
            for k in 2..=a {
                out *= psi2(at(mi - ai - 2.0 * jf + 2.0 * k as f64))?;
            }
            for k in 2..=(2 * self.s() + 1 - a) {
                out /= psi2(at(mi - 2.0 * s + ai - 2.0 * jf + 2.0 * k as f64 - 1.0))?;
            }
        }
        Ok(out)
    }

    pub fn residual_duality(&self, a: usize, m: usize, v: C) -> Result<Residual> {
        let lhs = self.t_rect(a, m, v)?;
        let rhs = self.dual_factor(a, m, v)? * self.t_rect(2 * self.s() + 1 - a, m, v)?;
        Ok(Residual::of(lhs, &[rhs]))
    }

    /// Raw bilinear relation among rectangles.
    pub fn residual_hirota(&self, a: usize, m: usize, v: C) -> Result<Residual> {
        let h = I * 0.5;
        let lhs = self.t_rect(a, m, v + h)? * self.t_rect(a, m, v - h)?;
        let t1 = self.t_rect(a, m + 1, v)? * self.t_rect(a, m - 1, v)?;
        let t2 = self.t_rect(a - 1, m, v)? * self.t_rect(a + 1, m, v)?;
        Ok(Residual::of(lhs, &[t1, t2]))
    }

    /// Second term of the relation for normalized functions; the last node
    /// carries the factor `g^(s)_m`.
    fn tsystem_coupling(&self, a: usize, m: usize, v: C) -> Result<C> {
        let s = self.s();
        if a < s {
            Ok(self.t_norm(a - 1, m, v)? * self.t_norm(a + 1, m, v)?)
        } else {
            Ok(g_factor(m, v, self.params())? * self.t_norm(s - 1, m, v)? * self.t_norm(s, m, v)?)
        }
    }

    pub fn residual_tsystem(&self, a: usize, m: usize, v: C) -> Result<Residual> {
        let h = I * 0.5;
        let lhs = self.t_norm(a, m, v + h)? * self.t_norm(a, m, v - h)?;
        let t1 = self.t_norm(a, m + 1, v)? * self.t_norm(a, m - 1, v)?;
        let t2 = self.tsystem_coupling(a, m, v)?;
        Ok(Residual::of(lhs, &[t1, t2]))
    }

    /// `Y^(a)_m(v)`, zero at `m = 0`.
    pub fn y(&self, a: usize, m: usize, v: C) -> Result<C> {
        if m == 0 {
            return Ok(C::new(0.0, 0.0));
        }
        let num = self.t_norm(a, m + 1, v)? * self.t_norm(a, m - 1, v)?;
        let den = self.tsystem_coupling(a, m, v)?;
        if den == C::new(0.0, 0.0) {
            return Err(Error::Pole(v));
        }
        Ok(num / den)
    }

    pub fn residual_ysystem(&self, a: usize, m: usize, v: C) -> Result<Residual> {
        let h = I * 0.5;
        let cd = CartanData::new(self.s());
        let lhs = self.y(a, m, v + h)? * self.y(a, m, v - h)?;
        let one = C::new(1.0, 0.0);
        let mut rhs = (one + self.y(a, m + 1, v)?) * (one + self.y(a, m - 1, v)?);
        for d in 1..=self.s() {
            let e = cd.incidence(a, d);
            if e != 0 {
                rhs /= (one + one / self.y(d, m, v)?).powi(e as i32);
            }
        }
        Ok(Residual::of(lhs, &[rhs]))
    }

    /// Residue on a small circle around `center`.
    pub fn pole_residue(&self, kind: &TKind, center: C, radius: f64, points: usize) -> Result<ResidueEstimate> {
        contour::residue(|v| self.eval(kind, v), center, radius, points)
    }

    /// Candidate pole positions of a raw tableau-sum function.
    pub fn candidate_poles(&self, kind: &TKind) -> Vec<C> {
        let shape = match kind {
            TKind::Skew(sh) => sh.clone(),
            TKind::Rect { a, m } | TKind::Normalized { a, m } => {
                SkewShape::straight(Partition::rectangle(*a, *m))
            }
        };
        self.tableau_sum(&shape).candidate_poles(&self.state)
    }

    pub fn count_zeros_minus_poles(&self, kind: &TKind, region: Rect, samples_per_side: usize) -> Result<i64> {
        contour::count_zeros_minus_poles(|v| self.eval(kind, v), region, samples_per_side)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bethe::{solve_two_string, NewtonOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn straight(v: &[usize]) -> SkewShape {
        SkewShape::straight(Partition::new(v.to_vec()).unwrap())
    }

    fn random_dvf(s: usize, n: usize, seed: u64) -> Dvf {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = ModelParams::new(s, n, -0.05).unwrap();
        let counts: Vec<usize> = (0..s).map(|_| rng.gen_range(0..=2)).collect();
        Dvf::new(BetheState::random(p, &counts, 1.0, &mut rng))
    }

    fn point(rng: &mut ChaCha8Rng) -> C {
        c(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5))
    }

    #[test]
    fn empty_and_single_box() {
        let d = random_dvf(2, 2, 1);
        let v = c(0.3, -0.2);
        assert_eq!(d.t_skew(&straight(&[]), v).unwrap(), c(1.0, 0.0));
        let t11: C = alphabet(2).into_iter().map(|b| box_value(b, v, d.state()).unwrap()).sum();
        assert!((d.t_skew(&straight(&[1]), v).unwrap() - t11).norm() < 1e-12 * t11.norm());
        assert_eq!(d.t_rect(0, 3, v).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn wide_rows_vanish() {
        let d = random_dvf(2, 2, 2);
        assert_eq!(d.t_skew(&straight(&[6]), c(0.2, 0.1)).unwrap(), c(0.0, 0.0));
        assert_eq!(d.t_rect(6, 2, c(0.2, 0.1)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn jacobi_trudi_single_box_is_exact() {
        let d = random_dvf(1, 2, 3);
        let v = c(0.1, 0.4);
        assert_eq!(d.t_jacobi_trudi(&straight(&[1]), v).unwrap(), d.t_skew(&straight(&[1]), v).unwrap());
    }

    #[test]
    fn jacobi_trudi_matches_tableau_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for s in 1..=2 {
            let d = random_dvf(s, 2, 10 + s as u64);
            for sh in [straight(&[1, 1]), straight(&[2, 1]), straight(&[3, 1]), straight(&[2, 2])] {
                for _ in 0..5 {
                    let v = point(&mut rng);
                    let (t, scale) = d.t_skew_with_scale(&sh, v).unwrap();
                    let jt = d.t_jacobi_trudi(&sh, v).unwrap();
                    assert!((t - jt).norm() < 1e-9 * scale.max(t.norm()), "{sh} s={s}");
                }
            }
        }
    }

    #[test]
    fn norm_factor_trivial_case() {
        let p = ModelParams::new(1, 2, 0.0).unwrap();
        assert!((norm_factor(1, 1, c(0.7, 0.2), &p) - c(1.0, 0.0)).norm() < 1e-15);
        let q = ModelParams::new(2, 4, 0.07).unwrap();
        let v = c(0.4, 0.3);
        let f = norm_factor(2, 3, v, &q);
        let g = norm_factor(2, 3, -v.conj(), &q).conj();
        assert!((f - g).norm() < 1e-12 * f.norm());
    }

    #[test]
    fn g_factor_limit() {
        let p = ModelParams::new(2, 4, -0.05).unwrap();
        let big = g_factor(1, c(1e7, 0.0), &p).unwrap();
        assert!((big - c(1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn boundaries() {
        let d = random_dvf(2, 2, 5);
        let p = *d.params();
        let v = c(0.2, 0.3);
        let want = phi(&p, v + I, Sign::Minus) * phi(&p, v - I, Sign::Plus);
        assert_eq!(d.t_norm(2, 0, v).unwrap(), want);
        let want = phi(&p, v - I * 1.5, Sign::Minus) * phi(&p, v + I * 1.5, Sign::Plus);
        assert_eq!(d.t_norm(0, 3, v).unwrap(), want);
        assert_eq!(d.y(1, 0, v).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn hirota_for_vacuum_and_random_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let vac = Dvf::new(BetheState::vacuum(ModelParams::new(2, 2, -0.05).unwrap()));
        let d = random_dvf(2, 2, 7);
        for _ in 0..3 {
            let v = point(&mut rng);
            assert!(vac.residual_hirota(2, 1, v).unwrap().relative() < 1e-12);
            assert!(d.residual_hirota(2, 1, v).unwrap().relative() < 1e-9);
            assert!(d.residual_hirota(1, 1, v).unwrap().relative() < 1e-9);
        }
        let d1 = random_dvf(1, 2, 8);
        assert!(d1.residual_hirota(2, 1, c(0.3, 0.1)).unwrap().relative() < 1e-9);
    }

    fn on_shell(s: usize, n: usize) -> Dvf {
        let p = ModelParams::new(s, n, -0.05).unwrap();
        Dvf::new(solve_two_string(&p, 0.01, NewtonOptions::default()).unwrap())
    }

    #[test]
    fn on_shell_relations() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for s in 1..=2 {
            let d = on_shell(s, 2);
            for _ in 0..3 {
                let v = point(&mut rng);
                for a in 1..=s {
                    assert!(d.residual_tsystem(a, 1, v).unwrap().relative() < 1e-8);
                    assert!(d.residual_ysystem(a, 1, v).unwrap().relative() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn duality_on_shell() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let d = on_shell(2, 2);
        for a in 1..=2 {
            for m in 1..=2 {
                let v = point(&mut rng);
                assert!(d.residual_duality(a, m, v).unwrap().relative() < 1e-9);
            }
        }
    }

    #[test]
    fn y_asymptotics() {
        for s in 1..=2 {
            let d = on_shell(s, 2);
            let g = (2 * s + 1) as f64;
            for a in 1..=s {
                for m in 1..=2 {
                    let y = d.y(a, m, c(1e4, 0.0)).unwrap();
                    let mf = m as f64;
                    let want = mf * (g + mf) / (a as f64 * (g - a as f64));
                    assert!((y - want).norm() < 1e-5 * want);
                }
            }
        }
    }

    #[test]
    fn t11_degree() {
        let d = on_shell(1, 4);
        let r = 1e4;
        let ratio = (d.t_rect(1, 1, c(2.0 * r, 0.0)).unwrap() / d.t_rect(1, 1, c(r, 0.0)).unwrap()).norm();
        assert!((ratio - 16.0).abs() < 1e-2);
    }

    #[test]
    fn reflection_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let d = on_shell(2, 2);
        for _ in 0..5 {
            let v = point(&mut rng);
            for b in alphabet(2) {
                let f = box_value(b, v, d.state()).unwrap();
                let g = box_value(b, -v.conj(), d.state()).unwrap().conj();
                assert!((f - g).norm() < 1e-9 * f.norm());
            }
        }
    }

    #[test]
    fn poles_cancel_on_shell_only() {
        let d = on_shell(1, 2);
        for kind in [TKind::Rect { a: 1, m: 1 }, TKind::Rect { a: 1, m: 2 }] {
            for p in d.candidate_poles(&kind) {
                let r = d.pole_residue(&kind, p, 1e-3, 64).unwrap();
                assert!(r.relative() < 1e-8, "{p} {}", r.relative());
            }
        }
        let mut st = d.state().clone();
        st.roots[0][0] += 0.1;
        let off = Dvf::new(st);
        let kind = TKind::Rect { a: 1, m: 1 };
        let worst = off
            .candidate_poles(&kind)
            .into_iter()
            .map(|p| off.pole_residue(&kind, p, 1e-3, 64).unwrap().relative())
            .fold(0.0, f64::max);
        assert!(worst > 1e-3);
    }
}
