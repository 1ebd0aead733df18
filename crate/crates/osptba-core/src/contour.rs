//! Contour integrals of sampled analytic functions: residues on small circles
//! and winding numbers along rectangles.

use std::f64::consts::PI;

use crate::bethe::C;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidueEstimate {
    pub center: C,
    pub residue: C,
    /// `radius * max |f|` on the circle.
    pub scale: f64,
}

impl ResidueEstimate {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.residue.norm() / self.scale
        }
    }
}

/// `(1/2 pi i) \oint f dv` on a circle, trapezoid rule.
pub fn residue<F>(f: F, center: C, radius: f64, points: usize) -> Result<ResidueEstimate>
where
    F: Fn(C) -> Result<C>,
{
    let mut acc = C::new(0.0, 0.0);
    let mut fmax: f64 = 0.0;
    for k in 0..points {
        let e = C::from_polar(1.0, 2.0 * PI * k as f64 / points as f64);
        let val = f(center + e * radius)?;
        fmax = fmax.max(val.norm());
        // dv = i r e dtheta, so (1/2 pi i) f dv = f r e dtheta / (2 pi)
        acc += val * e;
    }
    Ok(ResidueEstimate {
        center,
        residue: acc * (radius / points as f64),
        scale: radius * fmax,
    })
}

/// Axis-aligned rectangle `[re_min, re_max] x [im_min, im_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    /// `[-half_width, half_width] x i[-h, h]`.
    pub fn strip(half_width: f64, h: f64) -> Self {
        Rect {
            re_min: -half_width,
            re_max: half_width,
            im_min: -h,
            im_max: h,
        }
    }

    fn corners(&self) -> [C; 4] {
        [
            C::new(self.re_min, self.im_min),
            C::new(self.re_max, self.im_min),
            C::new(self.re_max, self.im_max),
            C::new(self.re_min, self.im_max),
        ]
    }

    fn grow(&self, d: f64) -> Self {
        Rect {
            re_min: self.re_min - d,
            re_max: self.re_max + d,
            im_min: self.im_min - d,
            im_max: self.im_max + d,
        }
    }
}

const MAX_DEPTH: usize = 40;

fn winding_segment<F>(f: &F, a: C, fa: C, b: C, fb: C, depth: usize) -> Result<f64>
where
    F: Fn(C) -> Result<C>,
{
    let d = (fb / fa).arg();
    if d.abs() < PI / 8.0 {
        // confirm with the midpoint so that a fast double turn is not missed
        let m = (a + b) * 0.5;
        let fm = f(m)?;
        check_nonzero(fm)?;
        let d1 = (fm / fa).arg();
        let d2 = (fb / fm).arg();
        if (d1 + d2 - d).abs() < 1e-9 && d1.abs() < PI / 8.0 && d2.abs() < PI / 8.0 {
            return Ok(d);
        }
        if depth >= MAX_DEPTH {
            return Ok(d1 + d2);
        }
        return Ok(winding_segment(f, a, fa, m, fm, depth + 1)? + winding_segment(f, m, fm, b, fb, depth + 1)?);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::DegenerateContour);
    }
    let m = (a + b) * 0.5;
    let fm = f(m)?;
    check_nonzero(fm)?;
    Ok(winding_segment(f, a, fa, m, fm, depth + 1)? + winding_segment(f, m, fm, b, fb, depth + 1)?)
}

fn check_nonzero(z: C) -> Result<()> {
    if z.norm() < 1e-290 || !z.is_finite() {
        return Err(Error::DegenerateContour);
    }
    Ok(())
}

fn winding_once<F>(f: &F, rect: &Rect, samples_per_side: usize) -> Result<i64>
where
    F: Fn(C) -> Result<C>,
{
    let cs = rect.corners();
    let mut total = 0.0;
    for side in 0..4 {
        let (p, q) = (cs[side], cs[(side + 1) % 4]);
        let mut prev = p;
        let mut fprev = f(prev)?;
        check_nonzero(fprev)?;
        for k in 1..=samples_per_side {
            let z = p + (q - p) * (k as f64 / samples_per_side as f64);
            let fz = f(z)?;
            check_nonzero(fz)?;
            total += winding_segment(f, prev, fprev, z, fz, 0)?;
            prev = z;
            fprev = fz;
        }
    }
    let w = total / (2.0 * PI);
    if (w - w.round()).abs() > 1e-3 {
        return Err(Error::DegenerateContour);
    }
    Ok(w.round() as i64)
}

/// Zeros minus poles of `f` inside `rect` (argument principle). If the
/// contour passes through a zero or pole, the rectangle is enlarged by a small
/// jitter and the count retried.
pub fn count_zeros_minus_poles<F>(f: F, rect: Rect, samples_per_side: usize) -> Result<i64>
where
    F: Fn(C) -> Result<C>,
{
    let mut last = Error::DegenerateContour;
    for k in 0..4 {
        let r = if k == 0 { rect } else { rect.grow(1e-7 * (k as f64)) };
        match winding_once(&f, &r, samples_per_side) {
            Ok(n) => return Ok(n),
            Err(e @ (Error::DegenerateContour | Error::Pole(_))) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn residue_of_simple_pole() {
        let r = residue(|v| Ok(c(2.0, 1.0) / (v - c(0.3, 0.1))), c(0.3, 0.1), 1e-3, 64).unwrap();
        assert!((r.residue - c(2.0, 1.0)).norm() < 1e-12);
        assert!((r.relative() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn residue_of_analytic_function() {
        let r = residue(|v| Ok(v.exp() * v * v), c(0.5, -0.2), 1e-3, 64).unwrap();
        assert!(r.relative() < 1e-12);
    }

    #[test]
    fn calibration_counts() {
        let strip = Rect::strip(10.0, 0.45);
        let n = count_zeros_minus_poles(|v| Ok((v - c(0.0, 3.0)).powi(2)), strip, 64).unwrap();
        assert_eq!(n, 0);
        let n = count_zeros_minus_poles(|v| Ok(1.0 / (v - c(0.0, 0.1))), strip, 64).unwrap();
        assert_eq!(n, -1);
        let n = count_zeros_minus_poles(|v| Ok((v - c(1.0, 0.2)) * (v + c(3.0, 0.3)) * (v - c(0.0, 2.0))), strip, 64)
            .unwrap();
        assert_eq!(n, 2);
    }

    #[test]
    fn rapid_phase_is_resolved() {
        // tenth-order zero close to the contour
        let strip = Rect::strip(1.0, 0.5);
        let n = count_zeros_minus_poles(|v| Ok((v - c(0.0, 0.49)).powi(10)), strip, 8).unwrap();
        assert_eq!(n, 10);
    }

    #[test]
    fn zero_on_contour_is_jittered() {
        let strip = Rect::strip(1.0, 0.5);
        let n = count_zeros_minus_poles(|v| Ok(v - c(0.0, 0.5)), strip, 16).unwrap();
        assert_eq!(n, 1);
    }
}
