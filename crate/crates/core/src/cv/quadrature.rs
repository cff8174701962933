//! Adaptive Gauss–Kronrod (7/15) integration of vector-valued integrands.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
/// Gauss weights for the odd-indexed Kronrod nodes and the centre.
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

const MAX_INTERVALS: usize = 4000;

/// One 15-point Kronrod rule with the embedded 7-point Gauss estimate.
/// Returns the Kronrod value and the largest componentwise difference.
fn rule(f: &impl Fn(f64) -> Vec<f64>, a: f64, b: f64) -> (Vec<f64>, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let centre = f(c);
    let m = centre.len();
    let mut k: Vec<f64> = centre.iter().map(|v| v * WGK[7]).collect();
    let mut g: Vec<f64> = centre.iter().map(|v| v * WG[3]).collect();
    for j in 0..7 {
        let lo = f(c - h * XGK[j]);
        let hi = f(c + h * XGK[j]);
        for i in 0..m {
            let s = lo[i] + hi[i];
            k[i] += WGK[j] * s;
            if j % 2 == 1 {
                g[i] += WG[j / 2] * s;
            }
        }
    }
    let err = k.iter().zip(&g).fold(0.0f64, |e, (kv, gv)| e.max((kv - gv).abs() * h));
    (k.iter().map(|v| v * h).collect(), err)
}

/// Integrates `f` over `[a, b]` to absolute accuracy `tol` (componentwise
/// maximum), bisecting the interval with the largest error estimate.
pub fn integrate(f: impl Fn(f64) -> Vec<f64>, a: f64, b: f64, tol: f64) -> Result<Vec<f64>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration limits must be finite, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(vec![0.0; f(a).len()]);
    }
    let (v, e) = rule(&f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    loop {
        let total_err: f64 = pieces.iter().map(|p| p.3).sum();
        if total_err <= tol {
            break;
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::Domain(format!("quadrature did not reach {tol:.1e} on [{a}, {b}] (estimate {total_err:.2e})")));
        }
        let worst = (0..pieces.len()).max_by(|&i, &j| pieces[i].3.total_cmp(&pieces[j].3)).expect("non-empty");
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = rule(&f, lo, mid);
        let (v2, e2) = rule(&f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
    let m = pieces[0].2.len();
    let mut out = vec![0.0; m];
    // Summing in position order keeps the result independent of the
    // refinement history.
    pieces.sort_by(|p, q| p.0.total_cmp(&q.0));
    for p in &pieces {
        for (o, v) in out.iter_mut().zip(&p.2) {
            *o += v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| vec![x.powi(5) - 3.0 * x * x, 1.0], -1.0, 2.0, 1e-14).unwrap();
        assert!((v[0] - (64.0 / 6.0 - 1.0 / 6.0 - 9.0)).abs() < 1e-13);
        assert!((v[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_mass() {
        let v = integrate(|x| vec![(-x * x).exp()], -12.0, 12.0, 1e-13).unwrap();
        assert!((v[0] - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn infinite_limits_are_rejected() {
        assert!(integrate(|x| vec![x], 0.0, f64::INFINITY, 1e-8).is_err());
    }
}
