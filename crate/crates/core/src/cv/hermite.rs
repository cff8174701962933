/// `ψ_k(x)`, the `k`-th harmonic-oscillator eigenfunction with unit `L²`
/// norm.
pub fn hermite_wavefunction(k: usize, x: f64) -> f64 {
    hermite_all(k + 1, x)[k]
}

/// `[ψ_0(x), …, ψ_{d-1}(x)]` by the normalized three-term recurrence
/// `ψ_{k+1} = √(2/(k+1)) x ψ_k − √(k/(k+1)) ψ_{k−1}`, which avoids the
/// overflow of raw Hermite polynomials.
pub fn hermite_all(d: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(d);
    if d == 0 {
        return out;
    }
    let psi0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(psi0);
    if d == 1 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x * psi0);
    for k in 1..d - 1 {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cv::quadrature::integrate;

    #[test]
    fn ground_state_at_origin() {
        assert!((hermite_wavefunction(0, 0.0) - std::f64::consts::PI.powf(-0.25)).abs() < 1e-15);
        assert!((hermite_wavefunction(0, 0.0) - 0.7511255444649425).abs() < 1e-15);
        assert_eq!(hermite_wavefunction(1, 0.0), 0.0);
    }

    #[test]
    fn matches_closed_forms() {
        // ψ_2 = (2x² − 1) ψ_0 / √2, ψ_3 = (2x³ − 3x) ψ_0 / √3.
        for &x in &[-2.3, -0.4, 0.0, 0.7, 3.1] {
            let p0 = hermite_wavefunction(0, x);
            assert!((hermite_wavefunction(2, x) - (2.0 * x * x - 1.0) * p0 / 2f64.sqrt()).abs() < 1e-14);
            assert!((hermite_wavefunction(3, x) - (2.0 * x.powi(3) - 3.0 * x) * p0 / 3f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn orthonormal_by_quadrature() {
        let d = 8;
        let cut = (2.0 * d as f64).sqrt() + 8.0;
        let gram = integrate(
            |x| {
                let h = hermite_all(d, x);
                let mut v = Vec::with_capacity(d * d);
                for j in 0..d {
                    for k in 0..d {
                        v.push(h[j] * h[k]);
                    }
                }
                v
            },
            -cut,
            cut,
            1e-12,
        )
        .unwrap();
        for j in 0..d {
            for k in 0..d {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((gram[j * d + k] - want).abs() < 1e-10, "({j},{k}) = {}", gram[j * d + k]);
            }
        }
    }
}
