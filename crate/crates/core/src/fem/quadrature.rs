//! Quadrature rules on the reference triangle and the unit interval.

/// Barycentric points and area-normalized weights of the symmetric 6-point
/// rule, exact for polynomials of degree 4.
pub fn triangle6() -> [([f64; 3], f64); 6] {
    const A: f64 = 0.445_948_490_915_965;
    const WA: f64 = 0.223_381_589_678_011;
    const B: f64 = 0.091_576_213_509_771;
    const WB: f64 = 0.109_951_743_655_322;
    let a2 = 1.0 - 2.0 * A;
    let b2 = 1.0 - 2.0 * B;
    [
        ([A, A, a2], WA),
        ([A, a2, A], WA),
        ([a2, A, A], WA),
        ([B, B, b2], WB),
        ([B, b2, B], WB),
        ([b2, B, B], WB),
    ]
}

/// 3-point Gauss–Legendre rule on [0, 1] with weights summing to 1.
pub fn gauss3() -> [(f64, f64); 3] {
    let d = 0.5 * (3.0f64 / 5.0).sqrt();
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn exact_to_degree_four() {
        // ∫_T λ0^i λ1^j λ2^k dA / |T| = 2 i! j! k! / (i+j+k+2)!
        for i in 0..=4u32 {
            for j in 0..=(4 - i) {
                for k in 0..=(4 - i - j) {
                    let exact = 2.0 * factorial(i) * factorial(j) * factorial(k) / factorial(i + j + k + 2);
                    let q: f64 = triangle6()
                        .iter()
                        .map(|(l, w)| w * l[0].powi(i as i32) * l[1].powi(j as i32) * l[2].powi(k as i32))
                        .sum();
                    assert!((q - exact).abs() < 1e-14, "{i}{j}{k}: {q} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn gauss_exact_to_degree_five() {
        for d in 0..=5 {
            let q: f64 = gauss3().iter().map(|(x, w)| w * x.powi(d)).sum();
            assert!((q - 1.0 / (d as f64 + 1.0)).abs() < 1e-15);
        }
    }
}
