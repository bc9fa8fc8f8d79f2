pub use statrs::function::gamma::{gamma, ln_gamma};

// B_{2k}/(2k)! for k = 1..=8
const BERN_OVER_FACT: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
];

/// Riemann zeta by Euler-Maclaurin summation; valid for any real `s != 1`.
pub fn zeta(s: f64) -> f64 {
    let n = 12usize;
    let nf = n as f64;
    let mut sum: f64 = (1..n).map(|k| (k as f64).powf(-s)).sum();
    sum += nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s);
    // rising product s(s+1)...(s+2k-2) times N^{-s-2k+1}
    let mut rising = s;
    let mut npow = nf.powf(-s - 1.0);
    for (k, c) in BERN_OVER_FACT.iter().enumerate() {
        if k > 0 {
            let j = 2.0 * k as f64;
            rising *= (s + j - 1.0) * (s + j);
            npow /= nf * nf;
        }
        sum += c * rising * npow;
    }
    sum
}

/// Surface area of the unit sphere in R^n.
pub fn sphere_area(n: usize) -> f64 {
    let h = 0.5 * n as f64;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_values() {
        assert!((zeta(0.0) + 0.5).abs() < 1e-13);
        assert!((zeta(-1.0) + 1.0 / 12.0).abs() < 1e-13);
        assert!((zeta(2.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
        assert!((zeta(0.5) + 1.460_354_508_809_586_8).abs() < 1e-12);
        assert!((zeta(-0.5) + 0.207_886_224_977_354_6).abs() < 1e-12);
    }

    #[test]
    fn spheres() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-13);
    }
}
