//! Adaptive Gauss-Kronrod (7/15 point) quadrature.
//!
//! Used to verify the closed-form densities numerically, so it is kept
//! independent of everything in [`crate::analysis`].

/// Kronrod abscissae on [-1, 1], non-negative half, descending.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Estimate {
        value: kronrod * half,
        abs_error: ((kronrod - gauss) * half).abs(),
    }
}

/// Global adaptive scheme: keep bisecting the interval with the largest
/// error estimate until the summed estimate meets the tolerance, the
/// interval budget runs out, or the remaining error is at roundoff level.
fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Estimate {
    let mut parts = vec![(a, b, kronrod(f, a, b))];
    loop {
        let value: f64 = parts.iter().map(|p| p.2.value).sum();
        let error: f64 = parts.iter().map(|p| p.2.abs_error).sum();
        let roundoff = 50.0 * f64::EPSILON * parts.iter().map(|p| p.2.value.abs()).sum::<f64>();
        if error <= tol.max(roundoff) || parts.len() >= MAX_INTERVALS {
            return Estimate { value, abs_error: error };
        }
        let (i, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.abs_error.total_cmp(&y.1 .2.abs_error))
            .expect("at least one interval");
        let (lo, hi, _) = parts[i];
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Estimate { value, abs_error: error };
        }
        parts[i] = (lo, mid, kronrod(f, lo, mid));
        parts.push((mid, hi, kronrod(f, mid, hi)));
    }
}

/// Integrates `f` over `[a, b]` to an absolute tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Estimate {
    if a == b {
        return Estimate { value: 0.0, abs_error: 0.0 };
    }
    adapt(&f, a, b, abs_tol)
}

/// Integrates `f` over `[a, inf)` through the map `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64) -> Estimate {
    let mapped = |t: f64| {
        let s = 1.0 - t;
        let v = f(a + t / s);
        if v == 0.0 {
            0.0
        } else {
            v / (s * s)
        }
    };
    integrate(mapped, 0.0, 1.0, abs_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let est = integrate(|x| x.powi(5) - 3.0 * x * x + 1.0, -1.0, 2.0, 1e-14);
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0) + 3.0;
        assert!((est.value - exact).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integrand() {
        let est = integrate(|x| (10.0 * x).sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!(est.value.abs() < 1e-11);
    }

    #[test]
    fn kink_integrand() {
        let est = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12);
        assert!((est.value - (0.045 + 0.245)).abs() < 1e-11);
    }

    #[test]
    fn exponential_tail() {
        let q = -0.37;
        let est = integrate_to_infinity(|x| (q * x).exp(), 2.0, 1e-13);
        let exact = -(q * 2.0).exp() / q;
        assert!((est.value - exact).abs() < 1e-11, "{} vs {exact}", est.value);
    }

    #[test]
    fn gaussian_mass() {
        let est = integrate_to_infinity(|x| (-x * x / 2.0).exp(), 0.0, 1e-13);
        assert!((est.value - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-11);
    }
}
