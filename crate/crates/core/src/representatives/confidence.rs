use crate::error::{Error, Result};
use crate::scalar::{count, lit, Real};

/// Lower confidence bound on a sampled probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaConfidence<F> {
    pub value: F,
    /// Standard-normal quantile used for the bound.
    pub z: F,
    /// False when `n * p_hat < 5`, where the normal approximation is
    /// unreliable.
    pub applicable: bool,
}

/// Normal-approximation lower bound `p_hat - z * sqrt(p_hat (1 - p_hat) / n)`
/// with `z = Φ⁻¹(alpha)`, clamped to `[0, 1]`.
pub fn alpha_confidence<F: Real>(p_hat: F, n: usize, alpha: F) -> Result<AlphaConfidence<F>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "confidence bound needs n >= 1".into(),
        ));
    }
    if !(p_hat >= F::zero() && p_hat <= F::one()) {
        return Err(Error::InvalidArgument(format!(
            "p_hat {p_hat} outside [0, 1]"
        )));
    }
    if !(alpha > F::zero() && alpha < F::one()) {
        return Err(Error::InvalidArgument(format!(
            "alpha {alpha} outside (0, 1)"
        )));
    }
    let z: F = lit(standard_normal_quantile(alpha.to_f64().unwrap()));
    let n_f: F = count(n);
    let half_width = z * (p_hat * (F::one() - p_hat) / n_f).sqrt();
    let value = (p_hat - half_width).max(F::zero()).min(F::one());
    Ok(AlphaConfidence {
        value,
        z,
        applicable: n_f * p_hat >= lit(5.0),
    })
}

/// Inverse of the standard normal CDF.
///
/// Rational approximation by P. J. Acklam (relative error below 1.15e-9 on
/// the whole open interval), central region for `0.02425 <= p <= 0.97575`
/// and a tail form in `sqrt(-2 ln p)` outside it.
pub fn standard_normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const LOW: f64 = 0.02425;

    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let tail = |p: f64| {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < LOW {
        tail(p)
    } else if p > 1.0 - LOW {
        -tail(1.0 - p)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}
