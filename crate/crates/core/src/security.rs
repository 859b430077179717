//! Finite-key security analysis.
//!
//! Computes the extractable secure key length from the measured QBER and
//! interference visibility of a finished block:
//!
//! ```text
//! zeta = (2V - 1) e^(-mu) - 2 sqrt((1 - e^(-2 mu)) V (1 - V))
//! l    = n [1 - Q - (1 - Q) h((1 - zeta)/2)]
//!        - 7 sqrt(n log2(1/beta))
//!        - f_IR h(Q) n
//!        - log2(1 / (2 eps_cor beta^2))
//! ```
//!
//! with `h` the binary entropy truncated to unity above 0.5 and
//! `beta = eps_qkd / 4`. A negative result means no secure key is
//! extractable and is clamped to zero.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Security parameters of the finite-key analysis.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SecurityParams {
    /// Total security parameter.
    pub epsilon_qkd: f64,
    /// Correctness parameter (probability the key is incorrect).
    pub epsilon_cor: f64,
    /// Information-reconciliation inefficiency, >= 1.
    ///
    /// Default calibrated against the reference key rates; practical
    /// reconciliation overhead grows well past the textbook ~1.1 in the
    /// sub-0.2 % QBER regime this system operates in.
    pub f_ir: f64,
    /// Post-processing block size (sifted bits).
    pub block_size_n: u64,
}

impl Default for SecurityParams {
    fn default() -> Self {
        let epsilon_qkd = 1e-10;
        Self {
            epsilon_qkd,
            epsilon_cor: epsilon_qkd / 4.0,
            f_ir: 2.55,
            block_size_n: 20_000_000,
        }
    }
}

impl SecurityParams {
    /// beta = eps_qkd / 4.
    #[inline]
    pub fn beta(&self) -> f64 {
        self.epsilon_qkd / 4.0
    }

    /// Validate all fields.
    pub fn validate(&self) -> Result<()> {
        for (name, eps) in [
            ("epsilon_qkd", self.epsilon_qkd),
            ("epsilon_cor", self.epsilon_cor),
        ] {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value: eps,
                    constraint: "must lie in (0, 1)",
                });
            }
        }
        if !(self.f_ir >= 1.0) || !self.f_ir.is_finite() {
            return Err(Error::InvalidParameter {
                name: "f_ir",
                value: self.f_ir,
                constraint: "must be >= 1",
            });
        }
        if self.block_size_n == 0 {
            return Err(Error::InvalidParameter {
                name: "block_size_n",
                value: 0.0,
                constraint: "must be at least 1",
            });
        }
        Ok(())
    }
}

/// Binary entropy in bits, truncated to unity above one half.
///
/// h(0) = 0 by convention, h(x) = -x log2 x - (1-x) log2(1-x) on (0, 0.5],
/// and h(x) = 1 for x > 0.5. Continuous on [0, 1].
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            context: "binary_entropy",
            detail: format!("argument {x} outside [0, 1]"),
        });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x > 0.5 {
        return Ok(1.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Visibility/intensity bound entering the extractable-entropy term.
///
/// May be negative; the entropy truncation in [`secure_key_length`] then
/// drives the extractable fraction to zero.
pub fn zeta(visibility: f64, mu: f64) -> f64 {
    let cross = (-(2.0 * mu)).exp_m1(); // e^(-2mu) - 1
    (2.0 * visibility - 1.0) * (-mu).exp() - 2.0 * (-cross * visibility * (1.0 - visibility)).sqrt()
}

/// Extracted key length in bits, clamped below at zero.
pub fn secure_key_length(
    n: u64,
    qber: f64,
    visibility: f64,
    mu: f64,
    sec: &SecurityParams,
) -> Result<f64> {
    sec.validate()?;
    if !(0.0..=1.0).contains(&qber) {
        return Err(Error::Domain {
            context: "secure_key_length",
            detail: format!("QBER {qber} outside [0, 1]"),
        });
    }
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::Domain {
            context: "secure_key_length",
            detail: format!("visibility {visibility} outside [0, 1]"),
        });
    }
    let nf = n as f64;
    let beta = sec.beta();
    let z = zeta(visibility, mu);
    let h_pa = binary_entropy(((1.0 - z) / 2.0).clamp(0.0, 1.0))?;
    let h_q = binary_entropy(qber)?;
    let l = nf * (1.0 - qber - (1.0 - qber) * h_pa)
        - 7.0 * (nf * (1.0 / beta).log2()).sqrt()
        - sec.f_ir * h_q * nf
        - (1.0 / (2.0 * sec.epsilon_cor * beta * beta)).log2();
    Ok(l.max(0.0))
}

/// Key rate in bits per second.
pub fn secure_key_rate(key_length_bits: f64, duration_s: f64) -> Result<f64> {
    if !(duration_s > 0.0) {
        return Err(Error::Domain {
            context: "secure_key_rate",
            detail: format!("duration {duration_s} s must be positive"),
        });
    }
    Ok(key_length_bits / duration_s)
}

/// Inputs echoed into a [`KeyRateResult`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KeyRateInputs {
    /// Block size used.
    pub n: u64,
    /// Measured QBER.
    pub qber: f64,
    /// Measured visibility.
    pub visibility: f64,
    /// Mean photon number per pulse at the source.
    pub mu: f64,
    /// Acquisition duration in seconds.
    pub duration_s: f64,
    /// Security parameters.
    pub security: SecurityParams,
}

/// Result of a finite-key evaluation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KeyRateResult {
    /// The zeta bound for the inputs.
    pub zeta: f64,
    /// Extracted key length in bits (clamped at zero).
    pub key_length_bits: f64,
    /// Secure key rate in bits per second.
    pub rate_bits_per_s: f64,
    /// False when the formula went non-positive and was clamped.
    pub secure: bool,
    /// The full input set, for provenance.
    pub inputs: KeyRateInputs,
}

/// Evaluate key length and rate for one finished block.
pub fn evaluate_block(
    n: u64,
    qber: f64,
    visibility: f64,
    mu: f64,
    duration_s: f64,
    sec: &SecurityParams,
) -> Result<KeyRateResult> {
    let l = secure_key_length(n, qber, visibility, mu, sec)?;
    let rate = secure_key_rate(l, duration_s)?;
    Ok(KeyRateResult {
        zeta: zeta(visibility, mu),
        key_length_bits: l,
        rate_bits_per_s: rate,
        secure: l > 0.0,
        inputs: KeyRateInputs {
            n,
            qber,
            visibility,
            mu,
            duration_s,
            security: *sec,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1.0)
    }

    #[test]
    fn entropy_known_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.7).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.6).unwrap(), binary_entropy(0.7).unwrap());
        // oracle: h(0.11) = 0.499915958164528
        assert!(close(
            binary_entropy(0.11).unwrap(),
            0.499915958164528,
            1e-14
        ));
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn entropy_truncation_not_symmetric() {
        // truncation breaks h(x) = h(1-x) above 0.5 by design
        let below = binary_entropy(0.3).unwrap();
        assert!(below < 1.0);
        assert_eq!(binary_entropy(0.7).unwrap(), 1.0);
    }

    #[test]
    fn entropy_concave_on_lower_half() {
        let xs: Vec<f64> = (1..50).map(|i| i as f64 * 0.01).collect();
        for w in xs.windows(3) {
            let (a, b, c) = (w[0], w[1], w[2]);
            let ha = binary_entropy(a).unwrap();
            let hb = binary_entropy(b).unwrap();
            let hc = binary_entropy(c).unwrap();
            assert!(hb >= (ha + hc) / 2.0 - 1e-12);
        }
    }

    #[test]
    fn zeta_known_values() {
        // V=1 annihilates the square-root term
        assert!(close(zeta(1.0, 0.1), 0.90483741803595957, 1e-15));
        // V=0.5 kills the linear term
        assert!(close(zeta(0.5, 0.1), -0.42575726291164798, 1e-14));
        // oracle value at the reference visibility anchor
        assert!(close(zeta(0.9781, 0.1), 0.74058037370461504, 1e-13));
    }

    #[test]
    fn zeta_monotone_in_visibility() {
        for &mu in &[0.01, 0.07, 0.1, 0.3, 0.5] {
            let mut prev = zeta(0.5, mu);
            for i in 1..=100 {
                let v = 0.5 + 0.005 * i as f64;
                let z = zeta(v, mu);
                assert!(z > prev, "zeta not increasing at V={v}, mu={mu}");
                prev = z;
            }
        }
    }

    #[test]
    fn key_length_ideal_limit() {
        // V=1, Q=0, mu->0, n=1e6: only finite-size penalties remain.
        // oracle: 958353.25787512911
        let sec = SecurityParams::default();
        let l = secure_key_length(1_000_000, 0.0, 1.0, 0.0, &sec).unwrap();
        assert!(close(l, 958353.25787512911, 1e-12), "l = {l}");
    }

    #[test]
    fn key_length_reference_point() {
        // oracle: l(n=2e7, Q=0.0015, V=0.978, mu=0.1, defaults) = 7827486.6163170572
        let sec = SecurityParams::default();
        let l = secure_key_length(20_000_000, 0.0015, 0.978, 0.1, &sec).unwrap();
        assert!(l > 0.0);
        assert!(close(l, 7827486.6163170572, 1e-12), "l = {l}");
    }

    #[test]
    fn key_length_clamps_at_low_visibility() {
        let sec = SecurityParams::default();
        for q in [0.0, 0.01, 0.1] {
            let l = secure_key_length(1_000_000, q, 0.5, 0.1, &sec).unwrap();
            assert_eq!(l, 0.0);
        }
    }

    #[test]
    fn key_length_monotone_in_v_and_q() {
        let sec = SecurityParams::default();
        let n = 10_000_000;
        for i in 0..20 {
            let v1 = 0.90 + 0.004 * i as f64;
            let v2 = v1 + 0.004;
            let l1 = secure_key_length(n, 0.005, v1, 0.1, &sec).unwrap();
            let l2 = secure_key_length(n, 0.005, v2, 0.1, &sec).unwrap();
            assert!(l2 >= l1);
        }
        for i in 0..20 {
            let q1 = 0.001 * i as f64;
            let q2 = q1 + 0.001;
            let l1 = secure_key_length(n, q1, 0.97, 0.1, &sec).unwrap();
            let l2 = secure_key_length(n, q2, 0.97, 0.1, &sec).unwrap();
            assert!(l2 <= l1);
        }
    }

    #[test]
    fn key_length_never_exceeds_n() {
        let sec = SecurityParams::default();
        for &(q, v, mu) in &[(0.0, 1.0, 0.001), (0.01, 0.98, 0.1), (0.05, 0.9, 0.3)] {
            let l = secure_key_length(1_000_000, q, v, mu, &sec).unwrap();
            assert!(l <= 1_000_000.0);
        }
    }

    #[test]
    fn rate_basics() {
        assert_eq!(secure_key_rate(0.0, 10.0).unwrap(), 0.0);
        assert!(secure_key_rate(1.0, 0.0).is_err());
        let r = secure_key_rate(1000.0, 4.0).unwrap();
        assert_eq!(r, 250.0);
    }

    #[test]
    fn evaluate_block_echoes_inputs() {
        let sec = SecurityParams::default();
        let res = evaluate_block(1_000_000, 0.001, 0.97, 0.1, 2.0, &sec).unwrap();
        assert!(res.secure);
        assert_eq!(res.inputs.n, 1_000_000);
        assert!((res.rate_bits_per_s - res.key_length_bits / 2.0).abs() < 1e-9);
    }
}
