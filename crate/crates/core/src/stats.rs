//! Numeric kernels: the standard normal family, Inverse-Gamma moments and
//! sampling, and a splittable deterministic random stream.
//!
//! Everything here is pure `f64` arithmetic on top of `libm`, so results are
//! bit-identical across platforms and runs. One [`RandomStream`] per
//! replication keeps parallel Monte Carlo independent of scheduling.

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.3989422804014327;
const SQRT_2: f64 = core::f64::consts::SQRT_2;
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic random stream keyed by `(seed, stream_id)`.
///
/// A xoshiro256++ generator whose 256-bit state is expanded from the key
/// with SplitMix64. Identical keys yield bit-identical sequences; distinct
/// stream ids yield unrelated sequences, so replication `r` runs on stream
/// `r` no matter which thread picks it up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    state: [u64; 4],
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut key = seed;
        let mixed = splitmix64(&mut key);
        let mut expander = mixed ^ stream_id.wrapping_mul(GOLDEN);
        let mut state = [0u64; 4];
        for word in &mut state {
            *word = splitmix64(&mut expander);
        }
        if state == [0; 4] {
            // xoshiro must not start from the all-zero state
            state = [GOLDEN, mixed, !mixed, 1];
        }
        RandomStream {
            seed,
            stream_id,
            state,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Next raw 64-bit draw (xoshiro256++).
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform draw strictly inside (0, 1): `(i + 0.5) / 2^53`.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Fair coin from the top bit.
    pub fn next_bool(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }
}

/// Normal payoff law `N(mean, variance)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalParams {
    pub mean: f64,
    pub variance: f64,
}

impl NormalParams {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::NonFinite {
                what: "normal mean",
            });
        }
        if !variance.is_finite() {
            return Err(Error::NonFinite {
                what: "normal variance",
            });
        }
        if variance < 0.0 {
            return Err(Error::OutOfRange {
                what: "normal variance",
                value: variance,
            });
        }
        Ok(NormalParams { mean, variance })
    }

    pub fn std_dev(&self) -> f64 {
        libm::sqrt(self.variance)
    }
}

/// Inverse-Gamma(shape, scale) over a variance; shape > 1 keeps the mean finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvGammaParams {
    pub shape: f64,
    pub scale: f64,
}

impl InvGammaParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !shape.is_finite() || !scale.is_finite() {
            return Err(Error::NonFinite {
                what: "inverse-gamma parameter",
            });
        }
        if shape <= 1.0 {
            return Err(Error::OutOfRange {
                what: "inverse-gamma shape",
                value: shape,
            });
        }
        if scale <= 0.0 {
            return Err(Error::OutOfRange {
                what: "inverse-gamma scale",
                value: scale,
            });
        }
        Ok(InvGammaParams { shape, scale })
    }
}

/// Mean of Inverse-Gamma(a, b): `b / (a - 1)`, defined for a > 1.
pub fn inv_gamma_mean(params: InvGammaParams) -> Result<f64> {
    if params.shape <= 1.0 {
        return Err(Error::UndefinedMean {
            shape: params.shape,
        });
    }
    Ok(params.scale / (params.shape - 1.0))
}

#[inline]
pub(crate) fn pdf_raw(x: f64) -> f64 {
    INV_SQRT_2PI * libm::exp(-0.5 * x * x)
}

#[inline]
pub(crate) fn cdf_raw(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite {
            what: "normal_pdf argument",
        });
    }
    Ok(pdf_raw(x))
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite {
            what: "normal_cdf argument",
        });
    }
    Ok(cdf_raw(x))
}

// Acklam's rational approximation to the standard normal quantile.
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const P_LOW: f64 = 0.02425;

fn acklam(p: f64) -> f64 {
    if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

#[inline]
pub(crate) fn quantile_raw(p: f64) -> f64 {
    // Rational initial guess refined by one Newton step against the CDF.
    let x = acklam(p);
    let err = cdf_raw(x) - p;
    let density = pdf_raw(x);
    if density > 0.0 {
        x - err / density
    } else {
        x
    }
}

/// Standard normal quantile for p in (0, 1).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::NonFinite {
            what: "quantile probability",
        });
    }
    if p <= 0.0 || p >= 1.0 {
        return Err(Error::OutOfRange {
            what: "quantile probability",
            value: p,
        });
    }
    Ok(quantile_raw(p))
}

/// Draw from `N(mean, variance)` by inverse transform; one uniform per draw.
///
/// With variance zero the draw is exactly the mean (a uniform is still
/// consumed, keeping the stream layout independent of parameters).
pub fn sample_normal(params: NormalParams, rng: &mut RandomStream) -> f64 {
    params.mean + params.std_dev() * quantile_raw(rng.next_open01())
}

fn standard_gamma(shape: f64, rng: &mut RandomStream) -> f64 {
    // Marsaglia-Tsang; shapes below one are boosted through Gamma(a + 1).
    if shape < 1.0 {
        let u = rng.next_open01();
        return standard_gamma(shape + 1.0, rng) * libm::pow(u, 1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / libm::sqrt(9.0 * d);
    loop {
        let x = quantile_raw(rng.next_open01());
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.next_open01();
        if libm::log(u) < 0.5 * x * x + d - d * v + d * libm::log(v) {
            return d * v;
        }
    }
}

/// Sample Inverse-Gamma(shape, scale) as the reciprocal of a Gamma draw.
pub fn sample_inv_gamma(params: InvGammaParams, rng: &mut RandomStream) -> f64 {
    params.scale / standard_gamma(params.shape, rng)
}
