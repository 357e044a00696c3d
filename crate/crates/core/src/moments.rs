//! Per-dimension absolute moments of a scalar value distribution.
//!
//! For a scalar `V` and a norm parameter `p`, the quantities of interest are
//! `m_p = E|V|^p` and `m'_p = E|V1 - V2|^p` (two independent copies),
//! together with the same moments at `2p`. The uniform(0,1) case has a
//! closed form; anything else is estimated by Monte Carlo.

use crate::error::Error;
use crate::rng::CellRng;
use crate::Result;
use rayon::prelude::*;

/// The `(m_p, m_2p, m'_p, m'_2p)` bundle for one scalar distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub m_p: f64,
    pub m_2p: f64,
    pub mprime_p: f64,
    pub mprime_2p: f64,
}

impl MomentSet {
    /// Validates nonnegativity and the Jensen inequalities
    /// `m_2p >= m_p^2`, `m'_2p >= m'_p^2` (with a tiny numeric slack).
    pub fn new(m_p: f64, m_2p: f64, mprime_p: f64, mprime_2p: f64) -> Result<Self> {
        let all = [m_p, m_2p, mprime_p, mprime_2p];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(
                "moments must be finite and nonnegative".into(),
            ));
        }
        let slack = 1e-12;
        if m_2p < m_p * m_p * (1.0 - slack) - slack
            || mprime_2p < mprime_p * mprime_p * (1.0 - slack) - slack
        {
            return Err(Error::InvalidInput(
                "moments violate Jensen's inequality".into(),
            ));
        }
        Ok(MomentSet {
            m_p,
            m_2p,
            mprime_p,
            mprime_2p,
        })
    }
}

/// Closed-form moments of the uniform(0,1) distribution:
/// `m_p = 1/(p+1)`, `m'_p = 2/(p+1) - 2/(p+2)`, and likewise at `2p`.
pub fn uniform_moments(p: f64) -> Result<MomentSet> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::NonpositiveNorm(p));
    }
    let m = |q: f64| 1.0 / (q + 1.0);
    let mprime = |q: f64| 2.0 / (q + 1.0) - 2.0 / (q + 2.0);
    MomentSet::new(m(p), m(2.0 * p), mprime(p), mprime(2.0 * p))
}

/// Monte Carlo moment estimate with a degeneracy diagnostic.
#[derive(Debug, Clone, Copy)]
pub struct McMoments {
    pub set: MomentSet,
    /// True if every draw was identical (the `m'` moments are then 0 and
    /// the estimate carries no distributional information).
    pub degenerate: bool,
}

/// Estimate a [`MomentSet`] by Monte Carlo.
///
/// The sampler maps a uniform(0,1) draw to the target distribution (inverse
/// transform); the identity closure is the uniform distribution itself. Each
/// sample index draws two independent values, and the `2p` moments reuse the
/// same draws as the `p` moments. Deterministic given the seed, independent
/// of thread count.
pub fn mc_moments<F>(sampler: F, p: f64, samples: usize, seed: u64) -> Result<McMoments>
where
    F: Fn(f64) -> f64 + Sync,
{
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::NonpositiveNorm(p));
    }
    if samples < 1000 {
        return Err(Error::InvalidInput(format!(
            "need at least 1000 samples, got {samples}"
        )));
    }
    let rng = CellRng::new(seed, 0x0317);
    let chunk = 16_384usize;
    let nchunks = samples.div_ceil(chunk);

    struct Acc {
        m_p: f64,
        m_2p: f64,
        mp_p: f64,
        mp_2p: f64,
        distinct: bool,
    }

    let partials: Vec<Acc> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = ((c + 1) * chunk).min(samples);
            let mut acc = Acc {
                m_p: 0.0,
                m_2p: 0.0,
                mp_p: 0.0,
                mp_2p: 0.0,
                distinct: false,
            };
            let mut first: Option<f64> = None;
            for i in lo..hi {
                let v1 = sampler(rng.cell_open(i as u64, 0));
                let v2 = sampler(rng.cell_open(i as u64, 1));
                match first {
                    None => first = Some(v1),
                    Some(f) => {
                        if v1 != f || v2 != f {
                            acc.distinct = true;
                        }
                    }
                }
                let a1 = v1.abs().powf(p);
                let a2 = v2.abs().powf(p);
                let b = (v1 - v2).abs().powf(p);
                acc.m_p += 0.5 * (a1 + a2);
                acc.m_2p += 0.5 * (a1 * a1 + a2 * a2);
                acc.mp_p += b;
                acc.mp_2p += b * b;
            }
            acc
        })
        .collect();

    let inv = 1.0 / samples as f64;
    let mut m_p = 0.0;
    let mut m_2p = 0.0;
    let mut mp_p = 0.0;
    let mut mp_2p = 0.0;
    let mut distinct = false;
    for a in &partials {
        m_p += a.m_p;
        m_2p += a.m_2p;
        mp_p += a.mp_p;
        mp_2p += a.mp_2p;
        distinct |= a.distinct;
    }
    Ok(McMoments {
        set: MomentSet::new(m_p * inv, m_2p * inv, mp_p * inv, mp_2p * inv)?,
        degenerate: !distinct,
    })
}
