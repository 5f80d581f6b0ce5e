//! Classical share arithmetic: additive splitting over a prime field, angle
//! encoding, the angle-sum consistency check, and Lagrange reduction of
//! threshold shares to effective additive shares.
//!
//! The dealer secret and all shares live in Z_q for a prime q > 2 and sum to
//! zero mod q. Each value k encodes as the rotation angle s·k/q·2π, reduced
//! to [0, 2π); the session randomizer s re-keys the encoding per run so
//! shares can be reused across secrets.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::statevec::normalize_angle;

/// Largest supported modulus; keeps s·k exact in 128-bit intermediates.
pub const MAX_MODULUS: u64 = 1 << 61;

/// Deterministic Miller–Rabin for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    // this witness set decides primality for every u64
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..r - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Multiplicative inverse mod a prime, via Fermat.
pub fn inv_mod(a: u64, q: u64) -> Result<u64> {
    if a.is_multiple_of(q) {
        return Err(Error::DegenerateInterpolation(
            "zero has no multiplicative inverse".into(),
        ));
    }
    Ok(pow_mod(a, q - 2, q))
}

fn check_modulus(q: u64) -> Result<()> {
    if q <= 2 || q > MAX_MODULUS || !is_prime(q) {
        return Err(Error::BadModulus(format!(
            "modulus {q} must be a prime in (2, 2^61]"
        )));
    }
    Ok(())
}

/// The arithmetic world of one sharing: modulus, dealer secret, shareholder
/// shares, combiner share, and the session randomizer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShareConfig {
    /// Prime modulus > 2.
    pub q: u64,
    /// Dealer secret in Z_q.
    pub dealer_secret: u64,
    /// Shares of the non-combining shareholders (k_1 … k_{n−1}).
    pub shareholder_shares: Vec<u64>,
    /// The combiner's share.
    pub combiner_share: u64,
    /// Session randomizer in {1, …, q−1}.
    pub randomizer: u64,
}

impl ShareConfig {
    /// Assemble a config from explicit shareholder shares; the combiner share
    /// is derived so that all values sum to zero mod q.
    pub fn with_shares(
        dealer_secret: u64,
        shareholder_shares: Vec<u64>,
        q: u64,
        randomizer: u64,
    ) -> Result<Self> {
        check_modulus(q)?;
        if shareholder_shares.is_empty() {
            return Err(Error::InvalidArity(
                "need at least one shareholder besides the combiner".into(),
            ));
        }
        if randomizer == 0 || randomizer >= q {
            return Err(Error::BadRandomizer(format!(
                "randomizer {randomizer} outside 1..{q}"
            )));
        }
        let dealer_secret = dealer_secret % q;
        let shareholder_shares: Vec<u64> =
            shareholder_shares.into_iter().map(|k| k % q).collect();
        let mut sum = dealer_secret;
        for &k in &shareholder_shares {
            sum = (sum + k) % q;
        }
        let combiner_share = (q - sum) % q;
        Ok(Self {
            q,
            dealer_secret,
            shareholder_shares,
            combiner_share,
            randomizer,
        })
    }

    /// Number of shareholders, combiner included.
    pub fn party_count(&self) -> usize {
        self.shareholder_shares.len() + 1
    }

    /// (dealer + Σ shareholders + combiner) mod q; zero for a valid config.
    pub fn share_sum(&self) -> u64 {
        let mut sum = self.dealer_secret % self.q;
        for &k in &self.shareholder_shares {
            sum = (sum + k) % self.q;
        }
        (sum + self.combiner_share) % self.q
    }

    /// Relabel so that shareholder `index` (0-based) serves as combiner.
    pub fn with_combiner(&self, index: usize) -> Result<Self> {
        if index >= self.party_count() {
            return Err(Error::IndexError(format!(
                "combiner index {index} out of range for {} shareholders",
                self.party_count()
            )));
        }
        let mut all = self.shareholder_shares.clone();
        all.push(self.combiner_share);
        let combiner_share = all.remove(index);
        Ok(Self {
            q: self.q,
            dealer_secret: self.dealer_secret,
            shareholder_shares: all,
            combiner_share,
            randomizer: self.randomizer,
        })
    }
}

/// Split `dealer_secret` into n−1 uniform shareholder shares plus a combiner
/// share chosen so everything sums to zero mod q. Also draws the session
/// randomizer from the same seed.
pub fn split_secret(dealer_secret: u64, n: usize, q: u64, seed: u64) -> Result<ShareConfig> {
    check_modulus(q)?;
    if n < 2 {
        return Err(Error::InvalidArity(format!(
            "need at least two shareholders, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shares: Vec<u64> = (0..n - 1).map(|_| rng.random_range(0..q)).collect();
    let randomizer = rng.random_range(1..q);
    ShareConfig::with_shares(dealer_secret, shares, q, randomizer)
}

/// Rotation angle s·k/q·2π reduced to [0, 2π).
///
/// The product s·k is reduced mod q in exact integer arithmetic before the
/// single floating-point division, so the result is correct to ~1e-12 rad.
pub fn encode_angle(randomizer: u64, share: u64, q: u64) -> Result<f64> {
    check_modulus(q)?;
    if randomizer == 0 || randomizer >= q {
        return Err(Error::BadRandomizer(format!(
            "randomizer {randomizer} outside 1..{q}"
        )));
    }
    let reduced = mul_mod(randomizer, share % q, q);
    Ok(reduced as f64 / q as f64 * TAU)
}

/// θ_i = (−1)^{m_i+1}·ω_i + φ_i reduced to [0, 2π): the angle a shareholder
/// announces after learning the measurement result m_i.
pub fn response_angle(outcome: u8, mask: f64, phi: f64) -> f64 {
    let signed_mask = if outcome == 0 { -mask } else { mask };
    normalize_angle(signed_mask + phi)
}

/// The full set of rotation angles for one protocol run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AngleSet {
    pub phi_dealer: f64,
    pub phi_shareholders: Vec<f64>,
    pub phi_combiner: f64,
    /// Private masks ω_i, filled once shareholders prepare their qubits.
    pub masks: Vec<f64>,
    /// Announced response angles θ_i.
    pub thetas: Vec<f64>,
    /// Measurement outcomes m_i.
    pub outcomes: Vec<u8>,
    /// Integer multiple of 2π the φ angles sum to.
    pub winding: i64,
}

impl AngleSet {
    /// Encode every share of `config` under the randomizer `s`.
    pub fn derive(config: &ShareConfig, s: u64) -> Result<Self> {
        let phi_dealer = encode_angle(s, config.dealer_secret, config.q)?;
        let phi_shareholders: Vec<f64> = config
            .shareholder_shares
            .iter()
            .map(|&k| encode_angle(s, k, config.q))
            .collect::<Result<_>>()?;
        let phi_combiner = encode_angle(s, config.combiner_share, config.q)?;
        let rounds = phi_shareholders.len();
        let mut set = Self {
            phi_dealer,
            phi_shareholders,
            phi_combiner,
            masks: Vec::with_capacity(rounds),
            thetas: Vec::with_capacity(rounds),
            outcomes: Vec::with_capacity(rounds),
            winding: 0,
        };
        set.winding = check_angle_sum(&set)?;
        Ok(set)
    }
}

/// Verify that the φ angles sum to an integer multiple of 2π and return that
/// integer. A residual above 1e-9 means the shares are inconsistent.
pub fn check_angle_sum(angles: &AngleSet) -> Result<i64> {
    let sum = angles.phi_dealer
        + angles.phi_shareholders.iter().sum::<f64>()
        + angles.phi_combiner;
    let r = (sum / TAU).round();
    let residual = (sum - r * TAU).abs();
    if residual >= 1e-9 {
        return Err(Error::NotConsistent(format!(
            "angle sum {sum} is {residual:.3e} rad away from a 2π multiple"
        )));
    }
    Ok(r as i64)
}

/// Reduce t threshold shares (x_i, y_i) to effective additive shares
/// k'_i = y_i·λ_i mod q, where λ_i is the Lagrange weight at zero. The k'_i
/// sum to the threshold secret, so the t holders can run the additive
/// protocol unchanged.
pub fn lagrange_reduce(points: &[(u64, u64)], q: u64) -> Result<Vec<u64>> {
    check_modulus(q)?;
    if points.is_empty() {
        return Err(Error::InvalidArity("no share points given".into()));
    }
    let xs: Vec<u64> = points.iter().map(|&(x, _)| x % q).collect();
    for (i, &x) in xs.iter().enumerate() {
        if x == 0 {
            return Err(Error::DegenerateInterpolation(
                "abscissa 0 would expose the secret directly".into(),
            ));
        }
        if xs[..i].contains(&x) {
            return Err(Error::DegenerateInterpolation(format!(
                "duplicate abscissa {x}"
            )));
        }
    }
    let mut reduced = Vec::with_capacity(points.len());
    for (i, &(_, y)) in points.iter().enumerate() {
        let mut lambda = 1u64;
        for (j, &xj) in xs.iter().enumerate() {
            if j == i {
                continue;
            }
            let diff = (xj + q - xs[i]) % q;
            lambda = mul_mod(lambda, mul_mod(xj, inv_mod(diff, q)?, q), q);
        }
        reduced.push(mul_mod(y % q, lambda, q));
    }
    Ok(reduced)
}

/// Evaluate a fresh random polynomial of degree t−1 with constant term
/// `secret` at x = 1..n, producing n threshold share points.
pub fn shamir_split(secret: u64, t: usize, n: usize, q: u64, seed: u64) -> Result<Vec<(u64, u64)>> {
    check_modulus(q)?;
    if t == 0 || t > n {
        return Err(Error::InvalidArity(format!(
            "threshold {t} incompatible with {n} holders"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![secret % q];
    coeffs.extend((1..t).map(|_| rng.random_range(0..q)));
    Ok((1..=n as u64)
        .map(|x| {
            let mut acc = 0u64;
            for &c in coeffs.iter().rev() {
                acc = (mul_mod(acc, x, q) + c) % q;
            }
            (x, acc)
        })
        .collect())
}
