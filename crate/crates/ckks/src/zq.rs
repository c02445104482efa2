//! Arithmetic modulo word-sized NTT-friendly primes.

/// a + b mod q, operands reduced.
#[inline(always)]
pub fn add_mod(a: u64, b: u64, q: u64) -> u64 {
    let s = a + b;
    if s >= q {
        s - q
    } else {
        s
    }
}

/// a - b mod q, operands reduced.
#[inline(always)]
pub fn sub_mod(a: u64, b: u64, q: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + q - b
    }
}

/// a * b mod q via 128-bit widening.
#[inline(always)]
pub fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

/// Shoup precomputation for multiplication by a fixed operand w:
/// `w_shoup = floor(w * 2^64 / q)`.
#[inline(always)]
pub fn shoup_precompute(w: u64, q: u64) -> u64 {
    (((w as u128) << 64) / q as u128) as u64
}

/// a * w mod q with precomputed `w_shoup`. Two multiplies, no division.
#[inline(always)]
pub fn mul_mod_shoup(a: u64, w: u64, w_shoup: u64, q: u64) -> u64 {
    let hi = ((a as u128 * w_shoup as u128) >> 64) as u64;
    let r = a.wrapping_mul(w).wrapping_sub(hi.wrapping_mul(q));
    if r >= q {
        r - q
    } else {
        r
    }
}

pub fn pow_mod(mut base: u64, mut exp: u64, q: u64) -> u64 {
    let mut acc = 1u64;
    base %= q;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, q);
        }
        base = mul_mod(base, base, q);
        exp >>= 1;
    }
    acc
}

/// Inverse modulo prime q (Fermat).
pub fn inv_mod(a: u64, q: u64) -> u64 {
    pow_mod(a, q - 2, q)
}

/// Deterministic Miller-Rabin, valid for all u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        r += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
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

/// Largest prime p <= hint with p ≡ 1 (mod modulus_step), searching downward.
/// Steps by `modulus_step` so every candidate satisfies the congruence.
pub fn prev_ntt_prime(hint: u64, modulus_step: u64) -> Option<u64> {
    let mut p = hint - ((hint - 1) % modulus_step);
    while p > modulus_step {
        if is_prime(p) {
            return Some(p);
        }
        p -= modulus_step;
    }
    None
}

/// Smallest prime p >= hint with p ≡ 1 (mod modulus_step).
pub fn next_ntt_prime(hint: u64, modulus_step: u64) -> Option<u64> {
    let rem = (hint - 1) % modulus_step;
    let mut p = if rem == 0 { hint } else { hint + modulus_step - rem };
    loop {
        if is_prime(p) {
            return Some(p);
        }
        p = p.checked_add(modulus_step)?;
        if p >= 1 << 62 {
            return None;
        }
    }
}

/// A primitive 2n-th root of unity mod q, for q ≡ 1 (mod 2n), n a power of 2.
/// Since 2n is a power of two, w is primitive iff w^n = -1.
pub fn primitive_2n_root(q: u64, n: u64) -> u64 {
    let exp = (q - 1) / (2 * n);
    // Deterministic scan keeps key generation reproducible.
    for x in 2..q {
        let w = pow_mod(x, exp, q);
        if pow_mod(w, n, q) == q - 1 {
            return w;
        }
    }
    unreachable!("no primitive root found; q is not a valid NTT prime")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn miller_rabin_known_values() {
        assert!(is_prime(2));
        assert!(is_prime(1_000_000_007));
        assert!(is_prime((1 << 61) - 1));
        assert!(!is_prime(1));
        assert!(!is_prime(561)); // Carmichael
        assert!(!is_prime((1 << 62) - 1));
    }

    #[test]
    fn ntt_prime_congruence() {
        let step = 1u64 << 15; // 2N for logN = 14
        let p = prev_ntt_prime(1 << 28, step).unwrap();
        assert!(is_prime(p));
        assert_eq!(p % step, 1);
        let w = primitive_2n_root(p, 1 << 14);
        assert_eq!(pow_mod(w, 1 << 14, p), p - 1);
        assert_eq!(pow_mod(w, 1 << 15, p), 1);
    }

    #[test]
    fn shoup_matches_plain() {
        let q = prev_ntt_prime(1 << 40, 1 << 11).unwrap();
        let w = 123_456_789_012 % q;
        let ws = shoup_precompute(w, q);
        for a in [0u64, 1, q - 1, q / 2, 987_654_321] {
            assert_eq!(mul_mod_shoup(a, w, ws, q), mul_mod(a, w, q));
        }
    }
}
