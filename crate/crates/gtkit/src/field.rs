//! Exact arithmetic over finite fields GF(q) for prime powers q.
//!
//! Elements are the integers `0..q`, read as base-p digit vectors
//! (polynomial coefficients, constant term in the lowest digit).
//! Multiplication, inversion and powering go through exponent/logarithm
//! tables for a fixed primitive element. The defining polynomial is the
//! lexicographically smallest monic irreducible of its degree, so two
//! `FieldSpec`s built for the same q are identical, tables included.

use std::fmt;

use thiserror::Error;

/// Largest supported field order. Tables stay cache-resident below this.
pub const MAX_FIELD_ORDER: u32 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("q = {0} is not a prime power in [2, 65536]")]
    NotPrimePower(u32),
    #[error("division by zero in GF({q})")]
    DivisionByZero { q: u32 },
    #[error("element {element} out of range for GF({q})")]
    ElementOutOfRange { q: u32, element: u32 },
}

/// Arithmetic tables for GF(q) = GF(p^m). Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    q: u32,
    characteristic: u32,
    degree: u32,
    /// Defining monic irreducible polynomial, constant term first,
    /// `degree + 1` coefficients. For prime fields this is x, i.e. `[0, 1]`.
    modulus: Vec<u32>,
    /// Smallest element (in the packed integer order) generating GF(q)*.
    generator: u32,
    /// exp[i] = generator^i for i in 0..q-1.
    exp: Vec<u32>,
    /// log[a] for a in 1..q; log[0] is an unused sentinel.
    log: Vec<u32>,
}

/// Decompose n as p^m with p prime, if possible.
pub fn prime_power(n: u64) -> Option<(u64, u32)> {
    if n < 2 {
        return None;
    }
    let mut p = 0u64;
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            p = d;
            break;
        }
        d += 1;
    }
    if p == 0 {
        return Some((n, 1)); // prime
    }
    let mut rest = n;
    let mut m = 0u32;
    while rest.is_multiple_of(p) {
        rest /= p;
        m += 1;
    }
    if rest == 1 {
        Some((p, m))
    } else {
        None
    }
}

impl FieldSpec {
    /// Build GF(q). Deterministic: the same q always yields the same tables.
    pub fn new(q: u32) -> Result<FieldSpec, FieldError> {
        if !(2..=MAX_FIELD_ORDER).contains(&q) {
            return Err(FieldError::NotPrimePower(q));
        }
        let (p, m) = prime_power(q as u64).ok_or(FieldError::NotPrimePower(q))?;
        let p = p as u32;

        let modulus = if m == 1 {
            vec![0, 1]
        } else {
            smallest_irreducible(p, m)
        };

        let mut spec = FieldSpec {
            q,
            characteristic: p,
            degree: m,
            modulus,
            generator: 0,
            exp: Vec::new(),
            log: Vec::new(),
        };
        spec.generator = spec.find_generator();
        spec.build_tables();
        Ok(spec)
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    pub fn characteristic(&self) -> u32 {
        self.characteristic
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn generator(&self) -> u32 {
        self.generator
    }

    fn check(&self, a: u32) -> Result<(), FieldError> {
        if a < self.q {
            Ok(())
        } else {
            Err(FieldError::ElementOutOfRange {
                q: self.q,
                element: a,
            })
        }
    }

    pub fn add(&self, a: u32, b: u32) -> Result<u32, FieldError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.add_raw(a, b))
    }

    pub fn sub(&self, a: u32, b: u32) -> Result<u32, FieldError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.sub_raw(a, b))
    }

    pub fn neg(&self, a: u32) -> Result<u32, FieldError> {
        self.check(a)?;
        Ok(self.sub_raw(0, a))
    }

    pub fn mul(&self, a: u32, b: u32) -> Result<u32, FieldError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.mul_raw(a, b))
    }

    pub fn inv(&self, a: u32) -> Result<u32, FieldError> {
        self.check(a)?;
        if a == 0 {
            return Err(FieldError::DivisionByZero { q: self.q });
        }
        Ok(self.inv_raw(a))
    }

    pub fn pow(&self, a: u32, n: u64) -> Result<u32, FieldError> {
        self.check(a)?;
        Ok(self.pow_raw(a, n))
    }

    #[inline]
    pub(crate) fn add_raw(&self, a: u32, b: u32) -> u32 {
        debug_assert!(a < self.q && b < self.q);
        let p = self.characteristic;
        if self.degree == 1 {
            let s = a + b;
            return if s >= p { s - p } else { s };
        }
        if p == 2 {
            return a ^ b;
        }
        // Digit-wise addition mod p.
        let mut out = 0u32;
        let mut scale = 1u32;
        let (mut x, mut y) = (a, b);
        while x != 0 || y != 0 {
            let s = x % p + y % p;
            out += (if s >= p { s - p } else { s }) * scale;
            x /= p;
            y /= p;
            scale *= p;
        }
        out
    }

    #[inline]
    pub(crate) fn sub_raw(&self, a: u32, b: u32) -> u32 {
        debug_assert!(a < self.q && b < self.q);
        let p = self.characteristic;
        if self.degree == 1 {
            return if a >= b { a - b } else { a + p - b };
        }
        if p == 2 {
            return a ^ b;
        }
        let mut out = 0u32;
        let mut scale = 1u32;
        let (mut x, mut y) = (a, b);
        while x != 0 || y != 0 {
            let xd = x % p;
            let yd = y % p;
            let d = if xd >= yd { xd - yd } else { xd + p - yd };
            out += d * scale;
            x /= p;
            y /= p;
            scale *= p;
        }
        out
    }

    #[inline]
    pub(crate) fn mul_raw(&self, a: u32, b: u32) -> u32 {
        debug_assert!(a < self.q && b < self.q);
        if a == 0 || b == 0 {
            return 0;
        }
        let n = self.q - 1;
        let idx = self.log[a as usize] + self.log[b as usize];
        self.exp[(if idx >= n { idx - n } else { idx }) as usize]
    }

    #[inline]
    pub(crate) fn inv_raw(&self, a: u32) -> u32 {
        debug_assert!(a != 0 && a < self.q);
        let n = self.q - 1;
        let l = self.log[a as usize];
        self.exp[(if l == 0 { 0 } else { n - l }) as usize]
    }

    pub(crate) fn pow_raw(&self, a: u32, n: u64) -> u32 {
        debug_assert!(a < self.q);
        if a == 0 {
            return if n == 0 { 1 } else { 0 };
        }
        let ord = (self.q - 1) as u128;
        let idx = (self.log[a as usize] as u128 * n as u128) % ord;
        self.exp[idx as usize]
    }

    /// Slow polynomial-representation product, used only while the
    /// exp/log tables are being built.
    fn mul_slow(&self, a: u32, b: u32) -> u32 {
        let p = self.characteristic as u64;
        let m = self.degree as usize;
        if m == 1 {
            return ((a as u64 * b as u64) % p) as u32;
        }
        let da = unpack(a, p as u32, m);
        let db = unpack(b, p as u32, m);
        // Convolution into 2m-1 coefficients.
        let mut conv = vec![0u64; 2 * m - 1];
        for (i, &x) in da.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in db.iter().enumerate() {
                conv[i + j] = (conv[i + j] + x as u64 * y as u64) % p;
            }
        }
        // Reduce by the defining polynomial (monic): x^m = -(low part).
        for i in (m..2 * m - 1).rev() {
            let c = conv[i];
            if c == 0 {
                continue;
            }
            conv[i] = 0;
            for j in 0..m {
                let mj = self.modulus[j] as u64;
                if mj != 0 {
                    let sub = (c * mj) % p;
                    conv[i - m + j] = (conv[i - m + j] + p - sub) % p;
                }
            }
        }
        pack(&conv[..m], p as u32)
    }

    fn pow_slow(&self, a: u32, mut n: u64) -> u32 {
        let mut base = a;
        let mut acc = 1u32;
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul_slow(acc, base);
            }
            base = self.mul_slow(base, base);
            n >>= 1;
        }
        acc
    }

    fn find_generator(&self) -> u32 {
        let n = (self.q - 1) as u64;
        if n == 1 {
            return 1;
        }
        let mut prime_divisors = Vec::new();
        let mut rest = n;
        let mut d = 2u64;
        while d * d <= rest {
            if rest.is_multiple_of(d) {
                prime_divisors.push(d);
                while rest.is_multiple_of(d) {
                    rest /= d;
                }
            }
            d += 1;
        }
        if rest > 1 {
            prime_divisors.push(rest);
        }
        for cand in 2..self.q {
            if prime_divisors
                .iter()
                .all(|&l| self.pow_slow(cand, n / l) != 1)
            {
                return cand;
            }
        }
        unreachable!("GF(q)* is cyclic, a generator exists");
    }

    fn build_tables(&mut self) {
        let n = (self.q - 1) as usize;
        let mut exp = vec![0u32; n];
        let mut log = vec![0u32; self.q as usize];
        let mut cur = 1u32;
        for (i, slot) in exp.iter_mut().enumerate() {
            *slot = cur;
            log[cur as usize] = i as u32;
            cur = self.mul_slow(cur, self.generator);
        }
        debug_assert_eq!(cur, 1, "generator order must be q-1");
        self.exp = exp;
        self.log = log;
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree == 1 {
            write!(f, "GF({}) poly={:?}", self.q, self.modulus)
        } else {
            write!(
                f,
                "GF({}^{}) poly={:?}",
                self.characteristic, self.degree, self.modulus
            )
        }
    }
}

fn unpack(x: u32, p: u32, len: usize) -> Vec<u32> {
    let mut digits = vec![0u32; len];
    let mut v = x;
    for d in digits.iter_mut() {
        *d = v % p;
        v /= p;
    }
    digits
}

fn pack(digits: &[u64], p: u32) -> u32 {
    let mut out = 0u64;
    for &d in digits.iter().rev() {
        out = out * p as u64 + d;
    }
    out as u32
}

/// Lexicographically smallest monic irreducible polynomial of degree m
/// over GF(p), found by scanning the packed low-coefficient value upward.
fn smallest_irreducible(p: u32, m: u32) -> Vec<u32> {
    let m = m as usize;
    let q = (p as u64).pow(m as u32);
    for low in 0..q {
        let mut coeffs: Vec<u32> = {
            let mut v = low;
            let mut d = vec![0u32; m + 1];
            for item in d.iter_mut().take(m) {
                *item = (v % p as u64) as u32;
                v /= p as u64;
            }
            d[m] = 1;
            d
        };
        if is_irreducible(&mut coeffs, p) {
            return coeffs;
        }
    }
    unreachable!("irreducible polynomials of every degree exist over GF(p)");
}

/// Irreducibility over GF(p) by root test (degree <= 3) or trial division
/// by every monic polynomial of degree up to m/2.
fn is_irreducible(f: &mut [u32], p: u32) -> bool {
    let m = f.len() - 1;
    if f[0] == 0 {
        return m == 1; // divisible by x
    }
    if m <= 3 {
        for a in 0..p {
            if poly_eval(f, a, p) == 0 {
                return false;
            }
        }
        return true;
    }
    for deg in 1..=(m / 2) {
        let count = (p as u64).pow(deg as u32);
        let mut div = vec![0u32; deg + 1];
        for low in 0..count {
            let mut v = low;
            for item in div.iter_mut().take(deg) {
                *item = (v % p as u64) as u32;
                v /= p as u64;
            }
            div[deg] = 1;
            if poly_divides(&div, f, p) {
                return false;
            }
        }
    }
    true
}

fn poly_eval(f: &[u32], x: u32, p: u32) -> u32 {
    let mut acc = 0u64;
    for &c in f.iter().rev() {
        acc = (acc * x as u64 + c as u64) % p as u64;
    }
    acc as u32
}

fn poly_divides(d: &[u32], f: &[u32], p: u32) -> bool {
    // Remainder of f by monic d; true when it vanishes.
    let p = p as u64;
    let mut rem: Vec<u64> = f.iter().map(|&c| c as u64).collect();
    let dd = d.len() - 1;
    for i in (dd..rem.len()).rev() {
        let c = rem[i];
        if c == 0 {
            continue;
        }
        rem[i] = 0;
        for j in 0..dd {
            let sub = (c * d[j] as u64) % p;
            rem[i - dd + j] = (rem[i - dd + j] + p - sub) % p;
        }
    }
    rem.iter().all(|&c| c == 0)
}
