//! Wigner 3j and 6j symbols.
//!
//! Both symbols are evaluated with the Racah closed-form sums using exact
//! big-integer arithmetic. Only the final square root is taken in floating
//! point, so cancellations inside the alternating sums never lose precision.
//! Results are memoized in a process-wide table.

use std::collections::HashMap;
use std::fmt;
use std::sync::{OnceLock, RwLock};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// An angular-momentum quantum number stored as twice its value, so that
/// half-integers are exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);
    pub const HALF: HalfInt = HalfInt(1);
    pub const ONE: HalfInt = HalfInt(2);

    /// Builds the value `twice / 2`.
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    /// Builds an integer value.
    pub const fn int(value: i32) -> Self {
        HalfInt(2 * value)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    /// Multiplicity `2j + 1`.
    pub fn multiplicity(self) -> i32 {
        self.0 + 1
    }

    /// `m` values `-j, -j+1, ..., j` for this `j`.
    pub fn projections(self) -> impl Iterator<Item = HalfInt> {
        let j = self.0;
        (-j..=j).step_by(2).map(HalfInt)
    }

    /// Whether `(self, m)` is a legal `(j, m)` pair.
    pub fn admits(self, m: HalfInt) -> bool {
        self.0 >= 0 && m.0.abs() <= self.0 && (self.0 - m.0) % 2 == 0
    }
}

impl std::ops::Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl std::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl std::ops::Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum SymbolKey {
    ThreeJ([i32; 6]),
    SixJ([i32; 6]),
}

fn cache() -> &'static RwLock<HashMap<SymbolKey, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<SymbolKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn memoized(key: SymbolKey, compute: impl FnOnce() -> f64) -> f64 {
    if let Some(v) = cache().read().expect("wigner cache poisoned").get(&key) {
        return *v;
    }
    let v = compute();
    cache()
        .write()
        .expect("wigner cache poisoned")
        .insert(key, v);
    v
}

fn factorial(n: i64) -> BigUint {
    debug_assert!(n >= 0);
    (2..=n as u64).fold(BigUint::one(), |acc, k| acc * k)
}

fn triangle_ok(a: i32, b: i32, c: i32) -> bool {
    c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

/// Triangle coefficient Δ(abc) = (a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)! for
/// doubled arguments already known to satisfy the triangle rule.
fn triangle_coefficient(a: i32, b: i32, c: i32) -> BigRational {
    let num = factorial(i64::from((a + b - c) / 2))
        * factorial(i64::from((a - b + c) / 2))
        * factorial(i64::from((-a + b + c) / 2));
    let den = factorial(i64::from((a + b + c) / 2 + 1));
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Converts `sign * sqrt(magnitude)` to floating point.
fn signed_sqrt(sign: i32, magnitude: &BigRational) -> f64 {
    if magnitude.is_zero() || sign == 0 {
        return 0.0;
    }
    let root = magnitude
        .to_f64()
        .expect("rational square is finite")
        .sqrt();
    if sign < 0 {
        -root
    } else {
        root
    }
}

fn check_pair(j: HalfInt, m: HalfInt) -> Result<()> {
    if j.admits(m) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "invalid angular momentum pair (j={j}, m={m})"
        )))
    }
}

/// Wigner 3j symbol `(j1 j2 j3; m1 m2 m3)`.
///
/// Returns exactly `0.0` when a selection rule forbids the coupling. Invalid
/// `(j, m)` pairs are a domain error rather than a zero.
pub fn wigner3j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> Result<f64> {
    check_pair(j1, m1)?;
    check_pair(j2, m2)?;
    check_pair(j3, m3)?;
    let key = SymbolKey::ThreeJ([j1.0, j2.0, j3.0, m1.0, m2.0, m3.0]);
    Ok(memoized(key, || {
        racah_3j([j1.0, j2.0, j3.0], [m1.0, m2.0, m3.0])
    }))
}

fn racah_3j(j: [i32; 3], m: [i32; 3]) -> f64 {
    let [j1, j2, j3] = j;
    let [m1, m2, m3] = m;
    if m1 + m2 + m3 != 0 || !triangle_ok(j1, j2, j3) {
        return 0.0;
    }
    if m1 == 0 && m2 == 0 && m3 == 0 && ((j1 + j2 + j3) / 2) % 2 != 0 {
        return 0.0;
    }

    // Integer-valued combinations, all halved from doubled inputs.
    let h = |x: i32| i64::from(x / 2);
    let k_min = 0.max(h(j2 - j3 - m1)).max(h(j1 - j3 + m2));
    let k_max = h(j1 + j2 - j3).min(h(j1 - m1)).min(h(j2 + m2));

    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let den = factorial(k)
            * factorial(h(j3 - j2 + m1) + k)
            * factorial(h(j3 - j1 - m2) + k)
            * factorial(h(j1 + j2 - j3) - k)
            * factorial(h(j1 - m1) - k)
            * factorial(h(j2 + m2) - k);
        let term = BigRational::new(BigInt::one(), BigInt::from(den));
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return 0.0;
    }

    let prefactor = factorial(h(j1 + m1))
        * factorial(h(j1 - m1))
        * factorial(h(j2 + m2))
        * factorial(h(j2 - m2))
        * factorial(h(j3 + m3))
        * factorial(h(j3 - m3));
    let square = triangle_coefficient(j1, j2, j3)
        * BigRational::from_integer(BigInt::from(prefactor))
        * (&sum * &sum);

    // Phase (-1)^(j1 - j2 - m3); j1 - j2 - m3 is an integer.
    let phase = if (h(j1 - j2 - m3)).rem_euclid(2) == 0 {
        1
    } else {
        -1
    };
    let sign = if sum.is_negative() { -phase } else { phase };
    signed_sqrt(sign, &square)
}

/// Wigner 6j symbol `{j1 j2 j3; j4 j5 j6}`.
///
/// Returns exactly `0.0` when any of the four triads fails the triangle rule
/// or has a half-integer sum.
pub fn wigner6j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    j4: HalfInt,
    j5: HalfInt,
    j6: HalfInt,
) -> Result<f64> {
    for j in [j1, j2, j3, j4, j5, j6] {
        if j.0 < 0 {
            return Err(Error::Domain(format!("negative angular momentum {j}")));
        }
    }
    let key = SymbolKey::SixJ([j1.0, j2.0, j3.0, j4.0, j5.0, j6.0]);
    Ok(memoized(key, || {
        racah_6j([j1.0, j2.0, j3.0, j4.0, j5.0, j6.0])
    }))
}

fn racah_6j(j: [i32; 6]) -> f64 {
    let [j1, j2, j3, j4, j5, j6] = j;
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    if !triads.iter().all(|&(a, b, c)| triangle_ok(a, b, c)) {
        return 0.0;
    }

    let a = triads.map(|(x, y, z)| i64::from((x + y + z) / 2));
    let b = [
        i64::from((j1 + j2 + j4 + j5) / 2),
        i64::from((j2 + j3 + j5 + j6) / 2),
        i64::from((j3 + j1 + j6 + j4) / 2),
    ];
    let t_min = *a.iter().max().expect("four triads");
    let t_max = *b.iter().min().expect("three sums");

    let mut sum = BigRational::zero();
    for t in t_min..=t_max {
        let num = factorial(t + 1);
        let den = a.iter().map(|&ai| factorial(t - ai)).product::<BigUint>()
            * b.iter().map(|&bi| factorial(bi - t)).product::<BigUint>();
        let term = BigRational::new(BigInt::from(num), BigInt::from(den));
        if t % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return 0.0;
    }

    let deltas = triads
        .iter()
        .map(|&(x, y, z)| triangle_coefficient(x, y, z))
        .fold(BigRational::one(), |acc, d| acc * d);
    let square = deltas * (&sum * &sum);
    let sign = if sum.is_negative() { -1 } else { 1 };
    signed_sqrt(sign, &square)
}
