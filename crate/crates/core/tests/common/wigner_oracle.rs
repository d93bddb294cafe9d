// Reference Wigner symbols in exact big-integer arithmetic, written from
// the Clebsch-Gordan and Racah sums independently of the library.
// Arguments are twice the angular momenta.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `(sign, square)` of a symbol; the value is `sign * sqrt(square)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Exact {
    pub sign: i32,
    pub square: BigRational,
}

impl Exact {
    pub fn zero() -> Self {
        Exact {
            sign: 0,
            square: BigRational::zero(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.sign == 0 {
            return 0.0;
        }
        f64::from(self.sign) * self.square.to_f64().unwrap().sqrt()
    }
}

fn fact(n: i64) -> BigInt {
    assert!(n >= 0, "factorial of {n}");
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

fn rat(n: BigInt) -> BigRational {
    BigRational::from_integer(n)
}

// Half of a twice-value that must be even.
fn half(t: i64) -> i64 {
    assert!(t % 2 == 0, "odd twice-value {t}");
    t / 2
}

fn triad(a: i64, b: i64, c: i64) -> bool {
    a >= 0 && b >= 0 && c >= 0 && c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

fn projection_ok(j: i64, m: i64) -> bool {
    m.abs() <= j && (j + m) % 2 == 0
}

/// `<j1 m1 j2 m2 | J M>` from Racah's closed form.
pub fn clebsch_gordan(j1: i64, m1: i64, j2: i64, m2: i64, jj: i64, mm: i64) -> Exact {
    if mm != m1 + m2
        || !triad(j1, j2, jj)
        || !projection_ok(j1, m1)
        || !projection_ok(j2, m2)
        || !projection_ok(jj, mm)
    {
        return Exact::zero();
    }
    let pre = rat(BigInt::from(jj + 1)
        * fact(half(jj + j1 - j2))
        * fact(half(jj - j1 + j2))
        * fact(half(j1 + j2 - jj))
        * fact(half(jj + mm))
        * fact(half(jj - mm))
        * fact(half(j1 - m1))
        * fact(half(j1 + m1))
        * fact(half(j2 - m2))
        * fact(half(j2 + m2)))
        / rat(fact(half(j1 + j2 + jj) + 1));

    let mut sum = BigRational::zero();
    for k in 0.. {
        let terms = [
            k,
            half(j1 + j2 - jj) - k,
            half(j1 - m1) - k,
            half(j2 + m2) - k,
            half(jj - j2 + m1) + k,
            half(jj - j1 - m2) + k,
        ];
        if terms[1] < 0 || terms[2] < 0 || terms[3] < 0 {
            break;
        }
        if terms.iter().any(|&t| t < 0) {
            continue;
        }
        let den = terms.iter().fold(BigInt::one(), |acc, &t| acc * fact(t));
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    signed(sum, pre, 1)
}

fn signed(sum: BigRational, pre: BigRational, phase: i32) -> Exact {
    if sum.is_zero() {
        return Exact::zero();
    }
    let sign = if sum.is_negative() { -phase } else { phase };
    Exact {
        sign,
        square: pre * &sum * &sum,
    }
}

/// `(j1 j2 j3; m1 m2 m3)` through its Clebsch-Gordan relation.
pub fn three_j(j1: i64, j2: i64, j3: i64, m1: i64, m2: i64, m3: i64) -> Exact {
    if m1 + m2 + m3 != 0 {
        return Exact::zero();
    }
    let cg = clebsch_gordan(j1, m1, j2, m2, j3, -m3);
    if cg.sign == 0 {
        return cg;
    }
    let phase = if half(j1 - j2 - m3) % 2 == 0 { 1 } else { -1 };
    Exact {
        sign: cg.sign * phase,
        square: cg.square / rat(BigInt::from(j3 + 1)),
    }
}

fn delta_sq(a: i64, b: i64, c: i64) -> BigRational {
    rat(fact(half(a + b - c)) * fact(half(a - b + c)) * fact(half(b + c - a)))
        / rat(fact(half(a + b + c) + 1))
}

/// `{j1 j2 j3; j4 j5 j6}` from the Racah single sum.
pub fn six_j(j1: i64, j2: i64, j3: i64, j4: i64, j5: i64, j6: i64) -> Exact {
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    if triads.iter().any(|&(a, b, c)| !triad(a, b, c)) {
        return Exact::zero();
    }
    let pre = triads.iter().fold(BigRational::one(), |acc, &(a, b, c)| {
        acc * delta_sq(a, b, c)
    });
    let a: Vec<i64> = triads.iter().map(|&(x, y, z)| half(x + y + z)).collect();
    let b = [
        half(j1 + j2 + j4 + j5),
        half(j2 + j3 + j5 + j6),
        half(j3 + j1 + j6 + j4),
    ];
    let lo = *a.iter().max().unwrap();
    let hi = *b.iter().min().unwrap();
    let mut sum = BigRational::zero();
    for t in lo..=hi {
        let den = a
            .iter()
            .map(|&x| t - x)
            .chain(b.iter().map(|&y| y - t))
            .fold(BigInt::one(), |acc, n| acc * fact(n));
        let term = BigRational::new(fact(t + 1), den);
        if t % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    signed(sum, pre, 1)
}

/// `{j1 j2 j3; j4 j5 j6}` as a contraction of four 3j symbols over all
/// magnetic quantum numbers, in floating point.
pub fn six_j_contraction(j1: i64, j2: i64, j3: i64, j4: i64, j5: i64, j6: i64) -> f64 {
    let tj = |a: i64, b: i64, c: i64, x: i64, y: i64, z: i64| three_j(a, b, c, x, y, z).to_f64();
    let mut total = 0.0;
    for m1 in (-j1..=j1).step_by(2) {
        for m2 in (-j2..=j2).step_by(2) {
            for m4 in (-j4..=j4).step_by(2) {
                let m3 = -m1 - m2;
                let m6 = m4 + m2;
                let m5 = m4 - m3;
                if m3.abs() > j3 || m5.abs() > j5 || m6.abs() > j6 {
                    continue;
                }
                let phase_twice =
                    (j1 - m1) + (j2 - m2) + (j3 - m3) + (j4 - m4) + (j5 - m5) + (j6 - m6);
                let phase = if half(phase_twice) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                total += phase
                    * tj(j1, j2, j3, -m1, -m2, -m3)
                    * tj(j1, j5, j6, m1, -m5, m6)
                    * tj(j4, j2, j6, m4, m2, -m6)
                    * tj(j4, j5, j3, -m4, m5, m3);
            }
        }
    }
    total
}
