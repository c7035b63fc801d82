//! Directed rounding helpers.
//!
//! Sums, products and quotients are rounded with error-free transformations
//! (two-sum, fma), so the result is widened only when it was actually inexact.
//! Library transcendental functions are not correctly rounded and are widened
//! by one ulp unconditionally.

#[inline]
fn down(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v.next_down()
    }
}

#[inline]
fn up(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v.next_up()
    }
}

#[inline]
fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bp = s - a;
    (a - (s - bp)) + (b - bp)
}

pub fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.is_nan() {
        return f64::NEG_INFINITY;
    }
    if !s.is_finite() || !a.is_finite() || !b.is_finite() {
        return s;
    }
    if two_sum_err(a, b, s) < 0.0 {
        down(s)
    } else {
        s
    }
}

pub fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.is_nan() {
        return f64::INFINITY;
    }
    if !s.is_finite() || !a.is_finite() || !b.is_finite() {
        return s;
    }
    if two_sum_err(a, b, s) > 0.0 {
        up(s)
    } else {
        s
    }
}

pub fn sub_down(a: f64, b: f64) -> f64 {
    add_down(a, -b)
}

pub fn sub_up(a: f64, b: f64) -> f64 {
    add_up(a, -b)
}

pub fn mul_down(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if p.is_nan() {
        return f64::NEG_INFINITY;
    }
    if !p.is_finite() {
        return p;
    }
    let e = a.mul_add(b, -p);
    if e < 0.0 || (p == 0.0 && (a < 0.0) != (b < 0.0)) {
        down(p)
    } else {
        p
    }
}

pub fn mul_up(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if p.is_nan() {
        return f64::INFINITY;
    }
    if !p.is_finite() {
        return p;
    }
    let e = a.mul_add(b, -p);
    if e > 0.0 || (p == 0.0 && (a < 0.0) == (b < 0.0)) {
        up(p)
    } else {
        p
    }
}

fn div_exactness(a: f64, b: f64, q: f64) -> f64 {
    // sign of (a/b - q)
    let r = (-q).mul_add(b, a);
    if r == 0.0 {
        0.0
    } else if (r > 0.0) == (b > 0.0) {
        1.0
    } else {
        -1.0
    }
}

pub fn div_down(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let q = a / b;
    if q.is_nan() {
        return f64::NEG_INFINITY;
    }
    if !q.is_finite() || !a.is_finite() || !b.is_finite() {
        return q;
    }
    if q == 0.0 || div_exactness(a, b, q) < 0.0 {
        down(q)
    } else {
        q
    }
}

pub fn div_up(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let q = a / b;
    if q.is_nan() {
        return f64::INFINITY;
    }
    if !q.is_finite() || !a.is_finite() || !b.is_finite() {
        return q;
    }
    if q == 0.0 || div_exactness(a, b, q) > 0.0 {
        up(q)
    } else {
        q
    }
}

pub fn exp_down(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        down(x.exp()).max(0.0)
    }
}

pub fn exp_up(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x == f64::INFINITY {
        f64::INFINITY
    } else {
        up(x.exp())
    }
}

pub fn ln_down(x: f64) -> f64 {
    if x == 1.0 {
        0.0
    } else if x == 0.0 {
        f64::NEG_INFINITY
    } else if x == f64::INFINITY {
        f64::INFINITY
    } else {
        down(x.ln())
    }
}

pub fn ln_up(x: f64) -> f64 {
    if x == 1.0 {
        0.0
    } else if x == 0.0 {
        f64::NEG_INFINITY
    } else if x == f64::INFINITY {
        f64::INFINITY
    } else {
        up(x.ln())
    }
}

/// `x^k` for `x >= 0` and `k >= 1`, rounded down.
pub fn powi_nonneg_down(x: f64, k: u32) -> f64 {
    let mut acc = 1.0;
    let mut base = x;
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_down(acc, base);
        }
        e >>= 1;
        if e > 0 {
            base = mul_down(base, base);
        }
    }
    acc
}

/// `x^k` for `x >= 0` and `k >= 1`, rounded up.
pub fn powi_nonneg_up(x: f64, k: u32) -> f64 {
    let mut acc = 1.0;
    let mut base = x;
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_up(acc, base);
        }
        e >>= 1;
        if e > 0 {
            base = mul_up(base, base);
        }
    }
    acc
}

/// `x^e` for `x >= 0` and a non-integer exponent, rounded down.
pub fn powf_nonneg_down(x: f64, e: f64) -> f64 {
    if x == 0.0 || x == 1.0 || x.is_infinite() {
        return x.powf(e);
    }
    down(x.powf(e)).max(0.0)
}

pub fn powf_nonneg_up(x: f64, e: f64) -> f64 {
    if x == 0.0 || x == 1.0 || x.is_infinite() {
        return x.powf(e);
    }
    up(x.powf(e))
}

/// k-th root of `z >= 0` rounded down (`up == false`) or up.
pub fn root_nonneg(z: f64, k: u32, round_up: bool) -> f64 {
    if z == 0.0 || z == 1.0 || z.is_infinite() {
        return z;
    }
    let mut r = if k == 2 {
        z.sqrt()
    } else {
        z.powf(1.0 / k as f64)
    };
    for c in [r.next_down(), r.next_up()] {
        if powi_nonneg_down(c, k) == z && powi_nonneg_up(c, k) == z {
            r = c;
        }
    }
    let lo = powi_nonneg_down(r, k);
    let hi = powi_nonneg_up(r, k);
    if lo == z && hi == z {
        return r;
    }
    if round_up {
        if lo > z {
            r
        } else {
            up(up(r))
        }
    } else if hi < z {
        r
    } else {
        down(down(r)).max(0.0)
    }
}

pub fn widen_down(v: f64) -> f64 {
    down(v)
}

pub fn widen_up(v: f64) -> f64 {
    up(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_sums_are_not_widened() {
        assert_eq!(add_down(0.5, 0.25), 0.75);
        assert_eq!(add_up(0.5, 0.25), 0.75);
        assert_eq!(mul_down(3.0, -2.0), -6.0);
    }

    #[test]
    fn inexact_results_bracket_the_true_value() {
        let lo = add_down(0.1, 0.2);
        let hi = add_up(0.1, 0.2);
        assert!(lo < hi);
        assert!(lo <= 0.3 && 0.3 <= hi);
        let lo = div_down(1.0, 3.0);
        let hi = div_up(1.0, 3.0);
        assert!(lo < hi);
        assert!(lo * 3.0 <= 1.0 && hi * 3.0 >= 1.0);
    }

    #[test]
    fn roots_of_perfect_powers_are_exact() {
        assert_eq!(root_nonneg(4.0, 2, false), 2.0);
        assert_eq!(root_nonneg(4.0, 2, true), 2.0);
        assert_eq!(root_nonneg(27.0, 3, true), 3.0);
        let lo = root_nonneg(2.0, 2, false);
        let hi = root_nonneg(2.0, 2, true);
        assert!(lo * lo <= 2.0 && hi * hi >= 2.0);
    }
}
