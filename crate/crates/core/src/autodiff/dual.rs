use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use super::scalar::{lse_f64, softmax_weights, Scalar};

/// First-order dual number `value + eps·ε`, `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Dual {
    pub value: f64,
    pub eps: f64,
}

impl Dual {
    pub fn new(value: f64, eps: f64) -> Self {
        Dual { value, eps }
    }

    /// Variable seeded with unit tangent.
    pub fn var(value: f64) -> Self {
        Dual { value, eps: 1.0 }
    }

    #[inline]
    fn chain(self, f0: f64, f1: f64) -> Self {
        Dual {
            value: f0,
            eps: f1 * self.eps,
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.value + o.value, self.eps + o.eps)
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.value - o.value, self.eps - o.eps)
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.value * o.value, self.eps * o.value + self.value * o.eps)
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, o: Dual) -> Dual {
        let q = self.value / o.value;
        Dual::new(q, (self.eps - q * o.eps) / o.value)
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual::new(-self.value, -self.eps)
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, c: f64) -> Dual {
        Dual::new(self.value + c, self.eps)
    }
}

impl Sub<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, c: f64) -> Dual {
        Dual::new(self.value - c, self.eps)
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, c: f64) -> Dual {
        Dual::new(self.value * c, self.eps * c)
    }
}

impl Div<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, c: f64) -> Dual {
        Dual::new(self.value / c, self.eps / c)
    }
}

impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, o: Dual) {
        *self = *self + o;
    }
}

impl SubAssign for Dual {
    #[inline]
    fn sub_assign(&mut self, o: Dual) {
        *self = *self - o;
    }
}

impl MulAssign for Dual {
    #[inline]
    fn mul_assign(&mut self, o: Dual) {
        *self = *self * o;
    }
}

impl Scalar for Dual {
    #[inline]
    fn cst(v: f64) -> Self {
        Dual::new(v, 0.0)
    }

    #[inline]
    fn value(&self) -> f64 {
        self.value
    }

    #[inline]
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e)
    }

    #[inline]
    fn ln(self) -> Self {
        self.chain(self.value.ln(), 1.0 / self.value)
    }

    fn log_sum_exp(xs: &[Self]) -> Self {
        let lse = lse_f64(xs.iter().map(|x| x.value));
        if !lse.is_finite() {
            return Dual::cst(lse);
        }
        let values: Vec<f64> = xs.iter().map(|x| x.value).collect();
        let eps = softmax_weights(&values, lse)
            .zip(xs)
            .map(|(p, x)| p * x.eps)
            .sum();
        Dual::new(lse, eps)
    }
}

/// Second-order dual number carrying two first-order directions `u`, `v`
/// and their cross term: `value + du·εu + dv·εv + duv·εu·εv`.
///
/// Seeding `u = e_i` and `v = e_j` and reading `duv` yields `∂²f/∂x_i∂x_j`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Dual2 {
    pub value: f64,
    pub du: f64,
    pub dv: f64,
    pub duv: f64,
}

impl Dual2 {
    pub fn new(value: f64, du: f64, dv: f64, duv: f64) -> Self {
        Dual2 { value, du, dv, duv }
    }

    /// Unary chain rule from the value and first two derivatives of `f`.
    #[inline]
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        Dual2 {
            value: f0,
            du: f1 * self.du,
            dv: f1 * self.dv,
            duv: f1 * self.duv + f2 * self.du * self.dv,
        }
    }
}

impl Add for Dual2 {
    type Output = Dual2;
    #[inline]
    fn add(self, o: Dual2) -> Dual2 {
        Dual2::new(
            self.value + o.value,
            self.du + o.du,
            self.dv + o.dv,
            self.duv + o.duv,
        )
    }
}

impl Sub for Dual2 {
    type Output = Dual2;
    #[inline]
    fn sub(self, o: Dual2) -> Dual2 {
        Dual2::new(
            self.value - o.value,
            self.du - o.du,
            self.dv - o.dv,
            self.duv - o.duv,
        )
    }
}

impl Mul for Dual2 {
    type Output = Dual2;
    #[inline]
    fn mul(self, o: Dual2) -> Dual2 {
        Dual2::new(
            self.value * o.value,
            self.du * o.value + self.value * o.du,
            self.dv * o.value + self.value * o.dv,
            self.duv * o.value + self.du * o.dv + self.dv * o.du + self.value * o.duv,
        )
    }
}

impl Div for Dual2 {
    type Output = Dual2;
    #[inline]
    fn div(self, o: Dual2) -> Dual2 {
        // a = q·b, differentiated twice and solved for q's slots
        let q = self.value / o.value;
        let qu = (self.du - q * o.du) / o.value;
        let qv = (self.dv - q * o.dv) / o.value;
        let quv = (self.duv - qu * o.dv - qv * o.du - q * o.duv) / o.value;
        Dual2::new(q, qu, qv, quv)
    }
}

impl Neg for Dual2 {
    type Output = Dual2;
    #[inline]
    fn neg(self) -> Dual2 {
        Dual2::new(-self.value, -self.du, -self.dv, -self.duv)
    }
}

impl Add<f64> for Dual2 {
    type Output = Dual2;
    #[inline]
    fn add(self, c: f64) -> Dual2 {
        Dual2 {
            value: self.value + c,
            ..self
        }
    }
}

impl Sub<f64> for Dual2 {
    type Output = Dual2;
    #[inline]
    fn sub(self, c: f64) -> Dual2 {
        Dual2 {
            value: self.value - c,
            ..self
        }
    }
}

impl Mul<f64> for Dual2 {
    type Output = Dual2;
    #[inline]
    fn mul(self, c: f64) -> Dual2 {
        Dual2::new(self.value * c, self.du * c, self.dv * c, self.duv * c)
    }
}

impl Div<f64> for Dual2 {
    type Output = Dual2;
    #[inline]
    fn div(self, c: f64) -> Dual2 {
        Dual2::new(self.value / c, self.du / c, self.dv / c, self.duv / c)
    }
}

impl AddAssign for Dual2 {
    #[inline]
    fn add_assign(&mut self, o: Dual2) {
        *self = *self + o;
    }
}

impl SubAssign for Dual2 {
    #[inline]
    fn sub_assign(&mut self, o: Dual2) {
        *self = *self - o;
    }
}

impl MulAssign for Dual2 {
    #[inline]
    fn mul_assign(&mut self, o: Dual2) {
        *self = *self * o;
    }
}

impl Scalar for Dual2 {
    #[inline]
    fn cst(v: f64) -> Self {
        Dual2::new(v, 0.0, 0.0, 0.0)
    }

    #[inline]
    fn value(&self) -> f64 {
        self.value
    }

    #[inline]
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    #[inline]
    fn ln(self) -> Self {
        let r = 1.0 / self.value;
        self.chain(self.value.ln(), r, -r * r)
    }

    fn log_sum_exp(xs: &[Self]) -> Self {
        let lse = lse_f64(xs.iter().map(|x| x.value));
        if !lse.is_finite() {
            return Dual2::cst(lse);
        }
        let values: Vec<f64> = xs.iter().map(|x| x.value).collect();
        let (mut du, mut dv, mut acc) = (0.0, 0.0, 0.0);
        for (p, x) in softmax_weights(&values, lse).zip(xs) {
            du += p * x.du;
            dv += p * x.dv;
            acc += p * (x.duv + x.du * x.dv);
        }
        Dual2::new(lse, du, dv, acc - du * dv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d2(value: f64, du: f64, dv: f64) -> Dual2 {
        Dual2::new(value, du, dv, 0.0)
    }

    #[test]
    fn polynomial_second_derivatives() {
        // f(x, y) = x²y + 3xy², at (2, -1): f_x = 2xy + 3y² = -1, f_y = x² + 6xy = -8, f_xy = 2x + 6y = -2
        let x = d2(2.0, 1.0, 0.0);
        let y = d2(-1.0, 0.0, 1.0);
        let f = x * x * y + x * y * y * 3.0;
        assert_eq!(f.value, -4.0 + 6.0);
        assert_eq!(f.du, -1.0);
        assert_eq!(f.dv, -8.0);
        assert_eq!(f.duv, -2.0);
    }

    #[test]
    fn same_direction_gives_second_derivative() {
        // f(x) = x³ / (1 + x) at x = 1.5
        let x = Dual2::new(1.5, 1.0, 1.0, 0.0);
        let f = x * x * x / (x + 1.0);
        let g = |x: f64| x.powi(3) / (1.0 + x);
        let h = 1e-4;
        let fd1 = (g(1.5 + h) - g(1.5 - h)) / (2.0 * h);
        let fd2 = (g(1.5 + h) - 2.0 * g(1.5) + g(1.5 - h)) / (h * h);
        assert!((f.du - fd1).abs() < 1e-7);
        assert!((f.duv - fd2).abs() < 1e-5);
    }

    #[test]
    fn exp_ln_roundtrip() {
        let x = Dual2::new(0.7, 1.0, 1.0, 0.0);
        let y = x.exp().ln();
        assert!((y.value - 0.7).abs() < 1e-15);
        assert!((y.du - 1.0).abs() < 1e-15);
        assert!(y.duv.abs() < 1e-15);
    }

    #[test]
    fn log_sum_exp_matches_composed_form() {
        let a = Dual2::new(0.3, 1.0, 0.5, 0.0);
        let b = Dual2::new(-1.2, -0.4, 2.0, 0.1);
        let c = Dual2::new(2.0, 0.0, 1.0, -0.3);
        let prim = Dual2::log_sum_exp(&[a, b, c]);
        let composed = (a.exp() + b.exp() + c.exp()).ln();
        assert!((prim.value - composed.value).abs() < 1e-14);
        assert!((prim.du - composed.du).abs() < 1e-14);
        assert!((prim.dv - composed.dv).abs() < 1e-14);
        assert!((prim.duv - composed.duv).abs() < 1e-13);
    }

    #[test]
    fn constants_have_zero_derivatives() {
        let c = Dual2::cst(4.2);
        let f = (c * c).exp().ln() + 1.0;
        assert_eq!((f.du, f.dv, f.duv), (0.0, 0.0, 0.0));
        let d = Dual::cst(4.2).exp();
        assert_eq!(d.eps, 0.0);
    }

    #[test]
    fn lse_of_empty_or_neg_infinite() {
        let all_neg = [Dual2::cst(f64::NEG_INFINITY); 2];
        assert_eq!(Dual2::log_sum_exp(&all_neg).value, f64::NEG_INFINITY);
        assert_eq!(f64::log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((800.0f64.softplus() - 800.0).abs() < 1e-12);
        assert!((-800.0f64).softplus() >= 0.0);
        let x = Dual::var(0.3);
        let s = x.softplus();
        assert!((s.eps - 1.0 / (1.0 + (-0.3f64).exp())).abs() < 1e-15);
    }
}
