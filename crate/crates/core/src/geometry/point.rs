use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Plain 2-vector in the covering plane R².
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2<T = f64> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Vec2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm2(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    /// Rotation by 90° clockwise: maps the unit tangent to the outward normal.
    #[inline]
    pub fn rot_cw(self) -> Self {
        Self::new(self.y, -self.x)
    }

    /// Rotation by 90° counter-clockwise.
    #[inline]
    pub fn rot_ccw(self) -> Self {
        Self::new(-self.y, self.x)
    }

    #[inline]
    pub fn normalized(self) -> Self {
        self / self.norm()
    }

    #[inline]
    pub fn from_winding(w: [i32; 2]) -> Self {
        Self::new(T::lit(w[0] as f64), T::lit(w[1] as f64))
    }

    pub fn cast<U: Scalar>(self) -> Vec2<U> {
        Vec2::new(U::lit(self.x.to_f64_lossy()), U::lit(self.y.to_f64_lossy()))
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> AddAssign for Vec2<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.x = self.x + o.x;
        self.y = self.y + o.y;
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> SubAssign for Vec2<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        self.x = self.x - o.x;
        self.y = self.y - o.y;
    }
}

impl<T: Scalar> Mul<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: Scalar> Div<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s)
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Reduces a coordinate to the canonical representative in `[0, 1)`.
#[inline]
pub fn canon_coord<T: Scalar>(x: T) -> T {
    let r = x - x.floor();
    // `x - floor(x)` can round up to exactly 1 for tiny negative inputs.
    if r >= T::one() {
        T::zero()
    } else {
        r
    }
}

/// Reduces a displacement component to `[-1/2, 1/2)`.
#[inline]
pub fn wrap_coord<T: Scalar>(d: T) -> T {
    let half = T::lit(0.5);
    let r = d - (d + half).floor();
    if r >= half {
        r - T::one()
    } else {
        r
    }
}

/// A point of the unit flat torus `R²/Z²`, stored by its canonical
/// representative in `[0,1)²`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint<T = f64> {
    pub x1: T,
    pub x2: T,
}

impl<T: Scalar> TorusPoint<T> {
    /// Builds a point from arbitrary real coordinates, canonicalizing them.
    pub fn new(x1: T, x2: T) -> Self {
        Self {
            x1: canon_coord(x1),
            x2: canon_coord(x2),
        }
    }

    pub fn from_lift(v: Vec2<T>) -> Self {
        Self::new(v.x, v.y)
    }

    pub fn canon(self) -> Self {
        Self::new(self.x1, self.x2)
    }

    pub fn as_vec(self) -> Vec2<T> {
        Vec2::new(self.x1, self.x2)
    }

    pub fn translate(self, d: Vec2<T>) -> Self {
        Self::new(self.x1 + d.x, self.x2 + d.y)
    }
}

/// Representative of `p - q` with both components in `[-1/2, 1/2)`.
#[inline]
pub fn wrap_diff<T: Scalar>(p: TorusPoint<T>, q: TorusPoint<T>) -> Vec2<T> {
    wrap_vec(Vec2::new(p.x1 - q.x1, p.x2 - q.x2))
}

/// Wrapped version of a displacement between lifted points.
#[inline]
pub fn wrap_vec<T: Scalar>(d: Vec2<T>) -> Vec2<T> {
    Vec2::new(wrap_coord(d.x), wrap_coord(d.y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Vec2, b: Vec2) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn wrap_diff_examples() {
        let d = wrap_diff(TorusPoint::new(0.95, 0.5), TorusPoint::new(0.05, 0.5));
        assert!(close(d, Vec2::new(-0.10, 0.0)), "{d:?}");
        let p = TorusPoint::new(0.3, 0.7);
        assert_eq!(wrap_diff(p, p), Vec2::new(0.0, 0.0));
        let d = wrap_diff(TorusPoint::new(0.3, 0.3), TorusPoint::new(0.1, 0.1));
        assert!(close(d, Vec2::new(0.2, 0.2)));
    }

    #[test]
    fn works_in_single_precision() {
        let d = wrap_diff(
            TorusPoint::<f32>::new(0.95, 0.5),
            TorusPoint::new(0.05, 0.5),
        );
        assert!((d.x + 0.1).abs() < 1e-6 && d.y.abs() < 1e-7);
        let c = canon_coord(-1e-9f32);
        assert!((0.0..1.0).contains(&c));
    }

    #[test]
    fn canonical_rounding_edge() {
        let x = canon_coord(-1e-18f64);
        assert!((0.0..1.0).contains(&x));
    }

    proptest! {
        #[test]
        fn canonicalization_is_idempotent(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let p = TorusPoint::new(a, b);
            prop_assert_eq!(p.canon(), p);
            prop_assert!((0.0..1.0).contains(&p.x1) && (0.0..1.0).contains(&p.x2));
        }

        #[test]
        fn wrapped_difference_in_half_open_box(a in -5.0f64..5.0, b in -5.0f64..5.0,
                                              c in -5.0f64..5.0, d in -5.0f64..5.0) {
            let w = wrap_diff(TorusPoint::new(a, b), TorusPoint::new(c, d));
            prop_assert!(w.x >= -0.5 && w.x < 0.5);
            prop_assert!(w.y >= -0.5 && w.y < 0.5);
            // p - q and the wrapped value differ by an integer vector
            let rx = (a - c) - w.x;
            let ry = (b - d) - w.y;
            prop_assert!((rx - rx.round()).abs() < 1e-9 && (ry - ry.round()).abs() < 1e-9);
        }
    }
}
