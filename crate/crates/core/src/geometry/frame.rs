use super::curve::MarkerCurve;
use super::point::Vec2;
use super::GeometryError;
use crate::scalar::Scalar;

/// Differential quantities at the markers of one curve.
///
/// `ds` is the arclength weight per node (trapezoid rule in the node
/// parameter), `normal` points out of the enclosed region and `kappa` is
/// positive on a circle bounding a disk.
#[derive(Clone, Debug)]
pub struct CurveFrame<T = f64> {
    pub ds: Vec<T>,
    pub tangent: Vec<Vec2<T>>,
    pub normal: Vec<Vec2<T>>,
    pub kappa: Vec<T>,
}

impl<T: Scalar> CurveFrame<T> {
    pub fn build(curve: &MarkerCurve<T>) -> Result<Self, GeometryError> {
        let (d1, d2) = curve.param_derivatives();
        let n = curve.len();
        let mut ds = Vec::with_capacity(n);
        let mut tangent = Vec::with_capacity(n);
        let mut normal = Vec::with_capacity(n);
        let mut kappa = Vec::with_capacity(n);
        let min = T::lit(super::curve::MIN_SEGMENT);
        for i in 0..n {
            let speed = d1[i].norm();
            if speed < min {
                return Err(GeometryError::DegenerateCurve { index: i });
            }
            let t = d1[i] / speed;
            ds.push(speed);
            tangent.push(t);
            normal.push(t.rot_cw());
            kappa.push(d1[i].cross(d2[i]) / (speed * speed * speed));
        }
        Ok(Self {
            ds,
            tangent,
            normal,
            kappa,
        })
    }

    pub fn len(&self) -> usize {
        self.ds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ds.is_empty()
    }

    pub fn length(&self) -> T {
        self.ds.iter().copied().sum()
    }

    pub fn min_ds(&self) -> T {
        self.ds.iter().copied().fold(T::infinity(), T::min)
    }

    /// Quadrature of a nodal function against arclength.
    pub fn integrate(&self, f: &[T]) -> T {
        self.ds.iter().zip(f).map(|(&w, &v)| w * v).sum()
    }

    /// `∫ κ ds`, equal to `2π` times the turning number.
    pub fn total_curvature(&self) -> T {
        self.integrate(&self.kappa)
    }
}
