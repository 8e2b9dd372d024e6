//! Second-order jets of scalar fields.

/// Value, gradient and (optionally) Hessian of a scalar field at one point.
///
/// The Hessian is stored row-major as a `dim × dim` block; it is empty when
/// only first derivatives were requested.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarJet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl ScalarJet {
    /// A constant field in `dim` coordinates.
    pub fn constant(value: f64, dim: usize) -> Self {
        Self {
            value,
            grad: vec![0.0; dim],
            hess: vec![0.0; dim * dim],
        }
    }

    /// Drops the Hessian unless `order >= 2`.
    pub fn truncated(mut self, order: usize) -> Self {
        if order < 2 {
            self.hess.clear();
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn has_hessian(&self) -> bool {
        !self.hess.is_empty()
    }

    /// Sum of the Hessian diagonal.
    pub fn laplacian(&self) -> f64 {
        let d = self.dim();
        (0..d).map(|i| self.hess[i * d + i]).sum()
    }

    /// Jet of the pointwise product `self · other` (Leibniz rule).
    pub fn product(&self, other: &ScalarJet) -> ScalarJet {
        let d = self.dim();
        debug_assert_eq!(d, other.dim());
        let value = self.value * other.value;
        let grad = (0..d)
            .map(|i| self.value * other.grad[i] + other.value * self.grad[i])
            .collect();
        let hess = if self.has_hessian() && other.has_hessian() {
            let mut h = vec![0.0; d * d];
            for i in 0..d {
                for j in i..d {
                    let v = self.value * other.hess[i * d + j]
                        + other.value * self.hess[i * d + j]
                        + self.grad[i] * other.grad[j]
                        + self.grad[j] * other.grad[i];
                    h[i * d + j] = v;
                    h[j * d + i] = v;
                }
            }
            h
        } else {
            Vec::new()
        };
        ScalarJet { value, grad, hess }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_on_polynomials() {
        // f = x·y, g = x + 2y at (1, 2)
        let f = ScalarJet {
            value: 2.0,
            grad: vec![2.0, 1.0],
            hess: vec![0.0, 1.0, 1.0, 0.0],
        };
        let g = ScalarJet {
            value: 5.0,
            grad: vec![1.0, 2.0],
            hess: vec![0.0; 4],
        };
        // f·g = x²y + 2xy²: grad = (2xy + 2y², x² + 4xy) = (12, 9)
        // hess = [[2y, 2x + 4y], [2x + 4y, 4x]] = [[4, 10], [10, 4]]
        let p = f.product(&g);
        assert_eq!(p.value, 10.0);
        assert_eq!(p.grad, vec![12.0, 9.0]);
        assert_eq!(p.hess, vec![4.0, 10.0, 10.0, 4.0]);
        assert_eq!(p.laplacian(), 8.0);
    }
}
