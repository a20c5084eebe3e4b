/// Quadrature on the reference triangle in barycentric coordinates.
///
/// Weights are normalized to sum to one, so `area · Σ w_q f(x_q)` approximates
/// the integral over a physical triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    degree: u32,
}

impl QuadratureRule {
    /// Three interior points, weights 1/3, exact to degree 2.
    pub fn degree2() -> Self {
        let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
        Self {
            points: vec![[a, b, b], [b, a, b], [b, b, a]],
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
        }
    }

    /// Six-point symmetric rule exact to degree 4.
    pub fn degree4() -> Self {
        const A1: f64 = 0.445_948_490_915_964_886;
        const W1: f64 = 0.223_381_589_678_011_466;
        const A2: f64 = 0.091_576_213_509_770_743;
        const W2: f64 = 0.109_951_743_655_321_868;
        let (b1, b2) = (1.0 - 2.0 * A1, 1.0 - 2.0 * A2);
        Self {
            points: vec![
                [A1, A1, b1],
                [A1, b1, A1],
                [b1, A1, A1],
                [A2, A2, b2],
                [A2, b2, A2],
                [b2, A2, A2],
            ],
            weights: vec![W1, W1, W1, W2, W2, W2],
            degree: 4,
        }
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 3], f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::degree2()
    }
}
