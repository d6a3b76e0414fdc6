use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// A radial function sampled on `[0, R]` with derivative samples, extended
/// beyond `R` by the tail model `f(R) (r/R)^tail_power e^{tail_rate (r-R)}`.
///
/// Evaluation between nodes is cubic Hermite; negative arguments use the even
/// extension `f(-r) = f(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    nodes: Vec<f64>,
    values: Vec<f64>,
    dvalues: Vec<f64>,
    tail_rate: f64,
    tail_power: f64,
}

impl RadialProfile {
    pub fn new(
        nodes: Vec<f64>,
        values: Vec<f64>,
        mut dvalues: Vec<f64>,
        tail_rate: f64,
        tail_power: f64,
    ) -> Result<Self> {
        if nodes.len() < 2 || values.len() != nodes.len() || dvalues.len() != nodes.len() {
            return Err(Error::InvalidInput(format!(
                "profile needs >= 2 nodes with matching samples (nodes {}, values {}, dvalues {})",
                nodes.len(),
                values.len(),
                dvalues.len()
            )));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidInput("first radial node must be 0".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("radial nodes must be strictly increasing".into()));
        }
        if values.iter().chain(&dvalues).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("profile samples must be finite".into()));
        }
        dvalues[0] = 0.0;
        Ok(Self { nodes, values, dvalues, tail_rate, tail_power })
    }

    /// Uniform grid `r_i = i h`, `i = 0..=round(radius/h)`.
    pub fn uniform_nodes(radius: f64, h: f64) -> Vec<f64> {
        let n = (radius / h).round() as usize;
        (0..=n).map(|i| i as f64 * h).collect()
    }

    /// Samples `f` and `f'` given in closed form.
    pub fn from_fn<F, D>(nodes: Vec<f64>, f: F, df: D, tail_rate: f64, tail_power: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64,
        D: Fn(f64) -> f64,
    {
        let values = nodes.iter().map(|&r| f(r)).collect();
        let dvalues = nodes.iter().map(|&r| df(r)).collect();
        Self::new(nodes, values, dvalues, tail_rate, tail_power)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dvalues(&self) -> &[f64] {
        &self.dvalues
    }

    pub fn tail_rate(&self) -> f64 {
        self.tail_rate
    }

    pub fn tail_power(&self) -> f64 {
        self.tail_power
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn radius(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Grid spacing if the nodes are uniform to rounding.
    pub fn uniform_step(&self) -> Option<f64> {
        let h = self.nodes[1] - self.nodes[0];
        let uniform = self
            .nodes
            .iter()
            .enumerate()
            .all(|(i, &r)| (r - i as f64 * h).abs() <= 1e-9 * h.max(r));
        uniform.then_some(h)
    }

    fn locate(&self, r: f64) -> usize {
        match self.nodes.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(self.nodes.len() - 2),
            Err(i) => (i - 1).min(self.nodes.len() - 2),
        }
    }

    fn hermite(&self, r: f64) -> (f64, f64) {
        let i = self.locate(r);
        let (r0, r1) = (self.nodes[i], self.nodes[i + 1]);
        let h = r1 - r0;
        let t = (r - r0) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.dvalues[i] * h, self.dvalues[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let deriv = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        (value, deriv)
    }

    fn tail(&self, r: f64) -> (f64, f64) {
        let big_r = self.radius();
        let f_r = *self.values.last().unwrap();
        let value = f_r * (r / big_r).powf(self.tail_power) * (self.tail_rate * (r - big_r)).exp();
        (value, value * (self.tail_power / r + self.tail_rate))
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= self.radius() {
            self.hermite(r).0
        } else {
            self.tail(r).0
        }
    }

    /// Radial derivative; odd in `r`.
    pub fn eval_deriv(&self, r: f64) -> f64 {
        let s = r.signum();
        let r = r.abs();
        let d = if r <= self.radius() { self.hermite(r).1 } else { self.tail(r).1 };
        s * d
    }

    /// `∫_{R^N} f g dx` for radial `f` (this profile) and `g` (given at the
    /// same nodes) by composite Simpson on `[0, R]` plus the tail integral of
    /// the product of the two exponential tail models.
    pub fn radial_inner(&self, other: &RadialProfile, dim: usize) -> f64 {
        assert_eq!(self.len(), other.len(), "profiles must share a grid");
        let h = self.uniform_step().expect("radial quadrature needs a uniform grid");
        let integrand: Vec<f64> = self
            .nodes
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(&r, (f, g))| r.powi(dim as i32 - 1) * f * g)
            .collect();
        let big_r = self.radius();
        let rate = self.tail_rate + other.tail_rate;
        let tail = if rate < 0.0 {
            // leading term of ∫_R^∞ r^{N-1+a+b} e^{rate (r-R)} dr
            let power = dim as f64 - 1.0 + self.tail_power + other.tail_power;
            let f_r = self.values.last().unwrap() * other.values.last().unwrap()
                * big_r.powi(dim as i32 - 1);
            f_r / (-rate) * (1.0 + power / (-rate * big_r))
        } else {
            0.0
        };
        quad::sphere_area(dim) * (quad::simpson(&integrand, h) + tail)
    }
}

/// Sixth-order central first and second differences of uniformly sampled
/// even data at node `i`, reflecting through `r = 0` when needed.
pub(crate) fn central_derivatives6(values: &[f64], h: f64, i: usize) -> (f64, f64) {
    let at = |k: isize| values[(i as isize + k).unsigned_abs()];
    let d1 = (-at(-3) + 9.0 * at(-2) - 45.0 * at(-1) + 45.0 * at(1) - 9.0 * at(2) + at(3)) / (60.0 * h);
    let d2 = (2.0 * at(-3) - 27.0 * at(-2) + 270.0 * at(-1) - 490.0 * at(0) + 270.0 * at(1)
        - 27.0 * at(2)
        + 2.0 * at(3))
        / (180.0 * h * h);
    (d1, d2)
}

impl RadialProfile {
    /// Max over interior nodes of `|-f'' - (N-1) f'/r + reaction(i, r, f)|`,
    /// with `f''` from sixth-order differences of the values and `f'` from the
    /// derivative samples.
    pub fn max_radial_residual<G>(&self, dim: usize, reaction: G) -> f64
    where
        G: Fn(usize, f64, f64) -> f64,
    {
        let h = self.uniform_step().expect("residual check needs a uniform grid");
        let n = self.len();
        (1..n.saturating_sub(3))
            .map(|i| {
                let r = self.nodes[i];
                let (_, d2) = central_derivatives6(&self.values, h, i);
                (-d2 - (dim as f64 - 1.0) * self.dvalues[i] / r + reaction(i, r, self.values[i])).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaussian() -> RadialProfile {
        let nodes = RadialProfile::uniform_nodes(6.0, 0.01);
        RadialProfile::from_fn(nodes, |r| (-r * r).exp(), |r| -2.0 * r * (-r * r).exp(), -1.0, 0.0)
            .unwrap()
    }

    #[test]
    fn hermite_interpolation_is_accurate_and_even() {
        let g = gaussian();
        for &r in &[0.0031, 0.5555, 1.23456, 2.9] {
            assert_relative_eq!(g.eval(r), (-r * r).exp(), epsilon = 1e-9);
            assert_relative_eq!(g.eval(-r), g.eval(r));
            assert_relative_eq!(g.eval_deriv(r), -2.0 * r * (-r * r).exp(), epsilon = 1e-6);
            assert_relative_eq!(g.eval_deriv(-r), -g.eval_deriv(r));
        }
    }

    #[test]
    fn tail_model_beyond_last_node() {
        let nodes = RadialProfile::uniform_nodes(10.0, 0.5);
        let p = RadialProfile::from_fn(nodes, |r| (-r).exp(), |r| -(-r).exp(), -1.0, 0.0).unwrap();
        assert_relative_eq!(p.eval(13.0), (-13.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(p.eval_deriv(13.0), -(-13.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(RadialProfile::new(vec![0.1, 0.2], vec![1.0, 1.0], vec![0.0, 0.0], -1.0, 0.0).is_err());
        assert!(RadialProfile::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 0.0], -1.0, 0.0).is_err());
        assert!(RadialProfile::new(vec![0.0, 1.0], vec![1.0], vec![0.0, 0.0], -1.0, 0.0).is_err());
    }

    #[test]
    fn derivative_at_origin_forced_to_zero() {
        let p = RadialProfile::new(vec![0.0, 1.0], vec![1.0, 0.5], vec![0.3, -0.5], -1.0, 0.0).unwrap();
        assert_eq!(p.dvalues()[0], 0.0);
    }

    #[test]
    fn radial_inner_in_three_dimensions() {
        let g = gaussian();
        // ∫_{R^3} e^{-2|x|²} dx = (π/2)^{3/2}
        let expected = (std::f64::consts::PI / 2.0).powf(1.5);
        assert_relative_eq!(g.radial_inner(&g, 3), expected, max_relative = 1e-10);
    }
}
