/// Fixed product grid over the standard normal trait prior.
///
/// Each dimension uses equally spaced points on `[−4, 4]` with weights
/// proportional to the normal density, normalised to sum to one. The two
/// end points carry half weight (composite trapezoid rule), which keeps the
/// truncation at ±4 from biasing the integral.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    dims: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
}

pub const GRID_HALF_WIDTH: f64 = 4.0;

impl QuadratureGrid {
    pub fn new(dims: usize, points_per_dim: usize) -> Self {
        assert!(dims >= 1 && points_per_dim >= 2);
        let step = 2.0 * GRID_HALF_WIDTH / (points_per_dim - 1) as f64;
        let axis: Vec<f64> = (0..points_per_dim).map(|i| -GRID_HALF_WIDTH + step * i as f64).collect();
        let last = points_per_dim - 1;
        let axis_log_density: Vec<f64> = axis
            .iter()
            .enumerate()
            .map(|(i, x)| -0.5 * x * x + if i == 0 || i == last { -std::f64::consts::LN_2 } else { 0.0 })
            .collect();

        let n_nodes = points_per_dim.pow(dims as u32);
        let mut nodes = Vec::with_capacity(n_nodes * dims);
        let mut log_w = Vec::with_capacity(n_nodes);
        for q in 0..n_nodes {
            let mut rem = q;
            let mut lw = 0.0;
            // first dimension varies slowest
            let mut coords = vec![0.0; dims];
            for k in (0..dims).rev() {
                let i = rem % points_per_dim;
                rem /= points_per_dim;
                coords[k] = axis[i];
                lw += axis_log_density[i];
            }
            nodes.extend_from_slice(&coords);
            log_w.push(lw);
        }
        let log_norm = crate::stats::log_sum_exp(&log_w);
        let log_weights: Vec<f64> = log_w.iter().map(|l| l - log_norm).collect();
        let weights = log_weights.iter().map(|l| l.exp()).collect();
        QuadratureGrid { dims, nodes, weights, log_weights }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, q: usize) -> &[f64] {
        &self.nodes[q * self.dims..(q + 1) * self.dims]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        assert_eq!(QuadratureGrid::new(1, 21).len(), 21);
        assert_eq!(QuadratureGrid::new(2, 11).len(), 121);
        assert_eq!(QuadratureGrid::new(3, 7).len(), 343);
    }

    #[test]
    fn moments_match_standard_normal() {
        for (dims, p) in [(1, 21), (2, 11), (3, 7)] {
            let g = QuadratureGrid::new(dims, p);
            assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for k in 0..dims {
                let m: f64 = (0..g.len()).map(|q| g.weights()[q] * g.node(q)[k]).sum();
                let v: f64 = (0..g.len()).map(|q| g.weights()[q] * g.node(q)[k].powi(2)).sum();
                assert!(m.abs() < 1e-12);
                assert!((v - 1.0).abs() < 0.01, "dims {dims} var {v}");
            }
        }
    }

    #[test]
    fn node_span() {
        let g = QuadratureGrid::new(2, 11);
        assert_eq!(g.node(0), &[-4.0, -4.0]);
        assert_eq!(g.node(1), &[-4.0, -3.2]);
        assert_eq!(g.node(120), &[4.0, 4.0]);
    }
}
