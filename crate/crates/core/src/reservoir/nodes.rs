use super::geometry::NodeGeometry;
use super::laser::Trajectory;
use super::{ReservoirError, ReservoirResponse};

/// Streaming node averager: collects the first `k` nodes of every loop.
pub(crate) struct NodeAccumulator {
    steps_per_node: usize,
    stride: usize,
    n_total: usize,
    k: usize,
    acc: f64,
    values: Vec<f64>,
}

impl NodeAccumulator {
    pub(crate) fn new(geom: &NodeGeometry, avg_factor: Option<usize>, bits: usize) -> Result<Self, ReservoirError> {
        let spn = geom.steps_per_node();
        let a = avg_factor.unwrap_or(spn);
        if a == 0 || a > spn || spn % a != 0 {
            return Err(ReservoirError::Geometry(format!(
                "averaging {a} sub-samples does not divide {spn} steps per node"
            )));
        }
        Ok(Self {
            steps_per_node: spn,
            stride: spn / a,
            n_total: geom.n_total(),
            k: geom.k_nodes,
            acc: 0.0,
            values: Vec::with_capacity(bits * geom.k_nodes),
        })
    }

    pub(crate) fn push(&mut self, step: usize, power: f64) {
        let node = (step / self.steps_per_node) % self.n_total;
        if node >= self.k {
            return;
        }
        let sub = step % self.steps_per_node;
        if sub % self.stride == 0 {
            self.acc += power;
        }
        if sub + 1 == self.steps_per_node {
            self.values.push(self.acc / (self.steps_per_node / self.stride) as f64);
            self.acc = 0.0;
        }
    }

    pub(crate) fn finish(self, bits: usize) -> Result<ReservoirResponse, ReservoirError> {
        let expected = bits * self.k;
        if self.values.len() < expected {
            return Err(ReservoirError::ShortTrajectory {
                expected,
                found: self.values.len(),
            });
        }
        let mut values = self.values;
        values.truncate(expected);
        Ok(ReservoirResponse::from_row_major(bits, self.k, values))
    }
}

/// Node value = mean of `avg_factor` evenly spaced step samples in each θ
/// window (all of them by default); only nodes `0..k` of each loop are kept.
pub fn sample_nodes(
    traj: &Trajectory,
    geom: &NodeGeometry,
    avg_factor: Option<usize>,
    bits: usize,
) -> Result<ReservoirResponse, ReservoirError> {
    let needed = bits * geom.steps_per_tau();
    if traj.power.len() < needed {
        return Err(ReservoirError::ShortTrajectory {
            expected: needed,
            found: traj.power.len(),
        });
    }
    let mut acc = NodeAccumulator::new(geom, avg_factor, bits)?;
    for (step, &p) in traj.power[..needed].iter().enumerate() {
        acc.push(step, p);
    }
    acc.finish(bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_trajectory() {
        let g = NodeGeometry::short();
        let t = Trajectory {
            power: vec![2.5; 3 * g.steps_per_tau()],
            dt_ns: g.dt_ns(),
        };
        let r = sample_nodes(&t, &g, None, 3).unwrap();
        assert_eq!((r.rows(), r.cols()), (3, 32));
        assert!(r.values().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn experimental_rows_have_66_nodes() {
        let g = NodeGeometry::experimental();
        let t = Trajectory {
            power: vec![1.0; g.steps_per_tau()],
            dt_ns: g.dt_ns(),
        };
        assert_eq!(sample_nodes(&t, &g, None, 1).unwrap().cols(), 66);
    }

    #[test]
    fn four_subsamples_match_direct_mean() {
        let g = NodeGeometry {
            dt_ps: 12.5,
            ..NodeGeometry::short()
        };
        let steps = 2 * g.steps_per_tau();
        let power: Vec<f64> = (0..steps).map(|i| ((i * 7919) % 101) as f64 * 0.37).collect();
        let t = Trajectory {
            power: power.clone(),
            dt_ns: g.dt_ns(),
        };
        let r = sample_nodes(&t, &g, Some(4), 2).unwrap();
        for bit in 0..2 {
            for node in 0..32 {
                let start = bit * g.steps_per_tau() + node * 4;
                let mean = power[start..start + 4].iter().sum::<f64>() / 4.0;
                assert_eq!(r.row(bit)[node], mean);
            }
        }
    }

    #[test]
    fn short_trajectory_rejected() {
        let g = NodeGeometry::short();
        let t = Trajectory {
            power: vec![0.0; 10],
            dt_ns: g.dt_ns(),
        };
        assert!(matches!(
            sample_nodes(&t, &g, None, 1),
            Err(ReservoirError::ShortTrajectory { .. })
        ));
    }
}
