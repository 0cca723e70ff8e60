//! Synthetic clustered-sparse tensors and NMSE evaluation.

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Field, Scalar};
use crate::seed;
use crate::tensor::{Shape, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Amplitude {
    /// Unit magnitude with a random sign (real) or phase (complex).
    Unit,
    /// Standard normal in the tensor's field.
    ComplexGaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub dims: Shape,
    #[serde(default = "default_field")]
    pub field: Field,
    pub num_clusters: usize,
    /// Chebyshev radius of each cluster ball.
    pub cluster_radius: usize,
    /// Target number of nonzeros.
    pub sparsity: usize,
    pub amplitude: Amplitude,
    #[serde(default)]
    pub seed: u64,
}

fn default_field() -> Field {
    Field::Real
}

impl ClusterSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.dims.size();
        if self.num_clusters == 0 || self.sparsity == 0 {
            return Err(Error::Config("num_clusters and sparsity must be positive".into()));
        }
        if self.sparsity > n / 4 {
            return Err(Error::Config(format!(
                "sparsity {} exceeds n / 4 = {}",
                self.sparsity,
                n / 4
            )));
        }
        let width = 2 * self.cluster_radius + 1;
        if self.dims.dims().iter().any(|&d| d < width) {
            return Err(Error::Config(format!(
                "cluster radius {} does not fit shape {}",
                self.cluster_radius, self.dims
            )));
        }
        let ball = (width as u128).saturating_pow(self.dims.order() as u32);
        if (self.num_clusters as u128).saturating_mul(ball) < self.sparsity as u128 {
            return Err(Error::Config(format!(
                "{} clusters of radius {} cannot hold {} nonzeros",
                self.num_clusters, self.cluster_radius, self.sparsity
            )));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ClusterSpec { seed, ..self.clone() }
    }
}

/// Draws a clustered-sparse tensor with exactly `sparsity` nonzeros when feasible.
///
/// Cluster centres are drawn among unoccupied cells. Each cluster then grows as
/// a connected set (under the `3^d - 1` neighbourhood) inside its Chebyshev ball,
/// round-robin across clusters, until the target count is reached.
pub fn generate_clustered<T: Scalar>(spec: &ClusterSpec) -> Result<Tensor<T>> {
    spec.validate()?;
    if spec.field != T::FIELD {
        return Err(Error::Config(format!("spec asks for {:?} entries", spec.field)));
    }
    let shape = &spec.dims;
    let dims = shape.dims();
    let strides = shape.strides();
    let n = shape.size();
    let radius = spec.cluster_radius as isize;
    let mut rng = seed::rng(spec.seed);
    let mut occupied = vec![false; n];
    let mut count = 0usize;

    let decode = |flat: usize| -> Vec<isize> {
        let mut rest = flat;
        strides
            .iter()
            .map(|s| {
                let v = rest / s;
                rest %= s;
                v as isize
            })
            .collect()
    };
    let neighbours = |flat: usize| -> Vec<usize> {
        let c = decode(flat);
        let mut out = Vec::new();
        for off in Shape::new(vec![3; dims.len()]).unwrap().indices() {
            let mut t = 0usize;
            let mut ok = true;
            let mut zero = true;
            for axis in 0..dims.len() {
                let o = off[axis] as isize - 1;
                zero &= o == 0;
                let p = c[axis] + o;
                if p < 0 || p >= dims[axis] as isize {
                    ok = false;
                    break;
                }
                t += p as usize * strides[axis];
            }
            if ok && !zero {
                out.push(t);
            }
        }
        out
    };

    struct Cluster {
        center: Vec<isize>,
        members: Vec<usize>,
        quota: usize,
    }
    // Centres keep their whole ball inside the tensor while such a cell is free.
    let interior = |flat: usize| -> bool {
        decode(flat)
            .iter()
            .zip(dims)
            .all(|(&p, &d)| p >= radius && p + radius < d as isize)
    };
    let open_cluster = |occupied: &mut Vec<bool>, rng: &mut rand_chacha::ChaCha8Rng, quota: usize| {
        let free: Vec<usize> = (0..n).filter(|&i| !occupied[i]).collect();
        let inner: Vec<usize> = free.iter().copied().filter(|&i| interior(i)).collect();
        let pool = if inner.is_empty() { &free } else { &inner };
        let &start = pool.choose(rng)?;
        occupied[start] = true;
        Some(Cluster {
            center: decode(start),
            members: vec![start],
            quota: quota - 1,
        })
    };

    let mut clusters: Vec<Cluster> = Vec::new();
    let base = spec.sparsity / spec.num_clusters;
    let extra = spec.sparsity % spec.num_clusters;
    for c in 0..spec.num_clusters {
        let quota = base + usize::from(c < extra);
        if quota == 0 {
            continue;
        }
        let Some(cl) = open_cluster(&mut occupied, &mut rng, quota) else {
            break;
        };
        count += 1;
        clusters.push(cl);
    }

    let in_ball = |center: &[isize], flat: usize| -> bool {
        decode(flat).iter().zip(center).all(|(p, c)| (p - c).abs() <= radius)
    };

    // Round-robin growth; quota a cluster cannot place moves to the others, and
    // when every cluster is boxed in a new one is opened.
    let mut carry = 0usize;
    while count < spec.sparsity {
        let mut progressed = false;
        for ci in 0..clusters.len() {
            if count >= spec.sparsity {
                break;
            }
            let cl = &clusters[ci];
            if cl.quota == 0 && carry == 0 {
                continue;
            }
            let mut frontier: Vec<usize> = cl
                .members
                .iter()
                .flat_map(|&m| neighbours(m))
                .filter(|&t| !occupied[t] && in_ball(&cl.center, t))
                .collect();
            frontier.sort_unstable();
            frontier.dedup();
            let cl = &mut clusters[ci];
            match frontier.choose(&mut rng) {
                Some(&t) => {
                    occupied[t] = true;
                    count += 1;
                    cl.members.push(t);
                    if cl.quota > 0 {
                        cl.quota -= 1;
                    } else {
                        carry -= 1;
                    }
                    progressed = true;
                }
                None => {
                    carry += cl.quota;
                    cl.quota = 0;
                }
            }
        }
        if !progressed && count < spec.sparsity {
            let Some(cl) = open_cluster(&mut occupied, &mut rng, carry) else {
                break;
            };
            log::debug!("opening an extra cluster for {carry} entries");
            count += 1;
            carry -= 1;
            clusters.push(cl);
        }
    }

    let mut data = vec![T::zero(); n];
    for (i, slot) in data.iter_mut().enumerate() {
        if occupied[i] {
            *slot = loop {
                let v = match spec.amplitude {
                    Amplitude::Unit => T::random_unit(&mut rng),
                    Amplitude::ComplexGaussian => T::standard_normal(&mut rng),
                };
                if v != T::zero() {
                    break v;
                }
            };
        }
    }
    Tensor::from_vec(shape.clone(), data)
}

/// Ratio of mean squared error energy to mean signal energy over trials.
pub fn nmse<T: Scalar>(pairs: &[(Tensor<T>, Tensor<T>)]) -> Result<f64> {
    let mut err = 0.0;
    let mut energy = 0.0;
    for (x, xhat) in pairs {
        if x.shape() != xhat.shape() {
            return Err(Error::Shape(format!(
                "estimate {} vs reference {}",
                xhat.shape(),
                x.shape()
            )));
        }
        err += x
            .data()
            .iter()
            .zip(xhat.data())
            .map(|(&a, &b)| (a - b).norm_sqr())
            .sum::<f64>();
        energy += x.energy();
    }
    nmse_from_energies(err, energy)
}

/// NMSE from accumulated error and reference energies.
pub fn nmse_from_energies(error_energy: f64, reference_energy: f64) -> Result<f64> {
    if !(reference_energy > 0.0) {
        return Err(Error::Domain("every reference signal is zero".into()));
    }
    Ok(error_energy / reference_energy)
}
