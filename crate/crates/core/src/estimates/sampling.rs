use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::collision::splitmix64;
use crate::par::{self, Execution};
use crate::Vec3;

const SAMPLE_CHUNK: usize = 1024;

/// Independent stream for sample `index` of a run seeded with `seed`.
pub(crate) fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index)))
}

/// `samples` draws of `f`, produced in fixed chunks with one stream per
/// chunk so the output does not depend on the thread count.
pub(crate) fn sample_map<T, F>(exec: Execution, seed: u64, index: u64, samples: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync + Send,
{
    let base = splitmix64(seed ^ splitmix64(index));
    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    par::map_indexed(exec, chunks, |c| {
        let mut rng = stream(base, c as u64);
        let n = SAMPLE_CHUNK.min(samples - c * SAMPLE_CHUNK);
        (0..n).map(|_| f(&mut rng)).collect::<Vec<T>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

pub(crate) fn normal3(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub(crate) fn unit3(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let u = normal3(rng);
        let n = u.norm();
        if n > 1e-12 {
            return u / n;
        }
    }
}

/// Radial law `r^{gamma+2}` on the ball of radius `radius`, i.e. density
/// proportional to `|y|^gamma`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SingularBall {
    pub radius: f64,
    pub gamma: f64,
}

impl SingularBall {
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec3 {
        let u: f64 = rng.gen();
        let r = self.radius * u.powf(1.0 / (self.gamma + 3.0));
        unit3(rng) * r
    }

    pub fn density(&self, y: &Vec3) -> f64 {
        let r = y.norm();
        if r >= self.radius {
            return 0.0;
        }
        (self.gamma + 3.0) / (4.0 * PI * self.radius.powf(self.gamma + 3.0)) * r.powf(self.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Moments;

    #[test]
    fn chunked_sampling_is_mode_independent() {
        let f = |r: &mut ChaCha8Rng| r.gen::<f64>();
        let a = sample_map(Execution::Sequential, 9, 2, 5000, f);
        let b = sample_map(Execution::Parallel, 9, 2, 5000, f);
        assert_eq!(a.len(), 5000);
        assert_eq!(a, b);
    }

    #[test]
    fn singular_ball_normalised() {
        // E_q[1/q] over the ball equals its volume
        let ball = SingularBall { radius: 0.7, gamma: -1.5 };
        let mut rng = stream(1, 0);
        let mut m = Moments::default();
        for _ in 0..200_000 {
            let y = ball.sample(&mut rng);
            assert!(y.norm() < 0.7);
            m.push(1.0 / ball.density(&y));
        }
        let vol = 4.0 / 3.0 * PI * 0.7f64.powi(3);
        assert!((m.mean - vol).abs() < 4.0 * m.se(), "{} vs {vol}", m.mean);
    }
}
