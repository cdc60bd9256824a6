//! Random inputs for the property suites.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::algebra::BranchedCurve;
use crate::calculus::SampledCurve;
use crate::point::{sq_dist, QPoint};
use crate::tangent::TangentVector;

/// `q` points with coordinates uniform in `[-1, 1]`.
pub fn uniform_point<R: Rng>(rng: &mut R, q: usize, n: usize) -> QPoint {
    QPoint::from_flat(n, (0..q * n).map(|_| rng.gen_range(-1.0..=1.0)).collect()).expect("finite")
}

/// A random composition of `q` into positive parts.
pub fn multiplicities<R: Rng>(rng: &mut R, q: usize) -> Vec<usize> {
    let j = rng.gen_range(1..=q);
    let mut parts = vec![1; j];
    for _ in j..q {
        parts[rng.gen_range(0..j)] += 1;
    }
    parts
}

/// `count` support points in `[-1, 1]^n`, pairwise at least `sep` apart.
pub fn separated_supports<R: Rng>(rng: &mut R, count: usize, n: usize, sep: f64) -> Vec<Vec<f64>> {
    loop {
        let pts: Vec<Vec<f64>> = (0..count)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
            .collect();
        let ok = pts
            .iter()
            .enumerate()
            .all(|(i, a)| pts[i + 1..].iter().all(|b| sq_dist(a, b) >= sep * sep));
        if ok {
            return pts;
        }
    }
}

/// A point with the given multiplicities on well-separated supports.
pub fn stratified_point<R: Rng>(rng: &mut R, mult: &[usize], n: usize, sep: f64) -> QPoint {
    let supports = separated_supports(rng, mult.len(), n, sep);
    let rows = supports
        .iter()
        .zip(mult)
        .flat_map(|(s, &k)| std::iter::repeat(s.clone()).take(k))
        .collect();
    QPoint::new(n, rows).expect("finite")
}

/// Random direction scaled to Euclidean length `len`.
pub fn vector_of_length<R: Rng>(rng: &mut R, dim: usize, len: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|x| x * len / norm).collect();
        }
    }
}

/// A tangent vector at `base` with `||v||_A = norm`.
pub fn tangent_of_norm<R: Rng>(rng: &mut R, base: &QPoint, norm: f64) -> TangentVector {
    let zero = TangentVector::zero(base.clone()).expect("valid base");
    let sizes: Vec<usize> = zero.blocks().iter().map(QPoint::q).collect();
    let total: usize = sizes.iter().sum();
    let flat = vector_of_length(rng, total * base.n(), norm);
    let mut rows = Vec::with_capacity(sizes.len());
    let mut off = 0;
    for k in sizes {
        rows.push(flat[off..off + k * base.n()].chunks(base.n()).map(<[f64]>::to_vec).collect());
        off += k * base.n();
    }
    TangentVector::from_rows(base.clone(), rows).expect("block sizes match")
}

/// A polyline curve with `p` branches, node values uniform in `[-1, 1]`.
pub fn random_polyline<R: Rng>(rng: &mut R, p: usize, n: usize, samples: usize) -> BranchedCurve {
    let branches = (0..p)
        .map(|_| {
            (0..samples)
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
                .collect()
        })
        .collect();
    BranchedCurve::new(0.0, 1.0, samples, branches).expect("finite")
}

/// A continuous Q-valued curve on `[0, 1]` built from smooth branches, with
/// some pairs forced to cross exactly at grid nodes. Returns the sampled
/// curve on `samples` nodes.
pub fn crossing_curve<R: Rng>(rng: &mut R, q: usize, n: usize, samples: usize) -> SampledCurve {
    #[derive(Clone)]
    struct Branch {
        offset: Vec<f64>,
        slope: Vec<f64>,
        amp: Vec<f64>,
        freq: f64,
        anchor: f64,
    }
    impl Branch {
        fn eval(&self, x: f64) -> Vec<f64> {
            let w = (self.freq * x).sin() - (self.freq * self.anchor).sin();
            (0..self.offset.len())
                .map(|d| self.offset[d] + self.slope[d] * (x - self.anchor) + self.amp[d] * w)
                .collect()
        }
    }
    let xs: Vec<f64> = (0..samples).map(|k| k as f64 / (samples - 1) as f64).collect();
    let coeffs = |rng: &mut R| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect::<Vec<f64>>();
    let mut branches: Vec<Branch> = Vec::with_capacity(q);
    for i in 0..q {
        let mut b = Branch {
            offset: coeffs(rng),
            slope: coeffs(rng),
            amp: coeffs(rng),
            freq: rng.gen_range(1.0..6.0),
            anchor: 0.0,
        };
        if i > 0 && rng.gen_bool(0.7) {
            // pass through another branch's value at an interior node
            let partner = branches.choose(rng).expect("nonempty").clone();
            let node = xs[rng.gen_range(1..samples - 1)];
            b.anchor = node;
            b.offset = partner.eval(node);
        }
        branches.push(b);
    }
    let samples_q = xs
        .iter()
        .map(|&x| QPoint::new(n, branches.iter().map(|b| b.eval(x)).collect()).expect("finite"))
        .collect();
    SampledCurve::new(0.0, 1.0, samples_q).expect("valid grid")
}
