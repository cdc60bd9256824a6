//! Tensor sums, Dirichlet energy, L^k norms and the weighted inequalities
//! for branch-decomposed curves on an interval.

use serde::{Deserialize, Serialize};

use crate::error::{QError, Result};
use crate::point::{eta, QPoint};

/// A p-valued curve on `[a, b]`, stored as `p` polylines sampled on a
/// shared uniform grid of `samples` nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveRepr", into = "CurveRepr")]
pub struct BranchedCurve {
    a: f64,
    b: f64,
    samples: usize,
    n: usize,
    /// `branches[i]` is row-major `samples x n`.
    branches: Vec<Vec<f64>>,
}

/// JSON shape: `{"a": 0, "b": 1, "samples": 3, "branches": [[[x], ...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveRepr {
    pub a: f64,
    pub b: f64,
    pub samples: usize,
    pub branches: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<CurveRepr> for BranchedCurve {
    type Error = QError;

    fn try_from(r: CurveRepr) -> Result<Self> {
        BranchedCurve::new(r.a, r.b, r.samples, r.branches)
    }
}

impl From<BranchedCurve> for CurveRepr {
    fn from(c: BranchedCurve) -> Self {
        CurveRepr {
            a: c.a,
            b: c.b,
            samples: c.samples,
            branches: c
                .branches
                .iter()
                .map(|br| br.chunks_exact(c.n).map(<[f64]>::to_vec).collect())
                .collect(),
        }
    }
}

pub(crate) fn check_grid(a: f64, b: f64, samples: usize) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(QError::Malformed(format!("interval [{a}, {b}] is not a proper finite interval")));
    }
    if samples < 2 {
        return Err(QError::Malformed("a grid needs at least 2 samples".into()));
    }
    Ok(())
}

impl BranchedCurve {
    /// `branches[i][k]` is the value of branch `i` at grid node `k`.
    pub fn new(a: f64, b: f64, samples: usize, branches: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        check_grid(a, b, samples)?;
        let n = branches
            .first()
            .and_then(|br| br.first())
            .map(Vec::len)
            .ok_or_else(|| QError::Malformed("curve needs at least one branch".into()))?;
        if n == 0 {
            return Err(QError::Malformed("target dimension must be positive".into()));
        }
        let mut flat = Vec::with_capacity(branches.len());
        for (i, br) in branches.into_iter().enumerate() {
            if br.len() != samples {
                return Err(QError::Malformed(format!(
                    "branch {i} has {} samples, grid has {samples}",
                    br.len()
                )));
            }
            let mut coords = Vec::with_capacity(samples * n);
            for v in br {
                if v.len() != n {
                    return Err(QError::Malformed(format!("branch {i} mixes dimensions")));
                }
                coords.extend(v);
            }
            if coords.iter().any(|x| !x.is_finite()) {
                return Err(QError::Malformed(format!("branch {i} has a non-finite sample")));
            }
            flat.push(coords);
        }
        Ok(BranchedCurve {
            a,
            b,
            samples,
            n,
            branches: flat,
        })
    }

    /// Samples each branch function on the uniform grid.
    pub fn from_fns(a: f64, b: f64, samples: usize, fns: &[&dyn Fn(f64) -> Vec<f64>]) -> Result<Self> {
        check_grid(a, b, samples)?;
        let xs = grid(a, b, samples);
        Self::new(a, b, samples, fns.iter().map(|f| xs.iter().map(|&x| f(x)).collect()).collect())
    }

    pub fn p(&self) -> usize {
        self.branches.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn step(&self) -> f64 {
        (self.b - self.a) / (self.samples - 1) as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        grid_node(self.a, self.b, self.samples, k)
    }

    /// Value of branch `i` at node `k`.
    pub fn branch_at(&self, i: usize, k: usize) -> &[f64] {
        &self.branches[i][k * self.n..(k + 1) * self.n]
    }

    /// The multiset `sum_i [[f_i(x_k)]]`.
    pub fn value_at(&self, k: usize) -> QPoint {
        let coords = (0..self.p()).flat_map(|i| self.branch_at(i, k).iter().copied()).collect();
        QPoint::from_flat(self.n, coords).expect("validated at construction")
    }

    /// `eta(f(x_k))`.
    pub fn eta_at(&self, k: usize) -> Vec<f64> {
        eta(&self.value_at(k))
    }

    /// `G(f(x_k), p[[0]])^2 = sum_i |f_i(x_k)|^2`.
    pub fn origin_sq_at(&self, k: usize) -> f64 {
        (0..self.p())
            .map(|i| self.branch_at(i, k).iter().map(|x| x * x).sum::<f64>())
            .sum()
    }

    pub fn same_grid(&self, other: &BranchedCurve) -> Result<()> {
        if self.a != other.a || self.b != other.b || self.samples != other.samples {
            return Err(QError::Mismatch(format!(
                "grids differ: [{}, {}]/{} vs [{}, {}]/{}",
                self.a, self.b, self.samples, other.a, other.b, other.samples
            )));
        }
        if self.n != other.n {
            return Err(QError::Mismatch(format!("target dimensions {} vs {}", self.n, other.n)));
        }
        Ok(())
    }

    pub(crate) fn from_flat_branches(a: f64, b: f64, samples: usize, n: usize, branches: Vec<Vec<f64>>) -> Self {
        BranchedCurve {
            a,
            b,
            samples,
            n,
            branches,
        }
    }
}

pub(crate) fn grid_node(a: f64, b: f64, samples: usize, k: usize) -> f64 {
    if k + 1 == samples {
        b
    } else {
        a + (b - a) * k as f64 / (samples - 1) as f64
    }
}

pub(crate) fn grid(a: f64, b: f64, samples: usize) -> Vec<f64> {
    (0..samples).map(|k| grid_node(a, b, samples, k)).collect()
}

/// `(f (+) g)(x) = sum_{i,j} [[f_i(x) + g_j(x)]]`; branch `(i, j)` is
/// stored at index `i * q + j`.
pub fn tensor_sum(f: &BranchedCurve, g: &BranchedCurve) -> Result<BranchedCurve> {
    f.same_grid(g)?;
    let mut branches = Vec::with_capacity(f.p() * g.p());
    for fi in &f.branches {
        for gj in &g.branches {
            branches.push(fi.iter().zip(gj).map(|(x, y)| x + y).collect());
        }
    }
    Ok(BranchedCurve::from_flat_branches(f.a, f.b, f.samples, f.n, branches))
}

/// `sum_i int |f_i'|^2`, exact for piecewise-affine branches.
pub fn dirichlet(f: &BranchedCurve) -> Result<f64> {
    check_grid(f.a, f.b, f.samples)?;
    let h = f.step();
    let mut total = 0.0;
    for br in &f.branches {
        for k in 0..f.samples - 1 {
            let d: f64 = (0..f.n)
                .map(|c| {
                    let delta = br[(k + 1) * f.n + c] - br[k * f.n + c];
                    delta * delta
                })
                .sum();
            total += d / h;
        }
    }
    Ok(total)
}

/// `int <(eta o f)', (eta o g)'>`, exact per segment.
pub fn eta_cross_energy(f: &BranchedCurve, g: &BranchedCurve) -> Result<f64> {
    f.same_grid(g)?;
    let h = f.step();
    let mut total = 0.0;
    let (mut ef, mut eg) = (f.eta_at(0), g.eta_at(0));
    for k in 1..f.samples {
        let (nf, ng) = (f.eta_at(k), g.eta_at(k));
        let dot: f64 = nf
            .iter()
            .zip(&ef)
            .zip(ng.iter().zip(&eg))
            .map(|((a1, a0), (b1, b0))| (a1 - a0) * (b1 - b0))
            .sum();
        total += dot / h;
        ef = nf;
        eg = ng;
    }
    Ok(total)
}

/// Both sides of `Dir(f (+) g) = q Dir(f) + p Dir(g) + 2pq int <(eta f)', (eta g)'>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_error: f64,
}

pub fn dirichlet_sum_identity(f: &BranchedCurve, g: &BranchedCurve) -> Result<IdentityReport> {
    let (p, q) = (f.p() as f64, g.p() as f64);
    let lhs = dirichlet(&tensor_sum(f, g)?)?;
    let rhs = q * dirichlet(f)? + p * dirichlet(g)? + 2.0 * p * q * eta_cross_energy(f, g)?;
    let scale = lhs.abs().max(rhs.abs());
    let relative_error = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
    Ok(IdentityReport {
        lhs,
        rhs,
        relative_error,
    })
}

/// Norm order: `0 < k < inf`, or `inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormOrder {
    Finite(f64),
    Infinity,
}

impl NormOrder {
    pub fn finite(k: f64) -> Result<Self> {
        if k.is_infinite() && k > 0.0 {
            return Ok(NormOrder::Infinity);
        }
        if !(k > 0.0) {
            return Err(QError::OutOfRange(format!("norm order must be positive, got {k}")));
        }
        Ok(NormOrder::Finite(k))
    }
}

impl std::str::FromStr for NormOrder {
    type Err = QError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Infinity" => Ok(NormOrder::Infinity),
            other => other
                .parse::<f64>()
                .map_err(|e| QError::Malformed(format!("norm order {other:?}: {e}")))
                .and_then(NormOrder::finite),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    /// `None` stands for `k = inf`.
    pub k: Option<f64>,
    pub value: f64,
}

/// `||f||_k`: trapezoid quadrature of `G(f(x), p[[0]])^k`; for `k = inf`
/// the maximum over grid samples. The trapezoid error is at most
/// `(b - a) h^2 / 12 * max |d^2/dx^2 G^k|`.
pub fn lp_norm(f: &BranchedCurve, k: NormOrder) -> NormReport {
    match k {
        NormOrder::Infinity => NormReport {
            k: None,
            value: (0..f.samples).map(|i| f.origin_sq_at(i).sqrt()).fold(0.0, f64::max),
        },
        NormOrder::Finite(k) => NormReport {
            k: Some(k),
            value: trapezoid(f, |i| f.origin_sq_at(i).powf(k / 2.0)).powf(1.0 / k),
        },
    }
}

fn trapezoid(f: &BranchedCurve, mut integrand: impl FnMut(usize) -> f64) -> f64 {
    let h = f.step();
    let last = f.samples - 1;
    let inner: f64 = (1..last).map(&mut integrand).sum();
    h * (0.5 * (integrand(0) + integrand(last)) + inner)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlackReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`
    pub slack: f64,
}

/// `G(f(+)g, pq[[0]]) <= q^{1/2} G(f, p[[0]]) + p^{1/2} G(g, q[[0]])` at node `k`.
pub fn weighted_triangle_check(f: &BranchedCurve, g: &BranchedCurve, k: usize) -> Result<SlackReport> {
    f.same_grid(g)?;
    if k >= f.samples {
        return Err(QError::OutOfRange(format!("sample {k} outside grid of {}", f.samples)));
    }
    let (p, q) = (f.p() as f64, g.p() as f64);
    let mut lhs_sq = 0.0;
    for i in 0..f.p() {
        for j in 0..g.p() {
            lhs_sq += f
                .branch_at(i, k)
                .iter()
                .zip(g.branch_at(j, k))
                .map(|(x, y)| (x + y) * (x + y))
                .sum::<f64>();
        }
    }
    let lhs = lhs_sq.sqrt();
    let rhs = q.sqrt() * f.origin_sq_at(k).sqrt() + p.sqrt() * g.origin_sq_at(k).sqrt();
    Ok(SlackReport { lhs, rhs, slack: rhs - lhs })
}

/// Weighted Minkowski inequality. For `k >= 1` (including `inf`):
/// `||f(+)g||_k <= q^{1/2} ||f||_k + p^{1/2} ||g||_k`; for `0 < k < 1`:
/// `||f(+)g||_k^k <= q^{k/2} ||f||_k^k + p^{k/2} ||g||_k^k`.
pub fn weighted_minkowski_check(f: &BranchedCurve, g: &BranchedCurve, k: NormOrder) -> Result<SlackReport> {
    let sum = tensor_sum(f, g)?;
    let (p, q) = (f.p() as f64, g.p() as f64);
    let (nf, ng, ns) = (lp_norm(f, k).value, lp_norm(g, k).value, lp_norm(&sum, k).value);
    let (lhs, rhs) = match k {
        NormOrder::Finite(k) if k < 1.0 => (
            ns.powf(k),
            q.powf(k / 2.0) * nf.powf(k) + p.powf(k / 2.0) * ng.powf(k),
        ),
        _ => (ns, q.sqrt() * nf + p.sqrt() * ng),
    };
    Ok(SlackReport { lhs, rhs, slack: rhs - lhs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(samples: usize, fns: &[&dyn Fn(f64) -> Vec<f64>]) -> BranchedCurve {
        BranchedCurve::from_fns(0.0, 1.0, samples, fns).unwrap()
    }

    #[test]
    fn tensor_sum_of_minimizers() {
        let f = curve(11, &[&|x| vec![x], &|_| vec![-1.0]]);
        let g = curve(11, &[&|x| vec![1.0 - x], &|_| vec![-1.0]]);
        let s = tensor_sum(&f, &g).unwrap();
        assert_eq!(s.p(), 4);
        for k in 0..11 {
            let x = s.x(k);
            let want = QPoint::from_scalars(&[x + (1.0 - x), x - 1.0, -1.0 + (1.0 - x), -2.0]).unwrap();
            assert_eq!(s.value_at(k), want);
            let approx = QPoint::from_scalars(&[1.0, x - 1.0, -x, -2.0]).unwrap();
            assert!(crate::metric::distance(&s.value_at(k), &approx).unwrap().g < 1e-15);
            // eta is additive
            let e = s.eta_at(k)[0];
            assert!((e - (f.eta_at(k)[0] + g.eta_at(k)[0])).abs() < 1e-15);
        }
        // branches x-1 (index 1) and -x (index 2) cross at x = 1/2
        let diff = |k: usize| s.branch_at(1, k)[0] - s.branch_at(2, k)[0];
        assert!(diff(0) < 0.0 && diff(10) > 0.0 && diff(5) == 0.0);
    }

    #[test]
    fn tensor_with_zero_is_identity() {
        let f = curve(5, &[&|x| vec![x, 2.0 * x], &|x| vec![-x, 1.0]]);
        let z = curve(5, &[&|_| vec![0.0, 0.0]]);
        assert_eq!(tensor_sum(&f, &z).unwrap(), f);
        let other = BranchedCurve::from_fns(0.0, 2.0, 5, &[&|_| vec![0.0, 0.0]]).unwrap();
        assert!(tensor_sum(&f, &other).is_err());
    }

    #[test]
    fn dirichlet_of_matched_linear_path() {
        let a = [[0.0, 1.0], [2.0, -1.0], [0.5, 0.5]];
        let b = [[1.0, 1.0], [0.0, 0.0], [-1.0, 2.0]];
        let fns: Vec<Box<dyn Fn(f64) -> Vec<f64>>> = (0..3)
            .map(|i| {
                let (ai, bi) = (a[i], b[i]);
                Box::new(move |t: f64| vec![(1.0 - t) * ai[0] + t * bi[0], (1.0 - t) * ai[1] + t * bi[1]])
                    as Box<dyn Fn(f64) -> Vec<f64>>
            })
            .collect();
        let refs: Vec<&dyn Fn(f64) -> Vec<f64>> = fns.iter().map(|b| b.as_ref()).collect();
        let f = curve(7, &refs);
        let expected: f64 = (0..3)
            .map(|i| (a[i][0] - b[i][0]).powi(2) + (a[i][1] - b[i][1]).powi(2))
            .sum();
        assert!((dirichlet(&f).unwrap() - expected).abs() < 1e-12);
        assert_eq!(dirichlet(&curve(4, &[&|_| vec![3.0]])).unwrap(), 0.0);
    }

    #[test]
    fn dirichlet_identity_on_polylines() {
        let f = curve(9, &[&|x| vec![x * x], &|x| vec![1.0 - 3.0 * x]]);
        let g = curve(9, &[&|x| vec![x.sin()], &|_| vec![2.0], &|x| vec![-x]]);
        let r = dirichlet_sum_identity(&f, &g).unwrap();
        assert!(r.relative_error <= 1e-12, "{r:?}");
    }

    #[test]
    fn norm_examples() {
        let zero = curve(11, &[&|_| vec![0.0, 0.0], &|_| vec![0.0, 0.0]]);
        for k in [0.5, 1.0, 2.0] {
            assert_eq!(lp_norm(&zero, NormOrder::Finite(k)).value, 0.0);
        }
        assert_eq!(lp_norm(&zero, NormOrder::Infinity).value, 0.0);

        let c = curve(3, &[&|_| vec![3.0, 4.0]]);
        assert!((lp_norm(&c, NormOrder::Finite(2.0)).value - 5.0).abs() < 1e-15);

        let f = curve(2001, &[&|x| vec![x], &|x| vec![-x]]);
        let v = lp_norm(&f, NormOrder::Finite(2.0)).value;
        assert!((v - (2.0f64 / 3.0).sqrt()).abs() < 1e-6);
        assert!((lp_norm(&f, NormOrder::Infinity).value - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn norm_order_parsing() {
        assert_eq!("inf".parse::<NormOrder>().unwrap(), NormOrder::Infinity);
        assert_eq!("0.5".parse::<NormOrder>().unwrap(), NormOrder::Finite(0.5));
        assert!("0".parse::<NormOrder>().is_err());
        assert!("-2".parse::<NormOrder>().is_err());
        assert!(NormOrder::finite(f64::NAN).is_err());
    }

    #[test]
    fn triangle_with_zero_second_factor() {
        let f = curve(5, &[&|x| vec![x, 1.0], &|x| vec![-2.0 * x, 0.5]]);
        let z = curve(5, &[&|_| vec![0.0, 0.0], &|_| vec![0.0, 0.0], &|_| vec![0.0, 0.0]]);
        for k in 0..5 {
            let r = weighted_triangle_check(&f, &z, k).unwrap();
            assert!((r.lhs - 3f64.sqrt() * f.origin_sq_at(k).sqrt()).abs() < 1e-14);
            assert!(r.slack.abs() < 1e-14);
        }
    }

    #[test]
    fn triangle_aligned_constants_is_tight() {
        let v = [0.6, -0.8];
        let f = curve(3, &[&|_| v.to_vec(), &|_| v.to_vec()]);
        let g = curve(3, &[&|_| v.to_vec(), &|_| v.to_vec(), &|_| v.to_vec()]);
        let r = weighted_triangle_check(&f, &g, 1).unwrap();
        // lhs = sqrt(6) * |2v| = 2 sqrt(6); rhs = sqrt(3) sqrt(2) + sqrt(2) sqrt(3)
        assert!((r.lhs - 2.0 * 6f64.sqrt()).abs() < 1e-14);
        assert!(r.slack.abs() < 1e-14);
    }

    #[test]
    fn minkowski_with_zero_is_equality() {
        let f = curve(101, &[&|x| vec![x], &|x| vec![x * x - 1.0]]);
        let z = curve(101, &[&|_| vec![0.0]]);
        let r = weighted_minkowski_check(&f, &z, NormOrder::Finite(1.0)).unwrap();
        assert!(r.slack.abs() < 1e-12);
    }

    #[test]
    fn json_shape() {
        let json = r#"{"a": 0, "b": 1, "samples": 2, "branches": [[[0.0], [1.0]], [[-1.0], [-1.0]]]}"#;
        let c: BranchedCurve = serde_json::from_str(json).unwrap();
        assert_eq!(c.p(), 2);
        assert_eq!(c.value_at(1), QPoint::from_scalars(&[1.0, -1.0]).unwrap());
        let bad = r#"{"a": 0, "b": 1, "samples": 3, "branches": [[[0.0], [1.0]]]}"#;
        assert!(serde_json::from_str::<BranchedCurve>(bad).is_err());
    }
}
