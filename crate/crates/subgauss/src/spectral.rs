//! Spectral form of the heat semigroup: eigendecomposition of the
//! mu-symmetric generator, heat-kernel evaluation, the on-diagonal profile
//! and the Nash-constant estimate.
//!
//! The generator is symmetrized as `A = D^{-1/2} (D_c - C) D^{-1/2}` with
//! `D = diag(mu)`; its eigenvectors are stored l2-orthonormal, and the
//! mu-orthonormal eigenfunctions are `phi_i = v_i / sqrt(mu)`. The kernel
//! density against mu is `p_t(x,y) = sum_i e^{-lambda_i t} phi_i(x) phi_i(y)`.

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{VertexFunction, WeightedGraph};
use crate::linalg::eigh;

/// Vertex-count cap for the dense eigensolve.
pub const SPECTRAL_VERTEX_CAP: usize = 4000;

const EIGENVALUE_FLOOR: f64 = -1e-10;

/// Eigenpairs of the mu-symmetric generator.
///
/// Immutable once computed; kernel evaluations for distinct times are
/// independent and can run concurrently.
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Ascending; `eigenvalues[0] == 0` exactly (clamped after deflation).
    eigenvalues: Array1<f64>,
    /// Column `i` is the l2-orthonormal symmetrized eigenvector `v_i`.
    vectors: Array2<f64>,
    mu: Vec<f64>,
    sqrt_mu: Vec<f64>,
}

/// Dense eigendecomposition of the generator of `g`.
///
/// The constant-function eigenvector is replaced by its exact value and the
/// remaining vectors re-orthogonalized against it, which keeps kernel row
/// sums (conservativeness) at rounding level even on large graphs.
pub fn spectral_decompose(g: &WeightedGraph) -> Result<SpectralData> {
    let n = g.vertex_count();
    if n > SPECTRAL_VERTEX_CAP {
        return Err(Error::Configuration(format!(
            "dense eigensolve capped at {SPECTRAL_VERTEX_CAP} vertices, graph has {n}"
        )));
    }
    let mu = g.mu_values().to_vec();
    let sqrt_mu: Vec<f64> = mu.iter().map(|m| m.sqrt()).collect();
    let mut a = Array2::<f64>::zeros((n, n));
    for e in g.edges() {
        let w = e.c / (sqrt_mu[e.u] * sqrt_mu[e.v]);
        a[[e.u, e.v]] -= w;
        a[[e.v, e.u]] -= w;
        a[[e.u, e.u]] += e.c / mu[e.u];
        a[[e.v, e.v]] += e.c / mu[e.v];
    }
    let (mut vals, mut vecs) = eigh(&a)?;
    if vals[0] < EIGENVALUE_FLOOR {
        return Err(Error::Numerical(format!(
            "generator spectrum dips below the positivity floor: lambda_0 = {}",
            vals[0]
        )));
    }
    // Exact ground state: v_0 = sqrt(mu) / ||sqrt(mu)||.
    let norm0 = sqrt_mu.iter().map(|v| v * v).sum::<f64>().sqrt();
    for x in 0..n {
        vecs[[x, 0]] = sqrt_mu[x] / norm0;
    }
    vals[0] = 0.0;
    for i in 1..n {
        let dot: f64 = (0..n).map(|x| vecs[[x, i]] * vecs[[x, 0]]).sum();
        for x in 0..n {
            let v0 = vecs[[x, 0]];
            vecs[[x, i]] -= dot * v0;
        }
        let norm: f64 = (0..n).map(|x| vecs[[x, i]] * vecs[[x, i]]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Numerical("eigenvector collapsed in deflation".into()));
        }
        for x in 0..n {
            vecs[[x, i]] /= norm;
        }
        if vals[i] < 0.0 {
            vals[i] = 0.0;
        }
    }
    let s = SpectralData {
        eigenvalues: vals,
        vectors: vecs,
        mu,
        sqrt_mu,
    };
    s.verify(&a)?;
    Ok(s)
}

impl SpectralData {
    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn total_mass(&self) -> f64 {
        self.mu.iter().sum()
    }

    /// mu-orthonormal eigenfunction `phi_i`.
    pub fn eigenfunction(&self, i: usize) -> VertexFunction {
        let n = self.n();
        VertexFunction::from_fn(n, |x| self.vectors[[x, i]] / self.sqrt_mu[x])
    }

    /// Residual checks after decomposition: reconstruction on probe vectors
    /// and orthonormality on a deterministic sample of pairs.
    fn verify(&self, a: &Array2<f64>) -> Result<()> {
        let n = self.n();
        let probes = 3.min(n);
        for k in 0..probes {
            let probe = VertexFunction::from_fn(n, |x| ((x * (k + 2) + 1) as f64).sin());
            // A w vs V L V^T w in the symmetrized coordinates
            let w: Vec<f64> = (0..n).map(|x| probe[x]).collect();
            let mut coeff = vec![0.0; n];
            for (i, c) in coeff.iter_mut().enumerate() {
                *c = (0..n).map(|x| self.vectors[[x, i]] * w[x]).sum();
            }
            let mut recon = vec![0.0; n];
            for i in 0..n {
                let c = coeff[i] * self.eigenvalues[i];
                if c != 0.0 {
                    for (x, r) in recon.iter_mut().enumerate() {
                        *r += c * self.vectors[[x, i]];
                    }
                }
            }
            let scale: f64 = w.iter().map(|v| v.abs()).fold(1.0, f64::max) * (n as f64);
            for x in 0..n {
                let av: f64 = (0..n).map(|y| a[[x, y]] * w[y]).sum();
                if (av - recon[x]).abs() > 1e-9 * scale {
                    return Err(Error::Numerical(format!(
                        "spectral reconstruction residual {} at vertex {x}",
                        (av - recon[x]).abs()
                    )));
                }
            }
        }
        let step = (n / 37).max(1);
        for i in (0..n).step_by(step) {
            for j in (i..n).step_by(step) {
                let dot: f64 = (0..n).map(|x| self.vectors[[x, i]] * self.vectors[[x, j]]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot - target).abs() > 1e-10 {
                    return Err(Error::Numerical(format!(
                        "orthonormality residual {} at pair ({i},{j})",
                        (dot - target).abs()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Apply the heat semigroup: `P_t f`.
    pub fn apply_heat(&self, t: f64, f: &VertexFunction) -> Result<VertexFunction> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
        }
        let n = self.n();
        if f.len() != n {
            return Err(Error::DimensionMismatch {
                context: "apply_heat f",
                expected: n,
                got: f.len(),
            });
        }
        let y = Array1::from_shape_fn(n, |x| f[x] * self.sqrt_mu[x]);
        let mut coeff = self.vectors.t().dot(&y);
        for i in 0..n {
            coeff[i] *= (-self.eigenvalues[i] * t).exp();
        }
        let z = self.vectors.dot(&coeff);
        Ok(VertexFunction::from_fn(n, |x| z[x] / self.sqrt_mu[x]))
    }

    /// Single kernel entry `p_t(x,y)`.
    pub fn kernel_entry(&self, t: f64, x: usize, y: usize) -> f64 {
        let n = self.n();
        let sum: f64 = (0..n)
            .map(|i| (-self.eigenvalues[i] * t).exp() * self.vectors[[x, i]] * self.vectors[[y, i]])
            .sum();
        sum / (self.sqrt_mu[x] * self.sqrt_mu[y])
    }

    /// One kernel column `p_t(x, .)` as a vertex function.
    pub fn kernel_column(&self, t: f64, x: usize) -> Result<VertexFunction> {
        let n = self.n();
        let e = VertexFunction::indicator(n, x);
        let col = self.apply_heat(t, &e)?;
        let mu_x = self.mu[x];
        Ok(col.map(|v| v / mu_x))
    }

    /// On-diagonal values `p_t(x,x)` for all `x`.
    pub fn on_diagonal(&self, t: f64) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|x| {
                let s: f64 = (0..n)
                    .map(|i| {
                        let v = self.vectors[[x, i]];
                        (-self.eigenvalues[i] * t).exp() * v * v
                    })
                    .sum();
                s / self.mu[x]
            })
            .collect()
    }
}

/// Full heat kernel at one time, as a density against mu.
#[derive(Debug, Clone)]
pub struct HeatKernel {
    pub t: f64,
    pub values: Array2<f64>,
}

impl HeatKernel {
    /// Symmetry, conservativeness and near-positivity, asserted per
    /// evaluation.
    pub fn validate(&self, mu: &[f64]) -> Result<()> {
        let n = self.values.nrows();
        for x in 0..n {
            let mut row_sum = 0.0;
            for y in 0..n {
                let v = self.values[[x, y]];
                if v < -1e-12 {
                    return Err(Error::Numerical(format!(
                        "kernel entry p({x},{y}) = {v} below positivity floor"
                    )));
                }
                if (v - self.values[[y, x]]).abs() > 1e-10 {
                    return Err(Error::Numerical(format!(
                        "kernel asymmetry at ({x},{y})"
                    )));
                }
                row_sum += v * mu[y];
            }
            if (row_sum - 1.0).abs() > 1e-10 {
                return Err(Error::Numerical(format!(
                    "kernel row {x} mass {row_sum} off unity"
                )));
            }
        }
        Ok(())
    }
}

/// Evaluate the full heat kernel at `t > 0` and assert its contracts.
pub fn heat_kernel(s: &SpectralData, t: f64) -> Result<HeatKernel> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    let n = s.n();
    let mut scaled = s.vectors.clone();
    for i in 0..n {
        let e = (-s.eigenvalues[i] * t * 0.5).exp();
        for x in 0..n {
            scaled[[x, i]] *= e;
        }
    }
    let sym = scaled.dot(&scaled.t());
    let values = Array2::from_shape_fn((n, n), |(x, y)| {
        sym[[x, y]] / (s.sqrt_mu[x] * s.sqrt_mu[y])
    });
    let k = HeatKernel { t, values };
    k.validate(&s.mu)?;
    Ok(k)
}

/// `sup_x p_t(x,x) * t^{df/dw}` over a time grid.
#[derive(Debug, Clone, Serialize)]
pub struct OnDiagonalProfile {
    /// `(t, sup_x p_t(x,x) * t^{df/dw})` per grid point.
    pub points: Vec<(f64, f64)>,
    /// Largest profile value: the measured on-diagonal constant.
    pub c1: f64,
    /// max/min ratio of the profile across the grid.
    pub flatness: f64,
}

/// Measure the on-diagonal constant over `tgrid`, which must lie in the
/// physical window `[1, diam^dw]`: below it lattice discreteness dominates,
/// above it the spectral gap does.
pub fn ondiagonal_profile(
    s: &SpectralData,
    g: &WeightedGraph,
    tgrid: &[f64],
    df: f64,
    dw: f64,
) -> Result<OnDiagonalProfile> {
    if tgrid.is_empty() {
        return Err(Error::InsufficientData(
            "on-diagonal profile needs a nonempty grid".into(),
        ));
    }
    let t_max = (g.diameter() as f64).powf(dw);
    for &t in tgrid {
        if !(1.0..=t_max).contains(&t) {
            return Err(Error::Domain(format!(
                "profile time {t} outside the window [1, {t_max}]"
            )));
        }
    }
    let mut points = Vec::with_capacity(tgrid.len());
    for &t in tgrid {
        let sup = s
            .on_diagonal(t)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        points.push((t, sup * t.powf(df / dw)));
    }
    let c1 = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    Ok(OnDiagonalProfile {
        points,
        c1,
        flatness: c1 / lo,
    })
}

/// Nash-constant estimate over a family of test functions.
#[derive(Debug, Clone, Serialize)]
pub struct NashEstimate {
    /// Largest Nash ratio over the family.
    pub c_n: f64,
    /// Ratio per family member.
    pub per_function: Vec<(String, f64)>,
    /// Members excluded because their energy vanishes (constants).
    pub excluded: usize,
    /// Alternative value converted from an on-diagonal constant, when one
    /// is supplied (the classical equivalence, used as a cross-check).
    pub c_n_from_ondiag: Option<f64>,
}

/// Nash ratio `||f||_2^{2(1+dw/df)} / (E(f,f) ||f||_1^{2 dw/df})` for one
/// function, or `None` when the energy vanishes.
pub fn nash_ratio(g: &WeightedGraph, f: &VertexFunction, df: f64, dw: f64) -> Result<Option<f64>> {
    let energy = g.dirichlet_energy(f, f)?;
    let n2 = g.lp_norm(f, 2.0)?;
    let n1 = g.lp_norm(f, 1.0)?;
    if energy <= 0.0 || n2 == 0.0 {
        return Ok(None);
    }
    Ok(Some(
        n2.powf(2.0 * (1.0 + dw / df)) / (energy * n1.powf(2.0 * dw / df)),
    ))
}

pub fn nash_constant_estimate(
    g: &WeightedGraph,
    df: f64,
    dw: f64,
    family: &[(String, VertexFunction)],
    c1_ondiag: Option<f64>,
) -> Result<NashEstimate> {
    if family.is_empty() {
        return Err(Error::InsufficientData(
            "nash estimate needs a nonempty family".into(),
        ));
    }
    let mut per_function = Vec::new();
    let mut excluded = 0usize;
    for (name, f) in family {
        match nash_ratio(g, f, df, dw)? {
            Some(r) => per_function.push((name.clone(), r)),
            None => excluded += 1,
        }
    }
    if per_function.is_empty() {
        return Err(Error::InsufficientData(
            "every family member was excluded (zero energy)".into(),
        ));
    }
    let c_n = per_function
        .iter()
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(NashEstimate {
        c_n,
        per_function,
        excluded,
        c_n_from_ondiag: c1_ondiag.map(|c1| nash_from_ondiagonal(c1, df, dw)),
    })
}

/// Convert an on-diagonal constant `p_t(x,x) <= C1 t^{-df/dw}` into a Nash
/// constant: from `||f||_2^2 <= t E(f,f) + C1 t^{-a} ||f||_1^2` with
/// `a = df/dw`, optimizing over `t`.
pub fn nash_from_ondiagonal(c1: f64, df: f64, dw: f64) -> f64 {
    let a = df / dw;
    let k = a.powf(1.0 / (1.0 + a)) + a.powf(-a / (1.0 + a));
    k.powf((1.0 + a) / a) * c1.powf(1.0 / a)
}

/// The fixed test-function family used for Nash estimates: heat-kernel
/// columns at several times, low eigenfunctions and radial bumps. The
/// center list is derived deterministically from the seed.
pub fn standard_nash_family(
    g: &WeightedGraph,
    s: &SpectralData,
    seed: u64,
) -> Result<Vec<(String, VertexFunction)>> {
    use rand::{Rng, SeedableRng};
    let n = g.vertex_count();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut family = Vec::new();
    let diam = g.diameter() as f64;
    let times = [1.0, diam.powf(1.2).max(2.0), diam.powf(1.8).max(4.0)];
    for (k, &t) in times.iter().enumerate() {
        let x = rng.gen_range(0..n);
        family.push((format!("kernel_column_t{k}_x{x}"), s.kernel_column(t, x)?));
    }
    for i in 1..=10.min(n - 1) {
        family.push((format!("eigenfunction_{i}"), s.eigenfunction(i)));
    }
    let radii = [diam / 8.0, diam / 4.0];
    for (k, &r) in radii.iter().enumerate() {
        let x = rng.gen_range(0..n);
        let d = g.distances_from(x);
        let bump = VertexFunction::from_fn(n, |v| (1.0 - d[v] as f64 / r.max(1.0)).max(0.0));
        family.push((format!("radial_bump_{k}_x{x}"), bump));
    }
    Ok(family)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_lattice, build_sierpinski};
    use crate::graph::MeasureKind;

    fn two_vertex() -> WeightedGraph {
        WeightedGraph::new(2, &[(0, 1, 1.0)], MeasureKind::Counting).unwrap()
    }

    #[test]
    fn two_vertex_eigenvalues() {
        let g = two_vertex();
        let s = spectral_decompose(&g).unwrap();
        assert_eq!(s.eigenvalues()[0], 0.0);
        assert!((s.eigenvalues()[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ground_state_is_constant() {
        let g = build_sierpinski(3, MeasureKind::RandomWalk).unwrap();
        let s = spectral_decompose(&g).unwrap();
        let phi0 = s.eigenfunction(0);
        let expected = 1.0 / g.total_mass().sqrt();
        for x in 0..g.vertex_count() {
            assert!((phi0[x] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn size_cap_enforced() {
        let g = build_lattice(2, 64, MeasureKind::RandomWalk).unwrap();
        assert_eq!(g.vertex_count(), 4096);
        assert!(matches!(
            spectral_decompose(&g),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn two_vertex_kernel_value() {
        let g = two_vertex();
        let s = spectral_decompose(&g).unwrap();
        let k = heat_kernel(&s, 1.0).unwrap();
        let expected = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((k.values[[0, 1]] - expected).abs() < 1e-14);
    }

    #[test]
    fn kernel_long_time_limit() {
        let g = build_sierpinski(2, MeasureKind::RandomWalk).unwrap();
        let s = spectral_decompose(&g).unwrap();
        let k = heat_kernel(&s, 1e5).unwrap();
        let limit = 1.0 / g.total_mass();
        for x in 0..g.vertex_count() {
            for y in 0..g.vertex_count() {
                assert!((k.values[[x, y]] - limit).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kernel_contracts_validated() {
        let g = build_sierpinski(4, MeasureKind::RandomWalk).unwrap();
        let s = spectral_decompose(&g).unwrap();
        // validate() runs inside heat_kernel
        heat_kernel(&s, 0.5).unwrap();
        heat_kernel(&s, 17.0).unwrap();
    }

    #[test]
    fn nonpositive_time_rejected() {
        let g = two_vertex();
        let s = spectral_decompose(&g).unwrap();
        assert!(matches!(heat_kernel(&s, 0.0), Err(Error::Domain(_))));
        assert!(matches!(heat_kernel(&s, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn semigroup_property() {
        let g = build_sierpinski(4, MeasureKind::RandomWalk).unwrap();
        let s = spectral_decompose(&g).unwrap();
        let n = g.vertex_count();
        let f = VertexFunction::from_fn(n, |x| ((x as f64) * 0.37).sin());
        let lhs = s.apply_heat(1.0, &f).unwrap();
        let mid = s.apply_heat(0.7, &f).unwrap();
        let rhs = s.apply_heat(0.3, &mid).unwrap();
        let mut max_err = 0.0f64;
        for x in 0..n {
            max_err = max_err.max((lhs[x] - rhs[x]).abs());
        }
        assert!(max_err <= 1e-8, "semigroup residual {max_err}");
    }

    #[test]
    fn heat_contraction_on_lp() {
        let g = build_sierpinski(3, MeasureKind::RandomWalk).unwrap();
        let s = spectral_decompose(&g).unwrap();
        let n = g.vertex_count();
        let f = VertexFunction::from_fn(n, |x| ((x * 13 % 7) as f64) - 3.0);
        for &p in &[1.0, 2.0, f64::INFINITY] {
            let before = g.lp_norm(&f, p).unwrap();
            let after = g.lp_norm(&s.apply_heat(2.5, &f).unwrap(), p).unwrap();
            assert!(after <= before + 1e-10, "p = {p}: {after} > {before}");
        }
    }

    #[test]
    fn kernel_column_matches_matrix() {
        let g = build_sierpinski(2, MeasureKind::RandomWalk).unwrap();
        let s = spectral_decompose(&g).unwrap();
        let k = heat_kernel(&s, 2.0).unwrap();
        let col = s.kernel_column(2.0, 5).unwrap();
        for y in 0..g.vertex_count() {
            assert!((col[y] - k.values[[5, y]]).abs() < 1e-12);
        }
        assert!((s.kernel_entry(2.0, 5, 7) - k.values[[5, 7]]).abs() < 1e-13);
    }

    #[test]
    fn ondiagonal_profile_window_enforced() {
        let g = build_sierpinski(3, MeasureKind::RandomWalk).unwrap();
        let s = spectral_decompose(&g).unwrap();
        assert!(matches!(
            ondiagonal_profile(&s, &g, &[0.5], 1.6, 2.3),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            ondiagonal_profile(&s, &g, &[], 1.6, 2.3),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn nash_estimate_positive_and_excludes_constants() {
        let g = build_sierpinski(3, MeasureKind::RandomWalk).unwrap();
        let s = spectral_decompose(&g).unwrap();
        let n = g.vertex_count();
        let mut family = standard_nash_family(&g, &s, 7).unwrap();
        family.push(("constant".into(), VertexFunction::constant(n, 2.0)));
        let df = 3f64.ln() / 2f64.ln();
        let dw = 5f64.ln() / 2f64.ln();
        let est = nash_constant_estimate(&g, df, dw, &family, Some(1.0)).unwrap();
        assert!(est.c_n > 0.0 && est.c_n.is_finite());
        assert_eq!(est.excluded, 1);
        assert!(est.c_n_from_ondiag.unwrap() > 0.0);
    }
}
