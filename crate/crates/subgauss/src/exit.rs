//! Mean exit times of the continuous-time walk and the walk-dimension fit.
//!
//! The walk jumps from `x` at rate `c_xy / mu(x)`; its generator is the
//! graph Laplacian of the mu-symmetric form. The mean time `m(v)` to reach
//! distance `>= r` from the center solves `L m = 1` on the open ball
//! `{d < r}` with `m = 0` outside, one dense linear solve per radius.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::fit::{loglog_fit, ScalingFit};
use crate::graph::WeightedGraph;
use crate::linalg::solve_dense;

/// Mean exit times from balls around one center, per radius.
#[derive(Debug, Clone)]
pub struct ExitTimeProfile {
    pub center: usize,
    /// `(r, m(x,r))` sorted by radius; strictly increasing in `r`.
    pub samples: Vec<(u32, f64)>,
}

impl ExitTimeProfile {
    pub fn validate(&self) -> Result<()> {
        for w in self.samples.windows(2) {
            if !(w[1].1 > w[0].1) {
                return Err(Error::Numerical(format!(
                    "exit times not strictly increasing at r = {}",
                    w[1].0
                )));
            }
        }
        if let Some(&(_, m0)) = self.samples.first() {
            if m0 < 0.0 {
                return Err(Error::Numerical("negative exit time".into()));
            }
        }
        Ok(())
    }
}

/// Mean exit times `m(x, r)` for each requested radius.
///
/// The ball must stay clear of the tagged graph boundary: a boundary vertex
/// strictly inside the open ball would have truncated neighborhoods and
/// distort the result.
pub fn mean_exit_times(g: &WeightedGraph, x: usize, radii: &[u32]) -> Result<ExitTimeProfile> {
    if x >= g.vertex_count() {
        return Err(Error::UnknownVertex(x));
    }
    let mut rs: Vec<u32> = radii.to_vec();
    rs.sort_unstable();
    rs.dedup();
    let dist = g.distances_from(x);
    let rmax = rs.last().copied().unwrap_or(0);
    if let Some(db) = g.distance_to_boundary(x) {
        if db < rmax {
            return Err(Error::Boundary {
                center: x,
                radius: rmax as usize,
            });
        }
    }
    let mut samples = Vec::with_capacity(rs.len());
    for &r in &rs {
        if r == 0 {
            // the open ball is empty: the walk starts outside
            samples.push((0, 0.0));
            continue;
        }
        let inside: Vec<usize> = (0..g.vertex_count()).filter(|&v| dist[v] < r).collect();
        let index: std::collections::HashMap<usize, usize> =
            inside.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let k = inside.len();
        let mut a = Array2::<f64>::zeros((k, k));
        let mut b = Array1::<f64>::zeros(k);
        for (i, &v) in inside.iter().enumerate() {
            let mut diag = 0.0;
            for &(w, c) in g.neighbors(v) {
                diag += c;
                if let Some(&j) = index.get(&w) {
                    a[[i, j]] -= c;
                }
            }
            a[[i, i]] += diag;
            b[i] = g.mu(v);
        }
        let m = solve_dense(&a, &b)?;
        samples.push((r, m[index[&x]]));
    }
    let profile = ExitTimeProfile { center: x, samples };
    profile.validate()?;
    Ok(profile)
}

/// Pooled least-squares exponent of `log m(x,r)` against `log r` over all
/// profiles: the walk-dimension estimate.
pub fn fit_walk_dimension(profiles: &[ExitTimeProfile]) -> Result<ScalingFit> {
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for p in profiles {
        let positive: Vec<(f64, f64)> = p
            .samples
            .iter()
            .filter(|&&(r, m)| r > 0 && m > 0.0)
            .map(|&(r, m)| (r as f64, m))
            .collect();
        if positive.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "walk-dimension fit needs at least 3 radii per profile, got {}",
                positive.len()
            )));
        }
        samples.extend(positive);
    }
    if samples.is_empty() {
        return Err(Error::InsufficientData("no exit-time profiles supplied".into()));
    }
    let fit = loglog_fit(&samples)?;
    let dw = fit.exponent;
    let (mut c_low, mut c_high) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(r, m) in &samples {
        let ratio = m / r.powf(dw);
        c_low = c_low.min(ratio);
        c_high = c_high.max(ratio);
    }
    let out = ScalingFit {
        exponent: dw,
        c_low,
        c_high,
        residual_rms: fit.residual_rms,
        samples,
    };
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_lattice, build_sierpinski};
    use crate::graph::MeasureKind;

    #[test]
    fn radius_zero_means_already_outside() {
        let g = build_lattice(1, 9, MeasureKind::Counting).unwrap();
        let p = mean_exit_times(&g, 4, &[0]).unwrap();
        assert_eq!(p.samples, vec![(0, 0.0)]);
    }

    #[test]
    fn unit_radius_on_path_is_half() {
        // unit rates (counting measure): total rate 2 at the center, so the
        // time to leave {center} is 1/2. The 1x1 system is 2 m = 1.
        let g = build_lattice(1, 9, MeasureKind::Counting).unwrap();
        let p = mean_exit_times(&g, 4, &[1]).unwrap();
        assert!((p.samples[0].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn random_walk_measure_matches_step_count() {
        // with mu = sum of conductances the walk jumps at rate one, so the
        // exit time from {center} is exactly one step.
        let g = build_lattice(1, 9, MeasureKind::RandomWalk).unwrap();
        let p = mean_exit_times(&g, 4, &[1]).unwrap();
        assert!((p.samples[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exit_times_strictly_increase() {
        let g = build_lattice(2, 15, MeasureKind::RandomWalk).unwrap();
        let center = 7 + 7 * 15;
        let p = mean_exit_times(&g, center, &[1, 2, 3, 4, 5, 6]).unwrap();
        for w in p.samples.windows(2) {
            assert!(w[1].1 > w[0].1);
        }
    }

    #[test]
    fn boundary_contact_rejected() {
        let g = build_lattice(1, 9, MeasureKind::Counting).unwrap();
        // center 4 is 4 steps from the endpoint; radius 5 puts a boundary
        // vertex strictly inside the open ball
        assert!(matches!(
            mean_exit_times(&g, 4, &[5]),
            Err(Error::Boundary { .. })
        ));
    }

    #[test]
    fn lattice_walk_dimension_is_two() {
        let g = build_lattice(2, 31, MeasureKind::RandomWalk).unwrap();
        let side = 31;
        let centers = [15 + 15 * side, 14 + 15 * side, 15 + 14 * side];
        let radii = [2, 3, 4, 6, 8, 11, 14];
        let profiles: Vec<_> = centers
            .iter()
            .map(|&c| mean_exit_times(&g, c, &radii).unwrap())
            .collect();
        let fit = fit_walk_dimension(&profiles).unwrap();
        assert!(
            fit.exponent > 1.85 && fit.exponent < 2.15,
            "lattice dw = {}",
            fit.exponent
        );
    }

    #[test]
    fn gasket_walk_dimension_near_log5_log2() {
        let g = build_sierpinski(5, MeasureKind::RandomWalk).unwrap();
        // vertex with all corner distances 24: lattice coordinate (16, 8)
        let coords = g.coords().unwrap();
        let sqrt3 = 3f64.sqrt();
        let target = (16.0 + 0.5 * 8.0, 8.0 * sqrt3 / 2.0);
        let center = (0..g.vertex_count())
            .find(|&v| {
                (coords[v].0 - target.0).abs() < 1e-9 && (coords[v].1 - target.1).abs() < 1e-9
            })
            .unwrap();
        let radii = [2, 3, 4, 6, 8, 11, 16];
        let profile = mean_exit_times(&g, center, &radii).unwrap();
        let fit = fit_walk_dimension(&[profile]).unwrap();
        let target_dw = 5f64.ln() / 2f64.ln();
        assert!(
            (fit.exponent - target_dw).abs() < 0.25,
            "gasket dw = {} (target {})",
            fit.exponent,
            target_dw
        );
    }

    #[test]
    fn two_radii_is_insufficient() {
        let g = build_lattice(1, 9, MeasureKind::Counting).unwrap();
        let p = mean_exit_times(&g, 4, &[1, 2]).unwrap();
        assert!(matches!(
            fit_walk_dimension(&[p]),
            Err(Error::InsufficientData(_))
        ));
    }
}
