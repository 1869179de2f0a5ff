//! Least-squares fitting helpers: power-law exponents for volume and
//! exit-time scaling, and the sub-Gaussian kernel fit.

use serde::Serialize;

use crate::error::{Error, Result};

/// Result of a straight-line least-squares fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub residual_rms: f64,
}

/// Unweighted least squares. Fails when fewer than two distinct x values.
pub fn linear_fit(xy: &[(f64, f64)]) -> Result<LineFit> {
    weighted_linear_fit(&xy.iter().map(|&(x, y)| (x, y, 1.0)).collect::<Vec<_>>())
}

/// Weighted least squares for `y = a + b x` with nonnegative weights.
pub fn weighted_linear_fit(xyw: &[(f64, f64, f64)]) -> Result<LineFit> {
    let pts: Vec<_> = xyw.iter().filter(|&&(_, _, w)| w > 0.0).collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData(
            "linear fit needs at least 2 weighted points".into(),
        ));
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx: f64 = pts.iter().map(|p| p.0 * p.2).sum::<f64>() / sw;
    let my: f64 = pts.iter().map(|p| p.1 * p.2).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientData(
            "linear fit is rank deficient (no variation in x)".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let syy: f64 = pts.iter().map(|p| p.2 * (p.1 - my) * (p.1 - my)).sum();
    let sse: f64 = pts
        .iter()
        .map(|p| {
            let e = p.1 - intercept - slope * p.0;
            p.2 * e * e
        })
        .sum();
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    let residual_rms = (sse / sw).sqrt();
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
        residual_rms,
    })
}

/// Weighted least squares for `y = a + b x1 + c x2` via the 3x3 normal
/// equations. Fails when the design is rank deficient.
pub fn weighted_plane_fit(rows: &[(f64, f64, f64, f64)]) -> Result<(f64, f64, f64)> {
    let pts: Vec<_> = rows.iter().filter(|r| r.3 > 0.0).collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(
            "plane fit needs at least 3 weighted points".into(),
        ));
    }
    // Normal matrix for design [1, x1, x2].
    let mut m = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for &&(x1, x2, y, w) in &pts {
        let row = [1.0, x1, x2];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += w * row[i] * row[j];
            }
            b[i] += w * row[i] * y;
        }
    }
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    let scale: f64 = m.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    if d.abs() <= 1e-12 * scale.powi(3).max(1e-300) {
        return Err(Error::InsufficientData(
            "plane fit is rank deficient".into(),
        ));
    }
    let mut sol = [0.0f64; 3];
    for k in 0..3 {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = b[i];
        }
        sol[k] = det(&mk) / d;
    }
    Ok((sol[0], sol[1], sol[2]))
}

/// Power-law fit `y ~ amplitude * x^exponent` by least squares in log-log
/// coordinates.
#[derive(Debug, Clone, Copy)]
pub struct LogLogFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub r_squared: f64,
    pub residual_rms: f64,
}

pub fn loglog_fit(samples: &[(f64, f64)]) -> Result<LogLogFit> {
    let logs: Vec<(f64, f64)> = samples
        .iter()
        .filter(|&&(x, y)| x > 0.0 && y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    let fit = linear_fit(&logs)?;
    Ok(LogLogFit {
        exponent: fit.slope,
        amplitude: fit.intercept.exp(),
        r_squared: fit.r_squared,
        residual_rms: fit.residual_rms,
    })
}

/// Scaling-exponent estimate with a multiplicative constant range, as used
/// for the volume-growth and walk-dimension fits.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub c_low: f64,
    pub c_high: f64,
    pub residual_rms: f64,
    /// The (x, y) samples that entered the fit.
    pub samples: Vec<(f64, f64)>,
}

impl ScalingFit {
    pub fn validate(&self) -> Result<()> {
        if !self.exponent.is_finite() {
            return Err(Error::Numerical("scaling exponent is not finite".into()));
        }
        if self.c_low > self.c_high {
            return Err(Error::Numerical(
                "scaling constant range is inverted".into(),
            ));
        }
        Ok(())
    }
}

/// One heat-kernel sample for the sub-Gaussian fit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KernelSample {
    pub pair_id: usize,
    pub d: f64,
    pub t: f64,
    pub p: f64,
}

/// Result of fitting `p_t(x,y) ~ C1 t^{-df/dw} exp(-C2 (d^dw/t)^{1/(dw-1)})`
/// against exact kernel samples.
#[derive(Debug, Clone, Serialize)]
pub struct SubGaussianFit {
    /// Freely fitted exponent of the `t^{-a}` prefactor (target `df/dw`).
    pub prefactor_exponent: f64,
    /// Freely fitted stretched exponent (target `1/(dw-1)`).
    pub stretched_exponent: f64,
    /// Prefactor constant of the linearized fit.
    pub c1: f64,
    /// Exponential-rate constant of the linearized fit.
    pub c2: f64,
    /// R^2 of the linearized fit with the theoretical exponents.
    pub r_squared: f64,
    /// Number of nonpositive kernel samples dropped before fitting.
    pub filtered: usize,
    /// Per-sample residuals of the linearized fit, keyed by pair id.
    pub residuals: Vec<(usize, f64)>,
}

impl SubGaussianFit {
    pub fn validate(&self) -> Result<()> {
        if !(self.stretched_exponent > 0.0) {
            return Err(Error::Numerical(
                "stretched exponent must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.r_squared) {
            return Err(Error::Numerical("R^2 outside [0,1]".into()));
        }
        Ok(())
    }
}

/// Fit the sub-Gaussian upper-bound shape to exact kernel samples.
///
/// Samples must satisfy `t in [d, d^dw]`; others are rejected. Samples with
/// nonpositive kernel values are filtered out (counted in the report).
/// Points near the on-diagonal branch (`t` close to `d^dw`) carry reduced
/// weight since the exponential term degenerates there.
pub fn fit_subgaussian(samples: &[KernelSample], df: f64, dw: f64) -> Result<SubGaussianFit> {
    if dw <= 1.0 {
        return Err(Error::Domain(format!("dw must exceed 1, got {dw}")));
    }
    let mut filtered = 0usize;
    let mut rows: Vec<(usize, f64, f64, f64)> = Vec::new(); // (pair, x, y_lin, weight) with y_lin = -ln(p t^{df/dw})
    let mut raw: Vec<(usize, f64, f64, f64)> = Vec::new(); // (pair, ln t, ratio, weight)
    for s in samples {
        if !(s.p > 0.0) {
            filtered += 1;
            continue;
        }
        if s.d <= 0.0 || s.t < s.d || s.t > s.d.powf(dw) {
            return Err(Error::Domain(format!(
                "sample (d={}, t={}) outside the window [d, d^dw]",
                s.d, s.t
            )));
        }
        let ratio = s.d.powf(dw) / s.t;
        // Down-weight samples near the branch point d^dw = t, where the
        // stretched exponential carries no signal.
        let weight = (ratio.ln() / 4f64.ln()).clamp(0.0, 1.0);
        let x = ratio.powf(1.0 / (dw - 1.0));
        let y = -(s.p.ln() + df / dw * s.t.ln());
        rows.push((s.pair_id, x, y, weight));
        raw.push((s.pair_id, s.t.ln(), ratio, weight));
    }
    let usable = rows.iter().filter(|r| r.3 > 0.0).count();
    if usable < 20 {
        return Err(Error::InsufficientData(format!(
            "sub-Gaussian fit needs at least 20 usable samples, got {usable}"
        )));
    }
    let distinct_t: std::collections::BTreeSet<u64> =
        raw.iter().map(|r| r.1.to_bits()).collect();
    if distinct_t.len() < 2 {
        return Err(Error::InsufficientData(
            "sub-Gaussian fit needs samples at more than one time".into(),
        ));
    }

    // Linearized fit with the theoretical exponents.
    let lin_pts: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r.1, r.2, r.3)).collect();
    let lin = weighted_linear_fit(&lin_pts)?;
    let c1 = (-lin.intercept).exp();
    let c2 = lin.slope;
    let residuals: Vec<(usize, f64)> = rows
        .iter()
        .map(|r| (r.0, r.2 - lin.intercept - lin.slope * r.1))
        .collect();

    // Free prefactor exponent: -ln p = a + alpha ln t + c X.
    let plane_rows: Vec<(f64, f64, f64, f64)> = rows
        .iter()
        .zip(&raw)
        .map(|(r, q)| {
            let neg_ln_p = r.2 + df / dw * q.1;
            (q.1, r.1, neg_ln_p, r.3)
        })
        .collect();
    let (_, prefactor_exponent, _) = weighted_plane_fit(&plane_rows)?;

    // Free stretched exponent: golden-section search on the weighted SSE of
    // y_lin = a + c * ratio^beta.
    let sse_for = |beta: f64| -> f64 {
        let pts: Vec<(f64, f64, f64)> = rows
            .iter()
            .zip(&raw)
            .map(|(r, q)| (q.2.powf(beta), r.2, r.3))
            .collect();
        match weighted_linear_fit(&pts) {
            Ok(f) => f.residual_rms * f.residual_rms,
            Err(_) => f64::INFINITY,
        }
    };
    let stretched_exponent = golden_section_min(sse_for, 0.15, 2.5, 1e-5);

    let fit = SubGaussianFit {
        prefactor_exponent,
        stretched_exponent,
        c1,
        c2,
        r_squared: lin.r_squared,
        filtered,
        residuals,
    };
    fit.validate()?;
    Ok(fit)
}

fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
