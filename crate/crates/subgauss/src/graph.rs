//! Discrete metric measure Dirichlet space: weighted graphs, the bilinear
//! energy form, its vertex-level energy measure, and the generator.
//!
//! A [`WeightedGraph`] is a finite connected graph with strictly positive
//! edge conductances `c_xy` and a strictly positive vertex measure `mu`.
//! The metric is the shortest-path distance with unit edge lengths, so all
//! distances are integers. Balls are closed: `B(x,r) = {y : d(x,y) <= r}`.
//!
//! The Dirichlet form is
//! `E(f,g) = 1/2 sum_{x,y} c_xy (f(x)-f(y)) (g(x)-g(y))`
//! and its energy measure assigns half of each edge's contribution to each
//! endpoint, which makes the defining identity
//! `sum_x h(x) G(f,f)(x) = E(f,fh) - 1/2 E(f^2,h)` hold exactly.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::fit::{loglog_fit, ScalingFit};

/// Vertex measure used when building a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MeasureKind {
    /// `mu(x) = sum_y c_xy`, which makes the continuous-time walk jump at
    /// rate one and the heat semigroup mu-symmetric automatically.
    RandomWalk,
    /// `mu(x) = 1`.
    Counting,
}

impl std::str::FromStr for MeasureKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random_walk" => Ok(MeasureKind::RandomWalk),
            "counting" => Ok(MeasureKind::Counting),
            other => Err(Error::Configuration(format!(
                "measure must be 'random_walk' or 'counting', got '{other}'"
            ))),
        }
    }
}

/// A real-valued function on the vertices of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexFunction(pub Vec<f64>);

impl VertexFunction {
    pub fn new(values: Vec<f64>) -> Self {
        VertexFunction(values)
    }

    pub fn zeros(n: usize) -> Self {
        VertexFunction(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        VertexFunction(vec![value; n])
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> f64) -> Self {
        VertexFunction((0..n).map(f).collect())
    }

    /// Indicator of a single vertex.
    pub fn indicator(n: usize, x: usize) -> Self {
        let mut v = vec![0.0; n];
        v[x] = 1.0;
        VertexFunction(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        VertexFunction(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.0.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl std::ops::Index<usize> for VertexFunction {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for VertexFunction {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Vertex-level density of the energy measure `Gamma(f,g)`. Signed in
/// general; nonnegative when `f == g`. Its total mass equals `E(f,g)`
/// exactly.
#[derive(Debug, Clone)]
pub struct EnergyMeasure {
    pub density: Vec<f64>,
}

impl EnergyMeasure {
    pub fn total_mass(&self) -> f64 {
        self.density.iter().sum()
    }

    /// Total-variation norm, `sum_x |density(x)|`.
    pub fn tv_norm(&self) -> f64 {
        self.density.iter().map(|d| d.abs()).sum()
    }
}

/// An undirected edge with conductance. Stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub c: f64,
}

/// Finite metric measure space with a discrete Dirichlet form.
///
/// Immutable after construction; all operations are pure and safe to call
/// concurrently. Shortest-path distance rows are cached lazily behind a
/// lock, so concurrent readers see consistent values.
#[derive(Debug)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, f64)>>,
    mu: Vec<f64>,
    coords: Option<Vec<(f64, f64)>>,
    boundary: Vec<bool>,
    dist_cache: RwLock<HashMap<usize, Arc<Vec<u32>>>>,
}

impl WeightedGraph {
    /// Build a graph from an edge list. Vertices are `0..n`. Fails unless
    /// the graph is connected and every conductance is strictly positive.
    pub fn new(n: usize, edge_list: &[(usize, usize, f64)], measure: MeasureKind) -> Result<Self> {
        let mut g = Self::from_parts(n, edge_list, None, None)?;
        g.mu = g.measure_values(measure);
        Ok(g)
    }

    /// Build with explicit vertex measures (used by deserialization).
    pub fn with_measures(
        n: usize,
        edge_list: &[(usize, usize, f64)],
        mu: Vec<f64>,
        coords: Option<Vec<(f64, f64)>>,
    ) -> Result<Self> {
        Self::from_parts(n, edge_list, Some(mu), coords)
    }

    fn from_parts(
        n: usize,
        edge_list: &[(usize, usize, f64)],
        mu: Option<Vec<f64>>,
        coords: Option<Vec<(f64, f64)>>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Configuration("graph needs at least one vertex".into()));
        }
        let mut edges = Vec::with_capacity(edge_list.len());
        let mut adj = vec![Vec::new(); n];
        for &(a, b, c) in edge_list {
            if a >= n || b >= n {
                return Err(Error::UnknownVertex(a.max(b)));
            }
            if a == b {
                return Err(Error::Configuration(format!("self-loop at vertex {a}")));
            }
            if !(c > 0.0) {
                return Err(Error::Configuration(format!(
                    "conductance on edge ({a},{b}) must be strictly positive, got {c}"
                )));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            edges.push(Edge { u, v, c });
            adj[u].push((v, c));
            adj[v].push((u, c));
        }
        edges.sort_by(|e1, e2| (e1.u, e1.v).cmp(&(e2.u, e2.v)));
        for row in &mut adj {
            row.sort_by(|a, b| a.0.cmp(&b.0));
        }
        let mu = match mu {
            Some(m) => {
                if m.len() != n {
                    return Err(Error::DimensionMismatch {
                        context: "vertex measure",
                        expected: n,
                        got: m.len(),
                    });
                }
                if let Some(bad) = m.iter().position(|&v| !(v > 0.0)) {
                    return Err(Error::Configuration(format!(
                        "vertex measure at {bad} must be strictly positive"
                    )));
                }
                m
            }
            None => vec![1.0; n],
        };
        if let Some(ref cs) = coords {
            if cs.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "vertex coordinates",
                    expected: n,
                    got: cs.len(),
                });
            }
        }
        let g = WeightedGraph {
            n,
            edges,
            adj,
            mu,
            coords,
            boundary: vec![false; n],
            dist_cache: RwLock::new(HashMap::new()),
        };
        if !g.is_connected() {
            return Err(Error::Configuration("graph is not connected".into()));
        }
        Ok(g)
    }

    fn measure_values(&self, kind: MeasureKind) -> Vec<f64> {
        match kind {
            MeasureKind::Counting => vec![1.0; self.n],
            MeasureKind::RandomWalk => (0..self.n)
                .map(|x| self.adj[x].iter().map(|&(_, c)| c).sum())
                .collect(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adj[x]
    }

    pub fn mu(&self, x: usize) -> f64 {
        self.mu[x]
    }

    pub fn mu_values(&self) -> &[f64] {
        &self.mu
    }

    pub fn total_mass(&self) -> f64 {
        self.mu.iter().sum()
    }

    pub fn min_mu(&self) -> f64 {
        self.mu.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn coords(&self) -> Option<&[(f64, f64)]> {
        self.coords.as_deref()
    }

    /// Mark a set of vertices as the geometric boundary. Builders tag the
    /// truncation boundary so scaling fits can stay away from it.
    pub fn set_boundary(&mut self, vertices: &[usize]) {
        for &v in vertices {
            self.boundary[v] = true;
        }
    }

    pub fn is_boundary(&self, x: usize) -> bool {
        self.boundary[x]
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.n).filter(|&x| self.boundary[x]).collect()
    }

    /// Distance from `x` to the nearest tagged boundary vertex, or `None`
    /// when the graph has no tagged boundary.
    pub fn distance_to_boundary(&self, x: usize) -> Option<u32> {
        if !self.boundary.iter().any(|&b| b) {
            return None;
        }
        let d = self.distances_from(x);
        Some(
            (0..self.n)
                .filter(|&v| self.boundary[v])
                .map(|v| d[v])
                .min()
                .unwrap(),
        )
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for &(y, _) in &self.adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        count == self.n
    }

    /// Shortest-path distances (unit edge lengths) from `x` to all vertices.
    pub fn distances_from(&self, x: usize) -> Arc<Vec<u32>> {
        if let Some(row) = self.dist_cache.read().unwrap().get(&x) {
            return Arc::clone(row);
        }
        let mut dist = vec![u32::MAX; self.n];
        dist[x] = 0;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(x);
        while let Some(u) = queue.pop_front() {
            let du = dist[u];
            for &(v, _) in &self.adj[u] {
                if dist[v] == u32::MAX {
                    dist[v] = du + 1;
                    queue.push_back(v);
                }
            }
        }
        let row = Arc::new(dist);
        self.dist_cache
            .write()
            .unwrap()
            .insert(x, Arc::clone(&row));
        row
    }

    pub fn distance(&self, x: usize, y: usize) -> Result<u32> {
        if x >= self.n {
            return Err(Error::UnknownVertex(x));
        }
        if y >= self.n {
            return Err(Error::UnknownVertex(y));
        }
        Ok(self.distances_from(x)[y])
    }

    /// Graph diameter (exact, via one BFS per vertex; cached rows).
    pub fn diameter(&self) -> u32 {
        (0..self.n)
            .map(|x| *self.distances_from(x).iter().max().unwrap())
            .max()
            .unwrap()
    }

    /// Vertices of the closed ball `B(x,r) = {y : d(x,y) <= r}`.
    pub fn ball(&self, x: usize, r: u32) -> Result<Vec<usize>> {
        if x >= self.n {
            return Err(Error::UnknownVertex(x));
        }
        let d = self.distances_from(x);
        Ok((0..self.n).filter(|&y| d[y] <= r).collect())
    }

    /// `V(x,r)`, the mu-mass of the closed ball.
    pub fn ball_volume(&self, x: usize, r: f64) -> Result<f64> {
        if x >= self.n {
            return Err(Error::UnknownVertex(x));
        }
        if r < 0.0 {
            return Err(Error::Domain(format!("radius must be nonnegative, got {r}")));
        }
        let d = self.distances_from(x);
        Ok((0..self.n)
            .filter(|&y| (d[y] as f64) <= r)
            .map(|y| self.mu[y])
            .sum())
    }

    fn check_len(&self, f: &VertexFunction, context: &'static str) -> Result<()> {
        if f.len() != self.n {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.n,
                got: f.len(),
            });
        }
        Ok(())
    }

    /// The Dirichlet form `E(f,g) = 1/2 sum_{x,y} c_xy (f(x)-f(y))(g(x)-g(y))`,
    /// summed once per undirected edge.
    pub fn dirichlet_energy(&self, f: &VertexFunction, g: &VertexFunction) -> Result<f64> {
        self.check_len(f, "dirichlet_energy f")?;
        self.check_len(g, "dirichlet_energy g")?;
        Ok(self
            .edges
            .iter()
            .map(|e| e.c * (f[e.u] - f[e.v]) * (g[e.u] - g[e.v]))
            .sum())
    }

    /// Energy-measure density `Gamma(f,g)(x) = 1/2 sum_y c_xy (f(x)-f(y))(g(x)-g(y))`.
    pub fn energy_measure(&self, f: &VertexFunction, g: &VertexFunction) -> Result<EnergyMeasure> {
        self.check_len(f, "energy_measure f")?;
        self.check_len(g, "energy_measure g")?;
        let mut density = vec![0.0; self.n];
        for e in &self.edges {
            let half = 0.5 * e.c * (f[e.u] - f[e.v]) * (g[e.u] - g[e.v]);
            density[e.u] += half;
            density[e.v] += half;
        }
        Ok(EnergyMeasure { density })
    }

    /// Generator of the mu-symmetric form:
    /// `Lf(x) = mu(x)^{-1} sum_y c_xy (f(x)-f(y))`, so that
    /// `<Lf, g>_mu = E(f,g)`.
    pub fn laplacian_apply(&self, f: &VertexFunction) -> Result<VertexFunction> {
        self.check_len(f, "laplacian_apply f")?;
        let mut out = vec![0.0; self.n];
        for e in &self.edges {
            let diff = f[e.u] - f[e.v];
            out[e.u] += e.c * diff;
            out[e.v] -= e.c * diff;
        }
        for (x, v) in out.iter_mut().enumerate() {
            *v /= self.mu[x];
        }
        Ok(VertexFunction(out))
    }

    /// mu-weighted inner product `<f,g>_mu`.
    pub fn inner(&self, f: &VertexFunction, g: &VertexFunction) -> Result<f64> {
        self.check_len(f, "inner f")?;
        self.check_len(g, "inner g")?;
        Ok((0..self.n).map(|x| f[x] * g[x] * self.mu[x]).sum())
    }

    /// mu-weighted L^p norm. `p = f64::INFINITY` gives the sup norm.
    /// Large `p` is handled by rescaling so `f^p` never overflows.
    pub fn lp_norm(&self, f: &VertexFunction, p: f64) -> Result<f64> {
        self.check_len(f, "lp_norm f")?;
        if p.is_infinite() {
            return Ok(f.max_abs());
        }
        if !(p >= 1.0) {
            return Err(Error::Domain(format!("norm exponent must be >= 1, got {p}")));
        }
        let m = f.max_abs();
        if m == 0.0 {
            return Ok(0.0);
        }
        let sum: f64 = (0..self.n)
            .map(|x| (f[x].abs() / m).powf(p) * self.mu[x])
            .sum();
        Ok(m * sum.powf(1.0 / p))
    }

    /// Ahlfors-regularity fit: least-squares exponent of `log V(x,r)` against
    /// `log r`, pooled over centers, plus the range of `V(x,r)/r^df`.
    ///
    /// Radii must lie in `[1, diam/2]` and centers must be farther from the
    /// tagged boundary than the largest radius.
    pub fn ahlfors_fit(&self, centers: &[usize], radii: &[u32]) -> Result<ScalingFit> {
        let mut rs: Vec<u32> = radii.to_vec();
        rs.sort_unstable();
        rs.dedup();
        if rs.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "ahlfors fit needs at least 3 distinct radii, got {}",
                rs.len()
            )));
        }
        if centers.is_empty() {
            return Err(Error::InsufficientData("ahlfors fit needs at least one center".into()));
        }
        let diam = self.diameter();
        let rmax = *rs.last().unwrap();
        if rs[0] < 1 || rmax > diam / 2 {
            return Err(Error::Configuration(format!(
                "radii must lie in [1, diam/2] = [1, {}]",
                diam / 2
            )));
        }
        for &x in centers {
            if x >= self.n {
                return Err(Error::UnknownVertex(x));
            }
            if let Some(db) = self.distance_to_boundary(x) {
                if db <= rmax {
                    return Err(Error::Boundary {
                        center: x,
                        radius: rmax as usize,
                    });
                }
            }
        }
        let mut samples = Vec::with_capacity(centers.len() * rs.len());
        for &x in centers {
            for &r in &rs {
                let v = self.ball_volume(x, r as f64)?;
                samples.push((r as f64, v));
            }
        }
        let fit = loglog_fit(&samples)?;
        let df = fit.exponent;
        let mut c_low = f64::INFINITY;
        let mut c_high = f64::NEG_INFINITY;
        for &(r, v) in &samples {
            let ratio = v / r.powf(df);
            c_low = c_low.min(ratio);
            c_high = c_high.max(ratio);
        }
        Ok(ScalingFit {
            exponent: df,
            c_low,
            c_high,
            residual_rms: fit.residual_rms,
            samples,
        })
    }

    /// Serialize as plain text: one line per vertex (`v mu [x y]`), then one
    /// line per edge (`u v c`). Floats use the shortest representation that
    /// round-trips exactly.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for v in 0..self.n {
            match self.coords.as_ref().map(|c| c[v]) {
                Some((x, y)) => {
                    let _ = writeln!(out, "{} {} {} {}", v, self.mu[v], x, y);
                }
                None => {
                    let _ = writeln!(out, "{} {}", v, self.mu[v]);
                }
            }
        }
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.u, e.v, e.c);
        }
        out
    }

    /// Parse the plain-text edge-list format written by [`Self::to_edge_list`].
    /// Lines with 2 or 4 tokens declare vertices, lines with 3 tokens edges.
    /// `#` starts a comment.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut mus: Vec<(usize, f64)> = Vec::new();
        let mut coords: Vec<(usize, (f64, f64))> = Vec::new();
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let parse_usize = |s: &str| -> Result<usize> {
                s.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: format!("expected vertex id, got '{s}'"),
                })
            };
            let parse_f64 = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: format!("expected number, got '{s}'"),
                })
            };
            match toks.len() {
                2 => mus.push((parse_usize(toks[0])?, parse_f64(toks[1])?)),
                4 => {
                    let v = parse_usize(toks[0])?;
                    mus.push((v, parse_f64(toks[1])?));
                    coords.push((v, (parse_f64(toks[2])?, parse_f64(toks[3])?)));
                }
                3 => edges.push((
                    parse_usize(toks[0])?,
                    parse_usize(toks[1])?,
                    parse_f64(toks[2])?,
                )),
                k => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: format!("expected 2, 3 or 4 tokens, got {k}"),
                    })
                }
            }
        }
        let n = mus.len();
        if n == 0 {
            return Err(Error::Parse {
                line: 0,
                message: "no vertex lines found".into(),
            });
        }
        let mut mu = vec![f64::NAN; n];
        for (v, m) in mus {
            if v >= n {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("vertex id {v} out of range (expected 0..{n})"),
                });
            }
            mu[v] = m;
        }
        if mu.iter().any(|m| m.is_nan()) {
            return Err(Error::Parse {
                line: 0,
                message: "vertex ids must cover 0..n exactly once".into(),
            });
        }
        let coord_vec = if coords.len() == n {
            let mut cs = vec![(0.0, 0.0); n];
            for (v, c) in coords {
                cs[v] = c;
            }
            Some(cs)
        } else {
            None
        };
        Self::with_measures(n, &edges, mu, coord_vec)
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_edge_list())?;
        Ok(())
    }

    pub fn read_edge_list(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_edge_list(&text)
    }
}
