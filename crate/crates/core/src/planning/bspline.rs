use super::grid::{GridPath, OccupancyGrid};
use super::PlanningError;

const DEGREE: usize = 3;

/// Clamped uniform B-spline of arbitrary degree on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
struct BSpline {
    degree: usize,
    knots: Vec<f64>,
    points: Vec<[f64; 2]>,
}

impl BSpline {
    fn clamped(degree: usize, points: Vec<[f64; 2]>) -> Self {
        let n = points.len();
        let interior = n - degree; // number of spans
        let mut knots = Vec::with_capacity(n + degree + 1);
        knots.extend(std::iter::repeat_n(0.0, degree + 1));
        for i in 1..interior {
            knots.push(i as f64 / interior as f64);
        }
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        BSpline {
            degree,
            knots,
            points,
        }
    }

    fn span(&self, u: f64) -> usize {
        let n = self.points.len();
        let p = self.degree;
        if u >= self.knots[n] {
            return n - 1;
        }
        if u <= self.knots[p] {
            return p;
        }
        // last k in [p, n-1] with knots[k] <= u
        let mut lo = p;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.knots[mid] <= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// de Boor evaluation.
    fn eval(&self, u: f64) -> [f64; 2] {
        let p = self.degree;
        if p == 0 {
            return self.points[self.span(u).min(self.points.len() - 1)];
        }
        let u = u.clamp(0.0, 1.0);
        let k = self.span(u);
        let mut d: Vec<[f64; 2]> = (0..=p).map(|j| self.points[j + k - p]).collect();
        for r in 1..=p {
            for j in (r..=p).rev() {
                let i = j + k - p;
                let denom = self.knots[i + p + 1 - r] - self.knots[i];
                let alpha = if denom > 0.0 { (u - self.knots[i]) / denom } else { 0.0 };
                d[j] = [
                    (1.0 - alpha) * d[j - 1][0] + alpha * d[j][0],
                    (1.0 - alpha) * d[j - 1][1] + alpha * d[j][1],
                ];
            }
        }
        d[p]
    }

    fn derivative(&self) -> BSpline {
        let p = self.degree;
        assert!(p > 0);
        let points = self
            .points
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let denom = self.knots[i + p + 1] - self.knots[i + 1];
                let s = if denom > 0.0 { p as f64 / denom } else { 0.0 };
                [s * (w[1][0] - w[0][0]), s * (w[1][1] - w[0][1])]
            })
            .collect();
        BSpline {
            degree: p - 1,
            knots: self.knots[1..self.knots.len() - 1].to_vec(),
            points,
        }
    }
}

/// Clamped cubic B-spline path in world coordinates, parameterised on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothPath {
    curve: BSpline,
    first: BSpline,
    second: BSpline,
}

impl SmoothPath {
    pub fn new(control_points: Vec<[f64; 2]>) -> Result<Self, PlanningError> {
        if control_points.len() < DEGREE + 1 {
            return Err(PlanningError::TooFewPoints(control_points.len()));
        }
        let curve = BSpline::clamped(DEGREE, control_points);
        let first = curve.derivative();
        let second = first.derivative();
        Ok(SmoothPath {
            curve,
            first,
            second,
        })
    }

    pub fn control_points(&self) -> &[[f64; 2]] {
        &self.curve.points
    }

    pub fn knots(&self) -> &[f64] {
        &self.curve.knots
    }

    pub fn degree(&self) -> usize {
        DEGREE
    }

    pub fn point(&self, u: f64) -> [f64; 2] {
        self.curve.eval(u)
    }

    pub fn derivative(&self, u: f64) -> [f64; 2] {
        self.first.eval(u)
    }

    pub fn second_derivative(&self, u: f64) -> [f64; 2] {
        self.second.eval(u)
    }

    pub fn speed(&self, u: f64) -> f64 {
        let d = self.derivative(u);
        d[0].hypot(d[1])
    }

    /// Distinct interior knot values (span boundaries inside `(0, 1)`).
    pub fn interior_knots(&self) -> Vec<f64> {
        let mut ks: Vec<f64> = self
            .curve
            .knots
            .iter()
            .copied()
            .filter(|k| *k > 0.0 && *k < 1.0)
            .collect();
        ks.dedup();
        ks
    }

    /// Arc length between parameters `a <= b`.
    pub fn arc_length_between(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut breaks = vec![a];
        breaks.extend(self.interior_knots().into_iter().filter(|k| *k > a && *k < b));
        breaks.push(b);
        breaks
            .windows(2)
            .map(|w| adaptive_gauss_legendre(&|u| self.speed(u), w[0], w[1], ARC_TOL, 0))
            .sum()
    }

    pub fn arc_length(&self) -> f64 {
        self.arc_length_between(0.0, 1.0)
    }
}

pub(super) const ARC_TOL: f64 = 1e-8;

const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

fn gauss_legendre5(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * GL_NODES
        .iter()
        .zip(GL_WEIGHTS)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
}

pub(super) fn adaptive_gauss_legendre(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let whole = gauss_legendre5(f, a, b);
    let mid = 0.5 * (a + b);
    let left = gauss_legendre5(f, a, mid);
    let right = gauss_legendre5(f, mid, b);
    if (left + right - whole).abs() <= tol || depth >= 30 {
        left + right
    } else {
        adaptive_gauss_legendre(f, a, mid, 0.5 * tol, depth + 1)
            + adaptive_gauss_legendre(f, mid, b, 0.5 * tol, depth + 1)
    }
}

/// Fits a clamped cubic B-spline whose control points are the world
/// coordinates of every path cell. Paths shorter than four cells are padded by
/// repeating their endpoints.
pub fn smooth(path: &GridPath, grid: &OccupancyGrid) -> Result<SmoothPath, PlanningError> {
    let mut points: Vec<[f64; 2]> = path.cells().iter().map(|c| grid.world_of(*c)).collect();
    let mut front = true;
    while points.len() < DEGREE + 1 {
        if front {
            points.insert(0, points[0]);
        } else {
            points.push(*points.last().unwrap());
        }
        front = !front;
    }
    SmoothPath::new(points)
}
