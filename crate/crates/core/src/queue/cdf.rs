use serde::{Deserialize, Serialize};

use super::QueueError;

/// A point of a piecewise-linear CDF. Two consecutive knots at the same `x`
/// encode a jump (an atom of mass `p1 - p0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub x: f64,
    pub p: f64,
}

/// Service-time distribution built from observed durations (seconds).
///
/// The CDF is linear between sorted sample points, which makes inverse
/// sampling continuous and lets survival integrals be evaluated exactly.
/// All mass lies in `[lo, hi]`; the first knot has `p = 0` and the last
/// `p = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CdfRepr", into = "CdfRepr")]
pub struct EmpiricalCdf {
    lo: f64,
    hi: f64,
    knots: Vec<Knot>,
    // ∫_0^{x_k} (1 - F(u)) du at each knot
    survival_integral: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CdfRepr {
    lo: f64,
    hi: f64,
    knots: Vec<Knot>,
}

impl TryFrom<CdfRepr> for EmpiricalCdf {
    type Error = QueueError;

    fn try_from(r: CdfRepr) -> Result<Self, Self::Error> {
        EmpiricalCdf::from_knots(r.lo, r.hi, r.knots)
    }
}

impl From<EmpiricalCdf> for CdfRepr {
    fn from(c: EmpiricalCdf) -> Self {
        CdfRepr {
            lo: c.lo,
            hi: c.hi,
            knots: c.knots,
        }
    }
}

impl EmpiricalCdf {
    pub fn from_knots(lo: f64, hi: f64, knots: Vec<Knot>) -> Result<Self, QueueError> {
        let bad = |msg: &str| Err(QueueError::InvalidCdf(msg.to_string()));
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi < lo {
            return bad("support must satisfy 0 <= lo <= hi");
        }
        let (Some(first), Some(last)) = (knots.first(), knots.last()) else {
            return bad("no knots");
        };
        if knots.len() < 2 || first.p != 0.0 || (last.p - 1.0).abs() > 1e-12 {
            return bad("knots must run from p = 0 to p = 1");
        }
        if first.x < lo || last.x > hi {
            return bad("knots outside support");
        }
        if knots
            .windows(2)
            .any(|w| !(w[1].x >= w[0].x && w[1].p >= w[0].p) || !w[1].x.is_finite())
        {
            return bad("knots must be nondecreasing");
        }
        let mut knots = knots;
        knots.last_mut().expect("nonempty").p = 1.0;

        let mut survival_integral = Vec::with_capacity(knots.len());
        // S = 1 on [0, x_0)
        let mut acc = knots[0].x;
        survival_integral.push(acc);
        for w in knots.windows(2) {
            let dx = w[1].x - w[0].x;
            acc += dx * (1.0 - 0.5 * (w[0].p + w[1].p));
            survival_integral.push(acc);
        }
        Ok(EmpiricalCdf {
            lo,
            hi,
            knots,
            survival_integral,
        })
    }

    /// Linear interpolation between the sorted samples: knot `i` sits at the
    /// `i`-th order statistic with `p = i / (n - 1)`. A single sample (or all
    /// samples tied) gives a point mass.
    pub fn from_samples(samples: &[f64], lo: f64, hi: f64) -> Result<Self, QueueError> {
        let mut xs: Vec<f64> = samples.to_vec();
        if xs.is_empty() {
            return Err(QueueError::InvalidCdf("no samples".into()));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(QueueError::InvalidCdf("non-finite sample".into()));
        }
        xs.sort_by(f64::total_cmp);
        let n = xs.len();
        let knots = if n == 1 || xs[0] == xs[n - 1] {
            vec![Knot { x: xs[0], p: 0.0 }, Knot { x: xs[0], p: 1.0 }]
        } else {
            xs.iter()
                .enumerate()
                .map(|(i, &x)| Knot {
                    x,
                    p: i as f64 / (n - 1) as f64,
                })
                .collect()
        };
        Self::from_knots(lo, hi, knots)
    }

    /// Like [`EmpiricalCdf::from_samples`], but keeps at most `max_knots`
    /// knots placed at evenly spaced probabilities.
    pub fn from_samples_compressed(
        samples: &[f64],
        lo: f64,
        hi: f64,
        max_knots: usize,
    ) -> Result<Self, QueueError> {
        let full = Self::from_samples(samples, lo, hi)?;
        if full.knots.len() <= max_knots.max(2) {
            return Ok(full);
        }
        let m = max_knots.max(2);
        let knots = (0..m)
            .map(|k| {
                let p = k as f64 / (m - 1) as f64;
                Knot {
                    x: full.quantile(p),
                    p,
                }
            })
            .collect();
        Self::from_knots(lo, hi, knots)
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self, QueueError> {
        Self::from_knots(a, b, vec![Knot { x: a, p: 0.0 }, Knot { x: b, p: 1.0 }])
    }

    pub fn point_mass(x: f64) -> Result<Self, QueueError> {
        Self::from_knots(x, x, vec![Knot { x, p: 0.0 }, Knot { x, p: 1.0 }])
    }

    /// Support `[lo, hi]` of the distribution.
    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    /// Largest value carrying mass.
    pub fn max_value(&self) -> f64 {
        self.knots.last().expect("nonempty").x
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.knots.partition_point(|kn| kn.x <= x);
        if k == 0 {
            return 0.0;
        }
        if k == self.knots.len() {
            return 1.0;
        }
        let (a, b) = (self.knots[k - 1], self.knots[k]);
        // b.x > x >= a.x, so the segment has positive width
        a.p + (b.p - a.p) * (x - a.x) / (b.x - a.x)
    }

    pub fn survival(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// Inverse CDF; `u` is clamped into `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let k = self.knots.partition_point(|kn| kn.p <= u);
        if k == 0 {
            return self.knots[0].x;
        }
        if k == self.knots.len() {
            return self.max_value();
        }
        let (a, b) = (self.knots[k - 1], self.knots[k]);
        a.x + (u - a.p) / (b.p - a.p) * (b.x - a.x)
    }

    /// ∫_0^s (1 - F(u)) du, exact for the piecewise-linear CDF.
    pub fn survival_integral(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let k = self.knots.partition_point(|kn| kn.x <= s);
        if k == 0 {
            return s;
        }
        if k == self.knots.len() {
            return *self.survival_integral.last().expect("nonempty");
        }
        let (a, b) = (self.knots[k - 1], self.knots[k]);
        let dx = s - a.x;
        let slope = (b.p - a.p) / (b.x - a.x);
        self.survival_integral[k - 1] + dx * (1.0 - a.p) - 0.5 * slope * dx * dx
    }

    /// E[S], which equals the full survival integral.
    pub fn mean(&self) -> f64 {
        *self.survival_integral.last().expect("nonempty")
    }
}
