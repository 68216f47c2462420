//! Navigation measures and two-sample comparison.
//!
//! * `L`: path length relative to the straight start-target distance.
//! * `S`: fraction of the trajectory farther than `d_crt` from every
//!   effective object.
//! * `E`: mean elongation over the agent and all pedestrians.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::scenario::Mode;
use crate::sim::SimulationResult;

/// Default critical distance for `S`, meters.
pub const DEFAULT_CRITICAL_DISTANCE: f64 = 0.3;

pub fn polyline_length(vertices: &[Vec2]) -> f64 {
    vertices.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// `L = Σ‖p_i − p_{i−1}‖ / ‖p_A − p_T‖`. The trajectory must end within
/// `tolerance` of `target`.
pub fn trajectory_length(vertices: &[Vec2], start: Vec2, target: Vec2, tolerance: f64) -> Result<f64> {
    let straight = start.distance(target);
    if !(straight > 0.0) {
        return Err(Error::invalid("start and target coincide"));
    }
    match vertices.last() {
        Some(last) if last.distance(target) <= tolerance => Ok(polyline_length(vertices) / straight),
        _ => Err(Error::IncompleteRun),
    }
}

/// Points along the polyline every `spacing` of arc length, both ends included.
pub fn resample(vertices: &[Vec2], spacing: f64) -> Vec<Vec2> {
    let mut out = Vec::new();
    let (Some(&first), Some(&last)) = (vertices.first(), vertices.last()) else {
        return out;
    };
    out.push(first);
    let total = polyline_length(vertices);
    let count = libm::floor(total / spacing * (1.0 + 1e-12)) as usize;
    let mut seg = 0;
    let mut seg_start = 0.0;
    for k in 1..=count {
        let s = k as f64 * spacing;
        while seg + 2 < vertices.len() && seg_start + vertices[seg].distance(vertices[seg + 1]) < s {
            seg_start += vertices[seg].distance(vertices[seg + 1]);
            seg += 1;
        }
        let len = vertices[seg].distance(vertices[seg + 1]);
        let f = if len > 0.0 { ((s - seg_start) / len).min(1.0) } else { 1.0 };
        out.push(vertices[seg].lerp(vertices[seg + 1], f));
    }
    if out.last().is_some_and(|p| p.distance(last) > 1e-9 * spacing) {
        out.push(last);
    }
    out
}

/// `S = 1 − |δΓ| / |Γ|` with `δΓ` the vertices closer than `d_crt` to an
/// effective-object cell center.
pub fn trajectory_safety(vertices: &[Vec2], omega: &[Vec2], d_crt: f64) -> Result<f64> {
    if vertices.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if !(d_crt > 0.0) {
        return Err(Error::invalid("critical distance must be positive"));
    }
    let d2 = d_crt * d_crt;
    let close = vertices.iter().filter(|v| omega.iter().any(|o| (**v - *o).norm_sq() < d2)).count();
    Ok(1.0 - close as f64 / vertices.len() as f64)
}

/// `E = (1/(M+1)) Σ (L_i − 1)`, agent included.
pub fn social_effort(lengths: &[f64]) -> f64 {
    if lengths.is_empty() {
        return 0.0;
    }
    lengths.iter().map(|l| l - 1.0).sum::<f64>() / lengths.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub mode: Mode,
    pub completed: bool,
    pub length: f64,
    pub safety: f64,
    pub effort: f64,
    pub critical_distance: f64,
    pub pedestrians: usize,
    pub collisions: usize,
}

/// Measures one executed run. Incomplete runs get `NaN` measures.
pub fn evaluate(result: &SimulationResult, start: Vec2, target: Vec2, tolerance: f64, d_crt: f64) -> MetricsRecord {
    let mut rec = MetricsRecord {
        mode: result.mode,
        completed: result.completed,
        length: f64::NAN,
        safety: f64::NAN,
        effort: f64::NAN,
        critical_distance: d_crt,
        pedestrians: result.pedestrians.len(),
        collisions: result.collisions.len(),
    };
    if !result.completed {
        return rec;
    }
    let Ok(l) = trajectory_length(&result.agent, start, target, tolerance) else {
        rec.completed = false;
        return rec;
    };
    rec.length = l;
    let samples = resample(&result.agent, result.map.mapping.cell_size());
    rec.safety = trajectory_safety(&samples, &result.map.omega_points(), d_crt).unwrap_or(f64::NAN);
    let mut lengths = Vec::with_capacity(result.pedestrians.len() + 1);
    lengths.push(l);
    lengths.extend(result.pedestrians.iter().map(|p| p.elongation));
    rec.effort = social_effort(&lengths);
    rec
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (`n − 1` denominator).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TTest {
    Welch,
    Pooled,
}

/// Two-sided p-value of the two-sample t-test.
pub fn compare(a: &[f64], b: &[f64]) -> Result<f64> {
    compare_with(a, b, TTest::Welch)
}

pub fn compare_with(a: &[f64], b: &[f64], kind: TTest) -> Result<f64> {
    let (t, df) = t_statistic(a, b, kind)?;
    match (t, df) {
        (None, _) => Ok(if mean(a) == mean(b) { 1.0 } else { 0.0 }),
        (Some(t), df) => Ok(student_t_two_sided(t, df)),
    }
}

/// `t` and degrees of freedom; `t` is `None` when both samples are constant.
pub fn t_statistic(a: &[f64], b: &[f64], kind: TTest) -> Result<(Option<f64>, f64)> {
    let need = 2;
    for s in [a, b] {
        if s.len() < need {
            return Err(Error::InsufficientSamples { needed: need, got: s.len() });
        }
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite sample"));
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a), variance(b));
    let diff = mean(a) - mean(b);
    if va == 0.0 && vb == 0.0 {
        return Ok((None, na + nb - 2.0));
    }
    Ok(match kind {
        TTest::Welch => {
            let (sa, sb) = (va / na, vb / nb);
            let se2 = sa + sb;
            let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
            (Some(diff / libm::sqrt(se2)), df)
        }
        TTest::Pooled => {
            let df = na + nb - 2.0;
            let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            (Some(diff / libm::sqrt(sp2 * (1.0 / na + 1.0 / nb))), df)
        }
    })
}

/// `P(|T| ≥ |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_beta(x, 0.5 * df, 0.5).clamp(0.0, 1.0)
}

/// Regularized incomplete beta `I_x(a, b)` by Lentz's continued fraction.
pub fn regularized_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * libm::log(x) + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_fraction(1.0 - x, b, a) / b
    }
}

fn beta_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Measure {
    Length,
    Safety,
    Effort,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Length, Measure::Safety, Measure::Effort];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Length => "L",
            Measure::Safety => "S",
            Measure::Effort => "E",
        }
    }

    pub fn of(self, r: &MetricsRecord) -> f64 {
        match self {
            Measure::Length => r.length,
            Measure::Safety => r.safety,
            Measure::Effort => r.effort,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub measure: Measure,
    pub mode: Mode,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    /// Per-mode records in run order.
    pub samples: Vec<(Mode, Vec<MetricsRecord>)>,
    pub summaries: Vec<Summary>,
    /// AvUs against CoUs per measure; `None` when a mode has fewer than two
    /// completed runs.
    pub p_values: Vec<(Measure, Option<f64>)>,
}

impl EnsembleStats {
    /// Summaries over completed runs; incomplete runs only count toward
    /// the run totals.
    pub fn from_records(samples: Vec<(Mode, Vec<MetricsRecord>)>) -> Self {
        let mut summaries = Vec::new();
        for measure in Measure::ALL {
            for (mode, recs) in &samples {
                let xs = values(recs, measure);
                let n = xs.len();
                summaries.push(Summary {
                    measure,
                    mode: *mode,
                    mean: if n > 0 { mean(&xs) } else { f64::NAN },
                    std: if n > 1 { libm::sqrt(variance(&xs)) } else { f64::NAN },
                    n,
                });
            }
        }
        let find = |m: Mode| samples.iter().find(|(mode, _)| *mode == m).map(|(_, r)| r);
        let p_values = Measure::ALL
            .iter()
            .map(|&measure| {
                let p = match (find(Mode::AvUs), find(Mode::CoUs)) {
                    (Some(a), Some(c)) => compare(&values(a, measure), &values(c, measure)).ok(),
                    _ => None,
                };
                (measure, p)
            })
            .collect();
        EnsembleStats { samples, summaries, p_values }
    }

    pub fn summary(&self, measure: Measure, mode: Mode) -> Option<&Summary> {
        self.summaries.iter().find(|s| s.measure == measure && s.mode == mode)
    }

    pub fn p_value(&self, measure: Measure) -> Option<f64> {
        self.p_values.iter().find(|(m, _)| *m == measure).and_then(|(_, p)| *p)
    }
}

/// Finite values of a measure over completed runs.
pub fn values(records: &[MetricsRecord], measure: Measure) -> Vec<f64> {
    records.iter().filter(|r| r.completed).map(|r| measure.of(r)).filter(|x| x.is_finite()).collect()
}
