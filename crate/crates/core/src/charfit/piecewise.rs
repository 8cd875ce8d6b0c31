//! Continuous piecewise-linear least squares with free breakpoints.
//!
//! The model is the hinge expansion
//! `y = c0 + c1·x + Σ h_j·max(x − b_j, 0)`, linear in the coefficients for
//! fixed breakpoints. Breakpoints are chosen by exhaustive search over the
//! midpoints between neighbouring pressures, then polished one coordinate at
//! a time by golden-section search on the profiled SSE.

use serde::{Deserialize, Serialize};

use super::linalg::least_squares;
use super::PvSamples;
use crate::error::{Error, Result};

pub const MAX_SEGMENTS: usize = 4;
const MIN_POINTS_PER_SEGMENT: usize = 2;
const REFINE_SWEEPS: usize = 30;
const GOLDEN_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseFit {
    /// n − 1 interior breakpoints, Pa.
    pub breakpoints_pa: Vec<f64>,
    /// Per-segment slope, V/Pa.
    pub slopes_v_per_pa: Vec<f64>,
    /// Per-segment intercept at P = 0, V.
    pub intercepts_v: Vec<f64>,
    pub rmse_v: f64,
    /// Pressure span of the fitted data, Pa.
    pub domain_pa: [f64; 2],
}

impl PiecewiseFit {
    /// Straight-line pieces; segment `i` covers `[b_{i−1}, b_i)`. Values
    /// outside the fitted domain are linear extrapolations of the end pieces.
    pub fn new(breakpoints_pa: Vec<f64>, slopes_v_per_pa: Vec<f64>, intercept_v: f64) -> Result<Self> {
        if slopes_v_per_pa.len() != breakpoints_pa.len() + 1 {
            return Err(crate::error::invalid(
                "piecewise curve needs one more slope than breakpoints",
            ));
        }
        if breakpoints_pa.windows(2).any(|w| w[1] <= w[0]) {
            return Err(crate::error::invalid("breakpoints must increase strictly"));
        }
        let mut intercepts_v = vec![intercept_v];
        for (j, &b) in breakpoints_pa.iter().enumerate() {
            let prev = intercepts_v[j];
            intercepts_v.push(prev + (slopes_v_per_pa[j] - slopes_v_per_pa[j + 1]) * b);
        }
        let lo = 0.0;
        let hi = breakpoints_pa.last().map_or(1.0, |b| 2.0 * b);
        Ok(Self {
            breakpoints_pa,
            slopes_v_per_pa,
            intercepts_v,
            rmse_v: 0.0,
            domain_pa: [lo, hi],
        })
    }

    pub fn segment_count(&self) -> usize {
        self.slopes_v_per_pa.len()
    }

    pub fn segment_of(&self, pressure_pa: f64) -> usize {
        self.breakpoints_pa
            .iter()
            .take_while(|&&b| pressure_pa >= b)
            .count()
    }

    pub fn evaluate(&self, pressure_pa: f64) -> f64 {
        let s = self.segment_of(pressure_pa);
        self.intercepts_v[s] + self.slopes_v_per_pa[s] * pressure_pa
    }
}

/// Hinge-basis design matrix for knots `b` over abscissae `x`.
fn design(x: &[f64], knots: &[f64]) -> Vec<Vec<f64>> {
    let mut cols = vec![vec![1.0; x.len()], x.to_vec()];
    for &b in knots {
        cols.push(x.iter().map(|&xi| (xi - b).max(0.0)).collect());
    }
    cols
}

fn segments_valid(x: &[f64], knots: &[f64]) -> bool {
    if knots.windows(2).any(|w| w[1] <= w[0]) {
        return false;
    }
    let mut edges = Vec::with_capacity(knots.len() + 2);
    edges.push(f64::NEG_INFINITY);
    edges.extend_from_slice(knots);
    edges.push(f64::INFINITY);
    edges.windows(2).all(|w| {
        x.iter().filter(|&&xi| xi >= w[0] && xi < w[1]).count() >= MIN_POINTS_PER_SEGMENT
    })
}

fn sse_for(x: &[f64], y: &[f64], knots: &[f64]) -> Option<f64> {
    if !segments_valid(x, knots) {
        return None;
    }
    least_squares(&design(x, knots), y).map(|(_, sse)| sse)
}

/// Visit every strictly increasing choice of `k` midpoint indices such that
/// each segment keeps at least two points, in lexicographic order.
fn for_each_combination(n_points: usize, k: usize, visit: &mut impl FnMut(&[usize])) {
    fn recurse(
        start: usize,
        depth: usize,
        k: usize,
        n_points: usize,
        chosen: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if depth == k {
            visit(chosen);
            return;
        }
        // midpoint i separates x[i] and x[i+1]; last segment needs x[i+1], x[i+2]
        let remaining = k - depth - 1;
        let max_i = n_points.saturating_sub(MIN_POINTS_PER_SEGMENT + 1 + MIN_POINTS_PER_SEGMENT * remaining);
        for i in start..=max_i {
            chosen.push(i);
            recurse(i + MIN_POINTS_PER_SEGMENT, depth + 1, k, n_points, chosen, visit);
            chosen.pop();
        }
    }
    let mut chosen = Vec::with_capacity(k);
    recurse(MIN_POINTS_PER_SEGMENT - 1, 0, k, n_points, &mut chosen, visit);
}

fn golden_section(mut lo: f64, mut hi: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..GOLDEN_ITERATIONS {
        if hi - lo <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        }
    }
    if fa <= fb {
        (a, fa)
    } else {
        (b, fb)
    }
}

/// Coordinate-wise polishing of the knots; only strict improvements are kept.
fn refine(x: &[f64], y: &[f64], knots: &mut [f64], sse: &mut f64) {
    let objective = |k: &[f64]| sse_for(x, y, k).unwrap_or(f64::INFINITY);
    for _ in 0..REFINE_SWEEPS {
        let before = *sse;
        for j in 0..knots.len() {
            let above = x.partition_point(|&xi| xi <= knots[j]);
            let lo_idx = above.saturating_sub(2);
            let hi_idx = (above + 1).min(x.len() - 1);
            let mut lo = x[lo_idx];
            let mut hi = x[hi_idx];
            if j > 0 {
                lo = lo.max(knots[j - 1]);
            }
            if j + 1 < knots.len() {
                hi = hi.min(knots[j + 1]);
            }
            if hi <= lo {
                continue;
            }
            let mut trial = knots.to_vec();
            let (best, value) = golden_section(lo, hi, |b| {
                trial[j] = b;
                objective(&trial)
            });
            if value < *sse {
                knots[j] = best;
                *sse = value;
            }
        }
        if before - *sse <= 1e-15 * before.max(f64::MIN_POSITIVE) {
            break;
        }
    }
}

/// Best knots on the midpoint grid plus, when given, `seed` knots extended
/// by one grid midpoint each. Ties keep the lexicographically smallest.
fn grid_search(x: &[f64], y: &[f64], k: usize, seed: Option<&[f64]>) -> Option<(Vec<f64>, f64)> {
    let mids: Vec<f64> = x.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let consider = |knots: Vec<f64>, best: &mut Option<(Vec<f64>, f64)>| {
        if let Some(sse) = sse_for(x, y, &knots) {
            let better = match best {
                None => true,
                Some((bk, bs)) => {
                    sse < *bs || (sse == *bs && knots.partial_cmp(bk) == Some(std::cmp::Ordering::Less))
                }
            };
            if better {
                *best = Some((knots, sse));
            }
        }
    };
    for_each_combination(x.len(), k, &mut |idx| {
        consider(idx.iter().map(|&i| mids[i]).collect(), &mut best);
    });
    if let Some(seed) = seed {
        for &m in &mids {
            if seed.contains(&m) {
                continue;
            }
            let mut knots = seed.to_vec();
            knots.push(m);
            knots.sort_by(f64::total_cmp);
            consider(knots, &mut best);
        }
    }
    best
}

fn fit_scaled(x: &[f64], y: &[f64], n_segments: usize) -> Result<(Vec<f64>, f64)> {
    let k = n_segments - 1;
    if k == 0 {
        return sse_for(x, y, &[])
            .map(|sse| (Vec::new(), sse))
            .ok_or_else(|| Error::Fit("degenerate pressures".into()));
    }
    let seed = fit_scaled(x, y, n_segments - 1).ok().map(|(knots, _)| knots);
    let (mut knots, mut sse) = grid_search(x, y, k, seed.as_deref())
        .ok_or_else(|| Error::Fit(format!("no valid breakpoint placement for {n_segments} segments")))?;
    refine(x, y, &mut knots, &mut sse);
    Ok((knots, sse))
}

/// Fit `n_segments` continuous linear pieces to `data`.
pub fn fit_piecewise(data: &PvSamples, n_segments: usize) -> Result<PiecewiseFit> {
    if !(1..=MAX_SEGMENTS).contains(&n_segments) {
        return Err(Error::Fit(format!(
            "segment count must be in 1..={MAX_SEGMENTS}, got {n_segments}"
        )));
    }
    if data.len() < MIN_POINTS_PER_SEGMENT * n_segments {
        return Err(Error::Fit(format!(
            "{} points cannot support {n_segments} segments of at least {MIN_POINTS_PER_SEGMENT} points",
            data.len()
        )));
    }
    let (x, y, v_scale) = data.scaled();
    let (knots, _) = fit_scaled(&x, &y, n_segments)?;
    let (coef, sse) = least_squares(&design(&x, &knots), &y)
        .ok_or_else(|| Error::Fit("singular design".into()))?;

    // back to SI: x in kPa, y in units of v_scale
    let breakpoints_pa: Vec<f64> = knots.iter().map(|b| b * 1e3).collect();
    let mut slopes = vec![coef[1]];
    let mut intercepts = vec![coef[0]];
    for (j, &b) in knots.iter().enumerate() {
        let h = coef[2 + j];
        slopes.push(slopes[j] + h);
        intercepts.push(intercepts[j] - h * b);
    }
    let points = data.points();
    Ok(PiecewiseFit {
        breakpoints_pa,
        slopes_v_per_pa: slopes.iter().map(|s| s * v_scale / 1e3).collect(),
        intercepts_v: intercepts.iter().map(|c| c * v_scale).collect(),
        rmse_v: (sse / x.len() as f64).sqrt() * v_scale,
        domain_pa: [points[0].pressure_pa, points[points.len() - 1].pressure_pa],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfit::SensingMode;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Reference curve with 2.6 / 0.7 / 0.2 V/kPa and breaks at 11 and 26 kPa.
    fn three_region(p_kpa: f64) -> f64 {
        let (b1, b2) = (11.0, 26.0);
        if p_kpa < b1 {
            2.6 * p_kpa
        } else if p_kpa < b2 {
            2.6 * b1 + 0.7 * (p_kpa - b1)
        } else {
            2.6 * b1 + 0.7 * (b2 - b1) + 0.2 * (p_kpa - b2)
        }
    }

    fn reference_pressures() -> Vec<f64> {
        (1..=80).map(|i| i as f64 * 0.5).collect()
    }

    fn samples(noise: Option<(f64, u64)>) -> PvSamples {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.map_or(0, |n| n.1));
        let normal = Normal::new(0.0, noise.map_or(1.0, |n| n.0)).unwrap();
        PvSamples::from_pairs(
            reference_pressures().into_iter().map(|p| {
                let e = if noise.is_some() { normal.sample(&mut rng) } else { 0.0 };
                (p * 1e3, three_region(p) + e)
            }),
            SensingMode::Static,
        )
        .unwrap()
    }

    #[test]
    fn recovers_noiseless_three_region_curve() {
        let fit = fit_piecewise(&samples(None), 3).unwrap();
        let kpa: Vec<f64> = fit.slopes_v_per_pa.iter().map(|s| s * 1e3).collect();
        for (got, want) in kpa.iter().zip([2.6, 0.7, 0.2]) {
            assert!(((got - want) / want).abs() < 1e-6, "{kpa:?}");
        }
        assert!((fit.breakpoints_pa[0] - 11e3).abs() < 250.0);
        assert!((fit.breakpoints_pa[1] - 26e3).abs() < 250.0);
        assert!(fit.rmse_v < 1e-6);
    }

    #[test]
    fn continuous_at_breakpoints() {
        let fit = fit_piecewise(&samples(Some((0.05, 3))), 3).unwrap();
        for (j, &b) in fit.breakpoints_pa.iter().enumerate() {
            let left = fit.intercepts_v[j] + fit.slopes_v_per_pa[j] * b;
            let right = fit.intercepts_v[j + 1] + fit.slopes_v_per_pa[j + 1] * b;
            assert!((left - right).abs() < 1e-9);
        }
    }

    #[test]
    fn single_segment_line() {
        let data = PvSamples::from_pairs(
            (0..10).map(|i| (i as f64 * 100.0, 0.5 + 0.003 * i as f64 * 100.0)),
            SensingMode::Static,
        )
        .unwrap();
        let fit = fit_piecewise(&data, 1).unwrap();
        assert!((fit.slopes_v_per_pa[0] - 0.003).abs() < 1e-15);
        assert!((fit.intercepts_v[0] - 0.5).abs() < 1e-12);
        assert!(fit.rmse_v < 1e-12);
        assert!(fit.breakpoints_pa.is_empty());
    }

    #[test]
    fn noisy_slopes_within_five_percent() {
        // 95th percentile of relative slope error over 100 seeds
        let mut errors = Vec::new();
        for seed in 0..100 {
            let fit = fit_piecewise(&samples(Some((0.05, seed))), 3).unwrap();
            let worst = fit
                .slopes_v_per_pa
                .iter()
                .zip([2.6e-3, 0.7e-3, 0.2e-3])
                .map(|(got, want)| ((got - want) / want).abs())
                .fold(0.0, f64::max);
            errors.push(worst);
        }
        errors.sort_by(f64::total_cmp);
        assert!(errors[94] < 0.05, "p95={}", errors[94]);
    }

    #[test]
    fn rejects_bad_segment_counts() {
        let data = samples(None);
        assert!(fit_piecewise(&data, 0).is_err());
        assert!(fit_piecewise(&data, 5).is_err());
        let small = PvSamples::from_pairs((0..5).map(|i| (i as f64, i as f64)), SensingMode::Static).unwrap();
        assert!(matches!(fit_piecewise(&small, 3), Err(Error::Fit(_))));
    }

    #[test]
    fn deterministic() {
        let d = samples(Some((0.05, 11)));
        assert_eq!(fit_piecewise(&d, 3).unwrap(), fit_piecewise(&d, 3).unwrap());
    }

    #[test]
    fn evaluate_from_constructor() {
        let f = PiecewiseFit::new(vec![1000.0], vec![2e-3, 1e-3], -0.152).unwrap();
        assert_eq!(f.evaluate(0.0), -0.152);
        assert!((f.evaluate(1000.0) - (2.0 - 0.152)).abs() < 1e-12);
        assert!((f.evaluate(2000.0) - (3.0 - 0.152)).abs() < 1e-12);
        assert!(PiecewiseFit::new(vec![1.0], vec![1.0], 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn sse_non_increasing_in_segments(values in prop::collection::vec(-5.0f64..5.0, 12..20)) {
            let data = PvSamples::from_pairs(
                values.iter().enumerate().map(|(i, &v)| (i as f64 * 250.0, v)),
                SensingMode::Static,
            ).unwrap();
            let mut last = f64::INFINITY;
            for n in 1..=MAX_SEGMENTS {
                let fit = fit_piecewise(&data, n).unwrap();
                prop_assert!(fit.rmse_v <= last * (1.0 + 1e-12) + 1e-15, "n={} {} > {}", n, fit.rmse_v, last);
                last = fit.rmse_v;
            }
        }
    }
}
