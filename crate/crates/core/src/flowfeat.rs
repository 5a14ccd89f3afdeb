//! Differential flow features and the fixed-length flow descriptor.
//!
//! Descriptor layout, per stream (baseline first, then enhanced):
//!
//! ```text
//! for scale in [1, 2, 4]:            // average-pooled flow
//!   for cell in 4x4 grid, row-major: // adaptive bins over the pooled grid
//!     for field in [div, curl, mag]:
//!       mean, std
//! FlowStats (12 values, scale 1)
//! ```
//!
//! giving `3 * 96 + 12 = 300` values per stream and 600 in total.

use crate::error::{Error, Result};
use crate::field::{FlowField, ScalarField};
use crate::imagecore::{avg_pool, diff_x, diff_y};

pub const SCALES: [usize; 3] = [1, 2, 4];
pub const CELL_GRID: usize = 4;
pub const STREAM_LEN: usize = SCALES.len() * CELL_GRID * CELL_GRID * 3 * 2 + FlowStats::LEN;
pub const DESCRIPTOR_LEN: usize = 2 * STREAM_LEN;

fn require_min(flow: &FlowField, min: usize) -> Result<()> {
    flow.u.require_min("flow", min)
}

/// `du/dx + dv/dy`, derivatives taken with sample spacing `h`.
pub fn divergence_with_spacing(flow: &FlowField, h: f64) -> Result<ScalarField> {
    require_min(flow, 3)?;
    diff_x(&flow.u, h).zip_map(&diff_y(&flow.v, h), |a, b| a + b)
}

/// `dv/dx - du/dy`, derivatives taken with sample spacing `h`.
pub fn curl_with_spacing(flow: &FlowField, h: f64) -> Result<ScalarField> {
    require_min(flow, 3)?;
    diff_x(&flow.v, h).zip_map(&diff_y(&flow.u, h), |a, b| a - b)
}

pub fn divergence(flow: &FlowField) -> Result<ScalarField> {
    divergence_with_spacing(flow, 1.0)
}

pub fn curl(flow: &FlowField) -> Result<ScalarField> {
    curl_with_spacing(flow, 1.0)
}

pub fn magnitude(flow: &FlowField) -> Result<ScalarField> {
    flow.u.zip_map(&flow.v, f64::hypot)
}

/// Divergence, curl and magnitude of the flow pooled by `scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleFeatures {
    pub scale: usize,
    pub div: ScalarField,
    pub curl: ScalarField,
    pub mag: ScalarField,
}

impl ScaleFeatures {
    pub fn fields(&self) -> [&ScalarField; 3] {
        [&self.div, &self.curl, &self.mag]
    }
}

/// Pools `u` and `v` by each scale in [`SCALES`], then differentiates on
/// the pooled grid. Derivatives are divided by the pooled spacing so they
/// stay in units of the original grid.
pub fn multiscale_features(flow: &FlowField) -> Result<[ScaleFeatures; 3]> {
    let (w, h) = flow.shape();
    let coarsest = SCALES[SCALES.len() - 1];
    if w % coarsest != 0 || h % coarsest != 0 {
        return Err(Error::NotDivisible {
            dims: format!("{w}x{h}"),
            factor: coarsest,
        });
    }
    require_min(flow, 3 * coarsest)?;
    let per_scale = |s: usize| -> Result<ScaleFeatures> {
        let pooled = FlowField::new(avg_pool(&flow.u, s)?, avg_pool(&flow.v, s)?)?;
        let h = s as f64;
        Ok(ScaleFeatures {
            scale: s,
            div: divergence_with_spacing(&pooled, h)?,
            curl: curl_with_spacing(&pooled, h)?,
            mag: magnitude(&pooled)?,
        })
    };
    Ok([per_scale(SCALES[0])?, per_scale(SCALES[1])?, per_scale(SCALES[2])?])
}

/// Mean, population std, positive ratio and negative ratio for each of
/// div, curl and mag (in that order) at full resolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowStats(pub [f64; 12]);

impl FlowStats {
    pub const LEN: usize = 12;

    /// `field`: 0 = div, 1 = curl, 2 = mag.
    pub fn mean(&self, field: usize) -> f64 {
        self.0[4 * field]
    }

    pub fn std(&self, field: usize) -> f64 {
        self.0[4 * field + 1]
    }

    pub fn positive_ratio(&self, field: usize) -> f64 {
        self.0[4 * field + 2]
    }

    pub fn negative_ratio(&self, field: usize) -> f64 {
        self.0[4 * field + 3]
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

pub fn flow_statistics(flow: &FlowField) -> Result<FlowStats> {
    let fields = [divergence(flow)?, curl(flow)?, magnitude(flow)?];
    let mut out = [0.0; 12];
    for (k, f) in fields.iter().enumerate() {
        let n = f.len() as f64;
        let (mean, std) = mean_std(f.values().iter().copied());
        out[4 * k] = mean;
        out[4 * k + 1] = std;
        out[4 * k + 2] = f.values().iter().filter(|&&v| v > 0.0).count() as f64 / n;
        out[4 * k + 3] = f.values().iter().filter(|&&v| v < 0.0).count() as f64 / n;
    }
    Ok(FlowStats(out))
}

/// Half-open index range of bin `i` out of `bins` over `n` samples, using
/// the adaptive-pooling convention `[floor(i n / bins), ceil((i + 1) n / bins))`.
pub fn cell_range(i: usize, bins: usize, n: usize) -> std::ops::Range<usize> {
    let start = i * n / bins;
    let end = ((i + 1) * n).div_ceil(bins);
    start..end
}

/// A deterministic 600-value embedding of a pair of flow streams.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowDescriptor(Vec<f64>);

impl FlowDescriptor {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

fn stream_block(flow: &FlowField, out: &mut Vec<f64>) -> Result<()> {
    for feats in multiscale_features(flow)? {
        let (w, h) = feats.div.shape();
        for cy in 0..CELL_GRID {
            for cx in 0..CELL_GRID {
                let (xs, ys) = (cell_range(cx, CELL_GRID, w), cell_range(cy, CELL_GRID, h));
                for f in feats.fields() {
                    let cell = ys
                        .clone()
                        .flat_map(|y| xs.clone().map(move |x| (x, y)))
                        .map(|(x, y)| f.get(x, y));
                    let (m, s) = mean_std(cell);
                    out.push(m);
                    out.push(s);
                }
            }
        }
    }
    out.extend_from_slice(&flow_statistics(flow)?.0);
    Ok(())
}

pub fn descriptor(base: &FlowField, sal: &FlowField) -> Result<FlowDescriptor> {
    if base.shape() != sal.shape() {
        return Err(Error::ShapeMismatch(format!(
            "streams {:?} vs {:?}",
            base.shape(),
            sal.shape()
        )));
    }
    let mut out = Vec::with_capacity(DESCRIPTOR_LEN);
    stream_block(base, &mut out)?;
    stream_block(sal, &mut out)?;
    debug_assert_eq!(out.len(), DESCRIPTOR_LEN);
    Ok(FlowDescriptor(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn interior(f: &ScalarField) -> impl Iterator<Item = f64> + '_ {
        let (w, h) = f.shape();
        (1..h - 1).flat_map(move |y| (1..w - 1).map(move |x| f.get(x, y)))
    }

    #[test]
    fn analytic_identities() {
        let radial = FlowField::from_fn(7, 6, |x, y| (x as f64, y as f64));
        let rot = FlowField::from_fn(7, 6, |x, y| (-(y as f64), x as f64));
        assert!(interior(&divergence(&radial).unwrap()).all(|v| (v - 2.0).abs() < 1e-12));
        assert!(interior(&divergence(&rot).unwrap()).all(|v| v.abs() < 1e-12));
        assert!(interior(&curl(&rot).unwrap()).all(|v| (v - 2.0).abs() < 1e-12));
        assert!(interior(&curl(&radial).unwrap()).all(|v| v.abs() < 1e-12));
        let c = FlowField::from_fn(5, 5, |_, _| (0.3, -1.2));
        assert!(divergence(&c).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(curl(&c).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(divergence(&FlowField::zeros(2, 5)).is_err());
    }

    #[test]
    fn magnitude_cases() {
        let m = magnitude(&FlowField::from_fn(3, 3, |_, _| (3.0, 4.0))).unwrap();
        assert!(m.values().iter().all(|&v| v == 5.0));
        let m = magnitude(&FlowField::zeros(3, 3)).unwrap();
        assert!(m.values().iter().all(|&v| v == 0.0));
        let m = magnitude(&FlowField::from_fn(3, 3, |_, _| (1.0, 1.0))).unwrap();
        assert!(m.values().iter().all(|&v| v == 2f64.sqrt()));
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        let bump = ScalarField::from_fn(40, 40, |x, y| {
            let (dx, dy) = (x as f64 - 19.3, y as f64 - 21.1);
            (-(dx * dx + dy * dy) / (2.0 * 36.0)).exp()
        });
        let (fx, fy) = crate::imagecore::central_gradients(&bump).unwrap();
        let c = curl(&FlowField::new(fx, fy).unwrap()).unwrap();
        assert!(interior(&c).all(|v| v.abs() <= 1e-6));
    }

    #[test]
    fn multiscale_cases() {
        let flow = FlowField::from_fn(16, 12, |x, y| ((x * y) as f64 * 0.1, (x as f64).sin()));
        let feats = multiscale_features(&flow).unwrap();
        assert_eq!(feats[0].div, divergence(&flow).unwrap());
        assert_eq!(feats[0].curl, curl(&flow).unwrap());
        assert_eq!(feats[0].mag, magnitude(&flow).unwrap());
        assert_eq!(feats[2].div.shape(), (4, 3));

        let c = FlowField::from_fn(16, 16, |_, _| (0.6, 0.8));
        for f in multiscale_features(&c).unwrap() {
            assert!(f.div.values().iter().chain(f.curl.values()).all(|&v| v == 0.0));
            assert!(f.mag.values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        }

        let radial = FlowField::from_fn(24, 24, |x, y| (x as f64, y as f64));
        for f in multiscale_features(&radial).unwrap() {
            // one-sided borders are exact on linear fields too
            for &v in f.div.values() {
                assert!((v - 2.0).abs() < 1e-12, "scale {}: {v}", f.scale);
            }
        }
        assert!(matches!(
            multiscale_features(&FlowField::zeros(18, 16)),
            Err(Error::NotDivisible { .. })
        ));
        assert!(multiscale_features(&FlowField::zeros(8, 8)).is_err());
    }

    #[test]
    fn statistics_cases() {
        let s = flow_statistics(&FlowField::zeros(5, 5)).unwrap();
        assert!(s.0.iter().all(|&v| v == 0.0));

        let radial = FlowField::from_fn(9, 9, |x, y| (x as f64, y as f64));
        let s = flow_statistics(&radial).unwrap();
        assert!((s.mean(0) - 2.0).abs() < 1e-12);
        assert!(s.std(0) < 1e-12);
        assert_eq!(s.positive_ratio(0), 1.0);
        assert_eq!(s.negative_ratio(0), 0.0);
        // magnitude is zero at the origin sample only
        assert_eq!(s.positive_ratio(2), 80.0 / 81.0);
        assert_eq!(s.negative_ratio(2), 0.0);
    }

    #[test]
    fn cell_ranges_cover_grid() {
        assert_eq!(
            (0..4).map(|i| cell_range(i, 4, 14)).collect::<Vec<_>>(),
            vec![0..4, 3..7, 7..11, 10..14]
        );
        assert_eq!(
            (0..4).map(|i| cell_range(i, 4, 28)).collect::<Vec<_>>(),
            vec![0..7, 7..14, 14..21, 21..28]
        );
    }

    #[test]
    fn descriptor_layout() {
        let z = FlowField::zeros(16, 16);
        let d = descriptor(&z, &z).unwrap();
        assert_eq!(d.values().len(), 600);
        assert!(d.values().iter().all(|&v| v == 0.0));

        let a = FlowField::from_fn(16, 16, |x, y| ((x as f64 * 0.3).sin(), (y * x) as f64 * 0.01));
        let b = FlowField::from_fn(16, 16, |x, y| (y as f64 * 0.2, -(x as f64 * 0.4).cos()));
        let ab = descriptor(&a, &b).unwrap();
        let ba = descriptor(&b, &a).unwrap();
        assert_eq!(&ab.values()[..300], &ba.values()[300..]);
        assert_eq!(&ab.values()[300..], &ba.values()[..300]);
        assert_eq!(ab, descriptor(&a, &b).unwrap());
        assert!(descriptor(&a, &FlowField::zeros(12, 16)).is_err());
    }

    /// Recomputes one descriptor entry from scratch: explicit pooling,
    /// explicit finite differences, explicit cell statistics.
    fn oracle_entry(base: &FlowField, sal: &FlowField, index: usize) -> f64 {
        let (stream, k) = (index / 300, index % 300);
        let flow = if stream == 0 { base } else { sal };
        let (w, h) = flow.shape();
        let pool = |f: &ScalarField, s: usize| -> Vec<Vec<f64>> {
            (0..h / s)
                .map(|py| {
                    (0..w / s)
                        .map(|px| {
                            let mut acc = 0.0;
                            for y in 0..s {
                                for x in 0..s {
                                    acc += f.get(px * s + x, py * s + y);
                                }
                            }
                            acc / (s * s) as f64
                        })
                        .collect()
                })
                .collect()
        };
        let d = |g: &Vec<Vec<f64>>, x: usize, y: usize, axis: usize, s: f64| -> f64 {
            let (n, i) = if axis == 0 { (g[0].len(), x) } else { (g.len(), y) };
            let at = |j: usize| if axis == 0 { g[y][j] } else { g[j][x] };
            let raw = if i == 0 {
                at(1) - at(0)
            } else if i == n - 1 {
                at(n - 1) - at(n - 2)
            } else {
                0.5 * (at(i + 1) - at(i - 1))
            };
            raw / s
        };
        let feature = |u: &Vec<Vec<f64>>, v: &Vec<Vec<f64>>, x: usize, y: usize, which: usize, s: f64| match which {
            0 => d(u, x, y, 0, s) + d(v, x, y, 1, s),
            1 => d(v, x, y, 0, s) - d(u, x, y, 1, s),
            _ => (u[y][x] * u[y][x] + v[y][x] * v[y][x]).sqrt(),
        };
        if k >= 288 {
            let j = k - 288;
            let (which, stat) = (j / 4, j % 4);
            let u = pool(&flow.u, 1);
            let v = pool(&flow.v, 1);
            let vals: Vec<f64> = (0..h)
                .flat_map(|y| (0..w).map(move |x| (x, y)))
                .map(|(x, y)| feature(&u, &v, x, y, which, 1.0))
                .collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            return match stat {
                0 => mean,
                1 => (vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt(),
                2 => vals.iter().filter(|&&x| x > 0.0).count() as f64 / n,
                _ => vals.iter().filter(|&&x| x < 0.0).count() as f64 / n,
            };
        }
        let scale = [1, 2, 4][k / 96];
        let r = k % 96;
        let (cell, which, stat) = (r / 6, (r % 6) / 2, r % 2);
        let (cy, cx) = (cell / 4, cell % 4);
        let u = pool(&flow.u, scale);
        let v = pool(&flow.v, scale);
        let (pw, ph) = (w / scale, h / scale);
        let bounds = |i: usize, n: usize| {
            let lo = (i as f64 * n as f64 / 4.0).floor() as usize;
            let hi = ((i + 1) as f64 * n as f64 / 4.0).ceil() as usize;
            lo..hi
        };
        let mut vals = Vec::new();
        for y in bounds(cy, ph) {
            for x in bounds(cx, pw) {
                vals.push(feature(&u, &v, x, y, which, scale as f64));
            }
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        if stat == 0 {
            mean
        } else {
            (vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn descriptor_matches_entrywise_oracle(vals in proptest::collection::vec(-1.0f64..1.0, 4 * 20 * 16)) {
            let (w, h) = (20, 16);
            let part = |k: usize| ScalarField::new(w, h, vals[k * w * h..(k + 1) * w * h].to_vec()).unwrap();
            let base = FlowField::new(part(0), part(1)).unwrap();
            let sal = FlowField::new(part(2), part(3)).unwrap();
            let d = descriptor(&base, &sal).unwrap();
            for i in 0..DESCRIPTOR_LEN {
                let expect = oracle_entry(&base, &sal, i);
                prop_assert!((d.values()[i] - expect).abs() < 1e-12, "entry {}: {} vs {}", i, d.values()[i], expect);
            }
        }

        #[test]
        fn affine_flow_exact(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0,
                             d in -2.0f64..2.0, e in -2.0f64..2.0, f in -2.0f64..2.0) {
            let flow = FlowField::from_fn(8, 7, |x, y| {
                let (x, y) = (x as f64, y as f64);
                (a * x + b * y + c, d * x + e * y + f)
            });
            let dv = divergence(&flow).unwrap();
            let cu = curl(&flow).unwrap();
            for v in interior(&dv) { prop_assert!((v - (a + e)).abs() < 1e-12); }
            for v in interior(&cu) { prop_assert!((v - (d - b)).abs() < 1e-12); }
        }

        #[test]
        fn magnitude_rotation_invariant(vals in proptest::collection::vec(-3.0f64..3.0, 32), theta in 0.0f64..6.3) {
            let u = ScalarField::new(4, 4, vals[..16].to_vec()).unwrap();
            let v = ScalarField::new(4, 4, vals[16..].to_vec()).unwrap();
            let flow = FlowField::new(u.clone(), v.clone()).unwrap();
            let (s, c) = theta.sin_cos();
            let rot = FlowField::new(
                u.zip_map(&v, |a, b| c * a - s * b).unwrap(),
                u.zip_map(&v, |a, b| s * a + c * b).unwrap(),
            ).unwrap();
            let (m1, m2) = (magnitude(&flow).unwrap(), magnitude(&rot).unwrap());
            for (p, q) in m1.values().iter().zip(m2.values()) {
                prop_assert!((p - q).abs() < 1e-12);
            }
        }

        #[test]
        fn stats_ratios_valid(vals in proptest::collection::vec(-1.0f64..1.0, 50)) {
            let flow = FlowField::new(
                ScalarField::new(5, 5, vals[..25].to_vec()).unwrap(),
                ScalarField::new(5, 5, vals[25..].to_vec()).unwrap(),
            ).unwrap();
            let s = flow_statistics(&flow).unwrap();
            for k in 0..3 {
                let (p, n) = (s.positive_ratio(k), s.negative_ratio(k));
                prop_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&n) && p + n <= 1.0);
            }
            prop_assert_eq!(s.negative_ratio(2), 0.0);
        }
    }
}
