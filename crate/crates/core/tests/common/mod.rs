//! Independent oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

use oolr::{Decision, LossConfig, TraceSlot};

/// The slot loss written out directly from its definition.
pub fn loss_direct(slot: &TraceSlot, x: &[f64], y: &[f64], v: f64) -> f64 {
    let m = slot.theta.len();
    let mut s = 0.0;
    let mut pay = 0.0;
    for i in 0..m {
        let a = slot.alpha.as_ref().map_or(1.0, |r| r[i]);
        let b = slot.beta.as_ref().map_or(1.0, |r| r[i]);
        s += (a * x[i] + b * y[i]) * slot.theta[i];
        pay += slot.price_adv[i] * a * x[i] + slot.price_spot[i] * b * y[i];
    }
    -v * slot.demand * (1.0 + s).ln() + pay
}

/// Central finite differences of the slot loss.
pub fn fd_gradient(slot: &TraceSlot, z: &Decision, cfg: &LossConfig, step: f64) -> Vec<f64> {
    let base = z.stacked();
    let m = z.resources();
    (0..base.len())
        .map(|k| {
            let mut up = base.clone();
            let mut dn = base.clone();
            up[k] += step;
            dn[k] -= step;
            let f = |v: &[f64]| loss_direct(slot, &v[..m], &v[m..], cfg.v());
            (f(&up) - f(&dn)) / (2.0 * step)
        })
        .collect()
}

/// Minimum of `q/2·u² + l·u` over `u ∈ [0, hi]` on a grid of spacing `res`.
pub fn grid_min_1d(q: f64, l: f64, hi: f64, res: f64) -> f64 {
    let n = (hi / res).round() as usize;
    (0..=n)
        .map(|i| {
            let u = hi * i as f64 / n as f64;
            0.5 * q * u * u + l * u
        })
        .fold(f64::INFINITY, f64::min)
}

/// Full 2-D grid over `[0, hx] x [0, hy]` of an arbitrary objective.
pub fn grid_min_2d(f: impl Fn(f64, f64) -> f64, hx: f64, hy: f64, res: f64) -> (f64, f64, f64) {
    let nx = (hx / res).round() as usize;
    let ny = (hy / res).round() as usize;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=nx {
        let u = hx * i as f64 / nx as f64;
        for j in 0..=ny {
            let w = hy * j as f64 / ny as f64;
            let v = f(u, w);
            if v < best.0 {
                best = (v, u, w);
            }
        }
    }
    best
}

/// Coarse grid then successively finer grids around the incumbent.
pub fn zoom_min_2d(f: impl Fn(f64, f64) -> f64, hx: f64, hy: f64, res: f64) -> f64 {
    let (mut best, mut bu, mut bw) = grid_min_2d(&f, hx, hy, res);
    let mut r = res;
    for _ in 0..4 {
        let (lo_u, lo_w) = ((bu - r).max(0.0), (bw - r).max(0.0));
        let (hi_u, hi_w) = ((bu + r).min(hx), (bw + r).min(hy));
        let g = |a: f64, b: f64| f(lo_u + a, lo_w + b);
        let (v, u, w) = grid_min_2d(g, hi_u - lo_u, hi_w - lo_w, r / 10.0);
        if v < best {
            best = v;
            bu = lo_u + u;
            bw = lo_w + w;
        }
        r /= 10.0;
    }
    best
}

/// Exhaustive search for the summed loss over `Δ²` (plain slots, `m ≤ 2`).
///
/// For `m = 1` the grid runs over `(x, y)` directly. For `m = 2` the utility
/// depends only on `w_i = x_i + y_i` and the summed payment is linear, so for
/// each `w` the cheapest split fills the cheaper market first; the grid then
/// runs over `(w_1, w_2) ∈ [0, 2D_1] x [0, 2D_2]`.
pub fn grid_static_min(slots: &[TraceSlot], bounds: &[f64], v: f64, res: f64) -> f64 {
    let total = |x: &[f64], y: &[f64]| slots.iter().map(|s| loss_direct(s, x, y, v)).sum::<f64>();
    match bounds.len() {
        1 => zoom_min_2d(|x, y| total(&[x], &[y]), bounds[0], bounds[0], res),
        2 => {
            let p: Vec<f64> = (0..2).map(|i| slots.iter().map(|s| s.price_adv[i]).sum()).collect();
            let q: Vec<f64> = (0..2).map(|i| slots.iter().map(|s| s.price_spot[i]).sum()).collect();
            let split = |i: usize, w: f64| -> (f64, f64) {
                let d = bounds[i];
                if p[i] <= q[i] {
                    (w.min(d), (w - d).max(0.0))
                } else {
                    ((w - d).max(0.0), w.min(d))
                }
            };
            zoom_min_2d(
                |w1, w2| {
                    let (x1, y1) = split(0, w1);
                    let (x2, y2) = split(1, w2);
                    total(&[x1, x2], &[y1, y2])
                },
                2.0 * bounds[0],
                2.0 * bounds[1],
                res,
            )
        }
        _ => panic!("grid oracle supports m <= 2"),
    }
}

/// Small deterministic LCG so oracle inputs do not share the crate's RNG path.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn vec(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.range(lo, hi)).collect()
    }
}

/// Random slot with `m` resources, optionally with fulfillment ratios.
pub fn random_slot(rng: &mut Lcg, m: usize, sla: bool) -> TraceSlot {
    let s = TraceSlot::new(rng.range(0.0, 1.5), rng.vec(m, 0.0, 1.2), rng.vec(m, 0.0, 1.2), rng.vec(m, 0.0, 1.0)).unwrap();
    if sla {
        let a = rng.vec(m, 0.3, 1.0);
        let b = rng.vec(m, 0.3, 1.0);
        s.with_sla(a, b).unwrap()
    } else {
        s
    }
}
