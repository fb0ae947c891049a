//! Per-pixel metric implementations written from the definitions: explicit
//! 2-D windows, explicit mirror padding, no shared helpers with the library.

#![allow(dead_code)]

use jndbench_imgmetrics::{to_luma_bt709, LumaImage, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn mirror(mut i: i64, n: usize) -> usize {
    let n = n as i64;
    while i < 0 || i >= n {
        i = if i < 0 { -i - 1 } else { 2 * n - i - 1 };
    }
    i as usize
}

pub struct Grid {
    pub w: usize,
    pub h: usize,
    pub v: Vec<f64>,
}

impl Grid {
    pub fn from(img: &LumaImage) -> Self {
        Grid {
            w: img.width,
            h: img.height,
            v: img.data.clone(),
        }
    }
    pub fn get(&self, r: i64, c: i64) -> f64 {
        self.v[mirror(r, self.h) * self.w + mirror(c, self.w)]
    }
}

pub fn rgb_pair(w: usize, h: usize, seed: u64) -> (RgbImage, RgbImage) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Vec::with_capacity(3 * w * h);
    for r in 0..h {
        for c in 0..w {
            for ch in 0..3 {
                // Smooth structure plus texture so every window has variance.
                let base = 128.0 + 60.0 * ((r as f64 / 7.0 + ch as f64).sin() * (c as f64 / 5.0).cos());
                a.push((base + rng.random_range(-40.0..40.0)).clamp(0.0, 255.0) as u8);
            }
        }
    }
    let b: Vec<u8> = a
        .iter()
        .map(|v| (*v as i32 + rng.random_range(-25..=25)).clamp(0, 255) as u8)
        .collect();
    (RgbImage::from_rgb8(w, h, &a).unwrap(), RgbImage::from_rgb8(w, h, &b).unwrap())
}

pub fn luma_pair(w: usize, h: usize, seed: u64) -> (LumaImage, LumaImage) {
    let (a, b) = rgb_pair(w, h, seed);
    (to_luma_bt709(&a), to_luma_bt709(&b))
}

pub fn oracle_psnr(x: &LumaImage, y: &LumaImage) -> f64 {
    let mut se = 0.0;
    for k in 0..x.data.len() {
        se += (x.data[k] - y.data[k]).powi(2);
    }
    let mse = se / x.data.len() as f64;
    20.0 * 255.0f64.log10() - 10.0 * mse.log10()
}

/// Local statistics with a 2-D Gaussian weight table.
pub fn oracle_ssim_maps(x: &Grid, y: &Grid) -> (Vec<f64>, Vec<f64>) {
    let mut wt = [[0.0; 11]; 11];
    let mut total = 0.0;
    for (a, row) in wt.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            let (da, db) = (a as f64 - 5.0, b as f64 - 5.0);
            *v = (-(da * da + db * db) / (2.0 * 1.5 * 1.5)).exp();
            total += *v;
        }
    }
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let mut s_map = Vec::new();
    let mut cs_map = Vec::new();
    for r in 0..x.h as i64 {
        for c in 0..x.w as i64 {
            let (mut mx, mut my) = (0.0, 0.0);
            for a in 0..11i64 {
                for b in 0..11i64 {
                    let k = wt[a as usize][b as usize] / total;
                    mx += k * x.get(r + a - 5, c + b - 5);
                    my += k * y.get(r + a - 5, c + b - 5);
                }
            }
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for a in 0..11i64 {
                for b in 0..11i64 {
                    let k = wt[a as usize][b as usize] / total;
                    let dx = x.get(r + a - 5, c + b - 5) - mx;
                    let dy = y.get(r + a - 5, c + b - 5) - my;
                    vx += k * dx * dx;
                    vy += k * dy * dy;
                    cxy += k * dx * dy;
                }
            }
            let cs = (2.0 * cxy + c2) / (vx + vy + c2);
            cs_map.push(cs);
            s_map.push((2.0 * mx * my + c1) / (mx * mx + my * my + c1) * cs);
        }
    }
    (s_map, cs_map)
}

pub fn avg(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn block_mean(g: &Grid) -> Grid {
    let (w, h) = (g.w.div_ceil(2), g.h.div_ceil(2));
    let mut v = Vec::new();
    for r in 0..h as i64 {
        for c in 0..w as i64 {
            let (r2, c2) = (2 * r, 2 * c);
            v.push((g.get(r2, c2) + g.get(r2, c2 + 1) + g.get(r2 + 1, c2) + g.get(r2 + 1, c2 + 1)) / 4.0);
        }
    }
    Grid { w, h, v }
}

pub fn oracle_ms_ssim(x: &LumaImage, y: &LumaImage) -> f64 {
    let w = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
    let total: f64 = w.iter().sum();
    let (mut gx, mut gy) = (Grid::from(x), Grid::from(y));
    let mut out = 1.0;
    for s in 0..5 {
        let (sm, cm) = oracle_ssim_maps(&gx, &gy);
        let term = if s == 4 { avg(&sm) } else { avg(&cm) };
        out *= term.max(0.0).powf(w[s] / total);
        gx = block_mean(&gx);
        gy = block_mean(&gy);
    }
    out
}

pub fn oracle_gmsd(x: &LumaImage, y: &LumaImage) -> f64 {
    let prewitt_x = [[1.0, 0.0, -1.0], [1.0, 0.0, -1.0], [1.0, 0.0, -1.0]];
    let mag = |g: &Grid| -> Vec<f64> {
        let mut out = Vec::new();
        for r in 0..g.h as i64 {
            for c in 0..g.w as i64 {
                let (mut gx, mut gy) = (0.0, 0.0);
                for a in 0..3i64 {
                    for b in 0..3i64 {
                        let v = g.get(r + a - 1, c + b - 1);
                        gx += prewitt_x[a as usize][b as usize] / 3.0 * v;
                        gy += prewitt_x[b as usize][a as usize] / 3.0 * v;
                    }
                }
                out.push((gx * gx + gy * gy).sqrt());
            }
        }
        out
    };
    let mr = mag(&block_mean(&Grid::from(x)));
    let md = mag(&block_mean(&Grid::from(y)));
    let gms: Vec<f64> = mr.iter().zip(&md).map(|(a, b)| (2.0 * a * b + 170.0) / (a * a + b * b + 170.0)).collect();
    let m = avg(&gms);
    (gms.iter().map(|v| (v - m).powi(2)).sum::<f64>() / gms.len() as f64).sqrt()
}

/// Original closed form with unbiased moments on every 8x8 window.
pub fn oracle_uqi(x: &LumaImage, y: &LumaImage) -> f64 {
    let (gx, gy) = (Grid::from(x), Grid::from(y));
    let mut q = Vec::new();
    for r in 0..gx.h as i64 {
        for c in 0..gx.w as i64 {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for a in -4..4i64 {
                for b in -4..4i64 {
                    xs.push(gx.get(r + a, c + b));
                    ys.push(gy.get(r + a, c + b));
                }
            }
            let n = xs.len() as f64;
            let mx = avg(&xs);
            let my = avg(&ys);
            let mut sxx = 0.0;
            let mut syy = 0.0;
            let mut sxy = 0.0;
            for k in 0..xs.len() {
                sxx += (xs[k] - mx).powi(2) / (n - 1.0);
                syy += (ys[k] - my).powi(2) / (n - 1.0);
                sxy += (xs[k] - mx) * (ys[k] - my) / (n - 1.0);
            }
            q.push(4.0 * sxy * mx * my / ((sxx + syy) * (mx * mx + my * my)));
        }
    }
    avg(&q)
}

pub fn oracle_nlpd(x: &LumaImage, y: &LumaImage) -> f64 {
    let k1 = [1.0, 4.0, 6.0, 4.0, 1.0];
    let blur2d = |g: &Grid, gain: f64| -> Grid {
        let mut v = Vec::new();
        for r in 0..g.h as i64 {
            for c in 0..g.w as i64 {
                let mut acc = 0.0;
                for a in 0..5i64 {
                    for b in 0..5i64 {
                        acc += k1[a as usize] * k1[b as usize] / 256.0 * gain * g.get(r + a - 2, c + b - 2);
                    }
                }
                v.push(acc);
            }
        }
        Grid { w: g.w, h: g.h, v }
    };
    let reduce = |g: &Grid| -> Grid {
        let b = blur2d(g, 1.0);
        let (w, h) = (g.w.div_ceil(2), g.h.div_ceil(2));
        let mut v = Vec::new();
        for r in 0..h {
            for c in 0..w {
                v.push(b.v[2 * r * g.w + 2 * c]);
            }
        }
        Grid { w, h, v }
    };
    let expand = |g: &Grid, w: usize, h: usize| -> Grid {
        let mut v = vec![0.0; w * h];
        for r in 0..g.h {
            for c in 0..g.w {
                v[2 * r * w + 2 * c] = g.v[r * g.w + c];
            }
        }
        blur2d(&Grid { w, h, v }, 4.0)
    };
    let pyramid = |img: &LumaImage| -> Vec<Grid> {
        let mut cur = Grid::from(img);
        for v in cur.v.iter_mut() {
            *v /= 255.0;
        }
        let mut out = Vec::new();
        for _ in 0..5 {
            let low = reduce(&cur);
            let up = expand(&low, cur.w, cur.h);
            out.push(Grid {
                w: cur.w,
                h: cur.h,
                v: cur.v.iter().zip(&up.v).map(|(a, b)| a - b).collect(),
            });
            cur = low;
        }
        out.push(cur);
        out
    };
    let norm = |g: &Grid| -> Vec<f64> {
        let mut out = Vec::new();
        for r in 0..g.h as i64 {
            for c in 0..g.w as i64 {
                let mut s = 0.0;
                for a in -1..=1i64 {
                    for b in -1..=1i64 {
                        s += g.get(r + a, c + b).abs();
                    }
                }
                out.push(g.get(r, c) / (0.1 + s / 9.0));
            }
        }
        out
    };
    let (px, py) = (pyramid(x), pyramid(y));
    let mut acc = 0.0;
    for k in 0..6 {
        let (a, b) = (norm(&px[k]), norm(&py[k]));
        let d: Vec<f64> = a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).collect();
        acc += avg(&d).sqrt();
    }
    acc / 6.0
}

/// 2-D Haar filters convolved in 'same' mode (kernel flipped, output
/// aligned on index `m / 2`), with mirror padding.
pub fn oracle_haar_psi(x: &RgbImage, y: &RgbImage) -> f64 {
    let (cc, alpha) = (30.0, 4.2);
    let yiq = |img: &RgbImage| -> [Grid; 3] {
        let coeff = [[0.299, 0.587, 0.114], [0.596, -0.274, -0.322], [0.211, -0.523, 0.312]];
        let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
        coeff.map(|k| Grid {
            w: img.width(),
            h: img.height(),
            v: (0..r.len())
                .map(|i| k[0] * r[i] as f64 + k[1] * g[i] as f64 + k[2] * b[i] as f64)
                .collect(),
        })
    };
    let conv_same = |g: &Grid, kern: &Vec<Vec<f64>>| -> Grid {
        let m = kern.len() as i64;
        let mut v = Vec::new();
        for r in 0..g.h as i64 {
            for c in 0..g.w as i64 {
                let mut acc = 0.0;
                for a in 0..m {
                    for b in 0..m {
                        acc += kern[a as usize][b as usize] * g.get(r + m / 2 - a, c + m / 2 - b);
                    }
                }
                v.push(acc);
            }
        }
        Grid { w: g.w, h: g.h, v }
    };
    let mean2 = vec![vec![0.25, 0.25], vec![0.25, 0.25]];
    let sub = |g: &Grid| -> Grid {
        let f = conv_same(g, &mean2);
        let (w, h) = (g.w.div_ceil(2), g.h.div_ceil(2));
        let mut v = Vec::new();
        for r in 0..h {
            for c in 0..w {
                v.push(f.v[2 * r * g.w + 2 * c]);
            }
        }
        Grid { w, h, v }
    };
    let haar = |k: u32, transpose: bool| -> Vec<Vec<f64>> {
        let m = 1usize << k;
        let mut f = vec![vec![0.5f64.powi(k as i32); m]; m];
        for (a, row) in f.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                let first_half = if transpose { b < m / 2 } else { a < m / 2 };
                if first_half {
                    *v = -*v;
                }
            }
        }
        f
    };
    let [yr, ir, qr] = yiq(x).map(|g| sub(&g));
    let [yd, id, qd] = yiq(y).map(|g| sub(&g));
    let n = yr.v.len();
    let sim = |a: f64, b: f64| (2.0 * a * b + cc) / (a * a + b * b + cc);
    let mut local = vec![vec![0.0; n]; 3];
    let mut weight = vec![vec![0.0; n]; 3];
    for (ori, transpose) in [false, true].into_iter().enumerate() {
        let cr: Vec<Grid> = (1..=3).map(|k| conv_same(&yr, &haar(k, transpose))).collect();
        let cd: Vec<Grid> = (1..=3).map(|k| conv_same(&yd, &haar(k, transpose))).collect();
        for i in 0..n {
            weight[ori][i] = cr[2].v[i].abs().max(cd[2].v[i].abs());
            local[ori][i] = (sim(cr[0].v[i].abs(), cd[0].v[i].abs()) + sim(cr[1].v[i].abs(), cd[1].v[i].abs())) / 2.0;
        }
    }
    let (fir, fid, fqr, fqd) = (conv_same(&ir, &mean2), conv_same(&id, &mean2), conv_same(&qr, &mean2), conv_same(&qd, &mean2));
    for i in 0..n {
        let si = sim(fir.v[i].abs(), fid.v[i].abs());
        let sq = sim(fqr.v[i].abs(), fqd.v[i].abs());
        local[2][i] = (si + sq) / 2.0;
        weight[2][i] = (weight[0][i] + weight[1][i]) / 2.0;
    }
    let sig = |v: f64| 1.0 / (1.0 + (-alpha * v).exp());
    let (mut num, mut den) = (0.0, 0.0);
    for ch in 0..3 {
        for i in 0..n {
            num += sig(local[ch][i]) * weight[ch][i];
            den += weight[ch][i];
        }
    }
    let p = num / den;
    ((p / (1.0 - p)).ln() / alpha).powi(2)
}

