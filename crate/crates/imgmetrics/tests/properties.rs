use jndbench_imgmetrics::{
    compute_all_images, gmsd, haar_psi, ms_ssim, nlpd, psnr_y, ssim, to_luma_bt709, uqi, ImageError, LumaImage,
    RgbImage, METRIC_NAMES,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rgb(w: usize, h: usize, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let px: Vec<u8> = (0..3 * w * h).map(|_| rng.random()).collect();
    RgbImage::from_rgb8(w, h, &px).unwrap()
}

fn textured(w: usize, h: usize, seed: u64) -> LumaImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..w * h)
        .map(|k| {
            let (r, c) = ((k / w) as f64, (k % w) as f64);
            (128.0 + 50.0 * (r / 6.0).sin() * (c / 9.0).cos() + rng.random_range(-30.0..30.0)).clamp(0.0, 255.0)
        })
        .collect();
    LumaImage::new(w, h, data).unwrap()
}

fn add_noise(img: &LumaImage, amp: f64, seed: u64) -> LumaImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = img.data.iter().map(|v| v + amp * rng.random_range(-1.0..1.0)).collect();
    LumaImage::new(img.width, img.height, data).unwrap()
}

#[test]
fn identical_images_hit_perfect_values() {
    let img = random_rgb(180, 176, 1);
    let out = compute_all_images(&img, &img).unwrap();
    let names: Vec<&str> = out.iter().map(|(n, _)| *n).collect();
    assert_eq!(names, METRIC_NAMES);
    let expect = [f64::INFINITY, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0];
    for ((name, got), want) in out.iter().zip(expect) {
        assert_eq!(*got, want, "{name}");
    }
}

#[test]
fn ssim_bounds_and_negative() {
    let x = textured(64, 64, 2);
    let neg = LumaImage::new(64, 64, x.data.iter().map(|v| 255.0 - v).collect()).unwrap();
    assert!(ssim(&x, &neg).unwrap() < 0.0);
    let y = add_noise(&x, 20.0, 3);
    let s = ssim(&x, &y).unwrap();
    assert!(s > 0.0 && s < 1.0);
}

#[test]
fn gmsd_ignores_constant_shift() {
    let x = textured(64, 48, 4).map(f64::round);
    let y = x.map(|v| v + 17.0);
    assert_eq!(gmsd(&x, &y).unwrap(), 0.0);
}

#[test]
fn nlpd_grows_with_noise() {
    let x = textured(96, 96, 5);
    let mut last = 0.0;
    for amp in [2.0, 5.0, 10.0, 20.0, 40.0] {
        let d = nlpd(&x, &add_noise(&x, amp, 6)).unwrap();
        assert!(d > last, "amp {amp}: {d} <= {last}");
        last = d;
    }
}

#[test]
fn haar_psi_in_unit_interval() {
    for seed in 0..200 {
        let a = random_rgb(16, 16, 2 * seed);
        let b = random_rgb(16, 16, 2 * seed + 1);
        let s = haar_psi(&a, &b).unwrap();
        assert!(s > 0.0 && s <= 1.0, "seed {seed}: {s}");
    }
}

#[test]
fn dimension_mismatch_names_both_sizes() {
    let a = random_rgb(20, 10, 7);
    let b = random_rgb(10, 20, 8);
    let err = compute_all_images(&a, &b).unwrap_err();
    assert!(matches!(err, ImageError::DimensionMismatch { .. }));
    let msg = err.to_string();
    assert!(msg.contains("20x10") && msg.contains("10x20"), "{msg}");
}

fn gaussian_blur(img: &LumaImage, sigma: f64) -> LumaImage {
    let r = (3.0 * sigma).ceil() as i64;
    let k: Vec<f64> = (-r..=r).map(|o| (-(o * o) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = k.iter().sum();
    let (w, h) = (img.width as i64, img.height as i64);
    let clamp = |i: i64, n: i64| i.clamp(0, n - 1) as usize;
    let pass = |src: &[f64], horizontal: bool| -> Vec<f64> {
        let mut out = vec![0.0; src.len()];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (j, kv) in k.iter().enumerate() {
                    let o = j as i64 - r;
                    let idx = if horizontal {
                        y as usize * w as usize + clamp(x + o, w)
                    } else {
                        clamp(y + o, h) * w as usize + x as usize
                    };
                    acc += kv / total * src[idx];
                }
                out[y as usize * w as usize + x as usize] = acc;
            }
        }
        out
    };
    let data = pass(&pass(&img.data, true), false);
    LumaImage::new(img.width, img.height, data).unwrap()
}

/// At matched MSE, blur should score lower than additive white noise on
/// a textured image. PSNR is blind to the difference by construction.
#[test]
fn ms_ssim_prefers_noise_to_blur_at_equal_mse() {
    let x = textured(192, 192, 9);
    let blurred = gaussian_blur(&x, 2.0);
    let mse_blur = x.data.iter().zip(&blurred.data).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / x.data.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let raw: Vec<f64> = (0..x.data.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let raw_mse = raw.iter().map(|v| v * v).sum::<f64>() / raw.len() as f64;
    let scale = (mse_blur / raw_mse).sqrt();
    let noisy = LumaImage::new(192, 192, x.data.iter().zip(&raw).map(|(a, n)| a + scale * n).collect()).unwrap();
    let p_blur = psnr_y(&x, &blurred, 255.0).unwrap();
    let p_noise = psnr_y(&x, &noisy, 255.0).unwrap();
    assert!((p_blur - p_noise).abs() < 1e-9);
    let m_blur = ms_ssim(&x, &blurred).unwrap();
    let m_noise = ms_ssim(&x, &noisy).unwrap();
    assert!(m_blur < m_noise, "blur {m_blur} noise {m_noise}");
}

#[test]
fn repeated_calls_are_bitwise_equal() {
    let a = random_rgb(176, 176, 11);
    let b = random_rgb(176, 176, 12);
    let first = compute_all_images(&a, &b).unwrap();
    let second = compute_all_images(&a, &b).unwrap();
    for ((n, x), (_, y)) in first.iter().zip(&second) {
        assert_eq!(x.to_bits(), y.to_bits(), "{n}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn luma_metrics_are_symmetric(seed in any::<u64>()) {
        let a = to_luma_bt709(&random_rgb(40, 36, seed));
        let b = to_luma_bt709(&random_rgb(40, 36, seed.wrapping_add(1)));
        let tol = 1e-12;
        prop_assert!((psnr_y(&a, &b, 255.0).unwrap() - psnr_y(&b, &a, 255.0).unwrap()).abs() < tol);
        prop_assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < tol);
        prop_assert!((gmsd(&a, &b).unwrap() - gmsd(&b, &a).unwrap()).abs() < tol);
        prop_assert!((uqi(&a, &b).unwrap() - uqi(&b, &a).unwrap()).abs() < tol);
        prop_assert!((nlpd(&a, &b).unwrap() - nlpd(&b, &a).unwrap()).abs() < tol);
    }

    #[test]
    fn haar_psi_is_symmetric(seed in any::<u64>()) {
        let a = random_rgb(33, 30, seed);
        let b = random_rgb(33, 30, seed.wrapping_add(1));
        prop_assert!((haar_psi(&a, &b).unwrap() - haar_psi(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn self_comparison_is_perfect(seed in any::<u64>(), w in 32usize..48, h in 32usize..48) {
        let a = random_rgb(w, h, seed);
        let y = to_luma_bt709(&a);
        prop_assert_eq!(psnr_y(&y, &y, 255.0).unwrap(), f64::INFINITY);
        prop_assert_eq!(ssim(&y, &y).unwrap(), 1.0);
        prop_assert_eq!(gmsd(&y, &y).unwrap(), 0.0);
        prop_assert_eq!(uqi(&y, &y).unwrap(), 1.0);
        prop_assert_eq!(nlpd(&y, &y).unwrap(), 0.0);
        prop_assert_eq!(haar_psi(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn gmsd_integer_shift_invariance(seed in any::<u64>(), shift in -60i32..60) {
        // Exact only for integer-valued samples.
        let a = to_luma_bt709(&random_rgb(30, 30, seed)).map(f64::round);
        let b = to_luma_bt709(&random_rgb(30, 30, seed ^ 0x55)).map(f64::round);
        let b2 = b.map(|v| v + shift as f64);
        prop_assert_eq!(gmsd(&a, &b).unwrap(), gmsd(&a.map(|v| v + shift as f64), &b2).unwrap());
    }
}
