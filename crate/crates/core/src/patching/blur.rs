use image::RgbImage;

/// Interleaved RGB image with `f32` intensities in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl FloatImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height * 3],
        }
    }

    pub fn from_rgb(img: &RgbImage) -> Self {
        Self {
            width: img.width() as usize,
            height: img.height() as usize,
            data: img.as_raw().iter().map(|&v| v as f32).collect(),
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * 3 + c]
    }

    #[inline]
    pub fn at_mut(&mut self, x: usize, y: usize, c: usize) -> &mut f32 {
        &mut self.data[(y * self.width + x) * 3 + c]
    }

    /// Copy out a `size`×`size` window starting at `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, size: usize) -> Vec<f32> {
        let mut out = Vec::with_capacity(size * size * 3);
        for y in y0..y0 + size {
            let start = (y * self.width + x0) * 3;
            out.extend_from_slice(&self.data[start..start + size * 3]);
        }
        out
    }
}

/// Mirror an out-of-range index back into `0..n` without repeating the edge
/// sample (`-1 → 1`, `n → n-2`).
pub fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut m = i.rem_euclid(period);
    if m >= n as isize {
        m = period - m;
    }
    m as usize
}

/// Sampled Gaussian with radius `⌈3σ⌉`, normalized to sum 1.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let w: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = w.iter().sum();
    w.into_iter().map(|v| v / sum).collect()
}

/// Separable Gaussian blur per channel with reflect padding. `sigma == 0`
/// returns the input unchanged.
pub fn gaussian_blur(image: &FloatImage, sigma: f64) -> FloatImage {
    assert!(sigma >= 0.0, "sigma must be non-negative");
    if sigma == 0.0 || image.data.is_empty() {
        return image.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let (w, h) = (image.width, image.height);

    let mut tmp = FloatImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f64; 3];
            for (k, &wk) in kernel.iter().enumerate() {
                let sx = reflect_index(x as isize + k as isize - r, w);
                for (c, a) in acc.iter_mut().enumerate() {
                    *a += wk * image.at(sx, y, c) as f64;
                }
            }
            for c in 0..3 {
                *tmp.at_mut(x, y, c) = acc[c] as f32;
            }
        }
    }
    let mut out = FloatImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f64; 3];
            for (k, &wk) in kernel.iter().enumerate() {
                let sy = reflect_index(y as isize + k as isize - r, h);
                for (c, a) in acc.iter_mut().enumerate() {
                    *a += wk * tmp.at(x, sy, c) as f64;
                }
            }
            for c in 0..3 {
                *out.at_mut(x, y, c) = acc[c] as f32;
            }
        }
    }
    out
}
