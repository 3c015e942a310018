//! Seeded synthetic RGB scenes with natural-image statistics: smooth
//! gradients, soft-edged shapes, low-frequency texture and mild grain.
//! Their spectra fall off with frequency, as photographs do.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Image;

fn colour<R: Rng>(rng: &mut R) -> [f64; 3] {
    [
        rng.random_range(0.0..255.0),
        rng.random_range(0.0..255.0),
        rng.random_range(0.0..255.0),
    ]
}

/// Smoothstep from 1 inside to 0 outside, over about 1.5 pixels.
fn soft_mask(signed_distance: f64) -> f64 {
    let t = (0.5 - signed_distance / 1.5).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

struct Ellipse {
    cy: f64,
    cx: f64,
    ry: f64,
    rx: f64,
    cos: f64,
    sin: f64,
    colour: [f64; 3],
    opacity: f64,
}

impl Ellipse {
    fn coverage(&self, y: f64, x: f64) -> f64 {
        let (dy, dx) = (y - self.cy, x - self.cx);
        let u = (dx * self.cos + dy * self.sin) / self.rx;
        let v = (-dx * self.sin + dy * self.cos) / self.ry;
        let r = (u * u + v * v).sqrt();
        // approximate pixel distance to the boundary
        soft_mask((r - 1.0) * self.rx.min(self.ry)) * self.opacity
    }
}

/// Deterministic `height × width × 3` test scene.
pub fn scene(seed: u64, height: usize, width: usize) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (hf, wf) = (height as f64, width as f64);
    let top = colour(&mut rng);
    let bottom = colour(&mut rng);

    let shapes: Vec<Ellipse> = (0..rng.random_range(3..7))
        .map(|_| {
            let angle: f64 = rng.random_range(0.0..std::f64::consts::PI);
            Ellipse {
                cy: rng.random_range(0.0..hf),
                cx: rng.random_range(0.0..wf),
                ry: rng.random_range(0.08..0.35) * hf,
                rx: rng.random_range(0.08..0.35) * wf,
                cos: angle.cos(),
                sin: angle.sin(),
                colour: colour(&mut rng),
                opacity: rng.random_range(0.6..1.0),
            }
        })
        .collect();

    let fy = rng.random_range(1.0..6.0) / hf;
    let fx = rng.random_range(1.0..6.0) / wf;
    let texture_amp = rng.random_range(5.0..25.0);
    let texture_phase = rng.random_range(0.0..std::f64::consts::TAU);
    let grain = rng.random_range(1.0..4.0);

    let mut pixels = Vec::with_capacity(height * width * 3);
    for r in 0..height {
        let y = r as f64 + 0.5;
        let blend = y / hf;
        for c in 0..width {
            let x = c as f64 + 0.5;
            let mut px: [f64; 3] =
                std::array::from_fn(|i| top[i] * (1.0 - blend) + bottom[i] * blend);
            for s in &shapes {
                let a = s.coverage(y, x);
                for (p, sc) in px.iter_mut().zip(s.colour) {
                    *p = *p * (1.0 - a) + sc * a;
                }
            }
            let wave =
                texture_amp * (std::f64::consts::TAU * (fy * y + fx * x) + texture_phase).sin();
            for p in px.iter_mut() {
                let n: f64 = StandardNormal.sample(&mut rng);
                pixels.push((*p + wave + grain * n).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Image::new(height, width, 3, pixels).expect("dimensions are consistent")
}

/// `count` scenes seeded `seed, seed+1, …`.
pub fn scene_set(seed: u64, count: usize, height: usize, width: usize) -> Vec<Image> {
    (0..count as u64)
        .map(|i| scene(seed.wrapping_add(i), height, width))
        .collect()
}
