//! Writes procedurally arranged bedrooms in the training-scene format.
//!
//! cargo run --example gen_bedrooms -- <count> <seed> > scenes.json

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sago::learning::{TrainingObject, TrainingScene};

struct Builder {
    objects: Vec<TrainingObject>,
}

impl Builder {
    fn add(&mut self, category: &str, position: [f64; 3], yaw: f64, size: [f64; 3], parent: Option<u32>) -> u32 {
        let id = self.objects.len() as u32 + 1;
        self.objects.push(TrainingObject {
            id,
            category: category.into(),
            position,
            yaw,
            size,
            support_parent: parent,
        });
        id
    }

    fn on(&mut self, category: &str, parent: u32, size: [f64; 3], rng: &mut ChaCha8Rng) -> u32 {
        let p = &self.objects[parent as usize - 1];
        let (s, c) = p.yaw.sin_cos();
        let u = rng.random_range(-0.3..0.3) * (p.size[0] - size[0]).max(0.0);
        let v = rng.random_range(-0.3..0.3) * (p.size[1] - size[1]).max(0.0);
        let pos = [
            p.position[0] + c * u - s * v,
            p.position[1] + s * u + c * v,
            p.position[2] + p.size[2],
        ];
        let yaw = p.yaw + rng.random_range(-0.1..0.1);
        self.add(category, pos, yaw, size, Some(parent))
    }
}

fn jitter(rng: &mut ChaCha8Rng, base: [f64; 3], rel: f64) -> [f64; 3] {
    base.map(|v| v * (1.0 + rng.random_range(-rel..rel)))
}

fn bedroom(rng: &mut ChaCha8Rng) -> TrainingScene {
    let w = rng.random_range(3.8..5.0);
    let d = rng.random_range(3.6..4.6);
    let h = rng.random_range(2.6..2.9);
    let mut b = Builder { objects: Vec::new() };
    let n = |rng: &mut ChaCha8Rng, s: f64| rng.random_range(-s..s);

    // bed with its head against the back wall
    let bed_size = jitter(rng, [2.0, 1.6, 0.5], 0.05);
    let bx = 0.5 * w + n(rng, 0.2);
    let bed = b.add("bed", [bx, d - 0.5 * bed_size[0] - 0.02, 0.0], -FRAC_PI_2 + n(rng, 0.04), bed_size, None);
    let two = rng.random_bool(0.7);
    let mut stands = Vec::new();
    for side in [-1.0, 1.0] {
        if side > 0.0 && !two {
            break;
        }
        let s = jitter(rng, [0.5, 0.4, 0.55], 0.05);
        let x = bx + side * (0.5 * bed_size[1] + 0.3 + rng.random_range(0.02..0.1));
        stands.push(b.add("nightstand", [x, d - 0.22, 0.0], -FRAC_PI_2 + n(rng, 0.05), s, None));
    }
    let wardrobe = jitter(rng, [1.2, 0.6, 2.0], 0.05);
    b.add("wardrobe", [0.32, rng.random_range(1.9..2.3), 0.0], FRAC_PI_2 + n(rng, 0.04), wardrobe, None);
    let dresser = b.add(
        "dresser",
        [0.27, rng.random_range(0.6..0.9), 0.0],
        FRAC_PI_2 + n(rng, 0.04),
        jitter(rng, [1.0, 0.5, 0.8], 0.05),
        None,
    );
    let dy = rng.random_range(0.8..1.5);
    let desk = b.add("desk", [w - 0.32, dy, 0.0], FRAC_PI_2 + n(rng, 0.04), jitter(rng, [1.2, 0.6, 0.75], 0.05), None);
    b.add(
        "chair",
        [w - 0.95 + n(rng, 0.05), dy + n(rng, 0.1), 0.0],
        -FRAC_PI_2 + n(rng, 0.3),
        jitter(rng, [0.5, 0.5, 0.9], 0.05),
        None,
    );
    let shelf = b.add(
        "bookshelf",
        [w - 0.17, dy + rng.random_range(1.1..1.4), 0.0],
        FRAC_PI_2 + n(rng, 0.04),
        jitter(rng, [0.8, 0.3, 1.8], 0.05),
        None,
    );
    b.add(
        "tv_stand",
        [0.5 * w + n(rng, 0.3), 0.22, 0.0],
        n(rng, 0.04),
        jitter(rng, [1.2, 0.4, 0.5], 0.05),
        None,
    );
    if rng.random_bool(0.5) {
        b.add(
            "armchair",
            [0.5 * w - 1.0 + n(rng, 0.1), 0.95 + n(rng, 0.1), 0.0],
            FRAC_PI_2 + n(rng, 0.3),
            jitter(rng, [0.8, 0.8, 0.9], 0.05),
            None,
        );
    }

    let lamp = jitter(rng, [0.25, 0.25, 0.45], 0.1);
    let p = if rng.random_bool(0.9) { stands[rng.random_range(0..stands.len())] } else { desk };
    b.on("lamp", p, lamp, rng);
    let books = jitter(rng, [0.3, 0.2, 0.25], 0.1);
    b.on("books", if rng.random_bool(0.7) { shelf } else { desk }, books, rng);
    let plant = jitter(rng, [0.3, 0.3, 0.4], 0.1);
    if rng.random_bool(0.6) {
        b.on("plant", dresser, plant, rng);
    } else {
        b.add("plant", [w - 0.3, d - 0.3, 0.0], n(rng, 3.0), plant, None);
    }
    let laptop = jitter(rng, [0.35, 0.25, 0.03], 0.05);
    b.on("laptop", if rng.random_bool(0.8) { desk } else { bed }, laptop, rng);

    TrainingScene {
        room_type: Some("bedroom".into()),
        room_dims: [w, d, h],
        objects: b.objects,
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let count: usize = args.get(1).map_or(50, |s| s.parse().expect("count"));
    let seed: u64 = args.get(2).map_or(0, |s| s.parse().expect("seed"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenes: Vec<TrainingScene> = (0..count).map(|_| bedroom(&mut rng)).collect();
    println!("{}", serde_json::to_string_pretty(&scenes).unwrap());
}
