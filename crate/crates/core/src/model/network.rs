use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{self, snake, snake_grad};
use crate::error::{Error, Result};

/// Architecture hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanConfig {
    /// Window length: motion maps in, samples out.
    pub n: usize,
    pub h: usize,
    pub w: usize,
    pub c1: usize,
    pub c2: usize,
    pub hidden: usize,
    pub snake_a: f64,
    pub seed: u64,
}

impl Default for CanConfig {
    fn default() -> Self {
        Self {
            n: 64,
            h: 64,
            w: 64,
            c1: 8,
            c2: 16,
            hidden: 64,
            snake_a: 1.0,
            seed: 0,
        }
    }
}

impl CanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!("window length n = {} < 2", self.n)));
        }
        if self.h == 0 || self.w == 0 || !self.h.is_multiple_of(4) || !self.w.is_multiple_of(4) {
            return Err(Error::invalid(format!(
                "input size {}x{} must be positive and divisible by 4",
                self.h, self.w
            )));
        }
        if self.c1 == 0 || self.c2 == 0 || self.hidden == 0 {
            return Err(Error::invalid(
                "channel and hidden widths must be at least 1",
            ));
        }
        if !(self.snake_a > 0.0 && self.snake_a.is_finite()) {
            return Err(Error::invalid(format!(
                "snake_a = {} must be positive",
                self.snake_a
            )));
        }
        Ok(())
    }

    fn flat_features(&self) -> usize {
        self.c2 * (self.h / 4) * (self.w / 4)
    }

    /// Expected shape and fan-in of every parameter, in storage order.
    pub fn param_shapes(&self) -> Vec<(&'static str, Vec<usize>)> {
        let Self {
            n, c1, c2, hidden, ..
        } = *self;
        let flat = self.flat_features();
        vec![
            ("a1_w", vec![c1, 1, 3, 3]),
            ("a1_b", vec![c1]),
            ("a2_w", vec![c1, c1, 3, 3]),
            ("a2_b", vec![c1]),
            ("g1_w", vec![1, c1, 1, 1]),
            ("g1_b", vec![1]),
            ("a3_w", vec![c2, c1, 3, 3]),
            ("a3_b", vec![c2]),
            ("a4_w", vec![c2, c2, 3, 3]),
            ("a4_b", vec![c2]),
            ("g2_w", vec![1, c2, 1, 1]),
            ("g2_b", vec![1]),
            ("m1_w", vec![c1, n, 3, 3]),
            ("m1_b", vec![c1]),
            ("m2_w", vec![c1, c1, 3, 3]),
            ("m2_b", vec![c1]),
            ("m3_w", vec![c2, c1, 3, 3]),
            ("m3_b", vec![c2]),
            ("m4_w", vec![c2, c2, 3, 3]),
            ("m4_b", vec![c2]),
            ("d1_w", vec![hidden, flat]),
            ("d1_b", vec![hidden]),
            ("d2_w", vec![n, hidden]),
            ("d2_b", vec![n]),
        ]
    }
}

/// Dense `f64` array with an explicit shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }
}

const N_PARAMS: usize = 24;

/// Every learnable array of the network, in a fixed order. Gradients and
/// optimizer moments use the same container.
#[derive(Debug, Clone, PartialEq)]
pub struct CanParams {
    tensors: Vec<Tensor>,
    names: Vec<&'static str>,
}

// indices into CanParams::tensors, matching CanConfig::param_shapes
const A1_W: usize = 0;
const A1_B: usize = 1;
const A2_W: usize = 2;
const A2_B: usize = 3;
const G1_W: usize = 4;
const G1_B: usize = 5;
const A3_W: usize = 6;
const A3_B: usize = 7;
const A4_W: usize = 8;
const A4_B: usize = 9;
const G2_W: usize = 10;
const G2_B: usize = 11;
const M1_W: usize = 12;
const M1_B: usize = 13;
const M2_W: usize = 14;
const M2_B: usize = 15;
const M3_W: usize = 16;
const M3_B: usize = 17;
const M4_W: usize = 18;
const M4_B: usize = 19;
const D1_W: usize = 20;
const D1_B: usize = 21;
const D2_W: usize = 22;
const D2_B: usize = 23;

impl CanParams {
    pub fn zeros(config: &CanConfig) -> Self {
        let shapes = config.param_shapes();
        Self {
            names: shapes.iter().map(|(n, _)| *n).collect(),
            tensors: shapes.iter().map(|(_, s)| Tensor::zeros(s)).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &Tensor)> {
        self.names.iter().copied().zip(&self.tensors)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&'static str, &mut Tensor)> {
        self.names.iter().copied().zip(self.tensors.iter_mut())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.iter().find(|(n, _)| *n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.iter_mut().find(|(n, _)| *n == name).map(|(_, t)| t)
    }

    fn d(&self, idx: usize) -> &[f64] {
        &self.tensors[idx].data
    }

    /// Adds `other` elementwise.
    pub fn accumulate(&mut self, other: &CanParams) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in &mut self.tensors {
            for x in &mut t.data {
                *x *= factor;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors
            .iter()
            .all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    /// Replaces tensors by name after checking each shape against `config`.
    pub(crate) fn from_named(config: &CanConfig, named: Vec<(String, Tensor)>) -> Result<Self> {
        let mut params = Self::zeros(config);
        if named.len() != N_PARAMS {
            return Err(Error::shape(format!(
                "expected {N_PARAMS} parameters, found {}",
                named.len()
            )));
        }
        for (name, tensor) in named {
            let slot = params
                .get_mut(&name)
                .ok_or_else(|| Error::shape(format!("unknown parameter '{name}'")))?;
            if slot.shape != tensor.shape {
                return Err(Error::shape(format!(
                    "parameter '{name}' has shape {:?}, config expects {:?}",
                    tensor.shape, slot.shape
                )));
            }
            *slot = tensor;
        }
        Ok(params)
    }
}

/// Convolutional attention network with an `n`-sample Snake regression head.
#[derive(Debug, Clone, PartialEq)]
pub struct CanModel {
    pub config: CanConfig,
    pub params: CanParams,
}

/// Activations kept from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    config: CanConfig,
    appearance: Vec<f64>,
    motion: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    sig1: Vec<f64>,
    mask1: Vec<f64>,
    pooled_a: Vec<f64>,
    a3: Vec<f64>,
    a4: Vec<f64>,
    sig2: Vec<f64>,
    mask2: Vec<f64>,
    mo1: Vec<f64>,
    mo2: Vec<f64>,
    q1: Vec<f64>,
    mo3: Vec<f64>,
    mo4: Vec<f64>,
    flat: Vec<f64>,
    hidden: Vec<f64>,
    pre_snake: Vec<f64>,
}

impl CanModel {
    /// Uniform initialization in `(-s, s)` with `s = sqrt(1 / fan_in)`.
    pub fn new(config: CanConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = CanParams::zeros(&config);
        let shapes = config.param_shapes();
        for pair in shapes.chunks_exact(2) {
            let (w_name, w_shape) = &pair[0];
            let fan_in: usize = w_shape[1..].iter().product();
            let s = (1.0 / fan_in as f64).sqrt();
            for name in [*w_name, pair[1].0] {
                let t = params.get_mut(name).expect("shape table names");
                for v in &mut t.data {
                    *v = rng.random_range(-s..s);
                }
            }
        }
        Ok(Self { config, params })
    }

    pub fn from_params(config: CanConfig, params: CanParams) -> Result<Self> {
        config.validate()?;
        let expected = CanParams::zeros(&config);
        for ((name, a), (_, b)) in params.iter().zip(expected.iter()) {
            if a.shape != b.shape {
                return Err(Error::shape(format!(
                    "parameter '{name}' has shape {:?}, config expects {:?}",
                    a.shape, b.shape
                )));
            }
        }
        if !params.all_finite() {
            return Err(Error::invalid("parameters contain non-finite values"));
        }
        Ok(Self { config, params })
    }

    /// Runs the network on one window: an `h x w` appearance frame and
    /// `n x h x w` stacked motion maps.
    pub fn forward(&self, appearance: &[f64], motion: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        let cfg = self.config;
        let plane = cfg.h * cfg.w;
        if appearance.len() != plane {
            return Err(Error::shape(format!(
                "appearance has {} values, expected {plane}",
                appearance.len()
            )));
        }
        if motion.len() != cfg.n * plane {
            return Err(Error::shape(format!(
                "motion has {} values, expected {}",
                motion.len(),
                cfg.n * plane
            )));
        }
        let p = &self.params;
        let (h, w, h2, w2) = (cfg.h, cfg.w, cfg.h / 2, cfg.w / 2);

        // appearance branch
        let mut a1 = layers::conv3x3(appearance, 1, h, w, p.d(A1_W), p.d(A1_B), cfg.c1);
        layers::tanh_inplace(&mut a1);
        let mut a2 = layers::conv3x3(&a1, cfg.c1, h, w, p.d(A2_W), p.d(A2_B), cfg.c1);
        layers::tanh_inplace(&mut a2);
        let z1 = layers::conv1x1_to_single(&a2, cfg.c1, plane, p.d(G1_W), p.d(G1_B)[0]);
        let (mask1, sig1) = layers::attention_mask(&z1);
        let pooled_a = layers::mean_pool2(&a2, cfg.c1, h, w);
        let mut a3 = layers::conv3x3(&pooled_a, cfg.c1, h2, w2, p.d(A3_W), p.d(A3_B), cfg.c2);
        layers::tanh_inplace(&mut a3);
        let mut a4 = layers::conv3x3(&a3, cfg.c2, h2, w2, p.d(A4_W), p.d(A4_B), cfg.c2);
        layers::tanh_inplace(&mut a4);
        let z2 = layers::conv1x1_to_single(&a4, cfg.c2, h2 * w2, p.d(G2_W), p.d(G2_B)[0]);
        let (mask2, sig2) = layers::attention_mask(&z2);

        // motion branch
        let mut mo1 = layers::conv3x3(motion, cfg.n, h, w, p.d(M1_W), p.d(M1_B), cfg.c1);
        layers::tanh_inplace(&mut mo1);
        let mut mo2 = layers::conv3x3(&mo1, cfg.c1, h, w, p.d(M2_W), p.d(M2_B), cfg.c1);
        layers::tanh_inplace(&mut mo2);
        let gated1 = layers::apply_mask(&mo2, &mask1);
        let q1 = layers::mean_pool2(&gated1, cfg.c1, h, w);
        let mut mo3 = layers::conv3x3(&q1, cfg.c1, h2, w2, p.d(M3_W), p.d(M3_B), cfg.c2);
        layers::tanh_inplace(&mut mo3);
        let mut mo4 = layers::conv3x3(&mo3, cfg.c2, h2, w2, p.d(M4_W), p.d(M4_B), cfg.c2);
        layers::tanh_inplace(&mut mo4);
        let gated2 = layers::apply_mask(&mo4, &mask2);
        let flat = layers::mean_pool2(&gated2, cfg.c2, h2, w2);

        // regression head
        let mut hidden = layers::dense(&flat, p.d(D1_W), p.d(D1_B));
        layers::tanh_inplace(&mut hidden);
        let pre_snake = layers::dense(&hidden, p.d(D2_W), p.d(D2_B));
        let out = pre_snake.iter().map(|&v| snake(v, cfg.snake_a)).collect();

        let cache = ForwardCache {
            config: cfg,
            appearance: appearance.to_vec(),
            motion: motion.to_vec(),
            a1,
            a2,
            sig1,
            mask1,
            pooled_a,
            a3,
            a4,
            sig2,
            mask2,
            mo1,
            mo2,
            q1,
            mo3,
            mo4,
            flat,
            hidden,
            pre_snake,
        };
        Ok((out, cache))
    }

    /// Forward pass without keeping activations.
    pub fn predict(&self, appearance: &[f64], motion: &[f64]) -> Result<Vec<f64>> {
        self.forward(appearance, motion).map(|(out, _)| out)
    }

    /// Reverse-mode gradients of `sum(d_output * output)` for every parameter.
    pub fn backward(&self, cache: &ForwardCache, d_output: &[f64]) -> Result<CanParams> {
        let cfg = self.config;
        if cache.config != cfg {
            return Err(Error::shape(
                "forward cache was produced by a different configuration",
            ));
        }
        if d_output.len() != cfg.n {
            return Err(Error::shape(format!(
                "output gradient has {} values, expected {}",
                d_output.len(),
                cfg.n
            )));
        }
        let p = &self.params;
        let mut g = CanParams::zeros(&cfg);
        let (h, w, h2, w2) = (cfg.h, cfg.w, cfg.h / 2, cfg.w / 2);
        let plane = h * w;

        // head
        let d_pre: Vec<f64> = d_output
            .iter()
            .zip(&cache.pre_snake)
            .map(|(&d, &x)| d * snake_grad(x, cfg.snake_a))
            .collect();
        let mut d_hidden = {
            let (dw, db) = two_mut(&mut g, D2_W, D2_B);
            layers::dense_backward(&cache.hidden, p.d(D2_W), &d_pre, dw, db)
        };
        layers::tanh_backward_inplace(&cache.hidden, &mut d_hidden);
        let d_flat = {
            let (dw, db) = two_mut(&mut g, D1_W, D1_B);
            layers::dense_backward(&cache.flat, p.d(D1_W), &d_hidden, dw, db)
        };

        // motion stage 2
        let d_gated2 = layers::mean_pool2_backward(&d_flat, cfg.c2, h2, w2);
        let (mut d_mo4, d_mask2) = layers::apply_mask_backward(&cache.mo4, &cache.mask2, &d_gated2);
        layers::tanh_backward_inplace(&cache.mo4, &mut d_mo4);
        let mut d_mo3 = {
            let (dw, db) = two_mut(&mut g, M4_W, M4_B);
            layers::conv3x3_backward(
                &cache.mo3,
                cfg.c2,
                h2,
                w2,
                p.d(M4_W),
                cfg.c2,
                &d_mo4,
                dw,
                db,
                true,
            )
            .expect("input grad requested")
        };
        layers::tanh_backward_inplace(&cache.mo3, &mut d_mo3);
        let d_q1 = {
            let (dw, db) = two_mut(&mut g, M3_W, M3_B);
            layers::conv3x3_backward(
                &cache.q1,
                cfg.c1,
                h2,
                w2,
                p.d(M3_W),
                cfg.c2,
                &d_mo3,
                dw,
                db,
                true,
            )
            .expect("input grad requested")
        };

        // motion stage 1
        let d_gated1 = layers::mean_pool2_backward(&d_q1, cfg.c1, h, w);
        let (mut d_mo2, d_mask1) = layers::apply_mask_backward(&cache.mo2, &cache.mask1, &d_gated1);
        layers::tanh_backward_inplace(&cache.mo2, &mut d_mo2);
        let mut d_mo1 = {
            let (dw, db) = two_mut(&mut g, M2_W, M2_B);
            layers::conv3x3_backward(
                &cache.mo1,
                cfg.c1,
                h,
                w,
                p.d(M2_W),
                cfg.c1,
                &d_mo2,
                dw,
                db,
                true,
            )
            .expect("input grad requested")
        };
        layers::tanh_backward_inplace(&cache.mo1, &mut d_mo1);
        {
            let (dw, db) = two_mut(&mut g, M1_W, M1_B);
            layers::conv3x3_backward(
                &cache.motion,
                cfg.n,
                h,
                w,
                p.d(M1_W),
                cfg.c1,
                &d_mo1,
                dw,
                db,
                false,
            );
        }

        // appearance stage 2, reached through mask 2
        let d_z2 = layers::attention_mask_backward(&cache.sig2, &d_mask2);
        let mut d_a4 = {
            let (dw, db) = two_mut(&mut g, G2_W, G2_B);
            layers::conv1x1_to_single_backward(&cache.a4, h2 * w2, p.d(G2_W), &d_z2, dw, &mut db[0])
        };
        layers::tanh_backward_inplace(&cache.a4, &mut d_a4);
        let mut d_a3 = {
            let (dw, db) = two_mut(&mut g, A4_W, A4_B);
            layers::conv3x3_backward(
                &cache.a3,
                cfg.c2,
                h2,
                w2,
                p.d(A4_W),
                cfg.c2,
                &d_a4,
                dw,
                db,
                true,
            )
            .expect("input grad requested")
        };
        layers::tanh_backward_inplace(&cache.a3, &mut d_a3);
        let d_pooled_a = {
            let (dw, db) = two_mut(&mut g, A3_W, A3_B);
            layers::conv3x3_backward(
                &cache.pooled_a,
                cfg.c1,
                h2,
                w2,
                p.d(A3_W),
                cfg.c2,
                &d_a3,
                dw,
                db,
                true,
            )
            .expect("input grad requested")
        };

        // appearance stage 1: a2 feeds both mask 1 and the pooled path
        let mut d_a2 = layers::mean_pool2_backward(&d_pooled_a, cfg.c1, h, w);
        let d_z1 = layers::attention_mask_backward(&cache.sig1, &d_mask1);
        {
            let (dw, db) = two_mut(&mut g, G1_W, G1_B);
            let via_mask = layers::conv1x1_to_single_backward(
                &cache.a2,
                plane,
                p.d(G1_W),
                &d_z1,
                dw,
                &mut db[0],
            );
            for (a, b) in d_a2.iter_mut().zip(via_mask) {
                *a += b;
            }
        }
        layers::tanh_backward_inplace(&cache.a2, &mut d_a2);
        let mut d_a1 = {
            let (dw, db) = two_mut(&mut g, A2_W, A2_B);
            layers::conv3x3_backward(
                &cache.a1,
                cfg.c1,
                h,
                w,
                p.d(A2_W),
                cfg.c1,
                &d_a2,
                dw,
                db,
                true,
            )
            .expect("input grad requested")
        };
        layers::tanh_backward_inplace(&cache.a1, &mut d_a1);
        {
            let (dw, db) = two_mut(&mut g, A1_W, A1_B);
            layers::conv3x3_backward(
                &cache.appearance,
                1,
                h,
                w,
                p.d(A1_W),
                cfg.c1,
                &d_a1,
                dw,
                db,
                false,
            );
        }
        Ok(g)
    }
}

/// Disjoint mutable borrows of a weight tensor and its bias (`w < b`).
fn two_mut(g: &mut CanParams, w: usize, b: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(w < b);
    let (lo, hi) = g.tensors.split_at_mut(b);
    (&mut lo[w].data, &mut hi[0].data)
}
