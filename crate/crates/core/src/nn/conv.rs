//! The CNN front: 3×3 same-padded convolutions with ReLU and one 2×2
//! ceil-mode max-pool after the first convolution, halving both time and
//! frequency resolution. The pooled stack is flattened per frame before the
//! recurrent layers.
//!
//! Convolutions run as nine shifted matrix products (one per kernel tap),
//! which keeps peak memory at the image size instead of an im2col buffer.

use ndarray::{s, Array1, Array2, Array3, Array4, Axis, NdFloat};

/// One convolution layer: kernels shaped (C_out, C_in, 3, 3) plus bias.
#[derive(Debug, Clone)]
pub struct ConvLayerParams<F> {
    pub kernels: Array4<F>,
    pub bias: Array1<F>,
}

/// Copy of `img` shifted by (dy, dx), zero-filled at the borders.
fn shifted<F: NdFloat>(img: &Array3<F>, dy: isize, dx: isize) -> Array3<F> {
    let (c, h, w) = img.dim();
    let mut out = Array3::zeros((c, h, w));
    let y0 = (-dy).max(0) as usize;
    let y1 = (h as isize - dy.max(0)) as usize;
    let x0 = (-dx).max(0) as usize;
    let x1 = (w as isize - dx.max(0)) as usize;
    if y0 < y1 && x0 < x1 {
        out.slice_mut(s![.., y0..y1, x0..x1]).assign(&img.slice(s![
            ..,
            (y0 as isize + dy) as usize..(y1 as isize + dy) as usize,
            (x0 as isize + dx) as usize..(x1 as isize + dx) as usize
        ]));
    }
    out
}

/// Scatter `src` back with shift (dy, dx): the adjoint of [`shifted`].
fn unshift_add<F: NdFloat>(acc: &mut Array3<F>, src: &Array3<F>, dy: isize, dx: isize) {
    let (_, h, w) = src.dim();
    let y0 = (-dy).max(0) as usize;
    let y1 = (h as isize - dy.max(0)) as usize;
    let x0 = (-dx).max(0) as usize;
    let x1 = (w as isize - dx.max(0)) as usize;
    if y0 < y1 && x0 < x1 {
        let mut dst = acc.slice_mut(s![
            ..,
            (y0 as isize + dy) as usize..(y1 as isize + dy) as usize,
            (x0 as isize + dx) as usize..(x1 as isize + dx) as usize
        ]);
        dst += &src.slice(s![.., y0..y1, x0..x1]);
    }
}

fn conv_relu_forward<F: NdFloat>(p: &ConvLayerParams<F>, img: &Array3<F>) -> Array3<F> {
    let (c_in, h, w) = img.dim();
    let c_out = p.kernels.dim().0;
    let mut out_flat: Array2<F> = Array2::zeros((c_out, h * w));
    for ky in 0..3usize {
        for kx in 0..3usize {
            let tap: Array2<F> = p.kernels.slice(s![.., .., ky, kx]).to_owned();
            let moved = shifted(img, ky as isize - 1, kx as isize - 1);
            let moved_flat = moved.into_shape_with_order((c_in, h * w)).unwrap();
            out_flat = out_flat + tap.dot(&moved_flat);
        }
    }
    for (co, mut row) in out_flat.rows_mut().into_iter().enumerate() {
        let b = p.bias[co];
        row.mapv_inplace(|v| (v + b).max(F::zero()));
    }
    out_flat.into_shape_with_order((c_out, h, w)).unwrap()
}

/// Returns (kernel grads, bias grads, input grads).
fn conv_relu_backward<F: NdFloat>(
    p: &ConvLayerParams<F>,
    img: &Array3<F>,
    output: &Array3<F>,
    dout: &Array3<F>,
) -> (Array4<F>, Array1<F>, Array3<F>) {
    let (c_in, h, w) = img.dim();
    let c_out = p.kernels.dim().0;

    // ReLU: pass gradient only where the activation was positive.
    let mut dpre = dout.clone();
    ndarray::Zip::from(&mut dpre).and(output).for_each(|d, &o| {
        if o <= F::zero() {
            *d = F::zero();
        }
    });
    let dpre_flat = dpre.into_shape_with_order((c_out, h * w)).unwrap();

    let mut dk = Array4::zeros(p.kernels.dim());
    let mut dimg = Array3::zeros((c_in, h, w));
    for ky in 0..3usize {
        for kx in 0..3usize {
            let (dy, dx) = (ky as isize - 1, kx as isize - 1);
            let moved = shifted(img, dy, dx);
            let moved_flat = moved.into_shape_with_order((c_in, h * w)).unwrap();
            let dtap = dpre_flat.dot(&moved_flat.t());
            dk.slice_mut(s![.., .., ky, kx]).assign(&dtap);

            let tap: Array2<F> = p.kernels.slice(s![.., .., ky, kx]).to_owned();
            let dmoved = tap.t().dot(&dpre_flat);
            let dmoved = dmoved.into_shape_with_order((c_in, h, w)).unwrap();
            unshift_add(&mut dimg, &dmoved, dy, dx);
        }
    }
    let dbias = dpre_flat.sum_axis(Axis(1));
    (dk, dbias, dimg)
}

/// 2×2 max-pool with ceil-mode edges; returns output and the flat source
/// index of each maximum for the backward pass.
fn maxpool2<F: NdFloat>(img: &Array3<F>) -> (Array3<F>, Array3<usize>) {
    let (c, h, w) = img.dim();
    let (ho, wo) = (h.div_ceil(2), w.div_ceil(2));
    let mut out = Array3::zeros((c, ho, wo));
    let mut src = Array3::zeros((c, ho, wo));
    for ci in 0..c {
        for j in 0..ho {
            for i in 0..wo {
                let mut best = F::neg_infinity();
                let mut best_idx = 0usize;
                for dy in 0..2 {
                    for dx in 0..2 {
                        let (y, x) = (2 * j + dy, 2 * i + dx);
                        if y < h && x < w && img[(ci, y, x)] > best {
                            best = img[(ci, y, x)];
                            best_idx = y * w + x;
                        }
                    }
                }
                out[(ci, j, i)] = best;
                src[(ci, j, i)] = best_idx;
            }
        }
    }
    (out, src)
}

fn maxpool2_backward<F: NdFloat>(
    dout: &Array3<F>,
    src: &Array3<usize>,
    input_dim: (usize, usize, usize),
) -> Array3<F> {
    let (_, h, w) = input_dim;
    let mut dimg = Array3::zeros(input_dim);
    for ((ci, j, i), &d) in dout.indexed_iter() {
        let flat = src[(ci, j, i)];
        dimg[(ci, flat / w, flat % w)] += d;
    }
    dimg
}

/// Everything the backward pass needs.
pub struct ConvCache<F> {
    /// Input image to each convolution layer.
    images: Vec<Array3<F>>,
    /// Post-ReLU output of each convolution layer.
    outputs: Vec<Array3<F>>,
    pool_src: Array3<usize>,
    pool_input_dim: (usize, usize, usize),
    final_dim: (usize, usize, usize),
}

/// Run the front over a (time × feature) matrix. Output is one row per
/// pooled frame with channel-major flattened features, so a (T, D) input
/// becomes (ceil(T/2), C_last * ceil(D/2)).
pub fn conv_front_forward<F: NdFloat>(
    convs: &[ConvLayerParams<F>],
    input: &Array2<F>,
) -> (Array2<F>, ConvCache<F>) {
    assert!(!convs.is_empty());
    let (t_len, d) = input.dim();
    let img0 = input.clone().into_shape_with_order((1, t_len, d)).unwrap();

    let mut images = vec![img0];
    let mut outputs = Vec::new();
    let out0 = conv_relu_forward(&convs[0], &images[0]);
    let pool_input_dim = out0.dim();
    let (pooled, pool_src) = maxpool2(&out0);
    outputs.push(out0);

    let mut cur = pooled;
    for conv in &convs[1..] {
        images.push(cur.clone());
        let out = conv_relu_forward(conv, &cur);
        cur = out.clone();
        outputs.push(out);
    }

    let final_dim = cur.dim();
    let (c, ho, wo) = final_dim;
    let flat = cur
        .permuted_axes([1, 0, 2])
        .as_standard_layout()
        .to_owned()
        .into_shape_with_order((ho, c * wo))
        .unwrap();
    (
        flat,
        ConvCache { images, outputs, pool_src, pool_input_dim, final_dim },
    )
}

/// Backward through the front. Returns per-conv (kernel, bias) gradients in
/// layer order plus the gradient with respect to the input matrix.
pub fn conv_front_backward<F: NdFloat>(
    convs: &[ConvLayerParams<F>],
    cache: &ConvCache<F>,
    dflat: &Array2<F>,
) -> (Vec<(Array4<F>, Array1<F>)>, Array2<F>) {
    let (c, ho, wo) = cache.final_dim;
    let dcur = dflat
        .clone()
        .into_shape_with_order((ho, c, wo))
        .unwrap()
        .permuted_axes([1, 0, 2])
        .as_standard_layout()
        .to_owned();

    let mut grads: Vec<(Array4<F>, Array1<F>)> = convs
        .iter()
        .map(|c| (Array4::zeros(c.kernels.dim()), Array1::zeros(c.bias.dim())))
        .collect();

    let mut dcur = dcur;
    for i in (1..convs.len()).rev() {
        let (dk, db, dimg) = conv_relu_backward(&convs[i], &cache.images[i], &cache.outputs[i], &dcur);
        grads[i] = (dk, db);
        dcur = dimg;
    }

    let dpool_in = maxpool2_backward(&dcur, &cache.pool_src, cache.pool_input_dim);
    let (dk0, db0, dimg0) = conv_relu_backward(&convs[0], &cache.images[0], &cache.outputs[0], &dpool_in);
    grads[0] = (dk0, db0);

    let (_, t_len, d) = dimg0.dim();
    let dinput = dimg0.into_shape_with_order((t_len, d)).unwrap();
    (grads, dinput)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_front(rng: &mut ChaCha8Rng, channels: &[usize]) -> Vec<ConvLayerParams<f64>> {
        let mut c_in = 1;
        channels
            .iter()
            .map(|&c_out| {
                let kernels =
                    Array4::from_shape_fn((c_out, c_in, 3, 3), |_| rng.random_range(-0.5..0.5));
                let bias = Array1::from_shape_fn(c_out, |_| rng.random_range(-0.1..0.1));
                c_in = c_out;
                ConvLayerParams { kernels, bias }
            })
            .collect()
    }

    #[test]
    fn shapes_halve_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let front = random_front(&mut rng, &[3, 4]);
        let input = Array2::from_shape_fn((10, 7), |_| rng.random_range(-1.0..1.0));
        let (out, _) = conv_front_forward(&front, &input);
        assert_eq!(out.dim(), (5, 4 * 4)); // ceil(10/2), 4 channels * ceil(7/2)
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let front = random_front(&mut rng, &[2, 3]);
        let input = Array2::from_shape_fn((6, 5), |_| rng.random_range(-1.0..1.0));

        let loss = |front: &[ConvLayerParams<f64>], input: &Array2<f64>| -> f64 {
            conv_front_forward(front, input).0.iter().map(|v| v * v).sum()
        };

        let (out, cache) = conv_front_forward(&front, &input);
        let dflat = out.mapv(|v| 2.0 * v);
        let (grads, dinput) = conv_front_backward(&front, &cache, &dflat);

        let eps = 1e-6;
        // Kernel gradient spot checks across both layers.
        for (li, idx) in [(0usize, (1, 0, 0, 2)), (1usize, (2, 1, 2, 1))] {
            let mut f2 = front.clone();
            f2[li].kernels[idx] += eps;
            let up = loss(&f2, &input);
            f2[li].kernels[idx] -= 2.0 * eps;
            let down = loss(&f2, &input);
            let numeric = (up - down) / (2.0 * eps);
            let analytic = grads[li].0[idx];
            assert!(
                (numeric - analytic).abs() <= 1e-5 * numeric.abs().max(1.0),
                "layer {li}: numeric {numeric} vs analytic {analytic}"
            );
        }
        // Bias and input gradients.
        let mut f2 = front.clone();
        f2[1].bias[0] += eps;
        let up = loss(&f2, &input);
        f2[1].bias[0] -= 2.0 * eps;
        let down = loss(&f2, &input);
        let numeric = (up - down) / (2.0 * eps);
        assert!((numeric - grads[1].1[0]).abs() <= 1e-5 * numeric.abs().max(1.0));

        let mut i2 = input.clone();
        i2[(3, 2)] += eps;
        let up = loss(&front, &i2);
        i2[(3, 2)] -= 2.0 * eps;
        let down = loss(&front, &i2);
        let numeric = (up - down) / (2.0 * eps);
        assert!((numeric - dinput[(3, 2)]).abs() <= 1e-5 * numeric.abs().max(1.0));
    }

    #[test]
    fn pool_tracks_maxima() {
        let mut img = Array3::zeros((1, 4, 4));
        img[(0, 1, 1)] = 5.0;
        img[(0, 2, 3)] = 7.0;
        let (out, src) = maxpool2(&img);
        assert_eq!(out[(0, 0, 0)], 5.0);
        assert_eq!(out[(0, 1, 1)], 7.0);
        assert_eq!(src[(0, 0, 0)], 1 * 4 + 1);
        assert_eq!(src[(0, 1, 1)], 2 * 4 + 3);
    }
}
