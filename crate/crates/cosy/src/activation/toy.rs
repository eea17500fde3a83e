//! A fully analytic reference model for desk-scale evaluation.

use image::RgbImage;

use super::{ActivationError, FeatureMap, ModelAdapter};

/// Four color-statistic neurons over any RGB image scaled to [0, 1]:
/// n0 = mean red, n1 = mean green, n2 = mean blue, n3 = mean red - mean blue.
///
/// Layer `color` exposes them as 1x1 maps. Layer `color_quadrants` exposes
/// the same neurons as 2x2 planes of per-quadrant means, whose average pool
/// equals the global mean; it exists to exercise spatial pooling and
/// per-layer grouping against a known answer.
#[derive(Debug, Default, Clone, Copy)]
pub struct ToyColorModel;

pub(crate) const LAYER_COLOR: &str = "color";
pub(crate) const LAYER_QUADRANTS: &str = "color_quadrants";

fn region_means(img: &RgbImage, y0: u32, y1: u32, x0: u32, x1: u32) -> [f64; 3] {
    let mut sums = [0.0f64; 3];
    for y in y0..y1 {
        for x in x0..x1 {
            let px = img.get_pixel(x, y);
            for c in 0..3 {
                sums[c] += f64::from(px.0[c]);
            }
        }
    }
    let count = f64::from((y1 - y0) * (x1 - x0)) * 255.0;
    sums.map(|s| s / count)
}

fn neuron_values(means: &[f64; 3]) -> [f64; 4] {
    [means[0], means[1], means[2], means[0] - means[2]]
}

impl ModelAdapter for ToyColorModel {
    type Input = RgbImage;

    fn model_id(&self) -> &str {
        "toy-color"
    }

    fn list_layers(&self) -> Vec<String> {
        vec![LAYER_COLOR.to_string(), LAYER_QUADRANTS.to_string()]
    }

    fn preprocess(&self, image: &RgbImage) -> Self::Input {
        image.clone()
    }

    fn activations(&self, inputs: &[RgbImage], layer_id: &str) -> Result<Vec<FeatureMap>, ActivationError> {
        match layer_id {
            LAYER_COLOR => inputs
                .iter()
                .map(|img| {
                    let (w, h) = img.dimensions();
                    let values = neuron_values(&region_means(img, 0, h, 0, w));
                    FeatureMap::new(4, 1, 1, values.to_vec())
                })
                .collect(),
            LAYER_QUADRANTS => inputs
                .iter()
                .enumerate()
                .map(|(i, img)| {
                    let (w, h) = img.dimensions();
                    if w < 2 || h < 2 {
                        return Err(ActivationError::AdapterFailure {
                            image_index: Some(i),
                            detail: format!("{LAYER_QUADRANTS} needs at least 2x2 images, got {w}x{h}"),
                        });
                    }
                    // Plane order matches the quadrant grid: top-left,
                    // top-right, bottom-left, bottom-right.
                    let quads = [
                        region_means(img, 0, h / 2, 0, w / 2),
                        region_means(img, 0, h / 2, w / 2, w),
                        region_means(img, h / 2, h, 0, w / 2),
                        region_means(img, h / 2, h, w / 2, w),
                    ];
                    let mut data = Vec::with_capacity(16);
                    for neuron in 0..4 {
                        for quad in &quads {
                            data.push(neuron_values(quad)[neuron]);
                        }
                    }
                    FeatureMap::new(4, 2, 2, data)
                })
                .collect(),
            other => Err(ActivationError::UnknownLayer {
                layer_id: other.to_string(),
                available: self.list_layers(),
            }),
        }
    }
}
