use crate::tensor_io::RgbImage;

/// Pixels whose darkest channel is at or above this value count as background.
pub const DEFAULT_WHITE_THRESHOLD: u8 = 250;

/// Minimal axis-aligned window containing every pixel whose darkest channel is
/// below `white_threshold`. An image with no such pixel is returned unchanged.
pub fn tight_crop(image: &RgbImage, white_threshold: u8) -> RgbImage {
    let (w, h) = (image.width(), image.height());
    let mut bounds: Option<(usize, usize, usize, usize)> = None;
    for (y, row) in image.pixels().chunks_exact(3 * w.max(1)).enumerate().take(h) {
        for (x, px) in row.chunks_exact(3).enumerate() {
            if px[0].min(px[1]).min(px[2]) < white_threshold {
                bounds = Some(match bounds {
                    None => (x, y, x, y),
                    Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                });
            }
        }
    }
    match bounds {
        Some((x0, y0, x1, y1)) => image.sub_image(x0, y0, x1 - x0 + 1, y1 - y0 + 1),
        None => image.clone(),
    }
}
