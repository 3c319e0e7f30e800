use std::path::Path;

use image::{Rgb, RgbImage};
use instancecut::{InstanceMap, SuperpixelMap};

use crate::{io_err, CliError, CliResult};

const BORDER: Rgb<u8> = Rgb([128, 128, 128]);

/// Well-spread hue per instance id; background is black.
fn color(id: u32) -> Rgb<u8> {
    if id == 0 {
        return Rgb([0, 0, 0]);
    }
    let hue = (id as f64 * 0.618_033_988_749_895).fract() * 6.0;
    let x = 1.0 - (hue % 2.0 - 1.0).abs();
    let (r, g, b) = match hue as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let scale = |v: f64| (55.0 + 200.0 * v).round() as u8;
    Rgb([scale(r), scale(g), scale(b)])
}

pub(crate) fn render_png(map: &InstanceMap, spx: Option<&SuperpixelMap>, out: &Path) -> CliResult<()> {
    let (h, w) = (map.height, map.width);
    if let Some(s) = spx {
        if (s.height(), s.width()) != (h, w) {
            return Err(CliError::Invalid(format!(
                "superpixels are {}x{}, instances {h}x{w}",
                s.height(),
                s.width()
            )));
        }
    }
    let mut img = RgbImage::new(w as u32, h as u32);
    for r in 0..h {
        for c in 0..w {
            let p = r * w + c;
            let on_border = spx.is_some_and(|s| {
                (c + 1 < w && s.region(p) != s.region(p + 1)) || (r + 1 < h && s.region(p) != s.region(p + w))
            });
            let px = if on_border { BORDER } else { color(map.instance[p]) };
            img.put_pixel(c as u32, r as u32, px);
        }
    }
    img.save_with_format(out, image::ImageFormat::Png).map_err(|e| io_err(out, e))
}
