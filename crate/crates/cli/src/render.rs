//! Pixmap rendering of maps and layouts.
//!
//! Walls are white, bare floor is gray by elevation. With a layout, lit
//! tiles are shaded yellow by light level, under-lit tiles are blue and
//! torches red.

use image::{Rgb, RgbImage};
use torchlight_core::{Heightmap, LightParams, TorchLayout};

pub const WALL: Rgb<u8> = Rgb([255, 255, 255]);
pub const TORCH: Rgb<u8> = Rgb([255, 0, 0]);
pub const UNDERLIT: Rgb<u8> = Rgb([0, 0, 255]);

fn elevation_gray(z: u32, max_z: u32) -> Rgb<u8> {
    let v = (160 * z).checked_div(max_z).map_or(64, |s| 32 + s as u8);
    Rgb([v, v, v])
}

fn light_shade(light: u32, params: LightParams) -> Rgb<u8> {
    let v = (255 * light.min(params.l_torch) / params.l_torch.max(1)) as u8;
    Rgb([v, v, v / 2])
}

/// One `scale x scale` block per tile.
pub fn render(map: &Heightmap, layout: Option<&TorchLayout>, params: LightParams, scale: u32) -> RgbImage {
    let index = map.tile_index();
    let max_z = map.max_elevation();
    let mut img = RgbImage::new(map.width() as u32 * scale, map.height() as u32 * scale);
    for row in 0..map.height() {
        for col in 0..map.width() {
            let color = match (index.index_of(row, col), layout) {
                (None, _) => WALL,
                (Some(_), None) => elevation_gray(map.elevation(row, col).unwrap_or(0), max_z),
                (Some(i), Some(l)) if l.selection[i] => TORCH,
                (Some(i), Some(l)) if l.light[i] < params.l_min => UNDERLIT,
                (Some(i), Some(l)) => light_shade(l.light[i], params),
            };
            for dy in 0..scale {
                for dx in 0..scale {
                    img.put_pixel(col as u32 * scale + dx, row as u32 * scale + dy, color);
                }
            }
        }
    }
    img
}

/// Binary PPM bytes.
pub fn encode_ppm(img: &RgbImage) -> image::ImageResult<Vec<u8>> {
    use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
    use image::ImageEncoder;
    let mut out = Vec::new();
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary))
        .write_image(img.as_raw(), img.width(), img.height(), image::ExtendedColorType::Rgb8)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use torchlight_core::{light_levels, parse_heightmap};

    #[test]
    fn reserved_colors_are_never_shades() {
        let p = LightParams::default();
        for light in 0..=20 {
            let c = light_shade(light, p);
            assert!(c != TORCH && c != UNDERLIT && c != WALL);
        }
        for z in 0..5 {
            let c = elevation_gray(z, 4);
            assert!(c != TORCH && c != UNDERLIT && c != WALL);
        }
    }

    #[test]
    fn one_tile_one_pixel() {
        let map = parse_heightmap("0").unwrap();
        let img = render(&map, None, LightParams::default(), 1);
        assert_eq!(img.dimensions(), (1, 1));
        let bytes = encode_ppm(&img).unwrap();
        assert!(bytes.starts_with(b"P6"));
    }

    #[test]
    fn marker_census() {
        let map = parse_heightmap("0 0 0 # 0 0\n0 1 0 # 0 0").unwrap();
        let x = vec![true, false, false, false, false, false, false, false, true, false];
        let layout = light_levels(&map, &x, LightParams::default()).unwrap();
        let img = render(&map, Some(&layout), LightParams::default(), 3);
        let red = img.pixels().filter(|&&p| p == TORCH).count();
        assert_eq!(red, 2 * 9);
    }
}
