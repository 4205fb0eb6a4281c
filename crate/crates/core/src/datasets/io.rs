use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use ndarray::{Array2, Array3};
use tiff::decoder::{Decoder, DecodingResult};
use tiff::encoder::{colortype, TiffEncoder};

use crate::error::{Error, IoContext, Result};

pub fn read_rgb(path: &Path) -> Result<Array3<u8>> {
    let img = image::open(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    Array3::from_shape_vec((h as usize, w as usize, 3), img.into_raw()).map_err(|e| Error::Shape(e.to_string()))
}

pub fn write_rgb(path: &Path, rgb: &Array3<u8>) -> Result<()> {
    let (h, w, _) = rgb.dim();
    let data: Vec<u8> = rgb.iter().copied().collect();
    let img = image::RgbImage::from_raw(w as u32, h as u32, data)
        .ok_or_else(|| Error::Shape(format!("rgb buffer does not fit {w}x{h}")))?;
    img.save(path)?;
    Ok(())
}

/// Single-channel floating point TIFF, values in meters.
pub fn read_depth_tiff(path: &Path) -> Result<Array2<f32>> {
    let file = File::open(path).at(path)?;
    let mut dec = Decoder::new(std::io::BufReader::new(file))?;
    let (w, h) = dec.dimensions()?;
    let data: Vec<f32> = match dec.read_image()? {
        DecodingResult::F32(v) => v,
        DecodingResult::F64(v) => v.into_iter().map(|x| x as f32).collect(),
        _ => return Err(Error::Parse(format!("{}: depth TIFF must hold floating point samples", path.display()))),
    };
    Array2::from_shape_vec((h as usize, w as usize), data)
        .map_err(|_| Error::Parse(format!("{}: depth TIFF is not single channel", path.display())))
}

pub fn write_depth_tiff(path: &Path, depth: &Array2<f32>) -> Result<()> {
    let (h, w) = depth.dim();
    let file = File::create(path).at(path)?;
    let mut enc = TiffEncoder::new(BufWriter::new(file))?;
    let data: Vec<f32> = depth.iter().copied().collect();
    enc.write_image::<colortype::Gray32Float>(w as u32, h as u32, &data)?;
    Ok(())
}
