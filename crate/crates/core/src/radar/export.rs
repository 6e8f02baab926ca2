use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{RadarConfig, RadarError, RadarFrame, RasterExtent};

/// Key-value sidecar written next to each exported frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarMetadata {
    pub size: usize,
    pub timestamp: f64,
    pub radar_pixel: [i64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<RasterExtent>,
    pub config: RadarConfig,
}

impl RadarMetadata {
    pub fn new(frame: &RadarFrame, config: &RadarConfig) -> Self {
        Self {
            size: frame.size,
            timestamp: frame.timestamp,
            radar_pixel: frame.radar_pixel,
            extent: frame.extent,
            config: *config,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("metadata serializes")
    }

    pub fn parse(text: &str) -> Result<Self, RadarError> {
        toml::from_str(text).map_err(|e| RadarError::Format(e.to_string()))
    }
}

/// Binary graymap (P5), 0/255, top row = largest world y.
pub fn write_pgm<W: Write>(frame: &RadarFrame, mut out: W) -> std::io::Result<()> {
    write!(out, "P5\n{} {}\n255\n", frame.size, frame.size)?;
    let mut row = vec![0u8; frame.size];
    for y in (0..frame.size).rev() {
        for (x, v) in row.iter_mut().enumerate() {
            *v = if frame.get(x, y) != 0 { 255 } else { 0 };
        }
        out.write_all(&row)?;
    }
    Ok(())
}

/// Reads a square P5 graymap written by [`write_pgm`]. The frame has no extent.
pub fn read_pgm<R: Read>(mut input: R) -> Result<RadarFrame, RadarError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes).map_err(|e| RadarError::Format(e.to_string()))?;
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(RadarError::Format("truncated header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    let num = |s: &str| s.parse::<usize>().map_err(|_| RadarError::Format(format!("bad header field `{s}`")));
    if fields[0] != "P5" {
        return Err(RadarError::Format("not a P5 graymap".into()));
    }
    let (w, h) = (num(&fields[1])?, num(&fields[2])?);
    if w != h || num(&fields[3])? != 255 {
        return Err(RadarError::Format("expected a square 8-bit raster".into()));
    }
    let data = bytes.get(pos..pos + w * h).ok_or_else(|| RadarError::Format("truncated pixel data".into()))?;
    let mut frame = RadarFrame::blank(w, None, [(w / 2) as i64, (w / 2) as i64]);
    for (row, chunk) in data.chunks(w).enumerate() {
        let y = w - 1 - row;
        for (x, &v) in chunk.iter().enumerate() {
            if v != 0 {
                frame.set(x, y);
            }
        }
    }
    Ok(frame)
}

/// Lossless PNG with the same orientation as [`write_pgm`].
pub fn write_png(frame: &RadarFrame, path: &Path) -> image::ImageResult<()> {
    let g = frame.size as u32;
    let img = image::GrayImage::from_fn(g, g, |x, row| {
        let y = frame.size - 1 - row as usize;
        image::Luma([if frame.get(x as usize, y) != 0 { 255 } else { 0 }])
    });
    img.save(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let mut f = RadarFrame::blank(8, None, [4, 4]);
        f.set(1, 2);
        f.set(7, 7);
        let mut buf = Vec::new();
        write_pgm(&f, &mut buf).unwrap();
        assert!(buf.starts_with(b"P5\n8 8\n255\n"));
        let back = read_pgm(buf.as_slice()).unwrap();
        assert_eq!(back.pixels, f.pixels);
    }

    #[test]
    fn rejects_non_pgm() {
        assert!(read_pgm(&b"P2\n2 2\n255\n0000"[..]).is_err());
    }

    #[test]
    fn metadata_round_trip() {
        let cfg = RadarConfig::default();
        let f = super::super::rasterize(&[], crate::geometry::Point::new(0.0, 0.0), &cfg).unwrap();
        let m = RadarMetadata::new(&f, &cfg);
        assert_eq!(RadarMetadata::parse(&m.to_toml()).unwrap(), m);
    }
}
