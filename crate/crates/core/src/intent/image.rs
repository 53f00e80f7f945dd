//! Minimal RGB image container with binary PPM (P6) read/write.

use super::IntentError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// Interleaved RGB, row-major.
    pub pixels: Vec<u8>,
    /// Source label, used by the file-backed feature backend to locate
    /// precomputed tensors.
    pub tag: Option<String>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Image {
        Image {
            width,
            height,
            pixels: vec![0; width * height * 3],
            tag: None,
        }
    }

    pub fn with_tag(mut self, tag: &str) -> Image {
        self.tag = Some(tag.to_string());
        self
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Luma in [0, 1], row-major.
    pub fn to_gray(&self) -> Vec<f64> {
        self.pixels
            .chunks_exact(3)
            .map(|p| (0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64) / 255.0)
            .collect()
    }

    pub fn write_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn read_ppm(bytes: &[u8]) -> Result<Image, IntentError> {
        let mut pos = 0usize;
        let mut token = || -> Result<String, IntentError> {
            while pos < bytes.len() && (bytes[pos] as char).is_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                while pos < bytes.len() && (bytes[pos] as char).is_whitespace() {
                    pos += 1;
                }
            }
            let start = pos;
            while pos < bytes.len() && !(bytes[pos] as char).is_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(IntentError::PpmFormat("truncated header".into()));
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).to_string())
        };
        let magic = token()?;
        if magic != "P6" {
            return Err(IntentError::PpmFormat(format!("bad magic {magic:?}")));
        }
        let width: usize = token()?
            .parse()
            .map_err(|_| IntentError::PpmFormat("bad width".into()))?;
        let height: usize = token()?
            .parse()
            .map_err(|_| IntentError::PpmFormat("bad height".into()))?;
        let maxval: usize = token()?
            .parse()
            .map_err(|_| IntentError::PpmFormat("bad maxval".into()))?;
        if maxval != 255 {
            return Err(IntentError::PpmFormat(format!(
                "only maxval 255 is supported, got {maxval}"
            )));
        }
        pos += 1; // the single whitespace byte after maxval
        let need = width * height * 3;
        if bytes.len() < pos + need {
            return Err(IntentError::PpmFormat(format!(
                "expected {need} pixel bytes, found {}",
                bytes.len().saturating_sub(pos)
            )));
        }
        Ok(Image {
            width,
            height,
            pixels: bytes[pos..pos + need].to_vec(),
            tag: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip() {
        let mut img = Image::new(5, 3);
        for y in 0..3 {
            for x in 0..5 {
                img.set(x, y, [x as u8 * 40, y as u8 * 80, 200]);
            }
        }
        let bytes = img.write_ppm();
        let back = Image::read_ppm(&bytes).unwrap();
        assert_eq!(back.width, 5);
        assert_eq!(back.height, 3);
        assert_eq!(back.pixels, img.pixels);
    }

    #[test]
    fn malformed_ppm_is_rejected() {
        assert!(Image::read_ppm(b"P5\n2 2\n255\n....").is_err());
        assert!(Image::read_ppm(b"P6\n2 2\n255\nxx").is_err());
    }
}
