//! Grayscale rendering of 361-dimensional points as 19x19 PGM images.

use std::io::Write;

use crate::error::{ensure_dim, Result};

pub const IMAGE_SIDE: usize = 19;
pub const IMAGE_DIM: usize = IMAGE_SIDE * IMAGE_SIDE;

/// `round(255 * 0.5 (tanh(2x/3) + 1))`, halves rounded up.
pub fn gray_level(x: f64) -> u8 {
    let v = 255.0 * 0.5 * ((2.0 * x / 3.0).tanh() + 1.0);
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Row-major pixels of a length-361 vector.
pub fn to_pixels(x: &[f64]) -> Result<Vec<u8>> {
    ensure_dim(IMAGE_DIM, x.len())?;
    Ok(x.iter().map(|&v| gray_level(v)).collect())
}

/// Binary PGM (`P5`, 19x19, maxval 255).
pub fn write_pgm<W: Write>(x: &[f64], mut out: W) -> Result<()> {
    let pixels = to_pixels(x)?;
    write!(out, "P5\n{IMAGE_SIDE} {IMAGE_SIDE}\n255\n")?;
    out.write_all(&pixels)?;
    Ok(())
}

/// PGM bytes for a length-361 vector.
pub fn pgm_bytes(x: &[f64]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_pgm(x, &mut buf)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn gray_examples() {
        assert_eq!(gray_level(0.0), 128);
        assert_eq!(gray_level(1e6), 255);
        assert_eq!(gray_level(-1e6), 0);
        assert_eq!(gray_level(f64::INFINITY), 255);
        assert_eq!(gray_level(f64::NEG_INFINITY), 0);
        // 127.5 (1 + tanh(2/3)) = 202.1...
        assert_eq!(gray_level(1.0), 202);
    }

    #[test]
    fn gray_is_monotone() {
        let mut prev = 0;
        for i in 0..2000 {
            let g = gray_level(-10.0 + 0.01 * i as f64);
            assert!(g >= prev);
            prev = g;
        }
    }

    #[test]
    fn pgm_layout() {
        let mut x = vec![0.0; IMAGE_DIM];
        x[1] = 100.0;
        let bytes = pgm_bytes(&x).unwrap();
        let header = b"P5\n19 19\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + IMAGE_DIM);
        assert_eq!(bytes[header.len()], 128);
        assert_eq!(bytes[header.len() + 1], 255);
        assert!(matches!(pgm_bytes(&[0.0; 10]), Err(Error::Dimension { .. })));
    }
}
