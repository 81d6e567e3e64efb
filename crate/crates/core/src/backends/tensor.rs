//! Opaque tensor container crossing the inference-backend boundary.
//!
//! Data is stored as raw little-endian bytes in row-major order. The binary
//! file encoding is a 16-byte header `{magic, dtype, rank}` followed by the
//! shape (u64 per dimension) and the payload.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// File magic for serialized tensors.
pub const TENSOR_MAGIC: &[u8; 8] = b"OCRKTSR\0";

/// Element type of a tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DType {
    F32,
    F16,
    I64,
    U8,
}

impl DType {
    pub fn size_bytes(&self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F16 => 2,
            DType::I64 => 8,
            DType::U8 => 1,
        }
    }

    fn code(&self) -> u32 {
        match self {
            DType::F32 => 0,
            DType::F16 => 1,
            DType::I64 => 2,
            DType::U8 => 3,
        }
    }

    fn from_code(code: u32) -> Result<Self> {
        Ok(match code {
            0 => DType::F32,
            1 => DType::F16,
            2 => DType::I64,
            3 => DType::U8,
            other => return Err(Error::ShapeMismatch(format!("unknown dtype code {other}"))),
        })
    }
}

/// Inputs and outputs of one inference call, keyed by tensor name.
pub type TensorMap = BTreeMap<String, Tensor>;

/// A dense n-dimensional array with opaque byte storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    dtype: DType,
    data: Vec<u8>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, dtype: DType, data: Vec<u8>) -> Result<Self> {
        let elements: usize = shape.iter().product();
        if elements * dtype.size_bytes() != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {:?} needs {} bytes, buffer has {}",
                shape,
                elements * dtype.size_bytes(),
                data.len()
            )));
        }
        Ok(Self { shape, dtype, data })
    }

    pub fn from_f32(shape: Vec<usize>, values: &[f32]) -> Result<Self> {
        let mut data = Vec::with_capacity(values.len() * 4);
        for v in values {
            data.extend_from_slice(&v.to_le_bytes());
        }
        Self::new(shape, DType::F32, data)
    }

    pub fn from_i64(shape: Vec<usize>, values: &[i64]) -> Result<Self> {
        let mut data = Vec::with_capacity(values.len() * 8);
        for v in values {
            data.extend_from_slice(&v.to_le_bytes());
        }
        Self::new(shape, DType::I64, data)
    }

    pub fn from_u8(shape: Vec<usize>, values: Vec<u8>) -> Result<Self> {
        Self::new(shape, DType::U8, values)
    }

    /// Encodes a UTF-8 string as a rank-1 U8 tensor.
    pub fn from_text(text: &str) -> Self {
        let bytes = text.as_bytes().to_vec();
        Self {
            shape: vec![bytes.len()],
            dtype: DType::U8,
            data: bytes,
        }
    }

    /// Packs an RGB image as a U8 tensor of shape [height, width, 3].
    pub fn from_image(img: &image::RgbImage) -> Self {
        Self {
            shape: vec![img.height() as usize, img.width() as usize, 3],
            dtype: DType::U8,
            data: img.as_raw().clone(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn element_count(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn raw(&self) -> &[u8] {
        &self.data
    }

    pub fn as_f32_vec(&self) -> Result<Vec<f32>> {
        if self.dtype != DType::F32 {
            return Err(Error::ShapeMismatch(format!(
                "expected F32 tensor, got {:?}",
                self.dtype
            )));
        }
        Ok(self
            .data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    pub fn as_i64_vec(&self) -> Result<Vec<i64>> {
        if self.dtype != DType::I64 {
            return Err(Error::ShapeMismatch(format!(
                "expected I64 tensor, got {:?}",
                self.dtype
            )));
        }
        Ok(self
            .data
            .chunks_exact(8)
            .map(|c| i64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
            .collect())
    }

    /// Decodes a rank-1 U8 tensor as UTF-8 text.
    pub fn as_text(&self) -> Result<String> {
        if self.dtype != DType::U8 {
            return Err(Error::ShapeMismatch(format!(
                "expected U8 tensor for text, got {:?}",
                self.dtype
            )));
        }
        String::from_utf8(self.data.clone())
            .map_err(|e| Error::ShapeMismatch(format!("tensor is not valid UTF-8: {e}")))
    }

    /// Reinterprets a [h, w, 3] U8 tensor as an RGB image.
    pub fn to_image(&self) -> Result<image::RgbImage> {
        if self.dtype != DType::U8 || self.shape.len() != 3 || self.shape[2] != 3 {
            return Err(Error::ShapeMismatch(format!(
                "expected U8 [h,w,3] tensor, got {:?} {:?}",
                self.dtype, self.shape
            )));
        }
        image::RgbImage::from_raw(self.shape[1] as u32, self.shape[0] as u32, self.data.clone())
            .ok_or_else(|| Error::ShapeMismatch("image buffer size mismatch".into()))
    }

    /// Serializes to the on-disk fixture format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.shape.len() * 8 + self.data.len());
        out.extend_from_slice(TENSOR_MAGIC);
        out.extend_from_slice(&self.dtype.code().to_le_bytes());
        out.extend_from_slice(&(self.shape.len() as u32).to_le_bytes());
        for dim in &self.shape {
            out.extend_from_slice(&(*dim as u64).to_le_bytes());
        }
        out.extend_from_slice(&self.data);
        out
    }

    /// Parses the on-disk fixture format.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[0..8] != TENSOR_MAGIC {
            return Err(Error::ShapeMismatch(
                "missing tensor magic in fixture file".into(),
            ));
        }
        let dtype = DType::from_code(u32::from_le_bytes([
            bytes[8], bytes[9], bytes[10], bytes[11],
        ]))?;
        let rank = u32::from_le_bytes([bytes[12], bytes[13], bytes[14], bytes[15]]) as usize;
        let shape_end = 16 + rank * 8;
        if bytes.len() < shape_end {
            return Err(Error::ShapeMismatch("truncated tensor shape".into()));
        }
        let shape: Vec<usize> = (0..rank)
            .map(|i| {
                let off = 16 + i * 8;
                u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()) as usize
            })
            .collect();
        Self::new(shape, dtype, bytes[shape_end..].to_vec())
    }
}

/// Expected shape of one model input; -1 is a wildcard dimension.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub dtype: DType,
    pub shape: Vec<i64>,
}

impl TensorSpec {
    pub fn new(name: impl Into<String>, dtype: DType, shape: Vec<i64>) -> Self {
        Self {
            name: name.into(),
            dtype,
            shape,
        }
    }

    /// Checks a tensor against this spec.
    pub fn check(&self, tensor: &Tensor) -> Result<()> {
        if tensor.dtype() != self.dtype {
            return Err(Error::ShapeMismatch(format!(
                "input '{}': expected dtype {:?}, got {:?}",
                self.name,
                self.dtype,
                tensor.dtype()
            )));
        }
        if tensor.shape().len() != self.shape.len() {
            return Err(Error::ShapeMismatch(format!(
                "input '{}': expected rank {}, got {}",
                self.name,
                self.shape.len(),
                tensor.shape().len()
            )));
        }
        for (i, (&want, &got)) in self.shape.iter().zip(tensor.shape()).enumerate() {
            if want >= 0 && want as usize != got {
                return Err(Error::ShapeMismatch(format!(
                    "input '{}': dim {} expected {}, got {}",
                    self.name, i, want, got
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_f32() {
        let t = Tensor::from_f32(vec![2, 3], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let back = Tensor::from_bytes(&t.to_bytes()).unwrap();
        assert_eq!(t, back);
        assert_eq!(back.as_f32_vec().unwrap(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn shape_size_must_agree() {
        assert!(Tensor::new(vec![2, 2], DType::F32, vec![0u8; 15]).is_err());
    }

    #[test]
    fn spec_wildcard_dims() {
        let spec = TensorSpec::new("image", DType::U8, vec![-1, -1, 3]);
        let ok = Tensor::from_u8(vec![4, 5, 3], vec![0; 60]).unwrap();
        assert!(spec.check(&ok).is_ok());
        let bad_rank = Tensor::from_u8(vec![4, 5], vec![0; 20]).unwrap();
        assert!(spec.check(&bad_rank).is_err());
        let bad_dim = Tensor::from_u8(vec![4, 5, 4], vec![0; 80]).unwrap();
        assert!(spec.check(&bad_dim).is_err());
    }

    #[test]
    fn image_round_trip() {
        let mut img = image::RgbImage::new(3, 2);
        img.put_pixel(1, 1, image::Rgb([9, 8, 7]));
        let t = Tensor::from_image(&img);
        assert_eq!(t.shape(), &[2, 3, 3]);
        assert_eq!(t.to_image().unwrap(), img);
    }
}
