use std::path::Path;

use serde_json::Value;

use super::LossError;

/// `channels x height x width` values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl ImageTensor {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self, LossError> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(LossError::Shape(format!("empty tensor shape {channels}x{height}x{width}")));
        }
        if data.len() != channels * height * width {
            return Err(LossError::Shape(format!("{} values for shape {channels}x{height}x{width}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LossError::Format("tensor values must be finite".into()));
        }
        Ok(Self { channels, height, width, data })
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f64) -> Self {
        Self { channels, height, width, data: vec![value; channels * height * width] }
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.channels, self.height, self.width]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn plane(&self) -> usize {
        self.height * self.width
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.plane();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "shape": self.shape(), "dtype": "f64", "data": self.data }).to_string()
    }
}

/// A nonempty list of feature maps; shapes may differ per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    layers: Vec<ImageTensor>,
}

impl FeatureStack {
    pub fn new(layers: Vec<ImageTensor>) -> Result<Self, LossError> {
        if layers.is_empty() {
            return Err(LossError::Shape("feature stack must have at least one layer".into()));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[ImageTensor] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [ImageTensor] {
        &mut self.layers
    }
}

fn shape_of(v: &Value) -> Result<[usize; 3], LossError> {
    let arr =
        v.as_array().filter(|a| a.len() == 3).ok_or_else(|| LossError::Format("\"shape\" must be [C, H, W]".into()))?;
    let mut out = [0; 3];
    for (o, d) in out.iter_mut().zip(arr) {
        *o = d
            .as_u64()
            .and_then(|d| usize::try_from(d).ok())
            .ok_or_else(|| LossError::Format("shape entries must be non-negative integers".into()))?;
    }
    Ok(out)
}

fn flatten_into(
    v: &Value,
    depth: usize,
    out: &mut Vec<f64>,
    dims: &mut Vec<usize>,
    level: usize,
) -> Result<(), LossError> {
    match v {
        Value::Array(items) if level < depth => {
            if dims.len() == level {
                dims.push(items.len());
            } else if dims[level] != items.len() {
                return Err(LossError::Shape("ragged nested array".into()));
            }
            for item in items {
                flatten_into(item, depth, out, dims, level + 1)?;
            }
            Ok(())
        }
        Value::Number(n) if level == depth => {
            out.push(n.as_f64().ok_or_else(|| LossError::Format("bad number".into()))?);
            Ok(())
        }
        _ => Err(LossError::Format(format!("expected a {depth}-deep nested numeric array"))),
    }
}

fn nested(v: &Value) -> Result<ImageTensor, LossError> {
    let (mut data, mut dims) = (Vec::new(), Vec::new());
    flatten_into(v, 3, &mut data, &mut dims, 0)?;
    if dims.len() != 3 {
        return Err(LossError::Shape("empty nested array".into()));
    }
    ImageTensor::new(dims[0], dims[1], dims[2], data)
}

/// Reads a tensor file: a bare `[C][H][W]` nested array, or an object
/// `{"shape": [C, H, W], "dtype": "f32"|"f64", "data": ...}` whose data is
/// nested, flat, or (when absent) little-endian raw values in the sibling
/// `.bin` file.
pub fn read_tensor(path: &Path) -> Result<ImageTensor, LossError> {
    let io = |source| LossError::Io { path: path.to_path_buf(), source };
    let text = std::fs::read(path).map_err(io)?;
    let value: Value = serde_json::from_slice(&text).map_err(|e| LossError::Format(e.to_string()))?;
    let Some(obj) = value.as_object() else {
        return nested(&value);
    };
    let [c, h, w] = shape_of(obj.get("shape").unwrap_or(&Value::Null))?;
    let dtype = obj.get("dtype").and_then(Value::as_str).unwrap_or("f32");
    let data = match obj.get("data") {
        Some(Value::Array(items)) if items.first().is_some_and(Value::is_array) => nested(&obj["data"])?.data,
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| v.as_f64().ok_or_else(|| LossError::Format("data entries must be numbers".into())))
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(LossError::Format("\"data\" must be an array".into())),
        None => {
            let bin_path = path.with_extension("bin");
            let raw = std::fs::read(&bin_path).map_err(|source| LossError::Io { path: bin_path, source })?;
            match dtype {
                "f32" => raw
                    .chunks(4)
                    .map(|b| <[u8; 4]>::try_from(b).map(|b| f32::from_le_bytes(b) as f64))
                    .collect::<Result<_, _>>()
                    .map_err(|_| LossError::Format("binary length is not a multiple of 4".into()))?,
                "f64" => raw
                    .chunks(8)
                    .map(|b| <[u8; 8]>::try_from(b).map(f64::from_le_bytes))
                    .collect::<Result<_, _>>()
                    .map_err(|_| LossError::Format("binary length is not a multiple of 8".into()))?,
                other => return Err(LossError::Format(format!("unsupported dtype {other:?}"))),
            }
        }
    };
    ImageTensor::new(c, h, w, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_checks() {
        assert!(ImageTensor::new(1, 1, 2, vec![1.0, 2.0]).is_ok());
        assert!(matches!(ImageTensor::new(1, 1, 2, vec![1.0]), Err(LossError::Shape(_))));
        assert!(ImageTensor::new(0, 1, 1, vec![]).is_err());
        assert!(ImageTensor::new(1, 1, 1, vec![f64::NAN]).is_err());
        assert!(FeatureStack::new(vec![]).is_err());
    }

    #[test]
    fn reads_all_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let expect = ImageTensor::new(2, 1, 2, vec![1.0, 2.0, 3.0, 4.5]).unwrap();

        let p = dir.path().join("nested.json");
        std::fs::write(&p, "[[[1,2]],[[3,4.5]]]").unwrap();
        assert_eq!(read_tensor(&p).unwrap(), expect);

        let p = dir.path().join("flat.json");
        std::fs::write(&p, expect.to_json()).unwrap();
        assert_eq!(read_tensor(&p).unwrap(), expect);

        let p = dir.path().join("raw.json");
        std::fs::write(&p, r#"{"shape":[2,1,2],"dtype":"f32"}"#).unwrap();
        let bytes: Vec<u8> = [1.0f32, 2.0, 3.0, 4.5].iter().flat_map(|v| v.to_le_bytes()).collect();
        std::fs::write(dir.path().join("raw.bin"), bytes).unwrap();
        assert_eq!(read_tensor(&p).unwrap(), expect);

        let p = dir.path().join("ragged.json");
        std::fs::write(&p, "[[[1,2]],[[3]]]").unwrap();
        assert!(read_tensor(&p).is_err());
        let p = dir.path().join("short.json");
        std::fs::write(&p, r#"{"shape":[2,2,2],"data":[1,2]}"#).unwrap();
        assert!(matches!(read_tensor(&p), Err(LossError::Shape(_))));
    }
}
