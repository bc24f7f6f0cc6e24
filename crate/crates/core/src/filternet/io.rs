//! Binary model file: magic, version, layer table, little-endian f32
//! weights in declaration order (conv weights, conv bias, ..., fc weights,
//! fc bias, ...).

use std::io::Read;
use std::path::Path;

use super::{Conv3dLayer, FcLayer, FilterNet, FilterNetError};

pub const MODEL_MAGIC: [u8; 4] = *b"FLTN";
pub const MODEL_VERSION: u32 = 1;

fn io_err(path: &Path, source: std::io::Error) -> FilterNetError {
    FilterNetError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn save_model(net: &FilterNet, path: &Path) -> Result<(), FilterNetError> {
    let mut out = Vec::new();
    out.extend_from_slice(&MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&net.dropout.to_le_bytes());
    out.extend_from_slice(&(net.convs.len() as u32).to_le_bytes());
    for c in &net.convs {
        for v in [
            c.in_channels,
            c.out_channels,
            c.kernel.0,
            c.kernel.1,
            c.kernel.2,
            c.stride.0,
            c.stride.1,
            c.stride.2,
        ] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
    }
    out.extend_from_slice(&(net.fcs.len() as u32).to_le_bytes());
    for f in &net.fcs {
        out.extend_from_slice(&(f.inputs as u32).to_le_bytes());
        out.extend_from_slice(&(f.outputs as u32).to_le_bytes());
    }
    for c in &net.convs {
        for v in c.weights.iter().chain(&c.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    for f in &net.fcs {
        for v in f.weights.iter().chain(&f.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn load_model(path: &Path) -> Result<FilterNet, FilterNetError> {
    let bad = |reason: String| FilterNetError::BadModel {
        path: path.display().to_string(),
        reason,
    };
    let mut file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| io_err(path, e))?;
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8], FilterNetError> {
        if pos + n > bytes.len() {
            return Err(FilterNetError::BadModel {
                path: path.display().to_string(),
                reason: "truncated".into(),
            });
        }
        let s = &bytes[pos..pos + n];
        pos += n;
        Ok(s)
    };
    if take(4)? != MODEL_MAGIC {
        return Err(bad("missing FLTN magic".into()));
    }
    let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap());
    let f32_at = |s: &[u8]| f32::from_le_bytes(s.try_into().unwrap());

    let version = u32_at(take(4)?);
    if version != MODEL_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let dropout = f32_at(take(4)?);
    let n_convs = u32_at(take(4)?) as usize;
    let mut conv_shapes = Vec::with_capacity(n_convs);
    for _ in 0..n_convs {
        let mut vals = [0usize; 8];
        for v in &mut vals {
            *v = u32_at(take(4)?) as usize;
        }
        conv_shapes.push(vals);
    }
    let n_fcs = u32_at(take(4)?) as usize;
    let mut fc_shapes = Vec::with_capacity(n_fcs);
    for _ in 0..n_fcs {
        let inputs = u32_at(take(4)?) as usize;
        let outputs = u32_at(take(4)?) as usize;
        fc_shapes.push((inputs, outputs));
    }

    let mut convs = Vec::with_capacity(n_convs);
    let mut fcs = Vec::with_capacity(n_fcs);
    let read_f32s = |n: usize, pos: &mut usize| -> Result<Vec<f32>, FilterNetError> {
        if *pos + 4 * n > bytes.len() {
            return Err(FilterNetError::BadModel {
                path: path.display().to_string(),
                reason: "truncated weights".into(),
            });
        }
        let out = bytes[*pos..*pos + 4 * n]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        *pos += 4 * n;
        Ok(out)
    };
    for shape in conv_shapes {
        let [ic, oc, kt, kh, kw, st, sh, sw] = shape;
        let weights = read_f32s(oc * ic * kt * kh * kw, &mut pos)?;
        let bias = read_f32s(oc, &mut pos)?;
        convs.push(Conv3dLayer {
            in_channels: ic,
            out_channels: oc,
            kernel: (kt, kh, kw),
            stride: (st, sh, sw),
            weights,
            bias,
        });
    }
    for (inputs, outputs) in fc_shapes {
        let weights = read_f32s(inputs * outputs, &mut pos)?;
        let bias = read_f32s(outputs, &mut pos)?;
        fcs.push(FcLayer {
            inputs,
            outputs,
            weights,
            bias,
        });
    }
    if pos != bytes.len() {
        return Err(bad(format!("{} trailing bytes", bytes.len() - pos)));
    }
    Ok(FilterNet {
        convs,
        fcs,
        dropout,
    })
}
