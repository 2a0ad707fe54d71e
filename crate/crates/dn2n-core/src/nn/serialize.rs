//! Model files: magic `DNM1`, format version, spec descriptor, descriptor
//! hash, then every parameter as little-endian f64 in graph order.
//! Round-trips are bit-exact.

use std::fs;
use std::path::Path;

use super::model::{ModelSpec, ParamStore, UNet};
use crate::error::{CoreError, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"DNM1";
pub const MODEL_VERSION: u32 = 1;

fn spec_descriptor(spec: &ModelSpec) -> Vec<u8> {
    let mut d = Vec::new();
    d.extend_from_slice(&(spec.in_channels as u32).to_le_bytes());
    d.extend_from_slice(&(spec.out_channels as u32).to_le_bytes());
    d.extend_from_slice(&(spec.kernel as u32).to_le_bytes());
    d.extend_from_slice(&spec.leaky_slope.to_le_bytes());
    d.extend_from_slice(&(spec.levels.len() as u32).to_le_bytes());
    for &w in &spec.levels {
        d.extend_from_slice(&(w as u32).to_le_bytes());
    }
    d
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01B3);
    }
    h
}

pub fn save_model(path: &Path, spec: &ModelSpec, params: &ParamStore) -> Result<()> {
    let descriptor = spec_descriptor(spec);
    let mut bytes = Vec::new();
    bytes.extend_from_slice(MODEL_MAGIC);
    bytes.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    bytes.extend_from_slice(&descriptor);
    bytes.extend_from_slice(&fnv1a64(&descriptor).to_le_bytes());
    bytes.extend_from_slice(&(params.flat_len() as u64).to_le_bytes());
    for slot in params.slots() {
        for v in slot {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(ModelSpec, ParamStore)> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        if bytes.len() < *pos + n {
            return Err(CoreError::Format("truncated model file".into()));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    if take(&mut pos, 4)? != MODEL_MAGIC {
        return Err(CoreError::Format("bad model magic".into()));
    }
    let version = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
    if version != MODEL_VERSION {
        return Err(CoreError::Format(format!("unsupported model version {version}")));
    }
    let desc_start = pos;
    let in_channels = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    let out_channels = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    let kernel = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    let leaky_slope = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    let n_levels = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    if n_levels == 0 || n_levels > 16 {
        return Err(CoreError::Format(format!("implausible level count {n_levels}")));
    }
    let mut levels = Vec::with_capacity(n_levels);
    for _ in 0..n_levels {
        levels.push(u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize);
    }
    let descriptor = bytes[desc_start..pos].to_vec();
    let stored_hash = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    if stored_hash != fnv1a64(&descriptor) {
        return Err(CoreError::Format("model spec hash mismatch".into()));
    }
    let spec = ModelSpec { in_channels, out_channels, kernel, leaky_slope, levels };
    let net = UNet::new(spec.clone())?;

    let declared = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
    if declared != net.param_count() {
        return Err(CoreError::Format(format!(
            "file declares {declared} parameters, spec implies {}",
            net.param_count()
        )));
    }
    let payload = &bytes[pos..];
    if payload.len() != declared * 8 {
        return Err(CoreError::Format(format!(
            "parameter payload holds {} bytes, expected {}",
            payload.len(),
            declared * 8
        )));
    }
    let mut values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let slots = net
        .param_metas()
        .iter()
        .map(|m| (&mut values).take(m.len()).collect::<Vec<f64>>())
        .collect();
    let params = net.params_from_slots(slots)?;
    Ok((spec, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::tensor::Tensor4;
    use crate::rng::StreamRng;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("dn2n-core-model-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn save_load_round_trip_preserves_forward_output() {
        let spec = ModelSpec::with_levels(vec![4, 8]);
        let net = UNet::new(spec.clone()).unwrap();
        let params = net.init_params(5);
        let p = tmp("rt.dnm");
        save_model(&p, &spec, &params).unwrap();
        let (spec2, params2) = load_model(&p).unwrap();
        assert_eq!(spec, spec2);
        assert_eq!(params, params2);
        let mut rng = StreamRng::new(1, "ser-test", &[]);
        let vals = (0..2 * 8 * 8).map(|_| rng.next_gaussian()).collect();
        let input = Tensor4::from_values(1, 2, 8, 8, vals).unwrap();
        let (a, _) = net.forward(&params, &input).unwrap();
        let net2 = UNet::new(spec2).unwrap();
        let (b, _) = net2.forward(&params2, &input).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn tampered_magic_is_rejected() {
        let spec = ModelSpec::with_levels(vec![2]);
        let net = UNet::new(spec.clone()).unwrap();
        let p = tmp("bad.dnm");
        save_model(&p, &spec, &net.init_params(1)).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[0] = b'X';
        std::fs::write(&p, bytes).unwrap();
        assert!(matches!(load_model(&p), Err(CoreError::Format(_))));
    }

    #[test]
    fn corrupted_descriptor_fails_hash_check() {
        let spec = ModelSpec::with_levels(vec![2, 3]);
        let net = UNet::new(spec.clone()).unwrap();
        let p = tmp("hash.dnm");
        save_model(&p, &spec, &net.init_params(1)).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[8] ^= 0x01; // flip a bit inside the descriptor
        std::fs::write(&p, bytes).unwrap();
        assert!(matches!(load_model(&p), Err(CoreError::Format(_))));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let spec = ModelSpec::with_levels(vec![2]);
        let net = UNet::new(spec.clone()).unwrap();
        let p = tmp("trunc.dnm");
        save_model(&p, &spec, &net.init_params(1)).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 9]).unwrap();
        assert!(matches!(load_model(&p), Err(CoreError::Format(_))));
    }

    #[test]
    fn two_level_spec_encodes_two_width_fields() {
        let spec = ModelSpec::with_levels(vec![16, 32]);
        let descriptor = spec_descriptor(&spec);
        // in, out, kernel (u32) + slope (f64) + count (u32) + 2 widths (u32)
        assert_eq!(descriptor.len(), 4 + 4 + 4 + 8 + 4 + 8);
        let widths = &descriptor[24..];
        assert_eq!(&widths[0..4], &16u32.to_le_bytes());
        assert_eq!(&widths[4..8], &32u32.to_le_bytes());
    }
}
