use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use pixgrasp_nn::Module;
use safetensors::tensor::{Dtype, TensorView};
use safetensors::SafeTensors;

use super::config::NetworkConfig;
use super::model::Network;
use crate::error::{Error, IoContext, Result};

const CONFIG_KEY: &str = "network_config";

/// Named `f32` arrays with shapes, as stored in a safetensors archive.
pub type NamedArrays = BTreeMap<String, (Vec<usize>, Vec<f32>)>;

fn ck(e: impl std::fmt::Display) -> Error {
    Error::Checkpoint(e.to_string())
}

pub fn write_arrays(path: &Path, arrays: &NamedArrays, metadata: HashMap<String, String>) -> Result<()> {
    let bytes: Vec<(String, Vec<usize>, Vec<u8>)> = arrays
        .iter()
        .map(|(k, (shape, v))| (k.clone(), shape.clone(), v.iter().flat_map(|x| x.to_le_bytes()).collect()))
        .collect();
    let views = bytes
        .iter()
        .map(|(k, shape, b)| TensorView::new(Dtype::F32, shape.clone(), b).map(|v| (k.clone(), v)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(ck)?;
    let out = safetensors::serialize(views, Some(metadata)).map_err(ck)?;
    fs::write(path, out).at(path)
}

pub fn read_arrays(path: &Path) -> Result<(NamedArrays, HashMap<String, String>)> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let bytes = fs::read(path).at(path)?;
    let (_, meta) = SafeTensors::read_metadata(&bytes).map_err(ck)?;
    let metadata = meta.metadata().clone().unwrap_or_default();
    let st = SafeTensors::deserialize(&bytes).map_err(ck)?;
    let mut arrays = NamedArrays::new();
    for (name, view) in st.tensors() {
        if view.dtype() != Dtype::F32 {
            return Err(Error::Checkpoint(format!("{name}: expected f32, found {:?}", view.dtype())));
        }
        let data = view.data().chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        arrays.insert(name, (view.shape().to_vec(), data));
    }
    Ok((arrays, metadata))
}

/// Writes all parameters and buffers keyed by layer path, with the config as
/// JSON metadata.
pub fn save_checkpoint(net: &Network<f32>, path: &Path) -> Result<()> {
    let mut arrays = NamedArrays::new();
    net.visit_params("", &mut |name, p| {
        arrays.insert(name.to_string(), (p.shape.clone(), p.value.clone()));
    });
    let meta = HashMap::from([(CONFIG_KEY.to_string(), serde_json::to_string(net.config())?)]);
    write_arrays(path, &arrays, meta)
}

/// Rebuilds the network from the embedded config and checks that every stored
/// array matches the expected layer shape.
pub fn load_checkpoint(path: &Path) -> Result<Network<f32>> {
    let (mut arrays, meta) = read_arrays(path)?;
    let cfg: NetworkConfig = serde_json::from_str(
        meta.get(CONFIG_KEY)
            .ok_or_else(|| Error::Checkpoint(format!("{}: no network config metadata", path.display())))?,
    )?;
    let mut net = Network::new(cfg, 0)?;
    let mut problem = None;
    net.visit_params_mut("", &mut |name, p| {
        if problem.is_some() {
            return;
        }
        match arrays.remove(name) {
            None => problem = Some(format!("missing array {name}")),
            Some((shape, _)) if shape != p.shape => {
                problem = Some(format!("{name}: stored shape {shape:?}, config expects {:?}", p.shape))
            }
            Some((_, data)) => p.value = data,
        }
    });
    if let Some(m) = problem {
        return Err(Error::Checkpoint(m));
    }
    if let Some(extra) = arrays.keys().next() {
        return Err(Error::Checkpoint(format!("unexpected array {extra}")));
    }
    Ok(net)
}
