//! Versioned binary checkpoints: magic, version, config hash, layer shapes,
//! then row-major parameters as little-endian f64.

use super::mlp::QNetwork;
use super::DqnError;
use rand_chacha::rand_core::SeedableRng;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"TSCQNET\0";
const VERSION: u32 = 1;

pub fn save_checkpoint(net: &QNetwork, config_hash: u64, path: impl AsRef<Path>) -> Result<(), DqnError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&config_hash.to_le_bytes())?;
    out.write_all(&(net.n_actions as u32).to_le_bytes())?;
    out.write_all(&(net.layers.len() as u32).to_le_bytes())?;
    for l in &net.layers {
        out.write_all(&(l.in_dim as u32).to_le_bytes())?;
        out.write_all(&(l.out_dim as u32).to_le_bytes())?;
    }
    for p in net.flat_params() {
        out.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(QNetwork, u64), DqnError> {
    let mut file = std::io::BufReader::new(std::fs::File::open(&path)?);
    let bad = |msg: &str| DqnError::Checkpoint(format!("{}: {msg}", path.as_ref().display()));

    let mut magic = [0u8; 8];
    file.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let mut u32buf = [0u8; 4];
    let mut u64buf = [0u8; 8];
    file.read_exact(&mut u32buf)?;
    if u32::from_le_bytes(u32buf) != VERSION {
        return Err(bad("unsupported version"));
    }
    file.read_exact(&mut u64buf)?;
    let config_hash = u64::from_le_bytes(u64buf);
    file.read_exact(&mut u32buf)?;
    let n_actions = u32::from_le_bytes(u32buf) as usize;
    file.read_exact(&mut u32buf)?;
    let n_layers = u32::from_le_bytes(u32buf) as usize;
    if n_actions == 0 || n_layers == 0 || n_layers > 64 {
        return Err(bad("implausible header"));
    }

    let mut shapes = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        file.read_exact(&mut u32buf)?;
        let in_dim = u32::from_le_bytes(u32buf) as usize;
        file.read_exact(&mut u32buf)?;
        let out_dim = u32::from_le_bytes(u32buf) as usize;
        if in_dim == 0 || out_dim == 0 {
            return Err(bad("zero layer dimension"));
        }
        shapes.push((in_dim, out_dim));
    }
    if shapes.last().unwrap().1 != 2 * n_actions {
        return Err(bad("output layer does not match 2 * n_actions"));
    }
    for w in shapes.windows(2) {
        if w[0].1 != w[1].0 {
            return Err(bad("layer shapes do not chain"));
        }
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let hidden: Vec<usize> = shapes[..n_layers - 1].iter().map(|s| s.1).collect();
    let mut net = QNetwork::new(shapes[0].0, &hidden, n_actions, &mut rng);

    let total = net.num_params();
    let mut params = vec![0.0f64; total];
    let mut f64buf = [0u8; 8];
    for p in params.iter_mut() {
        file.read_exact(&mut f64buf)?;
        *p = f64::from_le_bytes(f64buf);
    }
    if file.read(&mut [0u8; 1])? != 0 {
        return Err(bad("trailing bytes"));
    }
    net.set_flat_params(&params);
    if !net.all_finite() {
        return Err(bad("non-finite parameters"));
    }
    Ok((net, config_hash))
}
