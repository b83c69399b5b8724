//! Periodic grid functions on the torus `[0, L)^n` and their binary file format.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::params::SolverParams;

const MAGIC: &[u8; 4] = b"FLGF";

/// Real scalar field sampled on the uniform `N^n` lattice, row-major with the
/// first axis slowest. Values are always finite.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    params: SolverParams,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(params: SolverParams, values: Vec<f64>) -> Result<Self> {
        if values.len() != params.node_count() {
            return Err(Error::InvalidArgument(format!(
                "expected {} grid values, got {}",
                params.node_count(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite grid value at node {i}")));
        }
        Ok(Self { params, values })
    }

    pub fn zeros(params: SolverParams) -> Self {
        Self {
            params,
            values: vec![0.0; params.node_count()],
        }
    }

    /// Samples `f` at every node. Coordinates beyond `params.dim()` are zero.
    pub fn from_fn(params: SolverParams, f: impl Fn(&[f64; 3]) -> f64) -> Result<Self> {
        let values = (0..params.node_count())
            .map(|i| f(&node_coords(&params, i)))
            .collect();
        Self::new(params, values)
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Riemann-sum L² norm over the torus.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.params.cell_volume()).sqrt()
    }

    /// Riemann-sum L² inner product over the torus.
    pub fn l2_inner(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.params.cell_volume())
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        GridFunction::new(self.params, values)
    }

    pub fn scaled(&self, a: f64) -> GridFunction {
        GridFunction {
            params: self.params,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    /// Copy with the mean removed.
    pub fn centered(&self) -> GridFunction {
        let m = self.mean();
        GridFunction {
            params: self.params,
            values: self.values.iter().map(|v| v - m).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.params.same_grid(&other.params) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("grid functions live on different grids".into()))
        }
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.params.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.params.grid_size() as u32).to_le_bytes())?;
        w.write_all(&self.params.box_length().to_le_bytes())?;
        w.write_all(&self.params.order().to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let n = read_u32(&mut r)? as usize;
        let grid_size = read_u32(&mut r)? as usize;
        let box_length = read_f64(&mut r)?;
        let s = read_f64(&mut r)?;
        let params = SolverParams::new(n, s, grid_size, box_length)
            .map_err(|e| Error::Format(e.to_string()))?;
        let mut values = Vec::with_capacity(params.node_count());
        for _ in 0..params.node_count() {
            values.push(read_f64(&mut r)?);
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::Format("trailing bytes after grid values".into()));
        }
        GridFunction::new(params, values).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Integer lattice index of flat node `i`, first axis slowest.
pub fn node_index(params: &SolverParams, mut i: usize) -> [usize; 3] {
    let n = params.dim();
    let size = params.grid_size();
    let mut idx = [0usize; 3];
    for a in (0..n).rev() {
        idx[a] = i % size;
        i /= size;
    }
    idx
}

/// Physical coordinates of flat node `i`.
pub fn node_coords(params: &SolverParams, i: usize) -> [f64; 3] {
    let h = params.spacing();
    let idx = node_index(params, i);
    let mut x = [0.0; 3];
    for a in 0..params.dim() {
        x[a] = idx[a] as f64 * h;
    }
    x
}

/// Flat index of lattice index `idx`, wrapping periodically.
pub fn flat_index(params: &SolverParams, idx: &[isize; 3]) -> usize {
    let size = params.grid_size() as isize;
    let mut flat = 0usize;
    for &k in idx.iter().take(params.dim()) {
        flat = flat * size as usize + k.rem_euclid(size) as usize;
    }
    flat
}

/// Minimum-image integer offset of flat index `i`: each component in `[-N/2, N/2)`.
pub fn signed_offset(params: &SolverParams, i: usize) -> [isize; 3] {
    let size = params.grid_size() as isize;
    let idx = node_index(params, i);
    let mut k = [0isize; 3];
    for a in 0..params.dim() {
        let v = idx[a] as isize;
        k[a] = if v >= size / 2 { v - size } else { v };
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params2() -> SolverParams {
        SolverParams::new(2, 0.4, 16, 3.0).unwrap()
    }

    #[test]
    fn rejects_wrong_length_and_nan() {
        let p = params2();
        assert!(GridFunction::new(p, vec![0.0; 10]).is_err());
        let mut v = vec![0.0; p.node_count()];
        v[7] = f64::NAN;
        assert!(GridFunction::new(p, v).is_err());
    }

    #[test]
    fn index_helpers_agree() {
        let p = SolverParams::new(3, 0.5, 16, 1.0).unwrap();
        for i in [0, 1, 17, 255, 4095] {
            let idx = node_index(&p, i);
            let back = flat_index(&p, &[idx[0] as isize, idx[1] as isize, idx[2] as isize]);
            assert_eq!(back, i);
        }
        assert_eq!(flat_index(&p, &[-1, 0, 0]), 15 * 256);
        assert_eq!(signed_offset(&p, 15), [0, 0, -1]);
    }

    #[test]
    fn rejects_bad_magic() {
        let bytes = b"XXXX\0\0\0\0".to_vec();
        assert!(matches!(
            GridFunction::read_from(&bytes[..]),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn header_layout_is_little_endian() {
        let p = params2();
        let g = GridFunction::from_fn(p, |x| x[0] - 2.0 * x[1]).unwrap();
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();
        assert_eq!(&buf[0..4], b"FLGF");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 16);
        assert_eq!(f64::from_le_bytes(buf[12..20].try_into().unwrap()), 3.0);
        assert_eq!(f64::from_le_bytes(buf[20..28].try_into().unwrap()), 0.4);
        assert_eq!(buf.len(), 28 + 8 * 256);
        // node (0, 1) is second in row-major order
        let v1 = f64::from_le_bytes(buf[36..44].try_into().unwrap());
        assert_eq!(v1, -2.0 * 3.0 / 16.0);
    }

    proptest! {
        #[test]
        fn file_round_trip_is_bit_identical(
            vals in prop::collection::vec(-1e300f64..1e300, 256),
            s in 0.001f64..0.999,
        ) {
            let p = SolverParams::new(2, s, 16, 2.5).unwrap();
            let g = GridFunction::new(p, vals).unwrap();
            let mut buf = Vec::new();
            g.write_to(&mut buf).unwrap();
            let back = GridFunction::read_from(&buf[..]).unwrap();
            prop_assert_eq!(back.params(), g.params());
            for (a, b) in back.values().iter().zip(g.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
