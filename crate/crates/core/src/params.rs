//! Layered parameter container shared by the denoiser, the pruning code and
//! the aggregation primitives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn get_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn select_rows(&self, keep: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(keep.len() * self.cols);
        for &r in keep {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            rows: keep.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn select_cols(&self, keep: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * keep.len());
        for r in 0..self.rows {
            let row = self.row(r);
            data.extend(keep.iter().map(|&c| row[c]));
        }
        Matrix {
            rows: self.rows,
            cols: keep.len(),
            data,
        }
    }
}

/// One affine layer: `y = W x + b` with `W` of shape `(out, in)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub name: String,
    /// Position of the layer in network order.
    pub index: usize,
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn new(name: impl Into<String>, index: usize, weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if bias.len() != weight.rows() {
            return Err(Error::Architecture(format!(
                "layer {name}: bias has {} entries but weight has {} rows",
                bias.len(),
                weight.rows()
            )));
        }
        Ok(Layer {
            name,
            index,
            weight,
            bias,
        })
    }

    pub fn zeros(name: impl Into<String>, index: usize, inputs: usize, outputs: usize) -> Self {
        Layer {
            name: name.into(),
            index,
            weight: Matrix::zeros(outputs, inputs),
            bias: vec![0.0; outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

/// Ordered list of layers; adjacent layers are shape compatible.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamSet {
    layers: Vec<Layer>,
}

impl ParamSet {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::Architecture(format!(
                    "layer {} emits {} values but layer {} expects {}",
                    pair[0].name,
                    pair[0].outputs(),
                    pair[1].name,
                    pair[1].inputs()
                )));
            }
        }
        for (i, layer) in layers.iter().enumerate() {
            if layers[..i].iter().any(|l| l.name == layer.name) {
                return Err(Error::Architecture(format!("duplicate layer name {}", layer.name)));
            }
        }
        Ok(ParamSet { layers })
    }

    pub fn empty() -> Self {
        ParamSet { layers: Vec::new() }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layer(&self, name: &str) -> Option<&Layer> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn layer_position(&self, name: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.name == name)
    }

    /// Total number of scalar parameters.
    pub fn count_params(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Input width followed by each layer's output width.
    pub fn widths(&self) -> Vec<usize> {
        let mut widths = Vec::with_capacity(self.layers.len() + 1);
        if let Some(first) = self.layers.first() {
            widths.push(first.inputs());
        }
        widths.extend(self.layers.iter().map(Layer::outputs));
        widths
    }

    pub fn same_shape(&self, other: &ParamSet) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.name == b.name && a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols()
            })
    }

    pub fn check_same_shape(&self, other: &ParamSet) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Architecture(format!(
                "widths {:?} do not match {:?}",
                self.widths(),
                other.widths()
            )))
        }
    }

    pub fn zeros_like(&self) -> ParamSet {
        ParamSet {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::zeros(l.name.clone(), l.index, l.inputs(), l.outputs()))
                .collect(),
        }
    }

    /// `self += alpha * other`, shapes must agree.
    pub fn axpy(&mut self, alpha: f64, other: &ParamSet) -> Result<()> {
        self.check_same_shape(other)?;
        for (dst, src) in self.layers.iter_mut().zip(&other.layers) {
            for (d, s) in dst.weight.as_mut_slice().iter_mut().zip(src.weight.as_slice()) {
                *d += alpha * s;
            }
            for (d, s) in dst.bias.iter_mut().zip(&src.bias) {
                *d += alpha * s;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        for layer in &mut self.layers {
            layer.weight.as_mut_slice().iter_mut().for_each(|v| *v *= alpha);
            layer.bias.iter_mut().for_each(|v| *v *= alpha);
        }
    }

    /// All parameters in layer order, each layer weight (row-major) then bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count_params());
        for layer in &self.layers {
            out.extend_from_slice(layer.weight.as_slice());
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    /// Overwrites parameters from a flat vector laid out as [`ParamSet::to_flat`].
    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.count_params() {
            return Err(Error::Architecture(format!(
                "flat vector has {} values, model has {}",
                values.len(),
                self.count_params()
            )));
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            let n = layer.weight.len();
            layer.weight.as_mut_slice().copy_from_slice(&values[offset..offset + n]);
            offset += n;
            let m = layer.bias.len();
            layer.bias.copy_from_slice(&values[offset..offset + m]);
            offset += m;
        }
        Ok(())
    }
}

/// Total scalar parameter count.
pub fn count_params(params: &ParamSet) -> usize {
    params.count_params()
}
