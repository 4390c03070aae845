use std::fmt::Write as _;

use crate::diffusion::{DenoiserModel, NoisePredictor};
use crate::error::{Error, Result};
use crate::params::{Layer, Matrix, ParamSet};

const HEADER: &str = "# denoiser";

/// Flat parameter dump: an architecture header line, then one value per
/// line in layer order (weights row-major, then bias).
pub fn serialize_model(model: &DenoiserModel) -> String {
    let p = model.params();
    let widths: Vec<String> = p.widths().iter().map(ToString::to_string).collect();
    let mut out = format!(
        "{HEADER} data_dim={} time_embed_dim={} widths={}\n",
        model.data_dim(),
        model.time_embed_dim(),
        widths.join(",")
    );
    for v in p.to_flat() {
        let _ = writeln!(out, "{v:?}");
    }
    out
}

/// Inverse of [`serialize_model`].
pub fn parse_model(text: &str) -> Result<DenoiserModel> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|l| l.strip_prefix(HEADER))
        .ok_or_else(|| Error::config("model file lacks the architecture header"))?;
    let mut data_dim = None;
    let mut embed = None;
    let mut widths = None;
    for field in header.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| Error::config(format!("bad header field `{field}`")))?;
        let bad = || Error::config(format!("bad header value `{field}`"));
        match k {
            "data_dim" => data_dim = Some(v.parse::<usize>().map_err(|_| bad())?),
            "time_embed_dim" => embed = Some(v.parse::<usize>().map_err(|_| bad())?),
            "widths" => {
                widths = Some(
                    v.split(',')
                        .map(|w| w.parse::<usize>().map_err(|_| bad()))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            _ => return Err(Error::config(format!("unknown header field `{k}`"))),
        }
    }
    let (data_dim, embed, widths) = match (data_dim, embed, widths) {
        (Some(d), Some(e), Some(w)) if w.len() >= 2 => (d, e, w),
        _ => return Err(Error::config("incomplete architecture header")),
    };
    let values = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("bad parameter value `{l}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut layers = Vec::with_capacity(widths.len() - 1);
    for (i, w) in widths.windows(2).enumerate() {
        layers.push(Layer::new(format!("fc{i}"), i, Matrix::zeros(w[1], w[0]), vec![0.0; w[1]])?);
    }
    let mut params = ParamSet::new(layers)?;
    params.set_flat(&values)?;
    DenoiserModel::from_params(params, data_dim, embed)
}
