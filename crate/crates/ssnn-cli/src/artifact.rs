use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use ssnn::prior::LinearPrior;
use ssnn::{AugmentedModel64, CompletionNetwork};

use crate::error::{CliError, Result};

pub const LAYOUT_VERSION: u32 = 1;

/// Row-major dense matrix in serialized form.
#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixData {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixData {
    fn from(m: &DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        }
    }

    fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(CliError::Config("matrix size mismatch in artifact".into()));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NetworkData {
    pub n_x: usize,
    pub n_u: usize,
    pub d_out: usize,
    pub n_hidden: usize,
    /// Flat parameters in the network's canonical layout
    /// (W_in, b_hidden, W_out, b_out, A_lin, B_lin).
    pub params: Vec<f64>,
}

impl NetworkData {
    fn from(net: &CompletionNetwork<f64>) -> Self {
        let mut params = Vec::with_capacity(net.param_count());
        net.write_params(&mut params);
        Self {
            n_x: net.n_x(),
            n_u: net.n_u(),
            d_out: net.d_out(),
            n_hidden: net.n_hidden(),
            params,
        }
    }

    fn to_network(&self) -> Result<CompletionNetwork<f64>> {
        let mut net =
            CompletionNetwork::init(self.n_x, self.n_u, self.d_out, self.n_hidden, 0)?;
        net.read_params(&self.params)?;
        Ok(net)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub method: String,
    pub final_cost: f64,
    pub iterations: usize,
    pub termination: String,
    pub seed_init: u64,
}

/// Self-describing trained-model file; JSON keeps it diffable and the
/// shortest round-trip float encoding keeps parameters bit-exact.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub layout_version: u32,
    pub prior_a: MatrixData,
    pub prior_b: MatrixData,
    pub prior_c: MatrixData,
    pub prior_d: MatrixData,
    pub f_net: NetworkData,
    pub g_net: Option<NetworkData>,
    pub meta: TrainingMeta,
}

impl ModelArtifact {
    pub fn from_model(model: &AugmentedModel64, meta: TrainingMeta) -> Self {
        let prior = model.prior();
        Self {
            layout_version: LAYOUT_VERSION,
            prior_a: MatrixData::from(prior.a()),
            prior_b: MatrixData::from(prior.b()),
            prior_c: MatrixData::from(prior.c()),
            prior_d: MatrixData::from(prior.d()),
            f_net: NetworkData::from(model.f_net()),
            g_net: model.g_net().map(NetworkData::from),
            meta,
        }
    }

    pub fn to_model(&self) -> Result<AugmentedModel64> {
        if self.layout_version != LAYOUT_VERSION {
            return Err(CliError::Config(format!(
                "unsupported model layout version {}",
                self.layout_version
            )));
        }
        let prior = LinearPrior::new(
            self.prior_a.to_matrix()?,
            self.prior_b.to_matrix()?,
            self.prior_c.to_matrix()?,
            self.prior_d.to_matrix()?,
        )?;
        let f_net = self.f_net.to_network()?;
        let g_net = self.g_net.as_ref().map(|n| n.to_network()).transpose()?;
        Ok(AugmentedModel64::new(prior, f_net, g_net)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Io(format!("model serialization: {e}")))?;
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::parse(path, e.line(), e.to_string()))
    }
}
