//! File formats: model files (JSON), standard-form files (JSON), datasets
//! (CSV) and training configurations (JSON).
//!
//! Numbers are written in the shortest decimal form that parses back to the
//! identical `f64`, so save followed by load is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::network::{BottleneckLayer, DeepNet, StandardNet};
use crate::norms::{RegularizerKind, RegularizerSpec};
use crate::trainer::{Dataset, LossKind, TrainConfig};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRecord {
    #[serde(rename = "V")]
    v: Vec<Vec<f64>>,
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    c0: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    dims: Vec<usize>,
    layers: Vec<LayerRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StandardFile {
    version: u32,
    kind: String,
    input_dim: usize,
    matrices: Vec<Vec<Vec<f64>>>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_err(path: &Path, e: serde_json::Error) -> Error {
    Error::Parse(format!("{}: {e}", path.display()))
}

fn matrix_from_nested(field: &str, rows: &[Vec<f64>], shape: (usize, usize)) -> Result<Matrix> {
    let (r, c) = shape;
    if rows.len() != r {
        return Err(Error::Dimension(format!(
            "{field} has {} rows, expected {r}",
            rows.len()
        )));
    }
    if let Some(i) = rows.iter().position(|row| row.len() != c) {
        return Err(Error::Dimension(format!(
            "{field} row {} has {} entries, expected {c}",
            i + 1,
            rows[i].len()
        )));
    }
    Matrix::from_vec(r, c, rows.iter().flatten().copied().collect())
        .map_err(|e| Error::InvalidArgument(format!("{field}: {e}")))
}

fn vector_checked(field: &str, v: &[f64], len: usize) -> Result<Vec<f64>> {
    if v.len() != len {
        return Err(Error::Dimension(format!(
            "{field} has length {}, expected {len}",
            v.len()
        )));
    }
    Ok(v.to_vec())
}

fn net_from_file(file: ModelFile) -> Result<DeepNet> {
    if file.version != MODEL_VERSION {
        return Err(Error::Parse(format!(
            "unsupported model version {}, expected {MODEL_VERSION}",
            file.version
        )));
    }
    if file.layers.is_empty() {
        return Err(Error::InvalidArgument("model has no layers".into()));
    }
    if file.dims.len() != file.layers.len() + 1 {
        return Err(Error::Dimension(format!(
            "dims lists {} entries for {} layers",
            file.dims.len(),
            file.layers.len()
        )));
    }
    let layers = file
        .layers
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let (d_in, d_out) = (file.dims[i], file.dims[i + 1]);
            let k = rec.b.len();
            let ctx = |f: &str| format!("layer {} field {f}", i + 1);
            BottleneckLayer::new(
                matrix_from_nested(&ctx("V"), &rec.v, (d_out, k))?,
                matrix_from_nested(&ctx("W"), &rec.w, (k, d_in))?,
                rec.b.clone(),
                matrix_from_nested(&ctx("C"), &rec.c, (d_out, d_in))?,
                vector_checked(&ctx("c0"), &rec.c0, d_out)?,
            )
            .map_err(|e| Error::InvalidArgument(format!("layer {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    DeepNet::new(layers)
}

pub fn model_from_json(text: &str) -> Result<DeepNet> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| parse_err(Path::new("<model>"), e))?;
    net_from_file(file)
}

pub fn model_to_json(net: &DeepNet) -> String {
    let file = ModelFile {
        version: MODEL_VERSION,
        dims: net.dims(),
        layers: net
            .layers()
            .iter()
            .map(|l| LayerRecord {
                v: l.v.to_rows(),
                w: l.w.to_rows(),
                b: l.b.clone(),
                c: l.c.to_rows(),
                c0: l.c0.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
}

pub fn load_model(path: &Path) -> Result<DeepNet> {
    let text = read(path)?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| parse_err(path, e))?;
    net_from_file(file).map_err(|e| match e {
        Error::Dimension(m) => Error::Dimension(format!("{}: {m}", path.display())),
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn save_model(net: &DeepNet, path: &Path) -> Result<()> {
    write(path, &(model_to_json(net) + "\n"))
}

pub fn standard_to_json(std: &StandardNet) -> String {
    let file = StandardFile {
        version: MODEL_VERSION,
        kind: "standard".into(),
        input_dim: std.input_dim(),
        matrices: std.matrices().iter().map(Matrix::to_rows).collect(),
    };
    serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
}

pub fn save_standard(std: &StandardNet, path: &Path) -> Result<()> {
    write(path, &(standard_to_json(std) + "\n"))
}

pub fn load_standard(path: &Path) -> Result<StandardNet> {
    let text = read(path)?;
    let file: StandardFile = serde_json::from_str(&text).map_err(|e| parse_err(path, e))?;
    if file.version != MODEL_VERSION || file.kind != "standard" {
        return Err(Error::Parse(format!(
            "{}: expected a version {MODEL_VERSION} standard-form file",
            path.display()
        )));
    }
    let mut cols = file.input_dim;
    let mut mats = Vec::with_capacity(file.matrices.len());
    for (i, rows) in file.matrices.iter().enumerate() {
        let m = matrix_from_nested(&format!("A^({i})"), rows, (rows.len(), cols))?;
        cols = m.rows();
        mats.push(m);
    }
    StandardNet::new(mats)
}

/// Parses a CSV dataset with header `x1,…,xd,y1,…,yD`.
pub fn dataset_from_reader<R: std::io::Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse(format!("cannot read header: {e}")))?
        .clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err(Error::Parse("dataset is empty".into()));
    }
    let d = header.iter().take_while(|h| h.starts_with('x')).count();
    let out = header.len() - d;
    let expected: Vec<String> = (1..=d)
        .map(|i| format!("x{i}"))
        .chain((1..=out).map(|i| format!("y{i}")))
        .collect();
    if d == 0 || out == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Parse(format!(
            "header must read x1,…,xd,y1,…,yD; got `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let row = n + 1;
        let rec = rec.map_err(|e| Error::Parse(format!("row {row}: {e}")))?;
        if rec.len() != header.len() {
            return Err(Error::Parse(format!(
                "row {row}: expected {} fields, got {}",
                header.len(),
                rec.len()
            )));
        }
        let values = rec
            .iter()
            .zip(header.iter())
            .map(|(cell, name)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        Error::Parse(format!("row {row}, column {name}: `{cell}` is not a finite number"))
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        inputs.push(values[..d].to_vec());
        targets.push(values[d..].to_vec());
    }
    if inputs.is_empty() {
        return Err(Error::Parse("dataset has a header but no rows".into()));
    }
    Dataset::new(inputs, targets)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = read(path)?;
    dataset_from_reader(text.as_bytes()).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn dataset_to_csv(data: &Dataset) -> String {
    let mut s = (1..=data.input_dim())
        .map(|i| format!("x{i}"))
        .chain((1..=data.output_dim()).map(|i| format!("y{i}")))
        .collect::<Vec<_>>()
        .join(",");
    s.push('\n');
    for (x, y) in data.inputs().iter().zip(data.targets()) {
        let row: Vec<String> = x.iter().chain(y).map(|v| format!("{v:?}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn save_dataset(data: &Dataset, path: &Path) -> Result<()> {
    write(path, &dataset_to_csv(data))
}

fn default_init_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegularizerRecord {
    kind: RegularizerKind,
    lambda: f64,
}

/// On-disk training configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub loss: LossKind,
    regularizer: RegularizerRecord,
    pub widths: Vec<usize>,
    #[serde(default)]
    pub hidden_dims: Vec<usize>,
    pub epochs: usize,
    pub step_size: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    #[serde(default)]
    pub prune_eps: f64,
    #[serde(default)]
    pub rebalance_every: usize,
}

impl ConfigFile {
    pub fn into_config(self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            widths: self.widths,
            hidden_dims: self.hidden_dims,
            regularizer: RegularizerSpec::new(self.regularizer.kind, self.regularizer.lambda)?,
            loss: self.loss,
            step_size: self.step_size,
            epochs: self.epochs,
            seed: self.seed,
            init_scale: self.init_scale,
            prune_eps: self.prune_eps,
            rebalance_every: self.rebalance_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_config(cfg: &TrainConfig) -> Self {
        Self {
            loss: cfg.loss,
            regularizer: RegularizerRecord {
                kind: cfg.regularizer.kind,
                lambda: cfg.regularizer.lambda,
            },
            widths: cfg.widths.clone(),
            hidden_dims: cfg.hidden_dims.clone(),
            epochs: cfg.epochs,
            step_size: cfg.step_size,
            seed: cfg.seed,
            init_scale: cfg.init_scale,
            prune_eps: cfg.prune_eps,
            rebalance_every: cfg.rebalance_every,
        }
    }
}

pub fn config_from_json(text: &str) -> Result<TrainConfig> {
    let file: ConfigFile =
        serde_json::from_str(text).map_err(|e| parse_err(Path::new("<config>"), e))?;
    file.into_config()
}

pub fn load_config(path: &Path) -> Result<TrainConfig> {
    let text = read(path)?;
    let file: ConfigFile = serde_json::from_str(&text).map_err(|e| parse_err(path, e))?;
    file.into_config()
}

pub fn save_config(cfg: &TrainConfig, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&ConfigFile::from_config(cfg))
        .expect("config serialization cannot fail");
    write(path, &(text + "\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::random_net;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn model_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = random_net(&mut rng, &[3, 2, 1], &[4, 0]);
        let back = model_from_json(&model_to_json(&net)).unwrap();
        let a: Vec<u64> = net.to_flat().iter().map(|x| x.to_bits()).collect();
        let b: Vec<u64> = back.to_flat().iter().map(|x| x.to_bits()).collect();
        assert_eq!(a, b);
        assert_eq!(back.dims(), net.dims());
    }

    #[test]
    fn model_validation() {
        let bad_v = r#"{"version":1,"dims":[1,1],"layers":[{"V":[[1.0,2.0]],"W":[[1.0]],"b":[0.0],"C":[[0.0]],"c0":[0.0]}]}"#;
        let err = model_from_json(bad_v).unwrap_err().to_string();
        assert!(err.contains("layer 1 field V"), "{err}");

        let empty = r#"{"version":1,"dims":[1],"layers":[]}"#;
        assert!(model_from_json(empty).is_err());

        let version = r#"{"version":2,"dims":[1,1],"layers":[{"V":[[1.0]],"W":[[1.0]],"b":[0.0],"C":[[0.0]],"c0":[0.0]}]}"#;
        assert!(model_from_json(version).is_err());

        let err = model_from_json("{\"version\": 1,\n \"dims\": [1, 1],\n \"layers\": [oops]}")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");

        let zero_width = r#"{"version":1,"dims":[2,1],"layers":[{"V":[[]],"W":[],"b":[],"C":[[1.0,2.0]],"c0":[0.5]}]}"#;
        let net = model_from_json(zero_width).unwrap();
        assert_eq!(net.forward(&[1.0, 1.0]).unwrap(), vec![3.5]);
    }

    #[test]
    fn dataset_parsing() {
        let data = dataset_from_reader("x1,y1\n0,0.5\n1,1.5\n".as_bytes()).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data.input_dim(), 1);
        assert_eq!(data.output_dim(), 1);

        let err = dataset_from_reader("x1,x2,y1\n1,2,3\n4,5\n".as_bytes()).unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
        let err = dataset_from_reader("x1,y1\n1,abc\n".as_bytes()).unwrap_err().to_string();
        assert!(err.contains("row 1") && err.contains("y1"), "{err}");
        assert!(dataset_from_reader("".as_bytes()).is_err());
        assert!(dataset_from_reader("x1,y1\n".as_bytes()).is_err());
        assert!(dataset_from_reader("a,b\n1,2\n".as_bytes()).is_err());
        assert!(dataset_from_reader("x1,x3,y1\n1,2,3\n".as_bytes()).is_err());
    }

    #[test]
    fn config_parsing() {
        let cfg = config_from_json(
            r#"{"regularizer":{"kind":"sum_of_path","lambda":0.1},"widths":[3],"epochs":5,"step_size":0.01}"#,
        )
        .unwrap();
        assert_eq!(cfg.regularizer.kind, RegularizerKind::SumOfPath);
        assert_eq!(cfg.init_scale, 1.0);
        assert_eq!(cfg.loss, LossKind::Squared);
        assert!(config_from_json(
            r#"{"regularizer":{"kind":"bogus","lambda":0.1},"widths":[3],"epochs":5,"step_size":0.01}"#
        )
        .is_err());
        assert!(config_from_json(
            r#"{"regularizer":{"kind":"sum_of_path","lambda":-1},"widths":[3],"epochs":5,"step_size":0.01}"#
        )
        .is_err());
        assert!(config_from_json(
            r#"{"regularizer":{"kind":"sum_of_path","lambda":0.1},"widths":[3],"epochs":5,"step_size":0.01,"extra":1}"#
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn dataset_round_trip(
            rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 1..20)
        ) {
            let inputs: Vec<Vec<f64>> = rows.iter().map(|r| r[..2].to_vec()).collect();
            let targets: Vec<Vec<f64>> = rows.iter().map(|r| r[2..].to_vec()).collect();
            let data = Dataset::new(inputs, targets).unwrap();
            let back = dataset_from_reader(dataset_to_csv(&data).as_bytes()).unwrap();
            prop_assert_eq!(back, data);
        }

        #[test]
        fn model_round_trip(seed in any::<u64>(), d in 1usize..4, k in 0usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = random_net(&mut rng, &[d, 2, 1], &[k, 3]);
            let back = model_from_json(&model_to_json(&net)).unwrap();
            prop_assert_eq!(back, net);
        }
    }
}
