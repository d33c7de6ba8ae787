//! Dataset serialization: one CSV per replicate with missing entries
//! omitted, a feature CSV, a JSON manifest naming files and dimensions, and
//! an optional ground-truth JSON.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::datagen::SyntheticTruth;
use crate::error::{Error, Result};
use crate::types::{CountData, FeatureMatrix};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub i_dim: usize,
    pub j_dim: usize,
    pub replicates: usize,
    pub n_features: usize,
    pub count_files: Vec<String>,
    pub features_file: String,
    pub truth_file: Option<String>,
    pub seed: Option<u64>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn parse_err(file: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.display().to_string(),
        message: message.into(),
    }
}

pub fn write_dataset(
    dir: &Path,
    data: &CountData,
    features: &FeatureMatrix,
    truth: Option<&SyntheticTruth>,
    seed: Option<u64>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (i_dim, j_dim, m_dim) = data.dims();

    let mut count_files = Vec::with_capacity(m_dim);
    for m in 0..m_dim {
        let name = format!("counts_m{m}.csv");
        let mut w = BufWriter::new(File::create(dir.join(&name))?);
        writeln!(w, "i,j,value")?;
        for i in 0..i_dim {
            for j in 0..j_dim {
                if !data.missing()[(i, j, m)] {
                    writeln!(w, "{i},{j},{}", data.y()[(i, j, m)])?;
                }
            }
        }
        w.flush()?;
        count_files.push(name);
    }

    let features_file = "features.csv".to_string();
    {
        let r_dim = features.n_features();
        let mut w = BufWriter::new(File::create(dir.join(&features_file))?);
        let header: Vec<String> = (1..=r_dim).map(|r| format!("z{r}")).collect();
        writeln!(w, "i,j,{}", header.join(","))?;
        for i in 0..i_dim {
            for j in 0..j_dim {
                let row = i * j_dim + j;
                let values: Vec<String> = (0..r_dim)
                    .map(|c| features.matrix()[(row, c)].to_string())
                    .collect();
                writeln!(w, "{i},{j},{}", values.join(","))?;
            }
        }
        w.flush()?;
    }

    let truth_file = match truth {
        Some(t) => {
            let name = "truth.json".to_string();
            fs::write(dir.join(&name), serde_json::to_string_pretty(t)?)?;
            Some(name)
        }
        None => None,
    };

    let manifest = DatasetManifest {
        i_dim,
        j_dim,
        replicates: m_dim,
        n_features: features.n_features(),
        count_files,
        features_file,
        truth_file,
        seed,
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn read_dataset(dir: &Path) -> Result<(CountData, FeatureMatrix, Option<SyntheticTruth>)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: DatasetManifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
    let (i_dim, j_dim, m_dim) = (manifest.i_dim, manifest.j_dim, manifest.replicates);
    if manifest.count_files.len() != m_dim {
        return Err(parse_err(
            &manifest_path,
            format!(
                "manifest lists {} count files for {} replicates",
                manifest.count_files.len(),
                m_dim
            ),
        ));
    }

    let mut y = Array3::zeros((i_dim, j_dim, m_dim));
    let mut missing = Array3::from_elem((i_dim, j_dim, m_dim), true);
    for (m, name) in manifest.count_files.iter().enumerate() {
        let path = dir.join(name);
        let reader = BufReader::new(File::open(&path)?);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| parse_err(&path, "empty file"))??;
        if header.trim() != "i,j,value" {
            return Err(parse_err(&path, format!("unexpected header `{header}`")));
        }
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(parse_err(&path, format!("bad row `{line}`")));
            }
            let i: usize = parts[0]
                .trim()
                .parse()
                .map_err(|e| parse_err(&path, format!("bad i in `{line}`: {e}")))?;
            let j: usize = parts[1]
                .trim()
                .parse()
                .map_err(|e| parse_err(&path, format!("bad j in `{line}`: {e}")))?;
            let value: f64 = parts[2]
                .trim()
                .parse()
                .map_err(|e| parse_err(&path, format!("bad value in `{line}`: {e}")))?;
            if i >= i_dim || j >= j_dim {
                return Err(parse_err(&path, format!("index ({i}, {j}) out of range")));
            }
            y[(i, j, m)] = value;
            missing[(i, j, m)] = false;
        }
    }
    let data = CountData::new(y, missing)?;

    let features_path = dir.join(&manifest.features_file);
    let reader = BufReader::new(File::open(&features_path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(&features_path, "empty file"))??;
    let expected: Vec<String> = (1..=manifest.n_features).map(|r| format!("z{r}")).collect();
    let expected = format!("i,j,{}", expected.join(","));
    if header.trim() != expected {
        return Err(parse_err(
            &features_path,
            format!("unexpected header `{header}`, expected `{expected}`"),
        ));
    }
    let mut z = Array2::zeros((i_dim * j_dim, manifest.n_features));
    let mut seen = vec![false; i_dim * j_dim];
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 2 + manifest.n_features {
            return Err(parse_err(&features_path, format!("bad row `{line}`")));
        }
        let i: usize = parts[0]
            .trim()
            .parse()
            .map_err(|e| parse_err(&features_path, format!("bad i: {e}")))?;
        let j: usize = parts[1]
            .trim()
            .parse()
            .map_err(|e| parse_err(&features_path, format!("bad j: {e}")))?;
        if i >= i_dim || j >= j_dim {
            return Err(parse_err(&features_path, format!("index ({i}, {j}) out of range")));
        }
        let row = i * j_dim + j;
        for c in 0..manifest.n_features {
            z[(row, c)] = parts[2 + c]
                .trim()
                .parse()
                .map_err(|e| parse_err(&features_path, format!("bad feature value: {e}")))?;
        }
        seen[row] = true;
    }
    if let Some(row) = seen.iter().position(|&s| !s) {
        return Err(parse_err(
            &features_path,
            format!("missing feature row for flat index {row}"),
        ));
    }
    let features = FeatureMatrix::new(i_dim, j_dim, z)?;

    let truth = match &manifest.truth_file {
        Some(name) => Some(serde_json::from_str(&fs::read_to_string(dir.join(name))?)?),
        None => None,
    };
    Ok((data, features, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, GenParams};

    #[test]
    fn dataset_round_trips_through_disk() {
        let params = GenParams {
            i_dim: 8,
            j_dim: 6,
            replicates: 2,
            missing_rate: 0.1,
            seed: 3,
            ..GenParams::default()
        };
        let (data, features, truth) = generate(&params).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &data, &features, Some(&truth), Some(3)).unwrap();
        let (data2, features2, truth2) = read_dataset(dir.path()).unwrap();
        assert_eq!(data, data2);
        assert_eq!(features, features2);
        assert_eq!(Some(truth), truth2);
    }

    #[test]
    fn missing_entries_are_omitted_and_restored() {
        let params = GenParams {
            i_dim: 10,
            j_dim: 10,
            missing_rate: 0.3,
            seed: 4,
            ..GenParams::default()
        };
        let (data, features, _) = generate(&params).unwrap();
        let n_missing = data.missing().iter().filter(|&&m| m).count();
        assert!(n_missing > 0, "fixture should have missing entries");
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &data, &features, None, None).unwrap();
        let text = std::fs::read_to_string(dir.path().join("counts_m0.csv")).unwrap();
        assert_eq!(text.lines().count(), 1 + 100 - n_missing);
        let (data2, _, truth2) = read_dataset(dir.path()).unwrap();
        assert_eq!(data.missing(), data2.missing());
        assert!(truth2.is_none());
    }

    #[test]
    fn corrupted_header_is_rejected() {
        let params = GenParams {
            i_dim: 3,
            j_dim: 3,
            seed: 5,
            ..GenParams::default()
        };
        let (data, features, _) = generate(&params).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &data, &features, None, None).unwrap();
        let path = dir.path().join("counts_m0.csv");
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("i,j,value", "a,b,c")).unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(Error::Parse { .. })));
    }
}
