use std::fs;
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use crate::data::{gen_gaussian_mixture, SplitTag};
use crate::embedding_file::EmbeddingFile;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvalReport};
use crate::numerics::{Matrix, Rng};
use crate::scoring::{fit_prototypes, read_scores_csv, score, write_scores_csv, PrototypeSet};
use crate::trainer::{embed, read_checkpoint, train, write_checkpoint};

/// Run-directory file names.
pub mod names {
    pub const CONFIG: &str = "config.json";
    pub const CHECKPOINT: &str = "checkpoint.sepm";
    pub const LOG: &str = "log.csv";
    pub const REPORT: &str = "report.json";
    pub const SPLITS: [&str; 3] = ["train", "id_test", "ood_test"];

    pub fn data(split: &str) -> String {
        format!("{split}.semb")
    }

    pub fn features(split: &str) -> String {
        format!("features_{split}.semb")
    }

    pub fn scores(split: &str) -> String {
        format!("scores_{split}.csv")
    }
}

/// Keeps the data stream distinct from the training streams of the same seed.
const DATA_STREAM: u64 = 0x6461_7461_5f67_656e;

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub struct Run {
    pub cfg: RunConfig,
}

impl Run {
    /// Validates the config, creates the run directory and records the
    /// effective config in it.
    pub fn open(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
        write(&cfg.out.join(names::CONFIG), cfg.to_json())?;
        Ok(Run { cfg })
    }

    pub fn path(&self, name: impl AsRef<Path>) -> PathBuf {
        self.cfg.out.join(name)
    }

    pub fn gen_data(&self) -> Result<()> {
        let mut rng = Rng::new(self.cfg.seed ^ DATA_STREAM);
        let splits = gen_gaussian_mixture(&self.cfg.data, &mut rng)?;
        for (name, ds) in
            names::SPLITS
                .iter()
                .zip([&splits.train, &splits.id_test, &splits.ood_test])
        {
            EmbeddingFile::from_dataset(ds)?.write(&self.path(names::data(name)))?;
        }
        Ok(())
    }

    pub fn train(&self, data: Option<&Path>) -> Result<()> {
        let data = data.map_or_else(|| self.path(names::data("train")), Path::to_path_buf);
        let ds = EmbeddingFile::read(&data)?.to_dataset(SplitTag::Train)?;
        let (params, log) = train(
            &ds,
            self.cfg.encoder,
            &self.cfg.train_config(),
            &self.cfg.augment,
        )
        .map_err(|e| e.context("train"))?;
        write(&self.path(names::CHECKPOINT), write_checkpoint(&params)?)?;
        write(&self.path(names::LOG), log.to_csv())
    }

    /// Embeds one file, or all three splits when `io` is `None`.
    pub fn embed(&self, checkpoint: Option<&Path>, io: Option<(&Path, &Path)>) -> Result<()> {
        let ckpt = checkpoint.map_or_else(|| self.path(names::CHECKPOINT), Path::to_path_buf);
        let params =
            read_checkpoint(&read(&ckpt)?).map_err(|e| e.context(ckpt.display().to_string()))?;
        let jobs: Vec<(PathBuf, PathBuf)> = match io {
            Some((i, o)) => vec![(i.to_path_buf(), o.to_path_buf())],
            None => names::SPLITS
                .iter()
                .map(|s| (self.path(names::data(s)), self.path(names::features(s))))
                .collect(),
        };
        for (input, output) in jobs {
            let file = EmbeddingFile::read(&input)?;
            if file.d() != params.d_in() {
                return Err(Error::dimension(
                    "checkpoint d_in vs data dimension",
                    params.d_in(),
                    file.d(),
                )
                .context(input.display().to_string()));
            }
            let feats = embed(&params, &file.to_matrix(), self.cfg.train.score_space)
                .map_err(|e| e.context(format!("embed {}", input.display())))?;
            EmbeddingFile::from_matrix(&feats, file.labels())?.write(&output)?;
        }
        Ok(())
    }

    fn prototypes(&self, train_features: &Path) -> Result<PrototypeSet> {
        let file = EmbeddingFile::read(train_features)?;
        let labels = file
            .labels()
            .ok_or_else(|| Error::Input(format!("{} has no labels", train_features.display())))?;
        let k = labels
            .iter()
            .copied()
            .max()
            .map_or(0, |m| (m + 1).max(0) as usize);
        if k < 2 {
            return Err(Error::Input(format!(
                "{} must contain at least 2 classes",
                train_features.display()
            )));
        }
        let feats = self.maybe_normalize(file.to_matrix())?;
        fit_prototypes(&feats, labels, k, self.cfg.train.score_space)
            .map_err(|e| e.context(train_features.display().to_string()))
    }

    fn maybe_normalize(&self, m: Matrix) -> Result<Matrix> {
        if self.cfg.normalize_features {
            m.normalize_rows()
        } else {
            Ok(m)
        }
    }

    fn score_file(&self, protos: &PrototypeSet, features: &Path, output: &Path) -> Result<()> {
        let file = EmbeddingFile::read(features)?;
        if file.d() != protos.dim() {
            return Err(Error::dimension(
                "prototype dimension vs features",
                protos.dim(),
                file.d(),
            )
            .context(features.display().to_string()));
        }
        let feats = self
            .maybe_normalize(file.to_matrix())
            .map_err(|e| e.context(features.display().to_string()))?;
        let scores = score(&feats, protos)?;
        write(
            output,
            write_scores_csv(&file.labels_or_unlabeled(), &scores)?,
        )
    }

    /// Scores one features file, or both test splits when `io` is `None`.
    pub fn score(&self, train_features: Option<&Path>, io: Option<(&Path, &Path)>) -> Result<()> {
        let train =
            train_features.map_or_else(|| self.path(names::features("train")), Path::to_path_buf);
        let protos = self.prototypes(&train)?;
        match io {
            Some((f, o)) => self.score_file(&protos, f, o),
            None => {
                for s in &names::SPLITS[1..] {
                    self.score_file(
                        &protos,
                        &self.path(names::features(s)),
                        &self.path(names::scores(s)),
                    )?;
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, id_scores: Option<&Path>, ood_scores: Option<&Path>) -> Result<EvalReport> {
        let id = id_scores.map_or_else(|| self.path(names::scores("id_test")), Path::to_path_buf);
        let ood =
            ood_scores.map_or_else(|| self.path(names::scores("ood_test")), Path::to_path_buf);
        let load = |p: &Path| -> Result<Vec<f64>> {
            let text = String::from_utf8(read(p)?)
                .map_err(|_| Error::Format(format!("{} is not UTF-8", p.display())))?;
            Ok(read_scores_csv(&text)
                .map_err(|e| e.context(p.display().to_string()))?
                .into_iter()
                .map(|r| r.score)
                .collect())
        };
        let report = evaluate(&load(&id)?, &load(&ood)?).map_err(|e| e.context("eval"))?;
        write(&self.path(names::REPORT), report.to_json())?;
        Ok(report)
    }

    pub fn pipeline(&self) -> Result<EvalReport> {
        self.gen_data()?;
        self.train(None)?;
        self.embed(None, None)?;
        self.score(None, None)?;
        self.eval(None, None)
    }

    /// Fits prototypes on externally produced training features and
    /// evaluates the two test files against them.
    pub fn ingest(&self, train: &Path, id: &Path, ood: &Path) -> Result<EvalReport> {
        let protos = self.prototypes(train)?;
        let (id_out, ood_out) = (
            self.path(names::scores("id_test")),
            self.path(names::scores("ood_test")),
        );
        self.score_file(&protos, id, &id_out)?;
        self.score_file(&protos, ood, &ood_out)?;
        self.eval(Some(&id_out), Some(&ood_out))
    }
}
