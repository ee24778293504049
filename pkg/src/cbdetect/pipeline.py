"""End-to-end training, prediction, evaluation, and model files.

A pipeline bundles everything inference needs: the vocabulary, a text
embedder (skip-gram vectors or a small self-attention encoder), the
metadata scaler fitted on training data, the feature selection, and one
trained classifier. Saved models reload bit-for-bit.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from cbdetect import persist
from cbdetect.attention import (
    EncoderConfig,
    EncoderParams,
    LayerParams,
    embed_text_contextual,
    pretrain_masked,
)
from cbdetect.corpus import Dataset, VideoRecord
from cbdetect.errors import DataError, ModelFormatError
from cbdetect.evaluation import ConfusionMatrix, EvalReport, RocCurve, confusion, report, roc
from cbdetect.features import FeatureSelection, Scaler, fit_scaler, metadata_vector
from cbdetect.models.forest import (
    Forest,
    RFConfig,
    forest_arrays,
    forest_from_arrays,
    forest_probs,
    train_random_forest,
)
from cbdetect.models.logistic import LogisticModel, logreg_probs, train_logreg
from cbdetect.models.mlp import MLPConfig, MLPModel, fit_mlp, mlp_arrays, mlp_from_arrays, mlp_probs
from cbdetect.text import Vocab, build_vocab, encode, tokenize, vocab_from_text, vocab_to_text
from cbdetect.word2vec import EmbeddingMatrix, W2VConfig, embed_text, train_skipgram

EMBED_KINDS = ("word2vec", "attention")
MODEL_KINDS = ("logreg", "forest", "mlp")


@dataclass(frozen=True)
class PipelineConfig:
    embed_kind: str = "word2vec"
    model_kind: str = "logreg"
    selection: FeatureSelection = field(default_factory=FeatureSelection.everything)
    min_count: int = 1
    max_vocab: int = 100_000
    seed: int = 0
    word2vec: W2VConfig = field(default_factory=W2VConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    forest: RFConfig = field(default_factory=lambda: RFConfig(n_estimators=100))
    mlp: MLPConfig = field(default_factory=MLPConfig)
    logreg_learning_rate: float = 0.1
    logreg_epochs: int = 200
    logreg_l2: float = 0.0

    def __post_init__(self):
        if self.embed_kind not in EMBED_KINDS:
            raise DataError(f"embed_kind must be one of {EMBED_KINDS}, got {self.embed_kind!r}")
        if self.model_kind not in MODEL_KINDS:
            raise DataError(f"model_kind must be one of {MODEL_KINDS}, got {self.model_kind!r}")
        if self.min_count < 1 or self.max_vocab < 1:
            raise DataError("min_count and max_vocab must be >= 1")
        if self.logreg_learning_rate <= 0 or self.logreg_epochs < 1 or self.logreg_l2 < 0:
            raise DataError("logreg settings out of range")

    def with_seed(self, seed: int) -> "PipelineConfig":
        """Copy with every component reseeded; each keeps its own substreams."""
        return replace(
            self,
            seed=seed,
            word2vec=replace(self.word2vec, seed=seed),
            encoder=replace(self.encoder, seed=seed),
            forest=replace(self.forest, seed=seed),
            mlp=replace(self.mlp, seed=seed),
        )

    def with_jobs(self, jobs: int) -> "PipelineConfig":
        return replace(self, forest=replace(self.forest, n_jobs=jobs))


_SETTING_GROUPS = ("word2vec", "encoder", "forest", "mlp")
_SETTING_SCALARS = ("min_count", "max_vocab", "seed", "logreg_learning_rate", "logreg_epochs", "logreg_l2")


def apply_settings(cfg: PipelineConfig, settings: dict) -> PipelineConfig:
    """Override config fields by name.

    Keys are either pipeline-level (``model``, ``embed``, ``features``, and
    the scalar knobs) or dotted into a component, e.g.
    ``forest.n_estimators`` or ``mlp.hidden_layers``. Unknown keys and
    out-of-range values raise :class:`DataError`.
    """
    from dataclasses import fields as dc_fields

    for key, value in settings.items():
        try:
            if key == "embed":
                cfg = replace(cfg, embed_kind=str(value))
            elif key == "model":
                cfg = replace(cfg, model_kind=str(value))
            elif key == "features":
                cfg = replace(cfg, selection=FeatureSelection.parse(str(value)))
            elif key in _SETTING_SCALARS:
                cfg = replace(cfg, **{key: value})
            elif "." in key:
                group, _, attr = key.partition(".")
                if group not in _SETTING_GROUPS:
                    raise DataError(f"unknown setting group {group!r}")
                sub = getattr(cfg, group)
                if attr not in {f.name for f in dc_fields(sub)}:
                    raise DataError(f"{group} has no setting {attr!r}")
                cfg = replace(cfg, **{group: replace(sub, **{attr: value})})
            else:
                raise DataError(f"unknown setting {key!r}")
        except DataError:
            raise
        except (TypeError, ValueError) as exc:
            raise DataError(f"setting {key!r}: {exc}") from None
    return cfg


# the experiments the command line exposes by name
PRESETS = {
    # logistic regression over skip-gram text vectors plus all metadata
    "exp1": PipelineConfig(embed_kind="word2vec", model_kind="logreg"),
    # random forest at the best tree count of the sweep, subscriber-aware
    # metadata subset, no view counts
    "exp2": PipelineConfig(
        embed_kind="word2vec",
        model_kind="forest",
        selection=FeatureSelection.parse("title,description,likes,dislikes,comments,subscribers"),
        forest=RFConfig(n_estimators=100),
    ),
    # single hidden layer, relu, minibatch sgd
    "exp3": PipelineConfig(
        embed_kind="word2vec",
        model_kind="mlp",
        mlp=MLPConfig(hidden_layers=(64,), activation="relu", batch_size=10, epochs=40),
    ),
    # deeper stack with batch norm, dropout, and prelu
    "exp4": PipelineConfig(
        embed_kind="word2vec",
        model_kind="mlp",
        mlp=MLPConfig(
            hidden_layers=(64, 32),
            activation="prelu",
            dropout_rate=0.5,
            batch_norm=True,
            batch_size=10,
            epochs=40,
        ),
    ),
    # masked-token pretrained encoder feeding a small adam-trained head
    "exp5": PipelineConfig(
        embed_kind="attention",
        model_kind="mlp",
        encoder=EncoderConfig(dim=64, heads=4, layers=2, ffn_dim=256, max_len=180, epochs=5),
        mlp=MLPConfig(
            hidden_layers=(64,),
            activation="relu",
            dropout_rate=0.5,
            optimizer="adam",
            learning_rate=1e-3,
            batch_size=10,
            epochs=5,
        ),
    ),
    # lighter single-layer encoder, same head
    "exp6": PipelineConfig(
        embed_kind="attention",
        model_kind="mlp",
        encoder=EncoderConfig(dim=64, heads=4, layers=1, ffn_dim=256, max_len=180, epochs=5),
        mlp=MLPConfig(
            hidden_layers=(64,),
            activation="relu",
            dropout_rate=0.5,
            optimizer="adam",
            learning_rate=1e-3,
            batch_size=10,
            epochs=5,
        ),
    ),
}


@dataclass
class PipelineModel:
    embed_kind: str
    model_kind: str
    selection: FeatureSelection
    vocab: Vocab
    embedder: object  # EmbeddingMatrix or EncoderParams
    scaler: Scaler
    classifier: object  # LogisticModel, Forest, or MLPModel

    def text_vector(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if self.embed_kind == "word2vec":
            return embed_text(self.embedder, tokens)
        x = encode(tokens, self.vocab, self.embedder.max_len)
        return embed_text_contextual(x, self.embedder)

    def features_for(self, r: VideoRecord) -> np.ndarray:
        """One classifier input row: selected text vectors and scaled metadata."""
        meta = self.scaler.transform(metadata_vector(r))
        return self.selection.assemble(self.text_vector(r.title), self.text_vector(r.description), meta)

    def feature_matrix(self, records) -> np.ndarray:
        rows = [self.features_for(r) for r in records]
        if not rows:
            raise DataError("no records to featurize")
        return np.stack(rows)

    def probs(self, records) -> np.ndarray:
        X = self.feature_matrix(records)
        if self.model_kind == "logreg":
            return logreg_probs(self.classifier, X)
        if self.model_kind == "forest":
            return forest_probs(self.classifier, X)
        return mlp_probs(self.classifier, X)

    def labels_from_probs(self, probs: np.ndarray) -> np.ndarray:
        # forest votes break 50/50 ties toward class 0, the others toward 1
        if self.model_kind == "forest":
            return (probs > 0.5).astype(np.int64)
        return (probs >= 0.5).astype(np.int64)

    def predict_record(self, r: VideoRecord) -> tuple[float, int]:
        probs = self.probs([r])
        return float(probs[0]), int(self.labels_from_probs(probs)[0])


def _tokenized_corpus(records) -> list:
    corpus = []
    for r in records:
        corpus.append(tokenize(r.title))
        corpus.append(tokenize(r.description))
    return corpus


def train_pipeline(train: Dataset, cfg: PipelineConfig, log=None) -> PipelineModel:
    """Fit vocabulary, embedder, scaler, and classifier on one training set."""
    say = log if log is not None else (lambda msg: None)
    if len(train) == 0:
        raise DataError("training set is empty")
    corpus = _tokenized_corpus(train)
    vocab = build_vocab(corpus, min_count=cfg.min_count, max_size=cfg.max_vocab)
    say(f"vocabulary: {len(vocab)} tokens")

    if cfg.embed_kind == "word2vec":
        embedder = train_skipgram(corpus, vocab, cfg.word2vec)
        say(f"skip-gram trained, final epoch loss {embedder.loss_history[-1]:.4f}")
    else:
        embedder = pretrain_masked(corpus, vocab, cfg.encoder)
        say(f"encoder pretrained, final epoch loss {embedder.loss_history[-1]:.4f}")

    meta_rows = np.stack([metadata_vector(r) for r in train])
    scaler = fit_scaler(meta_rows)

    model = PipelineModel(
        embed_kind=cfg.embed_kind,
        model_kind=cfg.model_kind,
        selection=cfg.selection,
        vocab=vocab,
        embedder=embedder,
        scaler=scaler,
        classifier=None,
    )
    X = model.feature_matrix(train)
    y = train.labels()
    say(f"features: {X.shape[0]} rows x {X.shape[1]} columns ({cfg.selection.describe()})")

    if cfg.model_kind == "logreg":
        model.classifier = train_logreg(
            X,
            y,
            learning_rate=cfg.logreg_learning_rate,
            epochs=cfg.logreg_epochs,
            l2=cfg.logreg_l2,
            seed=cfg.seed,
        )
    elif cfg.model_kind == "forest":
        model.classifier = train_random_forest(X, y, cfg.forest)
    else:
        model.classifier = fit_mlp(X, y, cfg.mlp)
    say("classifier trained")
    return model


@dataclass(frozen=True)
class EvalOutcome:
    matrix: ConfusionMatrix
    report: EvalReport
    curve: RocCurve


def evaluate_pipeline(model: PipelineModel, data: Dataset) -> EvalOutcome:
    """Score a labeled dataset: confusion counts, report table, ROC sweep."""
    probs = model.probs(data)
    y_true = data.labels()
    y_pred = model.labels_from_probs(probs)
    cm = confusion(y_true, y_pred)
    return EvalOutcome(matrix=cm, report=report(cm), curve=roc(y_true, probs))


def _encoder_arrays(p: EncoderParams) -> dict:
    arrays = dict(p.named_params())
    arrays["heads"] = np.array([p.heads], dtype=np.int64)
    return arrays


def _encoder_from_arrays(arrays: dict) -> EncoderParams:
    def take(name):
        if name not in arrays:
            raise ModelFormatError(f"encoder state lacks array {name!r}")
        return arrays[name]

    n_layers = len({name.split(".")[0] for name in arrays if name.startswith("layer")})
    layers = []
    for i in range(n_layers):
        fields = {}
        for name in ("wq", "wk", "wv", "wo", "ln1_g", "ln1_b", "w1", "b1", "w2", "b2", "ln2_g", "ln2_b"):
            fields[name] = take(f"layer{i}.{name}")
        layers.append(LayerParams(**fields))
    return EncoderParams(
        token_emb=take("token_emb"),
        pos_emb=take("pos_emb"),
        layers=layers,
        mlm_w=take("mlm_w"),
        mlm_b=take("mlm_b"),
        heads=int(take("heads")[0]),
    )


def save_pipeline(model: PipelineModel, path) -> None:
    """Write the full pipeline to one container file; output is deterministic."""
    header = {
        "embed": model.embed_kind,
        "model": model.model_kind,
        "features": model.selection.describe(),
    }
    sections = [
        ("pipeline", persist.json_payload(header)),
        ("vocab", vocab_to_text(model.vocab).encode("utf-8")),
    ]
    if model.embed_kind == "word2vec":
        sections.append(("embed", persist.pack_arrays({"vectors": model.embedder.vectors})))
    else:
        sections.append(("encoder", persist.pack_arrays(_encoder_arrays(model.embedder))))
    sections.append(("scaler", persist.pack_arrays({"mean": model.scaler.mean, "std": model.scaler.std})))

    if model.model_kind == "logreg":
        meta = {"kind": "logreg"}
        arrays = {"w": model.classifier.w, "b": np.array([model.classifier.b], dtype=np.float64)}
    elif model.model_kind == "forest":
        meta = {"kind": "forest", "config": asdict(model.classifier.config), "n_features": model.classifier.n_features}
        arrays = forest_arrays(model.classifier)
    else:
        meta = {
            "kind": "mlp",
            "config": {**asdict(model.classifier.config), "hidden_layers": list(model.classifier.config.hidden_layers)},
            "input_dim": model.classifier.input_dim,
        }
        arrays = mlp_arrays(model.classifier)
    sections.append(("classifier_meta", persist.json_payload(meta)))
    sections.append(("classifier", persist.pack_arrays(arrays)))
    persist.write_container(path, "pipeline", sections)


def load_pipeline(path) -> PipelineModel:
    kind, sections = persist.read_container(path)
    if kind != "pipeline":
        raise ModelFormatError(f"container holds a {kind!r} model, not a pipeline")

    def section(name):
        if name not in sections:
            raise ModelFormatError(f"container lacks section {name!r}")
        return sections[name]

    header = persist.parse_json_payload(section("pipeline"), "pipeline")
    for key in ("embed", "model", "features"):
        if key not in header:
            raise ModelFormatError(f"pipeline header lacks {key!r}")
    embed_kind, model_kind = header["embed"], header["model"]
    if embed_kind not in EMBED_KINDS or model_kind not in MODEL_KINDS:
        raise ModelFormatError(f"unknown pipeline kinds {embed_kind!r}/{model_kind!r}")
    vocab = vocab_from_text(section("vocab").decode("utf-8"), origin="vocab section")
    selection = FeatureSelection.parse(header["features"])

    if embed_kind == "word2vec":
        arrays = persist.unpack_arrays(section("embed"))
        if "vectors" not in arrays:
            raise ModelFormatError("embed section lacks the vectors array")
        vectors = arrays["vectors"]
        if vectors.ndim != 2 or vectors.shape[0] != len(vocab):
            raise ModelFormatError(
                f"embedding matrix {vectors.shape} does not cover the {len(vocab)}-token vocabulary"
            )
        embedder = EmbeddingMatrix(vocab=vocab, vectors=vectors)
    else:
        embedder = _encoder_from_arrays(persist.unpack_arrays(section("encoder")))
        if embedder.token_emb.shape[0] != len(vocab):
            raise ModelFormatError("encoder token table does not cover the vocabulary")

    scaler_arrays = persist.unpack_arrays(section("scaler"))
    if "mean" not in scaler_arrays or "std" not in scaler_arrays:
        raise ModelFormatError("scaler section lacks mean/std")
    scaler = Scaler(mean=scaler_arrays["mean"], std=scaler_arrays["std"])

    meta = persist.parse_json_payload(section("classifier_meta"), "classifier_meta")
    if meta.get("kind") != model_kind:
        raise ModelFormatError(f"classifier section is {meta.get('kind')!r}, header says {model_kind!r}")
    arrays = persist.unpack_arrays(section("classifier"))
    if model_kind == "logreg":
        if "w" not in arrays or "b" not in arrays:
            raise ModelFormatError("logreg state lacks w/b")
        classifier = LogisticModel(w=arrays["w"], b=float(arrays["b"][0]))
    elif model_kind == "forest":
        classifier = forest_from_arrays(RFConfig(**meta["config"]), int(meta["n_features"]), arrays)
    else:
        cfg = MLPConfig(**{**meta["config"], "hidden_layers": tuple(meta["config"]["hidden_layers"])})
        classifier = mlp_from_arrays(cfg, int(meta["input_dim"]), arrays)

    return PipelineModel(
        embed_kind=embed_kind,
        model_kind=model_kind,
        selection=selection,
        vocab=vocab,
        embedder=embedder,
        scaler=scaler,
        classifier=classifier,
    )
