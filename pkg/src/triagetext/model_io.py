"""Model persistence: one JSON file holding the fitted feature pipeline
state plus the trained classifier.

The file is canonical JSON (sorted keys, fixed separators, trailing newline)
and carries no timestamps, so training twice on the same inputs produces
byte-identical files. Lexicon entries and embedding vectors are not stored;
they are re-supplied at load time and checked against the digests recorded in
the pipeline state. The pipeline fingerprint recorded at save time must match
the fingerprint recomputed from the rebuilt pipeline, otherwise loading fails
rather than silently classifying with mismatched features.
"""

import json
from pathlib import Path
from typing import Callable, Sequence

from .classify import LinearSvmModel
from .errors import FingerprintError, ModelFileError, TriageError
from .features import EmbeddingTable, FeaturePipeline
from .lexicons import Lexicon

MODEL_FORMAT_VERSION = 1


def save_model(path: str | Path, pipeline: FeaturePipeline, classifier: LinearSvmModel) -> None:
    """Write pipeline state and classifier to ``path`` as canonical JSON.

    The classifier is stamped with the pipeline fingerprint; a classifier
    trained against a different pipeline is rejected.
    """
    if classifier.fingerprint and classifier.fingerprint != pipeline.fingerprint:
        raise FingerprintError(
            "classifier was trained on vectors from a different pipeline"
        )
    classifier.fingerprint = pipeline.fingerprint
    if classifier.dim != pipeline.dim:
        raise ModelFileError(
            f"classifier expects {classifier.dim} features, pipeline produces {pipeline.dim}"
        )
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "fingerprint": pipeline.fingerprint,
        "pipeline": pipeline.state_dict(),
        "classifier": classifier.to_dict(),
    }
    text = json.dumps(payload, sort_keys=True, indent=2, separators=(",", ": "))
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_model(
    path: str | Path,
    lexicons: Sequence[Lexicon] = (),
    embeddings: EmbeddingTable | None = None,
    misspelling_counter: Callable[[str], int] | None = None,
) -> tuple[FeaturePipeline, LinearSvmModel]:
    """Read a model file and rebuild the pipeline and classifier.

    Raises ModelFileError for unreadable or wrong-version files, and
    FingerprintError when the recorded fingerprint does not match the one
    recomputed from the rebuilt pipeline (e.g. edited state, or a lexicon
    bundle that differs from the one used at training).
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ModelFileError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"model file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ModelFileError(f"model file {path} does not hold a JSON object")
    version = data.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFileError(
            f"unsupported model format version {version!r} "
            f"(this build reads version {MODEL_FORMAT_VERSION})"
        )
    try:
        state = data["pipeline"]
        stored_fingerprint = data["fingerprint"]
        classifier_data = data["classifier"]
    except KeyError as exc:
        raise ModelFileError(f"model file {path} is missing the {exc.args[0]!r} section") from exc
    try:
        pipeline = FeaturePipeline.from_state(
            state,
            lexicons=lexicons,
            embeddings=embeddings,
            misspelling_counter=misspelling_counter,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"model file {path} has malformed pipeline state: {exc}") from exc
    if pipeline.fingerprint != stored_fingerprint:
        raise FingerprintError(
            "model file fingerprint does not match the rebuilt pipeline; the "
            "file was edited or the supplied lexicons/embeddings differ from "
            "the ones used at training"
        )
    try:
        classifier = LinearSvmModel.from_dict(classifier_data)
    except TriageError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"model file {path} has a malformed classifier: {exc}") from exc
    if classifier.dim != pipeline.dim:
        raise ModelFileError(
            f"classifier expects {classifier.dim} features, pipeline produces {pipeline.dim}"
        )
    if classifier.fingerprint != pipeline.fingerprint:
        raise FingerprintError(
            "classifier fingerprint does not match the pipeline in the same file"
        )
    return pipeline, classifier
