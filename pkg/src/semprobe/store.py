"""On-disk embedding store: binary layer files, manifests, and labels.

A store is a directory with one subdirectory per split (``train``, ``dev``,
``test``). Each split holds a ``manifest.json``, one ``layer_NNN.emb`` file
per encoder layer, and a ``labels.tsv``. Layer files share row order, so a
sentence keeps one index across every layer of a split.

Layer file layout, little-endian:

====== ===== =========================================
offset bytes content
====== ===== =========================================
0      8     magic ``SEMPROBE``
8      4     format version (uint32, currently 1)
12     4     sentence count n (uint32)
16     4     embedding dim d (uint32)
20     4     layer index (uint32)
24     n*d*4 row-major float32 embedding payload
====== ===== =========================================

The manifest records a 64-bit FNV-1a checksum of each file's payload bytes
(header excluded).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

MAGIC = b"SEMPROBE"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIIII")

TASKS = ("sts", "te_triplet", "te_pair")
SPLITS = ("train", "dev", "test")
POOLINGS = ("mean_tokens", "last_token")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = (1 << 64) - 1


class StoreError(Exception):
    """Base class for malformed stores, files, manifests, or labels."""


class BadMagicError(StoreError):
    """Layer file does not start with the expected magic bytes."""


class VersionMismatchError(StoreError):
    """Layer file declares an unsupported format version."""


class TruncatedFileError(StoreError):
    """Layer file is shorter (or longer) than its header promises."""


class ChecksumMismatchError(StoreError):
    """Payload checksum disagrees with the manifest."""


class InvalidEmbeddingError(StoreError):
    """Embedding data violates an invariant (NaN, Inf, bad shape)."""


class ManifestError(StoreError):
    """Manifest is missing, malformed, or inconsistent."""


class LabelError(StoreError):
    """Label file violates its task schema."""


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string."""
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _U64
    return h


@dataclass(frozen=True)
class EmbeddingSet:
    """One layer of sentence embeddings for one split.

    ``data`` is float32 with shape (sentence_count, dim); rows are sentences
    in a fixed order shared by every layer of the split. Instances are
    validated on construction and must not be mutated afterwards.
    """

    model_id: str
    layer_index: int
    pooling: str
    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidEmbeddingError(
                f"embedding data must be 2-D and non-empty, got shape {arr.shape}"
            )
        if not np.isfinite(arr).all():
            raise InvalidEmbeddingError("embedding data contains NaN or Inf")
        if self.layer_index < 0:
            raise InvalidEmbeddingError(f"negative layer index {self.layer_index}")
        if self.pooling not in POOLINGS:
            raise InvalidEmbeddingError(f"unknown pooling {self.pooling!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def sentence_count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


_MANIFEST_KEYS = (
    "task",
    "split",
    "sentence_count",
    "model_id",
    "layer_count",
    "dim",
    "pooling",
    "layer_files",
    "layer_checksums",
)


@dataclass(frozen=True)
class DatasetManifest:
    """Schema for one split of a store.

    ``layer_files`` and ``layer_checksums`` are parallel, ordered by layer
    index from the input embedding layer upward.
    """

    task: str
    split: str
    sentence_count: int
    model_id: str
    layer_count: int
    dim: int
    pooling: str
    layer_files: tuple[str, ...]
    layer_checksums: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise ManifestError(f"unknown task {self.task!r}")
        if self.split not in SPLITS:
            raise ManifestError(f"unknown split {self.split!r}")
        if self.pooling not in POOLINGS:
            raise ManifestError(f"unknown pooling {self.pooling!r}")
        if self.sentence_count < 1:
            raise ManifestError("sentence_count must be positive")
        if self.dim < 1:
            raise ManifestError("dim must be positive")
        if self.layer_count < 2:
            raise ManifestError(
                f"layer_count must be at least 2, got {self.layer_count}"
            )
        if len(self.layer_files) != self.layer_count:
            raise ManifestError(
                f"{len(self.layer_files)} layer files listed for "
                f"layer_count {self.layer_count}"
            )
        if len(self.layer_checksums) != self.layer_count:
            raise ManifestError(
                f"{len(self.layer_checksums)} checksums listed for "
                f"layer_count {self.layer_count}"
            )

    def to_json(self) -> str:
        doc = {
            "task": self.task,
            "split": self.split,
            "sentence_count": self.sentence_count,
            "model_id": self.model_id,
            "layer_count": self.layer_count,
            "dim": self.dim,
            "pooling": self.pooling,
            "layer_files": list(self.layer_files),
            "layer_checksums": [f"{c:016x}" for c in self.layer_checksums],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"manifest is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ManifestError("manifest must be a JSON object")
        missing = [k for k in _MANIFEST_KEYS if k not in doc]
        unknown = [k for k in doc if k not in _MANIFEST_KEYS]
        if missing:
            raise ManifestError(f"manifest missing fields: {', '.join(missing)}")
        if unknown:
            raise ManifestError(f"manifest has unknown fields: {', '.join(unknown)}")
        try:
            checksums = tuple(int(c, 16) for c in doc["layer_checksums"])
        except (TypeError, ValueError) as exc:
            raise ManifestError(f"bad checksum entry: {exc}") from exc
        for key in ("sentence_count", "layer_count", "dim"):
            if not isinstance(doc[key], int) or isinstance(doc[key], bool):
                raise ManifestError(f"manifest field {key!r} must be an integer")
        for key in ("task", "split", "model_id", "pooling"):
            if not isinstance(doc[key], str):
                raise ManifestError(f"manifest field {key!r} must be a string")
        files = doc["layer_files"]
        if not isinstance(files, list) or not all(isinstance(f, str) for f in files):
            raise ManifestError("layer_files must be a list of strings")
        return cls(
            task=doc["task"],
            split=doc["split"],
            sentence_count=doc["sentence_count"],
            model_id=doc["model_id"],
            layer_count=doc["layer_count"],
            dim=doc["dim"],
            pooling=doc["pooling"],
            layer_files=tuple(files),
            layer_checksums=checksums,
        )


def write_embedding_file(embeddings: EmbeddingSet, destination: Path) -> int:
    """Serialize one layer to ``destination`` and return its payload checksum.

    The set was validated at construction, so no partial file is ever
    produced for invalid data.
    """
    arr = np.ascontiguousarray(embeddings.data, dtype="<f4")
    if not np.isfinite(arr).all():
        raise InvalidEmbeddingError("embedding data contains NaN or Inf")
    payload = arr.tobytes(order="C")
    checksum = fnv1a_64(payload)
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        embeddings.sentence_count,
        embeddings.dim,
        embeddings.layer_index,
    )
    destination = Path(destination)
    destination.write_bytes(header + payload)
    return checksum


def read_embedding_file(
    source: Path,
    manifest: DatasetManifest | None = None,
    expected_checksum: int | None = None,
) -> EmbeddingSet:
    """Load one layer file, verifying structure and, where possible, content.

    With a manifest, the sentence count and dim must match it and the payload
    checksum must equal the manifest entry for this file (or
    ``expected_checksum`` when given explicitly).
    """
    source = Path(source)
    raw = source.read_bytes()
    if len(raw) < _HEADER.size:
        raise TruncatedFileError(
            f"{source.name}: {len(raw)} bytes is too short for a header"
        )
    magic, version, count, dim, layer_index = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagicError(f"{source.name}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"{source.name}: format version {version}, expected {FORMAT_VERSION}"
        )
    payload = raw[_HEADER.size :]
    expected_bytes = count * dim * 4
    if len(payload) != expected_bytes:
        raise TruncatedFileError(
            f"{source.name}: payload is {len(payload)} bytes, "
            f"header promises {expected_bytes}"
        )
    if manifest is not None:
        if count != manifest.sentence_count:
            raise InvalidEmbeddingError(
                f"{source.name}: {count} sentences, manifest says "
                f"{manifest.sentence_count}"
            )
        if dim != manifest.dim:
            raise InvalidEmbeddingError(
                f"{source.name}: dim {dim}, manifest says {manifest.dim}"
            )
        if expected_checksum is None and source.name in manifest.layer_files:
            position = manifest.layer_files.index(source.name)
            expected_checksum = manifest.layer_checksums[position]
    if expected_checksum is not None:
        actual = fnv1a_64(payload)
        if actual != expected_checksum:
            raise ChecksumMismatchError(
                f"{source.name}: checksum {actual:016x}, "
                f"manifest says {expected_checksum:016x}"
            )
    data = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    pooling = manifest.pooling if manifest is not None else POOLINGS[0]
    model_id = manifest.model_id if manifest is not None else "unknown"
    return EmbeddingSet(
        model_id=model_id, layer_index=layer_index, pooling=pooling, data=data
    )


@dataclass(frozen=True)
class LabeledPairSet:
    """Sentence-pair labels over a split's shared row indices.

    For similarity pairs, ``labels`` holds target projected distances in
    [0, 1] (annotator score s in [0, 5] maps to (5 - s) / 5). For
    entailment pairs, ``labels`` holds cosine targets +1 (entailment) or -1
    (contradiction); neutral rows are dropped at load and tallied in
    ``dropped_neutral``.
    """

    task: str
    left: np.ndarray
    right: np.ndarray
    labels: np.ndarray
    dropped_neutral: int = 0

    def __post_init__(self) -> None:
        for name in ("left", "right", "labels"):
            arr = getattr(self, name)
            arr.setflags(write=False)
        if not (len(self.left) == len(self.right) == len(self.labels)):
            raise LabelError("pair columns have mismatched lengths")

    def __len__(self) -> int:
        return len(self.left)


@dataclass(frozen=True)
class TripletSet:
    """Premise / entailment / contradiction index triples."""

    premise: np.ndarray
    entailment: np.ndarray
    contradiction: np.ndarray

    def __post_init__(self) -> None:
        for name in ("premise", "entailment", "contradiction"):
            getattr(self, name).setflags(write=False)
        if not (
            len(self.premise) == len(self.entailment) == len(self.contradiction)
        ):
            raise LabelError("triplet columns have mismatched lengths")

    def __len__(self) -> int:
        return len(self.premise)


_PAIR_CLASSES = {"entailment": 1.0, "contradiction": -1.0, "neutral": None}


def _parse_index(token: str, line_no: int, sentence_count: int | None) -> int:
    try:
        value = int(token)
    except ValueError as exc:
        raise LabelError(f"line {line_no}: {token!r} is not an integer") from exc
    if value < 0:
        raise LabelError(f"line {line_no}: negative sentence index {value}")
    if sentence_count is not None and value >= sentence_count:
        raise LabelError(
            f"line {line_no}: index {value} out of range for "
            f"{sentence_count} sentences"
        )
    return value


def load_labels(
    source: Path, task: str, sentence_count: int | None = None
) -> LabeledPairSet | TripletSet:
    """Parse a tab-separated label file for the given task.

    Rows are ``a b score`` for similarity, ``premise hypothesis class`` for
    entailment pairs, and ``premise entailment contradiction`` for triples.
    Any schema violation (wrong arity, score outside [0, 5], unknown class,
    index out of range, non-distinct triple) raises :class:`LabelError`.
    """
    if task not in TASKS:
        raise LabelError(f"unknown task {task!r}")
    lines = Path(source).read_text(encoding="utf-8").splitlines()
    lefts: list[int] = []
    rights: list[int] = []
    thirds: list[int] = []
    values: list[float] = []
    dropped = 0
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise LabelError(
                f"line {line_no}: expected 3 tab-separated fields, got {len(parts)}"
            )
        a = _parse_index(parts[0], line_no, sentence_count)
        b = _parse_index(parts[1], line_no, sentence_count)
        if task == "sts":
            try:
                score = float(parts[2])
            except ValueError as exc:
                raise LabelError(
                    f"line {line_no}: score {parts[2]!r} is not a number"
                ) from exc
            if not np.isfinite(score) or not 0.0 <= score <= 5.0:
                raise LabelError(
                    f"line {line_no}: score {score} outside [0, 5]"
                )
            lefts.append(a)
            rights.append(b)
            values.append((5.0 - score) / 5.0)
        elif task == "te_pair":
            label = parts[2].strip()
            if label not in _PAIR_CLASSES:
                raise LabelError(f"line {line_no}: unknown class {label!r}")
            target = _PAIR_CLASSES[label]
            if target is None:
                dropped += 1
                continue
            lefts.append(a)
            rights.append(b)
            values.append(target)
        else:
            c = _parse_index(parts[2], line_no, sentence_count)
            if a == b or a == c or b == c:
                raise LabelError(
                    f"line {line_no}: triple ({a}, {b}, {c}) is not pairwise distinct"
                )
            lefts.append(a)
            rights.append(b)
            thirds.append(c)
    if task == "te_triplet":
        return TripletSet(
            premise=np.asarray(lefts, dtype=np.int64),
            entailment=np.asarray(rights, dtype=np.int64),
            contradiction=np.asarray(thirds, dtype=np.int64),
        )
    return LabeledPairSet(
        task=task,
        left=np.asarray(lefts, dtype=np.int64),
        right=np.asarray(rights, dtype=np.int64),
        labels=np.asarray(values, dtype=np.float64),
        dropped_neutral=dropped,
    )


MANIFEST_NAME = "manifest.json"
LABELS_NAME = "labels.tsv"


def layer_file_name(layer_index: int) -> str:
    return f"layer_{layer_index:03d}.emb"


@dataclass(frozen=True)
class SplitData:
    """Everything loaded for one split: manifest, labels, and layer access."""

    root: Path
    manifest: DatasetManifest
    labels: LabeledPairSet | TripletSet

    def load_layer(self, layer_index: int) -> EmbeddingSet:
        if not 0 <= layer_index < self.manifest.layer_count:
            raise StoreError(
                f"layer {layer_index} out of range, store has "
                f"{self.manifest.layer_count} layers"
            )
        path = self.root / self.manifest.layer_files[layer_index]
        embeddings = read_embedding_file(path, self.manifest)
        if embeddings.layer_index != layer_index:
            raise InvalidEmbeddingError(
                f"{path.name}: header layer index {embeddings.layer_index} "
                f"does not match position {layer_index}"
            )
        return embeddings


class EmbeddingStore:
    """Reader over a store directory with train / dev / test splits."""

    def __init__(self, root: Path):
        self.root = Path(root)
        if not self.root.is_dir():
            raise StoreError(f"{self.root} is not a directory")
        self._manifests: dict[str, DatasetManifest] = {}
        for split in SPLITS:
            path = self.root / split / MANIFEST_NAME
            if not path.is_file():
                raise ManifestError(f"missing {path.relative_to(self.root)}")
            self._manifests[split] = DatasetManifest.from_json(
                path.read_text(encoding="utf-8")
            )
        self._check_cross_split()

    def _check_cross_split(self) -> None:
        reference = self._manifests["train"]
        for split, manifest in self._manifests.items():
            if manifest.split != split:
                raise ManifestError(
                    f"{split}/{MANIFEST_NAME} declares split {manifest.split!r}"
                )
            for attr in ("task", "model_id", "layer_count", "dim", "pooling"):
                if getattr(manifest, attr) != getattr(reference, attr):
                    raise ManifestError(
                        f"{split} disagrees with train on {attr}: "
                        f"{getattr(manifest, attr)!r} vs "
                        f"{getattr(reference, attr)!r}"
                    )

    @property
    def task(self) -> str:
        return self._manifests["train"].task

    @property
    def model_id(self) -> str:
        return self._manifests["train"].model_id

    @property
    def layer_count(self) -> int:
        return self._manifests["train"].layer_count

    @property
    def dim(self) -> int:
        return self._manifests["train"].dim

    def manifest(self, split: str) -> DatasetManifest:
        if split not in self._manifests:
            raise StoreError(f"unknown split {split!r}")
        return self._manifests[split]

    def split(self, split: str) -> SplitData:
        manifest = self.manifest(split)
        labels = load_labels(
            self.root / split / LABELS_NAME, manifest.task, manifest.sentence_count
        )
        return SplitData(root=self.root / split, manifest=manifest, labels=labels)

    def validate(self) -> Iterator[tuple[str, bool, str]]:
        """Check every file in the store; yield (relative path, ok, detail).

        Verifies manifest schema and cross-split consistency (already
        enforced at open), then per layer file: header structure, shape
        against the manifest, payload checksum, and finiteness; then label
        schema against each split's sentence count.
        """
        for split in SPLITS:
            manifest = self._manifests[split]
            yield f"{split}/{MANIFEST_NAME}", True, (
                f"task={manifest.task} sentences={manifest.sentence_count} "
                f"layers={manifest.layer_count} dim={manifest.dim}"
            )
            for position, name in enumerate(manifest.layer_files):
                rel = f"{split}/{name}"
                try:
                    embeddings = read_embedding_file(
                        self.root / split / name, manifest
                    )
                except (StoreError, OSError) as exc:
                    yield rel, False, str(exc)
                    continue
                if embeddings.layer_index != position:
                    yield rel, False, (
                        f"header layer index {embeddings.layer_index} does not "
                        f"match position {position}"
                    )
                else:
                    yield rel, True, f"checksum ok, {embeddings.sentence_count} rows"
            rel = f"{split}/{LABELS_NAME}"
            try:
                labels = load_labels(
                    self.root / split / LABELS_NAME,
                    manifest.task,
                    manifest.sentence_count,
                )
            except (StoreError, OSError) as exc:
                yield rel, False, str(exc)
                continue
            detail = f"{len(labels)} rows"
            if isinstance(labels, LabeledPairSet) and labels.dropped_neutral:
                detail += f", {labels.dropped_neutral} neutral dropped"
            yield rel, True, detail


def write_store_split(
    root: Path,
    task: str,
    split: str,
    model_id: str,
    pooling: str,
    layers: list[np.ndarray],
    label_rows: list[tuple],
) -> DatasetManifest:
    """Write one split directory: layer files, labels, then the manifest.

    ``layers`` is ordered by layer index and must share one shape;
    ``label_rows`` are tuples serialized as tab-separated columns.
    """
    if len(layers) < 2:
        raise ManifestError(f"a split needs at least 2 layers, got {len(layers)}")
    split_dir = Path(root) / split
    split_dir.mkdir(parents=True, exist_ok=True)
    names: list[str] = []
    checksums: list[int] = []
    count, dim = layers[0].shape
    for index, data in enumerate(layers):
        if data.shape != (count, dim):
            raise InvalidEmbeddingError(
                f"layer {index} shape {data.shape} differs from layer 0 "
                f"shape {(count, dim)}"
            )
        embeddings = EmbeddingSet(
            model_id=model_id, layer_index=index, pooling=pooling, data=data
        )
        name = layer_file_name(index)
        checksums.append(write_embedding_file(embeddings, split_dir / name))
        names.append(name)
    lines = ["\t".join(str(col) for col in row) for row in label_rows]
    (split_dir / LABELS_NAME).write_text(
        "\n".join(lines) + ("\n" if lines else ""), encoding="utf-8"
    )
    manifest = DatasetManifest(
        task=task,
        split=split,
        sentence_count=count,
        model_id=model_id,
        layer_count=len(layers),
        dim=dim,
        pooling=pooling,
        layer_files=tuple(names),
        layer_checksums=tuple(checksums),
    )
    (split_dir / MANIFEST_NAME).write_text(manifest.to_json(), encoding="utf-8")
    return manifest
