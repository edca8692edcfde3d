# Copyright 2024-present The sextant authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Loading labeled datasets and persisting embeddings.

Supported on-disk formats:

* IDX image/label pairs (big-endian, magics 0x00000803 / 0x00000801),
  optionally gzip-compressed.
* Coordinate sparse text: a ``rows cols nnz`` header followed by
  ``row col value`` triples, 1-indexed. Lines starting with ``%`` are
  ignored.
* Tab-separated embeddings whose first line is a ``#`` comment holding a
  JSON header (seed, dimension, hyperparameters).
"""

import gzip
import json
import logging

import numpy as np
import scipy.sparse
from sklearn.datasets import make_blobs
from sklearn.feature_extraction.text import TfidfTransformer

from neighborgraph.exceptions import (
    DataConsistencyError,
    DataFormatError,
    InvalidArgumentError,
)
from neighborgraph.layout import Embedding
from neighborgraph.utils import to_jsonable

LOGGER = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class FeatureMatrix:
    """An n_points x n_features data matrix, dense or sparse (CSR).

    Both storage variants expose the same row access through :meth:`row`.
    """

    def __init__(self, data):
        if scipy.sparse.issparse(data):
            data = scipy.sparse.csr_matrix(data, dtype=np.float64)
            data.sum_duplicates()
            data.sort_indices()
            values = data.data
        else:
            data = np.ascontiguousarray(data, dtype=np.float64)
            if data.ndim != 2:
                raise DataFormatError(
                    "Feature matrix must be 2-dimensional", detail="got %d dims" % data.ndim
                )
            values = data
        if not np.all(np.isfinite(values)):
            raise DataFormatError("Feature matrix contains NaN or Inf values")
        self.data = data

    def __repr__(self):
        kind = "sparse" if self.is_sparse else "dense"
        return f"<FeatureMatrix: {self.n_points}x{self.n_features} {kind}>"

    def __len__(self):
        return self.n_points

    @property
    def is_sparse(self):
        return scipy.sparse.issparse(self.data)

    @property
    def n_points(self):
        return self.data.shape[0]

    @property
    def n_features(self):
        return self.data.shape[1]

    def row(self, i):
        """Row `i` as a dense 1-D array, whatever the storage."""
        if self.is_sparse:
            return self.data.getrow(i).toarray().ravel()
        return self.data[i].copy()

    def take(self, indices):
        """A new FeatureMatrix holding the given rows, in order."""
        return FeatureMatrix(self.data[np.asarray(indices)])

    def to_dense(self):
        if self.is_sparse:
            return self.data.toarray()
        return self.data


class LabelVector:
    """Ground-truth class ids for every point, with optional class names."""

    def __init__(self, labels, class_names=None):
        labels = np.asarray(labels)
        if labels.ndim != 1:
            raise DataFormatError("Labels must be a 1-D sequence")
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(np.equal(np.mod(labels, 1), 0)):
                raise DataFormatError("Labels must be integers")
        labels = labels.astype(np.int64)
        if labels.size and labels.min() < 0:
            raise DataFormatError("Labels must be non-negative")
        if class_names is not None:
            class_names = [str(name) for name in class_names]
            n_classes = len(class_names)
        else:
            n_classes = int(labels.max()) + 1 if labels.size else 0
        if labels.size and labels.max() >= n_classes:
            raise DataConsistencyError(
                "Label out of range", detail="%d >= %d classes" % (labels.max(), n_classes)
            )
        if n_classes < 2:
            raise DataConsistencyError("At least two classes are required")
        self.labels = labels
        self.class_names = class_names
        self.n_classes = n_classes

    def __len__(self):
        return self.labels.shape[0]

    def __repr__(self):
        return f"<LabelVector: {len(self)} labels, {self.n_classes} classes>"

    @property
    def present_classes(self):
        return np.unique(self.labels)

    def name_of(self, label):
        if self.class_names is not None:
            return self.class_names[label]
        return str(label)

    def take(self, indices):
        return LabelVector(self.labels[np.asarray(indices)], class_names=self.class_names)


def _read_bytes(path):
    opener = gzip.open if str(path).endswith(".gz") else open
    try:
        with opener(path, "rb") as fp:
            return fp.read()
    except OSError as exc:
        if isinstance(exc, FileNotFoundError):
            raise
        raise DataFormatError("Unable to read file", path=path, detail=str(exc))


def _read_idx(path, magic, n_dims):
    buf = _read_bytes(path)
    header_size = 4 * (1 + n_dims)
    if len(buf) < header_size:
        raise DataFormatError("Truncated IDX header", path=path)
    header = np.frombuffer(buf[:header_size], dtype=">u4")
    if int(header[0]) != magic:
        raise DataFormatError(
            "Bad IDX magic number",
            path=path,
            detail="expected 0x%08X, found 0x%08X" % (magic, header[0]),
        )
    dims = tuple(int(d) for d in header[1:])
    payload = np.frombuffer(buf[header_size:], dtype=np.uint8)
    if payload.size != int(np.prod(dims)):
        raise DataFormatError(
            "IDX payload size does not match header",
            path=path,
            detail="%d bytes for dims %s" % (payload.size, dims),
        )
    return payload.reshape(dims)


def load_class_names(path):
    """One class name per line; line i names class id i. Blank lines are skipped."""
    if path is None:
        return None
    with open(path) as fp:
        names = [line.strip() for line in fp if line.strip()]
    if len(set(names)) != len(names):
        raise DataFormatError("Class names repeat", path=path)
    return names


def load_labels(path, names_path=None):
    """Load a label file, either IDX (by magic number) or one integer per line."""
    head = _read_bytes(path)[:4]
    if len(head) == 4 and int(np.frombuffer(head, dtype=">u4")[0]) == IDX_LABELS_MAGIC:
        return LabelVector(_read_idx(path, IDX_LABELS_MAGIC, 1), load_class_names(names_path))
    return _load_text_labels(path, names_path)


def _load_text_labels(path, names_path=None):
    with open(path) as fp:
        tokens = fp.read().split()
    try:
        labels = np.array([int(token) for token in tokens], dtype=np.int64)
    except ValueError as exc:
        raise DataFormatError("Malformed label file", path=path, detail=str(exc))
    return LabelVector(labels, load_class_names(names_path))


def load_idx(images_path, labels_path, names_path=None):
    """Load an IDX image/label pair as a dense FeatureMatrix and LabelVector.

    Pixels are widened to floats in [0, 255] without normalization. An
    optional `names_path` gives the class names, one per line.
    """
    images = _read_idx(images_path, IDX_IMAGES_MAGIC, 3)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC, 1)
    if images.shape[0] != labels.shape[0]:
        raise DataConsistencyError(
            "Image and label counts differ",
            detail="%d images, %d labels" % (images.shape[0], labels.shape[0]),
        )
    n_points, rows, cols = images.shape
    features = FeatureMatrix(images.reshape(n_points, rows * cols).astype(np.float64))
    LOGGER.info(
        "Loaded %d IDX images of %dx%d pixels from %s", n_points, rows, cols, images_path
    )
    return features, LabelVector(labels, load_class_names(names_path))


def write_idx(images_path, labels_path, images, labels):
    """Write uint8 images of shape (count, rows, cols) and labels as IDX files."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    header = np.array((IDX_IMAGES_MAGIC, *images.shape), dtype=">u4")
    with open(images_path, "wb") as fp:
        fp.write(header.tobytes())
        fp.write(images.tobytes())
    with open(labels_path, "wb") as fp:
        fp.write(np.array((IDX_LABELS_MAGIC, labels.shape[0]), dtype=">u4").tobytes())
        fp.write(labels.tobytes())


def load_sparse_matrix(matrix_path, labels_path, names_path=None):
    """Load a coordinate-format sparse matrix and its per-line labels."""
    with open(matrix_path) as fp:
        lines = [line for line in fp if line.strip() and not line.lstrip().startswith("%")]
    if not lines:
        raise DataFormatError("Missing header line", path=matrix_path)
    try:
        n_rows, n_cols, nnz = (int(token) for token in lines[0].split())
    except ValueError:
        raise DataFormatError(
            "Header must be 'rows cols nnz'", path=matrix_path, detail=lines[0].strip()
        )
    try:
        entries = np.array(" ".join(lines[1:]).split(), dtype=np.float64)
    except ValueError as exc:
        raise DataFormatError("Malformed matrix entry", path=matrix_path, detail=str(exc))
    if entries.size % 3:
        raise DataFormatError("Entries must be 'row col value' triples", path=matrix_path)
    entries = entries.reshape(-1, 3)
    rows, cols, values = entries[:, 0], entries[:, 1], entries[:, 2]
    if not (np.all(rows == np.floor(rows)) and np.all(cols == np.floor(cols))):
        raise DataFormatError("Non-integer matrix index", path=matrix_path)
    rows = rows.astype(np.int64) - 1
    cols = cols.astype(np.int64) - 1
    bad = (rows < 0) | (rows >= n_rows) | (cols < 0) | (cols >= n_cols)
    if np.any(bad):
        first = int(np.flatnonzero(bad)[0])
        raise DataFormatError(
            "Matrix index out of range",
            path=matrix_path,
            detail="entry %d at (%d, %d) for shape (%d, %d)"
            % (first + 1, rows[first] + 1, cols[first] + 1, n_rows, n_cols),
        )
    if not np.all(np.isfinite(values)):
        raise DataFormatError("Matrix contains NaN or Inf values", path=matrix_path)
    if entries.shape[0] != nnz:
        raise DataConsistencyError(
            "Entry count does not match header",
            path=matrix_path,
            detail="header says %d, found %d" % (nnz, entries.shape[0]),
        )
    keys = rows * n_cols + cols
    if np.unique(keys).size != keys.size:
        raise DataFormatError("Duplicate (row, col) entries", path=matrix_path)

    matrix = scipy.sparse.csr_matrix((values, (rows, cols)), shape=(n_rows, n_cols))
    labels = _load_text_labels(labels_path, names_path)
    if len(labels) != n_rows:
        raise DataConsistencyError(
            "Matrix rows and label counts differ",
            detail="%d rows, %d labels" % (n_rows, len(labels)),
        )
    LOGGER.info(
        "Loaded %dx%d sparse matrix with %d entries from %s", n_rows, n_cols, nnz, matrix_path
    )
    return FeatureMatrix(matrix), labels


def write_sparse_matrix(path, features):
    """Write a FeatureMatrix in the coordinate text format read by
    :func:`load_sparse_matrix`. Explicit zeros are not written."""
    matrix = scipy.sparse.coo_matrix(features.data)
    keep = matrix.data != 0
    rows, cols, values = matrix.row[keep], matrix.col[keep], matrix.data[keep]
    order = np.lexsort((cols, rows))
    with open(path, "w") as fp:
        fp.write("%d %d %d\n" % (matrix.shape[0], matrix.shape[1], order.size))
        for idx in order:
            fp.write("%d %d %.17g\n" % (rows[idx] + 1, cols[idx] + 1, values[idx]))


def write_labels(path, labels):
    with open(path, "w") as fp:
        for label in labels.labels:
            fp.write("%d\n" % label)


def save_embedding(embedding, path):
    """Save an embedding as TSV with a JSON header line."""
    header = {
        "seed": embedding.seed,
        "dim": embedding.d,
        "n_points": embedding.n_points,
        "hyperparams": embedding.hyperparams,
    }
    with open(path, "w") as fp:
        fp.write("# %s\n" % json.dumps(header, sort_keys=True, default=to_jsonable))
        for row in embedding.coords:
            fp.write("\t".join("%.17g" % value for value in row))
            fp.write("\n")
    LOGGER.debug("Saved %d-point embedding to %s", embedding.n_points, path)


def load_embedding(path):
    with open(path) as fp:
        lines = fp.read().splitlines()
    header = {}
    if lines and lines[0].startswith("#"):
        try:
            header = json.loads(lines[0][1:])
        except ValueError as exc:
            raise DataFormatError("Malformed embedding header", path=path, detail=str(exc))
        lines = lines[1:]
    rows = [line.split("\t") for line in lines if line.strip()]
    dim = header.get("dim", len(rows[0]) if rows else 1)
    for number, row in enumerate(rows):
        if len(row) != dim:
            raise DataConsistencyError(
                "Inconsistent column count",
                path=path,
                detail="row %d has %d columns, expected %d" % (number, len(row), dim),
            )
    try:
        coords = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    except ValueError as exc:
        raise DataFormatError("Malformed embedding value", path=path, detail=str(exc))
    if not np.all(np.isfinite(coords)):
        raise DataFormatError("Embedding contains NaN or Inf values", path=path)
    return Embedding(coords, seed=header.get("seed"), hyperparams=header.get("hyperparams", {}))


def make_blob_dataset(*, n_points, n_centers, n_features, cluster_std=1.0, seed=0):
    """Isotropic Gaussian blobs with centers drawn in a wide box."""
    data, labels = make_blobs(
        n_samples=n_points,
        n_features=n_features,
        centers=n_centers,
        cluster_std=cluster_std,
        center_box=(-20.0, 20.0),
        random_state=seed,
    )
    return FeatureMatrix(data), LabelVector(labels)


def make_topic_dataset(
    *, n_docs, n_classes, vocab_size, doc_length=80, topic_words=40, noise=0.3, tfidf=False, seed=0
):
    """Sparse bag-of-words counts drawn from one topic per class.

    Every class owns `topic_words` preferred words; a document mixes its class
    topic with a shared background distribution in proportion `noise`.
    With `tfidf` the counts are re-weighted by smoothed inverse document
    frequency and l2-normalized per document.
    """
    if topic_words > vocab_size:
        raise InvalidArgumentError("topic_words cannot exceed vocab_size")
    rng = np.random.default_rng(seed)
    background = rng.dirichlet(np.ones(vocab_size))
    topics = np.zeros((n_classes, vocab_size))
    for c in range(n_classes):
        words = rng.choice(vocab_size, size=topic_words, replace=False)
        topics[c, words] = rng.dirichlet(np.ones(topic_words))
    mixtures = (1.0 - noise) * topics + noise * background
    mixtures /= mixtures.sum(axis=1, keepdims=True)
    labels = np.arange(n_docs) % n_classes
    counts = scipy.sparse.csr_matrix(
        np.vstack([rng.multinomial(doc_length, mixtures[c]) for c in labels]).astype(np.float64)
    )
    if tfidf:
        counts = TfidfTransformer(norm="l2", smooth_idf=True).fit_transform(counts)
    return FeatureMatrix(counts), LabelVector(labels)


def balanced_subset(features, labels, n_points, seed=0):
    """Draw a class-balanced subset of roughly `n_points` points.

    Each present class contributes ``n_points // n_classes`` points (or all of
    its points if it has fewer). Returned rows keep their original order.
    """
    rng = np.random.default_rng(seed)
    classes = labels.present_classes
    per_class = n_points // classes.size
    chosen = []
    for c in classes:
        members = np.flatnonzero(labels.labels == c)
        take = min(per_class, members.size)
        chosen.append(rng.choice(members, size=take, replace=False))
    indices = np.sort(np.concatenate(chosen))
    LOGGER.info(
        "Selected a balanced subset of %d points (%d per class)", indices.size, per_class
    )
    return features.take(indices), labels.take(indices), indices
