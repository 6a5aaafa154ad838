"""Spectral filter bank and a small multi-channel convolutional predictor.

The filter bank consists of the top eigenvectors of the positive
semidefinite Hankel matrix whose (i, j) entry is the Gram integral
``integral_0^1 (a-1)^2 a^{i+j-2} da``; the closed form
``2 / ((i+j)^3 - (i+j))`` was derived by symbolic integration and is
cross-checked against adaptive quadrature in the verification suite.
These filters are fixed and data-independent: only the projection
matrices of the predictor are learned.

The predictor comes in two flavors. Full mode keeps one projection
matrix per filter and needs one scalar convolution per (filter, input
dimension) pair each step. Tensordot mode factors the stacked
projections into a (filters x dims) and a (dims x dims) piece, mixes
the filters into per-dimension kernels, and needs only one scalar
convolution per dimension; it requires matching input/output widths.

The predictor exists to exercise the streaming engines under a
realistic multi-channel workload, not to chase downstream quality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engines import make_engine
from .errors import ConfigurationError, SequenceFormatError
from .signal import Filter

# Dense symmetric eigendecompositions are capped at this order; larger
# banks are rejected rather than silently slow.
MAX_DENSE_EIG = 4096


def hankel_entry(i: int, j: int) -> float:
    """Closed form of the Hankel Gram integral at 1-based (i, j).

    Equals ``integral_0^1 (a-1)^2 a^{i+j-2} da = 2 / ((i+j)^3 - (i+j))``.
    """
    if i < 1 or j < 1:
        raise ValueError("indices are 1-based and must be >= 1")
    n = i + j
    return 2.0 / (n * n * n - n)


def hankel_matrix(length: int) -> np.ndarray:
    """Dense symmetric Hankel Gram matrix of the given order."""
    if length < 1:
        raise ValueError("length must be >= 1")
    idx = np.arange(1, length + 1)
    n = np.add.outer(idx, idx).astype(np.float64)
    return 2.0 / (n ** 3 - n)


@dataclass
class SpectralFilterBank:
    """Orthonormal filters as columns of ``filters`` (shape L x k).

    Filters are unit-norm and mutually orthogonal within 1e-8; when
    eigenvalues are present they are non-negative and non-increasing.
    Loaded banks carry no eigenvalues.
    """

    filters: np.ndarray
    eigenvalues: np.ndarray | None = None

    @property
    def length(self) -> int:
        return self.filters.shape[0]

    @property
    def count(self) -> int:
        return self.filters.shape[1]

    def filter_at(self, index: int) -> np.ndarray:
        """Filter ``index`` (0-based) as a 1-d array."""
        return self.filters[:, index]


def spectral_filters(length: int, count: int) -> SpectralFilterBank:
    """Top ``count`` eigenvectors of the order-``length`` Hankel matrix.

    Eigenvalue-descending; each filter is unit-norm with its
    largest-magnitude coordinate made positive so results are
    deterministic despite eigenvector sign ambiguity.
    """
    if not 1 <= count <= length:
        raise ConfigurationError(f"need 1 <= count <= length, got k={count}, L={length}")
    if length > MAX_DENSE_EIG:
        raise ConfigurationError(
            f"dense eigendecomposition capped at order {MAX_DENSE_EIG}, got {length}"
        )
    matrix = hankel_matrix(length)
    eigvals, eigvecs = np.linalg.eigh(matrix)
    if not np.isfinite(eigvals).all():
        raise RuntimeError("eigendecomposition did not converge")
    order = np.argsort(eigvals)[::-1][:count]
    vals = eigvals[order]
    vecs = eigvecs[:, order].copy()
    # the matrix is a Gram integral, hence PSD; clip rounding noise
    vals = np.maximum(vals, 0.0)
    for idx in range(count):
        col = vecs[:, idx]
        lead = np.argmax(np.abs(col))
        if col[lead] < 0:
            vecs[:, idx] = -col
    return SpectralFilterBank(filters=vecs, eigenvalues=vals)


def save_filter_bank(bank: SpectralFilterBank, path: str) -> None:
    """Write a bank as CSV: header line ``L,k`` then L rows of k floats.

    Values use shortest round-trip decimal form; the file reloads to
    bit-identical filters.
    """
    rows, cols = bank.filters.shape
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{rows},{cols}\n")
        for r in range(rows):
            fh.write(",".join(repr(float(v)) for v in bank.filters[r]) + "\n")


def load_filter_bank(path: str) -> SpectralFilterBank:
    """Read a bank written by :func:`save_filter_bank`."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.strip().split(",")
        if len(parts) != 2:
            raise SequenceFormatError("expected header 'L,k'", path, 1)
        try:
            rows, cols = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise SequenceFormatError(f"bad header {header.strip()!r}", path, 1) from exc
        filters = np.empty((rows, cols))
        for r in range(rows):
            line = fh.readline()
            if not line:
                raise SequenceFormatError(f"expected {rows} rows, found {r}", path, r + 1)
            cells = line.strip().split(",")
            if len(cells) != cols:
                raise SequenceFormatError(
                    f"expected {cols} values, found {len(cells)}", path, r + 2
                )
            try:
                filters[r] = [float(c) for c in cells]
            except ValueError as exc:
                raise SequenceFormatError("non-numeric cell", path, r + 2) from exc
    return SpectralFilterBank(filters=filters, eigenvalues=None)


class StuModel:
    """Multi-channel convolutional predictor over a filter bank.

    Full mode: prediction ``yhat_t = sum_i M_i <phi_i, recent inputs>``
    with one engine per (filter, input-dimension) pair. Tensordot
    mode: inputs are first projected by the square factor, then each
    dimension runs one engine whose kernel is the filter mix for that
    dimension; the step output is the engines' elementwise result.

    Per-channel engines are independent; channels of one step may run
    in parallel with a join before the projection sum. A model
    instance itself is single-owner mutable state.
    """

    def __init__(
        self,
        bank: SpectralFilterBank,
        *,
        projections: np.ndarray | None = None,
        factor_filters: np.ndarray | None = None,
        factor_mix: np.ndarray | None = None,
        engine_kind: str = "naive",
        max_steps: int = 1024,
        epoch_len: int | None = None,
    ):
        self.bank = bank
        self.max_steps = int(max_steps)
        self.engine_kind = engine_kind
        k, length = bank.count, bank.length
        ctx = max(length, self.max_steps)

        if projections is not None:
            if factor_filters is not None or factor_mix is not None:
                raise ConfigurationError("pass either projections or both factors")
            projections = np.array(projections, dtype=np.float64)
            if projections.ndim != 3 or projections.shape[0] != k:
                raise ConfigurationError(
                    f"projections must have shape (k, d_out, d_in) with k={k}"
                )
            self.mode = "full"
            self.projections = projections
            self.d_out, self.d_in = projections.shape[1], projections.shape[2]
            self._engines = [
                [
                    make_engine(engine_kind, Filter(bank.filter_at(i), ctx),
                                self.max_steps, epoch_len)
                    for _ in range(self.d_in)
                ]
                for i in range(k)
            ]
        elif factor_filters is not None and factor_mix is not None:
            factor_filters = np.array(factor_filters, dtype=np.float64)
            factor_mix = np.array(factor_mix, dtype=np.float64)
            if factor_filters.ndim != 2 or factor_filters.shape[0] != k:
                raise ConfigurationError(
                    f"filter factor must have shape (k, d) with k={k}"
                )
            d = factor_filters.shape[1]
            if factor_mix.shape != (d, d):
                raise ConfigurationError("mix factor must be square (d, d)")
            self.mode = "tensordot"
            self.factor_filters = factor_filters
            self.factor_mix = factor_mix
            self.d_out = self.d_in = d
            mixed = bank.filters @ factor_filters  # (L, d): kernel per dimension
            self.mixed_kernels = mixed
            self._engines = [
                make_engine(engine_kind, Filter(mixed[:, c], ctx),
                            self.max_steps, epoch_len)
                for c in range(d)
            ]
        else:
            raise ConfigurationError("pass either projections or both factors")
        self._last_features: np.ndarray | None = None

    def reset(self) -> None:
        if self.mode == "full":
            for row in self._engines:
                for eng in row:
                    eng.reset()
        else:
            for eng in self._engines:
                eng.reset()
        self._last_features = None

    def step(self, u_t: np.ndarray) -> np.ndarray:
        """Advance one time step and return the prediction vector."""
        u_t = np.asarray(u_t, dtype=np.float64)
        if u_t.shape != (self.d_in,):
            raise ConfigurationError(
                f"expected input of shape ({self.d_in},), got {u_t.shape}"
            )
        if self.mode == "full":
            k = self.bank.count
            feats = np.empty((k, self.d_in))
            for i in range(k):
                row = self._engines[i]
                for c in range(self.d_in):
                    feats[i, c] = row[c].push(u_t[c])
            self._last_features = feats
            out = np.zeros(self.d_out)
            for i in range(k):
                out += self.projections[i] @ feats[i]
            return out
        projected = self.factor_mix @ u_t
        return np.array([eng.push(projected[c]) for c, eng in enumerate(self._engines)])

    @property
    def last_features(self) -> np.ndarray | None:
        """Features (k, d_in) used by the most recent full-mode step."""
        return self._last_features


def full_projections_from_factors(
    factor_filters: np.ndarray, factor_mix: np.ndarray
) -> np.ndarray:
    """Per-filter projection matrices equivalent to the factored form.

    ``M_i = diag(factor_filters[i]) @ factor_mix``; a full-mode model
    with these projections computes exactly what the tensordot model
    with the given factors computes.
    """
    factor_filters = np.asarray(factor_filters, dtype=np.float64)
    factor_mix = np.asarray(factor_mix, dtype=np.float64)
    k, d = factor_filters.shape
    out = np.empty((k, d, d))
    for i in range(k):
        out[i] = factor_filters[i][:, None] * factor_mix
    return out


def ogd_spectral_step(
    model: StuModel,
    u_t: np.ndarray,
    y_t: np.ndarray,
    learning_rate: float = 0.01,
) -> np.ndarray:
    """One online-gradient-descent step on the squared prediction error.

    Predicts, observes ``y_t``, and updates each projection matrix by
    ``M_i <- M_i - lr * 2 (yhat - y) F_i^T`` where ``F_i`` is the
    filter-i feature vector of this step. Full mode only; returns the
    prediction made before the update.
    """
    if model.mode != "full":
        raise ConfigurationError("gradient updates require a full-mode model")
    if learning_rate <= 0:
        raise ConfigurationError("learning rate must be positive")
    y_t = np.asarray(y_t, dtype=np.float64)
    y_hat = model.step(u_t)
    residual = y_hat - y_t
    feats = model.last_features
    for i in range(model.bank.count):
        model.projections[i] -= learning_rate * 2.0 * np.outer(residual, feats[i])
    return y_hat
