"""Pilot codebook construction, validation and text serialization.

A codebook is a ``Q x (J*K)`` complex matrix whose columns are unit-norm
pilot sequences, stored cell-major: columns ``j*K .. j*K + K - 1`` belong to
cell ``j``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NonPrimeDimension, NotUnitary, TooManyBases

UNITARY_TOL = 1e-10
UNBIASED_TOL = 1e-9


class CodebookKind(str, enum.Enum):
    MUB_PHASE = "MubPhase"
    MUB = "Mub"
    INCOMPLETE = "Incomplete"
    ORTHOGONAL_REUSED = "OrthogonalReused"

    @classmethod
    def parse(cls, name: str) -> "CodebookKind":
        for kind in cls:
            if kind.value.lower() == name.strip().lower():
                return kind
        raise ValueError(f"unknown codebook kind {name!r}; "
                         f"expected one of {[k.value for k in cls]}")


@dataclass(frozen=True)
class Codebook:
    matrix: np.ndarray
    J: int
    Q: int
    K: int
    kind: CodebookKind

    def __post_init__(self):
        if self.matrix.shape != (self.Q, self.J * self.K):
            raise DimensionMismatch(
                f"matrix shape {self.matrix.shape} does not match "
                f"Q={self.Q}, J*K={self.J * self.K}")

    @property
    def n_columns(self) -> int:
        return self.J * self.K

    def block(self, j: int) -> np.ndarray:
        return self.matrix[:, j * self.K:(j + 1) * self.K]

    @property
    def blocks(self) -> list[np.ndarray]:
        return [self.block(j) for j in range(self.J)]

    def cell_of_column(self) -> np.ndarray:
        return np.repeat(np.arange(self.J), self.K)

    def select(self, columns: Sequence[Sequence[int]]) -> "Codebook":
        """Keep, for each cell ``j``, the block columns listed in ``columns[j]``.

        All cells must keep the same number of columns.
        """
        if len(columns) != self.J:
            raise DimensionMismatch(f"need one column list per cell ({self.J})")
        k_new = len(columns[0])
        if any(len(c) != k_new for c in columns):
            raise DimensionMismatch("every cell must keep the same number of columns")
        idx = [j * self.K + int(c) for j, cols in enumerate(columns) for c in cols]
        if any(not 0 <= int(c) < self.K for cols in columns for c in cols):
            raise DimensionMismatch("column index outside the cell block")
        return Codebook(self.matrix[:, idx].copy(), self.J, self.Q, k_new, self.kind)

    def truncate(self, K: int) -> "Codebook":
        """First ``K`` columns of every block."""
        return self.select([range(K)] * self.J)

    def take_cells(self, cells: Sequence[int]) -> "Codebook":
        blocks = [self.block(j) for j in cells]
        return Codebook(np.hstack(blocks), len(blocks), self.Q, self.K, self.kind)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    return all(n % d for d in range(3, math.isqrt(n) + 1, 2))


def random_unitary(Q: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed ``Q x Q`` unitary (QR with diagonal phase fix)."""
    z = (rng.standard_normal((Q, Q)) + 1j * rng.standard_normal((Q, Q))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def _mub_phase_blocks(Q: int, J: int) -> list[np.ndarray]:
    if Q == 2:
        s = 1.0 / np.sqrt(2.0)
        pair = [s * np.array([[1, 1], [1, -1]], dtype=complex),
                s * np.array([[1, 1], [1j, -1j]], dtype=complex)]
        return pair[:J]
    k = np.arange(Q)[:, None]
    m = np.arange(Q)[None, :]
    blocks = []
    for r in range(J):
        # exponent reduced mod Q before scaling keeps the phases exact
        expo = (r * k * k + m * k) % Q
        blocks.append(np.exp(2j * np.pi * expo / Q) / np.sqrt(Q))
    return blocks


def build_mub_phase(Q: int, J: int) -> Codebook:
    """Constant-amplitude MUB codebook for prime ``Q`` with ``J <= Q`` cells.

    Basis ``r`` has entries ``w**(r k^2 + m k) / sqrt(Q)`` with ``w = exp(2 pi i / Q)``
    (row ``k``, column ``m``). ``Q = 2`` uses the explicit Hadamard pair.
    """
    if not is_prime(Q):
        raise NonPrimeDimension(f"Q={Q} is not prime")
    if not 1 <= J <= Q:
        raise TooManyBases(f"constant-amplitude family has at most Q={Q} bases, got J={J}")
    blocks = _mub_phase_blocks(Q, J)
    return Codebook(np.hstack(blocks), J, Q, Q, CodebookKind.MUB_PHASE)


def _c1_residual(block: np.ndarray) -> float:
    k = block.shape[1]
    return float(np.linalg.norm(block.conj().T @ block - np.eye(k)))


def augment_with_unitary(cb: Codebook, U: np.ndarray) -> Codebook:
    """Return ``[U, U P_1, ..., U P_J]``, a full-amplitude MUB with ``J + 1`` blocks."""
    if cb.kind is not CodebookKind.MUB_PHASE or cb.K != cb.Q:
        raise ValueError("augmentation needs a square-block MubPhase codebook")
    U = np.asarray(U, dtype=complex)
    if U.shape != (cb.Q, cb.Q):
        raise DimensionMismatch(f"U must be {cb.Q}x{cb.Q}")
    if _c1_residual(U) >= UNITARY_TOL:
        raise NotUnitary("U^H U deviates from identity")
    blocks = [U] + [U @ b for b in cb.blocks]
    return Codebook(np.hstack(blocks), cb.J + 1, cb.Q, cb.Q, CodebookKind.MUB)


def build_mub(Q: int, J: int, rng: np.random.Generator) -> Codebook:
    """``J`` blocks drawn uniformly from ``MUB(Q+1, Q, Q)``.

    The complete set is the prime-``Q`` phase family augmented with one
    random unitary; ``J`` of its ``Q + 1`` blocks are picked without replacement.
    """
    if not is_prime(Q):
        raise NonPrimeDimension(f"Q={Q} is not prime")
    if not 1 <= J <= Q + 1:
        raise TooManyBases(f"at most Q+1={Q + 1} mutually unbiased bases exist, got J={J}")
    full = augment_with_unitary(build_mub_phase(Q, Q), random_unitary(Q, rng))
    chosen = rng.choice(Q + 1, size=J, replace=False)
    return full.take_cells([int(c) for c in chosen])


def build_incomplete(Q: int, J: int, rng: np.random.Generator) -> Codebook:
    """``J`` independent random unitary blocks; per-cell orthogonality only."""
    if Q < 2 or J < 1:
        raise ValueError("need Q >= 2 and J >= 1")
    blocks = [random_unitary(Q, rng) for _ in range(J)]
    return Codebook(np.hstack(blocks), J, Q, Q, CodebookKind.INCOMPLETE)


def build_orthogonal_reused(Q: int, J: int, rng: np.random.Generator) -> Codebook:
    """One random unitary block shared by all ``J`` cells."""
    if Q < 2 or J < 1:
        raise ValueError("need Q >= 2 and J >= 1")
    u = random_unitary(Q, rng)
    return Codebook(np.hstack([u] * J), J, Q, Q, CodebookKind.ORTHOGONAL_REUSED)


def build_codebook(kind: CodebookKind | str, Q: int, J: int,
                   rng: np.random.Generator) -> Codebook:
    kind = CodebookKind.parse(kind) if isinstance(kind, str) else kind
    if kind is CodebookKind.MUB_PHASE:
        return build_mub_phase(Q, J)
    if kind is CodebookKind.MUB:
        return build_mub(Q, J, rng)
    if kind is CodebookKind.INCOMPLETE:
        return build_incomplete(Q, J, rng)
    return build_orthogonal_reused(Q, J, rng)


@dataclass(frozen=True)
class ValidationReport:
    c1_residual: float
    coherence: float
    entry_amplitude_spread: float


def cross_cell_mask(J: int, K: int) -> np.ndarray:
    cells = np.repeat(np.arange(J), K)
    return cells[:, None] != cells[None, :]


def coherence(cb: Codebook) -> float:
    """Largest cross-cell inner-product modulus (0 for a single cell)."""
    if cb.J < 2:
        return 0.0
    gram = np.abs(cb.matrix.conj().T @ cb.matrix)
    return float(gram[cross_cell_mask(cb.J, cb.K)].max())


def validate(cb: Codebook) -> ValidationReport:
    amp = np.abs(cb.matrix)
    return ValidationReport(
        c1_residual=max(_c1_residual(b) for b in cb.blocks),
        coherence=coherence(cb),
        entry_amplitude_spread=float(amp.max() - amp.min()),
    )


def invariant_failures(cb: Codebook, report: ValidationReport | None = None) -> list[str]:
    """Names of the declared-kind invariants that ``cb`` violates."""
    report = report or validate(cb)
    failures = []
    norms = np.linalg.norm(cb.matrix, axis=0)
    if np.max(np.abs(norms - 1.0)) > 1e-12:
        failures.append("unit_norm_columns")
    kind = cb.kind
    if kind is not CodebookKind.ORTHOGONAL_REUSED and report.c1_residual >= UNITARY_TOL:
        failures.append("c1_orthogonality")
    if kind is CodebookKind.MUB_PHASE:
        if np.max(np.abs(np.abs(cb.matrix) - 1.0 / np.sqrt(cb.Q))) > 1e-12:
            failures.append("constant_amplitude")
    if kind in (CodebookKind.MUB_PHASE, CodebookKind.MUB) and cb.J > 1:
        gram = np.abs(cb.matrix.conj().T @ cb.matrix)[cross_cell_mask(cb.J, cb.K)]
        if np.max(np.abs(gram - 1.0 / np.sqrt(cb.Q))) > UNBIASED_TOL:
            failures.append("unbiasedness")
    if kind is CodebookKind.ORTHOGONAL_REUSED:
        first = cb.block(0)
        if any(not np.array_equal(first, b) for b in cb.blocks[1:]):
            failures.append("identical_blocks")
    return failures


def write_codebook(cb: Codebook, path: str | Path) -> None:
    """Text export: header ``Q J K kind`` then one ``row col real imag`` line per entry."""
    lines = [f"{cb.Q} {cb.J} {cb.K} {cb.kind.value}"]
    m = cb.matrix
    for r in range(m.shape[0]):
        for c in range(m.shape[1]):
            z = m[r, c]
            lines.append(f"{r} {c} {z.real:.17g} {z.imag:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_codebook(path: str | Path) -> Codebook:
    text = Path(path).read_text().split("\n")
    header = text[0].split()
    if len(header) != 4:
        raise ValueError(f"bad codebook header: {text[0]!r}")
    Q, J, K = (int(x) for x in header[:3])
    kind = CodebookKind.parse(header[3])
    matrix = np.zeros((Q, J * K), dtype=complex)
    seen = np.zeros(matrix.shape, dtype=bool)
    for line in text[1:]:
        if not line.strip():
            continue
        r, c, re, im = line.split()
        r, c = int(r), int(c)
        matrix[r, c] = complex(float(re), float(im))
        seen[r, c] = True
    if not seen.all():
        raise ValueError(f"codebook file is missing {int((~seen).sum())} entries")
    return Codebook(matrix, J, Q, K, kind)
