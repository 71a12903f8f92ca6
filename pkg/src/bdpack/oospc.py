"""Optical orthogonal signature pattern codes from balanced {4,5} packings.

A block over Z_u' x Z_v' becomes a u' x v' 0/1 matrix.  The code has
lambda = 1 when every nontrivial periodic autocorrelation and every periodic
cross-correlation is at most 1.  The checker works on the matrices alone
(2-D FFT correlation), not on difference counts, so it is an independent
check on the packing verifier.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .packing import Certificate, Packing, verify_dp

__all__ = ["OOSPCError", "PatternSet", "to_patterns", "correlation", "correlation_table",
           "verify_oospc", "code_to_dict", "code_from_dict", "write_code", "read_code"]

WEIGHTS = (4, 5)


class OOSPCError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PatternSet:
    dims: tuple[int, int]
    codewords: np.ndarray  # (N, rows, cols) uint8
    name: str = ""
    weights_allowed: tuple[int, ...] = field(default=WEIGHTS)

    def __post_init__(self) -> None:
        cw = np.asarray(self.codewords, dtype=np.uint8)
        if cw.ndim != 3:
            cw = cw.reshape(-1, *self.dims)
        if cw.shape[1:] != tuple(self.dims):
            raise OOSPCError(f"codeword shape {cw.shape[1:]} does not match dims {self.dims}")
        if cw.size and cw.max() > 1:
            raise OOSPCError("codewords must be 0/1 matrices")
        object.__setattr__(self, "codewords", cw)

    def __len__(self) -> int:
        return len(self.codewords)

    @property
    def weights(self) -> list[int]:
        return [int(w) for w in self.codewords.sum(axis=(1, 2))]

    def weight_counts(self) -> dict[int, int]:
        return dict(sorted(Counter(self.weights).items()))

    def with_bit_flipped(self, index: int, row: int, col: int) -> "PatternSet":
        cw = self.codewords.copy()
        cw[index, row, col] ^= 1
        return PatternSet(self.dims, cw, self.name, self.weights_allowed)


def to_patterns(p: Packing, check: bool = True) -> PatternSet:
    """One codeword per block; requires a certified DP over a two-coordinate group."""
    if p.group.arity != 2:
        raise OOSPCError(f"patterns need a group Z_u x Z_v, got {p.group}")
    if check:
        cert = verify_dp(p)
        if not cert.ok:
            raise OOSPCError(f"packing is not a DP: {cert.reason}")
    dims = (int(p.group.moduli[0]), int(p.group.moduli[1]))
    cw = np.zeros((len(p.blocks), *dims), dtype=np.uint8)
    for i, blk in enumerate(p.blocks):
        for x, y in blk:
            cw[i, x, y] = 1
    return PatternSet(dims, cw, p.name, tuple(sorted(p.sizes)))


def correlation(x: np.ndarray, y: np.ndarray, shift: tuple[int, int]) -> int:
    """sum_{i,j} x[i,j] * y[(i + t1) mod u', (j + t2) mod v'], by direct summation."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 2:
        raise OOSPCError(f"dimension mismatch: {x.shape} vs {y.shape}")
    t1, t2 = shift
    rolled = np.roll(y, shift=(-int(t1), -int(t2)), axis=(0, 1))
    return int((x.astype(np.int64) * rolled).sum())


def _spectra(cw: np.ndarray) -> np.ndarray:
    return np.fft.rfft2(cw.astype(np.float64), axes=(1, 2))


def correlation_table(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """All shifts at once: table[t1, t2] = correlation(x, y, (t1, t2))."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 2:
        raise OOSPCError(f"dimension mismatch: {x.shape} vs {y.shape}")
    fx, fy = _spectra(np.stack([x, y]))
    return np.rint(np.fft.irfft2(np.conj(fx) * fy, s=x.shape)).astype(np.int64)


def _involutions(dims: tuple[int, int]) -> int:
    return (2 if dims[0] % 2 == 0 else 1) * (2 if dims[1] % 2 == 0 else 1)


def verify_oospc(ps: PatternSet, chunk: int = 64) -> Certificate:
    """Check lambda = 1 over all shifts for all codewords and pairs; report balance and bound.

    Negative certificates carry a witness: the codeword indices and the shift.
    """
    dims = ps.dims
    n = len(ps)
    weights = ps.weights
    wc = ps.weight_counts()
    per = (dims[0] * dims[1] - _involutions(dims)) // sum(k * k - k for k in WEIGHTS)
    cert = Certificate(kind="OOSPC", ok=True, group=tuple(dims), n_blocks=n, size_counts=wc,
                       bound=per, lam=1)
    cert.balanced = len({wc.get(k, 0) for k in WEIGHTS}) == 1 and set(wc) <= set(WEIGHTS)
    bad_w = [i for i, w in enumerate(weights) if w not in ps.weights_allowed]
    if bad_w:
        cert.ok = False
        cert.reason = f"codeword weight not in {list(ps.weights_allowed)}"
        cert.witness = {"codeword": bad_w[0], "weight": weights[bad_w[0]]}
    if n and cert.ok:
        spec = _spectra(ps.codewords)
        worst = 0
        for i in range(n):
            for j0 in range(i, n, chunk):
                js = np.arange(j0, min(n, j0 + chunk))
                prod = np.conj(spec[i])[None] * spec[js]
                raw = np.fft.irfft2(prod, s=dims, axes=(1, 2))
                tab = np.rint(raw).astype(np.int64)
                if np.abs(raw - tab).max() > 0.25:
                    raise OOSPCError("numerical correlation error too large")
                if js[0] == i:
                    tab[0, 0, 0] = 0  # peak autocorrelation
                m = int(tab.max())
                worst = max(worst, m)
                if m > 1:
                    jj, t1, t2 = np.unravel_index(int(tab.argmax()), tab.shape)
                    j = int(js[jj])
                    cert.ok = False
                    cert.reason = ("autocorrelation" if j == i else "cross-correlation") + f" {m} exceeds 1"
                    cert.witness = {"codewords": [i, j], "shift": [int(t1), int(t2)], "value": m}
                    break
            if not cert.ok:
                break
        cert.max_multiplicity = worst
    optimal = bool(cert.ok and cert.balanced and all(wc.get(k, 0) == per for k in WEIGHTS))
    cert.info = {"optimal": optimal, "code_size": n, "size_bound": 2 * per}
    return cert


# interchange format

def code_to_dict(ps: PatternSet) -> dict[str, Any]:
    return {
        "dims": list(ps.dims),
        "codewords": [["".join(str(int(b)) for b in row) for row in cw] for cw in ps.codewords],
        "weights": ps.weights,
        "lambda": 1,
    }


def code_from_dict(doc: dict[str, Any]) -> PatternSet:
    try:
        dims = (int(doc["dims"][0]), int(doc["dims"][1]))
        rows: Sequence[Sequence[str]] = doc["codewords"]
        cw = np.zeros((len(rows), *dims), dtype=np.uint8)
        for i, cwrows in enumerate(rows):
            if len(cwrows) != dims[0]:
                raise OOSPCError(f"codeword {i} has {len(cwrows)} rows, expected {dims[0]}")
            for r, s in enumerate(cwrows):
                if len(s) != dims[1] or set(s) - {"0", "1"}:
                    raise OOSPCError(f"codeword {i} row {r} is not a 0/1 string of length {dims[1]}")
                cw[i, r] = [int(ch) for ch in s]
    except (KeyError, TypeError, IndexError) as exc:
        raise OOSPCError(f"malformed code document: {exc}") from exc
    ps = PatternSet(dims, cw)
    if "weights" in doc and list(doc["weights"]) != ps.weights:
        raise OOSPCError("recorded weights do not match the codewords")
    if doc.get("lambda", 1) != 1:
        raise OOSPCError("only lambda = 1 codes are supported")
    return ps


def write_code(path: str | Path, ps: PatternSet) -> None:
    Path(path).write_text(json.dumps(code_to_dict(ps)) + "\n", encoding="utf-8")


def read_code(path: str | Path) -> PatternSet:
    return code_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
