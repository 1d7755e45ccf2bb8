"""Spherical-code bounds and constructions.

The cap-volume sandwich 1/V_D(psi) <= A_D(psi) <= 1/V_D(psi/2) brackets the
maximum number of unit vectors with pairwise angle at least psi.  Codes are
built either by greedy rejection sampling over the whole sphere or by subset
selection from a finite candidate set (greedy or exact maximum independent
set).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .rng import Seed, as_seed
from .sphere import (
    ANGLE_TIE_TOL,
    log_cap_measure,
    min_pairwise_angle,
    unit_vectors,
)

EXACT_CANDIDATE_LIMIT = 25
_GREEDY_BATCH = 512


@dataclass(frozen=True)
class PackingBounds:
    """Cap-volume sandwich on the packing number A_D(psi), in log domain."""

    dimension: int
    psi: float
    log_lower: float  # log of 1/V_D(psi), a covering lower bound
    log_upper: float  # log of 1/V_D(psi/2), a cap-volume upper bound

    @property
    def lower(self) -> float:
        return math.exp(self.log_lower)

    @property
    def upper(self) -> float:
        return math.exp(self.log_upper)


def packing_bounds(dim: int, psi: float) -> PackingBounds:
    """Covering lower bound and cap-volume upper bound for A_D(psi).

    psi = 0 is rejected: both bounds diverge.
    """
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    if not 0.0 < psi <= math.pi:
        raise ValueError(f"separation angle must lie in (0, pi], got {psi}")
    log_lower = -log_cap_measure(dim, psi).log_value
    log_upper = -log_cap_measure(dim, psi / 2.0).log_value
    return PackingBounds(dim, psi, log_lower, log_upper)


@dataclass
class SphericalCode:
    """A finite set of unit vectors with a certified minimum pairwise angle.

    ``saturated`` records that greedy construction ran its rejection budget
    to exhaustion (a probabilistic-maximality certificate).  ``psi`` is the
    design separation the code was built for, when there was one.
    """

    dimension: int
    points: np.ndarray
    min_angle: float
    saturated: bool = False
    psi: float | None = None

    def __post_init__(self):
        self.points = unit_vectors(self.points)
        if self.points.shape[1] != self.dimension:
            raise ValueError(
                f"points have dimension {self.points.shape[1]}, "
                f"stated {self.dimension}"
            )
        achieved, _ = min_pairwise_angle(self.points)
        if achieved < self.min_angle - ANGLE_TIE_TOL:
            raise ValueError(
                f"certified min angle {self.min_angle} but pairs reach {achieved}"
            )

    def __len__(self) -> int:
        return self.points.shape[0]


def validate_code(code: SphericalCode | np.ndarray, psi: float) -> tuple[bool, float]:
    """Check all pairwise angles against psi; ties at psi count as valid.

    Returns (valid, achieved minimum angle); singletons report pi.
    """
    points = code.points if isinstance(code, SphericalCode) else unit_vectors(code)
    achieved, _ = min_pairwise_angle(points)
    return achieved >= psi - ANGLE_TIE_TOL, achieved


def greedy_packing(dim: int, psi: float, rejection_budget: int,
                   seed: Seed | int, max_points: int | None = None) -> SphericalCode:
    """Greedy rejection-sampled code with pairwise angles >= psi.

    Uniform candidates are accepted iff they keep the minimum angle; the
    construction stops after ``rejection_budget`` consecutive rejections
    (marking the code saturated) or on reaching ``max_points`` (in which
    case it is not saturated).  Deterministic given the seed.
    """
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    if not 0.0 < psi < math.pi:
        raise ValueError(f"separation angle must lie in (0, pi), got {psi}")
    if rejection_budget < 1:
        raise ValueError(f"rejection budget must be >= 1, got {rejection_budget}")
    if max_points is not None and max_points < 1:
        raise ValueError(f"max_points must be >= 1, got {max_points}")
    gen = as_seed(seed).stream("greedy-packing")
    cos_thr = math.cos(psi)

    acc = np.empty((256, dim))
    n_acc = 0
    consec = 0
    while consec < rejection_budget:
        batch = gen.standard_normal((_GREEDY_BATCH, dim))
        batch /= np.linalg.norm(batch, axis=1)[:, None]
        if n_acc + _GREEDY_BATCH > acc.shape[0]:
            grown = np.empty((2 * (n_acc + _GREEDY_BATCH), dim))
            grown[:n_acc] = acc[:n_acc]
            acc = grown
        if max_points is not None and n_acc + _GREEDY_BATCH > max_points:
            # process one candidate at a time near the cap so we stop exactly
            for i in range(batch.shape[0]):
                n_acc, consec = kernels.greedy_scan(
                    batch[i:i + 1], acc, n_acc, cos_thr, consec, rejection_budget
                )
                if n_acc >= max_points or consec >= rejection_budget:
                    break
            if n_acc >= max_points:
                break
        else:
            n_acc, consec = kernels.greedy_scan(
                batch, acc, n_acc, cos_thr, consec, rejection_budget
            )
    saturated = consec >= rejection_budget
    points = acc[:n_acc].copy()
    achieved, _ = min_pairwise_angle(points)
    return SphericalCode(dim, points, achieved, saturated=saturated, psi=psi)


def max_independent_set(conflicts: list[int], n: int) -> int:
    """Exact maximum independent set of a small graph, as a vertex bitmask.

    ``conflicts[i]`` is the bitmask of neighbors of vertex i.  Branch and
    bound with a popcount bound; deterministic (lowest-index branching), so
    ties resolve to the lexicographically smallest maximum set found first.
    """
    best_mask = 0
    best_size = 0

    def expand(cand: int, cur_mask: int, cur_size: int) -> None:
        nonlocal best_mask, best_size
        while cand:
            if cur_size + cand.bit_count() <= best_size:
                return
            v = (cand & -cand).bit_length() - 1
            cand &= cand - 1
            take_mask = cur_mask | (1 << v)
            take_cand = cand & ~conflicts[v]
            if cur_size + 1 > best_size:
                best_size = cur_size + 1
                best_mask = take_mask
            expand(take_cand, take_mask, cur_size + 1)

    expand((1 << n) - 1, 0, 0)
    return best_mask


def _conflict_masks(points: np.ndarray, psi: float) -> list[int]:
    gram = np.clip(points @ points.T, -1.0, 1.0)
    angles = np.arccos(gram)
    n = points.shape[0]
    masks = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if angles[i, j] < psi - ANGLE_TIE_TOL:
                masks[i] |= 1 << j
                masks[j] |= 1 << i
    return masks


def restricted_packing(candidates, psi: float, mode: str = "greedy",
                       seed: Seed | int = 0) -> SphericalCode:
    """Largest (exact) or maximal (greedy) sub-code of a finite candidate set.

    Exact mode solves the maximum independent set of the conflict graph and
    is limited to ``EXACT_CANDIDATE_LIMIT`` candidates.  Greedy mode scans
    the candidates in a deterministic seed-shuffled order and keeps every
    candidate compatible with the kept set, so the result is maximal.
    """
    pts = unit_vectors(candidates)
    n, dim = pts.shape
    if not 0.0 < psi <= math.pi:
        raise ValueError(f"separation angle must lie in (0, pi], got {psi}")
    if mode == "exact":
        if n > EXACT_CANDIDATE_LIMIT:
            raise ValueError(
                f"exact mode supports at most {EXACT_CANDIDATE_LIMIT} "
                f"candidates, got {n}"
            )
        mask = max_independent_set(_conflict_masks(pts, psi), n)
        chosen = [i for i in range(n) if mask >> i & 1]
    elif mode == "greedy":
        order = as_seed(seed).stream("restricted-packing").permutation(n)
        chosen = []
        for i in order:
            cand = pts[i]
            ok = all(
                math.acos(min(1.0, max(-1.0, float(pts[j] @ cand))))
                >= psi - ANGLE_TIE_TOL
                for j in chosen
            )
            if ok:
                chosen.append(int(i))
        chosen.sort()
    else:
        raise ValueError(f"mode must be 'greedy' or 'exact', got {mode!r}")
    sel = pts[chosen]
    achieved, _ = min_pairwise_angle(sel)
    return SphericalCode(dim, sel, achieved, saturated=False, psi=psi)


def save_code(code: SphericalCode, csv_path: str | Path) -> Path:
    """Write a code as CSV (one point per row) plus a JSON sidecar.

    The sidecar (same stem, .json) carries dimension, design psi, the
    saturated flag, and the certified minimum angle.  Returns the sidecar
    path.
    """
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(code.dimension)])
        for row in code.points:
            writer.writerow([repr(float(v)) for v in row])
    sidecar = csv_path.with_suffix(".json")
    meta = {
        "dimension": code.dimension,
        "psi": code.psi,
        "saturated": code.saturated,
        "min_angle": code.min_angle,
        "size": len(code),
    }
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return sidecar


def load_code(csv_path: str | Path) -> SphericalCode:
    """Read a code written by ``save_code``."""
    csv_path = Path(csv_path)
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        points = np.array([[float(v) for v in row] for row in reader])
    meta = json.loads(csv_path.with_suffix(".json").read_text())
    if len(header) != meta["dimension"]:
        raise ValueError(
            f"CSV width {len(header)} disagrees with sidecar dimension "
            f"{meta['dimension']}"
        )
    return SphericalCode(
        meta["dimension"], points, meta["min_angle"],
        saturated=meta["saturated"], psi=meta["psi"],
    )
