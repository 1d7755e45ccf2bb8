"""Synthetic identity pipeline: concentrated view sampling around centers.

Each identity owns a center on the sphere; a view is drawn uniformly from
the cap of radius rho around that center with probability 1 - eta, and
uniformly from the whole sphere otherwise.  The induced law places mass at
least 1 - eta in the cap by construction (the escape component is uniform
over the sphere rather than the cap complement; the concentration condition
is an inequality, so this is compliant and avoids complement sampling).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import Seed
from .sphere import sample_cap, sample_uniform_sphere, unit_vector, unit_vectors

_VIEW_STREAM = "views"


@dataclass
class SyntheticPipeline:
    """Identity centers plus the concentration law they share."""

    centers: np.ndarray  # (n_identities, dimension), unit rows
    rho: float
    eta: float
    seed: Seed

    def __post_init__(self):
        self.centers = unit_vectors(self.centers)
        if not 0.0 <= self.rho <= math.pi:
            raise ValueError(f"rho must lie in [0, pi], got {self.rho}")
        if not 0.0 <= self.eta < 1.0:
            raise ValueError(f"eta must lie in [0, 1), got {self.eta}")

    @property
    def dimension(self) -> int:
        return self.centers.shape[1]

    @property
    def n_identities(self) -> int:
        return self.centers.shape[0]


@dataclass
class IdentitySampleSet:
    """Views drawn for one identity."""

    identity: int
    views: np.ndarray  # (n_views, dimension), unit rows

    def __post_init__(self):
        self.views = unit_vectors(self.views)
        if self.views.shape[0] < 1:
            raise ValueError("sample set must contain at least one view")


def sample_views(pipeline: SyntheticPipeline, identity: int,
                 count: int) -> IdentitySampleSet:
    """Draw ``count`` i.i.d. views of one identity.

    Views come from the cap/escape mixture; the stream is keyed by the
    identity index, so repeated calls with identical arguments reproduce
    the same views.
    """
    if not 0 <= identity < pipeline.n_identities:
        raise IndexError(
            f"identity {identity} out of range [0, {pipeline.n_identities})"
        )
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    gen = pipeline.seed.stream(_VIEW_STREAM, identity)
    escape = gen.random(count) < pipeline.eta
    inside = sample_cap(pipeline.centers[identity], pipeline.rho, count, gen)
    if escape.any():
        outside = sample_uniform_sphere(pipeline.dimension, count, gen)
        views = np.where(escape[:, None], outside, inside)
    else:
        views = inside
    return IdentitySampleSet(identity, views)


def empirical_centered_check(samples: IdentitySampleSet, center,
                             rho: float) -> float:
    """Fraction of views farther than ``rho`` from the center (eta-hat)."""
    c = unit_vector(center)
    if samples.views.shape[1] != c.shape[0]:
        raise ValueError(
            f"dimension mismatch: views are {samples.views.shape[1]}-dimensional, "
            f"center is {c.shape[0]}-dimensional"
        )
    if not 0.0 <= rho <= math.pi:
        raise ValueError(f"rho must lie in [0, pi], got {rho}")
    cosines = np.clip(samples.views @ c, -1.0, 1.0)
    return float(np.mean(np.arccos(cosines) > rho))


def estimate_center_and_radius(samples: IdentitySampleSet,
                               eta: float) -> tuple[np.ndarray, float]:
    """Estimate (center, radius) as the normalized view mean and a quantile.

    The radius estimate is the lower empirical (1 - eta)-quantile of the
    angles to the estimated center (sorted-angle index ceil((1-eta)*n) - 1).
    A near-zero mean (symmetric or degenerate sample) is an explicit error;
    there is no silent fallback.
    """
    if not 0.0 <= eta < 1.0:
        raise ValueError(f"eta must lie in [0, 1), got {eta}")
    mean = samples.views.mean(axis=0)
    norm = float(np.linalg.norm(mean))
    if norm < 1e-6:
        raise ValueError(
            f"view mean has norm {norm:.2e}; the center direction is undefined"
        )
    center = mean / norm
    angles = np.sort(np.arccos(np.clip(samples.views @ center, -1.0, 1.0)))
    n = angles.shape[0]
    idx = min(max(math.ceil((1.0 - eta) * n) - 1, 0), n - 1)
    return center, float(angles[idx])


def save_pipeline(pipeline: SyntheticPipeline, json_path: str | Path) -> Path:
    """Write pipeline parameters as JSON with the centers in a CSV alongside."""
    json_path = Path(json_path)
    centers_path = json_path.with_suffix(".centers.csv")
    np.savetxt(centers_path, pipeline.centers, delimiter=",")
    meta = {
        "dimension": pipeline.dimension,
        "n_identities": pipeline.n_identities,
        "rho": pipeline.rho,
        "eta": pipeline.eta,
        "seed": pipeline.seed.master,
        "centers_file": centers_path.name,
    }
    json_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return json_path


def load_pipeline(json_path: str | Path) -> SyntheticPipeline:
    """Read a pipeline written by ``save_pipeline``."""
    json_path = Path(json_path)
    meta = json.loads(json_path.read_text())
    centers = np.loadtxt(json_path.parent / meta["centers_file"], delimiter=",")
    if centers.ndim == 1:
        centers = centers[None, :]
    return SyntheticPipeline(centers, meta["rho"], meta["eta"], Seed(meta["seed"]))


def export_views(pipeline: SyntheticPipeline, views_per_identity: int):
    """Materialize every identity's views, keyed by a stable label.

    Returns an ordered mapping label -> (n_views, D) array in the dataset
    layout the audit tooling ingests.
    """
    width = max(4, len(str(pipeline.n_identities - 1)))
    return {
        f"id{i:0{width}d}": sample_views(pipeline, i, views_per_identity).views
        for i in range(pipeline.n_identities)
    }
