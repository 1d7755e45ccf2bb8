"""Empirical admissibility audits of identity-grouped embedding datasets.

Genuine (same-identity) pair acceptance and impostor (cross-identity) pair
rejection rates are estimated at a fixed threshold, aggregated by the worst
identity and worst pair (matching the for-all quantifier of the decision
rule, not an average).  The module also computes spectral diagnostics of the
identity-mean matrix: nuclear norm, rank, and the bound chain
nuclear <= sqrt(r) * frobenius <= sqrt(r M) <= max(M, sqrt(M D)).

Rates are reported raw, with pair counts; finite-sample confidence
corrections are left to the caller.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .capacity import CenteredParams, OperatingPoint
from .packing import max_independent_set
from .rng import Seed, as_seed
from .sphere import NORM_ACCEPT_TOL, unit_vector, unit_vectors
from .synthetic import IdentitySampleSet

_EXACT_IDENTITY_LIMIT = 25
_RANK_CUTOFF = 1e-10
_WORST_LIST = 5


class EmbeddingDataset:
    """Ordered identity-labeled collections of unit embeddings."""

    def __init__(self, groups: dict[str, np.ndarray]):
        if not groups:
            raise ValueError("dataset must contain at least one identity")
        self.groups: dict[str, np.ndarray] = {}
        dim = None
        for label, views in groups.items():
            arr = unit_vectors(views)
            if dim is None:
                dim = arr.shape[1]
            elif arr.shape[1] != dim:
                raise ValueError(
                    f"identity {label!r} has dimension {arr.shape[1]}, "
                    f"expected {dim}"
                )
            self.groups[str(label)] = arr
        self.dimension = int(dim)

    @property
    def labels(self) -> list[str]:
        return list(self.groups)

    @property
    def n_identities(self) -> int:
        return len(self.groups)

    def views(self, label: str) -> np.ndarray:
        return self.groups[label]

    def subset(self, labels) -> "EmbeddingDataset":
        return EmbeddingDataset({lb: self.groups[lb] for lb in labels})

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "EmbeddingDataset":
        """Ingest JSON-lines records {"identity": str, "embedding": [...]}.

        Vectors within 1e-6 of unit norm are renormalized; any line farther
        off (or malformed) is rejected with its line number.
        """
        groups: dict[str, list[np.ndarray]] = {}
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    label = str(rec["identity"])
                    emb = np.asarray(rec["embedding"], dtype=np.float64)
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise ValueError(f"line {lineno}: malformed record ({exc})") from exc
                norm = float(np.linalg.norm(emb))
                if emb.ndim != 1 or abs(norm - 1.0) > NORM_ACCEPT_TOL:
                    raise ValueError(
                        f"line {lineno}: embedding norm {norm!r} deviates from 1 "
                        f"by more than {NORM_ACCEPT_TOL}"
                    )
                groups.setdefault(label, []).append(emb / norm)
        return cls({lb: np.array(v) for lb, v in groups.items()})

    def to_jsonl(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for label, views in self.groups.items():
                for row in views:
                    fh.write(json.dumps(
                        {"identity": label, "embedding": [float(v) for v in row]}
                    ) + "\n")


@dataclass(frozen=True)
class GenuineStat:
    label: str
    accept_rate: float
    pairs_evaluated: int
    total_pairs: int


@dataclass(frozen=True)
class ImpostorStat:
    pair: tuple[str, str]
    reject_rate: float
    pairs_evaluated: int
    total_pairs: int


@dataclass
class AdmissibilityReport:
    """Worst-case empirical admissibility at a threshold."""

    tau: float
    genuine: list[GenuineStat]
    impostor: list[ImpostorStat]
    eps_in_hat: float | None  # max over identities of 1 - accept rate
    eps_out_hat: float  # max over pairs of 1 - reject rate
    skipped_single_view: list[str] = field(default_factory=list)

    def worst_genuine(self, k: int = _WORST_LIST) -> list[GenuineStat]:
        return sorted(self.genuine, key=lambda g: (g.accept_rate, g.label))[:k]

    def worst_impostor(self, k: int = _WORST_LIST) -> list[ImpostorStat]:
        return sorted(self.impostor, key=lambda s: (s.reject_rate, s.pair))[:k]

    def admissible_at(self, eps_in: float, eps_out: float) -> bool:
        """Do the empirical rates satisfy the stated tolerances?"""
        if self.eps_in_hat is None:
            raise ValueError(
                "no identity contributed genuine pairs; the genuine tail "
                "cannot be assessed"
            )
        return self.eps_in_hat <= eps_in and self.eps_out_hat <= eps_out

    def to_json(self) -> str:
        """Stable serialization (byte-identical for identical inputs)."""
        payload = {
            "tau": self.tau,
            "eps_in_hat": self.eps_in_hat,
            "eps_out_hat": self.eps_out_hat,
            "skipped_single_view": self.skipped_single_view,
            "genuine": [
                {"label": g.label, "accept_rate": g.accept_rate,
                 "pairs_evaluated": g.pairs_evaluated, "total_pairs": g.total_pairs}
                for g in self.genuine
            ],
            "impostor": [
                {"pair": list(s.pair), "reject_rate": s.reject_rate,
                 "pairs_evaluated": s.pairs_evaluated, "total_pairs": s.total_pairs}
                for s in self.impostor
            ],
            "worst_genuine": [g.label for g in self.worst_genuine()],
            "worst_impostor": [list(s.pair) for s in self.worst_impostor()],
        }
        return json.dumps(payload, sort_keys=True)


def _decode_triangular(r: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map flat indices onto (i, j) with i < j for an n-point pair triangle."""
    rf = r.astype(np.float64)
    i = np.floor((n - 0.5) - np.sqrt((n - 0.5) ** 2 - 2.0 * rf)).astype(np.int64)
    i = np.clip(i, 0, n - 2)
    base = i * (n - 1) - i * (i - 1) // 2
    over = base > r
    i = np.where(over, i - 1, i)
    base = i * (n - 1) - i * (i - 1) // 2
    under = r - base >= (n - 1 - i)
    i = np.where(under, i + 1, i)
    base = i * (n - 1) - i * (i - 1) // 2
    j = r - base + i + 1
    return i, j


def _genuine_rate(views: np.ndarray, tau: float, budget: int,
                  gen) -> tuple[float, int, int]:
    n = views.shape[0]
    total = n * (n - 1) // 2
    if total <= budget:
        gram = views @ views.T
        iu = np.triu_indices(n, k=1)
        accepted = int((gram[iu] >= tau).sum())
        return accepted / total, total, total
    r = gen.integers(0, total, size=budget)
    i, j = _decode_triangular(r, n)
    sims = np.einsum("ij,ij->i", views[i], views[j])
    return float((sims >= tau).mean()), budget, total


def _impostor_rate(a: np.ndarray, b: np.ndarray, tau: float, budget: int,
                   gen) -> tuple[float, int, int]:
    total = a.shape[0] * b.shape[0]
    if total <= budget:
        cross = a @ b.T
        rejected = int((cross <= tau).sum())
        return rejected / total, total, total
    r = gen.integers(0, total, size=budget)
    i, j = np.divmod(r, b.shape[0])
    sims = np.einsum("ij,ij->i", a[i], b[j])
    return float((sims <= tau).mean()), budget, total


def estimate_admissibility(ds: EmbeddingDataset, tau: float, pair_budget: int,
                           seed: Seed | int = 0) -> AdmissibilityReport:
    """Estimate worst-case genuine/impostor tail rates at threshold tau.

    Pairs are enumerated exactly whenever an identity (or identity pair)
    has at most ``pair_budget`` of them, and uniformly subsampled from a
    seeded stream otherwise; results are deterministic per seed.
    Identities with a single view contribute no genuine pairs; they are
    flagged and excluded from eps_in_hat (with a warning) rather than
    treated as passing.
    """
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"tau must lie in [0, 1), got {tau}")
    if pair_budget < 1:
        raise ValueError(f"pair budget must be >= 1, got {pair_budget}")
    seed = as_seed(seed)
    labels = ds.labels

    genuine: list[GenuineStat] = []
    skipped: list[str] = []
    for pos, label in enumerate(labels):
        views = ds.views(label)
        if views.shape[0] < 2:
            skipped.append(label)
            continue
        gen = seed.stream("audit-genuine", pos)
        rate, used, total = _genuine_rate(views, tau, pair_budget, gen)
        genuine.append(GenuineStat(label, rate, used, total))
    if skipped:
        warnings.warn(
            f"{len(skipped)} identit{'y' if len(skipped) == 1 else 'ies'} with "
            f"a single view contribute no genuine pairs: {skipped}",
            stacklevel=2,
        )

    impostor: list[ImpostorStat] = []
    counter = 0
    for ai, la in enumerate(labels):
        for lb in labels[ai + 1:]:
            gen = seed.stream("audit-impostor", counter)
            counter += 1
            rate, used, total = _impostor_rate(
                ds.views(la), ds.views(lb), tau, pair_budget, gen
            )
            impostor.append(ImpostorStat((la, lb), rate, used, total))

    eps_in = max((1.0 - g.accept_rate for g in genuine), default=None)
    eps_out = max((1.0 - s.reject_rate for s in impostor), default=0.0)
    return AdmissibilityReport(tau, genuine, impostor, eps_in, eps_out, skipped)


def empirical_capacity_at(ds: EmbeddingDataset, op: OperatingPoint,
                          mode: str = "greedy", pair_budget: int | None = None,
                          seed: Seed | int = 0) -> tuple[list[str], int]:
    """Largest identity subset whose restriction meets the operating point.

    Builds the violation graph (vertices: identities whose own genuine rate
    meets eps_in; edges: pairs whose impostor rejection misses eps_out) and
    returns a maximum independent set (exact mode, at most 25 identities) or
    the greedy set obtained by repeatedly dropping the identity with the
    most violating pairs (ties broken by dataset order).  Identities without
    genuine evidence are excluded, with a warning.
    """
    if mode not in ("greedy", "exact"):
        raise ValueError(f"mode must be 'greedy' or 'exact', got {mode!r}")
    budget = pair_budget if pair_budget is not None else (1 << 62)
    report = estimate_admissibility(ds, op.tau, budget, seed)

    genuine_ok = {g.label for g in report.genuine
                  if 1.0 - g.accept_rate <= op.eps_in}
    eligible = [lb for lb in ds.labels if lb in genuine_ok]
    if mode == "exact" and len(eligible) > _EXACT_IDENTITY_LIMIT:
        raise ValueError(
            f"exact mode supports at most {_EXACT_IDENTITY_LIMIT} identities, "
            f"got {len(eligible)}"
        )
    pos = {lb: k for k, lb in enumerate(eligible)}
    edges = [
        (pos[a], pos[b]) for (a, b), s in
        ((s.pair, s) for s in report.impostor)
        if a in pos and b in pos and 1.0 - s.reject_rate > op.eps_out
    ]

    if mode == "exact":
        conflicts = [0] * len(eligible)
        for a, b in edges:
            conflicts[a] |= 1 << b
            conflicts[b] |= 1 << a
        mask = max_independent_set(conflicts, len(eligible))
        keep = [eligible[k] for k in range(len(eligible)) if mask >> k & 1]
        return keep, len(keep)

    alive = set(range(len(eligible)))
    live_edges = set(edges)
    while live_edges:
        degree = {}
        for a, b in live_edges:
            degree[a] = degree.get(a, 0) + 1
            degree[b] = degree.get(b, 0) + 1
        # most violating pairs first; ties fall to the earliest label
        drop = min(degree, key=lambda k: (-degree[k], k))
        alive.discard(drop)
        live_edges = {(a, b) for a, b in live_edges if drop not in (a, b)}
    keep = [eligible[k] for k in sorted(alive)]
    return keep, len(keep)


@dataclass
class MmcrReport:
    """Spectral diagnostics of the identity-mean matrix."""

    n_identities: int
    dimension: int
    mean_vectors: np.ndarray  # (M, D): per-identity view means
    mean_norms: np.ndarray
    singular_values: np.ndarray
    nuclear_norm: float
    frobenius_norm: float
    rank: int  # numerical rank at cutoff 1e-10 * sigma_max
    bound_sqrt_rm: float
    bound_m: float
    bound_sqrt_md: float
    bound_satisfied: bool


def mmcr_report(ds: EmbeddingDataset) -> MmcrReport:
    """Nuclear-norm diagnostics of the stacked per-identity mean embeddings.

    Checks the chain nuclear <= sqrt(r)*frobenius <= sqrt(r M), with the
    final stage M (when M <= D) or sqrt(M D); the chain must hold for any
    dataset of unit-norm views, since each mean has norm at most 1.
    """
    means = np.array([ds.views(lb).mean(axis=0) for lb in ds.labels])
    m, dim = means.shape
    svals = np.linalg.svd(means, compute_uv=False)
    nuclear = float(svals.sum())
    frob = float(np.linalg.norm(means))
    sigma_max = float(svals[0]) if svals.size else 0.0
    rank = int((svals > _RANK_CUTOFF * sigma_max).sum()) if sigma_max > 0 else 0
    sqrt_rm = math.sqrt(rank * m)
    sqrt_md = math.sqrt(m * dim)
    tol = 1e-9 * max(1.0, nuclear)
    chain = (
        nuclear <= math.sqrt(max(rank, 0)) * frob + tol
        and math.sqrt(max(rank, 0)) * frob <= sqrt_rm + tol
        and sqrt_rm <= (m if m <= dim else sqrt_md) + tol
    )
    return MmcrReport(
        n_identities=m, dimension=dim, mean_vectors=means,
        mean_norms=np.linalg.norm(means, axis=1), singular_values=svals,
        nuclear_norm=nuclear, frobenius_norm=frob, rank=rank,
        bound_sqrt_rm=sqrt_rm, bound_m=float(m), bound_sqrt_md=sqrt_md,
        bound_satisfied=bool(chain),
    )


@dataclass(frozen=True)
class MeanAlignmentResult:
    alignment: float  # inner product of the raw view mean with the center
    bound: float  # (1 - eta) cos(rho) - eta
    std_err: float
    slack_std_errs: float
    satisfied: bool


def mean_alignment_check(samples: IdentitySampleSet, center,
                         params: CenteredParams) -> MeanAlignmentResult:
    """Check the concentration bound <mean, center> >= (1-eta)cos(rho) - eta.

    The population inequality is checked statistically: satisfied means the
    empirical alignment clears the bound within four standard errors.
    """
    c = unit_vector(center)
    if samples.views.shape[1] != c.shape[0]:
        raise ValueError(
            f"dimension mismatch: views are {samples.views.shape[1]}-dimensional, "
            f"center is {c.shape[0]}-dimensional"
        )
    dots = samples.views @ c
    n = dots.shape[0]
    alignment = float(dots.mean())
    std_err = float(dots.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    bound = (1.0 - params.eta) * math.cos(params.rho) - params.eta
    margin = max(4.0 * std_err, 1e-12)
    slack = (alignment - bound) / std_err if std_err > 0 else math.inf
    return MeanAlignmentResult(
        alignment=alignment, bound=bound, std_err=std_err,
        slack_std_errs=slack, satisfied=alignment >= bound - margin,
    )
