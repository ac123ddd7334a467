"""Exact nearest-neighbor search and the cloud-to-cloud match score.

The match score drives both the candidate ranking inside the initializer and
the correspondence step of the ICP loop, so queries must be exact and
bit-reproducible: nearest-neighbor ties are broken by lowest target column
index, never by tree layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .core import PermutationMap, PointCloud
from .errors import InvalidInputError


@dataclass(frozen=True, eq=False)
class NeighborIndex:
    """k-d tree (median splits) over the columns of a target cloud."""

    tree: cKDTree
    target: PointCloud

    @property
    def d(self) -> int:
        return self.target.d

    @property
    def n(self) -> int:
        return self.target.n


@dataclass(frozen=True, eq=False)
class MatchResult:
    """Nearest-target assignment for each source column, with the RMS score.

    The assignment is generally not injective, and score = 0 iff every source
    point coincides with its assigned target point.
    """

    assignment: PermutationMap
    score: float


def build_index(target: PointCloud) -> NeighborIndex:
    """Index every target column for exact nearest-neighbor queries."""
    # balanced_tree gives sliding-midpoint-free median splits; queries stay
    # exact either way, this just keeps construction deterministic
    tree = cKDTree(target.data.T, leafsize=16, balanced_tree=True)
    return NeighborIndex(tree=tree, target=target)


def _query_lowest_index(index: NeighborIndex, points: np.ndarray):
    """k=1 query over row points with ties resolved to the lowest column index."""
    if index.n == 1:
        distances, _ = index.tree.query(points, k=1)
        distances = np.atleast_1d(np.asarray(distances, dtype=float))
        return np.zeros(distances.size, dtype=np.intp), distances
    distances2, indices2 = index.tree.query(points, k=2)
    distances = np.array(distances2[:, 0], dtype=float)
    indices = np.array(indices2[:, 0], dtype=np.intp)
    # the tree returns an arbitrary member of a tie; re-resolve exact ties
    tied = np.nonzero(distances2[:, 1] == distances)[0]
    for i in tied:
        members = index.tree.query_ball_point(points[i], r=distances[i])
        indices[i] = min(members)
    return indices, distances


def nearest(index: NeighborIndex, query: np.ndarray) -> tuple[int, float]:
    """Globally nearest target column to a single query point."""
    q = np.asarray(query, dtype=float).reshape(-1)
    if q.shape[0] != index.d:
        raise InvalidInputError(
            f"query dimension {q.shape[0]} does not match index dimension {index.d}"
        )
    indices, distances = _query_lowest_index(index, q[None, :])
    return int(indices[0]), float(distances[0])


def nearest_all(index: NeighborIndex, source: PointCloud) -> tuple[np.ndarray, np.ndarray]:
    """Nearest target column and distance for every source column."""
    if source.d != index.d:
        raise InvalidInputError(
            f"source dimension {source.d} does not match index dimension {index.d}"
        )
    return _query_lowest_index(index, source.data.T)


def match_score(
    source: PointCloud,
    target: PointCloud,
    index: NeighborIndex | None = None,
    symmetric: bool = False,
) -> MatchResult:
    """RMS of source-to-target nearest-neighbor distances.

    One-directional by default: each source column is matched to its nearest
    target column, and the score aggregates only those distances, which keeps
    the score well-defined when cardinalities differ. With `symmetric` the
    reverse-direction distances are pooled into the RMS as well (the
    assignment stays source to target).

    A prebuilt `index` over `target` may be supplied to amortize tree
    construction across repeated calls.
    """
    if source.d != target.d:
        raise InvalidInputError(
            f"source dimension {source.d} does not match target dimension {target.d}"
        )
    if index is None:
        index = build_index(target)
    elif index.target is not target:
        raise InvalidInputError("index was built over a different cloud than `target`")
    indices, distances = _query_lowest_index(index, source.data.T)
    squares = distances**2
    if symmetric:
        _, reverse = _query_lowest_index(build_index(source), target.data.T)
        squares = np.concatenate([squares, reverse**2])
    score = float(np.sqrt(squares.mean()))
    return MatchResult(
        assignment=PermutationMap(indices, bijective=False),
        score=score,
    )
