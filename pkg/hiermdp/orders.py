# hiermdp/orders.py
# Partial orders over finite state sets
# - PartialOrder: validated relation table, index / covering-pair / product constructors
# - Upper-set enumeration under a cap
# - Stochastic dominance over a partial order (upper-set test)

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from hiermdp.config import DEFAULT_UPPER_SET_CAP, DOMINANCE_TOLERANCE, STOCHASTIC_TOLERANCE
from hiermdp.errors import CapExceededError, HierMDPError

logger = logging.getLogger(__name__)


class OrderError(HierMDPError):
    """A relation table is not a partial order"""


@dataclass(frozen=True, eq=False)
class PartialOrder:
    """
    Partial order on {0, ..., n-1}

    relation[i, j] is True iff i <= j. Reflexivity, antisymmetry and
    transitivity are checked at construction.
    """
    relation: np.ndarray
    _upper_sets: Dict[int, np.ndarray] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        rel = np.array(self.relation, dtype=bool)
        if rel.ndim != 2 or rel.shape[0] != rel.shape[1]:
            raise OrderError(f"relation must be a square table, got shape {rel.shape}")
        rel.setflags(write=False)
        object.__setattr__(self, "relation", rel)
        problems = self.violations()
        if problems:
            raise OrderError("; ".join(problems))

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------

    @classmethod
    def index(cls, n: int) -> "PartialOrder":
        """Total order 0 < 1 < ... < n-1"""
        return cls(np.triu(np.ones((n, n), dtype=bool)))

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[Sequence[int]]) -> "PartialOrder":
        """Reflexive-transitive closure of covering pairs (lower, upper)"""
        rel = np.eye(n, dtype=bool)
        for lower, upper in pairs:
            if not (0 <= lower < n and 0 <= upper < n):
                raise OrderError(f"pair ({lower}, {upper}) outside 0..{n - 1}")
            rel[lower, upper] = True
        # Warshall closure
        for k in range(n):
            rel |= np.outer(rel[:, k], rel[k, :])
        return cls(rel)

    @classmethod
    def product(cls, orders: Sequence["PartialOrder"]) -> "PartialOrder":
        """Componentwise order on the row-major product of the ground sets"""
        rel = reduce(lambda a, b: np.kron(a, b), (o.relation.astype(np.int8) for o in orders))
        return cls(rel.astype(bool))

    # ------------------------------------------------------------------
    # Queries
    # ------------------------------------------------------------------

    @property
    def size(self) -> int:
        return self.relation.shape[0]

    @property
    def is_total(self) -> bool:
        rel = self.relation
        return bool(np.all(rel | rel.T))

    def leq(self, i: int, j: int) -> bool:
        return bool(self.relation[i, j])

    def violations(self) -> List[str]:
        """Every failed partial-order axiom, as readable messages"""
        rel = self.relation
        problems = []
        if not np.all(np.diag(rel)):
            problems.append("relation is not reflexive")
        off = rel & rel.T & ~np.eye(self.size, dtype=bool)
        if off.any():
            i, j = np.argwhere(off)[0]
            problems.append(f"relation is not antisymmetric ({i} <= {j} and {j} <= {i})")
        composed = (rel.astype(np.int64) @ rel.astype(np.int64)) > 0
        if (composed & ~rel).any():
            i, j = np.argwhere(composed & ~rel)[0]
            problems.append(f"relation is not transitive (missing {i} <= {j})")
        return problems

    def comparable_pairs(self) -> List[Tuple[int, int]]:
        """All pairs (i, j) with i <= j and i != j, in lexicographic order"""
        rel = self.relation & ~np.eye(self.size, dtype=bool)
        return [(int(i), int(j)) for i, j in np.argwhere(rel)]

    def is_upper_set(self, members: Iterable[int]) -> bool:
        mask = np.zeros(self.size, dtype=bool)
        mask[list(members)] = True
        # every element above a member is a member
        above = self.relation[mask].any(axis=0)
        return bool(np.all(~above | mask))

    def level_width(self, sequence: Optional[Sequence[int]] = None) -> int:
        """
        Size of the largest level, where an element's level is the length of
        the longest chain strictly above it. Each level is an antichain.
        """
        n = self.size
        if n == 0:
            return 0
        strictly_above = self.relation & ~np.eye(n, dtype=bool)
        if sequence is None:
            sequence = sorted(range(n), key=lambda x: (int(strictly_above[x].sum()), x))
        height = np.zeros(n, dtype=np.int64)
        for x in sequence:
            above = np.flatnonzero(strictly_above[x])
            if above.size:
                height[x] = height[above].max() + 1
        return int(np.bincount(height).max())

    def upper_sets(self, cap: int = DEFAULT_UPPER_SET_CAP) -> np.ndarray:
        """
        Every non-empty proper upper set, as boolean masks

        Args:
            cap: Refuse orders with more upper sets than this

        Returns:
            Boolean array of shape (count, n)

        Raises:
            CapExceededError: the order has more than `cap` upper sets
        """
        if cap in self._upper_sets:
            return self._upper_sets[cap]
        n = self.size
        if self.is_total:
            if n - 1 > cap:
                raise CapExceededError("upper sets", n - 1, cap)
            # tails of the linear order
            ranks = self.relation.sum(axis=0)  # number of elements <= x
            order = np.argsort(ranks)
            masks = np.zeros((max(n - 1, 0), n), dtype=bool)
            for k in range(1, n):
                masks[k - 1, order[k:]] = True
            self._upper_sets[cap] = masks
            return masks

        strictly_above = self.relation & ~np.eye(n, dtype=bool)
        # elements with fewer strict upper bounds come first: a valid top-down order
        sequence = sorted(range(n), key=lambda x: (int(strictly_above[x].sum()), x))
        above_lists = [np.flatnonzero(strictly_above[x]) for x in range(n)]

        width = self.level_width(sequence)
        if width >= 63 or 2**width - 2 > cap:
            # every subset of an antichain generates its own upper set
            raise CapExceededError("upper sets", 2 ** min(width, 62) - 2, cap)

        found: List[np.ndarray] = []
        current = np.zeros(n, dtype=bool)
        # (position, stage): 0 = exclude branch next, 1 = include branch next, 2 = undo include
        stack: List[Tuple[int, int]] = [(0, 0)]
        while stack:
            pos, stage = stack.pop()
            if pos == n:
                if 0 < current.sum() < n:
                    if len(found) >= cap:
                        raise CapExceededError("upper sets", len(found) + 1, cap)
                    found.append(current.copy())
                continue
            x = sequence[pos]
            if stage == 0:
                stack.append((pos, 1))
                stack.append((pos + 1, 0))
            elif stage == 1:
                if current[above_lists[x]].all():
                    current[x] = True
                    stack.append((pos, 2))
                    stack.append((pos + 1, 0))
            else:
                current[x] = False

        masks = np.array(found, dtype=bool).reshape(len(found), n)
        logger.debug("[Orders] Enumerated %d upper sets on %d elements", len(found), n)
        self._upper_sets[cap] = masks
        return masks


def _check_distribution(p: np.ndarray, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError(f"{name} must be a vector")
    if abs(p.sum() - 1.0) > STOCHASTIC_TOLERANCE:
        raise ValueError(f"{name} sums to {p.sum():.12g}, not 1")
    return p


def dominance_witness(
    p: np.ndarray,
    q: np.ndarray,
    order: PartialOrder,
    cap: int = DEFAULT_UPPER_SET_CAP,
) -> Optional[FrozenSet[int]]:
    """
    First upper set U with p(U) < q(U), or None when p dominates q

    Raises:
        CapExceededError: the order has too many upper sets to check
    """
    p = _check_distribution(p, "p")
    q = _check_distribution(q, "q")
    if p.shape != q.shape or p.size != order.size:
        raise ValueError(f"length mismatch: p={p.size}, q={q.size}, order={order.size}")
    masks = order.upper_sets(cap)
    if masks.shape[0] == 0:
        return None
    slack = masks.astype(float) @ (p - q)
    failing = np.flatnonzero(slack < -DOMINANCE_TOLERANCE)
    if failing.size == 0:
        return None
    return frozenset(int(i) for i in np.flatnonzero(masks[failing[0]]))


def stochastically_dominates(
    p: np.ndarray,
    q: np.ndarray,
    order: PartialOrder,
    cap: int = DEFAULT_UPPER_SET_CAP,
) -> bool:
    """
    True iff p puts at least as much mass as q on every upper set

    For a total order this is the tail-sum test sum_{j>=i} p(j) >= sum_{j>=i} q(j).
    """
    return dominance_witness(p, q, order, cap) is None


def upper_set_mass(p: np.ndarray, members: Iterable[int]) -> float:
    """Probability of a set of states"""
    return float(np.asarray(p, dtype=float)[list(members)].sum())
