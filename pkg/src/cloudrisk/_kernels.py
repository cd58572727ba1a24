"""Bulk AND/OR evaluation kernels for dependency graphs.

Two interchangeable implementations of the same operation, evaluating a
compiled graph over a batch of leaf-state rows:

* a numba ``@njit`` per-row loop, and
* a vectorized pure-numpy path.

``CLOUDRISK_NO_NUMBA=1`` forces the numpy path; it is also the automatic
fallback when numba is not importable. Both paths consume identical state
matrices and produce identical booleans, so estimates never depend on which
one ran; ``benchmarks/bench_depgraph_mc.py`` compares their speed. numba is
imported lazily on first use so that commands which never touch graph
analysis do not pay its import cost.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

LEAF, AND, OR = 0, 1, 2

ENV_FLAG = "CLOUDRISK_NO_NUMBA"


@dataclass(frozen=True)
class GraphProgram:
    """A graph flattened into topological-order instruction arrays.

    ``ntype[i]`` is LEAF/AND/OR for topo slot ``i``; leaves read column
    ``leaf_slot[i]`` of the state matrix; gate ``i`` combines the previously
    computed slots ``children[offsets[i]:offsets[i+1]]``.
    """

    ntype: np.ndarray      # int8  (n_nodes,)
    leaf_slot: np.ndarray  # int32 (n_nodes,)
    offsets: np.ndarray    # int32 (n_nodes + 1,)
    children: np.ndarray   # int32 (total child refs,)
    root: int
    n_leaves: int


def numba_disabled_by_env() -> bool:
    return os.environ.get(ENV_FLAG, "").lower() in ("1", "true", "yes")


def evaluate_bulk_numpy(prog: GraphProgram, states: np.ndarray) -> np.ndarray:
    """Evaluate every row of ``states`` (k, n_leaves) -> uint8 (k,)."""
    k = states.shape[0]
    vals = np.empty((len(prog.ntype), k), dtype=np.uint8)
    for i in range(len(prog.ntype)):
        t = prog.ntype[i]
        if t == LEAF:
            vals[i] = states[:, prog.leaf_slot[i]]
        else:
            kids = prog.children[prog.offsets[i]:prog.offsets[i + 1]]
            if t == AND:
                vals[i] = np.bitwise_and.reduce(vals[kids], axis=0)
            else:
                vals[i] = np.bitwise_or.reduce(vals[kids], axis=0)
    return vals[prog.root]


def _evaluate_bulk_loop(ntype, leaf_slot, offsets, children, root, states):
    # plain-Python form of the per-row loop; compiled by numba on first use
    k = states.shape[0]
    n = ntype.shape[0]
    out = np.empty(k, dtype=np.uint8)
    vals = np.empty(n, dtype=np.uint8)
    for s in range(k):
        for i in range(n):
            t = ntype[i]
            if t == LEAF:
                vals[i] = states[s, leaf_slot[i]]
            elif t == AND:
                v = np.uint8(1)
                for j in range(offsets[i], offsets[i + 1]):
                    v &= vals[children[j]]
                vals[i] = v
            else:
                v = np.uint8(0)
                for j in range(offsets[i], offsets[i + 1]):
                    v |= vals[children[j]]
                vals[i] = v
        out[s] = vals[root]
    return out


_jitted = None
_numba_available: bool | None = None


def numba_available() -> bool:
    global _numba_available
    if _numba_available is None:
        try:
            import numba  # noqa: F401
            _numba_available = True
        except ImportError:
            _numba_available = False
    return _numba_available


def evaluate_bulk_numba(prog: GraphProgram, states: np.ndarray) -> np.ndarray:
    global _jitted
    if _jitted is None:
        from numba import njit
        _jitted = njit(cache=True)(_evaluate_bulk_loop)
    return _jitted(prog.ntype, prog.leaf_slot, prog.offsets, prog.children,
                   prog.root, states)


def evaluate_bulk(prog: GraphProgram, states: np.ndarray,
                  use_numba: bool | None = None) -> np.ndarray:
    """Dispatch to the jitted kernel or the numpy path.

    ``use_numba=None`` follows the environment: numba when importable and
    not disabled by the env flag, numpy otherwise.
    """
    if use_numba is None:
        use_numba = not numba_disabled_by_env() and numba_available()
    if use_numba:
        return evaluate_bulk_numba(prog, states)
    return evaluate_bulk_numpy(prog, states)
