"""Hot grid kernels: 4-connected BFS distance maps over boolean obstacle grids.

Everything downstream that needs shortest-path *lengths* (blocking tests,
solver heuristics, goal-descent policies, reachability checks) funnels through
`bfs_dist`. Two implementations are provided:

  * a numba ``@njit`` kernel (default when numba imports cleanly),
  * a pure-numpy frontier sweep.

Selection is controlled by the ``GRIDMAPF_KERNELS`` environment variable:
``numba`` (default), or ``numpy`` to force the fallback. ``benchmarks/
kernel_bench.py`` times both paths side by side.
"""

import os

import numpy as np

UNREACHABLE = np.int32(-1)


def _numpy_bfs_dist(blocked: np.ndarray, sr: int, sc: int) -> np.ndarray:
    """Distance from (sr, sc) over free cells; -1 where unreachable."""
    h, w = blocked.shape
    dist = np.full((h, w), UNREACHABLE, dtype=np.int32)
    if blocked[sr, sc]:
        return dist
    free = ~blocked.astype(bool)
    frontier = np.zeros((h, w), dtype=bool)
    frontier[sr, sc] = True
    dist[sr, sc] = 0
    d = 0
    while frontier.any():
        d += 1
        nxt = np.zeros_like(frontier)
        nxt[1:, :] |= frontier[:-1, :]
        nxt[:-1, :] |= frontier[1:, :]
        nxt[:, 1:] |= frontier[:, :-1]
        nxt[:, :-1] |= frontier[:, 1:]
        nxt &= free
        nxt &= dist < 0
        dist[nxt] = d
        frontier = nxt
    return dist


def _make_numba_bfs_dist():
    from numba import njit

    @njit(cache=True)
    def _numba_bfs_dist(blocked, sr, sc):
        h, w = blocked.shape
        dist = np.full((h, w), -1, dtype=np.int32)
        if blocked[sr, sc]:
            return dist
        qr = np.empty(h * w, dtype=np.int32)
        qc = np.empty(h * w, dtype=np.int32)
        head = 0
        tail = 0
        dist[sr, sc] = 0
        qr[tail] = sr
        qc[tail] = sc
        tail += 1
        while head < tail:
            r = qr[head]
            c = qc[head]
            head += 1
            d = dist[r, c] + 1
            if r > 0 and not blocked[r - 1, c] and dist[r - 1, c] < 0:
                dist[r - 1, c] = d
                qr[tail] = r - 1
                qc[tail] = c
                tail += 1
            if c > 0 and not blocked[r, c - 1] and dist[r, c - 1] < 0:
                dist[r, c - 1] = d
                qr[tail] = r
                qc[tail] = c - 1
                tail += 1
            if c < w - 1 and not blocked[r, c + 1] and dist[r, c + 1] < 0:
                dist[r, c + 1] = d
                qr[tail] = r
                qc[tail] = c + 1
                tail += 1
            if r < h - 1 and not blocked[r + 1, c] and dist[r + 1, c] < 0:
                dist[r + 1, c] = d
                qr[tail] = r + 1
                qc[tail] = c
                tail += 1
        return dist

    return _numba_bfs_dist


def _select_impl():
    choice = os.environ.get("GRIDMAPF_KERNELS", "").strip().lower()
    if choice not in ("", "numba", "numpy"):
        raise ValueError(
            f"GRIDMAPF_KERNELS must be 'numba' or 'numpy', got {choice!r}"
        )
    if choice == "numpy":
        return _numpy_bfs_dist, False
    try:
        return _make_numba_bfs_dist(), True
    except ImportError:
        if choice == "numba":
            raise
        return _numpy_bfs_dist, False


_bfs_dist_impl, USING_NUMBA = _select_impl()


def bfs_dist(blocked: np.ndarray, source: tuple[int, int]) -> np.ndarray:
    """4-connected BFS distances from `source`; -1 marks unreachable cells.

    `blocked` is a 2-D boolean-ish grid (nonzero = impassable). A blocked
    source yields an all -1 map.
    """
    grid = np.ascontiguousarray(blocked, dtype=np.uint8)
    sr, sc = source
    if not (0 <= sr < grid.shape[0] and 0 <= sc < grid.shape[1]):
        raise ValueError(f"source {source} outside {grid.shape} grid")
    return _bfs_dist_impl(grid, int(sr), int(sc))
