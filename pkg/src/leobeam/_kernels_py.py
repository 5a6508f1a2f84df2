"""Pure numpy versions of the conflict-graph kernels."""
import numpy as np


def build_adjacency(cell, beam, subband, sat, start, end, cs_index, conflict):
    """Dense 0/1 adjacency over candidate vertices.

    Edges: same cell; same beam with overlapping windows; co-frequency beams
    of different satellites with overlapping windows whose (cell, satellite)
    pairs conflict. ``conflict`` is indexed by ``cs_index``; -1 means no entry.
    """
    cell = np.asarray(cell)
    n = len(cell)
    if n == 0:
        return np.zeros((0, 0), dtype=np.uint8)
    start = np.asarray(start)
    end = np.asarray(end)
    overlap = (start[:, None] <= end[None, :]) & (start[None, :] <= end[:, None])
    same_cell = cell[:, None] == cell[None, :]
    beam = np.asarray(beam)
    same_beam = beam[:, None] == beam[None, :]
    sat = np.asarray(sat)
    cofreq = (np.asarray(subband)[:, None] == np.asarray(subband)[None, :]) & (sat[:, None] != sat[None, :])
    cs = np.asarray(cs_index)
    known = cs >= 0
    csk = np.where(known, cs, 0)
    conflict = np.asarray(conflict, dtype=bool)
    if conflict.size == 0:
        j = np.zeros((n, n), dtype=bool)
    else:
        j = conflict[csk[:, None], csk[None, :]] & known[:, None] & known[None, :]
    adj = same_cell | (overlap & (same_beam | (cofreq & j)))
    np.fill_diagonal(adj, False)
    return adj.astype(np.uint8)


def greedy_mis(order, adj):
    """Scan vertices in ``order``; take each one not adjacent to a taken one."""
    adj = np.asarray(adj)
    n = adj.shape[0]
    blocked = np.zeros(n, dtype=bool)
    chosen = np.zeros(n, dtype=np.uint8)
    for v in order:
        if blocked[v]:
            continue
        chosen[v] = 1
        blocked |= adj[v].astype(bool)
        blocked[v] = True
    return chosen
