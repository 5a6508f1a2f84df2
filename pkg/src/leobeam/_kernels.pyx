# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled conflict-graph kernels; same contract as the numpy versions."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def build_adjacency(cell, beam, subband, sat, start, end, cs_index, conflict):
    cdef cnp.int64_t[:] c = np.ascontiguousarray(cell, dtype=np.int64)
    cdef cnp.int64_t[:] b = np.ascontiguousarray(beam, dtype=np.int64)
    cdef cnp.int64_t[:] sb = np.ascontiguousarray(subband, dtype=np.int64)
    cdef cnp.int64_t[:] st = np.ascontiguousarray(sat, dtype=np.int64)
    cdef cnp.int64_t[:] s = np.ascontiguousarray(start, dtype=np.int64)
    cdef cnp.int64_t[:] e = np.ascontiguousarray(end, dtype=np.int64)
    cdef cnp.int64_t[:] cs = np.ascontiguousarray(cs_index, dtype=np.int64)
    cdef unsigned char[:, :] J = np.ascontiguousarray(conflict, dtype=np.uint8)
    cdef Py_ssize_t n = c.shape[0]
    out = np.zeros((n, n), dtype=np.uint8)
    cdef unsigned char[:, :] adj = out
    cdef Py_ssize_t i, k
    cdef bint edge
    for i in range(n):
        for k in range(i + 1, n):
            if c[i] == c[k]:
                edge = True
            elif s[i] <= e[k] and s[k] <= e[i]:
                if b[i] == b[k]:
                    edge = True
                elif (sb[i] == sb[k] and st[i] != st[k] and cs[i] >= 0 and cs[k] >= 0
                      and J[cs[i], cs[k]]):
                    edge = True
                else:
                    edge = False
            else:
                edge = False
            if edge:
                adj[i, k] = 1
                adj[k, i] = 1
    return out


def greedy_mis(order, adj):
    cdef cnp.int64_t[:] o = np.ascontiguousarray(order, dtype=np.int64)
    cdef unsigned char[:, :] A = np.ascontiguousarray(adj, dtype=np.uint8)
    cdef Py_ssize_t n = A.shape[0]
    blocked_arr = np.zeros(n, dtype=np.uint8)
    chosen_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[:] blocked = blocked_arr
    cdef unsigned char[:] chosen = chosen_arr
    cdef Py_ssize_t idx, v, u
    for idx in range(o.shape[0]):
        v = o[idx]
        if blocked[v]:
            continue
        chosen[v] = 1
        blocked[v] = 1
        for u in range(n):
            if A[v, u]:
                blocked[u] = 1
    return chosen_arr
