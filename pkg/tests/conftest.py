import numpy as np
import pytest

from leobeam import kernels
from leobeam.linkmodel import InterferenceTupleSet, SpectrumPlan
from leobeam.metrics import Trackers
from leobeam.scheduler import EpochContext

BACKEND_NAMES = sorted(kernels.BACKENDS)


@pytest.fixture(params=BACKEND_NAMES)
def backend(request):
    return request.param


def make_ctx(visibility, spectrum, conflicts=(), q=None, rates=None, T=6, V=0.0, d_max=50.0,
             trackers=None, f=None):
    """Hand-built epoch. ``conflicts`` lists (cell, sat, cell2, sat2) pairs (made symmetric)."""
    vis = np.asarray(visibility, dtype=bool)
    C, S = vis.shape
    pc = np.zeros((C, S, C, S), dtype=bool)
    for c, s, c2, s2 in conflicts:
        pc[c, s, c2, s2] = pc[c2, s2, c, s] = True
    tuples = InterferenceTupleSet(1, pc, spectrum, np.arange(S), S)
    tr = trackers if trackers is not None else Trackers(C, T, d_max)
    q = np.ones(C) if q is None else np.asarray(q, dtype=float)
    rates = np.ones(C) if rates is None else np.asarray(rates, dtype=float)
    return EpochContext(tr.f if f is None else f, T, V, d_max, vis, vis * 60.0, spectrum, tuples, tr,
                        q, rates)


def spectrum(beam_sat, beam_subband):
    return SpectrumPlan(np.asarray(beam_sat), np.asarray(beam_subband), int(max(beam_subband)) + 1)
