# Copyright 2026 pyfedreid authors. See LICENSE file for details.

"""
Bottom-up hierarchical clustering of a client's features into pseudo labels.

Every sample starts as its own cluster.  Each clustering round performs
``m`` pairwise merge steps; a step merges the two clusters at minimum
inter-cluster distance, ties going to the lexicographically smallest pair
of cluster ids.  Cluster ids are always the contiguous range ``[0, M)``:
when clusters ``i < j`` merge, ``i`` survives and every id above ``j``
moves down by one.  The ordered list of ``(i, j)`` pairs is the merge map
consumed by :func:`~fedreid_sim.resize_classifier`.
"""

import logging
import math
from collections import namedtuple

import numpy as np
from scipy.spatial.distance import pdist, squareform

from . import _error_translation as errors
from . import exceptions
from ._constants import FLOOR_SLACK

logger = logging.getLogger(__name__)

LINKAGES = ('single', 'average')

ClusterState = namedtuple('ClusterState', [
    'assignment',
    'num_clusters',
    'merges_per_round',
    'merge_percent',
    'exhausted',
])
ClusterState.__doc__ = '''
Current partition of a client's samples.

``assignment`` holds the cluster id of every sample, ``num_clusters`` is
``M``, ``merges_per_round`` is ``m`` and ``merge_percent`` is ``mp``.
``exhausted`` is set once a round asked for at least as many merges as
there were clusters.

A state built by :func:`init_clusters` has ``m >= 1`` and ``mp`` in (0, 1).
A schedule derived from a profile whose cluster count is less than ``R``
below ``n`` has ``m = 0`` and ``mp = 0``: that client never merges and
keeps training on its one-sample clusters.
'''


def init_clusters(n, mp):
    '''
    One cluster per sample.

    :param int n: the number of samples.
    :param float mp: the merge percent, in (0, 1).
    :return: the initial state with ``m = max(1, floor(n * mp))``.
    :rtype: ClusterState

    :raises MergePercentInvalid: if ``mp`` is outside (0, 1).
    '''
    errors.init_clusters_check_args(n, mp)
    merges = max(1, int(math.floor(n * mp + FLOOR_SLACK)))
    assignment = np.arange(n)
    assignment.setflags(write=False)
    return ClusterState(assignment, n, merges, mp, False)


def cluster_round(state, features, m_override=None, linkage='single'):
    '''
    Merge ``m`` pairs of clusters.

    :param ClusterState state: the current partition.
    :param numpy.ndarray features: one feature row per sample.
    :param m_override: merge this many times instead of ``state.merges_per_round``.
    :type m_override: int or None
    :param str linkage: ``single`` (minimum member distance) or ``average``
                        (mean member distance).
    :return: the new state and the ordered merge map.
    :rtype: tuple of (ClusterState, list of (int, int))

    :raises ShapeMismatch: if ``features`` does not have one row per sample.

    When ``m`` is not smaller than the current cluster count it is clamped
    to ``M - 1`` and the returned state is flagged as exhausted.
    '''
    if linkage not in LINKAGES:
        raise exceptions.BackboneKindInvalid(linkage)
    features = np.asarray(features, dtype=np.float64)
    errors.cluster_round_check_args(state, features)
    merges = state.merges_per_round if m_override is None else int(m_override)
    if merges < 0:
        raise exceptions.UsageError('m=%d' % (merges,))
    if merges == 0:
        return state, []
    exhausted = state.exhausted
    if merges >= state.num_clusters:
        logger.debug('clustering exhausted: %d merges requested, %d clusters',
                     merges, state.num_clusters)
        merges = state.num_clusters - 1
        exhausted = True
        if merges == 0:
            return state._replace(exhausted=True), []

    assignment = np.array(state.assignment)
    dist = _cluster_distances(features, assignment, state.num_clusters, linkage)
    sizes = np.bincount(assignment, minlength=state.num_clusters).astype(np.float64)
    merge_map = []
    for _ in range(merges):
        i, j = _closest_pair(dist)
        merge_map.append((i, j))
        if linkage == 'single':
            row = np.minimum(dist[i], dist[j])
        else:
            row = (sizes[i] * dist[i] + sizes[j] * dist[j]) / (sizes[i] + sizes[j])
        dist[i, :] = row
        dist[:, i] = row
        dist[i, i] = np.inf
        dist = np.delete(np.delete(dist, j, axis=0), j, axis=1)
        sizes[i] += sizes[j]
        sizes = np.delete(sizes, j)
        assignment[assignment == j] = i
        assignment[assignment > j] -= 1

    assignment.setflags(write=False)
    new_state = state._replace(assignment=assignment,
                               num_clusters=state.num_clusters - merges,
                               exhausted=exhausted)
    return new_state, merge_map


def labels(state):
    '''The pseudo label of every sample, ids in ``[0, M)``.'''
    return np.array(state.assignment)


def pairwise_distances(features):
    '''Euclidean distances between all rows of ``features`` as a square matrix.'''
    if len(features) < 2:
        return np.zeros((len(features), len(features)))
    return squareform(pdist(features, 'euclidean'))


def _cluster_distances(features, assignment, num_clusters, linkage):
    points = pairwise_distances(features)
    order = np.argsort(assignment, kind='stable')
    starts = np.searchsorted(assignment[order], np.arange(num_clusters))
    points = points[order][:, order]
    if linkage == 'single':
        dist = np.minimum.reduceat(np.minimum.reduceat(points, starts, axis=0), starts, axis=1)
    else:
        sizes = np.bincount(assignment, minlength=num_clusters).astype(np.float64)
        dist = np.add.reduceat(np.add.reduceat(points, starts, axis=0), starts, axis=1)
        dist /= np.outer(sizes, sizes)
    np.fill_diagonal(dist, np.inf)
    return dist


def _closest_pair(dist):
    size = len(dist)
    upper = np.where(np.triu(np.ones((size, size), dtype=bool), k=1), dist, np.inf)
    # argmin returns the first minimum in row-major order
    i, j = divmod(int(np.argmin(upper)), size)
    return i, j


# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
