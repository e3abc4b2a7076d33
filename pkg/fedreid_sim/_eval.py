# Copyright 2026 pyfedreid authors. See LICENSE file for details.

"""
Retrieval evaluation: CMC rank-k accuracy and mean average precision.

For every query the gallery is ranked by descending cosine similarity;
ties keep gallery order.  When both sets carry camera ids, gallery entries
that share the query's identity *and* camera are removed from that query's
ranking.  Queries left without any correct match are not evaluated.
"""

from collections import namedtuple

import numpy as np

from . import _error_translation as errors
from . import exceptions
from ._constants import DEFAULT_RANKS, NORM_EPSILON
from ._nets import embed

RetrievalSet = namedtuple('RetrievalSet', ['features', 'identities', 'camera_ids'])
RetrievalSet.__new__.__defaults__ = (None,)
RetrievalSet.__doc__ = '''
Features with their identities and optional camera ids, one row each.
'''

RetrievalScores = namedtuple('RetrievalScores', ['rank1', 'rank5', 'rank10', 'mAP'])


def cmc(query, gallery, ks):
    '''
    Cumulative match characteristic at the requested ranks.

    :param RetrievalSet query: the queries.
    :param RetrievalSet gallery: the gallery.
    :param ks: the ranks, each at least 1.
    :type ks: list of int
    :return: the fraction of evaluated queries with a correct match within
             the top ``k``, for each ``k`` in ``ks``.
    :rtype: numpy.ndarray

    :raises EmptyInput: if the query or the gallery is empty.
    :raises NoEvaluableQuery: if no query has a correct match.
    '''
    ks = np.asarray(ks)
    hits = np.zeros(len(ks))
    count = 0
    for matches in _filtered_rankings(query, gallery):
        first = int(np.argmax(matches))
        hits += first < ks
        count += 1
    return hits / count


def map_score(query, gallery):
    '''
    Mean over evaluated queries of the average precision of their ranking.

    :rtype: float
    :raises EmptyInput: if the query or the gallery is empty.
    :raises NoEvaluableQuery: if no query has a correct match.
    '''
    total = 0.0
    count = 0
    for matches in _filtered_rankings(query, gallery):
        total += _average_precision(matches)
        count += 1
    return total / count


def evaluate(query, gallery):
    '''
    Rank-1, rank-5, rank-10 and mAP in a single pass over the rankings.

    :rtype: RetrievalScores
    '''
    ks = np.asarray(DEFAULT_RANKS)
    hits = np.zeros(len(ks))
    ap_total = 0.0
    count = 0
    for matches in _filtered_rankings(query, gallery):
        hits += int(np.argmax(matches)) < ks
        ap_total += _average_precision(matches)
        count += 1
    ranks = hits / count
    return RetrievalScores(float(ranks[0]), float(ranks[1]), float(ranks[2]), ap_total / count)


def evaluate_model(backbone, client):
    '''
    Retrieval scores of a backbone on a client's held-out query and gallery.

    :param Backbone backbone: the model to evaluate.
    :param ClientDataset client: a client with an evaluation split.
    :rtype: RetrievalScores
    '''
    return evaluate(_retrieval_set(backbone, client, client.query_indices),
                    _retrieval_set(backbone, client, client.gallery_indices))


def _retrieval_set(backbone, client, indices):
    cameras = None if client.camera_ids is None else client.camera_ids[indices]
    return RetrievalSet(embed(backbone, client.samples[indices]), client.identities[indices], cameras)


def _average_precision(matches):
    positions = np.flatnonzero(matches) + 1
    relevant_so_far = np.arange(1, len(positions) + 1)
    return float(np.mean(relevant_so_far / positions))


def _filtered_rankings(query, gallery):
    errors.retrieval_check_args(query, gallery)
    sim = _normalize(query.features) @ _normalize(gallery.features).T
    gallery_ids = np.asarray(gallery.identities)
    use_cameras = query.camera_ids is not None and gallery.camera_ids is not None
    if use_cameras:
        gallery_cams = np.asarray(gallery.camera_ids)
    evaluated = 0
    for idx, identity in enumerate(np.asarray(query.identities)):
        order = np.argsort(-sim[idx], kind='stable')
        matches = gallery_ids[order] == identity
        if use_cameras:
            same_view = matches & (gallery_cams[order] == query.camera_ids[idx])
            matches = matches[~same_view]
        if not matches.any():
            continue
        evaluated += 1
        yield matches
    if evaluated == 0:
        raise exceptions.NoEvaluableQuery('%d queries' % (len(query.identities),))


def _normalize(features):
    features = np.asarray(features, dtype=np.float64)
    norms = np.maximum(np.sqrt(np.sum(features * features, axis=1)), NORM_EPSILON)
    return features / norms[:, None]


# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
