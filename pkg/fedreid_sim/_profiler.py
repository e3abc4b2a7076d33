# Copyright 2026 pyfedreid authors. See LICENSE file for details.

"""
Profiling for personalized clustering.

Before federated training every client trains alone for a few cheap rounds
with a large merge percent.  The round that scores best tells how many
clusters the client's data supports; that count ``M_profile`` fixes the
client's merge schedule for the real run::

    m_k  = floor((n_k - M_profile) / R)
    mp_k = m_k / n_k

Profiling never touches federation state.
"""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from sklearn.metrics import silhouette_score

from . import _error_translation as errors
from . import exceptions
from ._clustering import labels
from ._data_io import ProfileResult
from ._edge import EdgeRuntime, local_round
from ._eval import evaluate_model
from ._nets import extract_features

logger = logging.getLogger(__name__)


def derive_schedule(n, m_profile, rounds):
    '''
    Merge schedule that takes ``n`` clusters down to about ``m_profile``
    in ``rounds`` rounds.

    :param int n: the number of samples ``n_k``.
    :param int m_profile: the profiled cluster count, in ``[1, n]``.
    :param int rounds: the number of training rounds ``R``.
    :return: merges per round and the merge percent.
    :rtype: tuple of (int, float)

    :raises ProfileCountInvalid: if ``m_profile`` is outside ``[1, n]``.
    '''
    errors.derive_schedule_check_args(n, m_profile, rounds)
    merges = (n - m_profile) // rounds
    return merges, merges / float(n)


def rank1_scorer(backbone, client, pseudo_labels):
    '''Rank-1 accuracy on the client's labeled held-out split.'''
    if not client.has_eval_split:
        raise exceptions.ScorerUnavailable('client %d' % (client.client_id,))
    return evaluate_model(backbone, client).rank1


def separation_scorer(backbone, client, pseudo_labels):
    '''
    Label-free score: mean silhouette of the training features under the
    pseudo labels the round trained with.  A partition into singletons or a
    single cluster scores 0.
    '''
    num_clusters = len(np.unique(pseudo_labels))
    if num_clusters < 2 or num_clusters >= len(pseudo_labels):
        return 0.0
    return float(silhouette_score(extract_features(backbone, client), pseudo_labels))


def profile_client(client, config, scorer=None):
    '''
    Profile one client on its own.

    :param ClientDataset client: the client.
    :param TrainConfig config: the run configuration; its ``profiling``
                               settings drive the pre-run and its ``rounds``
                               the derived schedule.
    :param scorer: ``scorer(backbone, client, pseudo_labels)`` returns a
                   comparable score of a round; by default rank-1 on the
                   client's evaluation split.
    :return: the result read at the client's own best round.
    :rtype: ProfileResult

    :raises ScorerUnavailable: if no scorer is given and the client has no
                               evaluation split.
    '''
    scores, counts = _profile_trace(client, config, scorer)
    return _profile_result(client, config, _best_round(scores), scores, counts)


def profile_clients(clients, config, scorer=None):
    '''
    Profile every client.

    By default one best round is shared by all clients: the round with the
    highest mean score.  With ``config.profiling.per_client_best`` every
    client uses its own best round.  Ties go to the earliest round.

    :rtype: list of ProfileResult, ordered by client id
    :raises ProfilingFailure: if profiling failed on any client.
    '''
    clients = sorted(clients, key=lambda c: c.client_id)
    if not clients:
        raise exceptions.EmptyInput('clients')
    if scorer is None:
        for client in clients:
            if not client.has_eval_split:
                raise exceptions.ScorerUnavailable('client %d' % (client.client_id,))
    traces = {}
    errlist = {}
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = [(c.client_id, pool.submit(_profile_trace, c, config, scorer)) for c in clients]
        for client_id, future in futures:
            try:
                traces[client_id] = future.result()
            except Exception as e:
                errlist[client_id] = errors.local_round_translate_error(e, -1, client_id)
    errors.round_translate_errors(errlist, exceptions.ProfilingFailure)

    if config.profiling.per_client_best:
        best = {cid: _best_round(scores) for cid, (scores, _) in traces.items()}
    else:
        mean_scores = np.mean([traces[c.client_id][0] for c in clients], axis=0)
        shared = _best_round(mean_scores)
        logger.info('profiling: shared best round %d, mean score %.4f', shared, mean_scores[shared])
        best = {c.client_id: shared for c in clients}

    results = []
    for client in clients:
        scores, counts = traces[client.client_id]
        result = _profile_result(client, config, best[client.client_id], scores, counts)
        logger.info('profiled client %d: M_profile %d of %d samples, m_k %d, mp_k %.5f',
                    client.client_id, result.m_profile, client.n_k, result.m_k, result.mp_k)
        results.append(result)
    return results


def labeled_profiles(clients, config):
    '''
    Merge schedules read from the labeled identity count ``I_k`` of every
    client instead of a profiling pre-run.  This is the reference against
    which profiled cluster counts are judged; it costs no epochs.

    :rtype: list of ProfileResult, ordered by client id
    '''
    clients = sorted(clients, key=lambda c: c.client_id)
    if not clients:
        raise exceptions.EmptyInput('clients')
    results = []
    for client in clients:
        merges, merge_percent = derive_schedule(client.n_k, client.num_identities, config.rounds)
        results.append(ProfileResult(
            client_id=int(client.client_id),
            m_profile=int(client.num_identities),
            m_k=int(merges),
            mp_k=merge_percent,
            best_round=None,
            epochs_spent=0,
            scores=(),
            cluster_counts=(),
        ))
    return results


def profiles_for(clients, config, scorer=None):
    '''
    Cluster counts for personalized clustering from the source named by
    ``config.profiling.source``.
    '''
    if config.profiling.source == 'labeled':
        return labeled_profiles(clients, config)
    return profile_clients(clients, config, scorer)


def _profile_trace(client, config, scorer):
    if scorer is None:
        if not client.has_eval_split:
            raise exceptions.ScorerUnavailable('client %d' % (client.client_id,))
        scorer = rank1_scorer
    prof = config.profiling
    rt = EdgeRuntime.create(client, config, epochs=prof.rest_epochs,
                            first_round_epochs=prof.first_epochs, mp=prof.mp)
    scores = []
    counts = []
    for round_idx in range(prof.rounds):
        trained_labels = labels(rt.cluster_state)
        local_round(rt, rt.backbone.params(), round_idx, pe_enabled=False)
        scores.append(float(scorer(rt.backbone, client, trained_labels)))
        counts.append(len(np.unique(trained_labels)))
    return tuple(scores), tuple(counts)


def _profile_result(client, config, best_round, scores, counts):
    m_profile = counts[best_round]
    merges, merge_percent = derive_schedule(client.n_k, m_profile, config.rounds)
    return ProfileResult(
        client_id=int(client.client_id),
        m_profile=int(m_profile),
        m_k=int(merges),
        mp_k=merge_percent,
        best_round=int(best_round),
        epochs_spent=config.profiling.epochs_spent,
        scores=scores,
        cluster_counts=counts,
    )


def _best_round(scores):
    # argmax returns the first maximum
    return int(np.argmax(scores))


# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
