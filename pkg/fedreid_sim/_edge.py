# Copyright 2026 pyfedreid authors. See LICENSE file for details.

"""
The client side of a round: local training under the epoch controller,
then clustering of the trained features into the next round's pseudo
labels and the matching shrink of the classifier.

Only backbone parameters leave an edge; the classifier head and the
cluster state stay local for the whole experiment.
"""

import logging
from collections import namedtuple

import numpy as np

from . import _error_translation as errors
from ._clustering import cluster_round, init_clusters, labels
from ._constants import PRECISION_AVG_THRESHOLD, PRECISION_BATCH_THRESHOLD
from ._data_io import RoundMetrics
from ._eval import RetrievalScores, evaluate_model
from ._nets import Backbone, ClassifierHead, extract_features, resize_classifier, train_epoch

logger = logging.getLogger(__name__)

# Random stream tags, combined with the run seed by derive_seed.
STREAM_INIT = 0
STREAM_HEAD = 1
STREAM_SHUFFLE = 2
STREAM_SELECT = 3

EdgeSchedule = namedtuple('EdgeSchedule', ['epochs', 'first_round_epochs', 'merges', 'merge_percent'])
EdgeSchedule.__doc__ = '''
Per-client schedule: ``epochs`` is ``E_max`` of rounds after the first,
``first_round_epochs`` the budget of round 0, ``merges`` is ``m_k`` and
``merge_percent`` is ``mp_k``.
'''


def derive_seed(seed, *keys):
    '''A seed for the random stream identified by ``keys`` within a run.'''
    return np.random.SeedSequence([seed] + [int(k) for k in keys])


class EdgeRuntime(object):
    '''
    Mutable state of one client across rounds.  A runtime is owned by a
    single task at a time.
    '''

    def __init__(self, dataset, backbone, head, cluster_state, schedule,
                 lr, batch_size, linkage='single', seed=0):
        self.dataset = dataset
        self.backbone = backbone
        self.head = head
        self.cluster_state = cluster_state
        self.schedule = schedule
        self.lr = lr
        self.batch_size = batch_size
        self.linkage = linkage
        self.seed = seed
        self.history = []

    @classmethod
    def create(cls, dataset, config, profile=None, epochs=None, first_round_epochs=None, mp=None):
        '''
        Set up a client for a run.

        :param ClientDataset dataset: the client's data.
        :param TrainConfig config: the run configuration.
        :param profile: when given, its ``m_k`` and ``mp_k`` replace the
                        merge schedule derived from the merge percent;
                        ``m_k`` may be 0, see :class:`~fedreid_sim.ClusterState`.
        :type profile: ProfileResult or None
        :param epochs: ``E_max`` override, used by profiling.
        :param first_round_epochs: round 0 budget override, used by profiling.
        :param mp: merge percent override, used by profiling.
        '''
        n = dataset.n_k
        state = init_clusters(n, config.mp if mp is None else mp)
        if profile is not None:
            state = state._replace(merges_per_round=profile.m_k, merge_percent=profile.mp_k)
        schedule = EdgeSchedule(
            epochs=config.max_epochs if epochs is None else epochs,
            first_round_epochs=config.round0_epochs if first_round_epochs is None else first_round_epochs,
            merges=state.merges_per_round,
            merge_percent=state.merge_percent,
        )
        backbone = Backbone.create(dataset.input_dim, config.embedding_dim, config.hidden_dim,
                                   seed=derive_seed(config.seed, STREAM_INIT))
        head = ClassifierHead.create(n, config.embedding_dim,
                                     seed=derive_seed(config.seed, STREAM_HEAD, dataset.client_id))
        return cls(dataset, backbone, head, state, schedule, config.lr, config.batch_size,
                   config.linkage, config.seed)

    @property
    def client_id(self):
        return self.dataset.client_id


def should_early_stop(feedback):
    '''
    Whether a round may end after the epoch that produced ``feedback``:
    some batch was classified perfectly or the running mean of the batch
    precisions exceeds 0.95.

    :param EpochFeedback feedback: the feedback of a completed epoch.
    :rtype: bool
    '''
    if any(p >= PRECISION_BATCH_THRESHOLD for p in feedback.batch_precisions):
        return True
    return feedback.cumulative_avg > PRECISION_AVG_THRESHOLD


def local_round(rt, incoming, round_idx, pe_enabled):
    '''
    Run one round on an edge.

    :param EdgeRuntime rt: the client; updated in place.
    :param ParamSet incoming: the backbone the server sent for this round.
    :param int round_idx: the round index, from 0.
    :param bool pe_enabled: stop training early once the epoch feedback
                            allows it; round 0 always spends its full budget.
    :return: the trained backbone parameters and what happened.
    :rtype: tuple of (ParamSet, RoundMetrics)

    :raises ShapeMismatch: if ``incoming`` does not fit the backbone.

    Once clustering is exhausted the pseudo labels stay frozen and training
    continues with them.
    '''
    errors.layer_distances_check_args(rt.backbone.params(), incoming)
    rt.backbone.load_params(incoming)
    budget = rt.schedule.first_round_epochs if round_idx == 0 else rt.schedule.epochs
    early_stop = pe_enabled and round_idx > 0
    targets = labels(rt.cluster_state)

    epochs = 0
    stopped = False
    for epoch in range(budget):
        feedback = train_epoch(rt.backbone, rt.head, rt.dataset, targets, rt.lr, rt.batch_size,
                               derive_seed(rt.seed, STREAM_SHUFFLE, rt.client_id, round_idx, epoch))
        epochs += 1
        if early_stop and should_early_stop(feedback):
            stopped = epochs < budget
            break

    trained_clusters = rt.cluster_state.num_clusters
    merges = 0
    if not rt.cluster_state.exhausted:
        features = extract_features(rt.backbone, rt.dataset)
        rt.cluster_state, merge_map = cluster_round(rt.cluster_state, features, linkage=rt.linkage)
        rt.head = resize_classifier(rt.head, merge_map)
        merges = len(merge_map)

    if rt.dataset.has_eval_split:
        local = evaluate_model(rt.backbone, rt.dataset)
    else:
        local = RetrievalScores(None, None, None, None)
    metrics = RoundMetrics(
        round=round_idx,
        client_id=int(rt.client_id),
        epochs=epochs,
        num_clusters=int(trained_clusters),
        merges=merges,
        exhausted=bool(rt.cluster_state.exhausted),
        early_stopped=stopped,
        precision_avg=feedback.cumulative_avg,
        precision_max=float(max(feedback.batch_precisions)),
        loss=feedback.mean_loss,
        mu=None,
        local_rank1=local.rank1,
        local_rank5=local.rank5,
        local_rank10=local.rank10,
        local_map=local.mAP,
        global_rank1=None,
        global_rank5=None,
        global_rank10=None,
        global_map=None,
    )
    rt.history.append(metrics)
    logger.debug('client %d, round %d: %d epochs, %d clusters, %d merged',
                 rt.client_id, round_idx, epochs, trained_clusters, merges)
    return rt.backbone.params(), metrics


# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
