# Copyright 2026 pyfedreid authors. See LICENSE file for details.

"""
The server side of the federation.

A round selects ``K`` of the ``N`` clients, lets each of them train
locally, averages the uploaded backbones weighted by client data volume
and hands every selected client either the new global model or its
personalized blend with the client's own model.  Rounds are barriers:
nothing from round ``r + 1`` starts before every edge of round ``r`` has
reported, and uploads are ordered by client id, so results do not depend
on which edge finishes first.
"""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _error_translation as errors
from . import exceptions
from ._data_io import ClientBest, ExperimentReport
from ._edge import STREAM_INIT, STREAM_SELECT, EdgeRuntime, derive_seed, local_round
from ._eval import evaluate_model
from ._nets import Backbone
from ._params import compute_mu, ema_update, layer_distances, weighted_average
from ._profiler import profiles_for

logger = logging.getLogger(__name__)


class FederationState(object):
    '''
    What the server keeps between rounds: the global model, the last model
    sent to every client, the index of the next round and the random
    generator of client selection.
    '''

    def __init__(self, global_model, client_models, config, rng):
        self.global_model = global_model
        self.client_models = client_models
        self.round = 0
        self.config = config
        self.rng = rng


def select_clients(num_clients, k, rng):
    '''
    Draw ``k`` distinct clients uniformly.

    :param int num_clients: ``N``.
    :param int k: ``K``, in ``[1, N]``.
    :param numpy.random.Generator rng: the selection generator.
    :return: the selected client ids in increasing order.
    :rtype: list of int
    :raises ClientSelectionInvalid: if ``k`` is outside ``[1, N]``.
    '''
    errors.select_clients_check_args(num_clients, k)
    return sorted(int(c) for c in rng.choice(num_clients, size=k, replace=False))


def aggregate(uploads):
    '''
    Average uploaded backbones weighted by the clients' sample counts.

    :param uploads: ``(client_id, params, n_k)`` for every reporting client.
    :type uploads: list of (int, ParamSet, int)
    :rtype: ParamSet
    '''
    ordered = sorted(uploads, key=lambda u: u[0])
    return weighted_average([(params, float(n_k)) for _, params, n_k in ordered])


def personalized_update(global_, local_models, pu_enabled, squared=True, mus=None):
    '''
    The models to send back to the clients of a round.

    :param ParamSet global_: the aggregated model.
    :param local_models: client id to the model the client uploaded.
    :type local_models: dict of int:ParamSet
    :param bool pu_enabled: blend each local model towards the global one
                            with a weight derived from their per-layer
                            distances; otherwise every client gets the
                            global model.
    :param bool squared: use squared layer distances.
    :param mus: if a dictionary is given, the weight used for every client
                is stored in it.
    :type mus: dict or None
    :rtype: dict of int:ParamSet
    '''
    out = {}
    for client_id in sorted(local_models):
        local = local_models[client_id]
        if not pu_enabled:
            errors.layer_distances_check_args(global_, local)
            out[client_id] = global_
            continue
        mu = compute_mu(layer_distances(global_, local, squared=squared))
        out[client_id] = ema_update(local, global_, mu)
        if mus is not None:
            mus[client_id] = mu
    return out


def run_experiment(config, clients, profiles=None, on_round=None, scorer=None, models=None):
    '''
    Run a federated experiment.

    :param TrainConfig config: the configuration.
    :param clients: one dataset per client; ``len(clients)`` must be ``N``.
    :type clients: list of ClientDataset
    :param profiles: profiling results to use instead of profiling when
                     personalized clustering is on.
    :type profiles: list of ProfileResult or None
    :param on_round: called with every :class:`RoundMetrics` record as
                     rounds complete.
    :param scorer: the profiling scorer, see :func:`profile_client`.
    :param models: if a dictionary is given, the final global model is
                   stored in it under ``'global'`` and the final model of
                   every client under its id.
    :type models: dict or None
    :rtype: ExperimentReport

    :raises ConfigInvalid: if the configuration is invalid or does not
                           match the client list.
    :raises RoundFailure: if any edge failed; the errors carry the round
                          and client of every failure.
    '''
    return _run(config, clients, profiles, on_round, scorer, models, federated=True)


def run_standalone(config, clients, profiles=None, on_round=None, scorer=None, models=None):
    '''
    Train every client alone, with the same schedule and records as
    :func:`run_experiment` but without aggregation.  The global metrics of
    a record repeat its local ones.
    '''
    return _run(config, clients, profiles, on_round, scorer, models, federated=False)


def _run(config, clients, profiles, on_round, scorer, models, federated):
    config.validate()
    clients = sorted(clients, key=lambda c: c.client_id)
    if not clients:
        raise exceptions.EmptyInput('clients')
    if len(clients) != config.num_clients:
        raise exceptions.ConfigInvalid('num_clients=%d, %d clients' % (config.num_clients, len(clients)))
    mode = 'federated' if federated else 'standalone'

    profiles = _profiles_for(config, clients, profiles, scorer)
    by_id = {p.client_id: p for p in profiles}
    runtimes = {c.client_id: EdgeRuntime.create(c, config, by_id.get(c.client_id)) for c in clients}
    datasets = {c.client_id: c for c in clients}

    evaluator = Backbone.create(clients[0].input_dim, config.embedding_dim, config.hidden_dim,
                                seed=derive_seed(config.seed, STREAM_INIT))
    initial = evaluator.params()
    state = FederationState(initial, {c.client_id: initial for c in clients}, config,
                            np.random.default_rng(derive_seed(config.seed, STREAM_SELECT)))
    client_ids = sorted(runtimes)

    records = []
    for round_idx in range(config.rounds):
        state.round = round_idx
        if federated:
            selected = [client_ids[i] for i in
                        select_clients(len(client_ids), config.clients_per_round, state.rng)]
        else:
            selected = client_ids
        logger.debug('round %d: selected clients %s', round_idx, selected)
        uploads, metrics = _run_edges(runtimes, selected, state.client_models, round_idx, config)

        if federated:
            state.global_model = aggregate(
                [(cid, uploads[cid], datasets[cid].n_k) for cid in selected])
            mus = {}
            state.client_models.update(
                personalized_update(state.global_model, uploads, config.pu, config.squared_distance, mus))
            if mus:
                logger.debug('round %d: mixing weights %s', round_idx, mus)
            evaluator.load_params(state.global_model)
            for cid in selected:
                metrics[cid] = _with_global(metrics[cid], evaluator, datasets[cid], mus.get(cid))
        else:
            state.client_models.update(uploads)
            for cid in selected:
                m = metrics[cid]
                metrics[cid] = m._replace(global_rank1=m.local_rank1, global_rank5=m.local_rank5,
                                          global_rank10=m.local_rank10, global_map=m.local_map)

        for cid in selected:
            records.append(metrics[cid])
            if on_round is not None:
                on_round(metrics[cid])
        _log_round(mode, round_idx, config.rounds, [metrics[cid] for cid in selected])

    training_epochs = sum(m.epochs for m in records)
    profiling_epochs = sum(p.epochs_spent for p in profiles)
    report = ExperimentReport(
        mode=mode,
        config=config,
        rounds=tuple(records),
        profiles=tuple(profiles),
        best=tuple(_best_of(cid, records) for cid in client_ids
                   if any(m.client_id == cid for m in records)),
        training_epochs=training_epochs,
        profiling_epochs=profiling_epochs,
        computation_cost=training_epochs + profiling_epochs,
    )
    if models is not None:
        if federated:
            models['global'] = state.global_model
        models.update(state.client_models)
    logger.info('%s run finished: %d training epochs, %d profiling epochs',
                mode, training_epochs, profiling_epochs)
    return report


def _profiles_for(config, clients, profiles, scorer):
    if not config.pc:
        return []
    if profiles is None:
        return profiles_for(clients, config, scorer)
    by_id = {p.client_id: p for p in profiles}
    for client in clients:
        if client.client_id not in by_id:
            raise exceptions.ConfigInvalid('profiles: client %d' % (client.client_id,))
    return [by_id[c.client_id] for c in clients]


def _run_edges(runtimes, selected, client_models, round_idx, config):
    uploads = {}
    metrics = {}
    errlist = {}
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = [(cid, pool.submit(local_round, runtimes[cid], client_models[cid], round_idx, config.pe))
                   for cid in selected]
        for cid, future in futures:
            try:
                uploads[cid], metrics[cid] = future.result()
            except Exception as e:
                errlist[cid] = errors.local_round_translate_error(e, round_idx, cid)
    errors.round_translate_errors(errlist)
    return uploads, metrics


def _with_global(metrics, evaluator, client, mu):
    if client.has_eval_split:
        scores = evaluate_model(evaluator, client)
        metrics = metrics._replace(global_rank1=scores.rank1, global_rank5=scores.rank5,
                                   global_rank10=scores.rank10, global_map=scores.mAP)
    return metrics._replace(mu=mu)


def _best_of(client_id, records):
    mine = [m for m in records if m.client_id == client_id]
    fields = {}
    for field in ClientBest._fields[2:]:
        values = [getattr(m, field) for m in mine if getattr(m, field) is not None]
        fields[field] = max(values) if values else None
    ranked = [m for m in mine if m.local_rank1 is not None]
    # the earliest round wins ties
    best_round = max(ranked, key=lambda m: (m.local_rank1, -m.round)).round if ranked else None
    return ClientBest(client_id=client_id, best_round=best_round, **fields)


def _log_round(mode, round_idx, rounds, metrics):
    local = [m.local_rank1 for m in metrics if m.local_rank1 is not None]
    glob = [m.global_rank1 for m in metrics if m.global_rank1 is not None]
    logger.info('%s round %d/%d: %d clients, %d epochs, rank-1 local %.4f global %.4f',
                mode, round_idx + 1, rounds, len(metrics), sum(m.epochs for m in metrics),
                float(np.mean(local)) if local else float('nan'),
                float(np.mean(glob)) if glob else float('nan'))


# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
