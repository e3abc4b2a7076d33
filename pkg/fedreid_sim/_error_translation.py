# Copyright 2026 pyfedreid authors. See LICENSE file for details.

"""
Helper routines for checking the preconditions of `fedreid_sim` operations
and for converting failures into exceptions defined by the
:mod:`fedreid_sim.exceptions` module.

Whether an argument is wrong depends on the operation it is passed to, so
there is a checking routine for each operation that has nontrivial
preconditions.  The routines take the same arguments as the corresponding
operation and either return silently or raise.

Failures of edge tasks are different: they happen inside a round and are
only meaningful together with the round index and the client id.  They are
collected per client and converted into a single compound exception by
:func:`round_translate_errors`.
"""

import numbers

import numpy as np

from . import exceptions as fed_exc

#: At most this many per-client errors are placed on a compound exception.
MAX_REPORTED_ERRORS = 8


def weighted_average_check_args(entries):
    if len(entries) == 0:
        raise fed_exc.EmptyInput('entries')
    first = entries[0][0]
    total = 0.0
    for params, weight in entries:
        _validate_compatible(first, params)
        if not np.isfinite(weight) or weight < 0:
            raise fed_exc.UsageError('weight %r' % (weight,))
        total += weight
    if total <= 0:
        raise fed_exc.ZeroWeightSum('entries')
    return total


def layer_distances_check_args(a, b):
    _validate_compatible(a, b)


def compute_mu_check_args(distances):
    if len(distances) == 0:
        raise fed_exc.EmptyInput('distances')
    if np.any(~np.isfinite(distances)) or np.any(distances < 0):
        raise fed_exc.UsageError('distances')


def ema_update_check_args(local, global_, mu):
    if not isinstance(mu, numbers.Real) or not 0.0 <= mu <= 1.0:
        raise fed_exc.MixingWeightInvalid(mu)
    _validate_compatible(local, global_)


def forward_check_args(input_dim, batch):
    if batch.ndim != 2 or batch.shape[1] != input_dim:
        raise fed_exc.ShapeMismatch('batch columns %r, expected %d' % (batch.shape[1:], input_dim))


def train_epoch_check_args(samples, labels, num_classes, batch_size):
    if len(samples) == 0:
        raise fed_exc.EmptyInput('data')
    if len(labels) != len(samples):
        raise fed_exc.ShapeMismatch('labels length %d, expected %d' % (len(labels), len(samples)))
    if batch_size < 1:
        raise fed_exc.UsageError('batch_size %r' % (batch_size,))
    if len(labels) and (labels.min() < 0 or labels.max() >= num_classes):
        bad = labels[(labels < 0) | (labels >= num_classes)][0]
        raise fed_exc.LabelOutOfRange(int(bad))


def resize_classifier_check_args(num_rows, merge_map):
    rows = num_rows
    for (i, j) in merge_map:
        if not (0 <= i < rows and 0 <= j < rows) or i == j:
            raise fed_exc.MergeIndexInvalid((i, j))
        rows -= 1


def init_clusters_check_args(n, mp):
    if n < 1:
        raise fed_exc.EmptyInput('n')
    _validate_merge_percent(mp)


def cluster_round_check_args(state, features):
    if features.ndim != 2 or features.shape[0] != len(state.assignment):
        raise fed_exc.ShapeMismatch('features rows %d, expected %d' % (features.shape[0], len(state.assignment)))


def select_clients_check_args(num_clients, k):
    if not 1 <= k <= num_clients:
        raise fed_exc.ClientSelectionInvalid('K=%d, N=%d' % (k, num_clients))


def derive_schedule_check_args(n, m_profile, rounds):
    if rounds < 1:
        raise fed_exc.UsageError('R=%d' % (rounds,))
    if not 1 <= m_profile <= n:
        raise fed_exc.ProfileCountInvalid('M_profile=%d, n_k=%d' % (m_profile, n))


def generate_synthetic_check_args(spec):
    if spec.num_identities < 1 or spec.num_samples < 1:
        raise fed_exc.EmptyInput('client spec %r' % (spec,))
    if spec.num_identities > spec.num_samples:
        raise fed_exc.IdentityCountInvalid('I_k=%d, n_k=%d' % (spec.num_identities, spec.num_samples))
    if spec.noise < 0:
        raise fed_exc.UsageError('noise %r' % (spec.noise,))


def retrieval_check_args(query, gallery):
    if len(query.identities) == 0:
        raise fed_exc.EmptyInput('query')
    if len(gallery.identities) == 0:
        raise fed_exc.EmptyInput('gallery')
    for rset, what in ((query, 'query'), (gallery, 'gallery')):
        if rset.features.shape[0] != len(rset.identities):
            raise fed_exc.ShapeMismatch('%s rows' % (what,))
    if query.features.shape[1] != gallery.features.shape[1]:
        raise fed_exc.ShapeMismatch('feature dimension')


def check_finite(values, name):
    if not np.all(np.isfinite(values)):
        raise fed_exc.NonFiniteParams(name)


def local_round_translate_error(err, round_idx, client_id):
    '''
    Attach round and client context to an exception raised by an edge task.

    :param Exception err: the exception raised by the task.
    :param int round_idx: the round during which it was raised.
    :param int client_id: the edge on which it was raised.
    :return: the exception to be placed on the round's error list.
    :rtype: ClientFailure
    '''
    if isinstance(err, fed_exc.ClientFailure):
        return err
    return fed_exc.ClientFailure(round_idx, client_id, err)


def round_translate_errors(errlist, exception=fed_exc.RoundFailure):
    '''
    Convert the failures of one or more edge tasks into the requested exception.

    :param errlist: the dictionary that maps client ids to their specific errors.
    :type errlist: dict of int:ClientFailure
    :param type exception: the type of the exception to raise if an error occurred.
                           The exception should be a subclass of `MultipleOperationsFailure`.

    Unless ``errlist`` is empty this function will raise the ``exception``.
    The errors are ordered by client id so that the raised exception does not
    depend on the order in which the tasks completed.  Errors beyond
    :data:`MAX_REPORTED_ERRORS` are only counted.
    '''
    if not errlist:
        return
    errors = [errlist[client_id] for client_id in sorted(errlist)]
    suppressed_count = max(0, len(errors) - MAX_REPORTED_ERRORS)
    raise exception(errors[:MAX_REPORTED_ERRORS], suppressed_count)


def _validate_compatible(a, b):
    if len(a.names) != len(b.names):
        raise fed_exc.ShapeMismatch('layer count %d != %d' % (len(a.names), len(b.names)))
    for name_a, name_b, len_a, len_b in zip(a.names, b.names, a.lengths, b.lengths):
        if name_a != name_b or len_a != len_b:
            raise fed_exc.ShapeMismatch(name_a)


def _validate_merge_percent(mp):
    if not isinstance(mp, numbers.Real) or not 0.0 < mp < 1.0:
        raise fed_exc.MergePercentInvalid(mp)


# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
