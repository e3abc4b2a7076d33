# Copyright 2026 pyfedreid authors. See LICENSE file for details.

"""
Parameter set algebra used by the server side of the federation.

A :class:`ParamSet` is an immutable, ordered collection of named layers,
each a flat vector of 64-bit floats.  All operations here are pure: they
never modify their inputs and always return a new :class:`ParamSet`.
Results of averaging and blending are clipped to the coordinatewise
envelope of their inputs so that convexity holds exactly, not just up to
rounding.
"""

import numpy as np

from . import _error_translation as errors


class ParamSet(object):
    '''
    Named ordered layers of flat numeric vectors.

    Two parameter sets are *shape-compatible* if they have identical
    name sequences and per-layer lengths.
    '''

    __slots__ = ('_names', '_values')

    def __init__(self, layers):
        '''
        :param layers: ``(name, values)`` pairs in layer order.
        :type layers: iterable of (str, array-like)
        :raises UsageError: if a layer name is repeated.
        :raises NonFiniteParams: if any value is NaN or infinite.
        '''
        names = []
        values = []
        for name, vals in layers:
            arr = np.array(vals, dtype=np.float64).ravel()
            errors.check_finite(arr, name)
            arr.setflags(write=False)
            names.append(name)
            values.append(arr)
        if len(set(names)) != len(names):
            raise errors.fed_exc.UsageError('duplicate layer names')
        self._names = tuple(names)
        self._values = tuple(values)

    @classmethod
    def from_arrays(cls, arrays):
        '''
        Build a parameter set from an ordered mapping of arrays of any shape.

        :param arrays: layer name to array, in layer order.
        :type arrays: OrderedDict or list of (str, numpy.ndarray)
        '''
        items = arrays.items() if hasattr(arrays, 'items') else arrays
        return cls((name, np.asarray(arr).ravel()) for name, arr in items)

    @property
    def names(self):
        return self._names

    @property
    def lengths(self):
        return tuple(len(v) for v in self._values)

    @property
    def layer_count(self):
        return len(self._names)

    def layers(self):
        return zip(self._names, self._values)

    def __getitem__(self, name):
        return self._values[self._names.index(name)]

    def __len__(self):
        return len(self._names)

    def is_compatible(self, other):
        return self._names == other._names and self.lengths == other.lengths

    def equals(self, other):
        '''Coordinatewise equality of two shape-compatible parameter sets.'''
        return self.is_compatible(other) and all(
            np.array_equal(a, b) for a, b in zip(self._values, other._values))

    def __eq__(self, other):
        if not isinstance(other, ParamSet):
            return NotImplemented
        return self.equals(other)

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    __hash__ = None

    def __repr__(self):
        return 'ParamSet(%s)' % (', '.join('%s[%d]' % (n, len(v)) for n, v in self.layers()),)


def weighted_average(entries):
    '''
    Weighted coordinatewise mean of shape-compatible parameter sets.

    :param entries: ``(params, weight)`` pairs; weights are nonnegative.
    :type entries: list of (ParamSet, float)
    :return: the parameter set whose every coordinate is
             ``sum(w_k / sum(w) * theta_k)``.
    :rtype: ParamSet

    :raises EmptyInput: if ``entries`` is empty.
    :raises ShapeMismatch: if the parameter sets are not shape-compatible.
    :raises ZeroWeightSum: if the weights sum to zero.
    '''
    entries = list(entries)
    total = errors.weighted_average_check_args(entries)
    first = entries[0][0]
    layers = []
    for idx, name in enumerate(first.names):
        stacked = [p._values[idx] for p, _ in entries]
        acc = np.zeros_like(stacked[0])
        for values, (_, weight) in zip(stacked, entries):
            acc += (weight / total) * values
        # zero-weight entries do not widen the envelope
        support = [v for v, (_, weight) in zip(stacked, entries) if weight > 0]
        layers.append((name, _clip_to_envelope(acc, support)))
    return ParamSet(layers)


def layer_distances(a, b, squared=True):
    '''
    Per-layer Euclidean distances between two parameter sets.

    :param ParamSet a: the first parameter set.
    :param ParamSet b: the second parameter set.
    :param bool squared: return squared distances (the default) rather
                         than plain Euclidean ones.
    :return: one nonnegative distance per layer, in layer order.
    :rtype: numpy.ndarray

    :raises ShapeMismatch: if the parameter sets are not shape-compatible.
    '''
    errors.layer_distances_check_args(a, b)
    out = np.empty(a.layer_count)
    for idx, (va, vb) in enumerate(zip(a._values, b._values)):
        out[idx] = np.sum((va - vb) ** 2)
    if not squared:
        out = np.sqrt(out)
    return out


def compute_mu(distances):
    '''
    Collapse per-layer distances into a single mixing weight.

    Distances are min-max normalized across layers to [0, 1] and averaged.
    When all distances are equal the normalization range is empty: the
    weight is 0 if they are all zero and 0.5 otherwise.

    :param distances: per-layer distances.
    :type distances: sequence of float
    :return: the mixing weight.
    :rtype: float

    :raises EmptyInput: if ``distances`` is empty.
    '''
    distances = np.asarray(distances, dtype=np.float64)
    errors.compute_mu_check_args(distances)
    lo = distances.min()
    hi = distances.max()
    if hi == lo:
        return 0.0 if hi == 0 else 0.5
    normalized = (distances - lo) / (hi - lo)
    return float(min(1.0, max(0.0, normalized.mean())))


def ema_update(local, global_, mu):
    '''
    Blend a local model towards the global one:
    ``mu * local + (1 - mu) * global``.

    :param ParamSet local: the client's current model.
    :param ParamSet global_: the aggregated model.
    :param float mu: weight of the local model, in [0, 1].
    :rtype: ParamSet

    :raises MixingWeightInvalid: if ``mu`` is outside [0, 1].
    :raises ShapeMismatch: if the models are not shape-compatible.
    '''
    errors.ema_update_check_args(local, global_, mu)
    layers = []
    for name, lv, gv in zip(local.names, local._values, global_._values):
        blended = mu * lv + (1.0 - mu) * gv
        layers.append((name, _clip_to_envelope(blended, (lv, gv))))
    return ParamSet(layers)


def _clip_to_envelope(values, inputs):
    lo = inputs[0]
    hi = inputs[0]
    for other in inputs[1:]:
        lo = np.minimum(lo, other)
        hi = np.maximum(hi, other)
    return np.clip(values, lo, hi)


# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
