# Copyright 2026 pyfedreid authors. See LICENSE file for details.

"""
A small embedding network and a dynamically sized classifier head.

The backbone maps an input vector to an embedding of size ``v``, either
by a single affine map ("linear") or by one tanh hidden layer followed by
an affine map ("mlp").  Embeddings are always L2-normalized.  The head is
a bias-free linear classifier with one row per pseudo-label cluster; its
logits are the dot products of the normalized embedding with the rows.

Training minimizes softmax cross-entropy averaged over a batch with plain
mini-batch SGD.  Gradients are derived by hand, including the gradient of
the normalization.
"""

import logging
from collections import OrderedDict, namedtuple

import numpy as np

from . import _error_translation as errors
from . import exceptions
from ._constants import NORM_EPSILON
from ._params import ParamSet

logger = logging.getLogger(__name__)

#: Feedback of one epoch: the precision of every batch in order, their
#: running mean, and the mean loss over batches.
EpochFeedback = namedtuple('EpochFeedback', ['batch_precisions', 'cumulative_avg', 'mean_loss'])

_KINDS = ('linear', 'mlp')


class Backbone(object):
    '''
    An input to embedding map with trainable parameters.

    The parameters live in mutable arrays owned by the backbone;
    :meth:`params` takes an immutable snapshot and :meth:`load_params`
    replaces them from one.
    '''

    def __init__(self, arrays, kind):
        if kind not in _KINDS:
            raise exceptions.BackboneKindInvalid(kind)
        self.kind = kind
        self._arrays = OrderedDict((name, np.array(arr, dtype=np.float64)) for name, arr in arrays.items())

    @classmethod
    def create(cls, input_dim, embedding_dim, hidden_dim=0, seed=0):
        '''
        Create a randomly initialized backbone.

        :param int input_dim: the length of an input vector.
        :param int embedding_dim: the embedding size ``v``.
        :param int hidden_dim: the width of the tanh hidden layer;
                               ``0`` creates a linear backbone.
        :param seed: the seed of the initialization.
        :type seed: int or numpy.random.SeedSequence
        '''
        rng = np.random.default_rng(seed)
        arrays = OrderedDict()
        fan_in = input_dim
        if hidden_dim > 0:
            arrays['hidden.weight'] = rng.normal(scale=1.0 / np.sqrt(fan_in), size=(hidden_dim, fan_in))
            arrays['hidden.bias'] = np.zeros(hidden_dim)
            fan_in = hidden_dim
        arrays['embed.weight'] = rng.normal(scale=1.0 / np.sqrt(fan_in), size=(embedding_dim, fan_in))
        arrays['embed.bias'] = np.zeros(embedding_dim)
        return cls(arrays, 'mlp' if hidden_dim > 0 else 'linear')

    @classmethod
    def identity(cls, dim):
        '''A linear backbone that embeds an input as its normalized self.'''
        arrays = OrderedDict([('embed.weight', np.eye(dim)), ('embed.bias', np.zeros(dim))])
        return cls(arrays, 'linear')

    @property
    def input_dim(self):
        first = 'hidden.weight' if self.kind == 'mlp' else 'embed.weight'
        return self._arrays[first].shape[1]

    @property
    def embedding_dim(self):
        return self._arrays['embed.weight'].shape[0]

    def params(self):
        return ParamSet.from_arrays(self._arrays)

    def load_params(self, params):
        '''
        Replace the parameters of the backbone.

        :param ParamSet params: a parameter set shape-compatible with
                                :meth:`params`.
        :raises ShapeMismatch: if it is not.
        '''
        errors.layer_distances_check_args(self.params(), params)
        for name, values in params.layers():
            self._arrays[name] = values.reshape(self._arrays[name].shape).copy()

    def _raw_forward(self, x):
        if self.kind == 'mlp':
            hidden = np.tanh(x @ self._arrays['hidden.weight'].T + self._arrays['hidden.bias'])
        else:
            hidden = x
        raw = hidden @ self._arrays['embed.weight'].T + self._arrays['embed.bias']
        return raw, hidden


class ClassifierHead(object):
    '''A bias-free linear classifier of shape ``M x v``; it never leaves the edge.'''

    def __init__(self, weight):
        self.weight = np.array(weight, dtype=np.float64)

    @classmethod
    def create(cls, num_classes, embedding_dim, seed=0):
        '''Rows are drawn uniformly from ``[-1/sqrt(v), 1/sqrt(v)]``.'''
        rng = np.random.default_rng(seed)
        bound = 1.0 / np.sqrt(embedding_dim)
        return cls(rng.uniform(-bound, bound, size=(num_classes, embedding_dim)))

    @property
    def num_classes(self):
        return self.weight.shape[0]


def embed(backbone, batch):
    '''
    L2-normalized embeddings of the rows of ``batch``.

    :param Backbone backbone: the backbone.
    :param numpy.ndarray batch: a ``B x input_dim`` matrix.
    :rtype: numpy.ndarray
    '''
    batch = np.asarray(batch, dtype=np.float64)
    errors.forward_check_args(backbone.input_dim, batch)
    raw, _ = backbone._raw_forward(batch)
    return raw / _row_norms(raw)[:, None]


def forward(backbone, head, batch):
    '''
    Embed a batch and classify the embeddings.

    :return: the ``B x v`` normalized embeddings and the ``B x M`` logits.
    :rtype: tuple of (numpy.ndarray, numpy.ndarray)
    :raises ShapeMismatch: if the batch has the wrong number of columns.
    '''
    embeddings = embed(backbone, batch)
    return embeddings, embeddings @ head.weight.T


def softmax_cross_entropy(logits, labels):
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    return float(np.mean(log_norm - shifted[np.arange(len(labels)), labels]))


def loss_and_gradients(backbone, head, batch, labels):
    '''
    Mean softmax cross-entropy of a batch and its gradients.

    :return: the loss, the gradients of the backbone arrays keyed by layer
             name, the gradient of the head weight and the logits computed
             before any update.
    :rtype: tuple of (float, OrderedDict, numpy.ndarray, numpy.ndarray)
    '''
    batch = np.asarray(batch, dtype=np.float64)
    labels = np.asarray(labels)
    errors.forward_check_args(backbone.input_dim, batch)
    raw, hidden = backbone._raw_forward(batch)
    norms = _row_norms(raw)
    emb = raw / norms[:, None]
    logits = emb @ head.weight.T
    loss = softmax_cross_entropy(logits, labels)

    size = len(labels)
    probs = np.exp(logits - logits.max(axis=1, keepdims=True))
    probs /= probs.sum(axis=1, keepdims=True)
    d_logits = probs
    d_logits[np.arange(size), labels] -= 1.0
    d_logits /= size

    d_head = d_logits.T @ emb
    d_emb = d_logits @ head.weight
    # d(u/|u|) = (I - e e^T) / |u|
    d_raw = (d_emb - emb * np.sum(d_emb * emb, axis=1, keepdims=True)) / norms[:, None]

    grads = OrderedDict()
    if backbone.kind == 'mlp':
        d_hidden = d_raw @ backbone._arrays['embed.weight']
        d_pre = d_hidden * (1.0 - hidden ** 2)
        grads['hidden.weight'] = d_pre.T @ batch
        grads['hidden.bias'] = d_pre.sum(axis=0)
    grads['embed.weight'] = d_raw.T @ hidden
    grads['embed.bias'] = d_raw.sum(axis=0)
    return loss, grads, d_head, logits


def train_epoch(backbone, head, data, labels, lr, batch_size, rng_seed):
    '''
    Train the backbone and the head for one pass over shuffled batches.

    :param Backbone backbone: updated in place.
    :param ClassifierHead head: updated in place.
    :param data: the client's dataset or a matrix of training samples.
    :type data: ClientDataset or numpy.ndarray
    :param labels: one pseudo label in ``[0, M)`` per training sample.
    :param float lr: the SGD step size.
    :param int batch_size: the batch size; a larger value than the number
                           of samples trains a single batch.
    :param rng_seed: the seed of the shuffle.
    :return: the precision of every batch and their running mean.
    :rtype: EpochFeedback

    :raises LabelOutOfRange: if a label is not a row of the head.
    :raises NonFiniteParams: if an update produced NaN or infinite values.

    The last batch is trained as-is when it is shorter than ``batch_size``.
    Batch precision is measured on the logits that produced the update.
    '''
    samples = _training_matrix(data)
    labels = np.asarray(labels, dtype=np.int64)
    errors.train_epoch_check_args(samples, labels, head.num_classes, batch_size)
    order = np.random.default_rng(rng_seed).permutation(len(samples))

    precisions = []
    losses = []
    for start in range(0, len(samples), batch_size):
        idx = order[start:start + batch_size]
        batch_labels = labels[idx]
        loss, grads, d_head, logits = loss_and_gradients(backbone, head, samples[idx], batch_labels)
        precisions.append(float(np.mean(np.argmax(logits, axis=1) == batch_labels)))
        losses.append(loss)
        for name, grad in grads.items():
            backbone._arrays[name] -= lr * grad
        head.weight -= lr * d_head

    for name, arr in backbone._arrays.items():
        errors.check_finite(arr, name)
    errors.check_finite(head.weight, 'classifier')
    feedback = EpochFeedback(tuple(precisions), float(np.mean(precisions)), float(np.mean(losses)))
    logger.debug('epoch: %d batches, precision %.4f, loss %.4f',
                 len(precisions), feedback.cumulative_avg, feedback.mean_loss)
    return feedback


def extract_features(backbone, data):
    '''
    Normalized embeddings of every training sample, row ``i`` for sample ``i``.

    :rtype: numpy.ndarray
    '''
    samples = _training_matrix(data)
    if len(samples) == 0:
        raise exceptions.EmptyInput('data')
    return embed(backbone, samples)


def resize_classifier(head, merge_map):
    '''
    Shrink the head after clusters were merged.

    :param ClassifierHead head: the head before merging.
    :param merge_map: the merge events in the order they happened; each
                      event ``(i, j)`` names two rows in the numbering that
                      was current when it happened.  The lower row survives
                      as the elementwise mean of both, the higher one is
                      removed and the rows after it move up.
    :type merge_map: list of (int, int)
    :return: a new head with one row less per merge event.
    :rtype: ClassifierHead

    :raises MergeIndexInvalid: if an event references a nonexistent row.
    '''
    errors.resize_classifier_check_args(head.num_classes, merge_map)
    weight = head.weight.copy()
    for i, j in merge_map:
        keep, drop = min(i, j), max(i, j)
        weight[keep] = (weight[keep] + weight[drop]) / 2.0
        weight = np.delete(weight, drop, axis=0)
    return ClassifierHead(weight)


def _row_norms(raw):
    return np.maximum(np.sqrt(np.sum(raw * raw, axis=1)), NORM_EPSILON)


def _training_matrix(data):
    samples = getattr(data, 'train_samples', None)
    if samples is None:
        samples = data
    return np.asarray(samples, dtype=np.float64)


# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
