# Copyright 2026 pyfedreid authors. See LICENSE file for details.

"""
Federation hyperparameters.

:class:`TrainConfig` and :class:`ProfilingConfig` are immutable records;
use ``_replace`` to derive a modified configuration.  Defaults follow the
usual federated ReID setting: batch size 16, 20 rounds, merge percent 0.05,
5 local epochs without personalized epochs and 20 with them, and the
profiling schedule ``mp_profile = 0.08``, 12 rounds, 5 epochs in the first
round and 1 in the others.
"""

import numbers
from collections import OrderedDict, namedtuple

from . import exceptions
from ._clustering import LINKAGES

_PROFILING_DEFAULTS = OrderedDict([
    ('mp', 0.08),
    ('rounds', 12),
    ('first_epochs', 5),
    ('rest_epochs', 1),
    ('per_client_best', False),
    ('source', 'profiled'),
])

#: Where personalized clustering takes its cluster counts from: a profiling
#: pre-run, or the labeled identity count of every client.
PROFILE_SOURCES = ('profiled', 'labeled')


class ProfilingConfig(namedtuple('ProfilingConfig', list(_PROFILING_DEFAULTS))):
    '''Settings of the profiling pre-run used by personalized clustering.'''
    __slots__ = ()

    @property
    def epochs_spent(self):
        '''Epochs one client spends on profiling.'''
        return self.first_epochs + (self.rounds - 1) * self.rest_epochs


ProfilingConfig.__new__.__defaults__ = tuple(_PROFILING_DEFAULTS.values())

_TRAIN_DEFAULTS = OrderedDict([
    ('epochs', 5),
    ('pe_epochs', 20),
    ('first_round_epochs', None),
    ('batch_size', 16),
    ('rounds', 20),
    ('num_clients', 8),
    ('clients_per_round', 8),
    ('lr', 0.5),
    ('embedding_dim', 32),
    ('hidden_dim', 0),
    ('mp', 0.05),
    ('pe', False),
    ('pc', False),
    ('pu', False),
    ('squared_distance', True),
    ('linkage', 'single'),
    ('seed', 0),
    ('workers', 1),
    ('profiling', ProfilingConfig()),
])

#: Help text of every configuration key, used by the command line.
CONFIG_HELP = OrderedDict([
    ('epochs', 'local epochs E per round without personalized epochs'),
    ('pe_epochs', 'maximum local epochs per round with personalized epochs'),
    ('first_round_epochs', 'epochs of round 0 (e.g. 20 for the "E=20, 4" schedule)'),
    ('batch_size', 'batch size B'),
    ('rounds', 'training rounds R'),
    ('num_clients', 'number of clients N'),
    ('clients_per_round', 'clients selected per round K'),
    ('lr', 'SGD step size'),
    ('embedding_dim', 'embedding size v'),
    ('hidden_dim', 'width of the tanh hidden layer, 0 for a linear backbone'),
    ('mp', 'merge percent without personalized clustering'),
    ('pe', 'personalized epochs (early stop after round 0)'),
    ('pc', 'personalized clustering (profiled merge schedules)'),
    ('pu', 'personalized update (EMA of local and global models)'),
    ('squared_distance', 'use squared layer distances for personalized update'),
    ('linkage', 'cluster distance: single or average'),
    ('seed', 'seed of every random choice'),
    ('workers', 'edge tasks run concurrently within a round'),
    ('profiling.mp', 'merge percent of profiling'),
    ('profiling.rounds', 'profiling rounds'),
    ('profiling.first_epochs', 'profiling epochs in the first round'),
    ('profiling.rest_epochs', 'profiling epochs in the other rounds'),
    ('profiling.per_client_best', 'pick the best profiling round per client instead of a shared one'),
    ('profiling.source', 'cluster counts of personalized clustering: profiled or the labeled identity count'),
])


class TrainConfig(namedtuple('TrainConfig', list(_TRAIN_DEFAULTS))):
    '''Hyperparameters of a federated experiment.'''
    __slots__ = ()

    @property
    def max_epochs(self):
        '''``E_max``, the epoch budget of a round after the first.'''
        return self.pe_epochs if self.pe else self.epochs

    @property
    def round0_epochs(self):
        if self.first_round_epochs is not None:
            return self.first_round_epochs
        return self.max_epochs

    def validate(self):
        '''
        Check the configuration invariants.

        :return: the configuration itself.
        :raises ConfigInvalid: naming the first offending key.
        '''
        _check(self.clients_per_round >= 1 and self.clients_per_round <= self.num_clients,
               'clients_per_round')
        for key in ('epochs', 'pe_epochs', 'batch_size', 'rounds', 'num_clients',
                    'embedding_dim', 'workers'):
            _check(getattr(self, key) >= 1, key)
        _check(self.first_round_epochs is None or self.first_round_epochs >= 1, 'first_round_epochs')
        _check(self.hidden_dim >= 0, 'hidden_dim')
        _check(0.0 <= self.lr < float('inf'), 'lr')
        _check(0.0 < self.mp < 1.0, 'mp')
        _check(self.linkage in LINKAGES, 'linkage')
        prof = self.profiling
        _check(0.0 < prof.mp < 1.0, 'profiling.mp')
        _check(prof.rounds >= 1, 'profiling.rounds')
        _check(prof.first_epochs >= 1 and prof.rest_epochs >= 1, 'profiling.first_epochs')
        _check(prof.source in PROFILE_SOURCES, 'profiling.source')
        return self

    def to_dict(self):
        out = self._asdict()
        out['profiling'] = self.profiling._asdict()
        return OrderedDict(out)


TrainConfig.__new__.__defaults__ = tuple(_TRAIN_DEFAULTS.values())


def config_from_dict(values):
    '''
    Build a validated configuration from a mapping that mirrors
    :class:`TrainConfig`; missing keys take their defaults.

    :raises ConfigInvalid: on an unknown key, a value of the wrong type
                           or a violated invariant.
    '''
    values = dict(values)
    profiling = values.pop('profiling', None) or {}
    if not isinstance(profiling, dict):
        raise exceptions.ConfigInvalid('profiling')
    kwargs = {key: _coerce(key, _TRAIN_DEFAULTS, value) for key, value in values.items()}
    prof_kwargs = {key: _coerce(key, _PROFILING_DEFAULTS, value, 'profiling.')
                   for key, value in profiling.items()}
    return TrainConfig(profiling=ProfilingConfig(**prof_kwargs), **kwargs).validate()


def apply_overrides(config, overrides):
    '''
    Replace configuration values; dotted keys address the profiling settings.

    :param TrainConfig config: the base configuration.
    :param overrides: key to value; ``None`` values are skipped.
    :type overrides: dict of str:Any
    :rtype: TrainConfig
    '''
    values = config.to_dict()
    for key, value in overrides.items():
        if value is None:
            continue
        if key.startswith('profiling.'):
            values['profiling'][key[len('profiling.'):]] = value
        else:
            values[key] = value
    return config_from_dict(values)


def _coerce(key, defaults, value, prefix=''):
    if key not in defaults or key == 'profiling':
        raise exceptions.ConfigInvalid(prefix + key)
    default = defaults[key]
    if default is None:
        ok = value is None or (isinstance(value, numbers.Integral) and not isinstance(value, bool))
    elif isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, numbers.Integral):
        ok = isinstance(value, numbers.Integral) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, numbers.Real) and not isinstance(value, bool)
        value = float(value) if ok else value
    else:
        ok = isinstance(value, type(default))
    if not ok:
        raise exceptions.ConfigInvalid('%s%s=%r' % (prefix, key, value))
    return value


def _check(condition, key):
    if not condition:
        raise exceptions.ConfigInvalid(key)


# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
