# Copyright 2026 pyfedreid authors. See LICENSE file for details.

"""
Synthetic heterogeneous clients and the persisted record types.

A report file is line-delimited JSON.  The first record is a header with
the schema version, the run mode and the configuration; then come one
record per client per round, one per profiled client and one per client
with its best metrics; the last record is a summary carrying the epoch
accounting and the number of records before it.  Every record, the last
one included, ends with a newline, so a truncated file is always detected.
"""

import csv
import hashlib
import json
import logging
import numbers
from collections import namedtuple

import numpy as np

from . import _error_translation as errors
from . import exceptions
from ._config import config_from_dict
from ._constants import REPORT_SCHEMA_VERSION

logger = logging.getLogger(__name__)

_SPEC_FIELDS = ['num_samples', 'num_identities', 'input_dim', 'noise', 'seed',
                'gallery_per_identity', 'region_weight']

ClientSpec = namedtuple('ClientSpec', _SPEC_FIELDS)
ClientSpec.__new__.__defaults__ = (32, 0.05, 0, 2, 1.0)
ClientSpec.__doc__ = '''
Recipe of one synthetic client: ``n_k`` training samples of ``I_k``
identities in ``input_dim`` dimensions.  ``gallery_per_identity`` extra
samples per identity form the gallery of the held-out evaluation split and
one more per identity its query.  ``region_weight`` scales how strongly the
client's identity centers lean towards its own region of the sphere.
'''


class ClientDataset(namedtuple('ClientDataset', [
        'client_id', 'samples', 'identities', 'camera_ids',
        'train_indices', 'query_indices', 'gallery_indices'])):
    '''
    One edge's data.  ``samples`` holds the training rows and the held-out
    query and gallery rows; the index vectors select them.  Identities are
    never shown to training, they only drive evaluation and profiling.
    '''
    __slots__ = ()

    @property
    def n_k(self):
        return len(self.train_indices)

    @property
    def input_dim(self):
        return self.samples.shape[1]

    @property
    def train_samples(self):
        return self.samples[self.train_indices]

    @property
    def train_identities(self):
        return self.identities[self.train_indices]

    @property
    def num_identities(self):
        '''``I_k``, the true identity count of the training rows.'''
        return len(np.unique(self.train_identities))

    @property
    def has_eval_split(self):
        return len(self.query_indices) > 0 and len(self.gallery_indices) > 0


_METRICS_FIELDS = [
    'round', 'client_id', 'epochs', 'num_clusters', 'merges', 'exhausted',
    'early_stopped', 'precision_avg', 'precision_max', 'loss', 'mu',
    'local_rank1', 'local_rank5', 'local_rank10', 'local_map',
    'global_rank1', 'global_rank5', 'global_rank10', 'global_map',
]

RoundMetrics = namedtuple('RoundMetrics', _METRICS_FIELDS)
RoundMetrics.__doc__ = '''
What one client did in one round.  ``epochs`` is the number of epochs
consumed, ``precision_avg`` and ``precision_max`` summarize the batch
precisions of the last epoch, ``num_clusters`` and ``merges`` describe the
clustering that closed the round.  ``mu`` is the personalized update weight
or ``None`` when the client received the global model verbatim.  Retrieval
metrics are ``None`` for a client without an evaluation split.
'''

ProfileResult = namedtuple('ProfileResult', [
    'client_id', 'm_profile', 'm_k', 'mp_k', 'best_round', 'epochs_spent',
    'scores', 'cluster_counts',
])
ProfileResult.__doc__ = '''
Outcome of profiling one client: the estimated identity count
``m_profile``, the merge schedule ``m_k``/``mp_k`` derived from it, the
round it was read at and the per-round scores and cluster counts.  A
count taken from the labels has no round, no trace and costs no epochs.
'''

ClientBest = namedtuple('ClientBest', [
    'client_id', 'best_round',
    'local_rank1', 'local_rank5', 'local_rank10', 'local_map',
    'global_rank1', 'global_rank5', 'global_rank10', 'global_map',
])
ClientBest.__doc__ = '''
Best value of every metric of a client over all rounds; ``best_round`` is
the round with the best local rank-1.
'''


class ExperimentReport(namedtuple('ExperimentReport', [
        'mode', 'config', 'rounds', 'profiles', 'best',
        'training_epochs', 'profiling_epochs', 'computation_cost'])):
    '''
    Everything a run produced.  ``computation_cost`` is the number of epochs
    trained in rounds plus the number spent on profiling.
    '''
    __slots__ = ()

    def client_rounds(self, client_id):
        return [m for m in self.rounds if m.client_id == client_id]

    def mu_trajectory(self, client_id):
        '''The personalized update weight of a client, round by round.'''
        return [m.mu for m in self.client_rounds(client_id)]


def generate_synthetic(specs):
    '''
    Generate one dataset per client recipe; client ids follow list order.

    :param specs: the client recipes.
    :type specs: list of ClientSpec
    :rtype: list of ClientDataset
    :raises IdentityCountInvalid: if a recipe has more identities than samples.

    Every identity is a point on the unit sphere, drawn around a direction
    specific to the client, and its samples are that point plus isotropic
    Gaussian noise.  Every identity has at least one training sample; the
    remaining samples pick identities uniformly.
    '''
    return [_generate_client(idx, spec) for idx, spec in enumerate(specs)]


def _generate_client(client_id, spec):
    errors.generate_synthetic_check_args(spec)
    rng = np.random.default_rng(spec.seed)
    dim = spec.input_dim
    region = _unit_rows(rng.normal(size=(1, dim)))
    centers = _unit_rows(spec.region_weight * region + rng.normal(size=(spec.num_identities, dim)) / np.sqrt(dim))

    n = spec.num_samples
    ids = np.concatenate([np.arange(spec.num_identities),
                          rng.integers(0, spec.num_identities, size=n - spec.num_identities)])
    ids = ids[rng.permutation(n)]
    query_ids = np.arange(spec.num_identities)
    gallery_ids = np.repeat(np.arange(spec.num_identities), spec.gallery_per_identity)
    identities = np.concatenate([ids, query_ids, gallery_ids])

    num_cameras = spec.gallery_per_identity + 1
    cameras = np.concatenate([
        rng.integers(0, num_cameras, size=n),
        np.zeros(len(query_ids), dtype=np.int64),
        np.tile(np.arange(1, num_cameras), spec.num_identities),
    ])
    samples = centers[identities] + spec.noise * rng.normal(size=(len(identities), dim))
    return ClientDataset(
        client_id=client_id,
        samples=samples,
        identities=identities,
        camera_ids=cameras,
        train_indices=np.arange(n),
        query_indices=np.arange(n, n + len(query_ids)),
        gallery_indices=np.arange(n + len(query_ids), len(identities)),
    )


def default_client_specs(num_clients=8, input_dim=32, noise=0.05, seed=0):
    '''
    A heterogeneous population: sizes grow geometrically from 64 to 512
    samples and identity counts from 8 to 32.
    '''
    steps = np.linspace(0.0, 1.0, num_clients) if num_clients > 1 else np.zeros(1)
    sizes = np.rint(64 * 8 ** steps).astype(int)
    idents = np.rint(8 * 4 ** steps).astype(int)
    return [ClientSpec(int(n), int(i), input_dim, noise, _client_seed(seed, idx))
            for idx, (n, i) in enumerate(zip(sizes, idents))]


def parse_client_specs(text, input_dim=32, noise=0.05, seed=0):
    '''
    Parse a client population such as ``64:8,128:12:0.1``: one
    ``n_k:I_k[:noise]`` entry per client, separated by commas.

    :raises ConfigInvalid: if an entry does not follow that form.
    '''
    specs = []
    for idx, entry in enumerate(text.split(',')):
        parts = entry.strip().split(':')
        try:
            if len(parts) not in (2, 3):
                raise ValueError(entry)
            client_noise = float(parts[2]) if len(parts) == 3 else noise
            spec = ClientSpec(int(parts[0]), int(parts[1]), input_dim, client_noise, _client_seed(seed, idx))
        except ValueError:
            raise exceptions.ConfigInvalid('clients: %r' % (entry,))
        specs.append(spec)
    return specs


def _client_seed(seed, idx):
    return int(np.random.SeedSequence([seed, idx]).generate_state(1)[0])


def _unit_rows(matrix):
    return matrix / np.linalg.norm(matrix, axis=1, keepdims=True)


def dumps_report(report):
    '''Render a report in the line-delimited file format.'''
    records = [{'kind': 'header', 'schema': REPORT_SCHEMA_VERSION, 'mode': report.mode,
                'config': report.config.to_dict()}]
    records.extend(_record('round', m) for m in report.rounds)
    records.extend(_record('profile', p) for p in report.profiles)
    records.extend(_record('best', b) for b in report.best)
    records.append({'kind': 'summary',
                    'training_epochs': report.training_epochs,
                    'profiling_epochs': report.profiling_epochs,
                    'computation_cost': report.computation_cost,
                    'records': len(records)})
    return ''.join(json.dumps(r, sort_keys=True, allow_nan=False) + '\n' for r in records)


def loads_report(text, name='<report>'):
    '''
    Parse a report from the line-delimited file format.

    :raises MalformedFile: naming the line and, where known, the field at
                           which the text stops following the format.
    '''
    if not text.endswith('\n'):
        raise exceptions.MalformedFile(name, 'Truncated report')
    lines = text[:-1].split('\n')
    header = _parse_line(lines[0], name, 1)
    if header.get('kind') != 'header':
        raise exceptions.MalformedFile('%s:1' % (name,), 'Missing header')
    if header.get('schema') != REPORT_SCHEMA_VERSION:
        raise exceptions.MalformedFile('%s:1: schema' % (name,), 'Unsupported schema')
    mode = header.get('mode')
    if mode not in ('federated', 'standalone'):
        raise exceptions.MalformedFile('%s:1: mode' % (name,), 'Unknown run mode')
    if not isinstance(header.get('config'), dict):
        raise exceptions.MalformedFile('%s:1: config' % (name,), 'Configuration is not an object')
    try:
        config = config_from_dict(header['config'])
    except (TypeError, ValueError, exceptions.ConfigInvalid) as e:
        raise exceptions.MalformedFile('%s:1: config' % (name,), 'Bad configuration: %s' % (e,))

    groups = {'round': [], 'profile': [], 'best': []}
    types = {'round': RoundMetrics, 'profile': ProfileResult, 'best': ClientBest}
    summary = None
    for lineno, line in enumerate(lines[1:], 2):
        if summary is not None:
            raise exceptions.MalformedFile('%s:%d' % (name, lineno), 'Record after summary')
        record = _parse_line(line, name, lineno)
        kind = record.pop('kind', None)
        if kind == 'summary':
            summary = record
            summary_line = lineno
        elif kind in groups:
            groups[kind].append(_from_record(types[kind], record, '%s:%d' % (name, lineno)))
        else:
            raise exceptions.MalformedFile('%s:%d: kind' % (name, lineno), 'Unknown record kind')
    if summary is None:
        raise exceptions.MalformedFile(name, 'Truncated report')
    if summary.get('records') != summary_line - 1:
        raise exceptions.MalformedFile('%s:%d: records' % (name, summary_line), 'Record count mismatch')
    for key in ('training_epochs', 'profiling_epochs', 'computation_cost'):
        if key not in summary:
            raise exceptions.MalformedFile('%s:%d: %s' % (name, summary_line, key), 'Missing field')
        if not _is_int(summary[key]):
            raise exceptions.MalformedFile('%s:%d: %s' % (name, summary_line, key), 'Bad field type')
    return ExperimentReport(
        mode=mode,
        config=config,
        rounds=tuple(groups['round']),
        profiles=tuple(groups['profile']),
        best=tuple(groups['best']),
        training_epochs=summary['training_epochs'],
        profiling_epochs=summary['profiling_epochs'],
        computation_cost=summary['computation_cost'],
    )


def save_report(report, path):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(dumps_report(report))


def load_report(path):
    '''
    Read a report file.

    :rtype: ExperimentReport
    :raises MalformedFile: if the file is truncated or does not follow the format.
    '''
    with open(path, 'rb') as f:
        data = f.read()
    try:
        text = data.decode('utf-8')
    except UnicodeDecodeError as e:
        raise exceptions.MalformedFile('%s:%d' % (path, _line_of(e)), 'Not UTF-8 text')
    return loads_report(text, path)


def write_metrics_csv(rounds, path):
    '''Flat table of round metrics, one row per client per round, for plotting.'''
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(RoundMetrics._fields)
        for m in rounds:
            writer.writerow(['' if v is None else v for v in m])


class RoundLog(object):
    '''
    Appends round metrics to a line-delimited file as rounds complete.
    A log belongs to a single writer.
    '''

    def __init__(self, path):
        self.path = path
        self._file = open(path, 'w')

    def append(self, metrics):
        self._file.write(json.dumps(_record('round', metrics), sort_keys=True, allow_nan=False) + '\n')
        self._file.flush()

    def close(self):
        self._file.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def save_profiles(profiles, path):
    '''
    Write profiling results keyed by client id.

    :param profiles: the results.
    :type profiles: list of ProfileResult
    '''
    doc = {'schema': REPORT_SCHEMA_VERSION,
           'profiles': {str(p.client_id): _record(None, p) for p in profiles}}
    with open(path, 'w') as f:
        json.dump(doc, f, sort_keys=True, indent=2, allow_nan=False)
        f.write('\n')


def load_profiles(path):
    '''
    Read profiling results.

    :return: client id to result.
    :rtype: dict of int:ProfileResult
    :raises MalformedFile: if the file can not be parsed.
    '''
    doc = _load_json(path)
    if not isinstance(doc, dict) or doc.get('schema') != REPORT_SCHEMA_VERSION \
            or not isinstance(doc.get('profiles'), dict):
        raise exceptions.MalformedFile(path, 'Not a profile file')
    out = {}
    for key, record in sorted(doc['profiles'].items(), key=lambda kv: kv[0]):
        if not isinstance(record, dict):
            raise exceptions.MalformedFile('%s: %s' % (path, key))
        profile = _from_record(ProfileResult, record, '%s: %s' % (path, key))
        out[profile.client_id] = profile
    return out


def save_config(config, path):
    with open(path, 'w') as f:
        json.dump(config.to_dict(), f, indent=2)
        f.write('\n')


def load_config(path):
    '''
    Read a configuration file, a JSON object mirroring
    :class:`~fedreid_sim.TrainConfig`.

    :raises MalformedFile: if the file is not a JSON object.
    :raises ConfigInvalid: if a key is unknown or a value is invalid.
    '''
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise exceptions.MalformedFile(path, 'Configuration is not an object')
    return config_from_dict(doc)


def config_digest(config, specs=()):
    '''Short hash of a configuration and a client population.'''
    doc = {'config': config.to_dict(), 'clients': [list(s) for s in specs]}
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode('utf-8')).hexdigest()[:16]


def _record(kind, value):
    out = {}
    for key, item in value._asdict().items():
        if isinstance(item, (tuple, list)):
            item = list(item)
        out[key] = item
    if kind is not None:
        out['kind'] = kind
    return out


def _from_record(cls, record, where):
    missing = [f for f in cls._fields if f not in record]
    extra = [k for k in record if k not in cls._fields]
    if missing:
        raise exceptions.MalformedFile('%s: %s' % (where, missing[0]), 'Missing field')
    if extra:
        raise exceptions.MalformedFile('%s: %s' % (where, extra[0]), 'Unknown field')
    for field in cls._fields:
        if not _FIELD_CHECKS[field](record[field]):
            raise exceptions.MalformedFile('%s: %s' % (where, field), 'Bad field type')
    values = [tuple(record[f]) if isinstance(record[f], list) else record[f] for f in cls._fields]
    return cls(*values)


def _is_int(value):
    return isinstance(value, numbers.Integral) and not isinstance(value, bool)


def _is_real(value):
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def _optional(check):
    return lambda value: value is None or check(value)


def _list_of(check):
    return lambda value: isinstance(value, list) and all(check(v) for v in value)


_FIELD_CHECKS = {
    'round': _is_int,
    'client_id': _is_int,
    'epochs': _is_int,
    'num_clusters': _is_int,
    'merges': _is_int,
    'm_profile': _is_int,
    'm_k': _is_int,
    'epochs_spent': _is_int,
    'best_round': _optional(_is_int),
    'exhausted': lambda value: isinstance(value, bool),
    'early_stopped': lambda value: isinstance(value, bool),
    'precision_avg': _is_real,
    'precision_max': _is_real,
    'loss': _is_real,
    'mp_k': _is_real,
    'mu': _optional(_is_real),
    'scores': _list_of(_is_real),
    'cluster_counts': _list_of(_is_int),
}
_FIELD_CHECKS.update((f, _optional(_is_real)) for f in ClientBest._fields[2:])


def _line_of(err):
    return err.object[:err.start].count(b'\n') + 1


def _parse_line(line, name, lineno):
    try:
        record = json.loads(line)
    except ValueError as e:
        raise exceptions.MalformedFile('%s:%d' % (name, lineno), 'Bad record: %s' % (e,))
    if not isinstance(record, dict):
        raise exceptions.MalformedFile('%s:%d' % (name, lineno), 'Record is not an object')
    return record


def _load_json(path):
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except ValueError as e:
        raise exceptions.MalformedFile(path, 'Bad JSON: %s' % (e,))


# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
