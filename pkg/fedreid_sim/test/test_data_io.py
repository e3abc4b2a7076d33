# Copyright 2026 pyfedreid authors. See LICENSE file for details.

"""
Tests for synthetic client generation and for the persisted formats:
reports, round logs, metric tables, profiles, configurations and
parameter set files.  Every truncation of a report must be rejected.
"""

import csv
import json
import os
import shutil
import tempfile
import unittest

import numpy as np

from .. import exceptions as fed_exc
from .._config import ProfilingConfig, TrainConfig
from .._data_io import (
    ClientBest,
    ClientSpec,
    ExperimentReport,
    ProfileResult,
    RoundLog,
    RoundMetrics,
    config_digest,
    default_client_specs,
    dumps_report,
    generate_synthetic,
    load_config,
    load_profiles,
    load_report,
    loads_report,
    parse_client_specs,
    save_config,
    save_profiles,
    save_report,
    write_metrics_csv,
)
from .._paramfile import dump_params, load_params, parse_params, save_params
from .._params import ParamSet


def _metrics(round_idx, client_id, **kwargs):
    values = dict(
        round=round_idx, client_id=client_id, epochs=5, num_clusters=40 - round_idx, merges=2,
        exhausted=False, early_stopped=False, precision_avg=0.25, precision_max=0.5, loss=1.0 / 3.0,
        mu=None, local_rank1=0.5, local_rank5=0.75, local_rank10=1.0, local_map=0.4,
        global_rank1=0.6, global_rank5=0.8, global_rank10=1.0, global_map=0.45)
    values.update(kwargs)
    return RoundMetrics(**values)


def _profile(client_id):
    return ProfileResult(client_id=client_id, m_profile=13, m_k=11, mp_k=11 / 248.0, best_round=2,
                         epochs_spent=16, scores=(0.1, 0.2, 0.3), cluster_counts=(248, 229, 210))


def _report():
    config = TrainConfig(rounds=2, num_clients=2, clients_per_round=2, pu=True,
                         profiling=ProfilingConfig(rounds=3))
    rounds = tuple(_metrics(r, c, mu=0.5 * c) for r in range(2) for c in range(2))
    best = (ClientBest(0, 1, 0.5, 0.75, 1.0, 0.4, 0.6, 0.8, 1.0, 0.45),
            ClientBest(1, None, None, None, None, None, None, None, None, None))
    return ExperimentReport(mode='federated', config=config, rounds=rounds, profiles=(_profile(0),),
                            best=best, training_epochs=20, profiling_epochs=16, computation_cost=36)


class _TempDirTest(unittest.TestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def path(self, name):
        return os.path.join(self.tmpdir, name)


class TestSynthetic(unittest.TestCase):

    def test_sizes_and_splits(self):
        for n, identities in ((64, 8), (512, 32), (10, 10)):
            client = generate_synthetic([ClientSpec(n, identities, input_dim=8, seed=n)])[0]
            self.assertEqual(client.n_k, n)
            self.assertEqual(client.num_identities, identities)
            self.assertEqual(client.train_samples.shape, (n, 8))
            counts = np.bincount(client.train_identities, minlength=identities)
            self.assertEqual(int(counts.sum()), n)
            self.assertTrue(np.all(counts >= 1))
            self.assertEqual(len(client.query_indices), identities)
            self.assertEqual(len(client.gallery_indices), 2 * identities)
            self.assertEqual(set(client.identities[client.query_indices]),
                             set(client.identities[client.gallery_indices]))
            used = np.concatenate([client.train_indices, client.query_indices, client.gallery_indices])
            self.assertEqual(sorted(used.tolist()), list(range(len(client.samples))))

    def test_query_and_gallery_cameras_differ(self):
        client = generate_synthetic([ClientSpec(30, 6, input_dim=4)])[0]
        query_cams = set(client.camera_ids[client.query_indices].tolist())
        gallery_cams = set(client.camera_ids[client.gallery_indices].tolist())
        self.assertFalse(query_cams & gallery_cams)

    def test_noise_free_identities_coincide(self):
        client = generate_synthetic([ClientSpec(30, 4, input_dim=5, noise=0.0)])[0]
        for identity in range(4):
            rows = client.samples[client.identities == identity]
            self.assertTrue(np.all(rows == rows[0]))

    def test_deterministic(self):
        a = generate_synthetic([ClientSpec(50, 7, seed=11)])[0]
        b = generate_synthetic([ClientSpec(50, 7, seed=11)])[0]
        self.assertTrue(np.array_equal(a.samples, b.samples))
        self.assertTrue(np.array_equal(a.identities, b.identities))
        c = generate_synthetic([ClientSpec(50, 7, seed=12)])[0]
        self.assertFalse(np.array_equal(a.samples, c.samples))

    def test_client_ids_follow_order(self):
        clients = generate_synthetic([ClientSpec(8, 2), ClientSpec(9, 3)])
        self.assertEqual([c.client_id for c in clients], [0, 1])

    def test_too_many_identities(self):
        with self.assertRaises(fed_exc.IdentityCountInvalid):
            generate_synthetic([ClientSpec(5, 6)])

    def test_default_population(self):
        specs = default_client_specs(8)
        self.assertEqual(specs[0].num_samples, 64)
        self.assertEqual(specs[-1].num_samples, 512)
        self.assertEqual(specs[0].num_identities, 8)
        self.assertEqual(specs[-1].num_identities, 32)
        self.assertEqual(len(set(s.seed for s in specs)), 8)
        sizes = [s.num_samples for s in specs]
        self.assertEqual(sizes, sorted(sizes))

    def test_parse_client_specs(self):
        specs = parse_client_specs('64:8, 128:12:0.1', input_dim=6, noise=0.2)
        self.assertEqual([(s.num_samples, s.num_identities, s.noise, s.input_dim) for s in specs],
                         [(64, 8, 0.2, 6), (128, 12, 0.1, 6)])
        for text in ('64', '64:8:0.1:3', 'a:b', ''):
            with self.assertRaises(fed_exc.ConfigInvalid):
                parse_client_specs(text)


class TestReport(_TempDirTest):

    def test_round_trip(self):
        report = _report()
        save_report(report, self.path('report.jsonl'))
        self.assertEqual(load_report(self.path('report.jsonl')), report)

    def test_empty_report(self):
        report = ExperimentReport(mode='standalone', config=TrainConfig(), rounds=(), profiles=(), best=(),
                                  training_epochs=0, profiling_epochs=0, computation_cost=0)
        self.assertEqual(loads_report(dumps_report(report)), report)

    def test_same_report_same_bytes(self):
        self.assertEqual(dumps_report(_report()), dumps_report(_report()))

    def test_every_truncation_rejected(self):
        text = dumps_report(_report())
        for size in range(len(text)):
            with self.assertRaises(fed_exc.MalformedFile):
                loads_report(text[:size])

    def test_missing_field(self):
        lines = dumps_report(_report()).splitlines(True)
        record = json.loads(lines[1])
        del record['loss']
        lines[1] = json.dumps(record) + '\n'
        with self.assertRaises(fed_exc.MalformedFile) as ctx:
            loads_report(''.join(lines), 'r.jsonl')
        self.assertIn('r.jsonl:2', ctx.exception.name)

    def test_unknown_field(self):
        lines = dumps_report(_report()).splitlines(True)
        record = json.loads(lines[2])
        record['extra'] = 1
        lines[2] = json.dumps(record) + '\n'
        with self.assertRaises(fed_exc.MalformedFile):
            loads_report(''.join(lines))

    def test_dropped_record(self):
        lines = dumps_report(_report()).splitlines(True)
        del lines[3]
        with self.assertRaises(fed_exc.MalformedFile):
            loads_report(''.join(lines))

    def test_record_after_summary(self):
        lines = dumps_report(_report()).splitlines(True)
        lines.append(lines[1])
        with self.assertRaises(fed_exc.MalformedFile):
            loads_report(''.join(lines))

    def test_wrong_schema(self):
        lines = dumps_report(_report()).splitlines(True)
        header = json.loads(lines[0])
        header['schema'] = 99
        lines[0] = json.dumps(header) + '\n'
        with self.assertRaises(fed_exc.MalformedFile):
            loads_report(''.join(lines))

    def test_invalid_utf8(self):
        text = dumps_report(_report()).encode('utf-8')
        with open(self.path('r.jsonl'), 'wb') as f:
            f.write(text[:40] + b'\xff\xfe' + text[40:])
        with self.assertRaises(fed_exc.MalformedFile) as ctx:
            load_report(self.path('r.jsonl'))
        self.assertTrue(ctx.exception.name.endswith('r.jsonl:1'))

    def test_config_not_an_object(self):
        lines = dumps_report(_report()).splitlines(True)
        header = json.loads(lines[0])
        for config in (['abc', 'def'], 5, None):
            header['config'] = config
            lines[0] = json.dumps(header) + '\n'
            with self.assertRaises(fed_exc.MalformedFile) as ctx:
                loads_report(''.join(lines), 'r.jsonl')
            self.assertEqual(ctx.exception.name, 'r.jsonl:1: config')

    def test_invalid_config_value(self):
        lines = dumps_report(_report()).splitlines(True)
        header = json.loads(lines[0])
        header['config']['clients_per_round'] = 99
        lines[0] = json.dumps(header) + '\n'
        with self.assertRaises(fed_exc.MalformedFile):
            loads_report(''.join(lines))

    def test_unknown_mode(self):
        lines = dumps_report(_report()).splitlines(True)
        header = json.loads(lines[0])
        header['mode'] = 'centralized'
        lines[0] = json.dumps(header) + '\n'
        with self.assertRaises(fed_exc.MalformedFile):
            loads_report(''.join(lines))

    def test_bad_field_types(self):
        cases = [
            (1, 'local_rank1', 'high'),
            (1, 'epochs', 2.5),
            (1, 'exhausted', 0),
            (1, 'round', True),
            (1, 'mu', [0.5]),
            (5, 'scores', [0.1, 'x']),
            (5, 'cluster_counts', 3),
            (5, 'best_round', '2'),
            (6, 'global_map', {}),
        ]
        original = dumps_report(_report()).splitlines(True)
        for lineno, field, value in cases:
            lines = list(original)
            record = json.loads(lines[lineno])
            self.assertIn(field, record)
            record[field] = value
            lines[lineno] = json.dumps(record) + '\n'
            with self.assertRaises(fed_exc.MalformedFile) as ctx:
                loads_report(''.join(lines), 'r.jsonl')
            self.assertEqual(ctx.exception.name, 'r.jsonl:%d: %s' % (lineno + 1, field))

    def test_bad_summary_type(self):
        lines = dumps_report(_report()).splitlines(True)
        summary = json.loads(lines[-1])
        summary['training_epochs'] = '20'
        lines[-1] = json.dumps(summary) + '\n'
        with self.assertRaises(fed_exc.MalformedFile) as ctx:
            loads_report(''.join(lines), 'r.jsonl')
        self.assertTrue(ctx.exception.name.endswith(': training_epochs'))

    def test_mu_trajectory(self):
        report = _report()
        self.assertEqual(report.mu_trajectory(1), [0.5, 0.5])
        self.assertEqual(len(report.client_rounds(0)), 2)


class TestArtifacts(_TempDirTest):

    def test_round_log(self):
        with RoundLog(self.path('rounds.jsonl')) as log:
            log.append(_metrics(0, 0))
            log.append(_metrics(0, 1))
        with open(self.path('rounds.jsonl')) as f:
            records = [json.loads(line) for line in f]
        self.assertEqual([r['client_id'] for r in records], [0, 1])
        self.assertEqual(records[0]['kind'], 'round')

    def test_metrics_csv(self):
        write_metrics_csv([_metrics(0, 0), _metrics(1, 0, local_rank1=None)], self.path('m.csv'))
        with open(self.path('m.csv'), newline='') as f:
            rows = list(csv.reader(f))
        self.assertEqual(tuple(rows[0]), RoundMetrics._fields)
        self.assertEqual(len(rows), 3)
        self.assertEqual(rows[2][RoundMetrics._fields.index('local_rank1')], '')

    def test_profiles_round_trip(self):
        profiles = [_profile(0), _profile(3)]
        save_profiles(profiles, self.path('profiles.json'))
        self.assertEqual(load_profiles(self.path('profiles.json')), {0: profiles[0], 3: profiles[1]})

    def test_labeled_profile_round_trip(self):
        profile = ProfileResult(client_id=2, m_profile=13, m_k=11, mp_k=11 / 248.0, best_round=None,
                                epochs_spent=0, scores=(), cluster_counts=())
        save_profiles([profile], self.path('profiles.json'))
        self.assertEqual(load_profiles(self.path('profiles.json')), {2: profile})

    def test_profiles_bad_file(self):
        with open(self.path('profiles.json'), 'w') as f:
            f.write('{"schema": 1, "profiles": [1, 2]}\n')
        with self.assertRaises(fed_exc.MalformedFile):
            load_profiles(self.path('profiles.json'))

    def test_profiles_bad_field_type(self):
        save_profiles([_profile(0)], self.path('profiles.json'))
        with open(self.path('profiles.json')) as f:
            doc = json.load(f)
        doc['profiles']['0']['m_k'] = '11'
        with open(self.path('profiles.json'), 'w') as f:
            json.dump(doc, f)
        with self.assertRaises(fed_exc.MalformedFile) as ctx:
            load_profiles(self.path('profiles.json'))
        self.assertTrue(ctx.exception.name.endswith(': 0: m_k'))

    def test_profiles_invalid_utf8(self):
        with open(self.path('profiles.json'), 'wb') as f:
            f.write(b'{"schema": \xff}\n')
        with self.assertRaises(fed_exc.MalformedFile):
            load_profiles(self.path('profiles.json'))

    def test_config_round_trip(self):
        config = TrainConfig(pe=True, seed=7, first_round_epochs=20,
                             profiling=ProfilingConfig(per_client_best=True))
        save_config(config, self.path('config.json'))
        self.assertEqual(load_config(self.path('config.json')), config)

    def test_config_unknown_key(self):
        with open(self.path('config.json'), 'w') as f:
            json.dump({'epochs': 5, 'momentum': 0.9}, f)
        with self.assertRaises(fed_exc.ConfigInvalid):
            load_config(self.path('config.json'))

    def test_config_wrong_type(self):
        with open(self.path('config.json'), 'w') as f:
            json.dump({'pe': 1}, f)
        with self.assertRaises(fed_exc.ConfigInvalid):
            load_config(self.path('config.json'))

    def test_config_unknown_profiling_source(self):
        with open(self.path('config.json'), 'w') as f:
            json.dump({'profiling': {'source': 'oracle'}}, f)
        with self.assertRaises(fed_exc.ConfigInvalid) as ctx:
            load_config(self.path('config.json'))
        self.assertEqual(ctx.exception.name, 'profiling.source')

    def test_config_not_json(self):
        with open(self.path('config.json'), 'w') as f:
            f.write('epochs = 5\n')
        with self.assertRaises(fed_exc.MalformedFile):
            load_config(self.path('config.json'))

    def test_config_digest(self):
        specs = default_client_specs(2)
        self.assertEqual(config_digest(TrainConfig(), specs), config_digest(TrainConfig(), specs))
        self.assertNotEqual(config_digest(TrainConfig(), specs), config_digest(TrainConfig(seed=1), specs))


class TestParamFile(_TempDirTest):

    def _params(self):
        rng = np.random.default_rng(0)
        return ParamSet([('embed.weight', rng.normal(size=6)), ('embed.bias', [0.0, -0.0, 1e-310])])

    def test_round_trip(self):
        params = self._params()
        save_params(params, self.path('model.params'))
        self.assertTrue(load_params(self.path('model.params')).equals(params))

    def test_bytes_follow_values(self):
        self.assertEqual(dump_params(self._params()), dump_params(self._params()))
        other = ParamSet([('embed.weight', np.zeros(6)), ('embed.bias', np.zeros(3))])
        self.assertNotEqual(dump_params(self._params()), dump_params(other))

    def test_empty_layer(self):
        params = ParamSet([('empty', [])])
        self.assertTrue(parse_params(dump_params(params)).equals(params))

    def test_bad_magic(self):
        data = dump_params(self._params()).replace(b'FEDREID-PARAMS', b'OTHER-PARAMS', 1)
        with self.assertRaises(fed_exc.MalformedFile):
            parse_params(data)

    def test_truncated(self):
        data = dump_params(self._params())
        for size in (0, 5, 20, len(data) - 8, len(data) - 1):
            with self.assertRaises(fed_exc.MalformedFile):
                parse_params(data[:size])

    def test_trailing_bytes(self):
        with self.assertRaises(fed_exc.MalformedFile):
            parse_params(dump_params(self._params()) + b'\0')

    def test_non_finite_body(self):
        data = dump_params(ParamSet([('w', [1.0])]))
        data = data[:-8] + np.array([np.inf], dtype='<f8').tobytes()
        with self.assertRaises(fed_exc.MalformedFile):
            parse_params(data)


# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
