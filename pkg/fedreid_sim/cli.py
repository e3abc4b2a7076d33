# Copyright 2026 pyfedreid authors. See LICENSE file for details.

"""
Command line entry point.

``fedreid-sim run`` trains a federation, ``standalone`` trains every client
alone, ``profile`` only runs the profiling pass of personalized clustering
and ``report`` summarizes a saved report.  Every configuration key has an
option; options override the values of a ``--config`` file.  Output goes
to ``--out`` or to a directory under ``runs/`` named after the command and
a hash of the configuration and client population.

The log level is read from the ``FEDREID_LOG_LEVEL`` environment variable.
A failing command exits with the error number of the raised exception.
"""

import argparse
import errno
import logging
import os
import sys

from . import exceptions
from ._cloud import run_experiment, run_standalone
from ._clustering import LINKAGES
from ._config import CONFIG_HELP, PROFILE_SOURCES, TrainConfig, apply_overrides
from ._data_io import (
    RoundLog,
    config_digest,
    default_client_specs,
    generate_synthetic,
    load_config,
    load_profiles,
    load_report,
    parse_client_specs,
    save_config,
    save_profiles,
    save_report,
    write_metrics_csv,
)
from ._paramfile import save_params
from ._profiler import profiles_for, rank1_scorer, separation_scorer

logger = logging.getLogger(__name__)

LOG_LEVEL_ENV = 'FEDREID_LOG_LEVEL'

_handler = None

_SCORERS = {
    'rank1': rank1_scorer,
    'separation': separation_scorer,
}


def cmd_run(args):
    '''Run a federated experiment and write its report.'''
    return _train(args, run_experiment, 'run')


def cmd_standalone(args):
    '''Train every client on its own data and write the report.'''
    return _train(args, run_standalone, 'standalone')


def cmd_profile(args):
    '''Profile every client and write the profiles.'''
    config, specs, clients = _setup(args)
    out = _output_dir(args, 'profile', config, specs)
    profiles = profiles_for(clients, config, _SCORERS[args.scorer])
    path = os.path.join(out, 'profiles.json')
    save_profiles(profiles, path)
    for p in profiles:
        source = 'labeled' if p.best_round is None else 'best round %d' % (p.best_round,)
        print('client %d: n_k %d, M_profile %d, m_k %d, mp_k %.5f, %s'
              % (p.client_id, clients[p.client_id].n_k, p.m_profile, p.m_k, p.mp_k, source))
    print('profiling epochs: %d' % (sum(p.epochs_spent for p in profiles),))
    print('profiles: %s' % (path,))
    return 0


def cmd_report(args):
    '''Summarize a saved report.'''
    report = load_report(args.report)
    _print_summary(report)
    if args.csv:
        write_metrics_csv(report.rounds, args.csv)
    return 0


def _train(args, runner, command):
    config, specs, clients = _setup(args)
    if args.profiles and not config.pc:
        raise exceptions.ConfigInvalid('--profiles without --pc')
    out = _output_dir(args, command, config, specs)
    save_config(config, os.path.join(out, 'config.json'))
    profiles = None
    if args.profiles:
        profiles = list(load_profiles(args.profiles).values())

    models = {}
    with RoundLog(os.path.join(out, 'rounds.jsonl')) as log:
        report = runner(config, clients, profiles=profiles, on_round=log.append,
                        scorer=_SCORERS[args.scorer], models=models)

    path = os.path.join(out, 'report.jsonl')
    save_report(report, path)
    write_metrics_csv(report.rounds, os.path.join(out, 'metrics.csv'))
    if report.profiles:
        save_profiles(report.profiles, os.path.join(out, 'profiles.json'))
    for key, params in sorted(models.items(), key=lambda kv: str(kv[0])):
        name = key if isinstance(key, str) else 'client-%d' % (key,)
        save_params(params, os.path.join(out, '%s.params' % (name,)))

    if load_report(path) != report:
        raise exceptions.MalformedFile(path, 'Report does not read back')
    _print_summary(report)
    print('report: %s' % (path,))
    return 0


def _setup(args):
    config = load_config(args.config) if args.config else TrainConfig()
    config = apply_overrides(config, _overrides(args))
    if args.clients:
        specs = parse_client_specs(args.clients, args.input_dim, args.noise, config.seed)
        config = apply_overrides(config, {
            'num_clients': len(specs),
            'clients_per_round': min(config.clients_per_round, len(specs)),
        })
    else:
        specs = default_client_specs(config.num_clients, args.input_dim, args.noise, config.seed)
    return config, specs, generate_synthetic(specs)


def _output_dir(args, command, config, specs):
    out = args.out or os.path.join('runs', '%s-%s' % (command, config_digest(config, specs)))
    if not os.path.isdir(out):
        os.makedirs(out)
    return out


def _print_summary(report):
    print('%s run, %d rounds' % (report.mode, report.config.rounds))
    for best in report.best:
        if best.local_rank1 is None:
            print('client %d: no evaluation split' % (best.client_id,))
            continue
        print('client %d: best rank-1 local %.4f global %.4f (round %d), mAP local %.4f global %.4f'
              % (best.client_id, best.local_rank1, best.global_rank1, best.best_round,
                 best.local_map, best.global_map))
    print('epochs: training %d, profiling %d, total %d'
          % (report.training_epochs, report.profiling_epochs, report.computation_cost))


def _option(key):
    return '--' + key.replace('.', '-').replace('_', '-')


def _dest(key):
    return 'cfg_' + key.replace('.', '_')


def _overrides(args):
    return {key: getattr(args, _dest(key)) for key in CONFIG_HELP}


def _add_config_options(parser):
    group = parser.add_argument_group('configuration')
    defaults = TrainConfig().to_dict()
    for key, text in CONFIG_HELP.items():
        if key.startswith('profiling.'):
            default = defaults['profiling'][key[len('profiling.'):]]
        else:
            default = defaults[key]
        kwargs = {'dest': _dest(key), 'default': None, 'help': '%s (default: %s)' % (text, default)}
        if isinstance(default, bool):
            kwargs['action'] = argparse.BooleanOptionalAction
        elif key == 'linkage':
            kwargs['choices'] = LINKAGES
        elif key == 'profiling.source':
            kwargs['choices'] = PROFILE_SOURCES
        elif isinstance(default, float):
            kwargs['type'] = float
        else:
            kwargs['type'] = int
        group.add_argument(_option(key), **kwargs)


def _add_data_options(parser):
    parser.add_argument('--config', metavar='PATH', help='JSON configuration file')
    parser.add_argument('--clients', metavar='SPEC',
                        help='client population, e.g. 64:8,128:12:0.1 (n_k:I_k[:noise] per client); '
                             'replaces num_clients')
    parser.add_argument('--input-dim', type=int, default=32, help='sample dimension (default: 32)')
    parser.add_argument('--noise', type=float, default=0.05, help='sample noise (default: 0.05)')
    parser.add_argument('--out', metavar='DIR', help='output directory')
    parser.add_argument('--scorer', choices=sorted(_SCORERS), default='rank1',
                        help='profiling score: rank-1 on the evaluation split or '
                             'label-free cluster separation (default: rank1)')
    _add_config_options(parser)


def build_parser():
    parser = argparse.ArgumentParser(prog='fedreid-sim',
                                     description='Federated unsupervised person re-identification simulator')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    for name, func, text in (('run', cmd_run, 'run a federated experiment'),
                             ('standalone', cmd_standalone, 'train every client alone')):
        p = sub.add_parser(name, help=text)
        _add_data_options(p)
        p.add_argument('--profiles', metavar='PATH',
                       help='profiles to use for personalized clustering instead of profiling')
        p.set_defaults(func=func)

    p = sub.add_parser('profile', help='profile clients for personalized clustering')
    _add_data_options(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser('report', help='summarize a report file')
    p.add_argument('report', metavar='PATH', help='report file')
    p.add_argument('--csv', metavar='PATH', help='also export the round metrics as CSV')
    p.set_defaults(func=cmd_report)
    return parser


def setup_logging():
    global _handler
    level = os.environ.get(LOG_LEVEL_ENV, 'INFO').upper()
    if not isinstance(logging.getLevelName(level), int):
        level = 'INFO'
    root = logging.getLogger('fedreid_sim')
    if _handler is None:
        _handler = logging.StreamHandler(sys.stdout)
        _handler.setFormatter(logging.Formatter('%(asctime)s %(levelname)s %(name)s: %(message)s'))
        root.addHandler(_handler)
    root.setLevel(level)


def main(argv=None):
    args = build_parser().parse_args(argv)
    setup_logging()
    try:
        return args.func(args)
    except exceptions.FedReIDError as e:
        print('fedreid-sim: %s' % (e,), file=sys.stderr)
        for sub in getattr(e, 'errors', ()):
            print('  %s' % (sub,), file=sys.stderr)
        return e.errno or 1
    except EnvironmentError as e:
        print('fedreid-sim: %s' % (e,), file=sys.stderr)
        return e.errno or errno.EIO


# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
