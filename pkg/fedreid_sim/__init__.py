# Copyright 2026 pyfedreid authors. See LICENSE file for details.
'''
Simulator of **federated unsupervised person re-identification**.

A cloud coordinates edges that each hold unlabeled data of their own.
Every round the selected edges train a small embedding network on pseudo
labels, cluster the trained features bottom-up into fewer, larger pseudo
classes and upload the network; the classifier on top of it never leaves
the edge.  The cloud averages the uploads weighted by data volume and
sends the result back.

Three personalizations can be switched on independently:

- personalized epochs stop a round's training early once the batch
  precision shows the edge has fit its current pseudo labels;
- personalized clustering derives a per-edge merge schedule from a short
  profiling pre-run;
- personalized update blends each edge's model towards the global one
  with a weight derived from their per-layer distances.

Clients are synthetic: identities are Gaussian clusters on the unit
sphere, with client-specific regions so that data is not identically
distributed.  Models are evaluated by CMC rank-k accuracy and mean average
precision on a held-out labeled query and gallery split of every client.

Errors are reported as exceptions from :mod:`fedreid_sim.exceptions`.
'''

from ._constants import (
    DEFAULT_RANKS,
    PRECISION_AVG_THRESHOLD,
    PRECISION_BATCH_THRESHOLD,
)

from ._params import (
    ParamSet,
    weighted_average,
    layer_distances,
    compute_mu,
    ema_update,
)

from ._nets import (
    Backbone,
    ClassifierHead,
    EpochFeedback,
    forward,
    embed,
    loss_and_gradients,
    train_epoch,
    extract_features,
    resize_classifier,
)

from ._clustering import (
    ClusterState,
    init_clusters,
    cluster_round,
    labels,
)

from ._eval import (
    RetrievalSet,
    RetrievalScores,
    cmc,
    map_score,
    evaluate,
    evaluate_model,
)

from ._config import (
    TrainConfig,
    ProfilingConfig,
    config_from_dict,
    apply_overrides,
)

from ._data_io import (
    ClientSpec,
    ClientDataset,
    RoundMetrics,
    ProfileResult,
    ClientBest,
    ExperimentReport,
    generate_synthetic,
    default_client_specs,
    parse_client_specs,
    save_report,
    load_report,
    dumps_report,
    loads_report,
    write_metrics_csv,
    RoundLog,
    save_profiles,
    load_profiles,
    save_config,
    load_config,
    config_digest,
)

from ._paramfile import (
    dump_params,
    parse_params,
    save_params,
    load_params,
)

from ._edge import (
    EdgeRuntime,
    EdgeSchedule,
    local_round,
    should_early_stop,
)

from ._profiler import (
    derive_schedule,
    profile_client,
    profile_clients,
    labeled_profiles,
    profiles_for,
    rank1_scorer,
    separation_scorer,
)

from ._cloud import (
    FederationState,
    select_clients,
    aggregate,
    personalized_update,
    run_experiment,
    run_standalone,
)

__all__ = [
    'DEFAULT_RANKS',
    'PRECISION_AVG_THRESHOLD',
    'PRECISION_BATCH_THRESHOLD',
    'ParamSet',
    'weighted_average',
    'layer_distances',
    'compute_mu',
    'ema_update',
    'Backbone',
    'ClassifierHead',
    'EpochFeedback',
    'forward',
    'embed',
    'loss_and_gradients',
    'train_epoch',
    'extract_features',
    'resize_classifier',
    'ClusterState',
    'init_clusters',
    'cluster_round',
    'labels',
    'RetrievalSet',
    'RetrievalScores',
    'cmc',
    'map_score',
    'evaluate',
    'evaluate_model',
    'TrainConfig',
    'ProfilingConfig',
    'config_from_dict',
    'apply_overrides',
    'ClientSpec',
    'ClientDataset',
    'RoundMetrics',
    'ProfileResult',
    'ClientBest',
    'ExperimentReport',
    'generate_synthetic',
    'default_client_specs',
    'parse_client_specs',
    'save_report',
    'load_report',
    'dumps_report',
    'loads_report',
    'write_metrics_csv',
    'RoundLog',
    'save_profiles',
    'load_profiles',
    'save_config',
    'load_config',
    'config_digest',
    'dump_params',
    'parse_params',
    'save_params',
    'load_params',
    'EdgeRuntime',
    'EdgeSchedule',
    'local_round',
    'should_early_stop',
    'derive_schedule',
    'profile_client',
    'profile_clients',
    'labeled_profiles',
    'profiles_for',
    'rank1_scorer',
    'separation_scorer',
    'FederationState',
    'select_clients',
    'aggregate',
    'personalized_update',
    'run_experiment',
    'run_standalone',
]

# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
