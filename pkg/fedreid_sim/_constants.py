# Copyright 2026 pyfedreid authors. See LICENSE file for details.

"""
Important `fedreid_sim` constants.
"""

#: Early stop when the cumulative average batch precision exceeds this.
PRECISION_AVG_THRESHOLD = 0.95

#: Early stop when any batch reaches this precision.
PRECISION_BATCH_THRESHOLD = 1.0

#: Rows with a smaller norm are treated as zero when normalizing embeddings.
NORM_EPSILON = 1e-12

#: Slack absorbed when rounding ``n * mp`` down to an integer merge count.
FLOOR_SLACK = 1e-9

#: Rank cut-offs reported for every evaluation.
DEFAULT_RANKS = (1, 5, 10)

#: Version of the report and round-log record layout.
REPORT_SCHEMA_VERSION = 1

#: Magic first line of a parameter set file.
PARAMS_MAGIC = 'FEDREID-PARAMS 1'

# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
