# Copyright 2026 pyfedreid authors. See LICENSE file for details.

"""
Exceptions that can be raised by fedreid_sim operations.
"""

import errno


class FedReIDError(Exception):
    errno = None
    message = None
    name = None

    def __str__(self):
        if self.name is not None:
            return "[Errno %d] %s: '%s'" % (self.errno, self.message, self.name)
        else:
            return "[Errno %d] %s" % (self.errno, self.message)

    def __repr__(self):
        return "%s(%r, %r)" % (self.__class__.__name__, self.errno, self.message)


class FedReIDGenericError(FedReIDError):

    def __init__(self, errno, name, message):
        self.errno = errno
        self.message = message
        self.name = name


class UsageError(FedReIDError):

    """
    This exception is raised when an operation is called with arguments
    that violate its preconditions.  More specific subclasses are raised
    where the failing precondition is known.
    """
    errno = errno.EINVAL
    message = "Invalid argument"

    def __init__(self, name=None):
        self.name = name


class EmptyInput(UsageError):
    message = "Input must not be empty"


class ZeroWeightSum(UsageError):
    message = "Aggregation weights sum to zero"


class MixingWeightInvalid(UsageError):
    message = "Mixing weight must lie in [0, 1]"


class LabelOutOfRange(UsageError):
    message = "Pseudo label is outside of the classifier range"


class MergeIndexInvalid(UsageError):
    message = "Merge event references a nonexistent classifier row"


class MergePercentInvalid(UsageError):
    message = "Merge percent must lie in (0, 1)"


class ClientSelectionInvalid(UsageError):
    message = "Number of selected clients must be between 1 and the number of clients"


class IdentityCountInvalid(UsageError):
    message = "Identity count exceeds the number of samples"


class ProfileCountInvalid(UsageError):
    message = "Profiled cluster count must be between 1 and the number of samples"


class BackboneKindInvalid(UsageError):
    message = "Unknown backbone or linkage kind"


class ShapeMismatch(FedReIDError):

    """
    This exception is raised when two parameter sets, or a matrix and
    a model, do not have compatible shapes.  The name is the first
    layer (or dimension) found to differ.
    """
    errno = errno.EINVAL
    message = "Shapes are not compatible"

    def __init__(self, name):
        self.name = name


class NonFiniteParams(FedReIDError):
    errno = errno.ERANGE
    message = "Operation produced non-finite values"

    def __init__(self, name):
        self.name = name


class NoEvaluableQuery(FedReIDError):
    errno = errno.ENOENT
    message = "No query has a valid match in the gallery"

    def __init__(self, name=None):
        self.name = name


class ScorerUnavailable(FedReIDError):

    """
    This exception is raised when profiling can not score its rounds.
    Either supply a labeled validation split (query and gallery) for the
    client or pass an unsupervised scorer such as
    :func:`~fedreid_sim.separation_scorer`.
    """
    errno = errno.ENOTSUP
    message = "Profiling needs a scorer: supply a labeled validation split or an unsupervised score"

    def __init__(self, name):
        self.name = name


class ConfigInvalid(FedReIDError):
    errno = errno.EINVAL
    message = "Invalid configuration"

    def __init__(self, name):
        self.name = name


class MalformedFile(FedReIDError):

    """
    This exception is raised when a persisted report, parameter set,
    profile or configuration file can not be parsed.  The name carries
    the path together with the line or field at which parsing failed.
    """
    errno = errno.EBADMSG
    message = "Malformed file"

    def __init__(self, name, message=None):
        self.name = name
        if message is not None:
            self.message = message


class ClientFailure(FedReIDError):

    """
    An operation on one edge failed during a round.  The original
    exception is kept in :attr:`cause`.
    """
    message = "Edge failed during round"

    def __init__(self, round_idx, client_id, cause):
        self.round_idx = round_idx
        self.client_id = client_id
        self.cause = cause
        self.errno = getattr(cause, 'errno', None) or errno.EIO
        self.name = "round %d, client %d: %s" % (round_idx, client_id, cause)


class MultipleOperationsFailure(FedReIDError):

    def __init__(self, errors, suppressed_count):
        # Use first of the individual error codes
        # as an overall error code.  This is more consistent.
        self.errno = errors[0].errno
        self.errors = errors
        #: this many errors were encountered but not placed on the `errors` list
        self.suppressed_count = suppressed_count

    def __str__(self):
        return "%s, %d errors included, %d suppressed" % (FedReIDError.__str__(self),
                                                          len(self.errors), self.suppressed_count)

    def __repr__(self):
        return "%s(%r, %r, errors=%r, suppressed=%r)" % (self.__class__.__name__,
                                                         self.errno, self.message, self.errors,
                                                         self.suppressed_count)


class RoundFailure(MultipleOperationsFailure):
    message = "One or more edges failed during a round"

    def __init__(self, errors, suppressed_count):
        super(RoundFailure, self).__init__(errors, suppressed_count)


class ProfilingFailure(MultipleOperationsFailure):
    message = "Profiling failed for one or more clients"

    def __init__(self, errors, suppressed_count):
        super(ProfilingFailure, self).__init__(errors, suppressed_count)


# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
