"""Exception hierarchy shared by every module.

Validation errors describe rejected inputs (bad CSV, bad mappings, degenerate
subsamples) and map to HTTP 422 / CLI exit 2.  Computation errors describe
numerical failure on admissible inputs and map to HTTP 500-adjacent codes /
CLI exit 3.  Each exception carries a stable ``code`` used in JSON payloads.
"""

from __future__ import annotations


class MsmkitError(Exception):
    code = "error"

    def __init__(self, message: str, detail: object = None):
        super().__init__(message)
        self.message = message
        self.detail = detail

    def payload(self) -> dict:
        return {"error": self.code, "message": self.message, "detail": self.detail}


class ValidationError(MsmkitError):
    code = "validation_error"


class ComputationError(MsmkitError):
    code = "computation_error"


# dataio

class EmptyFile(ValidationError):
    code = "empty_file"


class RaggedRows(ValidationError):
    code = "ragged_rows"


class DuplicateColumnName(ValidationError):
    code = "duplicate_column_name"


class MissingColumn(ValidationError):
    code = "missing_column"


class NonBinaryStatus(ValidationError):
    code = "non_binary_status"


class NegativeTime(ValidationError):
    code = "negative_time"


class InconsistentTimes(ValidationError):
    code = "inconsistent_times"


class SelfTransition(ValidationError):
    code = "self_transition"


class DuplicateEdge(ValidationError):
    code = "duplicate_edge"


class PathInconsistent(ValidationError):
    code = "path_inconsistent"


# survcore / regression

class UnknownGroupColumn(ValidationError):
    code = "unknown_group_column"


class SingleGroup(ValidationError):
    code = "single_group"


class NoEvents(ValidationError):
    code = "no_events"


class TooFewEvents(ValidationError):
    code = "too_few_events"


class TooFewDistinctValues(ValidationError):
    code = "too_few_distinct_values"


class NonPositiveTime(ValidationError):
    code = "non_positive_time"


class BadCovariate(ValidationError):
    code = "bad_covariate"


class SingularInformation(ComputationError):
    code = "singular_information"


class Diverged(ComputationError):
    code = "diverged"


# msmprob / markovcheck

class EmptyRiskSet(ComputationError):
    code = "empty_risk_set"


class EmptyLandmarkSet(ValidationError):
    code = "empty_landmark_set"


class BandwidthNonPositive(ValidationError):
    code = "bandwidth_non_positive"


class DegenerateCovariate(ValidationError):
    code = "degenerate_covariate"


class DegenerateVariance(ComputationError):
    code = "degenerate_variance"


class BootstrapFailure(ComputationError):
    code = "bootstrap_failure"


# analyses / service

class IncompatibleMapping(ValidationError):
    code = "incompatible_mapping"


class UnknownAnalysis(ValidationError):
    code = "unknown_analysis"
