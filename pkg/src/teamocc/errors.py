"""Exception hierarchy. Every error carries a machine-readable ``code`` used by the CLI."""


class TeamOccError(Exception):
    code = "error"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"code": self.code, "message": str(self)}
        out.update({k: repr(v) if not isinstance(v, (int, str)) else v for k, v in self.details.items()})
        return out


class ModelError(TeamOccError):
    code = "model_error"


class ModelFormatError(ModelError):
    code = "model_format"


class RowSumError(ModelError):
    code = "row_sum"


class NegativeProbability(ModelError):
    code = "negative_probability"


class MissingEntry(ModelError):
    code = "missing_entry"


class DimensionMismatch(TeamOccError):
    code = "dimension_mismatch"


class DiscountIsOne(TeamOccError):
    code = "discount_is_one"


class SizeLimitExceeded(TeamOccError):
    code = "size_limit"


class SupportExplosion(TeamOccError):
    code = "support_explosion"


class NotOnPathRealizable(TeamOccError):
    code = "not_on_path_realizable"


class PolicyHistoryMismatch(TeamOccError):
    code = "policy_history_mismatch"


class PolicyFormatError(TeamOccError):
    code = "policy_format"


class FlowViolation(TeamOccError):
    code = "flow_violation"


class NegativeMultiplier(TeamOccError):
    code = "negative_multiplier"


class NoWitnessFound(TeamOccError):
    code = "no_witness"
