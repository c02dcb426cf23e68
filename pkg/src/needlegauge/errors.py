"""Exception types shared across the package."""

from __future__ import annotations


class NeedlegaugeError(Exception):
    """Base class for all needlegauge errors."""


class ConfigError(NeedlegaugeError):
    """Invalid or inconsistent run configuration."""


# --- schema ---------------------------------------------------------------


class SchemaParseError(NeedlegaugeError):
    """Schema file is not well-formed."""


class SchemaValidationError(NeedlegaugeError):
    """Schema file parsed but violates an invariant."""


# --- gateway --------------------------------------------------------------


class GatewayError(NeedlegaugeError):
    """Base class for LLM gateway failures."""


class BudgetExceeded(GatewayError):
    """Projected request would not fit the model context window."""

    def __init__(self, projected: int, limit: int):
        super().__init__(f"projected {projected} tokens exceeds context window of {limit}")
        self.projected = projected
        self.limit = limit


class TransportError(GatewayError):
    """Network/HTTP failure that survived the retry policy."""


class MalformedResponse(GatewayError):
    """Backend reply did not match the expected wire format."""


class ScriptExhausted(GatewayError):
    """Scripted mock backend ran out of canned replies."""


class ResponseValidationError(GatewayError):
    """Structured LLM reply failed validation (range, required fields)."""


class UnparseableVerdict(GatewayError):
    """LLM judge reply contained no explicit yes/no token."""


# --- text / metrics -------------------------------------------------------


class EmptyDocument(NeedlegaugeError):
    """Document is empty or whitespace-only."""


class EmptyInput(NeedlegaugeError):
    """An operand that must be non-empty was empty."""


class EmptyEntityList(NeedlegaugeError):
    """A score over entities received zero entities."""


class ZeroMean(NeedlegaugeError):
    """Normalization by a mean of zero is undefined."""


class SplitInfeasible(NeedlegaugeError):
    """Document does not contain enough natural units to split as requested."""


# --- needle forge ---------------------------------------------------------


class InfusionError(NeedlegaugeError):
    """Base class for needle infusion failures."""


class FillRatioInfeasible(InfusionError):
    """Needle mass cannot satisfy the configured fill-ratio ceiling."""


class CorruptionError(InfusionError):
    """Enriched text or placement offsets no longer match what was recorded."""


class NoveltyFailure(NeedlegaugeError):
    """Generated needle subject already occurs in the source document."""


# --- matching / reports ---------------------------------------------------


class MissingPairError(NeedlegaugeError):
    """A (needle, criterion) pair is absent or duplicated in the results."""


class FingerprintMismatch(NeedlegaugeError):
    """Artifacts being combined were produced from different infusions."""
