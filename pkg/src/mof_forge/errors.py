"""Exception hierarchy with stable error codes.

Every error that can cross the service boundary carries a short stable
``code`` string so API clients and the CLI can match on it without parsing
messages.
"""

from __future__ import annotations


class MofForgeError(Exception):
    """Base class for all package errors."""

    code = "internal"

    def __init__(self, message: str = "", **context):
        super().__init__(message or self.__doc__ or self.code)
        self.context = context


# --- intent ---------------------------------------------------------------

class EmptyQuery(MofForgeError):
    """Query text is blank after whitespace trim."""

    code = "empty_query"


class UnrecognizedTask(MofForgeError):
    """No task pattern matched the query."""

    code = "unrecognized_task"


class SessionMismatch(MofForgeError):
    """Clarification answer belongs to a different session."""

    code = "session_mismatch"


# --- planner ---------------------------------------------------------------

class NoTemplate(MofForgeError):
    """No plan template registered for the task kind."""

    code = "no_template"


class UnresolvedMaterial(MofForgeError):
    """Intent carries a material without a resolved structure id."""

    code = "unresolved_material"


class CycleDetected(MofForgeError):
    """Dependency graph contains a cycle."""

    code = "cycle_detected"

    def __init__(self, cycle: list[str]):
        super().__init__(f"dependency cycle: {' -> '.join(cycle)}", cycle=cycle)
        self.cycle = cycle


# --- structdb ---------------------------------------------------------------

class NotFound(MofForgeError):
    """Identifier matched no fixture record."""

    code = "not_found"


class Ambiguous(MofForgeError):
    """Identifier matched several records."""

    code = "ambiguous"

    def __init__(self, raw: str, candidates: list[str]):
        super().__init__(f"{raw!r} matches {candidates}", candidates=candidates)
        self.candidates = candidates


class UnknownSpecies(MofForgeError):
    """Species absent from the force-field library."""

    code = "unknown_species"


# --- inputgen ---------------------------------------------------------------

class SchemaViolation(MofForgeError):
    """Deck is missing a mandatory key or has a malformed value."""

    code = "schema_violation"


class UnknownTool(MofForgeError):
    """No deck schema or adapter for the tool."""

    code = "unknown_tool"


# --- guard ------------------------------------------------------------------

class NonConvergence(MofForgeError):
    """Validate/apply loop did not reach a fixpoint within the bound."""

    code = "non_convergence"


# --- toolkit ----------------------------------------------------------------

class FixtureMiss(MofForgeError):
    """Replay fixture has no entry for the requested key."""

    code = "fixture_miss"


class ModelDomainError(MofForgeError):
    """Surrogate model undefined for these inputs."""

    code = "model_domain_error"


class PlacementImpossible(MofForgeError):
    """Rejection sampling exhausted its proposal budget."""

    code = "placement_impossible"


# --- executor ---------------------------------------------------------------

class RunAborted(MofForgeError):
    """A required job exhausted recovery; carries the partial run record."""

    code = "run_aborted"

    def __init__(self, message: str, record=None):
        super().__init__(message)
        self.record = record


class UnknownRun(MofForgeError):
    """No run with that id."""

    code = "unknown_run"


# --- retrieval ----------------------------------------------------------------

class BadParams(MofForgeError):
    """Chunking parameters out of range."""

    code = "bad_params"


class EmptyText(MofForgeError):
    """Cannot embed an empty string."""

    code = "empty_text"


class DimensionMismatch(MofForgeError):
    """Embedder returned vectors of the wrong dimensionality."""

    code = "dimension_mismatch"


class EmptyIndex(MofForgeError):
    """Operation requires a non-empty index."""

    code = "empty_index"


class CorruptIndex(MofForgeError):
    """On-disk index failed its checksum or structure check."""

    code = "corrupt_index"


# --- screening ----------------------------------------------------------------

class NoSurrogate(MofForgeError):
    """Objective has no registered low-cost ranking descriptor."""

    code = "no_surrogate"


class MissingDescriptor(MofForgeError):
    """A database row lacks a descriptor needed by a stage."""

    code = "missing_descriptor"

    def __init__(self, structure_id: str, field: str):
        super().__init__(f"row {structure_id!r} lacks descriptor {field!r}",
                         structure_id=structure_id, field=field)
        self.structure_id = structure_id
        self.field = field


# --- reporting ----------------------------------------------------------------

class IncompleteRun(MofForgeError):
    """Run is not all-terminal; partial results attached."""

    code = "incomplete_run"

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class UnsupportedAnalysis(MofForgeError):
    """No registered analysis template for the request."""

    code = "unsupported_analysis"


class ZeroReference(MofForgeError):
    """Relative error undefined for a zero reference value."""

    code = "zero_reference"


# --- service ----------------------------------------------------------------

class NoPendingClarification(MofForgeError):
    """Session has no clarification to answer."""

    code = "no_pending_clarification"


class NotAwaiting(MofForgeError):
    """Run is not awaiting those confirmations."""

    code = "not_awaiting"
