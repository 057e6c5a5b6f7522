"""Exception types shared across the engine."""


class SketchEvalError(Exception):
    """Base class for all engine errors."""


class SchemaError(SketchEvalError):
    """Document does not conform to its JSON schema."""


class IntegrityError(SketchEvalError):
    """Graph-level invariant violated (dangling edge, duplicate id, self-loop)."""


class CycleError(SketchEvalError):
    """Ontology parent map contains a cycle."""


class MultipleRootsError(SketchEvalError):
    """Ontology has zero or more than one root concept."""


class UnknownConcept(SketchEvalError):
    """Concept id not present in the ontology."""


class SizeLimitExceeded(SketchEvalError):
    """Combined graph size above the exact-solver limit."""


class EmptyTrainingSet(SketchEvalError):
    """Calibration called with no labeled records."""


class MissingTemplate(SketchEvalError):
    """Hint template map lacks a key required by a deficiency."""


class BackendUnavailable(SketchEvalError):
    """Backend cannot serve the requested capability or input."""


class SchemaViolation(SketchEvalError):
    """Backend output failed schema validation after all retries."""


class IncompleteMapping(SketchEvalError):
    """Hint template map does not cover every gold element."""


class NetworkError(SketchEvalError):
    """Remote endpoint unreachable."""


class Timeout(SketchEvalError):
    """Remote call exceeded its deadline."""


class LayoutError(SketchEvalError):
    """Dataset directory does not match the expected pack layout."""


class SpecValidationError(SketchEvalError):
    """An item spec in a pack failed validation."""
