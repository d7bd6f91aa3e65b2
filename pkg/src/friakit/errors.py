"""Exception types shared across the assessment engine."""


class FriakitError(Exception):
    """Base class for all engine errors."""


class ParseError(FriakitError):
    """Raised when a document or catalog file cannot be parsed at all."""


class SchemaError(FriakitError):
    """Raised when a parsed document contains unknown or malformed fields."""


class SchemaVersionError(FriakitError):
    """Raised when a document declares a schema version this build cannot read."""

    def __init__(self, found: str, supported: tuple[str, ...]):
        self.found = found
        self.supported = supported
        super().__init__(f"unsupported schema version {found!r}; supported: {', '.join(supported)}")


class ChecksumMismatch(FriakitError):
    """Raised when a document's embedded checksum does not match its content."""

    def __init__(self, expected: str, actual: str):
        self.expected = expected
        self.actual = actual
        super().__init__(f"checksum mismatch: document says {expected}, content hashes to {actual}")


class PredicateError(FriakitError):
    """Raised when a rule predicate references a field missing from the catalog dictionary."""

    def __init__(self, rule_id: str, field: str, detail: str = ""):
        self.rule_id = rule_id
        self.field = field
        msg = f"rule {rule_id!r} predicates on undeclared field {field!r}"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)


class MissingField(FriakitError):
    """Raised when a profile lacks a field that an evaluated rule predicates on.

    Treating absent data as non-matching would silently under-trigger
    compliance obligations, so absence is an error.
    """

    def __init__(self, field: str, rule_id: str):
        self.field = field
        self.rule_id = rule_id
        super().__init__(f"profile is missing field {field!r} required by rule {rule_id!r}")


class ValidationError(FriakitError):
    """Raised on a fatal invariant breach (import paths; interactive flows report instead)."""

    def __init__(self, paths: list[str], message: str = ""):
        self.paths = paths
        super().__init__(message or f"validation failed at: {', '.join(paths)}")


class StageOrderError(FriakitError):
    """Raised when an operation would violate the five-stage gating invariant."""

    def __init__(self, stage: int, missing: list[int]):
        self.stage = stage
        self.missing = missing
        super().__init__(
            f"stage {stage} requires earlier stages to be complete or skipped; "
            f"incomplete: {missing}"
        )


class StageIncomplete(FriakitError):
    """Raised when report compilation is attempted before the required stages are done."""

    def __init__(self, missing: list[int]):
        self.missing = missing
        super().__init__(f"report requires stages {missing} to be complete (stage 2 may be skipped)")


class TypeMismatch(FriakitError):
    """Raised when a submitted answer does not match the question's answer type."""


class NotVisible(FriakitError):
    """Raised when an answer targets a question that is currently hidden."""


class OutOfRange(FriakitError):
    """Raised when an ordinal falls outside the 1-5 scale."""


class EmptyIntended(FriakitError):
    """Raised when purpose compatibility is assessed against zero intended purposes."""


class DanglingRef(FriakitError):
    """Raised when a risk, consequence, or impact references an unknown id."""

    def __init__(self, kind: str, ref: str):
        self.kind = kind
        self.ref = ref
        super().__init__(f"dangling {kind} reference: {ref!r}")


class ModeMismatch(FriakitError):
    """Raised when notification fields are mixed with self-assessment mode."""


class RevisionConflict(FriakitError):
    """Raised when a mutation carries a stale revision token."""

    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"stale revision token {got}; current revision is {expected}")
