"""Exception hierarchy shared by all toolkg modules."""


class ToolKGError(Exception):
    """Base class for every error raised by toolkg."""


class CatalogError(ToolKGError):
    pass


class CatalogParseError(CatalogError):
    pass


class DuplicateToolError(CatalogError):
    pass


class CatalogValidationError(CatalogError):
    pass


class CanonicalizationError(ToolKGError, ValueError):
    pass


class OntologyError(ToolKGError):
    pass


class SelfLoopError(ToolKGError):
    pass


class NodeNotFoundError(ToolKGError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class AmbiguousNodeError(ToolKGError):
    pass


class FrozenGraphError(ToolKGError):
    pass


class GraphFormatError(ToolKGError):
    """Snapshot written by an incompatible format version."""


class GraphParseError(ToolKGError):
    """Snapshot is truncated or otherwise malformed."""


class ExtractionFormatError(ToolKGError):
    pass


class ProviderError(ToolKGError):
    def __init__(self, message, *, attempts=1, retryable=False):
        super().__init__(message)
        self.attempts = attempts
        self.retryable = retryable


class ProviderContractError(ProviderError):
    pass


class EmbeddingError(ProviderError, ValueError):
    pass


class GeneratorFormatError(ProviderError):
    def __init__(self, message, raw_text=""):
        super().__init__(message)
        self.raw_text = raw_text


class CacheMissError(ProviderError):
    pass


class ConfigurationError(ToolKGError):
    pass


class IncompatibleClassError(ToolKGError, ValueError):
    pass


class ReportError(ToolKGError):
    pass
