"""Exception types shared across the package."""


class DegenerateGeometryError(ValueError):
    """Zero-length bones, rank-deficient point sets and similar."""


class ContractError(ValueError):
    """Input data violates a documented data contract (shape, schema, topology)."""


class ConfigError(ValueError):
    """Invalid or unknown pipeline configuration."""
