from typing import Any, Dict, Iterable, Optional


class CMSError(Exception):
    """Base exception for geometry, flow and verification failures"""
    def __init__(self, detail: str, error_type: str = "cms_error", exit_code: int = 1):
        self.detail = detail
        self.error_type = error_type
        self.exit_code = exit_code
        super().__init__(self.detail)


class SingularEmbeddingError(CMSError):
    """Metric determinant fell below the regularity floor"""
    def __init__(self, detail: str):
        super().__init__(detail, error_type="singular_embedding")


class MeshQualityError(CMSError):
    """Degenerate cells or collapsed edges"""
    def __init__(self, detail: str):
        super().__init__(detail, error_type="mesh_quality", exit_code=3)


class TopologyError(CMSError):
    """Non-manifold input or a change of Euler characteristic"""
    def __init__(self, detail: str):
        super().__init__(detail, error_type="topology_violation", exit_code=3)


class DomainError(CMSError):
    """Parameters outside the admissible domain of a family or operation"""
    def __init__(self, detail: str):
        super().__init__(detail, error_type="domain_error")


class StepSizeError(CMSError):
    """Time step collapsed or produced an inadmissible state"""
    def __init__(self, detail: str):
        super().__init__(detail, error_type="step_size", exit_code=3)


class StencilError(CMSError):
    """Time stencil lacks the levels required for a derivative"""
    def __init__(self, detail: str):
        super().__init__(detail, error_type="stencil_error")


class ConfigError(CMSError):
    """Invalid run configuration or command-line usage"""
    def __init__(self, detail: str):
        super().__init__(detail, error_type="usage_error", exit_code=2)


class NonConvergenceError(CMSError):
    """Flow budget exhausted before the equilibrium criterion was met"""
    def __init__(self, detail: str):
        super().__init__(detail, error_type="non_convergence", exit_code=4)


class IdentityFailure(CMSError):
    """A transport identity failed its residual or order test"""
    def __init__(self, detail: str):
        super().__init__(detail, error_type="identity_failure", exit_code=1)


def format_float(value: float) -> str:
    """Format a float with 17 significant digits (round-trip exact)"""
    return f"{float(value):.17g}"


def format_report(title: str, rows: Iterable[Dict[str, Any]], message: Optional[str] = None) -> str:
    """
    Format a human-readable summary block

    Args:
        title: Heading line
        rows: Mappings rendered as ``key=value`` lines, one row per line
        message: Optional trailing line

    Returns:
        Formatted multi-line text
    """
    lines = [f"== {title} =="]
    for row in rows:
        lines.append("  " + "  ".join(f"{k}={_short(v)}" for k, v in row.items()))
    if message:
        lines.append(message)
    return "\n".join(lines) + "\n"


def _short(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def nest_dotted(flat: Dict[str, Optional[str]]) -> Dict[str, Any]:
    """
    Turn dotted keys into nested dictionaries

    Args:
        flat: Mapping such as {"flow.sigma": "1.0", "mode": "flow"}

    Returns:
        Nested mapping such as {"flow": {"sigma": "1.0"}, "mode": "flow"}

    Raises:
        ConfigError: If a key is used both as a value and as a section
    """
    nested: Dict[str, Any] = {}
    for key, value in flat.items():
        if value is not None:
            set_dotted(nested, key, value)
    return nested


def set_dotted(nested: Dict[str, Any], key: str, value: Any) -> None:
    """
    Assign `value` at a dotted key, creating sections on the way

    Raises:
        ConfigError: If the key runs through a scalar or replaces a section
    """
    parts = key.strip().split(".")
    node = nested
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError(f"Key '{key}' conflicts with scalar '{part}'")
        node = child
    if isinstance(node.get(parts[-1]), dict):
        raise ConfigError(f"Key '{key}' conflicts with section '{parts[-1]}'")
    node[parts[-1]] = value
