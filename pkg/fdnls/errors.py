from __future__ import annotations

from typing import Any, Dict, List, Optional


class FdnlsError(Exception):
    """Base class for every error raised by the package."""

    def to_record(self) -> Dict[str, Any]:
        rec: Dict[str, Any] = {"type": type(self).__name__, "message": str(self)}
        for k, v in vars(self).items():
            if not k.startswith("_"):
                rec[k] = v
        return rec


class ContractError(FdnlsError, TypeError):
    """A field was passed in the wrong representation."""


class DomainError(FdnlsError, ValueError):
    pass


class AliasingError(DomainError):
    pass


class ResolutionError(DomainError):
    pass


class BlowUpError(FdnlsError, ArithmeticError):
    def __init__(self, t: float, M: Optional[int] = None, sup_norm: float = float("nan")):
        where = f" on M={M}" if M is not None else ""
        super().__init__(f"solution blew up at t={t:.6g}{where} (sup norm {sup_norm:.3g})")
        self.t = float(t)
        self.M = M
        self.sup_norm = float(sup_norm)


class ReferenceValidationError(FdnlsError):
    def __init__(self, message: str, self_difference: float, threshold: float):
        super().__init__(message)
        self.self_difference = float(self_difference)
        self.threshold = float(threshold)


class ConfigError(FdnlsError, ValueError):
    def __init__(self, message: str, issues: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message)
        self.issues = list(issues or [])
