# execopt/errors.py
from typing import Optional


class ExecoptError(Exception): pass

class ParameterError(ExecoptError, ValueError): pass

class ImpactDomainError(ExecoptError, ValueError): pass

class SingularityError(ImpactDomainError): pass

class NoInflectionError(ExecoptError, ValueError): pass

class InflectionSearchError(ExecoptError, RuntimeError): pass

class UnsupportedImpactError(ExecoptError, TypeError): pass

class GuessError(ExecoptError, RuntimeError): pass

class MapError(ExecoptError, RuntimeError): pass

class NotStationaryError(ExecoptError, ValueError): pass

class ConfigError(ExecoptError, ValueError): pass


class CalibrationError(ExecoptError, RuntimeError):
    def __init__(self, msg: str, best_lambda: Optional[float] = None):
        super().__init__(msg)
        self.best_lambda = best_lambda
