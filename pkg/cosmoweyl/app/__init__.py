from .controller import CheckResult, Controller, RunRequest, RunResult

__all__ = ["CheckResult", "Controller", "RunRequest", "RunResult"]
