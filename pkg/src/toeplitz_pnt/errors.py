"""Exception types shared across the package."""


class ToeplitzPNTError(Exception):
    """Base class; ``kind`` is used in machine-readable CLI error records."""

    kind = "error"

    def record(self) -> dict:
        return {"error": self.kind, "message": str(self)}


class BudgetError(ToeplitzPNTError, MemoryError):
    kind = "budget"

    def __init__(self, message: str, budget: str, requested: int, allowed: int):
        super().__init__(f"{message} ({budget}: requested {requested}, allowed {allowed})")
        self.budget = budget
        self.requested = requested
        self.allowed = allowed

    def record(self) -> dict:
        rec = super().record()
        rec.update(budget=self.budget, requested=self.requested, allowed=self.allowed)
        return rec


class OutOfRangeError(ToeplitzPNTError, ValueError):
    kind = "out_of_range"


class ContractError(ToeplitzPNTError, ValueError):
    kind = "contract"


class BuildError(ToeplitzPNTError):
    """A builder could not produce the next stage."""

    kind = "build"

    def __init__(self, message: str, stage: int, condition: str | None = None):
        super().__init__(message)
        self.stage = stage
        self.condition = condition

    def record(self) -> dict:
        rec = super().record()
        rec.update(stage=self.stage, condition=self.condition)
        return rec


class CertificateError(BuildError):
    kind = "certificate"
