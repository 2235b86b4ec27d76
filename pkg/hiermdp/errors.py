# hiermdp/errors.py
# Exception hierarchy
# - Library code raises these; only the CLI maps them to exit codes


class HierMDPError(Exception):
    """Base class for every error raised by the package"""


class ModelValidationError(HierMDPError):
    """A system model violates one or more invariants"""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        joined = "; ".join(self.violations)
        super().__init__(f"{len(self.violations)} violation(s): {joined}")


class InstanceParseError(HierMDPError):
    """An instance file could not be read or does not match the schema"""

    def __init__(self, source: str, diagnostics: list[str]):
        self.source = source
        self.diagnostics = list(diagnostics)
        super().__init__(f"{source}: " + "; ".join(self.diagnostics))


class InfeasiblePolicyError(HierMDPError):
    """A local policy spends more than its remaining budget"""


class CapExceededError(HierMDPError):
    """Projected work exceeds a configured size cap"""

    def __init__(self, what: str, projected: int, cap: int):
        self.what = what
        self.projected = projected
        self.cap = cap
        super().__init__(f"{what}: projected size {projected:,} exceeds cap {cap:,}")


class ConvergenceError(HierMDPError):
    """Value iteration stopped at max_iter before reaching the tolerance"""

    def __init__(self, result):
        self.result = result
        super().__init__(
            f"{result.framework.value} did not converge in {result.iterations} sweeps "
            f"(final residual {result.residual:.3e})"
        )


class OracleError(HierMDPError):
    """Brute-force enumeration produced an internally inconsistent answer"""
