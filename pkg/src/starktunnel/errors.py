"""Exception taxonomy shared across the pipeline (mapped to CLI exit codes)."""


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration (exit code 2)."""


class CertificationError(RuntimeError):
    """A numerical certificate failed: pole census mismatch, unconverged
    refinement, quadrature that cannot reach its tolerance (exit code 3)."""


class DegeneratePoleError(CertificationError):
    """Matching-function derivative vanishes near a root; simple-pole
    assumption violated."""


class OracleMismatchError(RuntimeError):
    """Cross-method comparison exceeded its threshold (exit code 4)."""
