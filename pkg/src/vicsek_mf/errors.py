"""Exception hierarchy; the CLI maps these to exit codes."""


class VicsekError(Exception):
    pass


class ConfigError(VicsekError):
    """Invalid run configuration. ``violations`` lists every problem found."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NumericalError(VicsekError):
    pass


class DegenerateVectorError(NumericalError):
    pass


class StateCorruptionError(NumericalError):
    pass


class BlowUpError(NumericalError):
    pass


class SpectralResolutionError(NumericalError):
    pass


class StreamAliasingError(VicsekError):
    pass


class RecordError(VicsekError):
    pass
