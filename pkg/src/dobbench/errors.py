class ConfigError(ValueError):
    """Invalid model, filter or scenario configuration."""


class NotHurwitzError(ConfigError):
    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or hit a singular system."""
