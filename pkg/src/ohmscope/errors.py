"""Exception hierarchy.

Each error carries the CLI exit code it maps to.
"""


class OhmscopeError(Exception):
    exit_code = 3


class ModelError(OhmscopeError, ValueError):
    exit_code = 4


class AssemblyError(OhmscopeError, ValueError):
    def __init__(self, line, message):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}")


class CorruptProgramError(OhmscopeError, ValueError):
    def __init__(self, index, message):
        self.index = index
        super().__init__(f"word {index}: {message}")


class MachineFault(OhmscopeError, RuntimeError):
    pass


class DatasetError(OhmscopeError, ValueError):
    pass


class ConfigError(OhmscopeError, ValueError):
    pass


class TransportError(OhmscopeError, ConnectionError):
    pass


class ProtocolError(OhmscopeError, RuntimeError):
    pass


class InstrumentError(ProtocolError):
    """An ``ERR <code> <text>`` reply from the instrument."""

    def __init__(self, code, text):
        self.code = code
        self.text = text
        super().__init__(f"ERR {code} {text}")


class UndefinedCorrelationError(OhmscopeError, ValueError):
    exit_code = 4


class FitError(OhmscopeError, ValueError):
    exit_code = 4


class EvaluationError(OhmscopeError, ValueError):
    pass


class SingularityError(ModelError):
    """Reflection/impedance conversion hit a pole at frequency index ``index``."""

    def __init__(self, index, message):
        self.index = index
        super().__init__(f"frequency index {index}: {message}")
