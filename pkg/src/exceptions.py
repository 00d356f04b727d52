"""
Error hierarchy cho OvA-INN và mapping sang exit codes của CLI
"""
from typing import Optional


EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_IO = 3


class OvaInnError(Exception):
    """Base class cho tất cả lỗi của package"""


class ConfigError(OvaInnError, ValueError):
    """Invalid configuration value"""


class DataError(OvaInnError):
    """Base class for problems with the data being processed"""


class DimensionError(DataError, ValueError):
    """Shape or length mismatch"""


class EmptyDatasetError(DataError, ValueError):
    """An operation needs at least one sample"""


class FormatError(DataError, ValueError):
    """Malformed binary file; carries the file path and byte offset"""

    def __init__(self, message: str, path: Optional[str] = None, offset: Optional[int] = None):
        self.path = path
        self.offset = offset
        where = ""
        if path is not None:
            where += f" [{path}"
            where += f" @ byte {offset}]" if offset is not None else "]"
        elif offset is not None:
            where = f" [@ byte {offset}]"
        super().__init__(message + where)


class DataFileError(DataError, OSError):
    """Input data file cannot be opened"""


class ConflictError(DataError):
    """Class id already registered"""


class RegistryStateError(DataError):
    """Registry is not in a state that allows the operation"""


class UnknownClassError(DataError, KeyError):
    """Class id is not registered"""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown class"


class LabelError(DataError):
    """Test label has no registered expert"""


def exit_code_for(exc: BaseException) -> int:
    """Stable exit code cho một exception"""
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, DataError):
        return EXIT_DATA
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_DATA
