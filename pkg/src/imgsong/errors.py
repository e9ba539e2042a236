"""Exception types raised across the package."""


class ImgSongError(Exception):
    """Base class for all package errors."""


class InputError(ImgSongError, ValueError):
    """Bad input data; the CLI maps these to exit code 2."""


class InvalidInputError(InputError):
    pass


class InvalidWeightError(InputError):
    pass


class KindViolationError(InputError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ParseError(InputError):
    def __init__(self, message, line=None, path=None):
        prefix = ""
        if path is not None:
            prefix += f"{path}:"
        if line is not None:
            prefix += f"{line}:"
        super().__init__(f"{prefix} {message}" if prefix else message)
        self.line = line
        self.path = path


class DuplicateKeyError(InputError):
    pass


class UnresolvedReferenceError(InputError):
    pass


class CorruptModelError(InputError):
    pass


class EmptySupportError(ImgSongError):
    """A distribution or sampler has nothing to draw from."""


class UnknownVertexError(ImgSongError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class MissingKeywordError(ImgSongError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class MissingSongError(ImgSongError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""
