"""Exception hierarchy shared by every stage of the pipeline."""


class AvatarGenError(Exception):
    """Base class; the CLI maps these to a nonzero exit status."""


class MeshParseError(AvatarGenError, ValueError):
    def __init__(self, message, line=None, element=None):
        self.line = line
        self.element = element
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvalidMeshError(AvatarGenError, ValueError):
    pass


class RigSpecError(AvatarGenError, ValueError):
    pass


class BindingError(AvatarGenError, ValueError):
    pass


class ConstraintError(AvatarGenError, ValueError):
    pass


class BvhParseError(AvatarGenError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RetargetError(AvatarGenError, ValueError):
    pass


class GridTooLargeError(AvatarGenError, ValueError):
    pass


class CameraError(AvatarGenError, ValueError):
    pass


class BackgroundError(AvatarGenError, OSError):
    pass


class ConfigError(AvatarGenError, ValueError):
    pass


class AssetMissingError(AvatarGenError, FileNotFoundError):
    pass


class SchemaError(AvatarGenError, ValueError):
    pass


class ReplayError(AvatarGenError):
    pass


class PckError(AvatarGenError, ValueError):
    pass
