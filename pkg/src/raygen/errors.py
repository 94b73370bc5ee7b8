"""Exception types shared across the renderer."""


class RenderError(Exception):
    """Base class for all renderer errors."""


class DuplicateNameError(RenderError):
    """A component or entity name is already in use within its kind."""


class UnknownNameError(RenderError):
    """Lookup of a component or entity that does not exist."""


class DanglingHandleError(RenderError):
    """A handle that refers to a deleted component was resolved."""


class ComponentConflictError(RenderError):
    """Invalid component combination (e.g. mesh and volume on one entity)."""


class ComponentInUseError(RenderError):
    """Attempted to delete a component still bound to an entity."""


class NoActiveCameraError(RenderError):
    """An operation required an active camera entity and none was set."""


class GeometryError(RenderError):
    """Invalid mesh data or degenerate geometric configuration."""


class MeshParseError(GeometryError):
    """OBJ (or other mesh file) parsing failure; message carries the line."""


class ImageFormatError(RenderError):
    """Corrupt or unsupported image file contents."""


class SceneFormatError(RenderError):
    """Scene document parsing/validation failure."""


class NotInitializedError(RenderError):
    """Scripting call made before initialize() / after deinitialize()."""
