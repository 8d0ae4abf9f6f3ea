class MeshfreeError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(MeshfreeError, ValueError):
    pass


class DiscretizationError(MeshfreeError):
    pass


class InsufficientNodesError(MeshfreeError, ValueError):
    """Requested stencil size exceeds the number of available nodes."""


class DegenerateStencil(MeshfreeError):
    """Local approximation system is rank deficient or singular."""

    def __init__(self, message, node=None):
        super().__init__(message if node is None else f"{message} (node {node})")
        self.node = node


class AssemblyError(MeshfreeError):
    pass


class SingularSystem(MeshfreeError):
    pass
