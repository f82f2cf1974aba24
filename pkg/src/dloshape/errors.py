"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class FormatError(ValueError):
    """A file does not match its documented on-disk format."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class EmptyImageError(ValueError):
    """An operation that needs positive pixels received an all-zero image."""


class SkeletonAmbiguityError(RuntimeError):
    """Skeleton endpoint count is not 2, so traversal order is ambiguous."""

    def __init__(self, endpoint_count: int):
        super().__init__(f"skeleton has {endpoint_count} endpoints, expected 2")
        self.endpoint_count = endpoint_count


class ReachabilityError(RuntimeError):
    """A grasp or motion target lies outside the arm's reachable set."""


class CollisionError(RuntimeError):
    """A motion target collides with an inflated contact disk."""


class InfeasibleGoalError(RuntimeError):
    """The goal curve does not pass close enough to some contact."""

    def __init__(self, contact_index: int):
        super().__init__(f"goal curve has no points in the search annulus of contact {contact_index}")
        self.contact_index = contact_index


class PlanningInfeasibleError(RuntimeError):
    """No feasible grasp or motion assignment exists for the current step."""


class ScenarioError(ValueError):
    """A scenario or config file is malformed; message carries a field path."""
