"""Exception hierarchy shared by all yieldlab modules."""


class YieldlabError(Exception):
    """Base class for every error raised by the package."""


class DomainError(YieldlabError, ValueError):
    """An argument lies outside the domain of a function (e.g. a negative strain)."""


class LawValidationError(YieldlabError, ValueError):
    """A bulk or cohesive law violates the structural conditions it must satisfy."""


class SuperlinearityError(LawValidationError):
    """The bracket for the yield strain could not be found below the cap."""


class OracleTooLarge(YieldlabError):
    """The brute-force search would exceed its resource cap."""


class RegionError(YieldlabError, ValueError):
    """A competitor region cannot be built with the requested parameters."""


class PreconditionError(YieldlabError, ValueError):
    """An operation was called outside the regime where it is defined."""
