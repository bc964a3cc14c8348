"""Exception hierarchy shared across the package.

Every error a caller is expected to branch on gets its own class; the CLI
maps the class name to its categorized error line.
"""


class EnergyNetError(Exception):
    """Base class for all package errors."""


# --- BEE codec ---

class InvariantViolation(EnergyNetError):
    """A BEE (or record built from one) violates a field invariant."""


class BadLength(EnergyNetError):
    """Encoded record has the wrong byte length."""


class BadChecksum(EnergyNetError):
    """Stored checksum does not match the recomputed one."""


# --- profile ledger ---

class DuplicateMac(EnergyNetError):
    pass


class InvalidMac(EnergyNetError):
    pass


class UnknownMac(EnergyNetError):
    pass


class SelfTrade(EnergyNetError):
    pass


class NotSettleKind(EnergyNetError):
    pass


# --- protocol stack ---

class SubnetFull(EnergyNetError):
    pass


class Unroutable(EnergyNetError):
    pass


class HandshakeTimeout(EnergyNetError):
    pass


class ResetByPeer(EnergyNetError):
    pass


class StaticLimitExceeded(EnergyNetError):
    """Network-layer rejection: per-period quantity budget exhausted."""


class DynamicLimitExceeded(EnergyNetError):
    """Transport-layer rejection: quantity exceeds the current window."""


class TtlExpired(EnergyNetError):
    pass


class ChecksumFailure(EnergyNetError):
    pass


class DeliveryFailed(EnergyNetError):
    """Retries exhausted without an acknowledgment."""


class UnknownEip(EnergyNetError):
    pass


class UnknownName(EnergyNetError):
    pass


# --- matching pool ---

class IncompatibleKind(EnergyNetError):
    """Only Offer/Request BEEs may enter the pool."""


# --- grid operations ---

class Infeasible(EnergyNetError):
    """No dispatch satisfies demand within plant and line limits."""


class NotConverged(EnergyNetError):
    """Iteration cap hit before the solver met its tolerance."""


class BadElasticity(EnergyNetError):
    pass


class AccountingMismatch(EnergyNetError):
    """Surplus partition failed to add up to social welfare."""


# --- scenario runner ---

class ConfigError(EnergyNetError):
    pass
