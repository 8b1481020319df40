"""Domain error hierarchy. Every protocol violation raises a DomainError
subclass; the CLI maps them to exit code 1."""


class DomainError(Exception):
    """Base class for all protocol and harness errors."""


# ledger
class UnknownSender(DomainError):
    pass


class SerializationFailure(DomainError):
    pass


class InvalidChain(DomainError):
    pass


# accounts
class InsufficientDeposit(DomainError):
    pass


class DuplicateKey(DomainError):
    pass


class OpenObligations(DomainError):
    pass


class AlreadyExited(DomainError):
    pass


class NotAWorker(DomainError):
    pass


class InsufficientFunds(DomainError):
    """Wallet cannot cover a required payment."""


# marketplace
class BadWeights(DomainError):
    pass


class NonPositiveReward(DomainError):
    pass


class NotATaskPoster(DomainError):
    pass


class TaskNotOpen(DomainError):
    pass


class UnknownWorker(DomainError):
    pass


# agreement
class WrongEscrowAmount(DomainError):
    pass


class NotAnApplicant(DomainError):
    pass


class BadDeadlines(DomainError):
    pass


class WrongCaller(DomainError):
    pass


class Expired(DomainError):
    pass


class WrongDeposit(DomainError):
    pass


class NotAccepted(DomainError):
    pass


class NotEvaluated(DomainError):
    pass


# submission
class PastDue(DomainError):
    pass


class AlreadyCommitted(DomainError):
    pass


class CommitmentMismatch(DomainError):
    pass


class NotCommitted(DomainError):
    pass


class NotAssigned(DomainError):
    pass


class AuthFailure(DomainError):
    pass


# evaluation
class InsufficientEvaluators(DomainError):
    pass


class NotSelected(DomainError):
    pass


class OutOfRange(DomainError):
    pass


class DuplicateScore(DomainError):
    pass


class IncompleteSheet(DomainError):
    pass


class MaxRoundsExceeded(DomainError):
    pass


class BelowThreshold(DomainError):
    pass


# reputation math
class EmptyConsensus(DomainError):
    pass


class ZeroTotalReputation(DomainError):
    pass


class QuotaUnmet(DomainError):
    pass


# gas model
class IncompleteTrace(DomainError):
    pass


# simulation harness
class ConfigInvalid(DomainError):
    pass
