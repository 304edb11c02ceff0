"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ParseError(ValueError):
    """A dataset row could not be parsed."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class DegeneratePriorError(DomainError):
    """A client's labels contain only one class, so its priors are 0 or 1."""

    def __init__(self, n_pos: int, n_neg: int, client_id: int | None = None):
        who = "" if client_id is None else f"client {client_id}: "
        super().__init__(f"{who}single-class labels (pos={n_pos}, neg={n_neg})")
        self.n_pos = n_pos
        self.n_neg = n_neg
        self.client_id = client_id


class NumericError(ArithmeticError):
    """A non-finite value appeared in a forward or backward pass."""


class ClientUpdateError(RuntimeError):
    """A client's local update failed during a federation round."""

    def __init__(self, round_index: int, client_id: int, cause: BaseException):
        super().__init__(f"round {round_index}, client {client_id}: {cause}")
        self.round_index = round_index
        self.client_id = client_id
