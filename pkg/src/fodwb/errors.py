"""Exception types raised across the workbench.

Each carries an ``exit_code`` so the CLI can map failures onto its
documented exit statuses (1 usage/config, 2 data format, 3 numerical).
"""


class WorkbenchError(Exception):
    exit_code = 1


class ConfigError(WorkbenchError, ValueError):
    exit_code = 1


class DataFormatError(WorkbenchError, ValueError):
    exit_code = 2


class NumericalError(WorkbenchError, ArithmeticError):
    exit_code = 3


class InvalidIndex(ConfigError):
    pass


class InvalidOrder(ConfigError):
    pass


class InvalidDirection(DataFormatError):
    pass


class TooFewDirections(ConfigError):
    pass


class TooFewGroups(ConfigError):
    pass


class SingularFit(NumericalError):
    pass


class NotZonal(NumericalError):
    pass


class SingularResponse(NumericalError):
    pass


class DivergedTraining(NumericalError):
    def __init__(self, epoch, fold=None, loss=float("nan")):
        self.epoch = epoch
        self.fold = fold
        self.loss = loss
        where = f"epoch {epoch}" if fold is None else f"fold {fold}, epoch {epoch}"
        super().__init__(f"training diverged at {where} (loss={loss})")


class IsotropicInput(DataFormatError):
    pass


class EmptyInput(DataFormatError):
    pass


class DegenerateInput(DataFormatError):
    pass


class AlignmentError(DataFormatError):
    pass


class EmptyScene(DataFormatError):
    pass
