"""Исключения предметной области.

Все классы наследуют ValueError: на границе приложения (main.py) они
переводятся в коды завершения.
"""


class InvalidInputError(ValueError):
    """Некорректные входные значения."""


class ConfigError(ValueError):
    """Некорректная конфигурация эксперимента или протокола."""


class ContractViolationError(ValueError):
    """Нарушение контракта устройства или источника."""


class SourceContractError(ContractViolationError):
    """Блок источника имеет min-энтропию ниже заявленной."""


class BudgetExceededError(ValueError):
    """Полный перебор превышает заданный бюджет."""


class NotDecomposableError(InvalidInputError):
    """Распределение нельзя разложить на плоские компоненты."""


class CannotAmplifyError(InvalidInputError):
    """Источник с нулевой min-энтропией нельзя усилить конкатенацией блоков."""


class UndefinedRoundsError(InvalidInputError):
    """Число раундов не определено (f = 1)."""


class OutOfRangeError(InvalidInputError):
    """Запрос вне диапазона таблицы f(eps)."""


# Коды завершения CLI
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_CONTRACT = 3
EXIT_BUDGET = 4


def exit_code_for(error: BaseException) -> int:
    """
    Код завершения для исключения.

    Args:
        error: Перехваченное исключение

    Returns:
        Код завершения процесса
    """
    if isinstance(error, BudgetExceededError):
        return EXIT_BUDGET
    if isinstance(error, ContractViolationError):
        return EXIT_CONTRACT
    if isinstance(error, (ConfigError, InvalidInputError)):
        return EXIT_CONFIG
    return EXIT_FAILURE
