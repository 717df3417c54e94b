"""Воспроизводимые потоки случайных чисел для испытаний Monte Carlo."""

import numpy as np

# Записывается в каждый отчет для воспроизводимости
RNG_ALGORITHM = "numpy.Philox/SeedSequence(spawn_key=trial)"


def trial_stream(master_seed: int, trial_index: int) -> np.random.Generator:
    """
    Поток испытания: stream(master_seed, i).

    Philox - счетчиковый генератор, SeedSequence с spawn_key=(i,) дает
    независимые и стабильные между версиями потоки.

    Args:
        master_seed: 64-битный главный seed
        trial_index: Номер испытания

    Returns:
        Генератор numpy
    """
    sequence = np.random.SeedSequence(master_seed, spawn_key=(trial_index,))
    return np.random.Generator(np.random.Philox(sequence))


def master_stream(master_seed: int) -> np.random.Generator:
    """Поток для операций вне испытаний (выбор свидетелей, выборочные проверки)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(master_seed)))
