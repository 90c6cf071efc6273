from typing import Sequence

from config.constants import EvaluatorKind, WorkloadFamily
from schemas import Measurement

WIDTHS = (5, 10, 50, 100, 500)
SIZES = (10**5, 10**6)


def synthetic_measurements(
    alpha: float,
    *,
    c: float = 2e-8,
    widths: Sequence[int] = WIDTHS,
    sizes: Sequence[int] = SIZES,
    family: WorkloadFamily = WorkloadFamily.RANDOM_NAND,
    evaluator: EvaluatorKind = EvaluatorKind.BYTEWISE,
    repeats: int = 1,
) -> list[Measurement]:
    """Noise-free runtimes t = c * n * w**alpha."""
    return [
        Measurement(
            family=family,
            n=n,
            w=w,
            d=1 / w,
            seed=0,
            evaluator=evaluator,
            repeat=repeat,
            runtime_s=c * n * w**alpha,
        )
        for w in widths
        for n in sizes
        for repeat in range(repeats)
    ]
