from typing import List

from ..types import Metric

REGISTRY: List[Metric] = []


def register(metric: Metric) -> None:
    REGISTRY.append(metric)
