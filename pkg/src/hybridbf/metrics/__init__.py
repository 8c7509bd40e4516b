from .base import REGISTRY, register
from .bser_metric import BserMetric, bser
from .gap import snr_sweep_gap_db
from .misalignment_metric import MisalignmentMetric, misalignment_loss_db, misalignment_losses_db
from .oracle import objective_grid, oracle_exhaustive, selection_objective
from .rate_metric import DigitalBdRateMetric, ExcludedMetric, HybridRateMetric, achievable_sum_rate

# Register all metrics; order is the results-CSV column order
register(BserMetric())
register(MisalignmentMetric())
register(HybridRateMetric())
register(DigitalBdRateMetric())
register(ExcludedMetric())
