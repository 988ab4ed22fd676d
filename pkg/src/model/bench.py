"""
Inference throughput measurement
"""
import logging
import time
from typing import Any, Dict, Optional

import numpy as np

from config import settings
from src.grad.rng import stream
from src.model.accounting import count_params, flops_summary
from src.model.config import ModelConfig
from src.model.training import init_model

logger = logging.getLogger(__name__)


def benchmark(config: Optional[ModelConfig] = None,
              seconds: float = settings.BENCH_SECONDS,
              batch_size: int = settings.BENCH_BATCH,
              seed: int = settings.SEED) -> Dict[str, Any]:
    """Eval-mode segments per second on random float32 batches, plus the static counts

    Batches are run until at least ``seconds`` of wall-clock time has passed;
    one batch is always timed, so ``seconds=0`` measures a single forward pass.
    """
    config = config or ModelConfig()
    model = init_model(config, seed, ("bench",), dtype="float32").eval()
    x = stream(seed, "bench", "input").standard_normal(
        (batch_size, config.n_channels, config.seg_len)).astype(np.float32)

    model.forward(x)
    segments = 0
    start = time.perf_counter()
    elapsed = 0.0
    while segments == 0 or elapsed < seconds:
        model.forward(x)
        segments += batch_size
        elapsed = time.perf_counter() - start
    throughput = segments / elapsed
    logger.info(f"Benchmark: {segments} segments in {elapsed:.2f}s ({throughput:,.0f}/s)")
    return {
        "params": count_params(config),
        **flops_summary(config),
        "segments": segments,
        "seconds": elapsed,
        "throughput": throughput,
    }
