"""System resource detection for sizing dataset-generation worker pools."""

import os
from typing import Any

# Try to import psutil, fallback gracefully if not available
try:
    import psutil

    PSUTIL_AVAILABLE = True
except ImportError:
    PSUTIL_AVAILABLE = False


class SystemResourceManager:
    """Decides how many worker processes can generate data shards at once."""

    FALLBACK_MEMORY_GB = 4.0
    MAX_WORKERS = 8

    def __init__(self, logger: Any) -> None:
        """Initialize the system resource manager."""
        self._logger = logger

    def get_available_memory_gb(self) -> float:
        """
        Memory that can be handed to new processes without swapping, in GB.

        Returns:
            Available memory in GB, or a conservative constant without psutil.
        """
        if not PSUTIL_AVAILABLE:
            self._logger.debug(
                "psutil not available, using conservative memory estimate"
            )
            return self.FALLBACK_MEMORY_GB

        try:
            return float(psutil.virtual_memory().available) / (1024**3)
        except Exception as e:
            self._logger.debug(
                f"Failed to get memory info from psutil: {e}, "
                "using conservative memory estimate"
            )
            return self.FALLBACK_MEMORY_GB

    def get_physical_cores(self) -> int:
        """Physical core count (logical count when psutil cannot tell)."""
        if PSUTIL_AVAILABLE:
            try:
                cores = psutil.cpu_count(logical=False)
                if cores:
                    return int(cores)
            except Exception as e:
                self._logger.debug(f"Failed to count physical cores: {e}")
        return os.cpu_count() or 1

    def calculate_optimal_workers(self, bytes_per_worker: int = 256 * 1024**2) -> int:
        """
        Worker count bounded by cores and by memory per worker.

        Args:
            bytes_per_worker: Peak memory one shard job needs

        Returns:
            Number of worker processes, between 1 and MAX_WORKERS
        """
        try:
            cores = self.get_physical_cores()
            memory_gb = self.get_available_memory_gb()

            max_by_cpu = min(cores, self.MAX_WORKERS)
            max_by_memory = max(1, int(memory_gb * 1024**3 // max(bytes_per_worker, 1)))
            optimal = max(1, min(max_by_cpu, max_by_memory))

            self._logger.debug(
                f"Calculated optimal workers: {optimal} "
                f"(cores: {cores}, memory: {memory_gb:.1f}GB, "
                f"limits - CPU: {max_by_cpu}, memory: {max_by_memory})"
            )
            return optimal

        except Exception as e:
            self._logger.warning(f"Failed to calculate optimal workers: {e}")
            return 1
