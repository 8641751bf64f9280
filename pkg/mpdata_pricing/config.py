"""Configuration loaded from environment variables (and an optional .env file)."""
from __future__ import annotations

import os

from dotenv import load_dotenv

load_dotenv()


class Config:
    LOG_LEVEL: str = os.getenv("MPDATA_LOG_LEVEL", "INFO")

    # CSV files carry this many significant digits
    CSV_DIGITS: int = int(os.getenv("MPDATA_CSV_DIGITS", "12"))

    # European domains extend this many sigma*sqrt(T) beyond the strikes
    DOMAIN_SIGMAS: float = float(os.getenv("MPDATA_DOMAIN_SIGMAS", "4"))

    SWEEP_WORKERS: int = int(os.getenv("MPDATA_SWEEP_WORKERS", "4"))
    BINOMIAL_STEPS: int = int(os.getenv("MPDATA_BINOMIAL_STEPS", "4000"))

    # epsilon = EPSILON_SCALE * max(1, max|psi|) guards ratio denominators
    EPSILON_SCALE: float = float(os.getenv("MPDATA_EPSILON_SCALE", "1e-15"))

    @classmethod
    def validate(cls) -> None:
        if cls.CSV_DIGITS < 1:
            raise RuntimeError("MPDATA_CSV_DIGITS must be a positive integer")
        if cls.DOMAIN_SIGMAS <= 0:
            raise RuntimeError("MPDATA_DOMAIN_SIGMAS must be positive")
        if cls.SWEEP_WORKERS < 1:
            raise RuntimeError("MPDATA_SWEEP_WORKERS must be at least 1")
        if cls.BINOMIAL_STEPS < 1:
            raise RuntimeError("MPDATA_BINOMIAL_STEPS must be at least 1")
        if not 0 < cls.EPSILON_SCALE < 1e-6:
            raise RuntimeError("MPDATA_EPSILON_SCALE must lie in (0, 1e-6)")

    @classmethod
    def print_config(cls, file=None) -> None:
        print(
            f"[Config] log_level={cls.LOG_LEVEL} "
            f"csv_digits={cls.CSV_DIGITS} "
            f"domain_sigmas={cls.DOMAIN_SIGMAS} "
            f"sweep_workers={cls.SWEEP_WORKERS} "
            f"binomial_steps={cls.BINOMIAL_STEPS}",
            file=file,
        )
