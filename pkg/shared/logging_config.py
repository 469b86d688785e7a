"""
Shared logging utilities.
"""

import logging
import os
import sys
from typing import Any, Dict, Optional, Sequence

import structlog


def setup_logging(
    log_level: str = "INFO",
    log_file: Optional[str] = None,
    component_name: str = "spmamba"
) -> None:
    """Setup structured logging for the application."""

    # Ensure log directory exists
    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.processors.JSONRenderer(sort_keys=True)
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )

    level = getattr(logging, log_level.upper(), logging.INFO)

    # Console goes to stderr; stdout is reserved for command output (CSV, JSON)
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    console_handler.setFormatter(formatter)

    handlers = [console_handler]
    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        handlers.append(file_handler)

    root_logger = logging.getLogger()
    root_logger.handlers = handlers
    root_logger.setLevel(level)

    logger = structlog.get_logger(component_name)
    logger.debug("Logging initialized",
                 component=component_name,
                 log_level=log_level,
                 log_file=log_file)


def get_logger(name: Optional[str] = None) -> structlog.BoundLogger:
    """Get a structured logger instance."""
    return structlog.get_logger(name)


def log_training_step(
    logger: structlog.BoundLogger,
    epoch: int,
    step: int,
    loss: float,
    mse: Sequence[float],
    distance: float,
    **kwargs
) -> None:
    """Log one optimizer step with the loss terms."""
    logger.debug(
        "Training step",
        epoch=epoch,
        step=step,
        loss=loss,
        mse=[round(float(v), 8) for v in mse],
        distance=distance,
        **kwargs
    )


def log_epoch_summary(
    logger: structlog.BoundLogger,
    epoch: int,
    steps: int,
    mean_loss: float,
    checkpoint: str,
    **kwargs
) -> None:
    """Log the end of an epoch."""
    logger.info(
        "Epoch finished",
        epoch=epoch,
        steps=steps,
        mean_loss=mean_loss,
        checkpoint=checkpoint,
        **kwargs
    )


def log_evaluation(
    logger: structlog.BoundLogger,
    metrics: Dict[str, float],
    config_hash: str,
    **kwargs
) -> None:
    """Log evaluation metrics."""
    logger.info(
        "Evaluation finished",
        config_hash=config_hash,
        **{name: round(float(value), 6) for name, value in metrics.items()},
        **kwargs
    )


def log_command_result(
    logger: structlog.BoundLogger,
    command: str,
    success: bool,
    details: Optional[Dict[str, Any]] = None,
    **kwargs
) -> None:
    """Log the outcome of a CLI command."""
    log = logger.info if success else logger.error
    log(
        "Command finished",
        command=command,
        success=success,
        details=details or {},
        **kwargs
    )
