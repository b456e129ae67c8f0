#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# Copyright (C) 2025 fogplace contributors
#
# This file is part of fogplace.
#
# fogplace is free software: you can redistribute it
# and/or modify it under the terms of the GNU General Public License
# as published by the Free Software Foundation, either version 3 of the
# License, or (at your option) any later version.
#

import os
import json
import logging
import platform
from datetime import datetime

import numpy as np
from scipy import stats

from config import STORAGE_CONFIG, APP_CONFIG


def setup_logging(level=None, log_to_file=None):
    """Setup logging configuration"""
    level_name = level or APP_CONFIG['log_level']
    log_level = getattr(logging, level_name)
    if log_to_file is None:
        log_to_file = APP_CONFIG['log_to_file']

    handlers = [logging.StreamHandler()]

    if log_to_file:
        log_dir = os.path.join(STORAGE_CONFIG['base_path'], STORAGE_CONFIG['log_dir'])
        if not os.path.exists(log_dir):
            os.makedirs(log_dir)
        log_file = os.path.join(log_dir, f"fogplace_{datetime.now().strftime('%Y%m%d')}.log")
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=log_level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True
    )

    logger = logging.getLogger(__name__)
    logger.info(f"Logging initialized at level {level_name}")

    return logger


def worker_count():
    """Worker count from the environment, at least 1"""
    logger = logging.getLogger(__name__)
    raw = os.environ.get(APP_CONFIG['workers_env'], '1')
    try:
        workers = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {APP_CONFIG['workers_env']}={raw!r}")
        return 1
    return max(1, workers)


def ensure_directory(path):
    """Create a directory if it does not exist yet"""
    if not os.path.exists(path):
        os.makedirs(path)
        logging.getLogger(__name__).info(f"Created directory: {path}")
    return path


def write_manifest(out_dir, config, extra=None):
    """Write the run manifest (configuration, seed and code version)"""
    manifest = {
        'version': APP_CONFIG['version'],
        'schema_version': APP_CONFIG['schema_version'],
        'python': platform.python_version(),
        'numpy': np.__version__,
        'created': datetime.now().strftime(STORAGE_CONFIG['timestamp_format']),
        'config': config,
    }
    if extra:
        manifest.update(extra)

    path = os.path.join(out_dir, STORAGE_CONFIG['manifest_file'])
    with open(path, 'w') as manifest_file:
        json.dump(manifest, manifest_file, indent=4, sort_keys=True, default=str)
    logging.getLogger(__name__).info(f"Run manifest written: {path}")
    return path


def gini(values):
    """Gini coefficient of non-negative values (0 for an all-zero input)"""
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0 or x.sum() == 0:
        return 0.0
    n = x.size
    ranks = np.arange(1, n + 1)
    return float((2.0 * np.sum(ranks * x)) / (n * x.sum()) - (n + 1.0) / n)


def coefficient_of_variation(values):
    """Population standard deviation over mean, 0 when the mean is 0"""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        return 0.0
    mean = x.mean()
    if mean == 0:
        return 0.0
    return float(x.std() / mean)


def spearman(x, y):
    """Spearman rank correlation; NaN when either side is constant"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.ptp(x) == 0 or np.ptp(y) == 0:
        return float('nan')
    return float(stats.spearmanr(x, y).correlation)


def parse_grid(text):
    """Parse a value grid given as 'a,b,c' or 'start:stop:step' (inclusive)"""
    text = text.strip()
    if ':' in text:
        start, stop, step = (float(part) for part in text.split(':'))
        if step <= 0:
            raise ValueError(f"Grid step must be positive: {text}")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(count)]
    return [float(part) for part in text.split(',') if part.strip()]
