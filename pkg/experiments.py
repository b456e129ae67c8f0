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

"""Experiment suites.

exp1  strategy comparison over the round sequence on both route regimes
exp2  sliding windows of IoT profiles
exp3  capacity-to-demand ratio x active node count grid
exp4  renewable incentive objective and utilization alignment
"""

import os
import logging
from dataclasses import replace

import numpy as np
import pandas as pd

from config import APP_CONFIG, SIMULATION_CONFIG
from costs import COMPONENTS
from objectives import INCENTIVE
from planner import aggregate_demand, plan_capacity
from scenario import load_scenario
from simulator import MERA, Simulator, mean_node_utilization
from utils import coefficient_of_variation, ensure_directory, spearman, write_manifest

SUITES = ('exp1', 'exp2', 'exp3', 'exp4')
SUMMARY_METRICS = ['cost_total'] + [f"cost_{name}" for name in COMPONENTS] + [
    'variance', 'incentive_rmse', 'cloud_spill', 'violation_share', 'iterations']


class ExperimentRunner:
    """Runs one suite for every regime, seed and lambda and writes its CSV files"""

    def __init__(self, config, out_dir, seeds=None, regimes=None, workers=1):
        self.logger = logging.getLogger('ExperimentRunner')
        self.config = config
        self.out_dir = ensure_directory(out_dir)
        self.seeds = list(seeds or SIMULATION_CONFIG['seeds'])
        self.regimes = list(regimes or SIMULATION_CONFIG['regimes'])
        self.workers = workers
        self.metric_rows = []
        self.iteration_rows = []
        self._loaded = {}

    def load(self, regime, **overrides):
        key = (regime, tuple(sorted(overrides.items())))
        if key not in self._loaded:
            self._loaded[key] = load_scenario(replace(self.config.for_regime(regime), **overrides))
        return self._loaded[key]

    def _lambdas(self, strategy):
        return self.config.lambdas if strategy == MERA else [float('nan')]

    def _simulate(self, suite, loaded, regime, seed, objective=None, **simulator_options):
        """Every strategy and lambda on one loaded scenario; returns {(strategy, lambda): results}"""
        outcome = {}
        for strategy in self.config.strategies:
            for lam in self._lambdas(strategy):
                simulator = Simulator(loaded, strategy, lam=0.5 if np.isnan(lam) else lam, objective=objective,
                                      seed=seed, workers=self.workers, **simulator_options)
                results = simulator.run()
                labels = dict(suite=suite, regime=regime, seed=seed, **{'lambda': lam})
                for metrics in results:
                    self.metric_rows.extend(metrics.rows(**labels))
                    self.iteration_rows.extend(metrics.iteration_rows(**labels))
                outcome[(strategy, lam)] = results
        return outcome

    def _write(self, name, rows_or_frame):
        frame = rows_or_frame if isinstance(rows_or_frame, pd.DataFrame) else pd.DataFrame(rows_or_frame)
        path = os.path.join(self.out_dir, name)
        frame.to_csv(path, index=False, float_format=APP_CONFIG['float_format'])
        self.logger.info(f"Wrote {len(frame)} rows to {path}")
        return path

    def _write_common(self, suite):
        paths = [self._write(f"{suite}_metrics.csv", self.metric_rows)]
        if self.iteration_rows:
            paths.append(self._write(f"{suite}_iterations.csv", self.iteration_rows))
        return paths

    @staticmethod
    def _mean(results, metric):
        values = []
        for metrics in results:
            if metric == 'variance':
                values.append(metrics.variance)
            elif metric == 'cost_total':
                values.append(metrics.cost.total)
            else:
                values.append(metrics.cost.as_dict()[metric[len('cost_'):]])
        return float(np.mean(values)) if values else 0.0

    def summary(self):
        """Per-run means over rounds of the headline metrics"""
        frame = pd.DataFrame(self.metric_rows)
        if frame.empty:
            return frame
        frame = frame[frame['metric'].isin(SUMMARY_METRICS)]
        keys = ['suite', 'regime', 'seed', 'lambda', 'strategy', 'metric']
        return frame.groupby(keys, dropna=False, sort=True)['value'].mean().reset_index()

    def exp1(self):
        comparison = []
        for regime in self.regimes:
            loaded = self.load(regime)
            for seed in self.seeds:
                outcome = self._simulate('exp1', loaded, regime, seed)
                comparison.extend(cost_comparison(outcome, regime, seed))
        paths = self._write_common('exp1')
        paths.append(self._write('exp1_summary.csv', self.summary()))
        paths.append(self._write('exp1_cost_comparison.csv', comparison))
        return paths

    def exp2(self):
        window = SIMULATION_CONFIG['window_profiles']
        rounds = window * SIMULATION_CONFIG['rounds_per_profile']
        windows = []
        for regime in self.regimes:
            profiles = len(self.load(regime).profiles)
            count = max(0, profiles - window + 1)
            limit = SIMULATION_CONFIG['exp2_max_windows']
            if limit is not None:
                count = min(count, limit)
            self.logger.info(f"exp2 {regime}: {count} windows of {window} profiles")
            for offset in range(count):
                loaded = self.load(regime, profile_offset=offset, rounds=rounds)
                for seed in self.seeds:
                    for (strategy, lam), results in self._simulate('exp2', loaded, regime, seed).items():
                        windows.append({'regime': regime, 'window': offset, 'seed': seed, 'strategy': strategy,
                                        'lambda': lam, 'variance': self._mean(results, 'variance'),
                                        'cost_total': self._mean(results, 'cost_total')})
        paths = self._write_common('exp2')
        paths.append(self._write('exp2_windows.csv', windows))
        paths.append(self._write('exp2_regime_change.csv', regime_change(pd.DataFrame(windows))))
        return paths

    def exp3(self):
        grid = []
        rounds = SIMULATION_CONFIG['exp3_rounds']
        for regime in self.regimes:
            loaded = self.load(regime, rounds=rounds)
            demand = aggregate_demand(loaded.rounds[0].services) if loaded.rounds else 0.0
            fog_count = len(loaded.topology.fog_nodes)
            for seed in self.seeds:
                for ratio in self.config.planner_ratios:
                    for active_count in self.config.planner_active_counts:
                        if active_count > fog_count or demand <= 0:
                            self.logger.warning(f"Skipping exp3 cell ratio={ratio} nodes={active_count} "
                                                f"({fog_count} fog nodes, demand {demand:.6g})")
                            continue
                        for repetition in range(self.config.planner_repetitions):
                            capacity = plan_capacity(demand, loaded.topology, ratio, active_count,
                                                     seed=seed * 1000 + repetition)
                            active = capacity.active | {node.id for node in loaded.topology.cloud_nodes}
                            row = {'regime': regime, 'seed': seed, 'ratio': ratio,
                                   'active_count': active_count, 'repetition': repetition,
                                   'capacity': capacity.aggregate, 'demand': demand}
                            outcome = self._simulate('exp3', loaded, regime, seed, topology=capacity.topology,
                                                     active_nodes=frozenset(active))
                            for (strategy, lam), results in outcome.items():
                                label = strategy if strategy != MERA or len(self.config.lambdas) == 1 \
                                    else f"{strategy}@{lam:g}"
                                utilization = mean_node_utilization(results)
                                row[f"cv_{label}"] = coefficient_of_variation(
                                    [utilization[node_id] for node_id in sorted(capacity.active)
                                     if node_id in utilization])
                                row[f"cost_{label}"] = self._mean(results, 'cost_total')
                                row[f"spill_{label}"] = float(np.mean([m.cloud_spill for m in results]))
                            grid.append(row)
        paths = self._write_common('exp3')
        paths.append(self._write('exp3_grid.csv', grid))
        return paths

    def exp4(self):
        alignment = []
        for regime in self.regimes:
            loaded = self.load(regime)
            ratios = {node.id: node.renewable_ratio for node in loaded.topology.fog_nodes}
            for seed in self.seeds:
                outcome = self._simulate('exp4', loaded, regime, seed, objective=INCENTIVE)
                for (strategy, lam), results in outcome.items():
                    utilization = mean_node_utilization(results)
                    nodes = [node_id for node_id in sorted(utilization) if node_id in ratios]
                    alignment.append({
                        'regime': regime, 'seed': seed, 'strategy': strategy, 'lambda': lam,
                        'spearman': spearman([utilization[n] for n in nodes], [ratios[n] for n in nodes]),
                        'cost_total': self._mean(results, 'cost_total'),
                    })
        paths = self._write_common('exp4')
        paths.append(self._write('exp4_alignment.csv', alignment))
        return paths

    def run(self, suite):
        if suite not in SUITES:
            raise ValueError(f"unknown suite {suite!r}, expected one of {SUITES}")
        self.logger.info(f"Running {suite}: regimes {self.regimes}, seeds {self.seeds}, "
                         f"strategies {self.config.strategies}, lambdas {self.config.lambdas}")
        paths = getattr(self, suite)()
        paths.append(write_manifest(self.out_dir, self.config.as_dict(), extra={
            'suite': suite, 'seeds': self.seeds, 'regimes': self.regimes, 'workers': self.workers,
            'invariants': 'ok'}))
        return paths


def cost_comparison(outcome, regime, seed):
    """Percentage difference of each cost component of the other strategies against MERA"""
    reference = {lam: results for (strategy, lam), results in outcome.items() if strategy == MERA}
    rows = []
    for lam, mera_results in sorted(reference.items()):
        mera = {name: ExperimentRunner._mean(mera_results, f"cost_{name}") for name in COMPONENTS}
        mera['total'] = ExperimentRunner._mean(mera_results, 'cost_total')
        for (strategy, _), results in outcome.items():
            if strategy == MERA:
                continue
            for name, base in mera.items():
                value = ExperimentRunner._mean(results, 'cost_total' if name == 'total' else f"cost_{name}")
                rows.append({'regime': regime, 'seed': seed, 'lambda': lam, 'strategy': strategy,
                             'component': name, 'mera': base, 'value': value,
                             'percent_difference': 100.0 * (value - base) / base if base else float('nan')})
    return rows


def regime_change(windows):
    """Average relative change of variance and cost from default to optimized routes"""
    if windows.empty or not {'default', 'optimized'} <= set(windows['regime']):
        return pd.DataFrame(columns=['strategy', 'lambda', 'metric', 'relative_change'])
    keys = ['window', 'seed', 'strategy', 'lambda']
    default = windows[windows['regime'] == 'default'].set_index(keys)
    optimized = windows[windows['regime'] == 'optimized'].set_index(keys)
    joined = default.join(optimized, lsuffix='_default', rsuffix='_optimized', how='inner')
    rows = []
    for (strategy, lam), group in joined.groupby(['strategy', 'lambda'], dropna=False, sort=True):
        for metric in ('variance', 'cost_total'):
            before = group[f"{metric}_default"]
            after = group[f"{metric}_optimized"]
            change = ((after - before) / before.where(before != 0)).mean()
            rows.append({'strategy': strategy, 'lambda': lam, 'metric': metric, 'relative_change': change})
    return pd.DataFrame(rows)


def run_experiment(suite, config, out_dir, seeds=None, regimes=None, workers=1):
    return ExperimentRunner(config, out_dir, seeds=seeds, regimes=regimes, workers=workers).run(suite)
