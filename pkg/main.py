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
import sys
import signal
import argparse

# Import our modules
from config import SIMULATION_CONFIG, STORAGE_CONFIG
from experiments import SUITES, run_experiment
from model import SimulationError
from objectives import INCENTIVE, MIN_VAR
from scenario import ScenarioConfig, load_scenario
from simulator import STRATEGIES
from synth import synth_scenario
import utils


def default_scenario_dir():
    return os.path.join(STORAGE_CONFIG['base_path'], STORAGE_CONFIG['scenario_dir'])


def default_results_dir():
    return os.path.join(STORAGE_CONFIG['base_path'], STORAGE_CONFIG['results_dir'])


def build_parser():
    parser = argparse.ArgumentParser(prog='fogplace',
                                     description='Mobility-aware fog/cloud service placement simulator')
    parser.add_argument('--log-level', default=None, help='DEBUG, INFO, WARNING, ERROR or CRITICAL')
    parser.add_argument('--no-log-file', action='store_true', help='Log to the console only')
    verbs = parser.add_subparsers(dest='verb', required=True)

    validate = verbs.add_parser('validate', help='Parse and validate a scenario directory')
    validate.add_argument('scenario', nargs='?', default=default_scenario_dir())
    validate.add_argument('--regime', action='append', choices=SIMULATION_CONFIG['regimes'],
                          help='Route regime to check (repeatable, default: all)')

    synth = verbs.add_parser('synth', help='Write a seeded synthetic scenario')
    synth.add_argument('--out', default=default_scenario_dir())
    synth.add_argument('--seed', type=int, default=SIMULATION_CONFIG['seeds'][0])

    run = verbs.add_parser('run', help='Run an experiment suite')
    run.add_argument('--suite', required=True, choices=SUITES)
    run.add_argument('--strategy', action='append', choices=STRATEGIES,
                     help='Strategy to run (repeatable, default: all)')
    run.add_argument('--lambda', dest='lambdas', default=str(SIMULATION_CONFIG['default_lambda']),
                     help="Lambda grid as 'a,b,c' or 'start:stop:step'")
    run.add_argument('--seed', type=int, action='append', help='Seed (repeatable)')
    run.add_argument('--out', default=default_results_dir())
    run.add_argument('--scenario', default=default_scenario_dir())
    run.add_argument('--regime', action='append', choices=SIMULATION_CONFIG['regimes'],
                     help='Route regime (repeatable, default: all)')
    run.add_argument('--objective', choices=[MIN_VAR, INCENTIVE], default=SIMULATION_CONFIG['objective'])
    run.add_argument('--rounds', type=int, default=None, help='Rounds per run (default: one window)')
    run.add_argument('--plans', type=int, default=SIMULATION_CONFIG['plans_per_agent'])
    run.add_argument('--max-iterations', type=int, default=SIMULATION_CONFIG['max_iterations'])
    return parser


class MainApplication:
    """Main application class for fogplace"""

    def __init__(self, args):
        """Initialize the application"""
        self.args = args
        self.logger = utils.setup_logging(args.log_level, False if args.no_log_file else None)
        self.logger.info(f"Initializing fogplace: {args.verb}")

        # Set up signal handlers for graceful shutdown
        signal.signal(signal.SIGINT, self.signal_handler)
        signal.signal(signal.SIGTERM, self.signal_handler)

        self.workers = utils.worker_count()

    def signal_handler(self, sig, frame):
        """Handle signals for graceful shutdown"""
        self.logger.info(f"Received signal {sig}, shutting down")
        sys.exit(130)

    def validate(self):
        regimes = self.args.regime or SIMULATION_CONFIG['regimes']
        for regime in regimes:
            loaded = load_scenario(ScenarioConfig(self.args.scenario, regime=regime))
            services = sum(len(state.services) for state in loaded.rounds)
            self.logger.info(f"{regime}: {len(loaded.topology.fog_nodes)} fog nodes, "
                             f"{len(loaded.services)} services, {len(loaded.rounds)} rounds, "
                             f"{services} service-rounds")
        self.logger.info(f"Scenario {self.args.scenario} is valid")

    def synth(self):
        paths = synth_scenario(self.args.out, self.args.seed)
        for name, path in sorted(paths.items()):
            self.logger.info(f"Wrote {name}: {path}")

    def run(self):
        args = self.args
        config = ScenarioConfig(
            args.scenario, seed=(args.seed or SIMULATION_CONFIG['seeds'])[0],
            lambdas=utils.parse_grid(args.lambdas), objective=args.objective,
            strategies=list(args.strategy or SIMULATION_CONFIG['strategies']),
            rounds=args.rounds, plans_per_agent=args.plans, max_iterations=args.max_iterations,
            workers=self.workers)
        out_dir = os.path.join(args.out, args.suite)
        paths = run_experiment(args.suite, config, out_dir, seeds=args.seed, regimes=args.regime,
                               workers=self.workers)
        self.logger.info(f"{args.suite} finished with {self.workers} workers, {len(paths)} files in {out_dir}")

    def start(self):
        """Run the selected verb and return the exit code"""
        try:
            getattr(self, self.args.verb)()
        except SimulationError as e:
            self.logger.error(f"Error in {self.args.verb}: {str(e)}")
            return 1
        except ValueError as e:
            self.logger.error(f"Invalid argument: {str(e)}")
            return 1
        return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    return MainApplication(args).start()


# Main entry point
if __name__ == "__main__":
    sys.exit(main())
